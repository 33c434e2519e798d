//! Discrete geometry on a parameter box: orthonormal frames, connection
//! forms, second fundamental form, curvature and the Gauss/Codazzi/Ricci
//! residuals.
//!
//! Frames are obtained by Gram–Schmidt on the coordinate fields in axis
//! order and stored as coordinate components: row `i` of `frame(node)` holds
//! `E_i = Σ_k c_ik ∂_k`. Connection forms follow `ω_ij(∂_k) = <∇_k E_i, E_j>`.
//! Curvature matrices use `R[(m, i)] = <R(∂_k, ∂_l) E_i, E_m>`.
//!
//! Every derivative of provider data is taken on the scene grid padded by
//! [`GHOST_LAYERS`] nodes, so stencils at real nodes are always centred.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::clifford::{Multivector, Signature};
use crate::grid::Grid;
use crate::report::ResidualReport;
use crate::scene::Scene;

/// Extra lattice layers evaluated beyond the domain for derivatives.
pub const GHOST_LAYERS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error("metric is not positive definite at {coords:?}")]
    DegenerateMetric { coords: Vec<f64> },
    #[error("second fundamental form is not symmetric at {coords:?}")]
    AsymmetricSecondFundamentalForm { coords: Vec<f64> },
    #[error("non-finite provider data at {coords:?}")]
    NonFinite { coords: Vec<f64> },
}

/// Per-node data, all expressed at real (non-ghost) nodes.
#[derive(Clone, Debug)]
struct NodeData {
    metric: DMatrix<f64>,
    frame: DMatrix<f64>,
    omega: Vec<DMatrix<f64>>,
    normal_omega: Vec<DMatrix<f64>>,
    h_coord: Vec<DMatrix<f64>>,
    sigma: Vec<Multivector>,
    /// Indexed by plane `(k, l)` in [`Grid::planes`] order.
    curv_t: Vec<DMatrix<f64>>,
    curv_n: Vec<DMatrix<f64>>,
    /// `cov_b[k][b]` is the p×p matrix `(l, i) ↦ (∇̃_k B)^b(∂_l, E_i)` up to
    /// terms symmetric in `(k, l)`.
    cov_b: Vec<Vec<DMatrix<f64>>>,
}

/// Discretised scene geometry.
#[derive(Clone, Debug)]
pub struct DiscretePatch {
    scene: Scene,
    grid: Grid,
    sig: Signature,
    nodes: Vec<NodeData>,
}

fn pack(mats: &[DMatrix<f64>]) -> Vec<f64> {
    mats.iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect()
}

fn unpack(data: &[f64], r: usize, c: usize) -> Vec<DMatrix<f64>> {
    data.chunks(r * c).map(|ch| DMatrix::from_column_slice(r, c, ch)).collect()
}

/// Rows are the Gram–Schmidt orthonormalisation of the coordinate fields.
fn gram_schmidt(g: &DMatrix<f64>) -> DMatrix<f64> {
    let p = g.nrows();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..p {
            for l in 0..p {
                s += a[k] * g[(k, l)] * b[l];
            }
        }
        s
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    for i in 0..p {
        let mut v = vec![0.0; p];
        v[i] = 1.0;
        for e in &rows {
            let d = ip(&v, e);
            for k in 0..p {
                v[k] -= d * e[k];
            }
        }
        let n = ip(&v, &v).sqrt();
        rows.push(v.iter().map(|x| x / n).collect());
    }
    DMatrix::from_fn(p, p, |i, k| rows[i][k])
}

/// `½ Σ_{i<j} w_ij f_i f_j` with generators `f_i = e_{offset+i}`.
fn spin_bivector(sig: Signature, w: &DMatrix<f64>, offset: usize) -> Multivector {
    let mut m = Multivector::zero(sig);
    for i in 0..w.nrows() {
        for j in (i + 1)..w.ncols() {
            let mask = (1 << (offset + i)) | (1 << (offset + j));
            m.set_coeff(mask, m.coeff(mask) + 0.5 * w[(i, j)]);
        }
    }
    m
}

/// Builds frames, connection, curvature and second fundamental form data.
pub fn build_patch(scene: &Scene) -> Result<DiscretePatch, PatchError> {
    let (p, q) = (scene.p, scene.q);
    let sig = scene.algebra();
    let grid = Grid::new(scene.domain.min.clone(), scene.domain.max.clone(), vec![scene.resolution; p]);
    let pg = grid.padded(GHOST_LAYERS);
    let np = pg.len();
    let prov = &scene.provider;

    let mut g = Vec::with_capacity(np);
    let mut h = Vec::with_capacity(np);
    let mut wn_raw = Vec::with_capacity(np);
    for idx in 0..np {
        let x = pg.coords(idx);
        let gm = prov.metric(&x);
        let hm = prov.second_fundamental_form(&x);
        let wn = prov.normal_connection(&x);
        let finite = gm.iter().chain(hm.iter().flatten()).chain(wn.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(PatchError::NonFinite { coords: x });
        }
        let sym = (&gm - gm.transpose()).abs().max();
        if sym > 1e-12 * (1.0 + gm.abs().max()) || gm.clone().cholesky().is_none() {
            return Err(PatchError::DegenerateMetric { coords: x });
        }
        if hm.iter().any(|m| (m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max())) {
            return Err(PatchError::AsymmetricSecondFundamentalForm { coords: x });
        }
        g.push(gm);
        h.push(hm);
        wn_raw.push(wn);
    }

    // Metric derivatives and Christoffel symbols Γ^m_kl.
    let g_flat = pack(&g);
    let dg: Vec<Vec<DMatrix<f64>>> = (0..p).map(|k| unpack(&pg.derivative(&g_flat, p * p, k), p, p)).collect();
    let frames: Vec<DMatrix<f64>> = g.iter().map(gram_schmidt).collect();
    let c_flat = pack(&frames);
    let dc: Vec<Vec<DMatrix<f64>>> = (0..p).map(|k| unpack(&pg.derivative(&c_flat, p * p, k), p, p)).collect();

    // ω_ij(∂_k) on the padded grid, antisymmetrised.
    let mut omega: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(np);
    for idx in 0..np {
        let gi = g[idx].clone().try_inverse().expect("positive definite metric");
        let c = &frames[idx];
        let mut per_k = Vec::with_capacity(p);
        for k in 0..p {
            // Γ^m_{kl}
            let gamma = |m: usize, l: usize| -> f64 {
                let mut s = 0.0;
                for n in 0..p {
                    s += gi[(m, n)] * (dg[k][idx][(n, l)] + dg[l][idx][(n, k)] - dg[n][idx][(k, l)]);
                }
                0.5 * s
            };
            let gam = DMatrix::from_fn(p, p, gamma);
            // (∇_k E_i)^m = ∂_k c_im + Σ_l c_il Γ^m_kl
            let nabla = &dc[k][idx] + c * gam.transpose();
            let w = &nabla * &g[idx] * c.transpose();
            per_k.push((&w - w.transpose()) * 0.5);
        }
        omega.push(per_k);
    }

    // Frame components of B and their derivatives: hf[a][(l, i)] = h^a(∂_l, E_i).
    let hf: Vec<Vec<DMatrix<f64>>> = (0..np)
        .map(|idx| h[idx].iter().map(|ha| ha * frames[idx].transpose()).collect())
        .collect();
    let hf_flat: Vec<f64> = hf.iter().flat_map(|v| pack(v)).collect();
    let dhf: Vec<Vec<f64>> = (0..p).map(|k| pg.derivative(&hf_flat, q * p * p, k)).collect();

    // Connection matrices W_k = ω(∂_k)^T and their derivatives.
    let w_flat: Vec<f64> = omega.iter().flat_map(|v| pack(&v.iter().map(|m| m.transpose()).collect::<Vec<_>>())).collect();
    let dw: Vec<Vec<f64>> = (0..p).map(|k| pg.derivative(&w_flat, p * p * p, k)).collect();
    let wn_flat: Vec<f64> =
        wn_raw.iter().flat_map(|v| pack(&v.iter().map(|m| m.transpose()).collect::<Vec<_>>())).collect();
    let dwn: Vec<Vec<f64>> = (0..p).map(|k| pg.derivative(&wn_flat, p * q * q, k)).collect();

    let planes = grid.planes();
    let mut nodes = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let pi = grid.to_padded(idx, GHOST_LAYERS);
        let w_at = |k: usize| omega[pi][k].transpose();
        let wn_at = |k: usize| wn_raw[pi][k].transpose();
        let dw_at = |k: usize, l: usize| unpack(&dw[k][pi * p * p * p..(pi + 1) * p * p * p], p, p)[l].clone();
        let dwn_at = |k: usize, l: usize| unpack(&dwn[k][pi * p * q * q..(pi + 1) * p * q * q], q, q)[l].clone();

        let mut curv_t = Vec::with_capacity(planes.len());
        let mut curv_n = Vec::with_capacity(planes.len());
        for &(k, l) in &planes {
            let (wk, wl) = (w_at(k), w_at(l));
            curv_t.push(dw_at(k, l) - dw_at(l, k) + &wk * &wl - &wl * &wk);
            let (nk, nl) = (wn_at(k), wn_at(l));
            curv_n.push(dwn_at(k, l) - dwn_at(l, k) + &nk * &nl - &nl * &nk);
        }

        let hf_here = &hf[pi];
        let mut cov_b = Vec::with_capacity(p);
        for k in 0..p {
            let d = unpack(&dhf[k][pi * q * p * p..(pi + 1) * q * p * p], p, p);
            let om = &omega[pi][k];
            let omn = &wn_raw[pi][k];
            let mut per_b = Vec::with_capacity(q);
            for b in 0..q {
                let mut t = d[b].clone();
                for a in 0..q {
                    t += &hf_here[a] * omn[(a, b)];
                }
                // − Σ_m ω_im h^b(∂_l, E_m)
                t -= &hf_here[b] * om.transpose();
                per_b.push(t);
            }
            cov_b.push(per_b);
        }

        let sigma = (0..p)
            .map(|k| &spin_bivector(sig, &omega[pi][k], 0) + &spin_bivector(sig, &wn_raw[pi][k], p))
            .collect();
        nodes.push(NodeData {
            metric: g[pi].clone(),
            frame: frames[pi].clone(),
            omega: omega[pi].clone(),
            normal_omega: wn_raw[pi].clone(),
            h_coord: h[pi].clone(),
            sigma,
            curv_t,
            curv_n,
            cov_b,
        });
    }
    Ok(DiscretePatch { scene: scene.clone(), grid, sig, nodes })
}

impl DiscretePatch {
    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn algebra(&self) -> Signature {
        self.sig
    }

    pub fn p(&self) -> usize {
        self.scene.p
    }

    pub fn q(&self) -> usize {
        self.scene.q
    }

    /// Ambient dimension `p + q` (excluding ν).
    pub fn n(&self) -> usize {
        self.scene.n()
    }

    pub fn kappa(&self) -> f64 {
        self.scene.kappa()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tangent generator `e_{i+1}`.
    pub fn tangent_generator(&self, i: usize) -> Multivector {
        Multivector::basis_vector(self.sig, i)
    }

    /// Normal generator `n_{a+1} = e_{p+a+1}`.
    pub fn normal_generator(&self, a: usize) -> Multivector {
        Multivector::basis_vector(self.sig, self.p() + a)
    }

    /// The distinguished generator `ν = e_{n+1}` of a space-form algebra.
    pub fn nu(&self) -> Option<Multivector> {
        (self.sig.dim() > self.n()).then(|| Multivector::basis_vector(self.sig, self.n()))
    }

    pub fn metric(&self, node: usize) -> &DMatrix<f64> {
        &self.nodes[node].metric
    }

    /// Rows are the orthonormal frame vectors in coordinate components.
    pub fn frame(&self, node: usize) -> &DMatrix<f64> {
        &self.nodes[node].frame
    }

    /// `ω_ij(∂_k)`.
    pub fn omega(&self, node: usize, k: usize) -> &DMatrix<f64> {
        &self.nodes[node].omega[k]
    }

    /// `ω^N_ab(∂_k)`.
    pub fn normal_omega(&self, node: usize, k: usize) -> &DMatrix<f64> {
        &self.nodes[node].normal_omega[k]
    }

    /// Spin connection `σ(∂_k)`.
    pub fn sigma(&self, node: usize, k: usize) -> &Multivector {
        &self.nodes[node].sigma[k]
    }

    /// Coordinate components `h^a_kl`.
    pub fn h_coord(&self, node: usize, a: usize) -> &DMatrix<f64> {
        &self.nodes[node].h_coord[a]
    }

    /// Frame components `h^a(E_i, E_j)`.
    pub fn h_frame(&self, node: usize, a: usize) -> DMatrix<f64> {
        let c = self.frame(node);
        c * self.h_coord(node, a) * c.transpose()
    }

    /// `h^a(X, E_j)` for a coordinate vector `X`: row `a`, column `j`.
    pub fn b_against_frame(&self, node: usize, x: &[f64]) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let c = self.frame(node);
        DMatrix::from_fn(q, p, |a, j| {
            let h = self.h_coord(node, a);
            let mut s = 0.0;
            for k in 0..p {
                for l in 0..p {
                    s += x[k] * h[(k, l)] * c[(j, l)];
                }
            }
            s
        })
    }

    /// Frame components `<X, E_i>` of a coordinate vector.
    pub fn frame_components(&self, node: usize, x: &[f64]) -> Vec<f64> {
        let gx = self.metric(node) * nalgebra::DVector::from_column_slice(x);
        (self.frame(node) * gx).iter().copied().collect()
    }

    /// Clifford vector `[X]` of a coordinate vector.
    pub fn tangent_vector(&self, node: usize, x: &[f64]) -> Multivector {
        Multivector::vector(self.sig, &self.frame_components(node, x))
    }

    /// `B(E_i, E_j)` as Clifford vectors in the normal span.
    pub fn b_frame(&self, node: usize) -> Vec<Vec<Multivector>> {
        let p = self.p();
        let hs: Vec<DMatrix<f64>> = (0..self.q()).map(|a| self.h_frame(node, a)).collect();
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let mut comps = vec![0.0; self.n()];
                        for (a, h) in hs.iter().enumerate() {
                            comps[p + a] = h[(i, j)];
                        }
                        Multivector::vector(self.sig, &comps)
                    })
                    .collect()
            })
            .collect()
    }

    fn plane_index(&self, k: usize, l: usize) -> (usize, f64) {
        let (a, b, s) = if k < l { (k, l, 1.0) } else { (l, k, -1.0) };
        let idx = self.grid.planes().iter().position(|&pl| pl == (a, b)).expect("distinct axes");
        (idx, s)
    }

    /// `<R(∂_k, ∂_l) E_i, E_m>` at `(m, i)`.
    pub fn curvature_tangent(&self, node: usize, k: usize, l: usize) -> DMatrix<f64> {
        let p = self.p();
        if k == l {
            return DMatrix::zeros(p, p);
        }
        let (i, s) = self.plane_index(k, l);
        &self.nodes[node].curv_t[i] * s
    }

    /// `<R^N(∂_k, ∂_l) n_a, n_b>` at `(b, a)`.
    pub fn curvature_normal(&self, node: usize, k: usize, l: usize) -> DMatrix<f64> {
        let q = self.q();
        if k == l {
            return DMatrix::zeros(q, q);
        }
        let (i, s) = self.plane_index(k, l);
        &self.nodes[node].curv_n[i] * s
    }

    /// Curvature of coordinate vectors `X, Y` in frame form.
    pub fn curvature_tangent_xy(&self, node: usize, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let p = self.p();
        let mut r = DMatrix::zeros(p, p);
        for k in 0..p {
            for l in 0..p {
                if k != l && x[k] * y[l] != 0.0 {
                    r += self.curvature_tangent(node, k, l) * (x[k] * y[l]);
                }
            }
        }
        r
    }

    pub fn curvature_normal_xy(&self, node: usize, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let mut r = DMatrix::zeros(q, q);
        for k in 0..p {
            for l in 0..p {
                if k != l && x[k] * y[l] != 0.0 {
                    r += self.curvature_normal(node, k, l) * (x[k] * y[l]);
                }
            }
        }
        r
    }

    /// Codazzi tensor `(∇̃_X B)(Y, E_i) − (∇̃_Y B)(X, E_i)` as a q×p matrix `(b, i)`.
    pub fn codazzi_xy(&self, node: usize, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let (p, q) = (self.p(), self.q());
        let cov = &self.nodes[node].cov_b;
        DMatrix::from_fn(q, p, |b, i| {
            let mut s = 0.0;
            for k in 0..p {
                for l in 0..p {
                    s += x[k] * y[l] * (cov[k][b][(l, i)] - cov[l][b][(k, i)]);
                }
            }
            s
        })
    }

    /// Coordinate vector of frame vector `E_i`.
    pub fn frame_vector(&self, node: usize, i: usize) -> Vec<f64> {
        self.frame(node).row(i).iter().copied().collect()
    }
}

/// Curvature tensors at one node, one matrix per coordinate plane.
#[derive(Clone, Debug)]
pub struct NodeCurvature {
    pub tangent: Vec<DMatrix<f64>>,
    pub normal: Vec<DMatrix<f64>>,
}

/// `R^T` and `R^N` at every node, in [`Grid::planes`] order.
pub fn curvatures(patch: &DiscretePatch) -> Vec<NodeCurvature> {
    patch
        .nodes
        .iter()
        .map(|n| NodeCurvature { tangent: n.curv_t.clone(), normal: n.curv_n.clone() })
        .collect()
}

/// Adjoint `B*(X, N) = Σ_j <B(X, E_j), N> E_j` for frame components `x`
/// (length p) and normal components `nrm` (length q); returns frame components.
pub fn bstar(patch: &DiscretePatch, x: &[f64], nrm: &[f64], node: usize) -> Vec<f64> {
    let p = patch.p();
    let hs: Vec<DMatrix<f64>> = (0..patch.q()).map(|a| patch.h_frame(node, a)).collect();
    (0..p)
        .map(|j| {
            let mut s = 0.0;
            for (a, h) in hs.iter().enumerate() {
                for i in 0..p {
                    s += x[i] * h[(i, j)] * nrm[a];
                }
            }
            s
        })
        .collect()
}

/// Gauss, Codazzi and Ricci residuals, evaluated on frame vectors.
pub fn gcr_residuals(patch: &DiscretePatch) -> ResidualReport {
    let (p, q) = (patch.p(), patch.q());
    let kappa = patch.kappa();
    let mut gauss = Vec::with_capacity(patch.len());
    let mut codazzi = Vec::with_capacity(patch.len());
    let mut ricci = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let hs: Vec<DMatrix<f64>> = (0..q).map(|a| patch.h_frame(node, a)).collect();
        let (mut eg, mut ec, mut er) = (0.0f64, 0.0f64, 0.0f64);
        for r in 0..p {
            for s in 0..p {
                if r == s {
                    continue;
                }
                let (x, y) = (patch.frame_vector(node, r), patch.frame_vector(node, s));
                let rt = patch.curvature_tangent_xy(node, &x, &y);
                for i in 0..p {
                    for m in 0..p {
                        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let mut rhs = kappa * (d(s, i) * d(r, m) - d(r, i) * d(s, m));
                        for h in &hs {
                            rhs += h[(s, i)] * h[(r, m)] - h[(r, i)] * h[(s, m)];
                        }
                        eg = eg.max((rt[(m, i)] - rhs).abs());
                    }
                }
                ec = ec.max(patch.codazzi_xy(node, &x, &y).abs().max());
                let rn = patch.curvature_normal_xy(node, &x, &y);
                for a in 0..q {
                    for b in 0..q {
                        let mut rhs = 0.0;
                        for i in 0..p {
                            rhs += hs[a][(s, i)] * hs[b][(r, i)] - hs[a][(r, i)] * hs[b][(s, i)];
                        }
                        er = er.max((rn[(b, a)] - rhs).abs());
                    }
                }
            }
        }
        gauss.push(eg);
        codazzi.push(ec);
        ricci.push(er);
    }
    let mut report = ResidualReport::new(patch.grid().counts.clone());
    report.insert("gauss", &gauss);
    report.insert("codazzi", &codazzi);
    report.insert("ricci", &ricci);
    report
}
