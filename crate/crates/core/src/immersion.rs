//! Reconstruction of the immersion from `ξ(X) = <<X·φ, φ>>` and checks of
//! the identities it satisfies.

use nalgebra::DMatrix;

use crate::align::RigidMotion;
use crate::clifford::{brackets, Multivector, Signature};
use crate::killing::{KillingError, SpinorField};
use crate::patch::DiscretePatch;
use crate::report::ResidualReport;

/// Reconstructed immersion and the samples it was built from.
#[derive(Clone, Debug)]
pub struct ImmersionResult {
    /// Ambient coordinates per node (the algebra's generator span).
    pub positions: Vec<Vec<f64>>,
    /// `ξ(E_i)` per node and tangent frame index.
    pub xi_samples: Vec<Vec<Vec<f64>>>,
    /// `ξ(n_a)` per node and normal index.
    pub normal_samples: Vec<Vec<Vec<f64>>>,
    pub report: ResidualReport,
    pub rigid_alignment: Option<RigidMotion>,
}

/// Full Clifford value `<<X·φ, φ>> = τ(φ) X φ` for ambient frame components `x`
/// (tangent frame first, then normal frame).
pub fn xi_value(field: &SpinorField, node: usize, x: &[f64]) -> Result<Multivector, KillingError> {
    let sig = field.patch.algebra();
    let phi = field.values[node].value();
    let xv = Multivector::vector(sig, x);
    Ok(brackets(&(&xv * phi), phi)?)
}

/// `ξ(X)` as ambient coordinates: the grade-1 part of `<<X·φ, φ>>`.
pub fn xi(field: &SpinorField, node: usize, x: &[f64]) -> Result<Vec<f64>, KillingError> {
    Ok(xi_value(field, node, x)?.vector_part())
}

/// `ξ(∂_k)` at a node.
pub fn xi_coordinate(field: &SpinorField, node: usize, k: usize) -> Vec<f64> {
    let p = field.patch.p();
    let mut e = vec![0.0; p];
    e[k] = 1.0;
    let fc = field.patch.frame_components(node, &e);
    xi(field, node, &fc).expect("field values share the patch algebra")
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn samples(field: &SpinorField) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let (p, q, n) = (field.patch.p(), field.patch.q(), field.patch.n());
    let mut tangent = Vec::with_capacity(field.values.len());
    let mut normal = Vec::with_capacity(field.values.len());
    for node in 0..field.values.len() {
        tangent.push((0..p).map(|i| xi(field, node, &unit(n, i)).expect("shared algebra")).collect());
        normal.push((0..q).map(|a| xi(field, node, &unit(n, p + a)).expect("shared algebra")).collect());
    }
    (tangent, normal)
}

fn xi_coordinate_samples(field: &SpinorField) -> Vec<Vec<Vec<f64>>> {
    let p = field.patch.p();
    (0..field.values.len()).map(|node| (0..p).map(|k| xi_coordinate(field, node, k)).collect()).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Discrete `dξ` per plaquette: trapezoidal circulation divided by the area.
pub fn d_xi_residual(field: &SpinorField) -> ResidualReport {
    let grid = field.patch.grid();
    let xs = xi_coordinate_samples(field);
    let mut res = Vec::new();
    for (k, l) in grid.planes() {
        let (hk, hl) = (grid.spacing(k), grid.spacing(l));
        for c0 in grid.plaquettes(k, l) {
            let c1 = grid.neighbor(c0, k, 1).expect("corner");
            let c2 = grid.neighbor(c1, l, 1).expect("corner");
            let c3 = grid.neighbor(c0, l, 1).expect("corner");
            let dim = xs[c0][k].len();
            let circ: Vec<f64> = (0..dim)
                .map(|d| {
                    0.5 * hk * (xs[c0][k][d] + xs[c1][k][d]) + 0.5 * hl * (xs[c1][l][d] + xs[c2][l][d])
                        - 0.5 * hk * (xs[c3][k][d] + xs[c2][k][d])
                        - 0.5 * hl * (xs[c0][l][d] + xs[c3][l][d])
                })
                .collect();
            res.push(max_abs(&circ) / (hk * hl));
        }
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("d_xi", &res);
    r
}

fn integrate_along(field: &SpinorField, xs: &[Vec<Vec<f64>>], reverse: bool) -> Vec<Vec<f64>> {
    let grid = field.patch.grid();
    let dim = xs[0][0].len();
    let mut pos = vec![vec![0.0; dim]; grid.len()];
    let order: Vec<usize> = (0..grid.len()).collect();
    for &idx in &order[1..] {
        let (parent, axis) = if reverse { grid.reverse_sweep_parent(idx) } else { grid.sweep_parent(idx) }.expect("parent");
        let h = grid.spacing(axis);
        pos[idx] = (0..dim).map(|d| pos[parent][d] + 0.5 * h * (xs[parent][axis][d] + xs[idx][axis][d])).collect();
    }
    pos
}

/// `F = ∫ ξ` by trapezoidal edge integration along the canonical sweep,
/// `F(base) = 0`. Records the discrepancy with the reverse sweep.
pub fn integrate_xi(field: &SpinorField) -> ImmersionResult {
    let xs = xi_coordinate_samples(field);
    let positions = integrate_along(field, &xs, false);
    let other = integrate_along(field, &xs, true);
    let gap: Vec<f64> = positions
        .iter()
        .zip(&other)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .collect();
    let (xi_samples, normal_samples) = samples(field);
    let mut report = d_xi_residual(field);
    report.insert("path_independence", &gap);
    ImmersionResult { positions, xi_samples, normal_samples, report, rigid_alignment: None }
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

/// Finite-difference `∂_k F` per node.
pub fn position_derivatives(result: &ImmersionResult, patch: &DiscretePatch) -> Vec<Vec<Vec<f64>>> {
    let grid = patch.grid();
    let dim = result.positions[0].len();
    let flat = flatten(&result.positions);
    let d: Vec<Vec<f64>> = (0..grid.dim()).map(|k| grid.derivative(&flat, dim, k)).collect();
    (0..grid.len())
        .map(|node| (0..grid.dim()).map(|k| d[k][node * dim..(node + 1) * dim].to_vec()).collect())
        .collect()
}

/// Largest entry of `|<∂_k F, ∂_l F> − g_kl|` per node, using the algebra metric.
pub fn verify_isometry(result: &ImmersionResult, patch: &DiscretePatch) -> ResidualReport {
    let sig = patch.algebra();
    let p = patch.p();
    let df = position_derivatives(result, patch);
    let res: Vec<f64> = (0..patch.len())
        .map(|node| {
            let g = patch.metric(node);
            let mut e = 0.0f64;
            for k in 0..p {
                for l in 0..p {
                    e = e.max((sig.inner(&df[node][k], &df[node][l]) - g[(k, l)]).abs());
                }
            }
            e
        })
        .collect();
    let mut r = ResidualReport::new(patch.grid().counts.clone());
    r.insert("isometry", &res);
    r
}

/// Second fundamental form of the reconstruction, `<∂_k ∂_l F, ξ(n_a)>`.
pub fn reconstructed_second_fundamental_form(result: &ImmersionResult, patch: &DiscretePatch) -> Vec<Vec<DMatrix<f64>>> {
    let sig = patch.algebra();
    let grid = patch.grid();
    let (p, q) = (patch.p(), patch.q());
    let dim = result.positions[0].len();
    let flat = flatten(&result.positions);
    let mut hess = vec![vec![None; p]; p];
    for k in 0..p {
        for l in k..p {
            hess[k][l] = Some(grid.hessian_component(&flat, dim, k, l));
        }
    }
    (0..patch.len())
        .map(|node| {
            (0..q)
                .map(|a| {
                    DMatrix::from_fn(p, p, |k, l| {
                        let (i, j) = if k <= l { (k, l) } else { (l, k) };
                        let hv = hess[i][j].as_ref().expect("upper triangle");
                        sig.inner(&hv[node * dim..(node + 1) * dim], &result.normal_samples[node][a])
                    })
                })
                .collect()
        })
        .collect()
}

fn mean_curvature_norm(sig: &Signature, g: &DMatrix<f64>, h: &[DMatrix<f64>], normals_metric: &[f64]) -> f64 {
    let gi = g.clone().try_inverse().expect("metric");
    let p = g.nrows() as f64;
    h.iter()
        .zip(normals_metric)
        .map(|(ha, eps)| {
            let t = (&gi * ha).trace() / p;
            eps * t * t
        })
        .sum::<f64>()
        .abs()
        .sqrt()
        * if sig.dim() > 0 { 1.0 } else { 0.0 }
}

/// Mean curvature magnitude `|H|` of the reconstruction per node.
pub fn recovered_mean_curvature(result: &ImmersionResult, patch: &DiscretePatch) -> Vec<f64> {
    let sig = patch.algebra();
    let hs = reconstructed_second_fundamental_form(result, patch);
    let ones = vec![1.0; patch.q()];
    (0..patch.len()).map(|node| mean_curvature_norm(&sig, patch.metric(node), &hs[node], &ones)).collect()
}

/// Compares the reconstructed second fundamental form, mean curvature and
/// normal connection with the scene data.
pub fn verify_second_fundamental_form(result: &ImmersionResult, patch: &DiscretePatch) -> ResidualReport {
    let sig = patch.algebra();
    let grid = patch.grid();
    let (p, q) = (patch.p(), patch.q());
    let hs = reconstructed_second_fundamental_form(result, patch);
    let ones = vec![1.0; q];
    let mut ii = Vec::with_capacity(patch.len());
    let mut mean = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let mut e = 0.0f64;
        let scene_h: Vec<DMatrix<f64>> = (0..q).map(|a| patch.h_coord(node, a).clone()).collect();
        for a in 0..q {
            e = e.max((&hs[node][a] - &scene_h[a]).abs().max());
        }
        ii.push(e);
        let g = patch.metric(node);
        let hf = mean_curvature_norm(&sig, g, &hs[node], &ones);
        let hscene = mean_curvature_norm(&sig, g, &scene_h, &ones);
        mean.push((hf - hscene).abs());
    }
    // Normal connection: <∂_k ξ(n_a), ξ(n_b)> against ω^N_ab(∂_k).
    let dim = result.positions[0].len();
    let mut nc = vec![0.0f64; patch.len()];
    for a in 0..q {
        let na: Vec<f64> = result.normal_samples.iter().flat_map(|v| v[a].clone()).collect();
        for k in 0..p {
            let d = grid.derivative(&na, dim, k);
            for node in 0..patch.len() {
                for b in 0..q {
                    let v = sig.inner(&d[node * dim..(node + 1) * dim], &result.normal_samples[node][b]);
                    nc[node] = nc[node].max((v - patch.normal_omega(node, k)[(a, b)]).abs());
                }
            }
        }
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("second_fundamental_form", &ii);
    r.insert("mean_curvature", &mean);
    r.insert("normal_connection", &nc);
    r
}

/// Finite-difference `∂_k φ` per node as multivectors.
fn spinor_derivatives(field: &SpinorField) -> Vec<Vec<Multivector>> {
    let grid = field.patch.grid();
    let sig = field.patch.algebra();
    let m = sig.blade_count();
    let flat: Vec<f64> = field.values.iter().flat_map(|v| v.value().coeffs().to_vec()).collect();
    let d: Vec<Vec<f64>> = (0..grid.dim()).map(|k| grid.derivative(&flat, m, k)).collect();
    (0..grid.len())
        .map(|node| {
            (0..grid.dim()).map(|k| Multivector::from_coeffs(sig, d[k][node * m..(node + 1) * m].to_vec())).collect()
        })
        .collect()
}

/// `Σ_j e_j (∂_{E_j} φ + σ(E_j) φ)` at a node, given coordinate derivatives.
fn dirac_at(patch: &DiscretePatch, node: usize, phi: &Multivector, dphi: &[Multivector]) -> Multivector {
    let p = patch.p();
    let c = patch.frame(node);
    let mut out = Multivector::zero(phi.signature());
    for j in 0..p {
        let mut nab = Multivector::zero(phi.signature());
        for k in 0..p {
            let w = c[(j, k)];
            if w != 0.0 {
                nab += &(&dphi[k] + &(patch.sigma(node, k) * phi)).scale(w);
            }
        }
        out += &(&patch.tangent_generator(j) * &nab);
    }
    out
}

/// Dirac equation `Dφ = (p/2)(H − κν)φ`.
pub fn dirac_residual(field: &SpinorField) -> ResidualReport {
    let patch = &field.patch;
    let (p, q, n) = (patch.p(), patch.q(), patch.n());
    let sig = patch.algebra();
    let dphi = spinor_derivatives(field);
    let res: Vec<f64> = (0..patch.len())
        .map(|node| {
            let phi = field.values[node].value();
            let lhs = dirac_at(patch, node, phi, &dphi[node]);
            // (p/2) H = ½ Σ_a tr(h^a) n_a
            let mut comps = vec![0.0; n];
            for a in 0..q {
                comps[p + a] = 0.5 * patch.h_frame(node, a).trace();
            }
            let mut h = Multivector::vector(sig, &comps);
            if field.kappa != 0.0 {
                let nu = patch.nu().expect("space-form algebra");
                h = &h - &nu.scale(0.5 * p as f64 * field.kappa);
            }
            (&lhs - &(&h * phi)).norm_max()
        })
        .collect();
    let mut r = ResidualReport::new(patch.grid().counts.clone());
    r.insert("dirac", &res);
    r
}

/// Lift of the Gauss map: `χ(φ) = <<ω·φ, φ>>` with `ω = e_1 ⋯ e_p`.
pub fn gauss_map(field: &SpinorField, node: usize) -> Multivector {
    let sig = field.patch.algebra();
    let omega = Multivector::blade(sig, (1 << field.patch.p()) - 1, 1.0);
    let phi = field.values[node].value();
    brackets(&(&omega * phi), phi).expect("shared algebra")
}

/// `χ(φ)` against the product `ξ(e_1) ⋯ ξ(e_p)`, and against the tangent blade
/// of the reconstruction (finite differences, Gram–Schmidt in axis order).
pub fn gauss_map_residual(field: &SpinorField, result: Option<&ImmersionResult>) -> ResidualReport {
    let patch = &field.patch;
    let sig = patch.algebra();
    let (p, n) = (patch.p(), patch.n());
    let mut lift = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let chi = gauss_map(field, node);
        let mut prod = Multivector::one(sig);
        for i in 0..p {
            prod = &prod * &Multivector::vector(sig, &xi(field, node, &unit(n, i)).expect("shared algebra"));
        }
        lift.push((&chi - &prod).norm_max());
    }
    let mut r = ResidualReport::new(patch.grid().counts.clone());
    r.insert("gauss_map_lift", &lift);
    if let Some(result) = result {
        let df = position_derivatives(result, patch);
        let tangent: Vec<f64> = (0..patch.len())
            .map(|node| {
                let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
                for k in 0..p {
                    let mut v = df[node][k].clone();
                    for b in &basis {
                        let d = sig.inner(&v, b);
                        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                    }
                    let len = sig.inner(&v, &v).sqrt();
                    basis.push(v.iter().map(|x| x / len).collect());
                }
                let blade = basis.iter().fold(Multivector::one(sig), |acc, v| &acc * &Multivector::vector(sig, v));
                (&gauss_map(field, node) - &blade).norm_max()
            })
            .collect();
        r.insert("gauss_map_tangent", &tangent);
    }
    r
}

/// Blade map of `Cl_p → Cl⁰_{p+1}`, `e_i ↦ e_i ν`: for each mask of `Cl_p`, the
/// image mask and sign.
fn even_embedding_table(p: usize, big: Signature) -> Vec<(usize, f64)> {
    let nu = Multivector::basis_vector(big, p);
    (0..(1usize << p))
        .map(|mask| {
            let mut m = Multivector::one(big);
            for i in 0..p {
                if mask & (1 << i) != 0 {
                    m = &m * &(&Multivector::basis_vector(big, i) * &nu);
                }
            }
            let (img, coef) = m.coeffs().iter().enumerate().find(|(_, c)| **c != 0.0).map(|(i, c)| (i, *c)).expect("blade");
            (img, coef)
        })
        .collect()
}

/// The spinor `ψ ∈ Cl_p` of a hypersurface field, from `φ ∈ Cl⁰_{p+1}`.
pub fn hypersurface_spinor(field: &SpinorField, node: usize) -> Multivector {
    let patch = &field.patch;
    let p = patch.p();
    let big = patch.algebra();
    let small = Signature::euclidean(p).expect("small algebra");
    let table = even_embedding_table(p, big);
    let phi = field.values[node].value();
    let coeffs = table.iter().map(|&(img, s)| phi.coeff(img) / s).collect();
    Multivector::from_coeffs(small, coeffs)
}

/// For hypersurfaces in Euclidean space: the edge residual of
/// `∇_X ψ = −½ T(X) ψ` and Friedrich's equation `Dψ = ½ tr(T) ψ`.
pub fn hypersurface_residuals(field: &SpinorField) -> Result<ResidualReport, KillingError> {
    let patch = &field.patch;
    if patch.q() != 1 || field.kappa != 0.0 || patch.nu().is_some() {
        return Err(KillingError::Unsupported("hypersurface spinors need q = 1 in Euclidean space".into()));
    }
    let p = patch.p();
    let small = Signature::euclidean(p).expect("small algebra");
    let grid = patch.grid();
    let psi: Vec<Multivector> = (0..patch.len()).map(|node| hypersurface_spinor(field, node)).collect();
    let sigma_small = |node: usize, k: usize| -> Multivector {
        let big = patch.sigma(node, k);
        let mut m = Multivector::zero(small);
        for mask in 0..(1usize << p) {
            m.set_coeff(mask, big.coeff(mask));
        }
        m
    };
    let t_of = |node: usize, k: usize| -> Multivector {
        let mut x = vec![0.0; p];
        x[k] = 1.0;
        let b = patch.b_against_frame(node, &x);
        Multivector::vector(small, &(0..p).map(|j| b[(0, j)]).collect::<Vec<_>>())
    };
    let mut edge = Vec::new();
    for k in 0..p {
        let h = grid.spacing(k);
        for node in 0..grid.len() {
            if let Some(next) = grid.neighbor(node, k, 1) {
                let (a, b) = (&psi[node], &psi[next]);
                let lhs = &(b - a).scale(1.0 / h) + &(&(&sigma_small(node, k) * a) + &(&sigma_small(next, k) * b)).scale(0.5);
                let rhs = (&(&t_of(node, k) * a) + &(&t_of(next, k) * b)).scale(-0.25);
                edge.push((&lhs - &rhs).norm_max());
            }
        }
    }
    let m = small.blade_count();
    let flat: Vec<f64> = psi.iter().flat_map(|v| v.coeffs().to_vec()).collect();
    let d: Vec<Vec<f64>> = (0..p).map(|k| grid.derivative(&flat, m, k)).collect();
    let mut friedrich = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let c = patch.frame(node);
        let mut dpsi = Multivector::zero(small);
        for j in 0..p {
            let mut nab = Multivector::zero(small);
            for k in 0..p {
                let dk = Multivector::from_coeffs(small, d[k][node * m..(node + 1) * m].to_vec());
                nab += &(&dk + &(&sigma_small(node, k) * &psi[node])).scale(c[(j, k)]);
            }
            dpsi += &(&Multivector::basis_vector(small, j) * &nab);
        }
        let tr = patch.h_frame(node, 0).trace();
        friedrich.push((&dpsi - &psi[node].scale(0.5 * tr)).norm_max());
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("hypersurface_killing", &edge);
    r.insert("friedrich", &friedrich);
    Ok(r)
}
