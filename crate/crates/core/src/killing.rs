//! Generalized Killing spinors: transport of a spin element with the modified
//! connection `∇'_X φ = ∇_X φ + ½ Σ_j e_j B(X, e_j) φ − (κ/2) X ν φ`, its
//! holonomy on grid plaquettes, and the curvature predicted from B.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::clifford::{brackets, spin_lift, CliffordError, Multivector, Signature, SpinElement};
use crate::patch::DiscretePatch;
use crate::report::ResidualReport;
use crate::scene::Ambient;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KillingError {
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error("spin renormalisation failed at node {node}: non-scalar part of τ(g)g is {deviation:e}")]
    Renormalization { node: usize, deviation: f64 },
    #[error("ambient curvature {kappa} needs the generator ν, absent from {sig}")]
    MissingNu { kappa: f64, sig: Signature },
    #[error("base value lives in {found}, patch algebra is {expected}")]
    BaseSignature { expected: Signature, found: Signature },
    #[error("scene has no explicit embedding")]
    NoEmbedding,
    #[error("{0}")]
    Unsupported(String),
    #[error("adapted frame is not orientation preserving at node {node}")]
    FrameOrientation { node: usize },
    #[error("spinor lift sign cannot be chosen continuously at node {node}")]
    Discontinuity { node: usize },
}

pub type Result<T> = std::result::Result<T, KillingError>;

/// One-step integrator for `dφ/dt = −A(t) φ` along an edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransportScheme {
    /// Classical Runge–Kutta with the given number of substeps.
    Rk4 { substeps: usize },
    /// Fourth-order Magnus expansion, exponentiated exactly.
    Magnus4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportConfig {
    pub scheme: TransportScheme,
    /// Largest non-scalar part of `τ(g)g` accepted before renormalising.
    pub renorm_tolerance: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { scheme: TransportScheme::Rk4 { substeps: 4 }, renorm_tolerance: 1e-6 }
    }
}

/// Which axis order the solver sweep uses from the base node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sweep {
    /// Along axis 0 first, then axis 1, then axis 2.
    #[default]
    Forward,
    /// Along the last axis first.
    Reverse,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveOptions {
    /// Overrides the scene's ambient curvature in the Killing coefficient.
    pub kappa: Option<f64>,
    pub transport: TransportConfig,
    pub sweep: Sweep,
}

/// The modified connection on a patch, with coefficients `A(∂_k)` cached per node.
#[derive(Clone, Debug)]
pub struct KillingConnection {
    patch: Arc<DiscretePatch>,
    kappa: f64,
    coeff: Vec<Vec<Multivector>>,
}

/// `A(X)` for a coordinate vector `X`, so that parallel spinors obey `∂_X φ = −A(X) φ`.
pub fn killing_coefficient(patch: &DiscretePatch, node: usize, x: &[f64], kappa: f64) -> Result<Multivector> {
    let sig = patch.algebra();
    let p = patch.p();
    let mut a = Multivector::zero(sig);
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            a += &patch.sigma(node, k).scale(xk);
        }
    }
    // ½ Σ_j e_j B(X, E_j)
    let bx = patch.b_against_frame(node, x);
    for j in 0..p {
        for b in 0..patch.q() {
            let v = bx[(b, j)];
            if v != 0.0 {
                let mask = (1 << j) | (1 << (p + b));
                a.set_coeff(mask, a.coeff(mask) + 0.5 * v);
            }
        }
    }
    if kappa != 0.0 {
        let nu = patch.nu().ok_or(KillingError::MissingNu { kappa, sig })?;
        let xv = patch.tangent_vector(node, x);
        a += &(&xv * &nu).scale(-0.5 * kappa);
    }
    Ok(a)
}

impl KillingConnection {
    pub fn new(patch: Arc<DiscretePatch>, kappa: f64) -> Result<Self> {
        let p = patch.p();
        let mut coeff = Vec::with_capacity(patch.len());
        for node in 0..patch.len() {
            let mut per_axis = Vec::with_capacity(p);
            for k in 0..p {
                let mut x = vec![0.0; p];
                x[k] = 1.0;
                per_axis.push(killing_coefficient(&patch, node, &x, kappa)?);
            }
            coeff.push(per_axis);
        }
        Ok(Self { patch, kappa, coeff })
    }

    pub fn patch(&self) -> &Arc<DiscretePatch> {
        &self.patch
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `A(∂_k)` at a node.
    pub fn coefficient(&self, node: usize, k: usize) -> &Multivector {
        &self.coeff[node][k]
    }

    /// Transports `phi` from `from` one step along `axis` in direction `dir` (±1).
    pub fn transport_edge(
        &self,
        phi: &SpinElement,
        from: usize,
        axis: usize,
        dir: i32,
        config: &TransportConfig,
    ) -> Result<(usize, SpinElement)> {
        let grid = self.patch.grid();
        let to = grid.neighbor(from, axis, dir).expect("edge inside the grid");
        let step = dir as f64 * grid.spacing(axis);
        let a0 = self.coeff[from][axis].scale(step);
        let a1 = self.coeff[to][axis].scale(step);
        let out = transport_step(phi.value(), &a0, &a1, config).map_err(|d| KillingError::Renormalization {
            node: to,
            deviation: d,
        })?;
        Ok((to, out))
    }

    /// `(L − 1) / area` for the loop around the plaquette with lower corner
    /// `corner` in plane `(k, l)`, traversed `+k, +l, −k, −l` from the identity.
    pub fn plaquette_holonomy(&self, corner: usize, k: usize, l: usize, config: &TransportConfig) -> Result<Multivector> {
        let sig = self.patch.algebra();
        let mut g = SpinElement::identity(sig);
        let mut node = corner;
        for (axis, dir) in [(k, 1), (l, 1), (k, -1), (l, -1)] {
            let (next, value) = self.transport_edge(&g, node, axis, dir, config)?;
            node = next;
            g = value;
        }
        let grid = self.patch.grid();
        let area = grid.spacing(k) * grid.spacing(l);
        Ok((g.value() - &Multivector::one(sig)).scale(1.0 / area))
    }
}

/// Integrates `dφ/dt = −A(t) φ` on `t ∈ [0, 1]` with `A` linear between
/// `a0` and `a1`, then renormalises. On failure returns the deviation.
pub fn transport_step(
    phi: &Multivector,
    a0: &Multivector,
    a1: &Multivector,
    config: &TransportConfig,
) -> std::result::Result<SpinElement, f64> {
    let out = match config.scheme {
        TransportScheme::Rk4 { substeps } => {
            let n = substeps.max(1);
            let dt = 1.0 / n as f64;
            let da = a1 - a0;
            let a_at = |t: f64| a0 + &da.scale(t);
            let mut y = phi.clone();
            for s in 0..n {
                let t = s as f64 * dt;
                let am = a_at(t + 0.5 * dt);
                let k1 = -(&a_at(t) * &y);
                let k2 = -(&am * &(&y + &k1.scale(0.5 * dt)));
                let k3 = -(&am * &(&y + &k2.scale(0.5 * dt)));
                let k4 = -(&a_at(t + dt) * &(&y + &k3.scale(dt)));
                let incr = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
                y += &incr.scale(dt / 6.0);
            }
            y
        }
        TransportScheme::Magnus4 => {
            let (m0, m1) = (-a0, -a1);
            let comm = &(&m0 * &m1) - &(&m1 * &m0);
            let omega = &(&m0 + &m1).scale(0.5) - &comm.scale(1.0 / 12.0);
            let step = exp_even(&omega);
            &step * phi
        }
    };
    renormalize(out, config.renorm_tolerance)
}

fn exp_even(b: &Multivector) -> Multivector {
    crate::clifford::exp_bivector(&b.grade(2)).expect("bivector").into_value()
}

/// Scales `g` so that `τ(g)g = 1`, failing when `τ(g)g` is not nearly scalar.
pub fn renormalize(g: Multivector, tol: f64) -> std::result::Result<SpinElement, f64> {
    let s = &g.reverse() * &g;
    let dev = s.non_scalar_norm();
    if !(dev <= tol) || !(s.scalar_part() > 0.0) {
        return Err(dev);
    }
    Ok(SpinElement::new_unchecked(g.scale(1.0 / s.scalar_part().sqrt())))
}

/// Solution of the Killing equation on a patch.
#[derive(Clone, Debug)]
pub struct SpinorField {
    pub patch: Arc<DiscretePatch>,
    pub values: Vec<SpinElement>,
    pub base_node: usize,
    pub base_value: SpinElement,
    pub kappa: f64,
    pub transport: TransportConfig,
}

impl SpinorField {
    /// Nodewise right multiplication `φ ↦ φ g0`.
    pub fn right_multiply(&self, g0: &SpinElement) -> Result<SpinorField> {
        let values = self.values.iter().map(|v| v.compose(g0)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(SpinorField { values, base_value: self.base_value.compose(g0)?, ..self.clone() })
    }

    pub fn connection(&self) -> Result<KillingConnection> {
        KillingConnection::new(self.patch.clone(), self.kappa)
    }
}

/// Transports `base_value` from node 0 to every node along the canonical sweep.
pub fn solve_killing(patch: Arc<DiscretePatch>, base_value: SpinElement, opts: &SolveOptions) -> Result<SpinorField> {
    let sig = patch.algebra();
    if base_value.signature() != sig {
        return Err(KillingError::BaseSignature { expected: sig, found: base_value.signature() });
    }
    let kappa = opts.kappa.unwrap_or_else(|| patch.kappa());
    let conn = KillingConnection::new(patch.clone(), kappa)?;
    let grid = patch.grid().clone();
    let mut values: Vec<Option<SpinElement>> = vec![None; grid.len()];
    values[0] = Some(base_value.clone());
    for idx in 1..grid.len() {
        let (parent, axis) = match opts.sweep {
            Sweep::Forward => grid.sweep_parent(idx),
            Sweep::Reverse => grid.reverse_sweep_parent(idx),
        }
        .expect("non-base node has a parent");
        let phi = values[parent].as_ref().expect("sweep visits parents first");
        let (to, v) = conn.transport_edge(phi, parent, axis, 1, &opts.transport)?;
        debug_assert_eq!(to, idx);
        values[idx] = Some(v);
    }
    let values = values.into_iter().map(|v| v.expect("all nodes visited")).collect();
    Ok(SpinorField { patch, values, base_node: 0, base_value, kappa, transport: opts.transport })
}

/// Plaquette holonomy of the field's connection: `‖L − 1‖ / area` over all
/// coordinate planes, plus its agreement with the curvature predicted from B.
pub fn holonomy_residual(field: &SpinorField) -> Result<ResidualReport> {
    let conn = field.connection()?;
    let patch = &field.patch;
    let grid = patch.grid();
    let mut hol = Vec::new();
    let mut mismatch = Vec::new();
    let mut relative = Vec::new();
    for (k, l) in grid.planes() {
        for corner in grid.plaquettes(k, l) {
            let loop_ = conn.plaquette_holonomy(corner, k, l, &field.transport)?;
            let predicted = plaquette_prediction(patch, corner, k, l, field.kappa)?;
            let diff = (&loop_ + &predicted).norm_max();
            hol.push(loop_.norm_max());
            mismatch.push(diff);
            let scale = predicted.norm_max();
            relative.push(if scale > 0.0 { diff / scale } else { 0.0 });
        }
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("holonomy", &hol);
    r.insert("holonomy_prediction", &mismatch);
    r.insert("holonomy_prediction_relative", &relative);
    Ok(r)
}

/// `−(L − 1)/area` predicted by the flatness defect, averaged over the corners.
pub fn plaquette_prediction(patch: &DiscretePatch, corner: usize, k: usize, l: usize, kappa: f64) -> Result<Multivector> {
    let grid = patch.grid();
    let p = patch.p();
    let mut x = vec![0.0; p];
    x[k] = 1.0;
    let mut y = vec![0.0; p];
    y[l] = 1.0;
    let c1 = grid.neighbor(corner, k, 1).expect("plaquette corner");
    let c2 = grid.neighbor(c1, l, 1).expect("plaquette corner");
    let c3 = grid.neighbor(corner, l, 1).expect("plaquette corner");
    let mut sum = Multivector::zero(patch.algebra());
    for node in [corner, c1, c2, c3] {
        sum += &flatness_defect(patch, node, &x, &y, kappa)?;
    }
    Ok(sum.scale(0.25))
}

/// Spin curvature `½ Σ_{i<j} <R(X,Y)E_i,E_j> e_i e_j + ½ Σ_{a<b} <R^N(X,Y)n_a,n_b> n_a n_b`.
pub fn spin_curvature(patch: &DiscretePatch, node: usize, x: &[f64], y: &[f64]) -> Multivector {
    let sig = patch.algebra();
    let p = patch.p();
    let rt = patch.curvature_tangent_xy(node, x, y);
    let rn = patch.curvature_normal_xy(node, x, y);
    let mut m = Multivector::zero(sig);
    for i in 0..p {
        for j in (i + 1)..p {
            let mask = (1 << i) | (1 << j);
            m.set_coeff(mask, m.coeff(mask) + 0.5 * rt[(j, i)]);
        }
    }
    for a in 0..patch.q() {
        for b in (a + 1)..patch.q() {
            let mask = (1 << (p + a)) | (1 << (p + b));
            m.set_coeff(mask, m.coeff(mask) + 0.5 * rn[(b, a)]);
        }
    }
    m
}

/// The B-dependent part of the curvature of `∇'`: the Codazzi term plus the
/// tangent (𝒜) and normal (ℬ) quadratic terms, for coordinate vectors `X, Y`.
pub fn curvature_action(patch: &DiscretePatch, node: usize, x: &[f64], y: &[f64]) -> Multivector {
    let sig = patch.algebra();
    let (p, q) = (patch.p(), patch.q());
    let mut m = Multivector::zero(sig);
    // −½ Σ_j e_j ((∇̃_X B)(Y, e_j) − (∇̃_Y B)(X, e_j))
    let cod = patch.codazzi_xy(node, x, y);
    for j in 0..p {
        for b in 0..q {
            let mask = (1 << j) | (1 << (p + b));
            m.set_coeff(mask, m.coeff(mask) - 0.5 * cod[(b, j)]);
        }
    }
    // Rows: normal index, columns: frame index.
    let bx = patch.b_against_frame(node, x);
    let by = patch.b_against_frame(node, y);
    let dot = |u: &DMatrix<f64>, j: usize, v: &DMatrix<f64>, k: usize| -> f64 { (0..q).map(|a| u[(a, j)] * v[(a, k)]).sum() };
    for j in 0..p {
        for k in (j + 1)..p {
            let v = -0.5 * (dot(&bx, j, &by, k) - dot(&bx, k, &by, j));
            let mask = (1 << j) | (1 << k);
            m.set_coeff(mask, m.coeff(mask) + v);
        }
    }
    // B*(X, n_a) has frame components bx[(a, ·)].
    let sdot = |u: &DMatrix<f64>, a: usize, v: &DMatrix<f64>, b: usize| -> f64 { (0..p).map(|i| u[(a, i)] * v[(b, i)]).sum() };
    for a in 0..q {
        for b in (a + 1)..q {
            let v = 0.5 * (sdot(&by, a, &bx, b) - sdot(&bx, a, &by, b));
            let mask = (1 << (p + a)) | (1 << (p + b));
            m.set_coeff(mask, m.coeff(mask) + v);
        }
    }
    m
}

/// Curvature `R'(X, Y)` of the modified connection assembled from the
/// geometric data; vanishes exactly when Gauss, Codazzi and Ricci hold.
pub fn flatness_defect(patch: &DiscretePatch, node: usize, x: &[f64], y: &[f64], kappa: f64) -> Result<Multivector> {
    let mut r = &spin_curvature(patch, node, x, y) - &curvature_action(patch, node, x, y);
    if kappa != 0.0 {
        let sig = patch.algebra();
        let nu = patch.nu().ok_or(KillingError::MissingNu { kappa, sig })?;
        let kx = (&patch.tangent_vector(node, x) * &nu).scale(-0.5 * kappa);
        let ky = (&patch.tangent_vector(node, y) * &nu).scale(-0.5 * kappa);
        r += &(&(&kx * &ky) - &(&ky * &kx));
    }
    Ok(r)
}

/// Edge-wise Killing equation residual
/// `‖(φ_1 − φ_0)/h + ½ (A_0 φ_0 + A_1 φ_1)‖` over every grid edge.
pub fn killing_residual(field: &SpinorField) -> Result<ResidualReport> {
    let conn = field.connection()?;
    let grid = field.patch.grid();
    let mut res = Vec::new();
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        for node in 0..grid.len() {
            if let Some(next) = grid.neighbor(node, axis, 1) {
                let (f0, f1) = (field.values[node].value(), field.values[next].value());
                let deriv = (f1 - f0).scale(1.0 / h);
                let rhs = (&(conn.coefficient(node, axis) * f0) + &(conn.coefficient(next, axis) * f1)).scale(0.5);
                res.push((&deriv + &rhs).norm_max());
            }
        }
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("killing", &res);
    Ok(r)
}

/// Nodewise `max ‖φ_a − φ_b‖` between two fields on the same patch.
pub fn field_distance(a: &SpinorField, b: &SpinorField) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x.value() - y.value()).norm_max()).fold(0.0, f64::max)
}

/// Spinor field of a scene with a known embedding: `[φ] = spin_lift(Rᵀ)` where
/// the columns of `R` are the adapted frame `(E_1..E_p, n_1..n_q[, F])`, so
/// that `Ad([φ]⁻¹)` maps the generators onto the frame. Signs follow the sweep.
pub fn spinor_from_immersion(patch: Arc<DiscretePatch>) -> Result<SpinorField> {
    let scene = patch.scene();
    if scene.ambient == Ambient::Hyperbolic {
        return Err(KillingError::Unsupported(
            "spinors from explicit immersions are only available for Euclidean and spherical ambients".into(),
        ));
    }
    let sig = patch.algebra();
    let dim = sig.dim();
    let (p, q) = (patch.p(), patch.q());
    let grid = patch.grid().clone();
    let mut values: Vec<SpinElement> = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let x = grid.coords(node);
        let emb = scene.provider.embedding(&x).ok_or(KillingError::NoEmbedding)?;
        let c = patch.frame(node);
        let mut r = DMatrix::zeros(dim, dim);
        for i in 0..p {
            for row in 0..dim {
                r[(row, i)] = (0..p).map(|k| c[(i, k)] * emb.tangents[k][row]).sum();
            }
        }
        for a in 0..q {
            for row in 0..dim {
                r[(row, p + a)] = emb.normals[a][row];
            }
        }
        if dim > p + q {
            for row in 0..dim {
                r[(row, p + q)] = emb.position[row];
            }
        }
        if r.determinant() < 0.0 {
            return Err(KillingError::FrameOrientation { node });
        }
        let mut phi = spin_lift(sig, &r.transpose())?;
        if let Some((parent, _)) = grid.sweep_parent(node) {
            let overlap = brackets(phi.value(), values[parent].value())?.scalar_part();
            if overlap.abs() < 0.5 {
                return Err(KillingError::Discontinuity { node });
            }
            if overlap < 0.0 {
                phi = phi.neg();
            }
        }
        values.push(phi);
    }
    let base_value = values[0].clone();
    Ok(SpinorField {
        patch: patch.clone(),
        values,
        base_node: 0,
        base_value,
        kappa: patch.kappa(),
        transport: TransportConfig::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::exp_bivector;
    use crate::patch::build_patch;
    use crate::scene::scene_by_name;

    fn patch(name: &str, res: usize) -> Arc<DiscretePatch> {
        Arc::new(build_patch(&scene_by_name(name).unwrap().with_resolution(res).unwrap()).unwrap())
    }

    #[test]
    fn flat_plane_coefficient_vanishes_and_field_is_one() {
        let pt = patch("flat_plane", 9);
        assert_eq!(killing_coefficient(&pt, 5, &[0.3, 0.7], 0.0).unwrap().norm_max(), 0.0);
        let f = solve_killing(pt.clone(), SpinElement::identity(pt.algebra()), &SolveOptions::default()).unwrap();
        assert!(f.values.iter().all(|v| v.value() == &Multivector::one(pt.algebra())));
    }

    #[test]
    fn sphere_coefficient_matches_hand_expansion() {
        // A(E_1) = σ(E_1) − ½ e_1 ν for B(E_1, E_j) = −δ_1j ν.
        let pt = patch("round_sphere", 9);
        let node = 10;
        let e1 = pt.frame_vector(node, 0);
        let a = killing_coefficient(&pt, node, &e1, 0.0).unwrap();
        let sigma = (0..2).fold(Multivector::zero(pt.algebra()), |acc, k| &acc + &pt.sigma(node, k).scale(e1[k]));
        let expect = &sigma - &Multivector::blade(pt.algebra(), 0b101, 0.5);
        assert!((&a - &expect).norm_max() < 1e-14);
    }

    #[test]
    fn great_sphere_coefficient_has_nu_term() {
        let pt = patch("great_sphere_s3", 9);
        let node = 7;
        let x = [0.4, -1.3];
        let a = killing_coefficient(&pt, node, &x, 1.0).unwrap();
        let sigma = &pt.sigma(node, 0).scale(x[0]) + &pt.sigma(node, 1).scale(x[1]);
        let xv = pt.tangent_vector(node, &x);
        let expect = &sigma - &(&xv * &pt.nu().unwrap()).scale(0.5);
        assert!((&a - &expect).norm_max() < 1e-14);
        assert!(matches!(killing_coefficient(&patch("flat_plane", 9), 0, &x, 1.0), Err(KillingError::MissingNu { .. })));
    }

    #[test]
    fn constant_coefficient_transport_matches_rotor() {
        let sig = Signature::euclidean(3).unwrap();
        let theta = 0.1;
        let a = Multivector::blade(sig, 0b011, 0.5 * theta);
        let phi = exp_bivector(&Multivector::blade(sig, 0b110, 0.3)).unwrap();
        let cfg = TransportConfig::default();
        let out = transport_step(phi.value(), &a, &a, &cfg).unwrap();
        let expect = &exp_bivector(&a.scale(-1.0)).unwrap().into_value() * phi.value();
        assert!((out.value() - &expect).norm_max() < 1e-10);
        let magnus = TransportConfig { scheme: TransportScheme::Magnus4, ..cfg };
        let out = transport_step(phi.value(), &a, &a, &magnus).unwrap();
        assert!((out.value() - &expect).norm_max() < 1e-14);
        let zero = Multivector::zero(sig);
        assert_eq!(transport_step(phi.value(), &zero, &zero, &cfg).unwrap(), phi);
    }

    #[test]
    fn transport_is_reversible() {
        let pt = patch("round_sphere", 17);
        let conn = KillingConnection::new(pt.clone(), 0.0).unwrap();
        let cfg = TransportConfig::default();
        let g = exp_bivector(&Multivector::blade(pt.algebra(), 0b011, 0.2)).unwrap();
        let (to, fwd) = conn.transport_edge(&g, 40, 1, 1, &cfg).unwrap();
        let (back, out) = conn.transport_edge(&fwd, to, 1, -1, &cfg).unwrap();
        assert_eq!(back, 40);
        assert!((out.value() - g.value()).norm_max() < 1e-10);
    }

    #[test]
    fn renormalisation_rejects_non_spin_drift() {
        let sig = Signature::euclidean(3).unwrap();
        let g = &Multivector::one(sig) + &Multivector::blade(sig, 0b001, 0.1);
        assert!(renormalize(g, 1e-6).is_err());
        let g = Multivector::scalar(sig, 2.0);
        assert_eq!(renormalize(g, 1e-6).unwrap().value(), &Multivector::one(sig));
    }

    #[test]
    fn quadratic_terms_equal_commutator_of_b_terms() {
        // 𝒜 + ℬ = −[K_X, K_Y] with K_X = ½ Σ_j e_j B(X, e_j).
        for name in ["flat_torus_r4", "graph_surface"] {
            let pt = patch(name, 9);
            let node = 31;
            let (x, y) = ([0.7, -0.2], [0.1, 1.3]);
            let k = |v: &[f64]| {
                let mut a = killing_coefficient(&pt, node, v, 0.0).unwrap();
                for s in 0..2 {
                    a = &a - &pt.sigma(node, s).scale(v[s]);
                }
                a
            };
            let (kx, ky) = (k(&x), k(&y));
            let comm = &(&kx * &ky) - &(&ky * &kx);
            let codazzi_only = {
                let mut m = Multivector::zero(pt.algebra());
                let cod = pt.codazzi_xy(node, &x, &y);
                for j in 0..2 {
                    for b in 0..pt.q() {
                        m.set_coeff((1 << j) | (1 << (2 + b)), -0.5 * cod[(b, j)]);
                    }
                }
                m
            };
            let quad = &curvature_action(&pt, node, &x, &y) - &codazzi_only;
            assert!((&quad + &comm).norm_max() < 1e-12, "{name}");
        }
    }

    #[test]
    fn embedded_sphere_spinor_satisfies_killing_equation() {
        let err = |res: usize| {
            let f = spinor_from_immersion(patch("round_sphere", res)).unwrap();
            killing_residual(&f).unwrap().max("killing")
        };
        let (a, b) = (err(17), err(33));
        assert!(b < 1e-2 && a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn embedded_frames_recover_generators() {
        let pt = patch("clifford_torus_s3", 9);
        let f = spinor_from_immersion(pt.clone()).unwrap();
        let node = 17;
        let emb = pt.scene().provider.embedding(&pt.grid().coords(node)).unwrap();
        let nu = pt.nu().unwrap();
        let pos = brackets(&(&nu * f.values[node].value()), f.values[node].value()).unwrap();
        for (c, x) in pos.vector_part().iter().zip(&emb.position) {
            assert!((c - x).abs() < 1e-12);
        }
    }

    #[test]
    fn right_multiplication_commutes_with_solve() {
        let pt = patch("round_sphere", 17);
        let sig = pt.algebra();
        let g0 = exp_bivector(&Multivector::bivector(
            sig,
            &DMatrix::from_row_slice(3, 3, &[0.0, 0.4, 0.1, 0.0, 0.0, -0.7, 0.0, 0.0, 0.0]),
        ))
        .unwrap();
        let opts = SolveOptions::default();
        let a = solve_killing(pt.clone(), SpinElement::identity(sig), &opts).unwrap().right_multiply(&g0).unwrap();
        let b = solve_killing(pt, g0, &opts).unwrap();
        assert!(field_distance(&a, &b) < 1e-12);
    }
}
