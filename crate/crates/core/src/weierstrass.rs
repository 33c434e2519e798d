//! Minimal surfaces in ℝ³: the classical Weierstrass formula, the complex
//! 1-form `ξ̃(X) = ξ(X) − i ξ(JX)`, and extraction of Weierstrass data from a
//! spinor field.
//!
//! Conventions: `Φ = (½h(1 − g²), (i/2)h(1 + g²), hg)` so that `Φ·Φ = 0`, and
//! `F = Re ∫ Φ dz` with `z = x + iy` the grid coordinates. An even element
//! `a + d e₁e₂ + b e₂e₃ − c e₁e₃` of `Cl₃` corresponds to `(z₁, z₂) = (a − id, b + ic)`.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::clifford::Multivector;
use crate::grid::Grid;
use crate::immersion::{xi, xi_coordinate, ImmersionResult};
use crate::killing::SpinorField;
use crate::patch::DiscretePatch;
use crate::report::ResidualReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeierstrassError {
    #[error("Weierstrass data is singular at node {node}")]
    Pole { node: usize },
    #[error("the spinor component z1 vanishes at node {node}")]
    VanishingComponent { node: usize },
    #[error("needs a surface (p = 2) in Euclidean 3-space, got p = {p}, n = {n}, kappa = {kappa}")]
    NotASurfaceInR3 { p: usize, n: usize, kappa: f64 },
    #[error("the coordinates are not conformal (defect {defect:.3e})")]
    NotConformal { defect: f64 },
    #[error("unknown holomorphic pair `{0}`")]
    UnknownPair(String),
}

pub type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A Weierstrass pair `(h, g)`, either in closed form or sampled on a grid.
#[derive(Clone)]
pub enum HolomorphicPair {
    Analytic { h: ComplexFn, g: ComplexFn },
    Sampled { grid: Grid, h: Vec<Complex64>, g: Vec<Complex64> },
}

impl std::fmt::Debug for HolomorphicPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Analytic { .. } => f.write_str("HolomorphicPair::Analytic"),
            Self::Sampled { grid, .. } => write!(f, "HolomorphicPair::Sampled({:?})", grid.counts),
        }
    }
}

impl HolomorphicPair {
    pub fn analytic(
        h: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        g: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::Analytic { h: Arc::new(h), g: Arc::new(g) }
    }

    /// `(h, g)` at every node of `grid`.
    pub fn sample(&self, grid: &Grid) -> (Vec<Complex64>, Vec<Complex64>) {
        match self {
            Self::Analytic { h, g } => (0..grid.len()).map(|i| {
                let z = node_z(grid, i);
                (h(z), g(z))
            }).unzip(),
            Self::Sampled { h, g, .. } => (h.clone(), g.clone()),
        }
    }
}

/// Names accepted by [`holomorphic_pair`].
pub const PAIR_CATALOG: [&str; 4] = ["enneper", "catenoid", "helicoid", "plane"];

/// Catalog pairs, matched against the closed-form surfaces:
/// Enneper `(u − u³/3 + uv², −v − u²v + v³/3, u² − v²)`,
/// catenoid `(cosh v cos u, cosh v sin u, v)`,
/// helicoid `(sinh v sin u, −sinh v cos u, u)`, plane `(x/2, −y/2, 0)`.
pub fn holomorphic_pair(name: &str) -> Result<HolomorphicPair, WeierstrassError> {
    let i = Complex64::i();
    Ok(match name {
        "enneper" => HolomorphicPair::analytic(|_| Complex64::new(2.0, 0.0), |z| z),
        "catenoid" => HolomorphicPair::analytic(move |z| -i * (-i * z).exp(), move |z| (i * z).exp()),
        "helicoid" => HolomorphicPair::analytic(move |z| (-i * z).exp(), move |z| (i * z).exp()),
        "plane" => HolomorphicPair::analytic(|_| Complex64::new(1.0, 0.0), |_| Complex64::new(0.0, 0.0)),
        other => return Err(WeierstrassError::UnknownPair(other.to_string())),
    })
}

/// Closed-form surface of a catalog pair, for oracles.
pub fn catalog_surface(name: &str, x: f64, y: f64) -> Option<[f64; 3]> {
    Some(match name {
        "enneper" => [x - x.powi(3) / 3.0 + x * y * y, -y - x * x * y + y.powi(3) / 3.0, x * x - y * y],
        "catenoid" => [y.cosh() * x.cos(), y.cosh() * x.sin(), y],
        "helicoid" => [y.sinh() * x.sin(), -y.sinh() * x.cos(), x],
        "plane" => [x / 2.0, -y / 2.0, 0.0],
        _ => return None,
    })
}

fn node_z(grid: &Grid, node: usize) -> Complex64 {
    let c = grid.coords(node);
    Complex64::new(c[0], c[1])
}

/// `Φ(h, g)`.
pub fn phi(h: Complex64, g: Complex64) -> [Complex64; 3] {
    let i = Complex64::i();
    let g2 = g * g;
    [0.5 * h * (1.0 - g2), 0.5 * i * h * (1.0 + g2), h * g]
}

/// `|Φ·Φ|`.
pub fn isotropy(f: &[Complex64; 3]) -> f64 {
    f.iter().map(|c| c * c).sum::<Complex64>().norm()
}

fn finite(f: &[Complex64; 3]) -> bool {
    f.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn real_cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / l).collect()
}

/// `F = Re ∫ Φ dz` along the canonical sweep with `F(0) = 0`. Closed-form
/// pairs use 3-point Gauss–Legendre per edge, sampled pairs the trapezoid rule.
///
/// Report: `isotropy`, `closedness` (discrete `dΦ` per plaquette), `conformality`
/// and `mean_curvature` of the output by finite differences.
pub fn classical_weierstrass(pair: &HolomorphicPair, grid: &Grid) -> Result<ImmersionResult, WeierstrassError> {
    assert_eq!(grid.dim(), 2, "Weierstrass data lives on a planar grid");
    let (hs, gs) = pair.sample(grid);
    let phis: Vec<[Complex64; 3]> = hs.iter().zip(&gs).map(|(h, g)| phi(*h, *g)).collect();
    if let Some(node) = phis.iter().position(|f| !finite(f)) {
        return Err(WeierstrassError::Pole { node });
    }
    let edge_integral = |a: usize, b: usize| -> Result<[Complex64; 3], WeierstrassError> {
        let (za, zb) = (node_z(grid, a), node_z(grid, b));
        let dz = zb - za;
        match pair {
            HolomorphicPair::Analytic { h, g } => {
                let mid = 0.5 * (za + zb);
                let mut acc = [Complex64::new(0.0, 0.0); 3];
                for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    let z = mid + 0.5 * x * dz;
                    let f = phi(h(z), g(z));
                    if !finite(&f) {
                        return Err(WeierstrassError::Pole { node: b });
                    }
                    acc.iter_mut().zip(f).for_each(|(s, v)| *s += 0.5 * w * v * dz);
                }
                Ok(acc)
            }
            HolomorphicPair::Sampled { .. } => Ok(std::array::from_fn(|j| 0.5 * (phis[a][j] + phis[b][j]) * dz)),
        }
    };
    let mut positions = vec![vec![0.0; 3]; grid.len()];
    for node in 1..grid.len() {
        let (parent, _) = grid.sweep_parent(node).expect("parent");
        let inc = edge_integral(parent, node)?;
        positions[node] = (0..3).map(|j| positions[parent][j] + inc[j].re).collect();
    }
    let mut xi_samples = Vec::with_capacity(grid.len());
    let mut normal_samples = Vec::with_capacity(grid.len());
    for f in &phis {
        let fx: Vec<f64> = f.iter().map(|c| c.re).collect();
        let fy: Vec<f64> = f.iter().map(|c| -c.im).collect();
        let e1 = normalized(&fx);
        let nrm = normalized(&real_cross(&fx, &fy));
        let e2 = real_cross(&nrm, &e1);
        xi_samples.push(vec![e1, e2]);
        normal_samples.push(vec![nrm]);
    }
    let mut report = ResidualReport::new(grid.counts.clone());
    report.insert("isotropy", &phis.iter().map(isotropy).collect::<Vec<_>>());
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let i = Complex64::i();
    let closed: Vec<f64> = grid
        .plaquettes(0, 1)
        .into_iter()
        .map(|c0| {
            let c1 = grid.neighbor(c0, 0, 1).expect("corner");
            let c2 = grid.neighbor(c1, 1, 1).expect("corner");
            let c3 = grid.neighbor(c0, 1, 1).expect("corner");
            (0..3)
                .map(|j| {
                    let s = 0.5 * hx * (phis[c0][j] + phis[c1][j]) + 0.5 * i * hy * (phis[c1][j] + phis[c2][j])
                        - 0.5 * hx * (phis[c3][j] + phis[c2][j])
                        - 0.5 * i * hy * (phis[c0][j] + phis[c3][j]);
                    s.norm() / (hx * hy)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    report.insert("closedness", &closed);
    let (conf, mean) = surface_defects(&positions, grid);
    report.insert("conformality", &conf);
    report.insert("mean_curvature", &mean);
    Ok(ImmersionResult { positions, xi_samples, normal_samples, report, rigid_alignment: None })
}

/// Finite-difference conformality defect `max(|<F_x, F_y>|, ||F_x|² − |F_y|²|)`
/// and mean curvature `|H|` of a parametrized surface in ℝ³.
pub fn surface_defects(positions: &[Vec<f64>], grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let flat: Vec<f64> = positions.iter().flatten().copied().collect();
    let fx = grid.derivative(&flat, 3, 0);
    let fy = grid.derivative(&flat, 3, 1);
    let fxx = grid.second_derivative(&flat, 3, 0);
    let fyy = grid.second_derivative(&flat, 3, 1);
    let fxy = grid.hessian_component(&flat, 3, 0, 1);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut conf = Vec::with_capacity(grid.len());
    let mut mean = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let s = node * 3..node * 3 + 3;
        let (a, b) = (&fx[s.clone()], &fy[s.clone()]);
        let (e, f, g) = (dot(a, a), dot(a, b), dot(b, b));
        conf.push(f.abs().max((e - g).abs()));
        let n = normalized(&real_cross(a, b));
        let (l, m, nn) = (dot(&fxx[s.clone()], &n), dot(&fxy[s.clone()], &n), dot(&fyy[s], &n));
        mean.push(((e * nn - 2.0 * f * m + g * l) / (2.0 * (e * g - f * f))).abs());
    }
    (conf, mean)
}

fn require_surface_in_r3(field: &SpinorField) -> Result<(), WeierstrassError> {
    let p = &field.patch;
    if p.p() != 2 || p.n() != 3 || p.kappa() != 0.0 {
        return Err(WeierstrassError::NotASurfaceInR3 { p: p.p(), n: p.n(), kappa: p.kappa() });
    }
    Ok(())
}

/// Samples of `ξ̃` and of its frame expression.
#[derive(Clone, Debug)]
pub struct XiTilde {
    /// `ξ̃(∂_x)` and `ξ̃(∂_y)` per node.
    pub coordinate: Vec<[Vec<Complex64>; 2]>,
    /// `μ (ξ(e₁) − i ξ(e₂))` with `μ = |∂_x|`.
    pub frame_form: Vec<Vec<Complex64>>,
}

impl XiTilde {
    /// Largest nodewise gap between `ξ̃(∂_x)` and its frame expression.
    pub fn agreement(&self) -> f64 {
        self.coordinate
            .iter()
            .zip(&self.frame_form)
            .map(|(c, f)| c[0].iter().zip(f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

fn complexify(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

/// `ξ̃(X) = ξ(X) − i ξ(JX)` with `J` the positive quarter turn of the frame.
pub fn xi_tilde(field: &SpinorField) -> Result<XiTilde, WeierstrassError> {
    if field.patch.p() != 2 {
        return Err(WeierstrassError::NotASurfaceInR3 { p: field.patch.p(), n: field.patch.n(), kappa: field.patch.kappa() });
    }
    let patch = &field.patch;
    let n = patch.n();
    let mut coordinate = Vec::with_capacity(patch.len());
    let mut frame_form = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let per_axis = |k: usize| -> Vec<Complex64> {
            let mut e = [0.0; 2];
            e[k] = 1.0;
            let c = patch.frame_components(node, &e);
            let mut jc = vec![0.0; n];
            jc[0] = -c[1];
            jc[1] = c[0];
            let a = xi(field, node, &c).expect("shared algebra");
            let b = xi(field, node, &jc).expect("shared algebra");
            complexify(&a, &b.iter().map(|v| -v).collect::<Vec<_>>())
        };
        coordinate.push([per_axis(0), per_axis(1)]);
        let mu = patch.metric(node)[(0, 0)].sqrt();
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let mut e2 = vec![0.0; n];
        e2[1] = 1.0;
        let a = xi(field, node, &e1).expect("shared algebra");
        let b = xi(field, node, &e2).expect("shared algebra");
        frame_form.push(complexify(&a.iter().map(|v| mu * v).collect::<Vec<_>>(), &b.iter().map(|v| -mu * v).collect::<Vec<_>>()));
    }
    Ok(XiTilde { coordinate, frame_form })
}

/// Discrete `dξ̃(∂_x, ∂_y)` per plaquette against `2i √det g ξ(H)`, with `H` the
/// mean curvature vector (half the trace of B). Entries: `dxi_tilde` for the
/// two-sided identity, `dxi_tilde_closedness` for the left side alone.
pub fn dxi_tilde_residual(field: &SpinorField) -> Result<ResidualReport, WeierstrassError> {
    let xt = xi_tilde(field)?;
    let patch = &field.patch;
    if patch.kappa() != 0.0 {
        return Err(WeierstrassError::NotASurfaceInR3 { p: patch.p(), n: patch.n(), kappa: patch.kappa() });
    }
    let grid = patch.grid();
    let (p, q, n) = (patch.p(), patch.q(), patch.n());
    let i = Complex64::i();
    let rhs: Vec<Vec<Complex64>> = (0..patch.len())
        .map(|node| {
            let mut hv = vec![0.0; n];
            for a in 0..q {
                hv[p + a] = 0.5 * patch.h_frame(node, a).trace();
            }
            let vol = patch.metric(node).determinant().sqrt();
            xi(field, node, &hv).expect("shared algebra").iter().map(|v| 2.0 * i * vol * v).collect()
        })
        .collect();
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let mut two_sided = Vec::new();
    let mut lhs_norm = Vec::new();
    for c0 in grid.plaquettes(0, 1) {
        let c1 = grid.neighbor(c0, 0, 1).expect("corner");
        let c2 = grid.neighbor(c1, 1, 1).expect("corner");
        let c3 = grid.neighbor(c0, 1, 1).expect("corner");
        let cs = &xt.coordinate;
        let mut gap = 0.0f64;
        let mut size = 0.0f64;
        for j in 0..n {
            let circ = 0.5 * hx * (cs[c0][0][j] + cs[c1][0][j]) + 0.5 * hy * (cs[c1][1][j] + cs[c2][1][j])
                - 0.5 * hx * (cs[c3][0][j] + cs[c2][0][j])
                - 0.5 * hy * (cs[c0][1][j] + cs[c3][1][j]);
            let lhs = circ / (hx * hy);
            let r = 0.25 * (rhs[c0][j] + rhs[c1][j] + rhs[c2][j] + rhs[c3][j]);
            gap = gap.max((lhs - r).norm());
            size = size.max(lhs.norm());
        }
        two_sided.push(gap);
        lhs_norm.push(size);
    }
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("dxi_tilde", &two_sided);
    r.insert("dxi_tilde_closedness", &lhs_norm);
    Ok(r)
}

/// `(z₁, z₂)` of an even element of `Cl₃`.
pub fn spinor_components(phi: &Multivector) -> (Complex64, Complex64) {
    let (a, d, b, c) = (phi.coeff(0), phi.coeff(0b011), phi.coeff(0b110), -phi.coeff(0b101));
    (Complex64::new(a, -d), Complex64::new(b, c))
}

/// Conformal factor `μ = |∂_x|` per node, rejecting non-conformal coordinates.
pub fn conformal_factor(patch: &DiscretePatch, tol: f64) -> Result<Vec<f64>, WeierstrassError> {
    let mut defect = 0.0f64;
    let mu = (0..patch.len())
        .map(|node| {
            let g = patch.metric(node);
            defect = defect.max(g[(0, 1)].abs()).max((g[(0, 0)] - g[(1, 1)]).abs());
            g[(0, 0)].sqrt()
        })
        .collect();
    if defect > tol {
        return Err(WeierstrassError::NotConformal { defect });
    }
    Ok(mu)
}

/// Weierstrass data of a spinor field in conformal coordinates:
/// `f = 2μz₁²`, `g = −i z̄₂ / z₁`.
pub fn spinor_to_weierstrass(field: &SpinorField, mu: &[f64]) -> Result<HolomorphicPair, WeierstrassError> {
    require_surface_in_r3(field)?;
    let i = Complex64::i();
    let mut h = Vec::with_capacity(mu.len());
    let mut g = Vec::with_capacity(mu.len());
    for (node, (v, m)) in field.values.iter().zip(mu).enumerate() {
        let (z1, z2) = spinor_components(v.value());
        if z1.norm() < 1e-12 {
            return Err(WeierstrassError::VanishingComponent { node });
        }
        h.push(2.0 * m * z1 * z1);
        g.push(-i * z2.conj() / z1);
    }
    Ok(HolomorphicPair::Sampled { grid: field.patch.grid().clone(), h, g })
}

/// `(√μ z₁, √μ z̄₂)` per node, the functions that are holomorphic for minimal
/// surfaces.
pub fn holomorphic_components(field: &SpinorField, mu: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    field
        .values
        .iter()
        .zip(mu)
        .map(|(v, m)| {
            let (z1, z2) = spinor_components(v.value());
            (m.sqrt() * z1, m.sqrt() * z2.conj())
        })
        .unzip()
}

/// Discrete `|∂f/∂z̄| = ½|f_x + i f_y|` per node.
pub fn holomorphy_residual(samples: &[Complex64], grid: &Grid) -> ResidualReport {
    let flat: Vec<f64> = samples.iter().flat_map(|c| [c.re, c.im]).collect();
    let dx = grid.derivative(&flat, 2, 0);
    let dy = grid.derivative(&flat, 2, 1);
    let res: Vec<f64> = (0..grid.len())
        .map(|k| {
            let fx = Complex64::new(dx[2 * k], dx[2 * k + 1]);
            let fy = Complex64::new(dy[2 * k], dy[2 * k + 1]);
            0.5 * (fx + Complex64::i() * fy).norm()
        })
        .collect();
    let mut r = ResidualReport::new(grid.counts.clone());
    r.insert("cauchy_riemann", &res);
    r
}

/// `ξ(∂_x) − i ξ(∂_y)` of a solved field as `Φ` would see it, rotated by the
/// half turn about the first axis that relates the two conventions.
pub fn spinor_phi(field: &SpinorField, node: usize) -> [Complex64; 3] {
    let a = xi_coordinate(field, node, 0);
    let b = xi_coordinate(field, node, 1);
    [Complex64::new(a[0], -b[0]), -Complex64::new(a[1], -b[1]), -Complex64::new(a[2], -b[2])]
}
