//! Scene descriptions: a parameter box, ambient space form, and smooth
//! evaluators for the metric, second fundamental form and normal connection.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::clifford::Signature;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("invalid parameter `{name}`: {reason}")]
    BadParameter { name: String, reason: String },
    #[error("scene `{name}` declares p={p}, q={q} but its provider is built for p={pp}, q={pq}")]
    DimensionMismatch { name: String, p: usize, q: usize, pp: usize, pq: usize },
    #[error("domain must have one interval per intrinsic dimension")]
    BadDomain,
    #[error("resolution must be at least 9 nodes per axis, got {0}")]
    BadResolution(usize),
    #[error("shape operator is not symmetric at {coords:?} (asymmetry {asym:e})")]
    AsymmetricShapeOperator { coords: Vec<f64>, asym: f64 },
    #[error("hypersurface lift requires q = 1, scene has q = {0}")]
    NotHypersurface(usize),
    #[error("invalid scene file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Constant-curvature ambient space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl Ambient {
    /// Sectional curvature κ of the ambient space.
    pub fn kappa(self) -> f64 {
        match self {
            Ambient::Euclidean => 0.0,
            Ambient::Sphere => 1.0,
            Ambient::Hyperbolic => -1.0,
        }
    }

    /// Clifford algebra holding spinors for an `n`-dimensional ambient space.
    /// Space forms add the distinguished generator ν as the last one.
    pub fn algebra(self, n: usize) -> Signature {
        let sig = match self {
            Ambient::Euclidean => Signature::euclidean(n),
            Ambient::Sphere => Signature::euclidean(n + 1),
            Ambient::Hyperbolic => Signature::lorentzian(n),
        };
        sig.expect("ambient dimension within algebra limits")
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ambient::Euclidean => "euclidean",
            Ambient::Sphere => "sphere",
            Ambient::Hyperbolic => "hyperbolic",
        })
    }
}

/// Parameter box, one `[min, max]` interval per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Domain {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Self {
        Self { min, max }
    }
}

/// Adapted data of an explicit embedding at one parameter point. Vectors are
/// ambient coordinates (length `n`, or `n + 1` for space forms).
#[derive(Clone, Debug)]
pub struct EmbeddingSample {
    pub position: Vec<f64>,
    /// Coordinate tangents `∂_k F`.
    pub tangents: Vec<Vec<f64>>,
    /// Orthonormal normal frame, ordered like the scene's normal generators.
    pub normals: Vec<Vec<f64>>,
}

/// Smooth geometric data of a scene. Evaluators may be called slightly
/// outside the domain (finite-difference ghost nodes).
pub trait GeometryProvider: Send + Sync {
    fn p(&self) -> usize;
    fn q(&self) -> usize;

    /// First fundamental form `g_kl` in coordinates.
    fn metric(&self, x: &[f64]) -> DMatrix<f64>;

    /// Coordinate components `h^a_kl` of B, one matrix per normal direction.
    fn second_fundamental_form(&self, x: &[f64]) -> Vec<DMatrix<f64>>;

    /// Normal connection `ω^N_ab(∂_k) = <∇_k n_a, n_b>`, one q×q matrix per coordinate.
    fn normal_connection(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(self.q(), self.q()); self.p()]
    }

    /// Explicit embedding, when a closed form is known.
    fn embedding(&self, _x: &[f64]) -> Option<EmbeddingSample> {
        None
    }
}

/// Builtin provider reference as stored in scene files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub builtin: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

/// Scene file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub ambient: Ambient,
    pub domain: Domain,
    pub resolution: usize,
    pub provider: ProviderSpec,
}

/// A scene ready to be discretised.
#[derive(Clone)]
pub struct Scene {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub ambient: Ambient,
    pub domain: Domain,
    pub resolution: usize,
    pub provider: Arc<dyn GeometryProvider>,
}

impl fmt::Debug for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scene")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("ambient", &self.ambient)
            .field("domain", &self.domain)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

impl Scene {
    pub fn new(
        name: impl Into<String>,
        ambient: Ambient,
        domain: Domain,
        resolution: usize,
        provider: Arc<dyn GeometryProvider>,
    ) -> Result<Self, SceneError> {
        let p = provider.p();
        if domain.min.len() != p || domain.max.len() != p {
            return Err(SceneError::BadDomain);
        }
        if resolution < 9 {
            return Err(SceneError::BadResolution(resolution));
        }
        Ok(Self { name: name.into(), p, q: provider.q(), ambient, domain, resolution, provider })
    }

    /// Ambient dimension `n = p + q`.
    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn kappa(&self) -> f64 {
        self.ambient.kappa()
    }

    pub fn algebra(&self) -> Signature {
        self.ambient.algebra(self.n())
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self, SceneError> {
        if resolution < 9 {
            return Err(SceneError::BadResolution(resolution));
        }
        Ok(Self { resolution, ..self.clone() })
    }

    pub fn from_file(file: &SceneFile) -> Result<Self, SceneError> {
        let mut scene = builtin_scene(&file.provider.builtin, &file.provider.params)?;
        if scene.p != file.p || scene.q != file.q {
            return Err(SceneError::DimensionMismatch {
                name: file.name.clone(),
                p: file.p,
                q: file.q,
                pp: scene.p,
                pq: scene.q,
            });
        }
        if file.domain.min.len() != scene.p || file.domain.max.len() != scene.p {
            return Err(SceneError::BadDomain);
        }
        if file.resolution < 9 {
            return Err(SceneError::BadResolution(file.resolution));
        }
        scene.name = file.name.clone();
        scene.ambient = file.ambient;
        scene.domain = file.domain.clone();
        scene.resolution = file.resolution;
        Ok(scene)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

/// Catalog listing entry.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub p: usize,
    pub q: usize,
    pub ambient: Ambient,
    pub oracle: &'static str,
}

const CATALOG: &[CatalogEntry] = &[
    CatalogEntry { name: "flat_plane", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "identity chart" },
    CatalogEntry { name: "round_sphere", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "sphere of radius r" },
    CatalogEntry { name: "perturbed_sphere", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "violates the Gauss equation" },
    CatalogEntry { name: "cylinder", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "circular cylinder of radius r" },
    CatalogEntry { name: "graph_surface", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "graph of a cubic polynomial" },
    CatalogEntry { name: "flat_torus_r4", p: 2, q: 2, ambient: Ambient::Euclidean, oracle: "product of circles in R^4" },
    CatalogEntry { name: "round_s3_r4", p: 3, q: 1, ambient: Ambient::Euclidean, oracle: "hypersphere of radius r" },
    CatalogEntry { name: "enneper", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "Enneper minimal surface" },
    CatalogEntry { name: "catenoid", p: 2, q: 1, ambient: Ambient::Euclidean, oracle: "catenoid" },
    CatalogEntry { name: "great_sphere_s3", p: 2, q: 1, ambient: Ambient::Sphere, oracle: "totally geodesic S^2 in S^3" },
    CatalogEntry { name: "clifford_torus_s3", p: 2, q: 1, ambient: Ambient::Sphere, oracle: "Clifford torus, principal curvatures +-1" },
    CatalogEntry { name: "geodesic_h2_in_h3", p: 2, q: 1, ambient: Ambient::Hyperbolic, oracle: "totally geodesic H^2 in H^3" },
];

/// All builtin scenes.
pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG
}

fn param(params: &BTreeMap<String, Value>, name: &str, default: f64) -> Result<f64, SceneError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| SceneError::BadParameter {
            name: name.into(),
            reason: "expected a number".into(),
        }),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, SceneError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(SceneError::BadParameter { name: name.into(), reason: "must be positive".into() })
    }
}

/// Builds a catalog scene with default domain and resolution 33.
pub fn builtin_scene(name: &str, params: &BTreeMap<String, Value>) -> Result<Scene, SceneError> {
    let d2 = |a: [f64; 2], b: [f64; 2]| Domain::new(a.to_vec(), b.to_vec());
    let res = 33;
    use Ambient::*;
    let scene = match name {
        "flat_plane" => Scene::new(name, Euclidean, d2([0.0, 0.0], [1.0, 1.0]), res, Arc::new(FlatPlane))?,
        "round_sphere" | "perturbed_sphere" => {
            let r = positive("r", param(params, "r", 1.0)?)?;
            let eps = if name == "perturbed_sphere" { param(params, "eps", 0.1)? } else { 0.0 };
            let dom = d2([PI / 3.0, 0.0], [2.0 * PI / 3.0, 1.0]);
            Scene::new(name, Euclidean, dom, res, Arc::new(RoundSphere { r, eps }))?
        }
        "cylinder" => {
            let r = positive("r", param(params, "r", 1.0)?)?;
            Scene::new(name, Euclidean, d2([0.0, 0.0], [1.5, 1.0]), res, Arc::new(Cylinder { r }))?
        }
        "graph_surface" => {
            let c = match params.get("coefficients") {
                None => [0.3, 0.1, -0.2, 0.1, 0.0, -0.1, 0.05],
                Some(v) => {
                    let arr: Vec<f64> = serde_json::from_value(v.clone())?;
                    arr.try_into().map_err(|_| SceneError::BadParameter {
                        name: "coefficients".into(),
                        reason: "expected 7 numbers [a20, a11, a02, a30, a21, a12, a03]".into(),
                    })?
                }
            };
            Scene::new(name, Euclidean, d2([-0.5, -0.5], [0.5, 0.5]), res, Arc::new(GraphSurface { c }))?
        }
        "flat_torus_r4" => {
            let r1 = positive("r1", param(params, "r1", 1.0)?)?;
            let r2 = positive("r2", param(params, "r2", 0.7)?)?;
            Scene::new(name, Euclidean, d2([0.0, 0.0], [1.0, 1.0]), res, Arc::new(FlatTorus { r1, r2 }))?
        }
        "round_s3_r4" => {
            let r = positive("r", param(params, "r", 1.0)?)?;
            let dom = Domain::new(vec![PI / 3.0, PI / 3.0, 0.0], vec![2.0 * PI / 3.0, 2.0 * PI / 3.0, 1.0]);
            Scene::new(name, Euclidean, dom, 13, Arc::new(RoundHypersphere { r }))?
        }
        "enneper" => Scene::new(name, Euclidean, d2([-0.6, -0.6], [0.6, 0.6]), res, Arc::new(Enneper))?,
        "catenoid" => Scene::new(name, Euclidean, d2([0.0, -0.6], [1.5, 0.6]), res, Arc::new(Catenoid))?,
        "great_sphere_s3" => {
            let dom = d2([PI / 3.0, 0.0], [2.0 * PI / 3.0, 1.0]);
            Scene::new(name, Sphere, dom, res, Arc::new(GreatSphere))?
        }
        "clifford_torus_s3" => Scene::new(name, Sphere, d2([0.0, 0.0], [1.0, 1.0]), res, Arc::new(CliffordTorus))?,
        "geodesic_h2_in_h3" => {
            Scene::new(name, Hyperbolic, d2([0.3, 0.0], [1.2, 1.0]), res, Arc::new(GeodesicPlaneH3))?
        }
        _ => return Err(SceneError::UnknownScene(name.into())),
    };
    Ok(scene)
}

/// Catalog scene with default parameters.
pub fn scene_by_name(name: &str) -> Result<Scene, SceneError> {
    builtin_scene(name, &BTreeMap::new())
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

struct FlatPlane;

impl GeometryProvider for FlatPlane {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2, 2)]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        Some(EmbeddingSample {
            position: vec![x[0], x[1], 0.0],
            tangents: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            normals: vec![vec![0.0, 0.0, 1.0]],
        })
    }
}

/// Sphere of radius `r` in polar/azimuth coordinates with outward normal.
/// `eps > 0` adds `eps du⊗du` to B, breaking the Gauss equation.
struct RoundSphere {
    r: f64,
    eps: f64,
}

impl GeometryProvider for RoundSphere {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let r2 = self.r * self.r;
        diag(&[r2, r2 * x[0].sin().powi(2)])
    }
    fn second_fundamental_form(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let mut h = self.metric(x) * (-1.0 / self.r);
        h[(0, 0)] += self.eps;
        vec![h]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        if self.eps != 0.0 {
            return None;
        }
        let (su, cu) = x[0].sin_cos();
        let (sv, cv) = x[1].sin_cos();
        let r = self.r;
        Some(EmbeddingSample {
            position: vec![r * su * cv, r * su * sv, r * cu],
            tangents: vec![vec![r * cu * cv, r * cu * sv, -r * su], vec![-r * su * sv, r * su * cv, 0.0]],
            normals: vec![vec![su * cv, su * sv, cu]],
        })
    }
}

/// Circular cylinder in `(θ, z)` with outward normal.
struct Cylinder {
    r: f64,
}

impl GeometryProvider for Cylinder {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, _x: &[f64]) -> DMatrix<f64> {
        diag(&[self.r * self.r, 1.0])
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![diag(&[-self.r, 0.0])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (s, c) = x[0].sin_cos();
        let r = self.r;
        Some(EmbeddingSample {
            position: vec![r * c, r * s, x[1]],
            tangents: vec![vec![-r * s, r * c, 0.0], vec![0.0, 0.0, 1.0]],
            normals: vec![vec![c, s, 0.0]],
        })
    }
}

/// Graph of `f = a20 u² + a11 uv + a02 v² + a30 u³ + a21 u²v + a12 uv² + a03 v³`.
struct GraphSurface {
    c: [f64; 7],
}

impl GraphSurface {
    /// `(f_u, f_v, f_uu, f_uv, f_vv)`.
    fn jets(&self, x: &[f64]) -> [f64; 5] {
        let [a20, a11, a02, a30, a21, a12, a03] = self.c;
        let (u, v) = (x[0], x[1]);
        [
            2.0 * a20 * u + a11 * v + 3.0 * a30 * u * u + 2.0 * a21 * u * v + a12 * v * v,
            a11 * u + 2.0 * a02 * v + a21 * u * u + 2.0 * a12 * u * v + 3.0 * a03 * v * v,
            2.0 * a20 + 6.0 * a30 * u + 2.0 * a21 * v,
            a11 + 2.0 * a21 * u + 2.0 * a12 * v,
            2.0 * a02 + 2.0 * a12 * u + 6.0 * a03 * v,
        ]
    }

    fn height(&self, x: &[f64]) -> f64 {
        let [a20, a11, a02, a30, a21, a12, a03] = self.c;
        let (u, v) = (x[0], x[1]);
        a20 * u * u + a11 * u * v + a02 * v * v + a30 * u.powi(3) + a21 * u * u * v + a12 * u * v * v + a03 * v.powi(3)
    }
}

impl GeometryProvider for GraphSurface {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let [fu, fv, ..] = self.jets(x);
        DMatrix::from_row_slice(2, 2, &[1.0 + fu * fu, fu * fv, fu * fv, 1.0 + fv * fv])
    }
    fn second_fundamental_form(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let [fu, fv, fuu, fuv, fvv] = self.jets(x);
        let w = (1.0 + fu * fu + fv * fv).sqrt();
        vec![DMatrix::from_row_slice(2, 2, &[fuu / w, fuv / w, fuv / w, fvv / w])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let [fu, fv, ..] = self.jets(x);
        let w = (1.0 + fu * fu + fv * fv).sqrt();
        Some(EmbeddingSample {
            position: vec![x[0], x[1], self.height(x)],
            tangents: vec![vec![1.0, 0.0, fu], vec![0.0, 1.0, fv]],
            normals: vec![vec![-fu / w, -fv / w, 1.0 / w]],
        })
    }
}

/// `(r1 cos(u/r1), r1 sin(u/r1), r2 cos(v/r2), r2 sin(v/r2))` in R^4.
struct FlatTorus {
    r1: f64,
    r2: f64,
}

impl GeometryProvider for FlatTorus {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        2
    }
    fn metric(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![diag(&[-1.0 / self.r1, 0.0]), diag(&[0.0, 1.0 / self.r2])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (sa, ca) = (x[0] / self.r1).sin_cos();
        let (sb, cb) = (x[1] / self.r2).sin_cos();
        Some(EmbeddingSample {
            position: vec![self.r1 * ca, self.r1 * sa, self.r2 * cb, self.r2 * sb],
            tangents: vec![vec![-sa, ca, 0.0, 0.0], vec![0.0, 0.0, -sb, cb]],
            normals: vec![vec![ca, sa, 0.0, 0.0], vec![0.0, 0.0, -cb, -sb]],
        })
    }
}

/// Hypersphere of radius `r` in R^4 in hyperspherical coordinates, inward normal.
struct RoundHypersphere {
    r: f64,
}

impl RoundHypersphere {
    fn point(&self, x: &[f64]) -> [f64; 4] {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        let (s3, c3) = x[2].sin_cos();
        [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3].map(|t| t * self.r)
    }
}

impl GeometryProvider for RoundHypersphere {
    fn p(&self) -> usize {
        3
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let r2 = self.r * self.r;
        let s1 = x[0].sin();
        let s2 = x[1].sin();
        diag(&[r2, r2 * s1 * s1, r2 * s1 * s1 * s2 * s2])
    }
    fn second_fundamental_form(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![self.metric(x) * (1.0 / self.r)]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (s1, c1) = x[0].sin_cos();
        let (s2, c2) = x[1].sin_cos();
        let (s3, c3) = x[2].sin_cos();
        let r = self.r;
        let pos = self.point(x);
        Some(EmbeddingSample {
            position: pos.to_vec(),
            tangents: vec![
                vec![-r * s1, r * c1 * c2, r * c1 * s2 * c3, r * c1 * s2 * s3],
                vec![0.0, -r * s1 * s2, r * s1 * c2 * c3, r * s1 * c2 * s3],
                vec![0.0, 0.0, -r * s1 * s2 * s3, r * s1 * s2 * c3],
            ],
            normals: vec![pos.iter().map(|t| -t / r).collect()],
        })
    }
}

/// Enneper surface `(u - u³/3 + uv², -v - u²v + v³/3, u² - v²)`.
struct Enneper;

impl GeometryProvider for Enneper {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let l = 1.0 + x[0] * x[0] + x[1] * x[1];
        DMatrix::identity(2, 2) * (l * l)
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![diag(&[-2.0, 2.0])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (u, v) = (x[0], x[1]);
        let l = 1.0 + u * u + v * v;
        Some(EmbeddingSample {
            position: vec![u - u.powi(3) / 3.0 + u * v * v, -v - u * u * v + v.powi(3) / 3.0, u * u - v * v],
            tangents: vec![vec![1.0 - u * u + v * v, -2.0 * u * v, 2.0 * u], vec![2.0 * u * v, -1.0 - u * u + v * v, -2.0 * v]],
            normals: vec![vec![2.0 * u / l, 2.0 * v / l, (u * u + v * v - 1.0) / l]],
        })
    }
}

/// Catenoid `(cosh v cos u, cosh v sin u, v)`.
struct Catenoid;

impl GeometryProvider for Catenoid {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * x[1].cosh().powi(2)
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![diag(&[-1.0, 1.0])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (su, cu) = x[0].sin_cos();
        let (ch, sh) = (x[1].cosh(), x[1].sinh());
        Some(EmbeddingSample {
            position: vec![ch * cu, ch * su, x[1]],
            tangents: vec![vec![-ch * su, ch * cu, 0.0], vec![sh * cu, sh * su, 1.0]],
            normals: vec![vec![cu / ch, su / ch, -sh / ch]],
        })
    }
}

/// Equatorial unit 2-sphere `x4 = 0` in S^3, normal `-e4`.
struct GreatSphere;

impl GeometryProvider for GreatSphere {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        diag(&[1.0, x[0].sin().powi(2)])
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2, 2)]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (su, cu) = x[0].sin_cos();
        let (sv, cv) = x[1].sin_cos();
        Some(EmbeddingSample {
            position: vec![su * cv, su * sv, cu, 0.0],
            tangents: vec![vec![cu * cv, cu * sv, -su, 0.0], vec![-su * sv, su * cv, 0.0, 0.0]],
            normals: vec![vec![0.0, 0.0, 0.0, -1.0]],
        })
    }
}

/// Clifford torus `(cos a, sin a, cos b, sin b)/√2`, `a = √2 u`, `b = √2 v`.
struct CliffordTorus;

impl GeometryProvider for CliffordTorus {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![diag(&[1.0, -1.0])]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (sa, ca) = (SQRT_2 * x[0]).sin_cos();
        let (sb, cb) = (SQRT_2 * x[1]).sin_cos();
        let k = FRAC_1_SQRT_2;
        Some(EmbeddingSample {
            position: vec![k * ca, k * sa, k * cb, k * sb],
            tangents: vec![vec![-sa, ca, 0.0, 0.0], vec![0.0, 0.0, -sb, cb]],
            normals: vec![vec![-k * ca, -k * sa, k * cb, k * sb]],
        })
    }
}

/// `(sinh u cos v, sinh u sin v, 0, cosh u)` in the hyperboloid model of H^3, normal `e3`.
struct GeodesicPlaneH3;

impl GeometryProvider for GeodesicPlaneH3 {
    fn p(&self) -> usize {
        2
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        diag(&[1.0, x[0].sinh().powi(2)])
    }
    fn second_fundamental_form(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(2, 2)]
    }
    fn embedding(&self, x: &[f64]) -> Option<EmbeddingSample> {
        let (sh, ch) = (x[0].sinh(), x[0].cosh());
        let (sv, cv) = x[1].sin_cos();
        Some(EmbeddingSample {
            position: vec![sh * cv, sh * sv, 0.0, ch],
            tangents: vec![vec![ch * cv, ch * sv, 0.0, sh], vec![-sh * sv, sh * cv, 0.0, 0.0]],
            normals: vec![vec![0.0, 0.0, 1.0, 0.0]],
        })
    }
}

/// Shape operator field for [`hypersurface_lift`]: `T(x)` acts on coordinate
/// vectors, `T(∂_k) = Σ_m T[(m, k)] ∂_m`.
pub type ShapeOperator = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

struct ShapeOperatorLift {
    base: Arc<dyn GeometryProvider>,
    shape: ShapeOperator,
}

impl GeometryProvider for ShapeOperatorLift {
    fn p(&self) -> usize {
        self.base.p()
    }
    fn q(&self) -> usize {
        1
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.base.metric(x)
    }
    fn second_fundamental_form(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let g = self.base.metric(x);
        let t = (self.shape)(x);
        let p = g.nrows();
        // B(∂_k, ∂_l) = <T ∂_k, ∂_l> ν.
        let mut h = DMatrix::zeros(p, p);
        for k in 0..p {
            for l in 0..p {
                let mut s = 0.0;
                for m in 0..p {
                    s += g[(l, m)] * t[(m, k)];
                }
                h[(k, l)] = s;
            }
        }
        vec![h]
    }
    fn normal_connection(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        self.base.normal_connection(x)
    }
}

/// Replaces the second fundamental form of a hypersurface scene by
/// `B(X, Y) = <T X, Y> ν` for a self-adjoint shape operator field `T`.
/// Self-adjointness is checked on every node of the scene grid.
pub fn hypersurface_lift(scene: &Scene, shape: ShapeOperator) -> Result<Scene, SceneError> {
    if scene.q != 1 {
        return Err(SceneError::NotHypersurface(scene.q));
    }
    let lift = ShapeOperatorLift { base: scene.provider.clone(), shape };
    let grid = crate::grid::Grid::new(
        scene.domain.min.clone(),
        scene.domain.max.clone(),
        vec![scene.resolution; scene.p],
    );
    for idx in 0..grid.len() {
        let x = grid.coords(idx);
        let h = &lift.second_fundamental_form(&x)[0];
        let asym = (h - h.transpose()).abs().max();
        let scale = 1.0 + h.abs().max();
        if asym > 1e-10 * scale {
            return Err(SceneError::AsymmetricShapeOperator { coords: x, asym });
        }
    }
    Ok(Scene { provider: Arc::new(lift), ..scene.clone() })
}
