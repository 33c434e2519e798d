//! Immersions into the round sphere and hyperbolic space, `F = <<ν·φ, φ>>`.
//!
//! Hyperbolic space is the upper sheet of the hyperboloid `<x, x> = −1` in
//! Minkowski space with the last coordinate timelike.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::clifford::{brackets, Multivector, Signature};
use crate::immersion::{position_derivatives, reconstructed_second_fundamental_form, xi, xi_coordinate, ImmersionResult};
use crate::killing::{KillingError, SpinorField};
use crate::patch::DiscretePatch;
use crate::report::ResidualReport;

/// Ambient space form: curvature, Clifford algebra and the constant `ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientModel {
    pub kappa: f64,
    pub algebra: Signature,
    pub nu: Multivector,
}

impl AmbientModel {
    /// `Sⁿ ⊂ ℝⁿ⁺¹`.
    pub fn sphere(n: usize) -> Self {
        let algebra = Signature::euclidean(n + 1).expect("supported dimension");
        Self { kappa: 1.0, algebra, nu: Multivector::basis_vector(algebra, n) }
    }

    /// `ℍⁿ ⊂ ℝⁿ'¹`.
    pub fn hyperbolic(n: usize) -> Self {
        let algebra = Signature::lorentzian(n).expect("supported dimension");
        Self { kappa: -1.0, algebra, nu: Multivector::basis_vector(algebra, n) }
    }

    pub fn for_patch(patch: &DiscretePatch) -> Option<Self> {
        match patch.kappa() {
            k if k > 0.0 => Some(Self::sphere(patch.n())),
            k if k < 0.0 => Some(Self::hyperbolic(patch.n())),
            _ => None,
        }
    }

    /// Name of the pointwise constraint residual.
    pub fn norm_entry(&self) -> &'static str {
        if self.kappa > 0.0 { "unit_norm" } else { "lorentz_norm" }
    }
}

fn require_space_form(field: &SpinorField) -> Result<AmbientModel, KillingError> {
    match AmbientModel::for_patch(&field.patch) {
        Some(m) if field.kappa == m.kappa => Ok(m),
        _ => Err(KillingError::Unsupported("field is not solved in a space form".into())),
    }
}

/// Pointwise `F = <<ν·φ, φ>>`, with ξ samples and the constraint residual
/// `|<F, F> − κ|`.
pub fn immersion_spaceform(field: &SpinorField) -> Result<ImmersionResult, KillingError> {
    let model = require_space_form(field)?;
    let patch = &field.patch;
    let (p, q, n) = (patch.p(), patch.q(), patch.n());
    let unit = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    let mut positions = Vec::with_capacity(patch.len());
    let mut grade = Vec::with_capacity(patch.len());
    let mut norm = Vec::with_capacity(patch.len());
    let mut xi_samples = Vec::with_capacity(patch.len());
    let mut normal_samples = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let phi = field.values[node].value();
        let full = brackets(&(&model.nu * phi), phi)?;
        grade.push((&full - &full.grade(1)).norm_max());
        let f = full.vector_part();
        norm.push((model.algebra.inner(&f, &f) - model.kappa).abs());
        positions.push(f);
        xi_samples.push((0..p).map(|i| xi(field, node, &unit(i))).collect::<Result<Vec<_>, _>>()?);
        normal_samples.push((0..q).map(|a| xi(field, node, &unit(p + a))).collect::<Result<Vec<_>, _>>()?);
    }
    let mut report = ResidualReport::new(patch.grid().counts.clone());
    report.insert(model.norm_entry(), &norm);
    report.insert("position_grade", &grade);
    Ok(ImmersionResult { positions, xi_samples, normal_samples, report, rigid_alignment: None })
}

/// Finite-difference `∂_k F` against `ξ(∂_k)` nodewise.
pub fn df_consistency(field: &SpinorField, result: &ImmersionResult) -> ResidualReport {
    let patch = &field.patch;
    let df = position_derivatives(result, patch);
    let res: Vec<f64> = (0..patch.len())
        .map(|node| {
            (0..patch.p())
                .map(|k| {
                    let x = xi_coordinate(field, node, k);
                    x.iter().zip(&df[node][k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let mut r = ResidualReport::new(patch.grid().counts.clone());
    r.insert("df_consistency", &res);
    r
}

/// First fundamental form of `F` against the metric, and the second
/// fundamental form inside the space form against the scene data.
///
/// `ξ(n_a)` is orthogonal to `F`, so pairing second derivatives with it already
/// projects onto the normal space within the tangent space of the space form.
pub fn spaceform_isometry_and_ii(result: &ImmersionResult, patch: &DiscretePatch) -> ResidualReport {
    let sig = patch.algebra();
    let p = patch.p();
    let df = position_derivatives(result, patch);
    let hs = reconstructed_second_fundamental_form(result, patch);
    let mut iso = Vec::with_capacity(patch.len());
    let mut ii = Vec::with_capacity(patch.len());
    for node in 0..patch.len() {
        let g = patch.metric(node);
        let mut e = 0.0f64;
        for k in 0..p {
            for l in 0..p {
                e = e.max((sig.inner(&df[node][k], &df[node][l]) - g[(k, l)]).abs());
            }
        }
        iso.push(e);
        ii.push(
            (0..patch.q()).map(|a| (&hs[node][a] - patch.h_coord(node, a)).abs().max()).fold(0.0, f64::max),
        );
    }
    let mut r = ResidualReport::new(patch.grid().counts.clone());
    r.insert("isometry", &iso);
    r.insert("second_fundamental_form", &ii);
    r
}

/// Eigenvalues of the reconstructed shape operator `g⁻¹ h` for the first
/// normal, ascending.
pub fn principal_curvatures(result: &ImmersionResult, patch: &DiscretePatch) -> Vec<Vec<f64>> {
    let hs = reconstructed_second_fundamental_form(result, patch);
    (0..patch.len())
        .map(|node| {
            // Symmetrize through the Cholesky factor of g.
            let g = patch.metric(node).clone();
            let l = g.cholesky().expect("positive definite metric").l();
            let li = l.try_inverse().expect("invertible factor");
            let s: DMatrix<f64> = &li * &hs[node][0] * li.transpose();
            let s = (&s + s.transpose()) * 0.5;
            let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        })
        .collect()
}

/// Hyperboloid point `(x, t)` to the Poincaré ball, `x / (1 + t)`.
pub fn hyperboloid_to_poincare(x: &[f64]) -> Vec<f64> {
    let (last, rest) = x.split_last().expect("nonempty point");
    rest.iter().map(|v| v / (1.0 + last)).collect()
}

/// Inverse of [`hyperboloid_to_poincare`].
pub fn poincare_to_hyperboloid(y: &[f64]) -> Vec<f64> {
    let s: f64 = y.iter().map(|v| v * v).sum();
    let d = 1.0 - s;
    let mut out: Vec<f64> = y.iter().map(|v| 2.0 * v / d).collect();
    out.push((1.0 + s) / d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::SpinElement;
    use crate::immersion::dirac_residual;
    use crate::killing::{solve_killing, SolveOptions};
    use crate::patch::build_patch;
    use crate::scene::scene_by_name;
    use std::sync::Arc;

    fn field(name: &str, res: usize) -> SpinorField {
        let pt = Arc::new(build_patch(&scene_by_name(name).unwrap().with_resolution(res).unwrap()).unwrap());
        solve_killing(pt.clone(), SpinElement::identity(pt.algebra()), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn identity_spinor_sits_at_the_pole() {
        let f = field("great_sphere_s3", 9);
        let r = immersion_spaceform(&f).unwrap();
        assert_eq!(r.positions[f.base_node], vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn great_sphere_stays_on_the_unit_sphere() {
        let f = field("great_sphere_s3", 17);
        let r = immersion_spaceform(&f).unwrap();
        assert!(r.report.max("unit_norm") < 1e-10);
        assert!(df_consistency(&f, &r).max("df_consistency") < 1e-2);
        assert!(dirac_residual(&f).max("dirac") < 1e-2);
    }

    #[test]
    fn geodesic_plane_on_upper_sheet() {
        let f = field("geodesic_h2_in_h3", 17);
        let r = immersion_spaceform(&f).unwrap();
        assert!(r.report.max("lorentz_norm") < 1e-10);
        assert!(r.positions.iter().all(|x| x[3] > 0.0));
        assert!(spaceform_isometry_and_ii(&r, &f.patch).max("second_fundamental_form") < 1e-2);
    }

    #[test]
    fn euclidean_fields_are_rejected() {
        assert!(immersion_spaceform(&field("flat_plane", 9)).is_err());
    }

    #[test]
    fn poincare_round_trip() {
        let y = [0.3, -0.2, 0.5];
        let x = poincare_to_hyperboloid(&y);
        let sig = Signature::lorentzian(3).unwrap();
        assert!((sig.inner(&x, &x) + 1.0).abs() < 1e-12);
        let back = hyperboloid_to_poincare(&x);
        assert!(back.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-15));
    }
}
