//! Rigid alignment of point sets and least-squares sphere fits.

use nalgebra::{DMatrix, DVector};

/// Proper rigid motion `x ↦ R x + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidMotion {
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl RigidMotion {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.rotation * DVector::from_column_slice(x) + &self.translation).iter().copied().collect()
    }
}

/// Best proper rigid motion taking `src` onto `dst` in the least-squares
/// sense (Kabsch). Both sets must have the same length and dimension.
pub fn procrustes(src: &[Vec<f64>], dst: &[Vec<f64>]) -> RigidMotion {
    assert_eq!(src.len(), dst.len());
    assert!(!src.is_empty());
    let d = src[0].len();
    let n = src.len() as f64;
    let centroid = |pts: &[Vec<f64>]| -> DVector<f64> {
        pts.iter().fold(DVector::zeros(d), |acc, x| acc + DVector::from_column_slice(x)) / n
    };
    let (cs, cd) = (centroid(src), centroid(dst));
    let mut cov = DMatrix::zeros(d, d);
    for (a, b) in src.iter().zip(dst) {
        let a = DVector::from_column_slice(a) - &cs;
        let b = DVector::from_column_slice(b) - &cd;
        cov += &b * a.transpose();
    }
    let svd = cov.svd(true, true);
    let u = svd.u.expect("left singular vectors");
    let vt = svd.v_t.expect("right singular vectors");
    let mut fix = DMatrix::identity(d, d);
    if (&u * &vt).determinant() < 0.0 {
        fix[(d - 1, d - 1)] = -1.0;
    }
    let rotation = &u * fix * &vt;
    let translation = &cd - &rotation * &cs;
    RigidMotion { rotation, translation }
}

/// Largest pointwise distance after aligning `src` onto `dst`.
pub fn aligned_distance(src: &[Vec<f64>], dst: &[Vec<f64>]) -> f64 {
    let m = procrustes(src, dst);
    src.iter()
        .zip(dst)
        .map(|(a, b)| m.apply(a).iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Congruence test that needs no alignment: the largest gap between the
/// pairings `<x_i, x_a>` and `<y_i, y_a>` over all points `i` and the anchor
/// indices `a`. Suited to groups fixing the origin, such as the Lorentz group
/// acting on the hyperboloid, when the anchors span the points.
pub fn gram_distance(
    src: &[Vec<f64>],
    dst: &[Vec<f64>],
    anchors: &[usize],
    inner: impl Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    assert_eq!(src.len(), dst.len());
    let mut worst = 0.0f64;
    for &a in anchors {
        for (x, y) in src.iter().zip(dst) {
            worst = worst.max((inner(x, &src[a]) - inner(y, &dst[a])).abs());
        }
    }
    worst
}

/// Sphere through a point cloud by algebraic least squares.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereFit {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Largest `| |x − c| − r |` over the points.
    pub max_deviation: f64,
}

/// Solves `|x|² = 2 c·x + k` for `c` and `k = r² − |c|²`.
pub fn fit_sphere(points: &[Vec<f64>]) -> SphereFit {
    let d = points[0].len();
    let a = DMatrix::from_fn(points.len(), d + 1, |i, j| if j < d { 2.0 * points[i][j] } else { 1.0 });
    let b = DVector::from_fn(points.len(), |i, _| points[i].iter().map(|x| x * x).sum());
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("least-squares solve");
    let center: Vec<f64> = sol.iter().take(d).copied().collect();
    let radius = (sol[d] + center.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let max_deviation = points
        .iter()
        .map(|x| (x.iter().zip(&center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt() - radius).abs())
        .fold(0.0, f64::max);
    SphereFit { center, radius, max_deviation }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_motion() {
        let (s, c) = 0.7f64.sin_cos();
        let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let t = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let src: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let x = i as f64;
                vec![x.sin(), (1.3 * x).cos(), 0.1 * x]
            })
            .collect();
        let dst: Vec<Vec<f64>> =
            src.iter().map(|x| (&rot * DVector::from_column_slice(x) + &t).iter().copied().collect()).collect();
        let m = procrustes(&src, &dst);
        assert!((&m.rotation - &rot).abs().max() < 1e-12);
        assert!(aligned_distance(&src, &dst) < 1e-12);
    }

    #[test]
    fn never_returns_a_reflection() {
        let src = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]];
        let dst: Vec<Vec<f64>> = src.iter().map(|x| vec![x[0], x[1], -x[2]]).collect();
        assert!(procrustes(&src, &dst).rotation.determinant() > 0.0);
    }

    #[test]
    fn gram_distance_ignores_boosts() {
        let (c, s) = (0.8f64.cosh(), 0.8f64.sinh());
        let boost = |x: &[f64]| vec![c * x[0] + s * x[1], s * x[0] + c * x[1]];
        let lorentz = |x: &[f64], y: &[f64]| x[0] * y[0] - x[1] * y[1];
        let pts: Vec<Vec<f64>> = (0..10).map(|i| {
            let t = 0.2 * i as f64;
            vec![t.sinh(), t.cosh()]
        }).collect();
        let moved: Vec<Vec<f64>> = pts.iter().map(|x| boost(x)).collect();
        assert!(gram_distance(&pts, &moved, &[0, 9], lorentz) < 1e-12);
        assert!(gram_distance(&pts, &pts.iter().map(|x| vec![x[0] * 1.1, x[1]]).collect::<Vec<_>>(), &[9], lorentz) > 1e-3);
    }

    #[test]
    fn sphere_fit_exact() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let (a, b) = (0.3 * i as f64, 0.17 * i as f64);
                vec![1.0 + 2.0 * a.sin() * b.cos(), -1.0 + 2.0 * a.sin() * b.sin(), 0.5 + 2.0 * a.cos()]
            })
            .collect();
        let f = fit_sphere(&pts);
        assert!((f.radius - 2.0).abs() < 1e-10 && f.max_deviation < 1e-10);
        assert!((f.center[0] - 1.0).abs() < 1e-10);
    }
}
