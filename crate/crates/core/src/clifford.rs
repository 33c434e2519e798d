//! Dense real Clifford algebras with diagonal signature.
//!
//! Generators square to minus their metric norm: `e_i * e_i = -ε_i`. For the
//! Euclidean algebra every generator squares to `-1`; in the Lorentzian
//! algebra used for hyperbolic space the last generator has norm `-1` and
//! squares to `+1`. Consequently `x * y + y * x = -2 <x, y>` for vectors.
//!
//! Multivectors store all `2^N` coefficients, indexed by blade bitmask
//! (bit `i` set means generator `e_{i+1}` is a factor, factors written in
//! increasing order).
//!
//! With this sign rule `exp(θ/2 e_i e_j)` acts under `g v g⁻¹` as the rotation
//! taking `e_i` to `cos θ e_i + sin θ e_j`. Many geometric algebra texts use
//! `e_i² = +1` and get the opposite sense.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

/// Largest supported number of generators.
pub const MAX_GENERATORS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(Signature, Signature),
    #[error("too many generators: {0} (max {MAX_GENERATORS})")]
    TooManyGenerators(usize),
    #[error("expected a pure {expected}, found grade content {found:?}")]
    WrongGrade { expected: &'static str, found: Vec<usize> },
    #[error("not a spin group element: {0}")]
    NotSpin(String),
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("matrix reverses orientation (det {0})")]
    OrientationReversing(f64),
    #[error("matrix has shape {rows}x{cols}, expected {dim}x{dim}")]
    BadShape { rows: usize, cols: usize, dim: usize },
    #[error("operation requires a Euclidean signature, found {0}")]
    NonEuclidean(Signature),
}

pub type Result<T> = std::result::Result<T, CliffordError>;

/// Metric signature: `n_plus` generators of norm `+1` followed by `n_minus`
/// generators of norm `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    n_plus: usize,
    n_minus: usize,
}

impl Signature {
    pub fn new(n_plus: usize, n_minus: usize) -> Result<Self> {
        let n = n_plus + n_minus;
        if n > MAX_GENERATORS {
            return Err(CliffordError::TooManyGenerators(n));
        }
        Ok(Self { n_plus, n_minus })
    }

    /// Euclidean `R^n`.
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    /// Minkowski `R^{n,1}`; the timelike generator is the last one.
    pub fn lorentzian(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_minus
    }

    pub fn blade_count(&self) -> usize {
        1 << self.dim()
    }

    pub fn is_euclidean(&self) -> bool {
        self.n_minus == 0
    }

    /// Metric norm ε_i of generator `i` (0-based).
    pub fn metric(&self, i: usize) -> f64 {
        if i < self.n_plus {
            1.0
        } else {
            -1.0
        }
    }

    /// Metric inner product of two coordinate vectors.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(i, (a, b))| self.metric(i) * a * b)
            .sum()
    }

    fn plus_mask(&self) -> usize {
        (1 << self.n_plus) - 1
    }

    /// Sign of the product of basis blades `a` and `b` (the result blade is `a ^ b`).
    #[inline]
    pub fn blade_sign(&self, a: usize, b: usize) -> f64 {
        // Swaps needed to bring the concatenated factors into order.
        let mut swaps = 0u32;
        let mut x = a >> 1;
        while x != 0 {
            swaps += (x & b).count_ones();
            x >>= 1;
        }
        // Each repeated positive generator contributes e_i e_i = -1.
        swaps += (a & b & self.plus_mask()).count_ones();
        if swaps & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cl({},{})", self.n_plus, self.n_minus)
    }
}

/// Dense multivector.
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    sig: Signature,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(sig: Signature) -> Self {
        Self { sig, coeffs: vec![0.0; sig.blade_count()] }
    }

    pub fn scalar(sig: Signature, s: f64) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[0] = s;
        m
    }

    pub fn one(sig: Signature) -> Self {
        Self::scalar(sig, 1.0)
    }

    /// Builds a multivector from raw coefficients (length must be `2^N`).
    pub fn from_coeffs(sig: Signature, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), sig.blade_count(), "coefficient count for {sig}");
        Self { sig, coeffs }
    }

    /// Single blade `coef * e_mask`.
    pub fn blade(sig: Signature, mask: usize, coef: f64) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[mask] = coef;
        m
    }

    /// Generator `e_{i+1}`.
    pub fn basis_vector(sig: Signature, i: usize) -> Self {
        Self::blade(sig, 1 << i, 1.0)
    }

    /// Grade-1 element with the given components (shorter slices pad with zeros).
    pub fn vector(sig: Signature, comps: &[f64]) -> Self {
        assert!(comps.len() <= sig.dim());
        let mut m = Self::zero(sig);
        for (i, c) in comps.iter().enumerate() {
            m.coeffs[1 << i] = *c;
        }
        m
    }

    /// `Σ_{i<j} b_ij e_i e_j` from the strict upper triangle of `b`.
    pub fn bivector(sig: Signature, b: &DMatrix<f64>) -> Self {
        let mut m = Self::zero(sig);
        for i in 0..b.nrows() {
            for j in (i + 1)..b.ncols() {
                m.coeffs[(1 << i) | (1 << j)] += b[(i, j)];
            }
        }
        m
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    pub fn set_coeff(&mut self, mask: usize, value: f64) {
        self.coeffs[mask] = value;
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    /// Grade-1 coefficients in generator order.
    pub fn vector_part(&self) -> Vec<f64> {
        (0..self.sig.dim()).map(|i| self.coeffs[1 << i]).collect()
    }

    pub fn grade(&self, k: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| if m.count_ones() as usize == k { *c } else { 0.0 })
            .collect();
        Self { sig: self.sig, coeffs }
    }

    /// Grades carrying a coefficient above `tol` in absolute value.
    pub fn grades_present(&self, tol: f64) -> Vec<usize> {
        let mut g: Vec<usize> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(m, _)| m.count_ones() as usize)
            .collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Largest absolute coefficient among blades of odd grade.
    pub fn odd_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(m, _)| m.count_ones() % 2 == 1)
            .fold(0.0, |acc, (_, c)| acc.max(c.abs()))
    }

    /// Coefficient max-norm.
    pub fn norm_max(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Max-norm of everything except the scalar coefficient.
    pub fn non_scalar_norm(&self) -> f64 {
        self.coeffs[1..].iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_sig(&self, other: &Self) -> Result<()> {
        if self.sig != other.sig {
            return Err(CliffordError::SignatureMismatch(self.sig, other.sig));
        }
        Ok(())
    }

    /// Geometric product.
    pub fn geometric_product(&self, other: &Self) -> Result<Self> {
        self.check_sig(other)?;
        let mut out = vec![0.0; self.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                out[i ^ j] += self.sig.blade_sign(i, j) * a * b;
            }
        }
        Ok(Self { sig: self.sig, coeffs: out })
    }

    /// Reversion τ: reverses the order of vector factors.
    pub fn reverse(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| match m.count_ones() % 4 {
                0 | 1 => *c,
                _ => -*c,
            })
            .collect();
        Self { sig: self.sig, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { sig: self.sig, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Re-expresses this element in a larger algebra whose first generators
    /// coincide with ours.
    pub fn embed_into(&self, target: Signature) -> Result<Self> {
        if target.dim() < self.sig.dim()
            || (self.sig.n_minus > 0 && target.n_plus != self.sig.n_plus)
        {
            return Err(CliffordError::SignatureMismatch(self.sig, target));
        }
        let mut out = Self::zero(target);
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(out)
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if m != 0 {
                write!(f, "e")?;
                for i in 0..self.sig.dim() {
                    if m & (1 << i) != 0 {
                        write!(f, "{}", i + 1)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.sig, rhs.sig, "signature mismatch in add");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Multivector { sig: self.sig, coeffs }
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(self, rhs: Multivector) -> Multivector {
        &self + &rhs
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.sig, rhs.sig, "signature mismatch in add");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        assert_eq!(self.sig, rhs.sig, "signature mismatch in sub");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Multivector { sig: self.sig, coeffs }
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(self, rhs: Multivector) -> Multivector {
        &self - &rhs
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, s: f64) -> Multivector {
        self.scale(s)
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, s: f64) -> Multivector {
        self.scale(s)
    }
}

/// Geometric product. Panics on signature mismatch; use
/// [`Multivector::geometric_product`] for the fallible form.
impl Mul for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: &Multivector) -> Multivector {
        self.geometric_product(rhs).expect("geometric product")
    }
}

impl Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        &self * &rhs
    }
}

/// Free-function form of [`Multivector::geometric_product`].
pub fn geometric_product(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    a.geometric_product(b)
}

/// Free-function form of [`Multivector::reverse`].
pub fn reversion(a: &Multivector) -> Multivector {
    a.reverse()
}

/// The pairing `<<φ, ψ>> = τ(ψ) φ`.
pub fn brackets(phi: &Multivector, psi: &Multivector) -> Result<Multivector> {
    psi.reverse().geometric_product(phi)
}

/// Element of the spin group: even, with `τ(g) g = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinElement(Multivector);

/// Default tolerance for spin-group membership checks.
pub const SPIN_TOLERANCE: f64 = 1e-8;

impl SpinElement {
    /// Validates `value` against the spin-group invariants.
    pub fn new(value: Multivector, tol: f64) -> Result<Self> {
        let odd = value.odd_norm();
        if odd > tol {
            return Err(CliffordError::NotSpin(format!("odd part {odd:e}")));
        }
        let s = value.reverse().geometric_product(&value)?;
        let dev = (s.scalar_part() - 1.0).abs().max(s.non_scalar_norm());
        if dev > tol {
            return Err(CliffordError::NotSpin(format!("|τ(g)g - 1| = {dev:e}")));
        }
        Ok(Self(value))
    }

    /// Wraps a value known to satisfy the invariants by construction.
    pub(crate) fn new_unchecked(value: Multivector) -> Self {
        Self(value)
    }

    pub fn identity(sig: Signature) -> Self {
        Self(Multivector::one(sig))
    }

    pub fn value(&self) -> &Multivector {
        &self.0
    }

    pub fn into_value(self) -> Multivector {
        self.0
    }

    pub fn signature(&self) -> Signature {
        self.0.sig
    }

    /// `g⁻¹ = τ(g)`.
    pub fn inverse(&self) -> Self {
        Self(self.0.reverse())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.geometric_product(&other.0)?))
    }

    pub fn neg(&self) -> Self {
        Self(-&self.0)
    }

    /// `g v g⁻¹` for a grade-1 `v`.
    pub fn adjoint(&self, v: &Multivector) -> Result<Multivector> {
        let found = v.grades_present(0.0);
        if found.iter().any(|&g| g != 1) {
            return Err(CliffordError::WrongGrade { expected: "vector", found });
        }
        let out = self.0.geometric_product(v)?.geometric_product(&self.0.reverse())?;
        Ok(out.grade(1))
    }

    /// Matrix of `v ↦ g v g⁻¹` on the generator span; column `j` is the image of `e_j`.
    pub fn adjoint_matrix(&self) -> DMatrix<f64> {
        let sig = self.0.sig;
        let n = sig.dim();
        let rev = self.0.reverse();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let img = &(&self.0 * &Multivector::basis_vector(sig, j)) * &rev;
            for i in 0..n {
                m[(i, j)] = img.coeff(1 << i);
            }
        }
        m
    }
}

/// Exponential of a bivector by scaling and squaring a Taylor series.
pub fn exp_bivector(b: &Multivector) -> Result<SpinElement> {
    let found = b.grades_present(0.0);
    if found.iter().any(|&g| g != 2) {
        return Err(CliffordError::WrongGrade { expected: "bivector", found });
    }
    Ok(SpinElement::new_unchecked(exp_series(b)))
}

fn exp_series(b: &Multivector) -> Multivector {
    let norm = b.norm_max();
    let mut squarings = 0;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let x = b.scale(0.5f64.powi(squarings as i32));
    let sig = b.sig;
    let mut sum = Multivector::one(sig);
    let mut term = Multivector::one(sig);
    for k in 1..40 {
        term = (&term * &x).scale(1.0 / k as f64);
        sum += &term;
        if term.norm_max() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Lifts `R ∈ SO(N)` to a spin element `g` with `adjoint_matrix(g) = R`.
///
/// `R` is reduced to the identity by Givens rotations; each factor lifts to
/// `exp(θ/2 e_i e_j)`. The overall sign is the one obtained from the
/// factorisation and is not otherwise normalised.
pub fn spin_lift(sig: Signature, r: &DMatrix<f64>) -> Result<SpinElement> {
    if !sig.is_euclidean() {
        return Err(CliffordError::NonEuclidean(sig));
    }
    let n = sig.dim();
    if r.nrows() != n || r.ncols() != n {
        return Err(CliffordError::BadShape { rows: r.nrows(), cols: r.ncols(), dim: n });
    }
    let dev = (r.transpose() * r - DMatrix::<f64>::identity(n, n)).abs().max();
    if dev > 1e-8 {
        return Err(CliffordError::NotOrthogonal(dev));
    }
    let det = r.determinant();
    if det < 0.0 {
        return Err(CliffordError::OrientationReversing(det));
    }

    let mut work = r.clone();
    let mut g = Multivector::one(sig);
    for c in 0..n {
        for row in (c + 1)..n {
            let a = work[(c, c)];
            let b = work[(row, c)];
            if b == 0.0 && a >= 0.0 {
                continue;
            }
            let angle = b.atan2(a);
            // Undo a rotation by `angle` in the (c, row) plane.
            let (s, co) = angle.sin_cos();
            for k in 0..n {
                let x = work[(c, k)];
                let y = work[(row, k)];
                work[(c, k)] = co * x + s * y;
                work[(row, k)] = -s * x + co * y;
            }
            let plane = Multivector::blade(sig, (1 << c) | (1 << row), 0.5 * angle);
            g = &g * &exp_series(&plane);
        }
    }
    Ok(SpinElement::new_unchecked(g))
}

/// The graded tensor map `Cl_p ⊗ Cl_q → Cl_{p+q}`, `a ⊗ b ↦ a b` with the
/// generators of `Cl_q` shifted after those of `Cl_p`.
pub fn graded_tensor_embed(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    let (sa, sb) = (a.sig, b.sig);
    if sa.n_minus > 0 {
        return Err(CliffordError::NonEuclidean(sa));
    }
    let target = Signature::new(sa.n_plus + sb.n_plus, sb.n_minus)?;
    let p = sa.dim();
    let mut out = Multivector::zero(target);
    for (i, &x) in a.coeffs.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.coeffs.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            // Factors of `a` precede those of `b`, so the blade is already ordered.
            out.coeffs[i | (j << p)] += x * y;
        }
    }
    Ok(out)
}
