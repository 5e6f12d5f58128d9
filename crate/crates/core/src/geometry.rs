//! Complex projective points, unitary matrices and Haar sampling.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Homogeneous coordinates `(z_0, ..., z_n)`.
pub type ComplexVector = DVector<Complex64>;

/// Tolerance of the unitarity certificate checked at construction.
pub const UNITARITY_TOL: f64 = 1e-10;

const PHASE_PIVOT: f64 = 1e-9;

/// A point of complex projective space, stored as a unit representative
/// whose first non-negligible entry is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    rep: ComplexVector,
}

impl ProjectivePoint {
    pub fn new(v: ComplexVector) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let mut rep = v / Complex64::new(norm, 0.0);
        if let Some(pivot) = rep.iter().find(|z| z.norm() > PHASE_PIVOT).copied() {
            let phase = pivot.conj() / pivot.norm();
            rep *= phase;
            // the pivot is now real up to rounding; make it exactly so
            if let Some(z) = rep.iter_mut().find(|z| z.norm() > PHASE_PIVOT) {
                *z = Complex64::new(z.norm(), 0.0);
            }
        }
        Ok(Self { rep })
    }

    pub fn from_slice(coords: &[Complex64]) -> Result<Self> {
        Self::new(ComplexVector::from_column_slice(coords))
    }

    pub fn from_real(coords: &[f64]) -> Result<Self> {
        Self::new(ComplexVector::from_iterator(
            coords.len(),
            coords.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    pub fn representative(&self) -> &ComplexVector {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }
}

/// Fubini-Study angle `arccos |<p, q>|` in `[0, pi/2]`.
///
/// Evaluated through the chord between phase-aligned representatives so
/// that nearby points keep full relative precision.
pub fn projective_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> f64 {
    complex_ray_distance(p.representative(), q.representative())
}

pub(crate) fn complex_ray_distance(p: &ComplexVector, q: &ComplexVector) -> f64 {
    let pn = p.norm();
    let qn = q.norm();
    let inner = q.dotc(p) / (pn * qn);
    let modulus = inner.norm();
    if modulus == 0.0 {
        return PI / 2.0;
    }
    let phase = inner / modulus;
    let chord = (p / Complex64::new(pn, 0.0) - q * (phase / qn)).norm();
    (2.0 * (0.5 * chord).min(1.0).asin()).min(PI / 2.0)
}

/// Same metric for real lines (points of real projective space).
pub(crate) fn real_ray_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let a = a / a.norm();
    let b = b / b.norm();
    let chord = (&a - &b).norm().min((&a + &b).norm());
    (2.0 * (0.5 * chord).min(1.0).asin()).min(PI / 2.0)
}

/// An `(n+1) x (n+1)` unitary matrix, certified at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let deviation = unitarity_deviation(&m);
        if !(deviation <= UNITARITY_TOL) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    /// `diag(e^{i phase_0}, ..., e^{i phase_n})`.
    pub fn diagonal_phases(phases: &[f64]) -> Self {
        let d = DVector::from_iterator(phases.len(), phases.iter().map(|&t| Complex64::from_polar(1.0, t)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    pub fn from_real_orthogonal(r: &DMatrix<f64>) -> Result<Self> {
        Self::new(r.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    /// Product of two unitaries; re-certified to guard accumulated rounding.
    pub fn mul(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        UnitaryMatrix::new(&self.m * &other.m)
    }

    /// Image `[g a]` of a real coefficient vector.
    pub fn apply_real(&self, a: &DVector<f64>) -> ComplexVector {
        &self.m * a.map(|x| Complex64::new(x, 0.0))
    }
}

/// `max |(M^H M - I)_{jk}|`.
pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    let prod = m.adjoint() * m;
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((prod[(j, k)] - Complex64::new(target, 0.0)).norm());
        }
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return f64::INFINITY;
    }
    worst
}

/// Haar-distributed element of `U(dim)`.
///
/// Draws a complex Ginibre matrix, takes its QR factorisation and multiplies
/// column `j` of `Q` by the phase of `R_jj`, which makes the factorisation
/// unique (positive diagonal) and the law of `Q` exactly Haar.
pub fn haar_unitary(dim: usize, state: &RngState) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("haar_unitary needs dim >= 2, got {dim}")));
    }
    let mut rng = state.rng();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let modulus = d.norm();
        let phase = if modulus > 0.0 { d / modulus } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(q)
}

/// `Gamma(k / 2)` for a positive integer `k`, by exact recurrence from
/// `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "gamma_half is defined for k >= 1");
    let (mut value, mut arg) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// `vol(RP^n) = pi^((n+1)/2) / Gamma((n+1)/2)`: half the area of the unit `n`-sphere.
pub fn vol_rpn(n: u32) -> f64 {
    assert!(n >= 1, "vol_rpn needs n >= 1");
    PI.powf((n as f64 + 1.0) / 2.0) / gamma_half(n + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn canonical_phase() {
        let p = ProjectivePoint::from_slice(&[Complex64::new(0.0, 2.0), Complex64::new(1.0, 1.0)]).unwrap();
        let rep = p.representative();
        assert!((rep.norm() - 1.0).abs() < 1e-12);
        assert_eq!(rep[0].im, 0.0);
        assert!(rep[0].re > 0.0);

        let q = ProjectivePoint::from_slice(&[c(0.0), Complex64::new(0.0, -3.0)]).unwrap();
        assert_eq!(q.representative()[1], c(1.0));
        assert_eq!(ProjectivePoint::from_real(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn distance_examples() {
        let e0 = ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let e1 = ProjectivePoint::from_real(&[0.0, 1.0, 0.0]).unwrap();
        let diag = ProjectivePoint::from_real(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(projective_distance(&e0, &e0), 0.0);
        assert!((projective_distance(&e0, &e1) - PI / 2.0).abs() < 1e-15);
        assert!((projective_distance(&e0, &diag) - FRAC_PI_4).abs() < 1e-15);
        // phase does not matter
        let phased = ProjectivePoint::from_slice(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0), c(0.0)]).unwrap();
        assert!(projective_distance(&diag, &phased) < 1e-15);
    }

    #[test]
    fn gamma_and_volumes() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
        assert!((vol_rpn(1) - PI).abs() < 1e-14);
        assert!((vol_rpn(2) - 2.0 * PI).abs() < 1e-14);
        assert!((vol_rpn(3) - PI * PI).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 0)] = c(1.1);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary { .. })));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(UnitaryMatrix::new(rect), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let s = RngState::new(11, 5);
        let u = haar_unitary(3, &s).unwrap();
        assert!(unitarity_deviation(u.matrix()) <= UNITARITY_TOL);
        let v = haar_unitary(3, &s).unwrap();
        assert_eq!(u, v);
        assert!(haar_unitary(1, &s).is_err());
    }
}
