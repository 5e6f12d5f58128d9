//! Counting `T^n ∩ g RP^n` (Clifford torus against a rotated real
//! projective space) and `RP^n ∩ g RP^n`.
//!
//! Writing a point of `g RP^n` as `x = g a` with `a` real, the torus
//! condition `|x_0|^2 = ... = |x_n|^2` becomes `n` real quadratic equations
//! `a^T Q_i a = 0`, with `Q_i = Re(H_i - H_0)` and `(H_m)_{jk} = g_{mj} conj(g_{mk})`.
//! Intersection points are therefore common zeros of a [`QuadricSystem`] in
//! `RP^n`. For `n = 2` these are counted exactly by the conic pencil method
//! ([`count_conic_pencil`]); for general `n` by multistart Newton
//! ([`count_clifford_multistart`]).

mod multistart;
mod pencil;
mod rpn;

pub use multistart::{count_clifford_multistart, DEFAULT_STARTS_PER_DIM, MAX_MULTISTART_N};
pub use pencil::count_conic_pencil;
pub use rpn::{count_rpn_rpn, EIGEN_GAP_TOL};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::min_intersections;
use crate::error::{Error, Result};
use crate::geometry::{real_ray_distance, UnitaryMatrix};
use crate::rng::RngState;

/// Witnesses closer than this (Fubini-Study angle) are the same point.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Smallest Jacobian singular value accepted as transverse.
pub const TRANSVERSALITY_TOL: f64 = 1e-7;
/// Maximal `|a^T Q_i a|` for an accepted witness.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;

/// `n` real symmetric `(n+1) x (n+1)` forms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricSystem {
    forms: Vec<DMatrix<f64>>,
}

impl QuadricSystem {
    pub fn new(forms: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = forms.len();
        if n == 0 {
            return Err(Error::InvalidArgument("a quadric system needs at least one form".into()));
        }
        for q in &forms {
            if q.nrows() != n + 1 || q.ncols() != n + 1 {
                return Err(Error::DimensionMismatch { expected: n + 1, found: q.nrows().max(q.ncols()) });
            }
            let asym = (q - q.transpose()).amax();
            if !(asym <= SYMMETRY_TOL) {
                return Err(Error::InvalidArgument(format!("form is not symmetric (asymmetry {asym:.3e})")));
            }
        }
        Ok(Self { forms })
    }

    /// Dimension of the ambient real projective space.
    pub fn n(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[DMatrix<f64>] {
        &self.forms
    }

    /// `a^T Q_i a` for every form.
    pub fn evaluate(&self, a: &DVector<f64>) -> Vec<f64> {
        self.forms.iter().map(|q| a.dot(&(q * a))).collect()
    }

    /// Largest `|a^T Q_i a|` at the unit representative of `a`.
    pub fn max_residual(&self, a: &DVector<f64>) -> f64 {
        let unit = a / a.norm();
        self.evaluate(&unit).into_iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Smallest singular value of the Jacobian of `a -> (a^T Q_i a)_i`
    /// restricted to the tangent space of the unit sphere at `a`.
    pub fn jacobian_sigma(&self, a: &DVector<f64>) -> f64 {
        let unit = a / a.norm();
        let m = self.n() + 1;
        let projector = DMatrix::<f64>::identity(m, m) - &unit * unit.transpose();
        let mut jac = DMatrix::<f64>::zeros(self.n(), m);
        for (i, q) in self.forms.iter().enumerate() {
            let row = (&projector * (q * &unit)) * 2.0;
            jac.set_row(i, &row.transpose());
        }
        jac.singular_values().iter().fold(f64::INFINITY, |m, &s| m.min(s))
    }
}

/// The quadric system whose real projective zeros are `T^n ∩ g RP^n`.
pub fn clifford_quadric_system(g: &UnitaryMatrix) -> Result<QuadricSystem> {
    let dim = g.dim();
    if dim < 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: dim });
    }
    let m = g.matrix();
    let hermitian_row = |row: usize| -> DMatrix<f64> {
        DMatrix::from_fn(dim, dim, |j, k| (m[(row, j)] * m[(row, k)].conj()).re)
    };
    let base = hermitian_row(0);
    let forms = (1..dim)
        .map(|row| {
            let q = hermitian_row(row) - &base;
            // exact symmetry; Re(H) is symmetric up to rounding
            (&q + q.transpose()) * 0.5
        })
        .collect();
    QuadricSystem::new(forms)
}

/// One intersection count with its witnesses.
///
/// Witnesses are real coefficient vectors `a` (unit norm, first significant
/// entry positive); the corresponding point of complex projective space is `[g a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: usize,
    pub witnesses: Vec<Vec<f64>>,
    pub transverse: bool,
    pub min_jacobian_sigma: f64,
    pub degenerate: bool,
}

impl CountResult {
    pub fn witness_vectors(&self) -> Vec<DVector<f64>> {
        self.witnesses.iter().map(|w| DVector::from_column_slice(w)).collect()
    }

    /// Points `[g a]` of complex projective space.
    pub fn points(&self, g: &UnitaryMatrix) -> Vec<DVector<Complex64>> {
        self.witness_vectors().iter().map(|a| g.apply_real(a)).collect()
    }

    /// True when both results have the same count and their witness sets
    /// match point for point within `tol`.
    pub fn same_witnesses(&self, other: &CountResult, tol: f64) -> bool {
        if self.count != other.count {
            return false;
        }
        let theirs = other.witness_vectors();
        self.witness_vectors()
            .iter()
            .all(|a| theirs.iter().any(|b| real_ray_distance(a, b) <= tol))
    }
}

/// Which counter to run for `T^n ∩ g RP^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMethod {
    /// Pencil for `n = 2`, multistart otherwise.
    #[default]
    Auto,
    Pencil,
    Multistart,
}

/// Count `T^n ∩ g RP^n` with the requested method.
pub fn count_clifford(
    g: &UnitaryMatrix,
    method: CountMethod,
    starts_per_dim: usize,
    rng: &RngState,
) -> Result<CountResult> {
    let sys = clifford_quadric_system(g)?;
    match method {
        CountMethod::Pencil => count_conic_pencil(&sys),
        CountMethod::Auto if sys.n() == 2 => count_conic_pencil(&sys),
        _ => count_clifford_multistart(&sys, starts_per_dim, rng),
    }
}

/// Unit representative with the first significant entry positive.
pub(crate) fn canonical_real(a: &DVector<f64>) -> DVector<f64> {
    let mut unit = a / a.norm();
    if let Some(&pivot) = unit.iter().find(|x| x.abs() > 1e-9) {
        if pivot < 0.0 {
            unit.neg_mut();
        }
    }
    unit
}

/// Add `a` unless it lies within [`DEDUP_RADIUS`] of a stored root.
pub(crate) fn insert_unique(roots: &mut Vec<DVector<f64>>, a: DVector<f64>) -> bool {
    if roots.iter().any(|r| real_ray_distance(r, &a) <= DEDUP_RADIUS) {
        false
    } else {
        roots.push(a);
        true
    }
}

/// Certify a finished root set: residuals, transversality, admissible range.
pub(crate) fn certify(sys: &QuadricSystem, roots: Vec<DVector<f64>>) -> Result<CountResult> {
    let n = sys.n();
    let mut sigma = f64::INFINITY;
    for a in &roots {
        let res = sys.max_residual(a);
        if !(res <= WITNESS_RESIDUAL_TOL) {
            return Err(Error::Degenerate(format!("witness residual {res:.3e} above tolerance")));
        }
        sigma = sigma.min(sys.jacobian_sigma(a));
    }
    if roots.is_empty() {
        sigma = 0.0;
    }
    if !roots.is_empty() && !(sigma > TRANSVERSALITY_TOL) {
        return Err(Error::Degenerate(format!(
            "non-transverse intersection (smallest Jacobian singular value {sigma:.3e})"
        )));
    }
    let count = roots.len();
    if !admissible_count(n, count) {
        return Err(Error::ParityViolation { n, count });
    }
    Ok(CountResult {
        count,
        witnesses: roots.iter().map(|a| a.iter().copied().collect()).collect(),
        transverse: true,
        min_jacobian_sigma: sigma,
        degenerate: false,
    })
}

/// Even and inside `[2^ceil(n/2), 2^n]`.
pub fn admissible_count(n: usize, count: usize) -> bool {
    let lo = min_intersections(n as u32) as usize;
    let hi = 1usize << n;
    count.is_multiple_of(2) && (lo..=hi).contains(&count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::haar_unitary;

    #[test]
    fn identity_forms() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(3)).unwrap();
        let q1 = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 0.0]));
        let q2 = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0, 1.0]));
        assert_eq!(sys.forms(), &[q1, q2]);
    }

    #[test]
    fn diagonal_phases_cancel() {
        let d = UnitaryMatrix::diagonal_phases(&[0.3, -1.2, 2.5]);
        let a = clifford_quadric_system(&d).unwrap();
        let b = clifford_quadric_system(&UnitaryMatrix::identity(3)).unwrap();
        for (x, y) in a.forms().iter().zip(b.forms()) {
            assert!((x - y).amax() < 1e-15);
        }
    }

    #[test]
    fn forms_are_traceless() {
        for k in 0..50 {
            let g = haar_unitary(3, &RngState::new(3, k)).unwrap();
            for q in clifford_quadric_system(&g).unwrap().forms() {
                assert!(q.trace().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_forms() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(QuadricSystem::new(vec![asym]).is_err());
        let wrong = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(QuadricSystem::new(vec![wrong]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn admissible_ranges() {
        assert!(admissible_count(2, 2) && admissible_count(2, 4));
        assert!(!admissible_count(2, 3) && !admissible_count(2, 0) && !admissible_count(2, 6));
        assert!(admissible_count(3, 4) && admissible_count(3, 6) && admissible_count(3, 8));
        assert!(!admissible_count(3, 2));
        assert!(admissible_count(1, 2) && !admissible_count(1, 4));
    }
}
