//! `RP^n ∩ g RP^n`, used to calibrate the Crofton constant.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{canonical_real, CountResult};
use crate::geometry::UnitaryMatrix;

/// Eigenvalues of `g^H conj(g)` closer than this are treated as repeated.
pub const EIGEN_GAP_TOL: f64 = 1e-8;

const PROBE_ANGLES: usize = 8;

/// Count `RP^n ∩ g RP^n`.
///
/// A point `g b` (`b` real) lies in `RP^n` iff `conj(g b)` is a phase times
/// `g b`, i.e. iff `b` is an eigenvector of the symmetric unitary matrix
/// `N = g^H conj(g)`. Real and imaginary parts of `N` are commuting real
/// symmetric matrices, so a generic real combination of them exposes a real
/// orthonormal eigenbasis. Each simple eigenvalue gives one intersection
/// point; repeated eigenvalues mean a positive-dimensional intersection and
/// set `degenerate`. `min_jacobian_sigma` carries the smallest eigenvalue gap.
pub fn count_rpn_rpn(g: &UnitaryMatrix) -> CountResult {
    let dim = g.dim();
    let gm = g.matrix();
    let big_n: DMatrix<Complex64> = gm.adjoint() * gm.map(|z| z.conj());
    let sym = (&big_n + big_n.transpose()) * Complex64::new(0.5, 0.0);
    let re = sym.map(|z| z.re);
    let im = sym.map(|z| z.im);

    let eig = (0..PROBE_ANGLES)
        .map(|k| {
            let angle = std::f64::consts::PI * (k as f64 + 0.5) / PROBE_ANGLES as f64;
            let s = &re * angle.cos() + &im * angle.sin();
            let eig = SymmetricEigen::new(s);
            let gap = min_gap_real(eig.eigenvalues.as_slice());
            (gap, eig)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e)
        .expect("at least one probe angle");

    let vectors: Vec<DVector<f64>> = (0..dim).map(|k| eig.eigenvectors.column(k).into_owned()).collect();
    let values: Vec<Complex64> = vectors
        .iter()
        .map(|v| {
            let vc = v.map(|x| Complex64::new(x, 0.0));
            vc.dotc(&(&sym * &vc))
        })
        .collect();

    let mut witnesses = Vec::new();
    let mut min_gap = f64::INFINITY;
    for (k, v) in vectors.iter().enumerate() {
        let gap = values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, w)| (values[k] - w).norm())
            .fold(f64::INFINITY, f64::min);
        min_gap = min_gap.min(gap);
        if gap > EIGEN_GAP_TOL {
            witnesses.push(canonical_real(v).iter().copied().collect::<Vec<f64>>());
        }
    }
    let degenerate = witnesses.len() != dim;
    CountResult {
        count: witnesses.len(),
        witnesses,
        transverse: !degenerate,
        min_jacobian_sigma: if min_gap.is_finite() { min_gap } else { 0.0 },
        degenerate,
    }
}

fn min_gap_real(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{haar_unitary, ProjectivePoint};
    use crate::rng::RngState;

    #[test]
    fn identity_is_degenerate() {
        let res = count_rpn_rpn(&UnitaryMatrix::identity(3));
        assert!(res.degenerate);
        assert!(!res.transverse);
    }

    #[test]
    fn diagonal_phases_give_coordinate_points() {
        let g = UnitaryMatrix::diagonal_phases(&[0.1, 0.7, 1.3, 2.0]);
        let res = count_rpn_rpn(&g);
        assert!(!res.degenerate);
        assert_eq!(res.count, 4);
        for w in &res.witnesses {
            let big = w.iter().filter(|x| x.abs() > 1e-12).count();
            assert_eq!(big, 1);
        }
    }

    #[test]
    fn witnesses_are_real_points() {
        for k in 0..100 {
            let g = haar_unitary(3, &RngState::new(5, k)).unwrap();
            let res = count_rpn_rpn(&g);
            assert_eq!(res.count, 3);
            for x in res.points(&g) {
                let p = ProjectivePoint::new(x).unwrap();
                assert!(p.representative().iter().all(|z| z.im.abs() < 1e-10));
            }
        }
    }
}
