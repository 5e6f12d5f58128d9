//! Multistart damped Newton for common real zeros of a quadric system.

use nalgebra::{Const, DVector, DimMin, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{admissible_count, canonical_real, certify, insert_unique, CountResult, QuadricSystem};
use crate::error::{Error, Result};
use crate::rng::RngState;

pub const DEFAULT_STARTS_PER_DIM: usize = 200;
/// Largest `n` accepted by the multistart counter.
pub const MAX_MULTISTART_N: usize = 5;

const CONVERGED: f64 = 1e-12;
const ACCEPTED: f64 = 1e-9;
const MAX_ITERS: usize = 60;
/// Extra rounds of starts granted when a round ends on an inadmissible count.
const EXTRA_ROUNDS: usize = 4;

/// Count common real projective zeros of `sys` by damped Newton from
/// `starts_per_dim * 2^n` uniform starts on the unit sphere.
///
/// Completeness is heuristic for `n >= 3`. A round that ends with an odd or
/// out-of-range count is followed by further rounds of the same size (at most
/// four); the search also stops early once the Bezout bound `2^n` is reached.
pub fn count_clifford_multistart(sys: &QuadricSystem, starts_per_dim: usize, rng: &RngState) -> Result<CountResult> {
    let n = sys.n();
    if !(1..=MAX_MULTISTART_N).contains(&n) {
        return Err(Error::InvalidArgument(format!("multistart supports 1 <= n <= {MAX_MULTISTART_N}, got {n}")));
    }
    if starts_per_dim < 100 {
        return Err(Error::InvalidArgument(format!("starts_per_dim must be >= 100, got {starts_per_dim}")));
    }
    match n {
        1 => run::<2>(sys, starts_per_dim, rng),
        2 => run::<3>(sys, starts_per_dim, rng),
        3 => run::<4>(sys, starts_per_dim, rng),
        4 => run::<5>(sys, starts_per_dim, rng),
        _ => run::<6>(sys, starts_per_dim, rng),
    }
}

fn run<const M: usize>(sys: &QuadricSystem, starts_per_dim: usize, state: &RngState) -> Result<CountResult>
where
    Const<M>: DimMin<Const<M>, Output = Const<M>>,
{
    let n = M - 1;
    let forms: Vec<SMatrix<f64, M, M>> = sys
        .forms()
        .iter()
        .map(|q| SMatrix::<f64, M, M>::from_fn(|i, j| q[(i, j)]))
        .collect();
    let newton = Newton::<M> { forms };
    let bezout = 1usize << n;
    let round = starts_per_dim << n;

    let mut rng = state.rng();
    let mut roots: Vec<DVector<f64>> = Vec::new();
    let mut attempted = 0usize;
    let mut failed = 0usize;

    for _ in 0..=EXTRA_ROUNDS {
        for _ in 0..round {
            if roots.len() >= bezout {
                break;
            }
            let start = SVector::<f64, M>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            attempted += 1;
            match newton.solve(start) {
                Some(x) => {
                    insert_unique(&mut roots, canonical_real(&DVector::from_column_slice(x.as_slice())));
                }
                None => failed += 1,
            }
        }
        if roots.len() >= bezout || admissible_count(n, roots.len()) {
            break;
        }
    }

    if failed * 100 > attempted * 99 {
        return Err(Error::BudgetExceeded(format!("Newton failed from {failed} of {attempted} starts")));
    }
    if roots.len() > bezout {
        return Err(Error::Degenerate(format!("{} roots exceed the Bezout bound {bezout}", roots.len())));
    }
    certify(sys, roots)
}

struct Newton<const M: usize> {
    /// The `n = M - 1` forms; the last equation is `|x|^2 = 1`.
    forms: Vec<SMatrix<f64, M, M>>,
}

impl<const M: usize> Newton<M>
where
    Const<M>: DimMin<Const<M>, Output = Const<M>>,
{
    fn residual(&self, x: &SVector<f64, M>) -> SVector<f64, M> {
        let mut f = SVector::<f64, M>::zeros();
        for (i, q) in self.forms.iter().enumerate() {
            f[i] = x.dot(&(q * x));
        }
        f[M - 1] = x.norm_squared() - 1.0;
        f
    }

    fn jacobian(&self, x: &SVector<f64, M>) -> SMatrix<f64, M, M> {
        let mut jac = SMatrix::<f64, M, M>::zeros();
        for (i, q) in self.forms.iter().enumerate() {
            jac.set_row(i, &(q * x * 2.0).transpose());
        }
        jac.set_row(M - 1, &(x * 2.0).transpose());
        jac
    }

    fn solve(&self, mut x: SVector<f64, M>) -> Option<SVector<f64, M>> {
        let mut f = self.residual(&x);
        let mut norm = f.amax();
        for _ in 0..MAX_ITERS {
            if norm <= CONVERGED {
                break;
            }
            let step = self.jacobian(&x).lu().solve(&f)?;
            if !step.iter().all(|s| s.is_finite()) {
                return None;
            }
            let mut t = 1.0;
            loop {
                let trial = x - step * t;
                let ft = self.residual(&trial);
                let nt = ft.amax();
                if nt < (1.0 - 1e-4 * t) * norm || t < 1.0 / 64.0 {
                    x = trial;
                    f = ft;
                    norm = nt;
                    break;
                }
                t *= 0.5;
            }
        }
        (norm <= ACCEPTED).then_some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitaryMatrix;
    use crate::intersection::{clifford_quadric_system, count_conic_pencil};

    #[test]
    fn identity_three_gives_eight() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(4)).unwrap();
        let res = count_clifford_multistart(&sys, DEFAULT_STARTS_PER_DIM, &RngState::new(1, 0)).unwrap();
        assert_eq!(res.count, 8);
        let s = 0.5;
        for w in &res.witnesses {
            assert!((w[0] - s).abs() < 1e-12);
            assert!(w.iter().all(|x| (x.abs() - s).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_two_matches_pencil() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(3)).unwrap();
        let ms = count_clifford_multistart(&sys, DEFAULT_STARTS_PER_DIM, &RngState::new(2, 0)).unwrap();
        let pencil = count_conic_pencil(&sys).unwrap();
        assert_eq!(ms.count, 4);
        assert!(ms.same_witnesses(&pencil, 1e-6));
    }

    #[test]
    fn guards() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(3)).unwrap();
        assert!(count_clifford_multistart(&sys, 50, &RngState::new(0, 0)).is_err());
        let big = clifford_quadric_system(&UnitaryMatrix::identity(7)).unwrap();
        assert!(count_clifford_multistart(&big, 200, &RngState::new(0, 0)).is_err());
    }
}
