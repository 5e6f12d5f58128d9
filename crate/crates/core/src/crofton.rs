//! Monte Carlo estimation of intersection-count laws under Haar measure.
//!
//! Trial `k` of a run draws `g` from the stream `(seed, k)`; a degenerate
//! trial is redrawn from `(seed, k, retry)`. The tally only depends on
//! `(n, samples, seed)`, never on the execution schedule.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bounds::{expected_count, expected_count_stirling, min_intersections};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{haar_unitary, UnitaryMatrix};
use crate::intersection::{count_clifford, CountMethod, CountResult, DEFAULT_STARTS_PER_DIM};
use crate::rng::RngState;

/// Resamples allowed for a single trial before giving up.
pub const MAX_RESAMPLES: u64 = 100;
/// Largest `n` accepted by [`run_clifford_trials`].
pub const MAX_TRIAL_N: usize = 4;

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Histogram of intersection counts over a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub samples: u64,
    pub histogram: BTreeMap<usize, u64>,
    pub degenerate_resamples: u64,
    pub seed: u64,
}

impl Tally {
    pub fn empty(n: usize, seed: u64) -> Self {
        Self { n, samples: 0, histogram: BTreeMap::new(), degenerate_resamples: 0, seed }
    }

    pub fn record(&mut self, count: usize, resamples: u64) {
        *self.histogram.entry(count).or_insert(0) += 1;
        self.samples += 1;
        self.degenerate_resamples += resamples;
    }

    /// Commutative merge of two partial tallies of the same run.
    pub fn merge(mut self, other: &Tally) -> Tally {
        for (&k, &v) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        self.samples += other.samples;
        self.degenerate_resamples += other.degenerate_resamples;
        self
    }

    pub fn mean(&self) -> f64 {
        self.histogram.iter().map(|(&k, &v)| k as f64 * v as f64).sum::<f64>() / self.samples as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOptions {
    pub starts_per_dim: usize,
    pub execution: Execution,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self { starts_per_dim: DEFAULT_STARTS_PER_DIM, execution: Execution::default() }
    }
}

/// Tally `#(T^n ∩ g RP^n)` over `samples` Haar-random `g` (pencil method for
/// `n = 2`, multistart otherwise).
pub fn run_clifford_trials(n: usize, samples: u64, seed: u64) -> Result<Tally> {
    run_clifford_trials_with(n, samples, seed, TrialOptions::default())
}

pub fn run_clifford_trials_with(n: usize, samples: u64, seed: u64, options: TrialOptions) -> Result<Tally> {
    if !(1..=MAX_TRIAL_N).contains(&n) {
        return Err(Error::InvalidArgument(format!("trials support 1 <= n <= {MAX_TRIAL_N}, got {n}")));
    }
    let starts = options.starts_per_dim;
    run_trials(n, samples, seed, options.execution, move |g, state| {
        count_clifford(g, CountMethod::Auto, starts, &state.derive(1))
    })
}

/// Generic trial driver: `counter` maps a Haar-random `g` to an intersection
/// count. This is the hook for statistics of other Lagrangians against the
/// family `g RP^n` (supply a counter for the Lagrangian of interest).
pub fn run_trials<F>(n: usize, samples: u64, seed: u64, execution: Execution, counter: F) -> Result<Tally>
where
    F: Fn(&UnitaryMatrix, &RngState) -> Result<CountResult> + Sync + Send,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let len = usize::try_from(samples).map_err(|_| Error::InvalidArgument("too many samples".into()))?;
    let outcomes = execution.map_indexed(len, |k| single_trial(n, seed, k as u64, &counter));
    let mut tally = Tally::empty(n, seed);
    for outcome in outcomes {
        let (count, resamples) = outcome?;
        tally.record(count, resamples);
    }
    Ok(tally)
}

fn single_trial<F>(n: usize, seed: u64, k: u64, counter: &F) -> Result<(usize, u64)>
where
    F: Fn(&UnitaryMatrix, &RngState) -> Result<CountResult>,
{
    let base = RngState::new(seed, k);
    for retry in 0..=MAX_RESAMPLES {
        let state = base.retry(retry);
        let g = haar_unitary(n + 1, &state)?;
        match counter(&g, &state) {
            Ok(res) if !res.degenerate => return Ok((res.count, retry)),
            Ok(_) | Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BudgetExceeded(format!("trial {k} stayed degenerate after {MAX_RESAMPLES} resamples")))
}

/// Point estimate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(successes: u64, trials: u64) -> ProbabilityEstimate {
    let nn = trials as f64;
    let p = successes as f64 / nn;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nn;
    let center = (p + z2 / (2.0 * nn)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)).sqrt() / denom;
    ProbabilityEstimate { estimate: p, lower: (center - half).max(0.0), upper: (center + half).min(1.0) }
}

/// Empirical law of a [`Tally`] together with the closed-form mean and the
/// surplusection statistics relative to the minimal count `2^ceil(n/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub histogram: BTreeMap<usize, u64>,
    pub degenerate_resamples: u64,
    pub probabilities: BTreeMap<usize, ProbabilityEstimate>,
    /// `P(count >= m)` for each observed `m`.
    pub tail_probabilities: BTreeMap<usize, f64>,
    pub mean: f64,
    pub mean_std_error: f64,
    pub expected_mean: f64,
    /// `2^(c n)` with `c = log2(2 pi / e) / 2`, for reference only.
    pub stirling_mean: f64,
    pub min_intersections: u64,
    pub mean_surplusection: f64,
    #[serde(rename = "ss_locus_measure")]
    pub surplusection_locus_measure: f64,
    /// Frequencies are Monte Carlo estimates, not exact values.
    pub empirical: bool,
    /// Counts came from the heuristic multistart counter.
    pub multistart_caveat: bool,
}

pub fn distribution_report(t: &Tally) -> Result<DistributionReport> {
    if t.samples == 0 {
        return Err(Error::InvalidArgument("empty tally".into()));
    }
    let total = t.samples as f64;
    let probabilities = t.histogram.iter().map(|(&k, &v)| (k, wilson_interval(v, t.samples))).collect();

    let mut tail_probabilities = BTreeMap::new();
    let mut above = 0u64;
    for (&k, &v) in t.histogram.iter().rev() {
        above += v;
        tail_probabilities.insert(k, above as f64 / total);
    }

    let mean = t.mean();
    let var = if t.samples > 1 {
        t.histogram.iter().map(|(&k, &v)| v as f64 * (k as f64 - mean).powi(2)).sum::<f64>() / (total - 1.0)
    } else {
        0.0
    };
    let minimal = min_intersections(t.n as u32);
    let surplus: u64 = t.histogram.iter().filter(|(&k, _)| k as u64 > minimal).map(|(_, &v)| v).sum();
    Ok(DistributionReport {
        n: t.n,
        samples: t.samples,
        seed: t.seed,
        histogram: t.histogram.clone(),
        degenerate_resamples: t.degenerate_resamples,
        probabilities,
        tail_probabilities,
        mean,
        mean_std_error: (var / total).sqrt(),
        expected_mean: expected_count(t.n as u32),
        stirling_mean: expected_count_stirling(t.n as u32),
        min_intersections: minimal,
        mean_surplusection: mean - minimal as f64,
        surplusection_locus_measure: surplus as f64 / total,
        empirical: true,
        multistart_caveat: t.n != 2,
    })
}

/// Exact law of `#(T^2 ∩ g RP^2)`: `{2: 2 - pi/sqrt 3, 4: pi/sqrt 3 - 1}`.
pub fn exact_law_n2() -> BTreeMap<usize, f64> {
    let r = std::f64::consts::PI / 3f64.sqrt();
    BTreeMap::from([(2, 2.0 - r), (4, r - 1.0)])
}

/// Pearson chi-square p-value of `t` against `reference`.
///
/// Observed counts outside the support of `reference` give a p-value of 0.
pub fn chi_square_consistency(t: &Tally, reference: &BTreeMap<usize, f64>) -> Result<f64> {
    let total_p: f64 = reference.values().sum();
    if (total_p - 1.0).abs() > 1e-9 || reference.values().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidArgument(format!("reference probabilities sum to {total_p}")));
    }
    if t.samples == 0 {
        return Err(Error::InvalidArgument("empty tally".into()));
    }
    let nn = t.samples as f64;
    let support: Vec<(usize, f64)> = reference.iter().filter(|(_, &p)| p > 0.0).map(|(&k, &p)| (k, p)).collect();
    let min_expected = support.iter().map(|(_, p)| p * nn).fold(f64::INFINITY, f64::min);
    if min_expected < 5.0 {
        return Err(Error::InsufficientCells { min_expected });
    }
    if t.histogram.iter().any(|(k, &v)| v > 0 && !support.iter().any(|(s, _)| s == k)) {
        return Ok(0.0);
    }
    let stat: f64 = support
        .iter()
        .map(|&(k, p)| {
            let observed = *t.histogram.get(&k).unwrap_or(&0) as f64;
            let expected = p * nn;
            (observed - expected).powi(2) / expected
        })
        .sum();
    let df = support.len() - 1;
    if df == 0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(n: usize, hist: &[(usize, u64)]) -> Tally {
        let mut t = Tally::empty(n, 0);
        for &(k, v) in hist {
            for _ in 0..v {
                t.record(k, 0);
            }
        }
        t
    }

    #[test]
    fn all_minimal_tally() {
        let r = distribution_report(&tally(2, &[(2, 50)])).unwrap();
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.mean_surplusection, 0.0);
        assert_eq!(r.surplusection_locus_measure, 0.0);
        assert_eq!(r.mean_std_error, 0.0);
    }

    #[test]
    fn report_fields() {
        let r = distribution_report(&tally(2, &[(2, 20), (4, 80)])).unwrap();
        assert!((r.mean - 3.6).abs() < 1e-15);
        assert!((r.mean_surplusection - 1.6).abs() < 1e-15);
        assert!((r.surplusection_locus_measure - 0.8).abs() < 1e-15);
        let psum: f64 = r.probabilities.values().map(|p| p.estimate).sum();
        assert!((psum - 1.0).abs() < 1e-12);
        assert!((r.expected_mean - 2.0 * std::f64::consts::PI / 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(r.tail_probabilities[&2], 1.0);
        assert!((r.tail_probabilities[&4] - 0.8).abs() < 1e-15);
        // sample variance 0.64 * 100/99
        assert!((r.mean_std_error - (0.64f64 * 100.0 / 99.0 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wilson_values() {
        // p = 0.5, N = 100: center 0.5, half width z*sqrt(0.0025 + z^2/40000)/(1 + z^2/100)
        let w = wilson_interval(50, 100);
        let z = WILSON_Z;
        let half = z * (0.0025f64 + z * z / 40000.0).sqrt() / (1.0 + z * z / 100.0);
        assert!((w.lower - (0.5 - half)).abs() < 1e-15);
        assert!((w.upper - (0.5 + half)).abs() < 1e-15);
        let zero = wilson_interval(0, 10);
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper > 0.0);
    }

    #[test]
    fn chi_square_errors_and_extremes() {
        let t = tally(2, &[(2, 3), (4, 7)]);
        assert!(matches!(chi_square_consistency(&t, &exact_law_n2()), Err(Error::InsufficientCells { .. })));
        let bad = BTreeMap::from([(2, 0.3), (4, 0.3)]);
        assert!(chi_square_consistency(&t, &bad).is_err());
        let t = tally(2, &[(2, 500), (4, 500), (6, 1)]);
        let half = BTreeMap::from([(2, 0.5), (4, 0.5)]);
        assert_eq!(chi_square_consistency(&t, &half).unwrap(), 0.0);
        let t = tally(2, &[(2, 500), (4, 500)]);
        assert!((chi_square_consistency(&t, &half).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merge_is_commutative() {
        let a = tally(2, &[(2, 3), (4, 5)]);
        let b = tally(2, &[(4, 2)]);
        assert_eq!(a.clone().merge(&b), b.clone().merge(&a));
    }

    #[test]
    fn guards() {
        assert!(run_clifford_trials(0, 10, 1).is_err());
        assert!(run_clifford_trials(5, 10, 1).is_err());
        assert!(run_clifford_trials(2, 0, 1).is_err());
    }
}
