//! Monte Carlo checks of the eigenvalue-counting inequalities.
//!
//! Each check samples `tr P(I_k)` for a family of intervals, reduces the counts
//! to a statistic, and compares the sample mean (with a Hoeffding interval)
//! against the corresponding upper bound built from `Q_Lambda`. A bound
//! passes when the lower confidence limit does not exceed it.

mod sampling;
mod stats;

use std::collections::BTreeSet;

use serde::Serialize;

pub use sampling::{map_samples, sample_rng, with_workers, McConfig};
pub use stats::{hoeffding_ci, hoeffding_radius, mean, BoundReport};

use crate::eigencount::{counts_in_intervals, HalfOpenInterval};
use crate::error::{Error, Result};
use crate::lattice::Ensemble;

/// Largest family size accepted by [`check_generalized`].
pub const DEFAULT_MAX_INTERVALS: usize = 5;

/// The ordering permutation `sigma_omega` (0-based): `counts[sigma[0]] <=
/// counts[sigma[1]] <= ...`, ties kept in index order.
pub fn sigma_omega(counts: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..counts.len()).collect();
    idx.sort_by_key(|&i| counts[i]);
    idx
}

/// `prod_k (c_k - k)` over a nondecreasing sequence; never negative.
pub fn falling_product(sorted_counts: &[usize]) -> Result<u128> {
    if sorted_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(format!(
            "falling_product needs nondecreasing counts, got {sorted_counts:?}"
        )));
    }
    let mut prod: u128 = 1;
    for (k, &c) in sorted_counts.iter().enumerate() {
        if c <= k {
            // the first factor to reach zero precedes any negative one
            return Ok(0);
        }
        prod *= (c - k) as u128;
    }
    Ok(prod)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Whether some ordering of the intervals is a chain `I_1 ⊆ I_2 ⊆ ...`.
pub fn is_nested_chain(intervals: &[HalfOpenInterval]) -> bool {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.len().total_cmp(&b.len()));
    sorted.windows(2).all(|w| w[0].is_subset_of(&w[1]))
}

/// The events of the probability estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMode {
    /// `P{N(I) >= n}` against `(Q |Lambda|)^n / n!`.
    SingleN,
    /// `P{N(I_sigma(k)) >= k for all k}` against `M ∏ Q(|I_k|) |Lambda|^n`.
    Staircase,
    /// `P{N(I_1) >= 1, N(I_2) >= 1}` against
    /// `min(Q(|I_1|), Q(|I_2|)) Q(d + |I_1| + |I_2|) |Lambda|^2`.
    PairDistance,
}

/// A counting statistic together with its range and theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// `N(I)` against `Q(|I|) |Lambda|`.
    Wegner(HalfOpenInterval),
    /// `N_1 N_2 - min(N_1, N_2)` against `2 Q(|I_1|) Q(|I_2|) |Lambda|^2`.
    MinamiPair(HalfOpenInterval, HalfOpenInterval),
    /// `N_1 (N_2 - 1)` for `I_1 ⊆ I_2` against `Q(|I_1|) Q(|I_2|) |Lambda|^2`.
    MinamiNested(HalfOpenInterval, HalfOpenInterval),
    /// The `sigma_omega`-ordered falling product against `n! ∏ Q(|I_k|) |Lambda|^n`.
    Generalized(Vec<HalfOpenInterval>),
    /// The same product for a nested chain, against `∏ Q(|I_k|) |Lambda|^n`.
    GeneralizedNested(Vec<HalfOpenInterval>),
    AtLeast { interval: HalfOpenInterval, n: usize },
    Staircase(Vec<HalfOpenInterval>),
    PairDistance(HalfOpenInterval, HalfOpenInterval),
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Wegner(_) => "wegner",
            Statistic::MinamiPair(..) => "minami",
            Statistic::MinamiNested(..) => "minami-nested",
            Statistic::Generalized(_) => "generalized",
            Statistic::GeneralizedNested(_) => "generalized-nested",
            Statistic::AtLeast { .. } => "probability-single-n",
            Statistic::Staircase(_) => "probability-staircase",
            Statistic::PairDistance(..) => "probability-pair-distance",
        }
    }

    pub fn intervals(&self) -> Vec<HalfOpenInterval> {
        match self {
            Statistic::Wegner(i) | Statistic::AtLeast { interval: i, .. } => vec![*i],
            Statistic::MinamiPair(a, b)
            | Statistic::MinamiNested(a, b)
            | Statistic::PairDistance(a, b) => vec![*a, *b],
            Statistic::Generalized(v)
            | Statistic::GeneralizedNested(v)
            | Statistic::Staircase(v) => v.clone(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Statistic::Wegner(_) => 1,
            Statistic::AtLeast { n, .. } => *n,
            Statistic::MinamiPair(..) | Statistic::MinamiNested(..) | Statistic::PairDistance(..) => 2,
            Statistic::Generalized(v)
            | Statistic::GeneralizedNested(v)
            | Statistic::Staircase(v) => v.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Statistic::MinamiNested(a, b) if !a.is_subset_of(b) => Err(Error::InvalidArgument(
                format!("nested Minami needs {a} ⊆ {b}"),
            )),
            Statistic::GeneralizedNested(v) if !is_nested_chain(v) => Err(
                Error::InvalidArgument("intervals do not form a nested chain".into()),
            ),
            Statistic::Generalized(v) | Statistic::GeneralizedNested(v) | Statistic::Staircase(v)
                if v.is_empty() =>
            {
                Err(Error::InvalidArgument("empty interval family".into()))
            }
            Statistic::AtLeast { n: 0, .. } => {
                Err(Error::InvalidArgument("P{N >= n} needs n >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// The statistic for one sample, given the counts in `intervals()` order.
    pub fn value(&self, counts: &[usize]) -> f64 {
        match self {
            Statistic::Wegner(_) => counts[0] as f64,
            Statistic::MinamiPair(..) => {
                let (a, b) = (counts[0], counts[1]);
                (a * b - a.min(b)) as f64
            }
            Statistic::MinamiNested(..) => (counts[0] * counts[1].saturating_sub(1)) as f64,
            Statistic::Generalized(_) | Statistic::GeneralizedNested(_) => {
                let sorted = sorted_by_sigma(counts);
                falling_product(&sorted).expect("sorted by construction") as f64
            }
            Statistic::AtLeast { n, .. } => indicator(counts[0] >= *n),
            Statistic::Staircase(_) => {
                let sorted = sorted_by_sigma(counts);
                indicator(sorted.iter().enumerate().all(|(k, &c)| c > k))
            }
            Statistic::PairDistance(..) => indicator(counts[0] >= 1 && counts[1] >= 1),
        }
    }

    /// Upper end of the statistic's range for `sites = |Lambda|`.
    pub fn range(&self, sites: usize) -> f64 {
        let l = sites as f64;
        match self {
            Statistic::Wegner(_) => l,
            Statistic::MinamiPair(..) | Statistic::MinamiNested(..) => l * l,
            Statistic::Generalized(v) | Statistic::GeneralizedNested(v) => l.powi(v.len() as i32),
            Statistic::AtLeast { .. } | Statistic::Staircase(_) | Statistic::PairDistance(..) => {
                1.0
            }
        }
    }

    /// The theoretical upper bound on the mean.
    pub fn bound(&self, ensemble: &Ensemble) -> Result<f64> {
        let l = ensemble.sites() as f64;
        let q = |i: &HalfOpenInterval| ensemble.q_lambda(i.len());
        let product = |v: &[HalfOpenInterval]| -> Result<f64> {
            v.iter().try_fold(1.0, |acc, i| Ok(acc * q(i)? * l))
        };
        Ok(match self {
            Statistic::Wegner(i) => q(i)? * l,
            Statistic::MinamiPair(a, b) => 2.0 * q(a)? * q(b)? * l * l,
            Statistic::MinamiNested(a, b) => q(a)? * q(b)? * l * l,
            Statistic::Generalized(v) => factorial(v.len()) * product(v)?,
            Statistic::GeneralizedNested(v) => product(v)?,
            Statistic::AtLeast { interval, n } => {
                (q(interval)? * l).powi(*n as i32) / factorial(*n)
            }
            Statistic::Staircase(v) => {
                let m = if is_nested_chain(v) { 1.0 } else { factorial(v.len()) };
                m * product(v)?
            }
            Statistic::PairDistance(a, b) => {
                let span = a.distance(b) + a.len() + b.len();
                q(a)?.min(q(b)?) * ensemble.q_lambda(span)? * l * l
            }
        })
    }

    fn report(&self, ensemble: &Ensemble, counts: &[Vec<usize>], mc: &McConfig) -> Result<BoundReport> {
        let values: Vec<f64> = counts.iter().map(|c| self.value(c)).collect();
        BoundReport::from_samples(
            self.name(),
            self.degree(),
            &values,
            self.range(ensemble.sites()),
            self.bound(ensemble)? * mc.bound_scale,
            mc.confidence,
        )
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn sorted_by_sigma(counts: &[usize]) -> Vec<usize> {
    sigma_omega(counts).into_iter().map(|i| counts[i]).collect()
}

/// `tr P(I_k)` for every sample (outer index) and interval (inner index).
pub fn sample_counts(
    ensemble: &Ensemble,
    intervals: &[HalfOpenInterval],
    mc: &McConfig,
) -> Result<Vec<Vec<usize>>> {
    map_samples(mc, |_, rng| {
        let h = ensemble.sample_hamiltonian(rng);
        counts_in_intervals(&h, intervals)
    })
}

/// Estimates one statistic.
pub fn estimate(ensemble: &Ensemble, statistic: &Statistic, mc: &McConfig) -> Result<BoundReport> {
    statistic.validate()?;
    let counts = sample_counts(ensemble, &statistic.intervals(), mc)?;
    statistic.report(ensemble, &counts, mc)
}

/// `E{tr P(I)} <= Q_Lambda(|I|) |Lambda|`.
pub fn check_wegner(
    ensemble: &Ensemble,
    interval: &HalfOpenInterval,
    mc: &McConfig,
) -> Result<BoundReport> {
    estimate(ensemble, &Statistic::Wegner(*interval), mc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinamiReport {
    pub general: BoundReport,
    /// Present when `I_1 ⊆ I_2`.
    pub nested: Option<BoundReport>,
}

/// The two-interval estimates; the nested form is added when `I_1 ⊆ I_2`.
pub fn check_minami_pair(
    ensemble: &Ensemble,
    first: &HalfOpenInterval,
    second: &HalfOpenInterval,
    mc: &McConfig,
) -> Result<MinamiReport> {
    let counts = sample_counts(ensemble, &[*first, *second], mc)?;
    let general = Statistic::MinamiPair(*first, *second).report(ensemble, &counts, mc)?;
    let nested = if first.is_subset_of(second) {
        Some(Statistic::MinamiNested(*first, *second).report(ensemble, &counts, mc)?)
    } else {
        None
    };
    Ok(MinamiReport { general, nested })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedReport {
    /// Checked with the always-valid factor `n!`.
    pub factorial: BoundReport,
    /// Checked with factor `1`, present for nested chains.
    pub nested: Option<BoundReport>,
    /// Distinct `sigma_omega` seen (0-based); a lower bound on `M(I_1, ..., I_n)`.
    pub observed_sigmas: BTreeSet<Vec<usize>>,
}

impl GeneralizedReport {
    pub fn m_lower_bound(&self) -> usize {
        self.observed_sigmas.len()
    }
}

/// The `n`-interval estimate with `sigma_omega` bookkeeping.
pub fn check_generalized(
    ensemble: &Ensemble,
    intervals: &[HalfOpenInterval],
    mc: &McConfig,
) -> Result<GeneralizedReport> {
    check_generalized_capped(ensemble, intervals, mc, DEFAULT_MAX_INTERVALS)
}

pub fn check_generalized_capped(
    ensemble: &Ensemble,
    intervals: &[HalfOpenInterval],
    mc: &McConfig,
    max_intervals: usize,
) -> Result<GeneralizedReport> {
    if intervals.is_empty() || intervals.len() > max_intervals {
        return Err(Error::InvalidArgument(format!(
            "generalized estimate takes 1..={max_intervals} intervals, got {}",
            intervals.len()
        )));
    }
    let counts = sample_counts(ensemble, intervals, mc)?;
    let observed_sigmas = counts.iter().map(|c| sigma_omega(c)).collect();
    let factorial = Statistic::Generalized(intervals.to_vec()).report(ensemble, &counts, mc)?;
    let nested = if is_nested_chain(intervals) {
        Some(Statistic::GeneralizedNested(intervals.to_vec()).report(ensemble, &counts, mc)?)
    } else {
        None
    };
    Ok(GeneralizedReport {
        factorial,
        nested,
        observed_sigmas,
    })
}

/// Probability estimates. `SingleN` takes one interval and `n`; `Staircase`
/// takes the family; `PairDistance` takes two intervals.
pub fn check_probability(
    ensemble: &Ensemble,
    intervals: &[HalfOpenInterval],
    mode: ProbabilityMode,
    n: usize,
    mc: &McConfig,
) -> Result<BoundReport> {
    let statistic = match (mode, intervals) {
        (ProbabilityMode::SingleN, [i]) => Statistic::AtLeast { interval: *i, n },
        (ProbabilityMode::Staircase, v) if !v.is_empty() => Statistic::Staircase(v.to_vec()),
        (ProbabilityMode::PairDistance, [a, b]) => Statistic::PairDistance(*a, *b),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{mode:?} cannot take {} intervals",
                intervals.len()
            )))
        }
    };
    estimate(ensemble, &statistic, mc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    pub cutoff: f64,
    /// Largest per-site normalizer `c = mu([-M, M])^{-1}`.
    pub normalizer: f64,
    pub report: BoundReport,
    /// `|E_M - E|`.
    pub difference: f64,
    /// Sum of the two Hoeffding radii.
    pub combined_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationStudy {
    pub baseline: BoundReport,
    pub rows: Vec<TruncationRow>,
}

/// Estimates `statistic` under each truncation `mu^(M)` and under `mu`.
pub fn truncation_convergence(
    ensemble: &Ensemble,
    statistic: &Statistic,
    cutoffs: &[f64],
    mc: &McConfig,
) -> Result<TruncationStudy> {
    let baseline = estimate(ensemble, statistic, mc)?;
    let rows = cutoffs
        .iter()
        .map(|&m| {
            let truncated = ensemble.map_measures(|mu| mu.truncate(m))?;
            let report = estimate(&truncated, statistic, mc)?;
            let normalizer = truncated
                .measures()
                .iter()
                .map(|mu| mu.normalizer())
                .fold(1.0, f64::max);
            Ok(TruncationRow {
                cutoff: m,
                normalizer,
                difference: (report.empirical_mean - baseline.empirical_mean).abs(),
                combined_radius: report.radius() + baseline.radius(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruncationStudy { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, FiniteVolume, FreeOperator};
    use crate::matrix::SymBandMatrix;
    use crate::measures::Measure;

    fn scalar_ensemble() -> Ensemble {
        let v = FiniteVolume::new(vec![1]).unwrap();
        let free = FreeOperator::custom(SymBandMatrix::from_diagonal(&[0.0]));
        Ensemble::new(v, free, vec![Measure::uniform(0.0, 1.0).unwrap()]).unwrap()
    }

    fn chain(sites: usize) -> Ensemble {
        let v = FiniteVolume::new(vec![sites]).unwrap();
        Ensemble::new(
            v,
            FreeOperator::adjacency(Boundary::Simple),
            vec![Measure::uniform(0.0, 1.0).unwrap()],
        )
        .unwrap()
    }

    fn iv(a: f64, b: f64) -> HalfOpenInterval {
        HalfOpenInterval::new(a, b).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_omega(&[3, 1, 2]), vec![1, 2, 0]);
        assert_eq!(sigma_omega(&[2, 2, 5]), vec![0, 1, 2]);
        assert_eq!(sigma_omega(&[7]), vec![0]);
        assert_eq!(sigma_omega(&[1, 0, 1, 0]), vec![1, 3, 0, 2]);
    }

    #[test]
    fn falling_product_examples() {
        assert_eq!(falling_product(&[1, 2, 3]).unwrap(), 1);
        assert_eq!(falling_product(&[0, 5, 9]).unwrap(), 0);
        assert_eq!(falling_product(&[2, 2]).unwrap(), 2);
        assert_eq!(falling_product(&[4]).unwrap(), 4);
        assert!(falling_product(&[2, 1]).is_err());
    }

    #[test]
    fn scalar_wegner_saturates() {
        let e = scalar_ensemble();
        let i = iv(0.2, 0.4);
        let r = check_wegner(&e, &i, &McConfig::new(20_000, 5)).unwrap();
        assert!((r.bound - 0.2).abs() < 1e-15);
        assert!((r.empirical_mean - 0.2).abs() < 0.02);
        assert!(r.pass);
    }

    #[test]
    fn interval_above_spectrum_has_zero_mean() {
        let e = chain(8);
        let r = check_wegner(&e, &iv(5.0, 6.0), &McConfig::new(200, 1)).unwrap();
        assert_eq!(r.empirical_mean, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn scalar_pair_statistic_vanishes() {
        let e = scalar_ensemble();
        let r = check_minami_pair(&e, &iv(0.0, 0.5), &iv(0.3, 0.9), &McConfig::new(500, 2)).unwrap();
        assert_eq!(r.general.empirical_mean, 0.0);
        assert!(r.nested.is_none());
    }

    #[test]
    fn identical_pair_reduces_to_n_n_minus_one() {
        let e = chain(6);
        let i = iv(0.0, 1.0);
        let mc = McConfig::new(300, 4);
        let r = check_minami_pair(&e, &i, &i, &mc).unwrap();
        let counts = sample_counts(&e, &[i], &mc).unwrap();
        let direct = mean(&counts.iter().map(|c| (c[0] * c[0].saturating_sub(1)) as f64).collect::<Vec<_>>());
        assert_eq!(r.nested.as_ref().unwrap().empirical_mean, direct);
        // N^2 - N is the same number
        assert_eq!(r.general.empirical_mean, direct);
    }

    #[test]
    fn generalized_n1_matches_wegner() {
        let e = chain(10);
        let i = iv(-0.3, 0.4);
        let mc = McConfig::new(400, 8);
        let w = check_wegner(&e, &i, &mc).unwrap();
        let g = check_generalized(&e, &[i], &mc).unwrap();
        assert_eq!(w.empirical_mean, g.factorial.empirical_mean);
        assert_eq!(w.bound, g.factorial.bound);
    }

    #[test]
    fn nested_family_has_identity_sigma() {
        let e = chain(8);
        let fam = [iv(-0.2, 0.2), iv(-0.5, 0.6), iv(-1.0, 1.5)];
        let g = check_generalized(&e, &fam, &McConfig::new(300, 3)).unwrap();
        assert_eq!(g.observed_sigmas.len(), 1);
        assert!(g.observed_sigmas.contains(&vec![0, 1, 2]));
        assert!(g.nested.is_some());
        let too_many = vec![iv(0.0, 1.0); 6];
        assert!(check_generalized(&e, &too_many, &McConfig::new(10, 3)).is_err());
    }

    #[test]
    fn scalar_cannot_hold_two_eigenvalues() {
        let e = scalar_ensemble();
        let r = check_probability(&e, &[iv(-1.0, 2.0)], ProbabilityMode::SingleN, 2, &McConfig::new(100, 1)).unwrap();
        assert_eq!(r.empirical_mean, 0.0);
    }

    #[test]
    fn pair_distance_bound_arithmetic() {
        let e = chain(16);
        let s = Statistic::PairDistance(iv(-0.5, -0.4), iv(0.4, 0.5));
        let b = s.bound(&e).unwrap();
        assert!((b - 25.6).abs() < 1e-9, "{b}");
        let s4 = Statistic::PairDistance(iv(-0.5, -0.4), iv(0.4, 0.5));
        assert!((s4.bound(&chain(4)).unwrap() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn probability_mode_arity() {
        let e = chain(4);
        let mc = McConfig::new(10, 1);
        assert!(check_probability(&e, &[iv(0.0, 1.0)], ProbabilityMode::PairDistance, 1, &mc).is_err());
        assert!(check_probability(&e, &[], ProbabilityMode::Staircase, 1, &mc).is_err());
    }

    #[test]
    fn compact_truncation_is_identity() {
        let e = chain(6);
        let s = Statistic::Wegner(iv(0.0, 0.5));
        let study = truncation_convergence(&e, &s, &[1.0, 2.0], &McConfig::new(300, 6)).unwrap();
        for row in &study.rows {
            assert_eq!(row.difference, 0.0);
            assert_eq!(row.normalizer, 1.0);
        }
    }
}
