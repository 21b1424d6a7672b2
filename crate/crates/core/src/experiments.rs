//! The multiplicity experiment (probability of a cluster of `N` eigenvalues in
//! a window of length `L^-q`) and an exploratory level-spacing diagnostic.

use rand::Rng;
use serde::Serialize;

use crate::eigencount::{
    count_in_interval, count_sorted, full_spectrum, interlacing_check, HalfOpenInterval,
};
use crate::error::{Error, Result};
use crate::estimators::{map_samples, BoundReport, McConfig};
use crate::lattice::{Boundary, Ensemble, FiniteVolume, FreeOperator, PotentialConfig};
use crate::matrix::SymBandMatrix;
use crate::measures::{holder_fit, HolderFit, Measure};

/// Relative margin above the smallest admissible `q`.
pub const DEFAULT_Q_MARGIN: f64 = 0.1;

/// Largest covering that [`Covering::materialize`] will build.
pub const MAX_COVERING: u64 = 10_000_000;

/// Fewest pooled spacings accepted by [`spacing_statistics`].
pub const MIN_SPACINGS: usize = 1000;

/// Scales `3^-k`, `k = 1..=12`, used to fit `(alpha, U)`.
pub fn default_fit_scales() -> Vec<f64> {
    (1..=12).map(|k| 3f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityPlan {
    pub measure: Measure,
    pub fit: HolderFit,
    /// `N = floor(1/alpha) + 1`.
    pub n: usize,
    pub q: f64,
    pub q_min: f64,
    pub dimension: usize,
    pub window: HalfOpenInterval,
    /// Sides `L_k = 2^k`.
    pub scales: Vec<usize>,
    #[serde(skip)]
    pub free: FreeOperator,
}

/// Builds the plan with `alpha, U` fitted on [`default_fit_scales`].
pub fn plan_multiplicity(
    measure: &Measure,
    dimension: usize,
    window: HalfOpenInterval,
    k_range: std::ops::RangeInclusive<u32>,
) -> Result<MultiplicityPlan> {
    let fit = holder_fit(measure, &default_fit_scales())?;
    plan_with_fit(measure, fit, dimension, window, k_range, DEFAULT_Q_MARGIN)
}

pub fn plan_with_fit(
    measure: &Measure,
    fit: HolderFit,
    dimension: usize,
    window: HalfOpenInterval,
    k_range: std::ops::RangeInclusive<u32>,
    margin: f64,
) -> Result<MultiplicityPlan> {
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidArgument(format!("q margin must be positive, got {margin}")));
    }
    if !(fit.alpha > 0.0 && fit.alpha <= 1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "Hölder exponent must lie in ]0,1], got {}",
            fit.alpha
        )));
    }
    let fit = HolderFit {
        alpha: fit.alpha.min(1.0),
        ..fit
    };
    let n = (1.0 / fit.alpha).floor() as usize + 1;
    let excess = n as f64 * fit.alpha - 1.0;
    let d = dimension as f64;
    let q_min = n as f64 * d / excess;
    let q = (1.0 + margin) * q_min;
    let exponent = -excess * q + n as f64 * d;
    assert!(exponent < 0.0, "scale exponent {exponent} must be negative");
    let scales = k_range.map(|k| 1usize << k).collect::<Vec<_>>();
    if scales.is_empty() {
        return Err(Error::InvalidArgument("empty scale range".into()));
    }
    Ok(MultiplicityPlan {
        measure: measure.clone(),
        fit,
        n,
        q,
        q_min,
        dimension,
        window,
        scales,
        free: FreeOperator::adjacency(Boundary::Simple),
    })
}

impl MultiplicityPlan {
    pub fn with_free(mut self, free: FreeOperator) -> Self {
        self.free = free;
        self
    }

    /// Exponent `-(N alpha - 1) q + N d` of `L` in the bound.
    pub fn scale_exponent(&self) -> f64 {
        -(self.n as f64 * self.fit.alpha - 1.0) * self.q + (self.n * self.dimension) as f64
    }

    /// `(|I| + 1) (2^alpha U)^N / N! * L^(-(N alpha - 1) q + N d)`.
    pub fn bound(&self, side: usize) -> f64 {
        let n = self.n as i32;
        let fact: f64 = (1..=self.n).map(|k| k as f64).product();
        (self.window.len() + 1.0) * (2f64.powf(self.fit.alpha) * self.fit.u).powi(n) / fact
            * (side as f64).powf(self.scale_exponent())
    }

    pub fn covering(&self, side: usize) -> Result<Covering> {
        Covering::new(self.window, (side as f64).powf(-self.q))
    }

    pub fn ensemble(&self, side: usize) -> Result<Ensemble> {
        Ensemble::new(
            FiniteVolume::cube(self.dimension, side)?,
            self.free.clone(),
            vec![self.measure.clone()],
        )
    }
}

/// The intervals `]lo + k h, lo + (k + 2) h]`, `0 <= k < 2 (floor(|I| / 2h) + 1)`.
/// Every `J ⊂ I` with `|J| <= h` lies in one of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Covering {
    pub lo: f64,
    pub step: f64,
    pub count: u64,
}

impl Covering {
    pub fn new(window: HalfOpenInterval, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("covering step must be positive, got {step}")));
        }
        let scale = window.lo().abs().max(window.hi().abs()).max(1.0);
        if step < 64.0 * f64::EPSILON * scale {
            return Err(Error::InvalidArgument(format!(
                "covering step {step:e} is below floating-point resolution near {window}"
            )));
        }
        let half = (window.len() / (2.0 * step)).floor();
        if half >= 1e15 {
            return Err(Error::InvalidArgument("covering count overflows".into()));
        }
        Ok(Self {
            lo: window.lo(),
            step,
            count: 2 * (half as u64 + 1),
        })
    }

    pub fn interval(&self, k: u64) -> HalfOpenInterval {
        let a = self.lo + k as f64 * self.step;
        HalfOpenInterval::new(a, a + 2.0 * self.step).expect("positive step")
    }

    /// Index of a covering interval containing `J`, if `|J| <= h` and `J` starts in range.
    pub fn locate(&self, j: &HalfOpenInterval) -> Option<u64> {
        let k = ((j.lo() - self.lo) / self.step).floor();
        if k < 0.0 {
            return None;
        }
        let k = (k as u64).min(self.count - 1);
        (k.saturating_sub(1)..=(k + 1).min(self.count - 1)).find(|&i| j.is_subset_of(&self.interval(i)))
    }

    /// All intervals, refused above `cap`.
    pub fn materialize(&self, cap: u64) -> Result<Vec<HalfOpenInterval>> {
        if self.count > cap {
            return Err(Error::InvalidArgument(format!(
                "covering has {} intervals (cap {cap}); use a smaller q or L",
                self.count
            )));
        }
        Ok((0..self.count).map(|k| self.interval(k)).collect())
    }

    /// Whether some covering interval holds at least `n` entries of the sorted
    /// spectrum. Each run of `n` consecutive eigenvalues is tested against the
    /// range of admissible `k` directly, so the covering is never built.
    pub fn has_cluster(&self, spectrum: &[f64], n: usize) -> bool {
        if n == 0 {
            return true;
        }
        let last = (self.count - 1) as f64;
        spectrum.windows(n).any(|w| {
            let first = (w[0] - self.lo) / self.step;
            let end = (w[n - 1] - self.lo) / self.step;
            // need k < first and k + 2 >= end
            let k_max = (first.ceil() - 1.0).min(last);
            let k_min = (end - 2.0).ceil().max(0.0);
            k_min <= k_max
        })
    }
}

/// Frequency of a cluster of `N` eigenvalues in one covering interval at side
/// `L`, against the plan's bound.
pub fn event_b_probability(plan: &MultiplicityPlan, side: usize, mc: &McConfig) -> Result<BoundReport> {
    let hits = event_b_indicators(plan, side, &[plan.n], mc)?;
    let values: Vec<f64> = hits.iter().map(|h| if h[0] { 1.0 } else { 0.0 }).collect();
    BoundReport::from_samples(
        "event-b",
        plan.n,
        &values,
        1.0,
        plan.bound(side) * mc.bound_scale,
        mc.confidence,
    )
}

/// Per-sample detection of the cluster event for each requested size, all on
/// the same samples.
pub fn event_b_indicators(
    plan: &MultiplicityPlan,
    side: usize,
    sizes: &[usize],
    mc: &McConfig,
) -> Result<Vec<Vec<bool>>> {
    if !plan.scales.contains(&side) {
        return Err(Error::InvalidArgument(format!(
            "side {side} is not among the plan scales {:?}",
            plan.scales
        )));
    }
    let covering = plan.covering(side)?;
    let ensemble = plan.ensemble(side)?;
    let spectra = map_samples(mc, |_, rng| full_spectrum(&ensemble.sample_hamiltonian(rng)))?;
    spectra
        .into_iter()
        .map(|s| {
            let s = s?;
            Ok(sizes.iter().map(|&n| covering.has_cluster(&s, n)).collect())
        })
        .collect()
}

/// Width of the narrowest window holding `m` consecutive eigenvalues.
pub fn min_cluster_gap(spectrum: &[f64], m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("cluster size must be at least 2, got {m}")));
    }
    if spectrum.len() < m {
        return Err(Error::InsufficientData(format!(
            "{} eigenvalues, need at least {m}",
            spectrum.len()
        )));
    }
    Ok(spectrum
        .windows(m)
        .map(|w| w[m - 1] - w[0])
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingStatistics {
    /// Unfolded nearest-neighbor spacings, rescaled to unit mean.
    #[serde(skip)]
    pub spacings: Vec<f64>,
    pub count: usize,
    pub ks_distance: f64,
    pub p_value: f64,
}

/// Unfolds each spectrum with the counting function of the other samples,
/// interpolated linearly between levels, and returns the spacings rescaled to
/// unit mean. Leaving the own sample out keeps the unfolded gaps continuous.
pub fn unfolded_spacings(spectra: &[Vec<f64>]) -> Vec<f64> {
    let sorted: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_by(f64::total_cmp);
            s
        })
        .collect();
    let mut spacings = Vec::new();
    for (i, own) in sorted.iter().enumerate() {
        let mut others: Vec<f64> = if sorted.len() > 1 {
            sorted
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, s)| s.iter().copied())
                .collect()
        } else {
            own.clone()
        };
        others.sort_by(f64::total_cmp);
        let unfold = |e: f64| interpolated_rank(&others, e);
        spacings.extend(own.windows(2).map(|w| unfold(w[1]) - unfold(w[0])));
    }
    let mean = spacings.iter().sum::<f64>() / spacings.len().max(1) as f64;
    if mean > 0.0 {
        for x in &mut spacings {
            *x /= mean;
        }
    }
    spacings
}

/// Piecewise-linear counting function through `(levels[k], k + 1)`, constant
/// outside the range of `levels`.
fn interpolated_rank(levels: &[f64], e: f64) -> f64 {
    let k = levels.partition_point(|&x| x <= e);
    if k == 0 {
        return 0.0;
    }
    if k == levels.len() {
        return k as f64;
    }
    let (lo, hi) = (levels[k - 1], levels[k]);
    let frac = if hi > lo { (e - lo) / (hi - lo) } else { 0.0 };
    k as f64 + frac
}

/// Kolmogorov–Smirnov distance to the unit exponential and its asymptotic
/// p-value with the Stephens small-sample correction.
pub fn ks_exponential(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x.max(0.0)).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok((d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Level spacings of the eigenvalues inside `window`, pooled over samples.
pub fn spacing_statistics(
    ensemble: &Ensemble,
    window: &HalfOpenInterval,
    mc: &McConfig,
) -> Result<SpacingStatistics> {
    let spectra = map_samples(mc, |_, rng| {
        full_spectrum(&ensemble.sample_hamiltonian(rng))
            .map(|s| s.into_iter().filter(|&e| window.contains(e)).collect::<Vec<_>>())
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    spacing_statistics_from_spectra(&spectra)
}

pub fn spacing_statistics_from_spectra(spectra: &[Vec<f64>]) -> Result<SpacingStatistics> {
    let spacings = unfolded_spacings(spectra);
    if spacings.len() < MIN_SPACINGS {
        return Err(Error::InsufficientData(format!(
            "{} pooled spacings, need at least {MIN_SPACINGS}",
            spacings.len()
        )));
    }
    let (ks_distance, p_value) = ks_exponential(&spacings)?;
    Ok(SpacingStatistics {
        count: spacings.len(),
        spacings,
        ks_distance,
        p_value,
    })
}

/// Outcome of an exact property suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleSummary {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
}

impl OracleSummary {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Symmetric band matrix with entries uniform in `[-1, 1]` inside the band.
pub fn random_band_matrix<R: Rng + ?Sized>(n: usize, bandwidth: usize, rng: &mut R) -> SymBandMatrix {
    let mut h = SymBandMatrix::zeros(n, bandwidth);
    let bw = h.bandwidth();
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            h.set(i, j, rng.random_range(-1.0..=1.0));
        }
    }
    h
}

/// Inertia counts against counts read off the full spectrum, on random band
/// matrices of size at most 64 and random intervals.
pub fn counting_oracle_suite(matrices: u64, intervals_per: usize, seed: u64) -> Result<OracleSummary> {
    let mc = McConfig::new(matrices, seed);
    let failures = map_samples(&mc, |_, rng| -> Result<usize> {
        let n = rng.random_range(1..=64);
        let bw = rng.random_range(0..n.max(1));
        let h = random_band_matrix(n, bw, rng);
        let spectrum = full_spectrum(&h)?;
        let radius = h.inf_norm() + 1.0;
        let mut bad = 0;
        for _ in 0..intervals_per {
            let a = rng.random_range(-radius..radius);
            let b = rng.random_range(a..=radius);
            let Ok(i) = HalfOpenInterval::new(a, b) else {
                continue;
            };
            if count_in_interval(&h, &i) != count_sorted(&spectrum, &i) {
                bad += 1;
            }
        }
        Ok(bad)
    })?
    .into_iter()
    .sum::<Result<usize>>()?;
    Ok(OracleSummary {
        name: "counting-oracle".into(),
        cases: matrices as usize * intervals_per,
        failures,
    })
}

/// `tr P_s(I) <= tr P_t(I) + 1` for `s <= t` on random small boxes, free
/// operators, couplings, sites and intervals.
pub fn interlacing_suite(configurations: u64, seed: u64) -> Result<OracleSummary> {
    let mc = McConfig::new(configurations, seed);
    let failures = map_samples(&mc, |_, rng| -> Result<usize> {
        let sides = if rng.random_bool(0.5) {
            vec![rng.random_range(1..=12)]
        } else {
            vec![rng.random_range(1..=4), rng.random_range(1..=4)]
        };
        let volume = FiniteVolume::new(sides)?;
        let boundary = if rng.random_bool(0.5) {
            Boundary::Simple
        } else {
            Boundary::Periodic
        };
        let free = if rng.random_bool(0.5) {
            FreeOperator::adjacency(boundary)
        } else {
            FreeOperator::laplacian(boundary)
        };
        let potential =
            PotentialConfig((0..volume.len()).map(|_| rng.random_range(-3.0..3.0)).collect());
        let j = rng.random_range(0..volume.len());
        let (x, y) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let (s, t) = if x <= y { (x, y) } else { (y, x) };
        let a = rng.random_range(-8.0..12.0);
        let i = HalfOpenInterval::new(a, a + rng.random_range(0.01..6.0))?;
        let record = interlacing_check(&volume, &free, &potential, j, s, t, &i)?;
        Ok(usize::from(!record.holds))
    })?
    .into_iter()
    .sum::<Result<usize>>()?;
    Ok(OracleSummary {
        name: "interlacing".into(),
        cases: configurations as usize,
        failures,
    })
}
