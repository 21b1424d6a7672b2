//! Eigenvalue counting `tr P(I) = tr 1_I(H)` by matrix inertia, full
//! spectra for cross-checks, and the rank-one interlacing check.
//!
//! All counting uses half-open intervals `]a, b]`.

mod ldlt;
mod sturm;

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{assemble, FiniteVolume, FreeOperator, PotentialConfig};
use crate::matrix::SymBandMatrix;

pub use ldlt::dense_negative_eigenvalues;
pub use sturm::negative_pivots as sturm_negative_pivots;

/// Size limit for dense diagonalization.
pub const DEFAULT_DENSE_CAP: usize = 2048;

/// Relative and absolute shift (times `||H||_inf`) applied when `H - E` is singular.
pub const ZERO_PIVOT_SHIFT: f64 = 1.0 / (1u64 << 40) as f64;

/// The interval `]a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfOpenInterval {
    a: f64,
    b: f64,
}

impl HalfOpenInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    /// `]center - len/2, center + len/2]`.
    pub fn centered(center: f64, len: f64) -> Result<Self> {
        Self::new(center - 0.5 * len, center + 0.5 * len)
    }

    pub fn lo(&self) -> f64 {
        self.a
    }

    pub fn hi(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x <= self.b
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &HalfOpenInterval) -> bool {
        other.a <= self.a && self.b <= other.b
    }

    /// Gap between the two intervals (zero when they overlap).
    pub fn distance(&self, other: &HalfOpenInterval) -> f64 {
        (other.a - self.b).max(self.a - other.b).max(0.0)
    }
}

impl fmt::Display for HalfOpenInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "]{},{}]", self.a, self.b)
    }
}

impl Serialize for HalfOpenInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl FromStr for HalfOpenInterval {
    type Err = Error;

    /// Parses `]a,b]`.
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        let inner = t
            .strip_prefix(']')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("interval {t:?} must look like ]a,b]")))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("interval {t:?} needs two endpoints")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad endpoint {s:?} in {t:?}")))
        };
        HalfOpenInterval::new(parse(a)?, parse(b)?)
    }
}

fn negative_count(h: &SymBandMatrix, shift: f64) -> Option<usize> {
    let n = h.dim();
    if n == 0 {
        return Some(0);
    }
    if h.is_tridiagonal() {
        let diag = h.diagonal();
        let off = h.off_diagonal();
        return sturm::negative_pivots(&diag, &off, shift);
    }
    if h.bandwidth() + 1 >= n {
        return ldlt::dense_negative_eigenvalues(h, shift);
    }
    match ldlt::band_negative_pivots(h, shift) {
        ldlt::BandOutcome::Count(c) => Some(c),
        ldlt::BandOutcome::ZeroPivot => None,
        ldlt::BandOutcome::Unstable => ldlt::dense_negative_eigenvalues(h, shift),
    }
}

/// `#{eigenvalues of H <= e}` via Sylvester's law of inertia.
///
/// When `H - e` is singular the count is taken at `e + |e| eps + eps ||H||`
/// with `eps = 2^-40`, which keeps an eigenvalue sitting exactly at `e`.
pub fn inertia_leq(h: &SymBandMatrix, e: f64) -> usize {
    let abs_shift = ZERO_PIVOT_SHIFT * h.inf_norm().max(f64::MIN_POSITIVE);
    let mut shift = e;
    for _ in 0..64 {
        if let Some(c) = negative_count(h, shift) {
            return c;
        }
        shift += shift.abs() * ZERO_PIVOT_SHIFT + abs_shift;
    }
    // Unreachable in practice: 64 consecutive exact zero pivots.
    ldlt::dense_negative_eigenvalues(h, shift).unwrap_or(h.dim())
}

/// `tr 1_{]a,b]}(H)`.
pub fn count_in_interval(h: &SymBandMatrix, interval: &HalfOpenInterval) -> usize {
    inertia_leq(h, interval.hi()) - inertia_leq(h, interval.lo())
}

/// Counts for several intervals, factoring once per distinct endpoint.
pub fn counts_in_intervals(h: &SymBandMatrix, intervals: &[HalfOpenInterval]) -> Vec<usize> {
    let mut cache: Vec<(f64, usize)> = Vec::with_capacity(2 * intervals.len());
    let mut at = |e: f64| -> usize {
        if let Some((_, c)) = cache.iter().find(|(x, _)| *x == e) {
            return *c;
        }
        let c = inertia_leq(h, e);
        cache.push((e, c));
        c
    };
    intervals
        .iter()
        .map(|i| {
            let hi = at(i.hi());
            hi - at(i.lo())
        })
        .collect()
}

/// All eigenvalues in nondecreasing order by dense diagonalization.
pub fn full_spectrum(h: &SymBandMatrix) -> Result<Vec<f64>> {
    full_spectrum_with_cap(h, DEFAULT_DENSE_CAP)
}

pub fn full_spectrum_with_cap(h: &SymBandMatrix, cap: usize) -> Result<Vec<f64>> {
    if h.dim() > cap {
        return Err(Error::DenseCapExceeded { size: h.dim(), cap });
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(h.to_dense())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Number of entries of a sorted spectrum inside `]a, b]`.
pub fn count_sorted(spectrum: &[f64], interval: &HalfOpenInterval) -> usize {
    let le = |x: f64| spectrum.partition_point(|&e| e <= x);
    le(interval.hi()) - le(interval.lo())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InterlacingRecord {
    pub count_s: usize,
    pub count_t: usize,
    pub holds: bool,
}

/// Compares `tr P(I)` with `omega_j = s` and `omega_j = t`, `s <= t`; raising
/// one coupling can push at most one eigenvalue out of `]a, b]`.
pub fn interlacing_check(
    volume: &FiniteVolume,
    free: &FreeOperator,
    potential: &PotentialConfig,
    j: usize,
    s: f64,
    t: f64,
    interval: &HalfOpenInterval,
) -> Result<InterlacingRecord> {
    if s > t {
        return Err(Error::InvalidArgument(format!(
            "interlacing needs s <= t, got s = {s}, t = {t}"
        )));
    }
    let hs = assemble(volume, free, &potential.replace_site(j, s)?)?;
    let ht = assemble(volume, free, &potential.replace_site(j, t)?)?;
    let count_s = count_in_interval(&hs, interval);
    let count_t = count_in_interval(&ht, interval);
    Ok(InterlacingRecord {
        count_s,
        count_t,
        holds: count_s <= 1 + count_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn path3() -> SymBandMatrix {
        SymBandMatrix::tridiagonal(&[0.0; 3], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn inertia_examples() {
        let d = SymBandMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(inertia_leq(&d, 2.5), 2);
        assert_eq!(inertia_leq(&d, 2.0), 2);
        assert_eq!(inertia_leq(&d, 0.0), 0);
        assert_eq!(inertia_leq(&path3(), 1.0), 2);
        assert_eq!(inertia_leq(&path3(), 0.0), 2);
        assert_eq!(inertia_leq(&path3(), -2f64.sqrt() - 1e-9), 0);
    }

    #[test]
    fn count_examples() {
        let i = HalfOpenInterval::new(-1.0, 1.5).unwrap();
        assert_eq!(count_in_interval(&path3(), &i), 2);
        let far = HalfOpenInterval::new(10.0, 11.0).unwrap();
        assert_eq!(count_in_interval(&path3(), &far), 0);
        let d = SymBandMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(count_in_interval(&d, &HalfOpenInterval::new(0.0, 3.0).unwrap()), 3);
        assert_eq!(count_in_interval(&d, &HalfOpenInterval::new(1.0, 3.0).unwrap()), 2);
    }

    #[test]
    fn spectrum_examples() {
        let d = SymBandMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(full_spectrum(&d).unwrap(), vec![1.0, 2.0, 3.0]);
        let ev = full_spectrum(&path3()).unwrap();
        let r2 = 2f64.sqrt();
        for (g, w) in ev.iter().zip([-r2, 0.0, r2]) {
            assert!((g - w).abs() < 1e-10);
        }
        let swap = SymBandMatrix::tridiagonal(&[0.0, 0.0], &[1.0]).unwrap();
        let ev = full_spectrum(&swap).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        let big = SymBandMatrix::from_diagonal(&[0.0; 5]);
        assert!(matches!(
            full_spectrum_with_cap(&big, 4),
            Err(Error::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn interval_parsing() {
        let i: HalfOpenInterval = "]-0.1, 0.2]".parse().unwrap();
        assert_eq!((i.lo(), i.hi()), (-0.1, 0.2));
        assert!("]0.4,0.2]".parse::<HalfOpenInterval>().is_err());
        assert!("]0.2,0.2]".parse::<HalfOpenInterval>().is_err());
        assert!("[0,1]".parse::<HalfOpenInterval>().is_err());
        let a = HalfOpenInterval::new(-0.5, -0.4).unwrap();
        let b = HalfOpenInterval::new(0.4, 0.5).unwrap();
        assert!((a.distance(&b) - 0.8).abs() < 1e-15);
        assert_eq!(b.distance(&a), a.distance(&b));
    }

    #[test]
    fn interlacing_examples() {
        let v1 = FiniteVolume::new(vec![2]).unwrap();
        let free = FreeOperator::adjacency(Boundary::Simple);
        let p = PotentialConfig(vec![0.0, 0.0]);
        let i = HalfOpenInterval::new(-2.0, 0.0).unwrap();
        let r = interlacing_check(&v1, &free, &p, 0, 0.0, 10.0, &i).unwrap();
        assert_eq!((r.count_s, r.count_t, r.holds), (1, 1, true));

        let r = interlacing_check(&v1, &free, &p, 1, 0.3, 0.3, &i).unwrap();
        assert_eq!(r.count_s, r.count_t);
        assert!(r.holds);

        let scalar = FiniteVolume::new(vec![1]).unwrap();
        let p = PotentialConfig(vec![0.0]);
        let i = HalfOpenInterval::new(-1.0, 0.0).unwrap();
        let r = interlacing_check(&scalar, &free, &p, 0, 0.0, 1.0, &i).unwrap();
        assert_eq!((r.count_s, r.count_t, r.holds), (1, 0, true));

        assert!(interlacing_check(&scalar, &free, &p, 0, 1.0, 0.0, &i).is_err());
    }
}
