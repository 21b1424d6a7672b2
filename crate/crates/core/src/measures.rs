//! Single-site probability measures.
//!
//! Every family exposes sampling, the concentration function
//! `S(s) = sup_a mu([a, a + s])` and the bound function `Q(s)`, which is
//! `rho_inf * s` when the measure has a bounded density and `8 S(s)` otherwise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Serialize, Serializer};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Default ternary digit depth used when sampling the Cantor measure.
pub const DEFAULT_CANTOR_DEPTH: u32 = 40;

const MAX_CANTOR_DEPTH: u32 = 64;

/// A probability law for one random coupling `omega_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Density `heights[i]` on `[breaks[i], breaks[i + 1]]`, normalized to mass one.
    PiecewiseConstant { breaks: Vec<f64>, heights: Vec<f64> },
    /// Middle-thirds Cantor measure on `[0, 1]`, sampled with `depth` ternary digits.
    Cantor { depth: u32 },
    Gaussian { mean: f64, std_dev: f64 },
    /// `normalizer * 1_[-cutoff, cutoff] * inner`.
    Truncated {
        inner: Box<Measure>,
        cutoff: f64,
        normalizer: f64,
    },
}

impl Measure {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "uniform({lo},{hi}) needs finite lo < hi"
            )));
        }
        Ok(Measure::Uniform { lo, hi })
    }

    /// Builds a piecewise-constant density. Heights are renormalized when the
    /// total mass is within `1e-6` of one; anything further off is rejected.
    pub fn piecewise_constant(breaks: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || heights.len() + 1 != breaks.len() {
            return Err(Error::InvalidArgument(format!(
                "pwc needs k+1 breakpoints for k heights (got {} and {})",
                breaks.len(),
                heights.len()
            )));
        }
        if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "pwc breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if heights.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidArgument(
                "pwc heights must be finite and nonnegative".into(),
            ));
        }
        let mass: f64 = heights
            .iter()
            .zip(breaks.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "pwc density integrates to {mass}, expected 1"
            )));
        }
        let heights = heights.into_iter().map(|h| h / mass).collect();
        Ok(Measure::PiecewiseConstant { breaks, heights })
    }

    pub fn cantor(depth: u32) -> Result<Self> {
        if depth == 0 || depth > MAX_CANTOR_DEPTH {
            return Err(Error::InvalidArgument(format!(
                "cantor depth must lie in 1..={MAX_CANTOR_DEPTH}, got {depth}"
            )));
        }
        Ok(Measure::Cantor { depth })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        if !(mean.is_finite() && std_dev.is_finite() && std_dev > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gauss({mean},{std_dev}) needs a finite mean and positive deviation"
            )));
        }
        Ok(Measure::Gaussian { mean, std_dev })
    }

    /// Family name used in error messages and reports.
    pub fn family(&self) -> &'static str {
        match self {
            Measure::Uniform { .. } => "uniform",
            Measure::PiecewiseConstant { .. } => "pwc",
            Measure::Cantor { .. } => "cantor",
            Measure::Gaussian { .. } => "gauss",
            Measure::Truncated { .. } => "trunc",
        }
    }

    /// `||rho||_inf` when the measure has a bounded density.
    pub fn density_sup(&self) -> Option<f64> {
        match self {
            Measure::Uniform { lo, hi } => Some(1.0 / (hi - lo)),
            Measure::PiecewiseConstant { heights, .. } => {
                Some(heights.iter().copied().fold(0.0, f64::max))
            }
            Measure::Cantor { .. } => None,
            Measure::Gaussian { std_dev, .. } => {
                Some(1.0 / (std_dev * (2.0 * std::f64::consts::PI).sqrt()))
            }
            Measure::Truncated {
                inner,
                cutoff,
                normalizer,
            } => match inner.as_ref() {
                Measure::Gaussian { mean, std_dev } => {
                    let x = mean.clamp(-cutoff, *cutoff);
                    Some(normalizer * gaussian_pdf(x, *mean, *std_dev))
                }
                Measure::Uniform { .. } | Measure::PiecewiseConstant { .. } => {
                    let (_, heights) = inner.restricted_density(*cutoff)?;
                    Some(normalizer * heights.iter().copied().fold(0.0, f64::max))
                }
                _ => inner.density_sup().map(|r| r * normalizer),
            },
        }
    }

    /// Smallest closed interval carrying all the mass (infinite for the Gaussian).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Measure::Uniform { lo, hi } => (*lo, *hi),
            Measure::PiecewiseConstant { breaks, .. } => (breaks[0], breaks[breaks.len() - 1]),
            Measure::Cantor { .. } => (0.0, 1.0),
            Measure::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Measure::Truncated { inner, cutoff, .. } => {
                let (lo, hi) = inner.support();
                (lo.max(-cutoff), hi.min(*cutoff))
            }
        }
    }

    pub fn is_compactly_supported(&self) -> bool {
        let (lo, hi) = self.support();
        lo.is_finite() && hi.is_finite()
    }

    /// `mu([a, b])`; zero when `b < a`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        match self {
            Measure::Uniform { lo, hi } => (b.min(*hi) - a.max(*lo)).max(0.0) / (hi - lo),
            Measure::PiecewiseConstant { breaks, heights } => {
                pwc_mass(breaks, heights, a, b)
            }
            Measure::Cantor { .. } => cantor_cdf(b) - cantor_cdf(a),
            Measure::Gaussian { mean, std_dev } => {
                normal_cdf((b - mean) / std_dev) - normal_cdf((a - mean) / std_dev)
            }
            Measure::Truncated {
                inner,
                cutoff,
                normalizer,
            } => {
                let lo = a.max(-cutoff);
                let hi = b.min(*cutoff);
                if hi < lo {
                    0.0
                } else {
                    (normalizer * inner.mass(lo, hi)).min(1.0)
                }
            }
        }
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Measure::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Measure::PiecewiseConstant { breaks, heights } => {
                let mut u = rng.random::<f64>();
                let last = heights.len() - 1;
                for (i, h) in heights.iter().enumerate() {
                    let width = breaks[i + 1] - breaks[i];
                    let m = h * width;
                    if u < m || i == last {
                        let frac = if m > 0.0 { (u / m).min(1.0) } else { 0.5 };
                        return breaks[i] + frac * width;
                    }
                    u -= m;
                }
                unreachable!("pwc has at least one piece")
            }
            Measure::Cantor { depth } => sample_cantor(*depth, rng),
            Measure::Gaussian { mean, std_dev } => Normal::new(*mean, *std_dev)
                .expect("validated parameters")
                .sample(rng),
            Measure::Truncated { inner, cutoff, .. } => loop {
                let x = inner.sample(rng);
                if x.abs() <= *cutoff {
                    return x;
                }
            },
        }
    }

    /// The concentration function `S(s) = sup_a mu([a, a + s])`.
    pub fn concentration(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "concentration needs s >= 0, got {s}"
            )));
        }
        Ok(match self {
            Measure::Uniform { lo, hi } => (s / (hi - lo)).min(1.0),
            Measure::PiecewiseConstant { breaks, heights } => {
                pwc_concentration(breaks, heights, s)
            }
            Measure::Cantor { .. } => cantor_concentration(s),
            Measure::Gaussian { std_dev, .. } => {
                erf(s / (2.0 * std::f64::consts::SQRT_2 * std_dev)).min(1.0)
            }
            Measure::Truncated {
                inner,
                cutoff,
                normalizer,
            } => match inner.as_ref() {
                Measure::Uniform { .. } | Measure::PiecewiseConstant { .. } => {
                    let (breaks, heights) = inner
                        .restricted_density(*cutoff)
                        .expect("truncation keeps positive mass");
                    let scaled: Vec<f64> = heights.iter().map(|h| h * normalizer).collect();
                    pwc_concentration(&breaks, &scaled, s).min(1.0)
                }
                Measure::Gaussian { mean, std_dev } => {
                    if s >= 2.0 * cutoff {
                        1.0
                    } else {
                        // Unimodal density: the optimal window is the mode-centered
                        // one clamped into the support.
                        let a = (mean - 0.5 * s).clamp(-cutoff, cutoff - s);
                        let m = normal_cdf((a + s - mean) / std_dev)
                            - normal_cdf((a - mean) / std_dev);
                        (normalizer * m).min(1.0)
                    }
                }
                Measure::Cantor { .. } if *cutoff >= 1.0 => cantor_concentration(s),
                _ => return Err(Error::OracleOnlyMeasure(self.to_string())),
            },
        })
    }

    /// The bound function `Q(s)`: density branch whenever a bounded density exists.
    pub fn q_of(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!("Q needs s >= 0, got {s}")));
        }
        match self.density_sup() {
            Some(rho) => Ok(rho * s),
            None => Ok(8.0 * self.concentration(s)?),
        }
    }

    /// Conditions the measure on `[-cutoff, cutoff]`.
    pub fn truncate(&self, cutoff: f64) -> Result<Measure> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "truncation cutoff must be positive and finite, got {cutoff}"
            )));
        }
        if let Measure::Truncated {
            inner, cutoff: m0, ..
        } = self
        {
            return inner.truncate(cutoff.min(*m0));
        }
        let mass = self.mass(-cutoff, cutoff);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass { m: cutoff });
        }
        Ok(Measure::Truncated {
            inner: Box::new(self.clone()),
            cutoff,
            normalizer: 1.0 / mass,
        })
    }

    /// `c = mu([-M, M])^{-1}` for a truncated measure, `1` otherwise.
    pub fn normalizer(&self) -> f64 {
        match self {
            Measure::Truncated { normalizer, .. } => *normalizer,
            _ => 1.0,
        }
    }

    /// Density of a uniform or piecewise-constant measure restricted to `[-m, m]`.
    pub(crate) fn restricted_density(&self, m: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let (breaks, heights) = match self {
            Measure::Uniform { lo, hi } => (vec![*lo, *hi], vec![1.0 / (hi - lo)]),
            Measure::PiecewiseConstant { breaks, heights } => (breaks.clone(), heights.clone()),
            _ => return None,
        };
        let mut out_b = Vec::new();
        let mut out_h = Vec::new();
        for (i, h) in heights.iter().enumerate() {
            let lo = breaks[i].max(-m);
            let hi = breaks[i + 1].min(m);
            if hi > lo {
                if out_b.last() != Some(&lo) {
                    if !out_b.is_empty() {
                        out_h.push(0.0);
                    }
                    out_b.push(lo);
                }
                out_b.push(hi);
                out_h.push(*h);
            }
        }
        if out_h.is_empty() {
            None
        } else {
            Some((out_b, out_h))
        }
    }
}

/// `Q_Lambda(s)`: the pointwise maximum of `Q` over the per-site measures.
pub fn q_lambda(measures: &[Measure], s: f64) -> Result<f64> {
    if measures.is_empty() {
        return Err(Error::InvalidArgument("q_lambda of an empty measure list".into()));
    }
    measures
        .iter()
        .try_fold(0.0f64, |acc, m| Ok(acc.max(m.q_of(s)?)))
}

/// Empirical Hölder parameters for `Q(s) <= u * s^alpha` on `s <= s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderFit {
    pub alpha: f64,
    /// Smallest constant with `Q(s) <= u s^alpha` at every fitted scale.
    pub u: f64,
    pub s0: f64,
}

/// Least-squares slope of `ln Q` against `ln s`.
pub fn holder_fit(measure: &Measure, scales: &[f64]) -> Result<HolderFit> {
    if scales.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "holder_fit needs at least 3 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument("holder_fit scales must be positive".into()));
    }
    let mut pts = Vec::with_capacity(scales.len());
    for &s in scales {
        let q = measure.q_of(s)?;
        if q > 0.0 {
            pts.push((s, q));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than 2 scales with positive Q".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(s, _)| s.ln()).sum::<f64>() / n;
    let my = pts.iter().map(|(_, q)| q.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (s, q) in &pts {
        let dx = s.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (q.ln() - my);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("scales are all equal".into()));
    }
    let alpha = sxy / sxx;
    if !(alpha > 1e-9) {
        return Err(Error::InsufficientData(format!(
            "Q does not decay with s (fitted slope {alpha})"
        )));
    }
    let u = pts
        .iter()
        .map(|(s, q)| q / s.powf(alpha))
        .fold(0.0, f64::max);
    let s0 = pts.iter().map(|(s, _)| *s).fold(0.0, f64::max);
    Ok(HolderFit { alpha, u, s0 })
}

pub(crate) fn gaussian_pdf(x: f64, mean: f64, std_dev: f64) -> f64 {
    let z = (x - mean) / std_dev;
    (-0.5 * z * z).exp() / (std_dev * (2.0 * std::f64::consts::PI).sqrt())
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

fn pwc_mass(breaks: &[f64], heights: &[f64], a: f64, b: f64) -> f64 {
    heights
        .iter()
        .enumerate()
        .map(|(i, h)| h * (b.min(breaks[i + 1]) - a.max(breaks[i])).max(0.0))
        .sum()
}

/// The window mass is piecewise linear in its left end, so the supremum sits
/// at a window whose left or right end is a breakpoint.
fn pwc_concentration(breaks: &[f64], heights: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    breaks
        .iter()
        .flat_map(|&x| [x, x - s])
        .map(|a| pwc_mass(breaks, heights, a, a + s))
        .fold(0.0, f64::max)
}

/// Cantor concentration by self-similarity:
/// `S(s) = S(3s)/2` for `s < 1/3`, `1/2` on `[1/3, 2/3)`,
/// `1/2 + S(3s - 2)/2` on `[2/3, 1)` and `1` beyond.
///
/// Floating inputs carry a few ulps of error that the recursion magnifies by
/// three per level, so thresholds are matched within a tolerance that grows
/// with it. Use [`cantor_concentration_ratio`] for exact rational scales.
fn cantor_concentration(s: f64) -> f64 {
    let mut s = s;
    let mut tol = 8.0 * f64::EPSILON * s;
    let mut scale = 1.0;
    let mut acc = 0.0;
    while scale > 0.0 {
        if s <= tol {
            return acc;
        }
        if s >= 1.0 - tol {
            return acc + scale;
        }
        if (s - 1.0 / 3.0).abs() <= tol {
            return acc + 0.5 * scale;
        }
        if s < 1.0 / 3.0 {
            s *= 3.0;
            scale *= 0.5;
        } else if s < 2.0 / 3.0 {
            return acc + 0.5 * scale;
        } else {
            acc += 0.5 * scale;
            scale *= 0.5;
            s = 3.0 * s - 2.0;
        }
        tol *= 3.0;
    }
    acc
}

/// Cantor concentration at the rational scale `num / den`, following the same
/// recursion in integer arithmetic. Exact whenever the recursion terminates
/// (e.g. at every power of three).
pub fn cantor_concentration_ratio(num: u64, den: u64) -> Result<f64> {
    if den == 0 {
        return Err(Error::InvalidArgument("zero denominator".into()));
    }
    let q = den as u128;
    let mut p = num as u128;
    let mut scale = 1.0f64;
    let mut acc = 0.0;
    while scale > 0.0 {
        if p == 0 {
            return Ok(acc);
        }
        if p >= q {
            return Ok(acc + scale);
        }
        if 3 * p < q {
            p *= 3;
            scale *= 0.5;
        } else if 3 * p < 2 * q {
            return Ok(acc + 0.5 * scale);
        } else {
            acc += 0.5 * scale;
            scale *= 0.5;
            p = 3 * p - 2 * q;
        }
    }
    Ok(acc)
}

/// The Cantor function, evaluated from the exact ternary expansion of `x`.
pub fn cantor_cdf(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let (mantissa, exp) = if biased == 0 {
        (bits & ((1u64 << 52) - 1), 1074i64)
    } else {
        ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), 1075 - biased)
    };
    // x = mantissa / 2^exp with exp <= 120 keeps 3 * remainder inside u128.
    if exp > 120 {
        return cantor_cdf_float(x);
    }
    let mask: u128 = (1u128 << exp) - 1;
    let mut r = mantissa as u128;
    let mut weight = 0.5;
    let mut acc = 0.0;
    for _ in 0..80 {
        r *= 3;
        let digit = r >> exp;
        r &= mask;
        match digit {
            0 => {}
            1 => return acc + weight,
            _ => acc += weight,
        }
        if r == 0 {
            break;
        }
        weight *= 0.5;
    }
    acc
}

fn cantor_cdf_float(x: f64) -> f64 {
    let mut x = x;
    let mut weight = 0.5;
    let mut acc = 0.0;
    for _ in 0..64 {
        x *= 3.0;
        let d = x.floor();
        x -= d;
        if d >= 2.0 {
            acc += weight;
        } else if d >= 1.0 {
            return acc + weight;
        }
        weight *= 0.5;
    }
    acc
}

fn sample_cantor<R: Rng + ?Sized>(depth: u32, rng: &mut R) -> f64 {
    let bits: u64 = rng.random();
    let mut v = 0.0;
    for k in (0..depth).rev() {
        let d = ((bits >> k) & 1) as f64;
        v = (v + 2.0 * d) / 3.0;
    }
    v
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(v: &[f64]) -> String {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(","))
        }
        match self {
            Measure::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Measure::PiecewiseConstant { breaks, heights } => {
                write!(f, "pwc({},{})", list(breaks), list(heights))
            }
            Measure::Cantor { depth } => write!(f, "cantor({depth})"),
            Measure::Gaussian { mean, std_dev } => write!(f, "gauss({mean},{std_dev})"),
            Measure::Truncated { inner, cutoff, .. } => write!(f, "trunc({inner},{cutoff})"),
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let m = p.measure()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(m)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!(
            "{what} at byte {} of {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a measure name"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
        {
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        tok.parse::<f64>()
            .map_err(|_| self.error(&format!("invalid number {tok:?}")))
    }

    fn list(&mut self) -> Result<Vec<f64>> {
        self.expect(b'[')?;
        let mut out = vec![self.number()?];
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => {
                    self.pos += 1;
                    out.push(self.number()?);
                }
                Some(b']') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.error("expected ',' or ']'")),
            }
        }
    }

    fn measure(&mut self) -> Result<Measure> {
        let name = self.ident()?;
        self.expect(b'(')?;
        let m = match name.as_str() {
            "uniform" => {
                let a = self.number()?;
                self.expect(b',')?;
                let b = self.number()?;
                Measure::uniform(a, b)?
            }
            "cantor" => {
                let depth = self.number()?;
                if depth.fract() != 0.0 || depth < 1.0 {
                    return Err(self.error("cantor depth must be a positive integer"));
                }
                Measure::cantor(depth as u32)?
            }
            "pwc" => {
                let breaks = self.list()?;
                self.expect(b',')?;
                let heights = self.list()?;
                Measure::piecewise_constant(breaks, heights)?
            }
            "gauss" => {
                let m = self.number()?;
                self.expect(b',')?;
                let s = self.number()?;
                Measure::gaussian(m, s)?
            }
            "trunc" => {
                let inner = self.measure()?;
                self.expect(b',')?;
                let cutoff = self.number()?;
                inner.truncate(cutoff)?
            }
            other => {
                return Err(self.error(&format!(
                    "unknown measure {other:?} (expected uniform, cantor, pwc, gauss or trunc)"
                )))
            }
        };
        self.expect(b')')?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Whether some integer within `slack` of `x * 3^digits` has only
    /// ternary digits 0 and 2. The product is formed exactly from the bits of `x`.
    fn near_cantor_point(x: f64, digits: u32, slack: f64) -> bool {
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let mantissa = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as u128;
        let exp = (1075 - biased) as u32;
        let y = mantissa * 3u128.pow(digits);
        let int = y >> exp;
        let frac = (y & ((1u128 << exp) - 1)) as f64 / 2f64.powi(exp as i32);
        let mut candidates = vec![int];
        if frac < slack && int > 0 {
            candidates.push(int - 1);
        }
        if frac > 1.0 - slack {
            candidates.push(int + 1);
        }
        candidates.into_iter().any(|mut n| {
            (0..digits).all(|_| {
                let d = n % 3;
                n /= 3;
                d != 1
            })
        })
    }

    #[test]
    fn uniform_sample_in_support() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = m.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn cantor_sample_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shallow = Measure::cantor(20).unwrap();
        let deep = Measure::cantor(40).unwrap();
        for _ in 0..200 {
            let x = shallow.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
            // x * 3^20 is an integer up to rounding
            assert!(near_cantor_point(x, 20, 1e-6), "x = {x}");
            let y = deep.sample(&mut rng);
            assert!((0.0..=1.0).contains(&y));
            // Past ~33 ternary digits the f64 rounding is visible.
            assert!(near_cantor_point(y, 30, 0.05), "y = {y}");
        }
    }

    #[test]
    fn truncated_gaussian_sample_in_window() {
        let m = Measure::gaussian(0.0, 1.0).unwrap().truncate(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(m.sample(&mut rng).abs() <= 1.0);
        }
    }

    #[test]
    fn concentration_examples() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!((u.concentration(0.3).unwrap() - 0.3).abs() < 1e-15);
        let c = Measure::cantor(40).unwrap();
        assert_eq!(c.concentration(1.0 / 3.0).unwrap(), 0.5);
        assert_eq!(c.concentration(1.0 / 9.0).unwrap(), 0.25);
        for k in 1..=10 {
            let exact = cantor_concentration_ratio(1, 3u64.pow(k)).unwrap();
            assert_eq!(exact, 0.5f64.powi(k as i32));
            assert_eq!(c.concentration(3f64.powi(-(k as i32))).unwrap(), exact);
        }
        assert!(u.concentration(-1.0).is_err());
        for m in [
            u,
            c,
            Measure::gaussian(0.0, 1.0).unwrap(),
            Measure::piecewise_constant(vec![0.0, 0.5, 1.0], vec![1.5, 0.5]).unwrap(),
        ] {
            assert_eq!(m.concentration(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn cantor_recursion_against_cdf_scan() {
        // Fine scan of the window position with the exact Cantor function.
        let c = Measure::cantor(40).unwrap();
        for &s in &[0.05, 0.2, 0.4, 0.7, 0.75, 0.9, 0.99] {
            let grid = 3usize.pow(9);
            let scan = (0..=grid)
                .map(|i| {
                    let a = i as f64 / grid as f64 - s;
                    cantor_cdf(a + s) - cantor_cdf(a)
                })
                .fold(0.0, f64::max);
            let rec = c.concentration(s).unwrap();
            assert!(scan <= rec + 1e-9, "s={s}: scan {scan} > recursion {rec}");
            assert!(rec - scan < 2e-3, "s={s}: scan {scan} far below {rec}");
        }
    }

    #[test]
    fn gaussian_concentration_is_symmetric_window() {
        let g = Measure::gaussian(2.0, 0.5).unwrap();
        let s = 0.3;
        let expect = g.mass(2.0 - 0.15, 2.0 + 0.15);
        assert!((g.concentration(s).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn q_examples() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!((u.q_of(0.05).unwrap() - 0.05).abs() < 1e-15);
        let c = Measure::cantor(40).unwrap();
        assert_eq!(c.q_of(1.0 / 9.0).unwrap(), 2.0);
        let p = Measure::piecewise_constant(vec![0.0, 0.25, 1.0], vec![2.0, 2.0 / 3.0]).unwrap();
        assert!((p.density_sup().unwrap() - 2.0).abs() < 1e-12);
        assert!((p.q_of(0.1).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn q_lambda_examples() {
        let u1 = Measure::uniform(0.0, 1.0).unwrap();
        let u2 = Measure::uniform(0.0, 2.0).unwrap();
        let c = Measure::cantor(40).unwrap();
        assert!((q_lambda(&[u1.clone(), u2], 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(q_lambda(std::slice::from_ref(&u1), 0.3).unwrap(), u1.q_of(0.3).unwrap());
        assert_eq!(q_lambda(&[u1, c], 1.0 / 9.0).unwrap(), 2.0);
        assert!(q_lambda(&[], 0.1).is_err());
    }

    #[test]
    fn truncate_examples() {
        let t = Measure::uniform(0.0, 2.0).unwrap().truncate(1.0).unwrap();
        assert!((t.normalizer() - 2.0).abs() < 1e-15);
        assert!((t.density_sup().unwrap() - 1.0).abs() < 1e-15);
        assert!((t.concentration(0.4).unwrap() - 0.4).abs() < 1e-15);
        for s in [0.01, 0.2, 0.9] {
            let base = Measure::uniform(0.0, 2.0).unwrap().q_of(s).unwrap();
            assert!(t.q_of(s).unwrap() <= 2.0 * base + 1e-15);
        }

        let g = Measure::gaussian(0.0, 1.0).unwrap().truncate(4.0).unwrap();
        // 1 / (Phi(4) - Phi(-4)) from the complementary error function.
        let expect = 1.0 / (1.0 - statrs::function::erf::erfc(4.0 / std::f64::consts::SQRT_2));
        assert!((g.normalizer() - expect).abs() < 1e-14);
        assert!((g.normalizer() - 1.0000634).abs() < 1e-7);

        let same = Measure::uniform(0.0, 1.0).unwrap().truncate(1.0).unwrap();
        assert_eq!(same.normalizer(), 1.0);

        assert!(matches!(
            Measure::uniform(2.0, 3.0).unwrap().truncate(1.0),
            Err(Error::ZeroMass { .. })
        ));
    }

    #[test]
    fn truncated_cantor_below_one_is_oracle_only() {
        let t = Measure::cantor(30).unwrap().truncate(0.5).unwrap();
        assert!(matches!(t.concentration(0.1), Err(Error::OracleOnlyMeasure(_))));
    }

    #[test]
    fn holder_fit_examples() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let scales: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
        let fit = holder_fit(&u, &scales).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-12);

        let c = Measure::cantor(40).unwrap();
        let scales: Vec<f64> = (1..=10).map(|k| 3f64.powi(-k)).collect();
        let fit = holder_fit(&c, &scales).unwrap();
        assert!((fit.alpha - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((fit.u - 8.0).abs() < 1e-9);

        // Windows longer than the support: Q = 8 at every scale.
        let flat = holder_fit(&c, &[1.0, 2.0, 3.0]);
        assert!(flat.is_err());
        assert!(holder_fit(&u, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn grammar_round_trip() {
        for text in [
            "uniform(0,1)",
            "cantor(40)",
            "pwc([0,0.5,1],[1.5,0.5])",
            "gauss(0,1)",
            "trunc(gauss(0,1),4)",
            "trunc(trunc(uniform(-3,3),2),1)",
        ] {
            let m: Measure = text.parse().unwrap();
            let again: Measure = m.to_string().parse().unwrap();
            assert_eq!(m, again, "{text}");
        }
        let nested: Measure = "trunc(trunc(uniform(-3,3),2),1)".parse().unwrap();
        assert_eq!(nested.support(), (-1.0, 1.0));
        assert!("beta(1,2)".parse::<Measure>().is_err());
        assert!("uniform(1,0)".parse::<Measure>().is_err());
        assert!("uniform(0,1) x".parse::<Measure>().is_err());
    }
}
