//! Rank-one perturbations `H_omega = H_0 + omega |phi><phi|` and the spectral
//! averaging inequalities, checked by quadrature over the coupling.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigencount::HalfOpenInterval;
use crate::error::{Error, Result};
use crate::measures::{gaussian_pdf, Measure};

pub const MAX_MODEL_SIZE: usize = 64;

/// Exponents `k` of the coupling grid `kappa = 2^k`.
pub const KAPPA_EXPONENTS: std::ops::RangeInclusive<i32> = -4..=4;

const GAUSSIAN_TAIL_SIGMAS: f64 = 12.0;
const CANTOR_MAX_DEPTH: u32 = 30;
const INITIAL_SPLIT_LEVEL: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct RankOneModel {
    h0: DMatrix<f64>,
    phi: DVector<f64>,
}

impl RankOneModel {
    pub fn new(h0: DMatrix<f64>, phi: DVector<f64>) -> Result<Self> {
        let n = h0.nrows();
        if n == 0 || h0.ncols() != n {
            return Err(Error::InvalidArgument("H_0 must be a nonempty square matrix".into()));
        }
        if n > MAX_MODEL_SIZE {
            return Err(Error::InvalidArgument(format!(
                "rank-one models are limited to {MAX_MODEL_SIZE} sites, got {n}"
            )));
        }
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.len(),
            });
        }
        let scale = h0.amax().max(1.0);
        if (&h0 - h0.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("H_0 is not symmetric".into()));
        }
        if (phi.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "phi must be a unit vector, |phi| = {}",
                phi.norm()
            )));
        }
        Ok(Self { h0, phi })
    }

    /// The one-site model `H_0 = h`, `phi = 1`.
    pub fn scalar(h: f64) -> Self {
        Self {
            h0: DMatrix::from_element(1, 1, h),
            phi: DVector::from_element(1, 1.0),
        }
    }

    /// Symmetric `H_0` with entries uniform in `[-1, 1]` and a random unit `phi`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > MAX_MODEL_SIZE {
            return Err(Error::InvalidArgument(format!("model size {n} out of range")));
        }
        let mut h0 = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = rng.random_range(-1.0..=1.0);
                h0[(i, j)] = x;
                h0[(j, i)] = x;
            }
        }
        let mut phi = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let norm = phi.norm();
        if norm == 0.0 {
            phi[0] = 1.0;
        } else {
            phi /= norm;
        }
        Self::new(h0, phi)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &DMatrix<f64> {
        &self.h0
    }

    pub fn phi(&self) -> &DVector<f64> {
        &self.phi
    }

    /// `||H_0||_inf`, an upper bound for the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.h0
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hamiltonian(&self, omega: f64) -> DMatrix<f64> {
        &self.h0 + omega * &self.phi * self.phi.transpose()
    }

    /// Eigenvalues of `H_omega` with the weights `|<v_k, phi>|^2`.
    pub fn spectral_weights(&self, omega: f64) -> Vec<(f64, f64)> {
        let eig = SymmetricEigen::new(self.hamiltonian(omega));
        eig.eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&l, v)| (l, v.dot(&self.phi).powi(2)))
            .collect()
    }

    /// `<phi, P_omega(I) phi>`.
    pub fn projection_weight(&self, omega: f64, interval: &HalfOpenInterval) -> f64 {
        self.spectral_weights(omega)
            .into_iter()
            .filter(|(l, _)| interval.contains(*l))
            .map(|(_, w)| w)
            .sum()
    }

    fn direct_resolvent(&self, omega: f64, z: Complex64) -> Result<Complex64> {
        let n = self.dim();
        let h = self.hamiltonian(omega);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { z } else { Complex64::new(0.0, 0.0) };
            Complex64::new(h[(i, j)], 0.0) - d
        });
        let rhs = DVector::from_fn(n, |i, _| Complex64::new(self.phi[i], 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Consistency("H_omega - z is singular".into()))?;
        Ok(rhs.iter().zip(x.iter()).map(|(p, xi)| p * xi).sum())
    }
}

fn check_upper_half_plane(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidArgument(format!("need Im z > 0, got z = {z}")));
    }
    Ok(())
}

/// Both sides of the rank-one resolvent identity: the direct solve of
/// `<phi, (H_omega - z)^{-1} phi>` and `(<phi, (H_0 - z)^{-1} phi>^{-1} + omega)^{-1}`.
pub fn resolvent_pair(model: &RankOneModel, omega: f64, z: Complex64) -> Result<(Complex64, Complex64)> {
    check_upper_half_plane(z)?;
    let direct = model.direct_resolvent(omega, z)?;
    let g0 = model.direct_resolvent(0.0, z)?;
    let identity = 1.0 / (1.0 / g0 + omega);
    Ok((direct, identity))
}

/// `<phi, (H_omega - z)^{-1} phi>`, after checking the rank-one identity to
/// `1e-10 (1 + |value|)`.
pub fn rank_one_resolvent(model: &RankOneModel, omega: f64, z: Complex64) -> Result<Complex64> {
    let (direct, identity) = resolvent_pair(model, omega, z)?;
    let gap = (direct - identity).norm();
    if gap > 1e-10 * (1.0 + identity.norm()) {
        return Err(Error::Consistency(format!(
            "rank-one identity off by {gap:e} at omega = {omega}, z = {z}"
        )));
    }
    Ok(identity)
}

/// `(a, b)` with `a - i b = (kappa / 2 eps) <phi, R_0(E + i eps) phi>^{-1}`.
pub fn ab_pair(model: &RankOneModel, energy: f64, eps: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need eps > 0 and kappa > 0, got {eps}, {kappa}"
        )));
    }
    let g = model.direct_resolvent(0.0, Complex64::new(energy, eps))?;
    let w = (kappa / (2.0 * eps)) / g;
    let (a, b) = (w.re, -w.im);
    if b < 0.5 * kappa * (1.0 - 1e-12) {
        return Err(Error::Consistency(format!("b = {b} below kappa / 2 = {}", kappa / 2.0)));
    }
    Ok((a, b))
}

/// Quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    /// Maximum bisection depth below the initial split.
    pub max_depth: u32,
    /// Absolute tolerance on the integral; also the slack of every comparison.
    pub tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            max_depth: 40,
            tolerance: 1e-7,
        }
    }
}

impl Quadrature {
    fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("quadrature depth must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    Constant(f64),
    Gaussian { mean: f64, std_dev: f64, scale: f64 },
}

impl Weight {
    fn at(&self, x: f64) -> f64 {
        match *self {
            Weight::Constant(h) => h,
            Weight::Gaussian { mean, std_dev, scale } => scale * gaussian_pdf(x, mean, std_dev),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    weight: Weight,
}

enum Layout {
    Density(Vec<Piece>),
    Cantor,
}

fn layout(measure: &Measure) -> Result<Layout> {
    let gaussian_piece = |mean: f64, std_dev: f64, scale: f64, lo: f64, hi: f64| {
        let a = lo.max(mean - GAUSSIAN_TAIL_SIGMAS * std_dev);
        let b = hi.min(mean + GAUSSIAN_TAIL_SIGMAS * std_dev);
        let (a, b) = if a < b { (a, b) } else { (lo, hi) };
        Piece {
            a,
            b,
            weight: Weight::Gaussian {
                mean,
                std_dev,
                scale,
            },
        }
    };
    let constant_pieces = |breaks: &[f64], heights: &[f64], scale: f64| {
        breaks
            .windows(2)
            .zip(heights)
            .filter(|(_, &h)| h > 0.0)
            .map(|(w, &h)| Piece {
                a: w[0],
                b: w[1],
                weight: Weight::Constant(scale * h),
            })
            .collect::<Vec<_>>()
    };
    Ok(match measure {
        Measure::Uniform { lo, hi } => Layout::Density(vec![Piece {
            a: *lo,
            b: *hi,
            weight: Weight::Constant(1.0 / (hi - lo)),
        }]),
        Measure::PiecewiseConstant { breaks, heights } => {
            Layout::Density(constant_pieces(breaks, heights, 1.0))
        }
        Measure::Cantor { .. } => Layout::Cantor,
        Measure::Gaussian { mean, std_dev } => Layout::Density(vec![gaussian_piece(
            *mean,
            *std_dev,
            1.0,
            f64::NEG_INFINITY,
            f64::INFINITY,
        )]),
        Measure::Truncated {
            inner,
            cutoff,
            normalizer,
        } => match inner.as_ref() {
            Measure::Uniform { .. } | Measure::PiecewiseConstant { .. } => {
                let (breaks, heights) = inner
                    .restricted_density(*cutoff)
                    .ok_or(Error::ZeroMass { m: *cutoff })?;
                Layout::Density(constant_pieces(&breaks, &heights, *normalizer))
            }
            Measure::Gaussian { mean, std_dev } => Layout::Density(vec![gaussian_piece(
                *mean,
                *std_dev,
                *normalizer,
                -cutoff,
                *cutoff,
            )]),
            Measure::Cantor { .. } if *cutoff >= 1.0 => Layout::Cantor,
            _ => return Err(Error::OracleOnlyMeasure(measure.to_string())),
        },
    })
}

#[derive(Debug, Default, Clone, Copy)]
struct Partial {
    value: f64,
    residual: f64,
}

impl Partial {
    fn add(self, other: Partial) -> Partial {
        Partial {
            value: self.value + other.value,
            residual: self.residual + other.residual,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    depth: u32,
    max_depth: u32,
    tol: f64,
) -> Partial {
    let m = 0.5 * (a + b);
    let flm = g(0.5 * (a + m));
    let frm = g(0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Partial {
            value: left + right,
            residual: 0.0,
        };
    }
    if depth >= max_depth {
        return Partial {
            value: left + right,
            residual: diff.abs(),
        };
    }
    simpson(g, a, m, fa, flm, fm, left, depth + 1, max_depth, 0.5 * tol).add(simpson(
        g,
        m,
        b,
        fm,
        frm,
        fb,
        right,
        depth + 1,
        max_depth,
        0.5 * tol,
    ))
}

#[allow(clippy::too_many_arguments)]
fn cantor_cell<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    len: f64,
    mass: f64,
    flo: f64,
    fhi: f64,
    depth: u32,
    max_depth: u32,
    tol: f64,
) -> Partial {
    let third = len / 3.0;
    let f1 = f(lo + third);
    let f2 = f(lo + 2.0 * third);
    let coarse = mass * 0.5 * (flo + fhi);
    let fine = 0.25 * mass * (flo + f1 + f2 + fhi);
    let diff = (fine - coarse).abs();
    if diff <= tol {
        return Partial {
            value: fine,
            residual: 0.0,
        };
    }
    if depth >= max_depth {
        return Partial {
            value: fine,
            residual: diff,
        };
    }
    let (m, t) = (0.5 * mass, 0.5 * tol);
    cantor_cell(f, lo, third, m, flo, f1, depth + 1, max_depth, t).add(cantor_cell(
        f,
        lo + 2.0 * third,
        third,
        m,
        f2,
        fhi,
        depth + 1,
        max_depth,
        t,
    ))
}

/// The level-`k` Cantor cells as `(left endpoint, length)`, left to right.
fn cantor_cells(level: u32) -> Vec<(f64, f64)> {
    let mut cells = vec![(0.0, 1.0)];
    for _ in 0..level {
        cells = cells
            .into_iter()
            .flat_map(|(lo, len)| {
                let t = len / 3.0;
                [(lo, t), (lo + 2.0 * t, t)]
            })
            .collect();
    }
    cells
}

/// `int f dmu` for a bounded `f`, with an estimate of the unresolved error.
/// The first levels are split into cells evaluated in parallel and summed in
/// order.
fn integrate<F>(measure: &Measure, f: F, quad: &Quadrature) -> Result<Partial>
where
    F: Fn(f64) -> f64 + Sync,
{
    quad.validate()?;
    let cells = 1u32 << INITIAL_SPLIT_LEVEL;
    let total = match layout(measure)? {
        Layout::Density(pieces) => {
            let tasks: Vec<(f64, f64, Weight)> = pieces
                .iter()
                .flat_map(|p| {
                    let h = (p.b - p.a) / cells as f64;
                    (0..cells).map(move |k| {
                        let a = p.a + k as f64 * h;
                        let b = if k + 1 == cells { p.b } else { a + h };
                        (a, b, p.weight)
                    })
                })
                .collect();
            let tol = quad.tolerance / tasks.len() as f64;
            let parts: Vec<Partial> = tasks
                .par_iter()
                .map(|&(a, b, w)| {
                    let g = |x: f64| f(x) * w.at(x);
                    let (fa, fb) = (g(a), g(b));
                    let fm = g(0.5 * (a + b));
                    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
                    simpson(&g, a, b, fa, fm, fb, whole, 0, quad.max_depth, tol)
                })
                .collect();
            parts.into_iter().fold(Partial::default(), Partial::add)
        }
        Layout::Cantor => {
            let level = INITIAL_SPLIT_LEVEL;
            let mass = 0.5f64.powi(level as i32);
            let max_depth = quad.max_depth.min(CANTOR_MAX_DEPTH.saturating_sub(level)).max(1);
            let tol = quad.tolerance * mass;
            let parts: Vec<Partial> = cantor_cells(level)
                .par_iter()
                .map(|&(lo, len)| {
                    cantor_cell(&f, lo, len, mass, f(lo), f(lo + len), 0, max_depth, tol)
                })
                .collect();
            parts.into_iter().fold(Partial::default(), Partial::add)
        }
    };
    if total.residual > quad.tolerance {
        return Err(Error::QuadratureDiverged {
            residual: total.residual,
        });
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralAverage {
    pub value: f64,
    /// `Q_mu(|I|)`.
    pub bound: f64,
    pub residual: f64,
    pub pass: bool,
}

/// `int dmu(omega) <phi, P_omega(I) phi>` against `Q_mu(|I|)`.
pub fn spectral_average(
    model: &RankOneModel,
    measure: &Measure,
    interval: &HalfOpenInterval,
    quad: &Quadrature,
) -> Result<SpectralAverage> {
    let Partial { value, residual } =
        integrate(measure, |w| model.projection_weight(w, interval), quad)?;
    let bound = measure.q_of(interval.len())?;
    Ok(SpectralAverage {
        value,
        bound,
        residual,
        pass: value <= bound + quad.tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LebesgueAverage {
    pub lebesgue_value: f64,
    /// `|I|`.
    pub bound: f64,
    pub residual: f64,
    pub pass: bool,
}

/// `int_{-W}^{W} domega <phi, P_omega(I) phi>` against `|I|`. The window must
/// reach past `||H_0|| + max(|a|, |b|)`, beyond which the eigenvalue carried by
/// `phi` has left `I`.
pub fn bounded_density_average(
    model: &RankOneModel,
    interval: &HalfOpenInterval,
    window: f64,
    quad: &Quadrature,
) -> Result<LebesgueAverage> {
    let needed = model.norm_bound() + interval.lo().abs().max(interval.hi().abs());
    if !(window >= needed) {
        return Err(Error::InvalidArgument(format!(
            "window {window} too small, need at least {needed}"
        )));
    }
    let lebesgue = Measure::uniform(-window, window)?;
    let Partial { value, residual } = integrate(
        &lebesgue,
        |w| 2.0 * window * model.projection_weight(w, interval),
        quad,
    )?;
    Ok(LebesgueAverage {
        lebesgue_value: value,
        bound: interval.len(),
        residual,
        pass: value <= interval.len() + quad.tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImAverage {
    /// `eps int dmu Im <phi, (H_omega - z)^{-1} phi>`.
    pub lhs: f64,
    /// `pi (1 + kappa / 2) S_mu(2 eps / kappa)`.
    pub rhs: f64,
    pub residual: f64,
    /// Couplings at which the projector domination was checked.
    pub checked_couplings: usize,
    pub domination_violations: usize,
    pub pass: bool,
}

/// Number of couplings used for the pointwise projector check.
pub const DOMINATION_POINTS: usize = 257;

fn domination_grid(measure: &Measure) -> Result<Vec<f64>> {
    Ok(match layout(measure)? {
        Layout::Cantor => cantor_cells(8).into_iter().map(|(lo, _)| lo).chain([1.0]).collect(),
        Layout::Density(pieces) => {
            let a = pieces.first().map_or(0.0, |p| p.a);
            let b = pieces.last().map_or(1.0, |p| p.b);
            let n = DOMINATION_POINTS - 1;
            (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
        }
    })
}

/// The averaged imaginary part of the resolvent at `z = E + i eps`, computed
/// from the closed form in `(a, b)`, against `pi (1 + kappa/2) S_mu(2 eps/kappa)`.
/// Also checks `<phi, P_omega(]E - eps, E + eps]) phi> <= 2 eps Im <phi, (H_omega - z)^{-1} phi>`
/// on a grid of couplings spanning the support.
pub fn averaged_im_resolvent(
    model: &RankOneModel,
    measure: &Measure,
    energy: f64,
    eps: f64,
    kappa: f64,
    quad: &Quadrature,
) -> Result<ImAverage> {
    let (a, b) = ab_pair(model, energy, eps, kappa)?;
    let c = kappa / (2.0 * eps);
    let integrand = |w: f64| {
        let t = a + c * w;
        0.5 * kappa * b / (t * t + b * b)
    };
    let Partial { value: lhs, residual } = integrate(measure, integrand, quad)?;
    let rhs = std::f64::consts::PI * (1.0 + 0.5 * kappa) * measure.concentration(2.0 * eps / kappa)?;

    let window = HalfOpenInterval::new(energy - eps, energy + eps)?;
    let grid = domination_grid(measure)?;
    let violations = grid
        .par_iter()
        .filter(|&&w| {
            let weights = model.spectral_weights(w);
            let projected: f64 = weights
                .iter()
                .filter(|(l, _)| window.contains(*l))
                .map(|(_, x)| x)
                .sum();
            let im: f64 = weights
                .iter()
                .map(|(l, x)| x * eps / ((l - energy).powi(2) + eps * eps))
                .sum();
            projected > 2.0 * eps * im + 1e-12
        })
        .count();
    Ok(ImAverage {
        lhs,
        rhs,
        residual,
        checked_couplings: grid.len(),
        domination_violations: violations,
        pass: lhs <= rhs + quad.tolerance && violations == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaOptimum {
    /// Minimizer of `pi (2 + kappa) S(|I| / kappa)` on the grid.
    pub kappa_simple: f64,
    pub simple: f64,
    /// Minimizer of `4 (1 + kappa) S(|I| / kappa)` on the grid.
    pub kappa_refined: f64,
    pub refined: f64,
}

/// Minimizes both spectral averaging constants over `kappa = 2^k`,
/// `k in KAPPA_EXPONENTS`. Since `kappa = 1` is on the grid the results never
/// exceed `3 pi S(|I|)` and `8 S(|I|)`.
pub fn optimize_kappa(measure: &Measure, len: f64) -> Result<KappaOptimum> {
    let mut best = KappaOptimum {
        kappa_simple: f64::NAN,
        simple: f64::INFINITY,
        kappa_refined: f64::NAN,
        refined: f64::INFINITY,
    };
    for k in KAPPA_EXPONENTS {
        let kappa = 2f64.powi(k);
        let s = measure.concentration(len / kappa)?;
        let simple = std::f64::consts::PI * (2.0 + kappa) * s;
        let refined = 4.0 * (1.0 + kappa) * s;
        if simple < best.simple {
            best.simple = simple;
            best.kappa_simple = kappa;
        }
        if refined < best.refined {
            best.refined = refined;
            best.kappa_refined = kappa;
        }
    }
    Ok(best)
}
