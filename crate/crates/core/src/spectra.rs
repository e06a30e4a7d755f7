//! Spectra of singularities `d(h)`, upper logarithmic densities `ρ(α)`,
//! the selfsimilarity kernels and the map from `ρ` to `d`.
//!
//! Absent values (`None`) stand for `-∞` throughout.

use std::f64::consts::{E, LN_2, LOG2_E};
use std::fmt;

use crate::error::{Error, Result};

/// Default step of α and h grids.
pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Tolerance used when matching grid points to `h_min`, `h_max` and atoms.
pub const GRID_TOL: f64 = 1e-9;

/// Grid `step, 2·step, ..., n·step` with `n·step ≈ upper`.
pub fn uniform_grid(step: f64, upper: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && upper >= step && upper.is_finite()) {
        return Err(Error::InvalidGrid(format!("step {step}, upper {upper}")));
    }
    let n = (upper / step).round() as usize;
    Ok((1..=n).map(|i| i as f64 * step).collect())
}

/// Grid `lo, lo + step, ..., hi` (inclusive up to rounding).
pub fn range_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("[{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn check_increasing(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("{what} grid has non-finite points")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{what} grid is not strictly increasing")));
    }
    Ok(())
}

/// Inserts `points` into a sorted grid; grid points within [`GRID_TOL`] of an
/// inserted point are snapped onto it.
fn merge_points(grid: &[f64], points: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = grid.to_vec();
    for &p in points {
        match out.iter().position(|&x| (x - p).abs() <= GRID_TOL) {
            Some(i) => out[i] = p,
            None => {
                let i = out.partition_point(|&x| x < p);
                out.insert(i, p);
            }
        }
    }
    out
}

/// A spectrum of singularities sampled on an h grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    h: Vec<f64>,
    d: Vec<Option<f64>>,
    h_min: f64,
    h_max: f64,
}

impl SpectrumCurve {
    /// Builds a curve from grid values; `h_min` and `h_max` are the first and
    /// last grid points with a present value.
    pub fn new(h: Vec<f64>, d: Vec<Option<f64>>) -> Result<Self> {
        if h.len() != d.len() {
            return Err(Error::InvalidCurve(format!(
                "{} grid points but {} values",
                h.len(),
                d.len()
            )));
        }
        check_increasing(&h, "h").map_err(|e| Error::InvalidCurve(e.to_string()))?;
        if h[0] <= 0.0 {
            return Err(Error::InvalidCurve("h grid must be positive".into()));
        }
        if d.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite d value".into()));
        }
        let first = d.iter().position(Option::is_some);
        let last = d.iter().rposition(Option::is_some);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::InvalidCurve("no present values".into()));
        };
        Ok(Self {
            h_min: h[first],
            h_max: h[last],
            h,
            d,
        })
    }

    /// Evaluates `f` on the grid points inside `[h_min, h_max]`, inserting
    /// both endpoints into the grid when missing.
    pub fn from_fn(grid: &[f64], h_min: f64, h_max: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(h_min > 0.0 && h_max >= h_min) {
            return Err(Error::InvalidCurve(format!("bad support [{h_min}, {h_max}]")));
        }
        let h = merge_points(grid, &[h_min, h_max]);
        let d = h
            .iter()
            .map(|&x| (x >= h_min && x <= h_max).then(|| f(x)))
            .collect();
        Self::new(h, d)
    }

    /// Single-point spectrum `d(H) = 1`.
    pub fn monofractal(h: f64) -> Result<Self> {
        Self::new(vec![h], vec![Some(1.0)])
    }

    pub fn h_grid(&self) -> &[f64] {
        &self.h
    }

    pub fn d_values(&self) -> &[Option<f64>] {
        &self.d
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn is_single_point(&self) -> bool {
        (self.h_max - self.h_min).abs() <= GRID_TOL
    }

    /// Linear interpolation between present neighbours; `None` outside the
    /// support or next to an absent value.
    pub fn interpolate(&self, h: f64) -> Option<f64> {
        if h < self.h_min - GRID_TOL || h > self.h_max + GRID_TOL {
            return None;
        }
        let i = self.h.partition_point(|&x| x < h);
        if i < self.h.len() && (self.h[i] - h).abs() <= GRID_TOL {
            return self.d[i];
        }
        if i > 0 && (self.h[i - 1] - h).abs() <= GRID_TOL {
            return self.d[i - 1];
        }
        if i == 0 || i == self.h.len() {
            return None;
        }
        let (h0, h1) = (self.h[i - 1], self.h[i]);
        let (d0, d1) = (self.d[i - 1]?, self.d[i]?);
        Some(d0 + (d1 - d0) * (h - h0) / (h1 - h0))
    }

    /// Reinterprets the curve as a sampled log-density (`ρ = d`).
    pub fn as_log_density(&self) -> LogDensity {
        LogDensity::Sampled {
            alpha: self.h.clone(),
            rho: self.d.clone(),
        }
    }
}

/// A broken admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    AboveOne { h: f64, d: f64 },
    NegativeInside { h: f64, d: f64 },
    MissingInside { h: f64 },
    PresentOutside { h: f64 },
    RatioDecreasing { h: f64 },
    NotOneAtMax { h_max: f64, d: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AboveOne { h, d } => write!(f, "d({h}) = {d} > 1"),
            Violation::NegativeInside { h, d } => write!(f, "d({h}) = {d} < 0 inside [h_min, h_max]"),
            Violation::MissingInside { h } => write!(f, "d({h}) absent inside [h_min, h_max]"),
            Violation::PresentOutside { h } => write!(f, "d({h}) present outside [h_min, h_max]"),
            Violation::RatioDecreasing { h } => write!(f, "d(h)/h decreases at h = {h}"),
            Violation::NotOneAtMax { h_max, d } => write!(f, "d(h_max = {h_max}) = {d} != 1"),
        }
    }
}

/// Result of [`check_admissible`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
    /// Vacuous on a finite grid, always recorded as satisfied.
    pub right_continuous: bool,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks the conditions a random wavelet series spectrum must satisfy.
pub fn check_admissible(curve: &SpectrumCurve) -> Diagnostics {
    const TOL: f64 = 1e-12;
    let mut violations = Vec::new();
    let inside = |h: f64| h >= curve.h_min - GRID_TOL && h <= curve.h_max + GRID_TOL;
    let mut prev_ratio: Option<f64> = None;
    for (&h, &d) in curve.h.iter().zip(&curve.d) {
        match (inside(h), d) {
            (true, Some(d)) => {
                if d > 1.0 + TOL {
                    violations.push(Violation::AboveOne { h, d });
                }
                if d < -TOL {
                    violations.push(Violation::NegativeInside { h, d });
                }
                let ratio = d / h;
                if let Some(p) = prev_ratio {
                    if ratio < p - TOL {
                        violations.push(Violation::RatioDecreasing { h });
                    }
                }
                prev_ratio = Some(ratio);
            }
            (true, None) => violations.push(Violation::MissingInside { h }),
            (false, Some(_)) => violations.push(Violation::PresentOutside { h }),
            (false, None) => {}
        }
    }
    let at_max = curve
        .h
        .iter()
        .zip(&curve.d)
        .min_by(|a, b| (a.0 - curve.h_max).abs().total_cmp(&(b.0 - curve.h_max).abs()))
        .and_then(|(_, d)| *d);
    match at_max {
        Some(d) if (d - 1.0).abs() <= 1e-9 => {}
        d => violations.push(Violation::NotOneAtMax {
            h_max: curve.h_max,
            d: d.unwrap_or(f64::NEG_INFINITY),
        }),
    }
    Diagnostics {
        violations,
        right_continuous: true,
    }
}

/// Selfsimilarity kernels whose convolution powers give per-scale laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelLaw {
    /// Normal kernel: log-normal wavelet coefficients.
    Gaussian { mean: f64, sigma: f64 },
    /// Dirac at `alpha0` convolved with a Gamma law of shape `nu`, rate `beta`.
    ShiftedGamma { alpha0: f64, nu: f64, beta: f64 },
    /// Dirac at `alpha0` convolved with a Poisson law of parameter `c`.
    ShiftedPoisson { alpha0: f64, c: f64 },
    /// Monofractal: every exponent equals `h`.
    Dirac { h: f64 },
}

impl KernelLaw {
    pub fn name(&self) -> &'static str {
        match self {
            KernelLaw::Gaussian { .. } => "gaussian",
            KernelLaw::ShiftedGamma { .. } => "gamma",
            KernelLaw::ShiftedPoisson { .. } => "poisson",
            KernelLaw::Dirac { .. } => "dirac",
        }
    }

    /// Checks parameter positivity and the validity threshold that makes
    /// `ρ(α) < 0` for all α below some positive γ.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::KernelValidity(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            KernelLaw::Gaussian { mean, sigma } => {
                if !finite(&[mean, sigma]) || sigma <= 0.0 {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                let threshold = sigma * (2.0 * LN_2).sqrt();
                if mean <= threshold {
                    return bad(format!(
                        "m ≤ σ√(2 ln 2): m = {mean} but σ√(2 ln 2) = {threshold:.6}"
                    ));
                }
            }
            KernelLaw::ShiftedGamma { alpha0, nu, beta } => {
                if !finite(&[alpha0, nu, beta]) || nu <= 0.0 || beta <= 0.0 {
                    return bad(format!("nu and beta must be positive, got nu = {nu}, beta = {beta}"));
                }
                let star = self.alpha_star()?;
                if alpha0 <= star {
                    return bad(format!("α₀ ≤ α*(ν, β): α₀ = {alpha0} but α* = {star:.10}"));
                }
            }
            KernelLaw::ShiftedPoisson { alpha0, c } => {
                if !finite(&[alpha0, c]) || c <= 0.0 {
                    return bad(format!("c must be positive, got {c}"));
                }
                let star = self.alpha_star()?;
                if alpha0 <= star {
                    return bad(format!("α₀ ≤ α*(c): α₀ = {alpha0} but α* = {star:.10}"));
                }
                // For c ≤ ln 2 the density is already positive at α₀⁺.
                if c <= LN_2 && alpha0 <= 0.0 {
                    return bad(format!(
                        "c ≤ ln 2 gives ρ(α₀⁺) = {:.6} ≥ 0, so α₀ must be positive (got {alpha0})",
                        1.0 - c * LOG2_E
                    ));
                }
            }
            KernelLaw::Dirac { h } => {
                if !(h > 0.0 && h.is_finite()) {
                    return bad(format!("H must be positive, got {h}"));
                }
            }
        }
        Ok(())
    }

    /// Closed-form `ρ(α)`; `None` is `-∞`. Parameters are not validated.
    pub fn rho_unchecked(&self, alpha: f64) -> Option<f64> {
        match *self {
            KernelLaw::Gaussian { mean, sigma } => {
                Some(1.0 - LOG2_E * (alpha - mean).powi(2) / (2.0 * sigma * sigma))
            }
            KernelLaw::ShiftedGamma { alpha0, nu, beta } => {
                let x = alpha - alpha0;
                (x > 0.0).then(|| {
                    1.0 + nu * x.log2() - beta * LOG2_E * x + nu * (beta * E / nu).log2()
                })
            }
            KernelLaw::ShiftedPoisson { alpha0, c } => {
                let x = alpha - alpha0;
                (x > 0.0).then(|| 1.0 - c * LOG2_E + x * (c * E / x).log2())
            }
            KernelLaw::Dirac { h } => ((alpha - h).abs() <= GRID_TOL).then_some(1.0),
        }
    }

    /// Location of the maximum `ρ = 1`.
    pub fn mode(&self) -> f64 {
        match *self {
            KernelLaw::Gaussian { mean, .. } => mean,
            KernelLaw::ShiftedGamma { alpha0, nu, beta } => alpha0 + nu / beta,
            KernelLaw::ShiftedPoisson { alpha0, c } => alpha0 + c,
            KernelLaw::Dirac { h } => h,
        }
    }

    /// Validity threshold α* of the shifted Gamma and Poisson kernels.
    ///
    /// Gamma: the largest root of `1 + ν log₂(−a) + β log₂(e) a + ν log₂(βe/ν) = 0`.
    /// Poisson: the largest negative root of `1 − c log₂(e) − a log₂(ce/(−a)) = 0`.
    /// Both are found by bisection in `x = −a > 0`.
    pub fn alpha_star(&self) -> Result<f64> {
        match *self {
            KernelLaw::ShiftedGamma { nu, beta, .. } => {
                let f = |x: f64| 1.0 + nu * x.log2() - beta * LOG2_E * x + nu * (beta * E / nu).log2();
                // f(0+) = -inf, f(ν/β) = 1: the smaller root lies in between.
                let hi = nu / beta;
                let mut lo = hi;
                while f(lo) >= 0.0 {
                    lo *= 0.5;
                    if lo < f64::MIN_POSITIVE {
                        return Err(Error::Domain("gamma threshold root not bracketed".into()));
                    }
                }
                Ok(-bisect(f, lo, hi))
            }
            KernelLaw::ShiftedPoisson { c, .. } => {
                let f = |x: f64| 1.0 - c * LOG2_E + x * (c * E / x).log2();
                // f(c) = 1 is the maximum; f(0+) = 1 − c log₂e.
                if 1.0 - c * LOG2_E < 0.0 {
                    let mut lo = c;
                    while f(lo) >= 0.0 {
                        lo *= 0.5;
                    }
                    Ok(-bisect(f, lo, c))
                } else {
                    let mut hi = 2.0 * c;
                    while f(hi) >= 0.0 {
                        hi *= 2.0;
                        if !hi.is_finite() {
                            return Err(Error::Domain("poisson threshold root not bracketed".into()));
                        }
                    }
                    Ok(-bisect(f, c, hi))
                }
            }
            KernelLaw::Gaussian { .. } => Err(Error::UnsupportedVariant("gaussian")),
            KernelLaw::Dirac { .. } => Err(Error::UnsupportedVariant("dirac")),
        }
    }
}

/// Bisection for a sign change of `f` on `[a, b]`, run until the bracket
/// cannot shrink further in floating point.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let lo_neg = f(lo) < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo).abs(), f(hi).abs());
    if flo <= fhi {
        lo
    } else {
        hi
    }
}

/// `ρ` of a selfsimilarity kernel, validating it first.
pub fn rho_of_kernel(kernel: &KernelLaw, alpha: f64) -> Result<Option<f64>> {
    kernel.validate()?;
    Ok(kernel.rho_unchecked(alpha))
}

/// Threshold α* of a kernel. See [`KernelLaw::alpha_star`].
pub fn kernel_alpha_star(kernel: &KernelLaw) -> Result<f64> {
    kernel.alpha_star()
}

/// The upper logarithmic density of a process.
#[derive(Debug, Clone, PartialEq)]
pub enum LogDensity {
    Kernel(KernelLaw),
    Sampled { alpha: Vec<f64>, rho: Vec<Option<f64>> },
}

impl LogDensity {
    /// Values on `grid`. Kernels are evaluated on the grid with the Dirac atom
    /// inserted; sampled densities return their own grid.
    pub fn sample(&self, grid: &[f64]) -> (Vec<f64>, Vec<Option<f64>>) {
        match self {
            LogDensity::Kernel(k) => {
                let alpha = match k {
                    KernelLaw::Dirac { h } => merge_points(grid, &[*h]),
                    _ => grid.to_vec(),
                };
                let rho = alpha.iter().map(|&a| k.rho_unchecked(a)).collect();
                (alpha, rho)
            }
            LogDensity::Sampled { alpha, rho } => (alpha.clone(), rho.clone()),
        }
    }

    /// Smallest sampled α with `ρ(α) ≥ 0`.
    pub fn gamma_check(&self, grid: &[f64]) -> Option<f64> {
        let (alpha, rho) = self.sample(grid);
        alpha
            .iter()
            .zip(&rho)
            .find(|(_, r)| matches!(r, Some(v) if *v >= 0.0))
            .map(|(a, _)| *a)
    }

    /// Structural and value checks: `ρ ≤ 1` and `ρ < 0` for `α ≤ 0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            LogDensity::Kernel(k) => k.validate(),
            LogDensity::Sampled { alpha, rho } => {
                if alpha.len() != rho.len() {
                    return Err(Error::InvalidDensity("grid and values differ in length".into()));
                }
                check_increasing(alpha, "alpha").map_err(|e| Error::InvalidDensity(e.to_string()))?;
                for (&a, r) in alpha.iter().zip(rho) {
                    let Some(r) = *r else { continue };
                    if !r.is_finite() || r > 1.0 + 1e-12 {
                        return Err(Error::InvalidDensity(format!("rho({a}) = {r} exceeds 1")));
                    }
                    if a <= 0.0 && r >= 0.0 {
                        return Err(Error::InvalidDensity(format!(
                            "rho({a}) = {r} >= 0 at non-positive alpha"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Spectrum of singularities of the random wavelet series with density `ρ`:
/// `d(h) = h sup_{α ∈ (0, h]} ρ(α)/α` on `[h_min, h_max]`.
///
/// The supremum is a running maximum over the density's grid. The output grid
/// is `h_grid` with `h_min` and `h_max` inserted.
pub fn spectrum_from_rho(density: &LogDensity, h_grid: &[f64]) -> Result<SpectrumCurve> {
    density.validate()?;
    check_increasing(h_grid, "h")?;
    let (alpha, rho) = density.sample(h_grid);

    let mut max_rho = f64::NEG_INFINITY;
    let mut h_min = None;
    let mut best_ratio = f64::NEG_INFINITY;
    for (&a, r) in alpha.iter().zip(&rho) {
        let Some(r) = *r else { continue };
        max_rho = max_rho.max(r);
        if r >= 0.0 && h_min.is_none() {
            h_min = Some(a);
        }
        if a > 0.0 {
            best_ratio = best_ratio.max(r / a);
        }
    }
    if max_rho < 0.0 || h_min.is_none() {
        return Err(Error::EmptySpectrum);
    }
    let h_min = h_min.unwrap();
    if max_rho <= 1e-12 || best_ratio <= 0.0 {
        return Err(Error::FlatSpectrum { h_min });
    }
    let h_max = best_ratio.recip();

    let grid: Vec<f64> = merge_points(h_grid, &[h_min, h_max])
        .into_iter()
        .filter(|&h| h > 0.0)
        .collect();
    let mut d = Vec::with_capacity(grid.len());
    let mut running = f64::NEG_INFINITY;
    let mut next = 0;
    for &h in &grid {
        while next < alpha.len() && alpha[next] <= h + GRID_TOL {
            if let (true, Some(r)) = (alpha[next] > 0.0, rho[next]) {
                running = running.max(r / alpha[next]);
            }
            next += 1;
        }
        let inside = h >= h_min - GRID_TOL && h <= h_max + GRID_TOL;
        d.push((inside && running.is_finite()).then(|| (h * running).min(1.0)));
    }
    SpectrumCurve::new(grid, d)
}
