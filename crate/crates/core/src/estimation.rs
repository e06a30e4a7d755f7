//! Multifractal spectra estimated from a coefficient pyramid.
//!
//! Two routes are computed side by side:
//!
//! * the large-deviation spectrum `d₂(h) = h sup_{α ≤ h} λ̄(α)/α`, where `λ(α)`
//!   is the growth rate of `N_j(α) = #{k : |C_{j,k}| ≥ 2^{-αj}}` and `λ̄` its
//!   running supremum in α;
//! * the Legendre spectrum `d₁(h) = inf_{q ≥ q_c} (hq − τ(q))` of the structure
//!   function `τ(q)`, with `τ(q_c) = 0`.
//!
//! Limits over scales are replaced by ordinary least squares over the
//! `scale_count` finest available scales.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectra::{bisect, range_grid, uniform_grid, DEFAULT_GRID_STEP, GRID_TOL};
use crate::wavelet::{daubechies_filter, forward_dwt, CoefficientPyramid, Signal};

pub const DEFAULT_SCALE_COUNT: usize = 10;
pub const MIN_SCALES: usize = 3;

/// Sorted exponents `α_{j,k} = −log₂|C_{j,k}| / j` per scale, `+∞` for zeros.
/// Scale 0 carries no exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaField {
    levels: Vec<Vec<f64>>,
}

impl AlphaField {
    /// Number of scales in the source pyramid (`J`).
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> Result<&[f64]> {
        if j == 0 || j >= self.levels.len() {
            return Err(Error::ScaleOutOfRange {
                j,
                max: self.levels.len().saturating_sub(1),
            });
        }
        Ok(&self.levels[j])
    }
}

pub fn alpha_exponents(pyramid: &CoefficientPyramid) -> AlphaField {
    let levels = pyramid
        .levels()
        .iter()
        .enumerate()
        .map(|(j, level)| {
            if j == 0 {
                return Vec::new();
            }
            let jf = j as f64;
            let mut alphas: Vec<f64> = level
                .iter()
                .map(|c| if *c == 0.0 { f64::INFINITY } else { -c.abs().log2() / jf })
                .collect();
            alphas.sort_by(f64::total_cmp);
            alphas
        })
        .collect();
    AlphaField { levels }
}

/// `N_j(α) = #{k : α_{j,k} ≤ α}`.
pub fn count_n(field: &AlphaField, j: usize, alpha: f64) -> Result<usize> {
    Ok(field.level(j)?.partition_point(|&a| a <= alpha))
}

/// The `scale_count` finest scales of a depth-`J` pyramid, never scale 0.
pub fn scale_range(depth: usize, scale_count: usize) -> Result<RangeInclusive<usize>> {
    let hi = depth.saturating_sub(1);
    let lo = depth.saturating_sub(scale_count).max(1);
    let available = if hi >= lo { hi - lo + 1 } else { 0 };
    if available < MIN_SCALES {
        return Err(Error::InsufficientScales {
            available,
            needed: MIN_SCALES,
        });
    }
    Ok(lo..=hi)
}

/// Slope and root-mean-square residual of the least-squares line through
/// `(x, y)`.
pub(crate) fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    (slope, (rss / n).sqrt())
}

/// `λ(α)` on a grid, absent where fewer than three scales have `N_j(α) ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCurve {
    pub alpha: Vec<f64>,
    pub lambda: Vec<Option<f64>>,
    pub residuals: Vec<Option<f64>>,
    pub scales: (usize, usize),
}

impl LambdaCurve {
    /// `(sup_α λ(α)/α)^{-1}` over positive present values: the exponent at
    /// which the large-deviation spectrum reaches 1.
    pub fn h_max_estimate(&self) -> Option<f64> {
        let best = self
            .alpha
            .iter()
            .zip(&self.lambda)
            .filter_map(|(&a, l)| (a > 0.0).then_some((*l)? / a))
            .fold(f64::NEG_INFINITY, f64::max);
        (best > 0.0).then(|| best.recip())
    }
}

pub fn estimate_lambda(
    field: &AlphaField,
    alpha_grid: &[f64],
    scale_count: usize,
) -> Result<LambdaCurve> {
    let scales = scale_range(field.depth(), scale_count)?;
    let (lambda, residuals): (Vec<_>, Vec<_>) = alpha_grid
        .par_iter()
        .map(|&a| {
            let points: Vec<(f64, f64)> = scales
                .clone()
                .filter_map(|j| {
                    let n = field.levels[j].partition_point(|&x| x <= a);
                    (n >= 1).then(|| (j as f64, (n as f64).log2()))
                })
                .collect();
            if points.len() < MIN_SCALES {
                (None, None)
            } else {
                let (slope, res) = ols(&points);
                (Some(slope), Some(res))
            }
        })
        .unzip();
    Ok(LambdaCurve {
        alpha: alpha_grid.to_vec(),
        lambda,
        residuals,
        scales: (*scales.start(), *scales.end()),
    })
}

/// Running maximum in increasing α.
pub fn upper_closure(curve: &LambdaCurve) -> LambdaCurve {
    let mut running: Option<f64> = None;
    let lambda = curve
        .lambda
        .iter()
        .map(|v| {
            running = match (running, *v) {
                (Some(r), Some(x)) => Some(r.max(x)),
                (r, x) => r.or(x),
            };
            running
        })
        .collect();
    LambdaCurve {
        lambda,
        ..curve.clone()
    }
}

/// `d₂(h) = h · max_{α ≤ h} λ̄(α)/α`; absent when no grid point qualifies or
/// the maximum is negative.
pub fn large_deviation_spectrum(curve: &LambdaCurve, h_grid: &[f64]) -> Vec<Option<f64>> {
    let mut best = f64::NEG_INFINITY;
    let mut next = 0;
    h_grid
        .iter()
        .map(|&h| {
            while next < curve.alpha.len() && curve.alpha[next] <= h + GRID_TOL {
                let a = curve.alpha[next];
                if let (true, Some(l)) = (a > 0.0, curve.lambda[next]) {
                    best = best.max(l / a);
                }
                next += 1;
            }
            (best.is_finite() && best >= 0.0).then_some(h * best)
        })
        .collect()
}

/// Structure function `τ(q)` with its critical exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct TauCurve {
    pub q: Vec<f64>,
    pub tau: Vec<f64>,
    pub residuals: Vec<f64>,
    pub scales: (usize, usize),
    /// Root of `τ`, when it changes sign on the grid.
    pub q_c: Option<f64>,
}

impl TauCurve {
    /// Piecewise-linear interpolant of `τ`.
    pub fn interpolate(&self, q: f64) -> f64 {
        let i = self.q.partition_point(|&x| x <= q).clamp(1, self.q.len() - 1);
        let (q0, q1) = (self.q[i - 1], self.q[i]);
        let t = (q - q0) / (q1 - q0);
        self.tau[i - 1] + t * (self.tau[i] - self.tau[i - 1])
    }
}

/// `τ(q)` as the least-squares slope of `log₂ Σ_{C ≠ 0} |C_{j,k}|^q` against
/// `−j` over the finest scales. Zero coefficients are left out of the sums.
pub fn structure_function(
    pyramid: &CoefficientPyramid,
    q_grid: &[f64],
    scale_count: usize,
) -> Result<TauCurve> {
    let scales = scale_range(pyramid.depth(), scale_count)?;
    if q_grid.len() < 2 || q_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("q grid must be increasing with at least 2 points".into()));
    }
    let logs: Vec<(usize, Vec<f64>, f64, f64)> = scales
        .clone()
        .map(|j| {
            let l: Vec<f64> = pyramid
                .level(j)
                .iter()
                .filter(|c| **c != 0.0)
                .map(|c| c.abs().log2())
                .collect();
            if l.is_empty() {
                return Err(Error::DegenerateLevel(j));
            }
            let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok((j, l, lo, hi))
        })
        .collect::<Result<_>>()?;

    let (tau, residuals): (Vec<f64>, Vec<f64>) = q_grid
        .par_iter()
        .map(|&q| {
            let points: Vec<(f64, f64)> = logs
                .iter()
                .map(|(j, l, lo, hi)| {
                    let shift = if q >= 0.0 { q * hi } else { q * lo };
                    let s: f64 = l.iter().map(|x| (q * x - shift).exp2()).sum();
                    (-(*j as f64), shift + s.log2())
                })
                .collect();
            ols(&points)
        })
        .unzip();

    let mut curve = TauCurve {
        q: q_grid.to_vec(),
        tau,
        residuals,
        scales: (*scales.start(), *scales.end()),
        q_c: None,
    };
    curve.q_c = critical_q(&curve).ok();
    Ok(curve)
}

/// First root of the piecewise-linear interpolant of `τ`.
pub fn critical_q(curve: &TauCurve) -> Result<f64> {
    for i in 0..curve.q.len() {
        if curve.tau[i] == 0.0 {
            return Ok(curve.q[i]);
        }
        if i + 1 < curve.q.len() && (curve.tau[i] < 0.0) != (curve.tau[i + 1] < 0.0) {
            let (q0, q1) = (curve.q[i], curve.q[i + 1]);
            let (t0, t1) = (curve.tau[i], curve.tau[i + 1]);
            let line = |q: f64| t0 + (t1 - t0) * (q - q0) / (q1 - q0);
            return Ok(bisect(line, q0, q1));
        }
    }
    Err(Error::NoCriticalQ)
}

/// `d₁(h) = min_{q ≥ q_c} (hq − τ(q))` over grid values of `q`; negative
/// values are reported as absent.
pub fn legendre_spectrum(curve: &TauCurve, q_c: f64, h_grid: &[f64]) -> Vec<Option<f64>> {
    let admissible: Vec<(f64, f64)> = curve
        .q
        .iter()
        .zip(&curve.tau)
        .filter(|(q, _)| **q >= q_c - 1e-12)
        .map(|(q, t)| (*q, *t))
        .collect();
    h_grid
        .iter()
        .map(|&h| {
            let d = admissible
                .iter()
                .map(|(q, t)| h * q - t)
                .fold(f64::INFINITY, f64::min);
            (d.is_finite() && d >= 0.0).then_some(d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisMeta {
    pub depth: usize,
    pub wavelet: String,
    pub scales: (usize, usize),
    pub q_c: f64,
    /// True when `τ` had no root and `q_c` fell back to the smallest grid `q`.
    pub q_c_fallback: bool,
    pub h_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedSpectrum {
    pub h: Vec<f64>,
    pub d2: Vec<Option<f64>>,
    pub d1: Vec<Option<f64>>,
    pub meta: AnalysisMeta,
}

impl EstimatedSpectrum {
    /// Largest `d₂(h) − d₁(h)` over points where both are present.
    pub fn max_excess(&self) -> Option<f64> {
        self.d2
            .iter()
            .zip(&self.d1)
            .filter_map(|(a, b)| Some((*a)? - (*b)?))
            .reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub wavelet_order: usize,
    pub scale_count: usize,
    pub alpha_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
}

impl AnalysisOptions {
    /// α and h grids of step `grid_step` on `(0, 4]`, q grid `−5..10` step 0.1.
    pub fn with_grid_step(grid_step: f64) -> Result<Self> {
        let grid = uniform_grid(grid_step, 4.0)?;
        Ok(Self {
            wavelet_order: 3,
            scale_count: DEFAULT_SCALE_COUNT,
            alpha_grid: grid.clone(),
            h_grid: grid,
            q_grid: range_grid(-5.0, 10.0, 0.1)?,
        })
    }
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self::with_grid_step(DEFAULT_GRID_STEP).expect("default grids are valid")
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub lambda: LambdaCurve,
    pub closed_lambda: LambdaCurve,
    pub tau: TauCurve,
    pub spectrum: EstimatedSpectrum,
}

/// Runs both estimators on an already computed pyramid.
pub fn analyze_pyramid(
    pyramid: &CoefficientPyramid,
    options: &AnalysisOptions,
    wavelet: &str,
) -> Result<Analysis> {
    let field = alpha_exponents(pyramid);
    let lambda = estimate_lambda(&field, &options.alpha_grid, options.scale_count)?;
    let closed_lambda = upper_closure(&lambda);
    let d2 = large_deviation_spectrum(&closed_lambda, &options.h_grid);

    let tau = structure_function(pyramid, &options.q_grid, options.scale_count)?;
    let (q_c, q_c_fallback) = match tau.q_c {
        Some(q) => (q, false),
        None => (tau.q[0], true),
    };
    let d1 = legendre_spectrum(&tau, q_c, &options.h_grid);

    let spectrum = EstimatedSpectrum {
        h: options.h_grid.clone(),
        d2,
        d1,
        meta: AnalysisMeta {
            depth: pyramid.depth(),
            wavelet: wavelet.to_string(),
            scales: lambda.scales,
            q_c,
            q_c_fallback,
            h_max: closed_lambda.h_max_estimate(),
        },
    };
    Ok(Analysis {
        lambda,
        closed_lambda,
        tau,
        spectrum,
    })
}

/// Detail coefficients below this fraction of `max |x|` are transform
/// round-off and are treated as exact zeros.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Decomposes `signal` with the configured wavelet and runs both estimators.
pub fn analyze_signal(signal: &Signal, options: &AnalysisOptions) -> Result<Analysis> {
    let filter = daubechies_filter(options.wavelet_order)?;
    let mut pyramid = forward_dwt(signal, &filter)?;
    let floor = ROUNDOFF_FLOOR * signal.samples().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for j in 0..pyramid.depth() {
        for c in pyramid.level_mut(j) {
            if c.abs() <= floor {
                *c = 0.0;
            }
        }
    }
    analyze_pyramid(&pyramid, options, filter.name())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono_pyramid(depth: usize, h: f64) -> CoefficientPyramid {
        let levels = (0..depth)
            .map(|j| {
                let m = (-(j as f64) * h).exp2();
                (0..1usize << j).map(|k| if k % 3 == 0 { -m } else { m }).collect()
            })
            .collect();
        CoefficientPyramid::new(levels, 0.0).unwrap()
    }

    #[test]
    fn exponents_of_monofractal_and_zeros() {
        let mut pyr = mono_pyramid(8, 0.6);
        pyr.level_mut(5)[3] = 0.0;
        let field = alpha_exponents(&pyr);
        assert!(field.level(0).is_err());
        for j in 1..8 {
            let level = field.level(j).unwrap();
            assert_eq!(level.len(), 1 << j);
            let finite: Vec<_> = level.iter().filter(|a| a.is_finite()).collect();
            assert!(finite.iter().all(|a| (**a - 0.6).abs() < 1e-12));
        }
        assert_eq!(*field.level(5).unwrap().last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn counts() {
        let mut pyr = mono_pyramid(8, 0.6);
        pyr.level_mut(4)[0] = 0.0;
        let field = alpha_exponents(&pyr);
        assert_eq!(count_n(&field, 6, 0.5).unwrap(), 0);
        assert_eq!(count_n(&field, 6, 0.6 + 1e-12).unwrap(), 64);
        assert_eq!(count_n(&field, 4, 1e300).unwrap(), 15);
        assert!(matches!(count_n(&field, 8, 1.0), Err(Error::ScaleOutOfRange { .. })));
    }

    #[test]
    fn monofractal_lambda() {
        let field = alpha_exponents(&mono_pyramid(14, 0.7));
        let grid = uniform_grid(0.01, 2.0).unwrap();
        let curve = estimate_lambda(&field, &grid, 10).unwrap();
        assert_eq!(curve.scales, (4, 13));
        for (a, l) in grid.iter().zip(&curve.lambda) {
            if *a < 0.7 - 1e-9 {
                assert_eq!(*l, None);
            } else if *a > 0.7 + 1e-9 {
                assert!((l.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_of_flat_counts_decays() {
        // expected flat counts N_j = j over the 10 finest scales of depth J
        let slope = |depth: usize| {
            let points: Vec<(f64, f64)> =
                (depth - 10..depth).map(|j| (j as f64, (j as f64).log2())).collect();
            ols(&points).0
        };
        assert!((slope(16) - 0.144134).abs() < 1e-6);
        assert!(slope(24) < slope(20) && slope(20) < slope(16));
    }

    #[test]
    fn too_shallow() {
        let field = alpha_exponents(&mono_pyramid(3, 0.5));
        assert!(matches!(
            estimate_lambda(&field, &[1.0], 10),
            Err(Error::InsufficientScales { available: 2, .. })
        ));
        assert!(scale_range(20, 2).is_err());
    }

    #[test]
    fn closure() {
        let mk = |v: Vec<Option<f64>>| LambdaCurve {
            alpha: (1..=v.len()).map(|i| i as f64).collect(),
            residuals: vec![None; v.len()],
            lambda: v,
            scales: (1, 3),
        };
        let dip = upper_closure(&mk(vec![Some(1.0), Some(0.5), Some(0.8)]));
        assert_eq!(dip.lambda, vec![Some(1.0); 3]);
        let mono = mk(vec![None, Some(0.1), Some(0.3)]);
        assert_eq!(upper_closure(&mono).lambda, mono.lambda);
        let none = mk(vec![None, None]);
        assert_eq!(upper_closure(&none).lambda, vec![None, None]);
    }

    #[test]
    fn d2_from_single_atom() {
        let curve = LambdaCurve {
            alpha: vec![0.5, 0.8, 1.0],
            lambda: vec![None, Some(1.0), Some(1.0)],
            residuals: vec![None; 3],
            scales: (1, 3),
        };
        let h = [0.6, 0.8, 1.2, 1.6];
        let d2 = large_deviation_spectrum(&curve, &h);
        assert_eq!(d2[0], None);
        for (hv, d) in h.iter().zip(&d2).skip(1) {
            assert!((d.unwrap() - hv / 0.8).abs() < 1e-12);
        }
        assert!((curve.h_max_estimate().unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn d2_negative_sup_is_absent() {
        let curve = LambdaCurve {
            alpha: vec![0.5, 1.0],
            lambda: vec![Some(-0.2), Some(-0.1)],
            residuals: vec![None; 2],
            scales: (1, 3),
        };
        assert_eq!(large_deviation_spectrum(&curve, &[0.5, 1.0]), vec![None, None]);
    }

    #[test]
    fn monofractal_tau_and_legendre() {
        let pyr = mono_pyramid(14, 0.5);
        let q = range_grid(-5.0, 10.0, 0.1).unwrap();
        let tau = structure_function(&pyr, &q, 10).unwrap();
        for (qv, t) in tau.q.iter().zip(&tau.tau) {
            assert!((t - (0.5 * qv - 1.0)).abs() < 1e-9);
        }
        let q0 = tau.q.iter().position(|x| x.abs() < 1e-9).unwrap();
        assert!((tau.tau[q0] + 1.0).abs() < 1e-12);
        let q_c = critical_q(&tau).unwrap();
        assert!((q_c - 2.0).abs() < 1e-8);
        assert!(tau.interpolate(q_c).abs() < 1e-8);

        let h = uniform_grid(0.05, 2.0).unwrap();
        let d1 = legendre_spectrum(&tau, q_c, &h);
        let at = |x: f64| d1[h.iter().position(|v| (v - x).abs() < 1e-9).unwrap()].unwrap();
        assert!((at(0.5) - 1.0).abs() < 1e-6);
        // slope q_c to the right of H
        assert!(((at(0.7) - at(0.6)) / 0.1 - q_c).abs() < 0.15);
    }

    #[test]
    fn degenerate_level() {
        let pyr = CoefficientPyramid::zeros(8);
        let q = range_grid(-1.0, 1.0, 0.5).unwrap();
        assert!(matches!(structure_function(&pyr, &q, 10), Err(Error::DegenerateLevel(_))));
    }

    #[test]
    fn no_critical_q() {
        let tau = TauCurve {
            q: vec![0.0, 1.0],
            tau: vec![-1.0, -0.5],
            residuals: vec![0.0; 2],
            scales: (1, 3),
            q_c: None,
        };
        assert!(matches!(critical_q(&tau), Err(Error::NoCriticalQ)));
    }

    #[test]
    fn legendre_is_concave() {
        let q = range_grid(-2.0, 6.0, 0.25).unwrap();
        let tau = TauCurve {
            tau: q.iter().map(|x| 0.3 * x * x.sin() + 0.8 * x - 1.0).collect(),
            residuals: vec![0.0; q.len()],
            q,
            scales: (1, 3),
            q_c: None,
        };
        let h = uniform_grid(0.01, 3.0).unwrap();
        let d1 = legendre_spectrum(&tau, 0.5, &h);
        let present: Vec<f64> = d1.iter().flatten().copied().collect();
        assert!(present.len() > 10);
        for w in present.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-9);
        }
    }
}
