//! Periodized orthogonal Daubechies transforms on dyadic samples of a
//! 1-periodic signal.
//!
//! Coefficients are exposed in the L-infinity normalization
//! `C_{j,k} = 2^j ∫ f ψ_{j,k}` with `ψ_{j,k}(x) = ψ(2^j x - k)` periodized.
//! Internally the transform is orthonormal: the sample vector `x` of length
//! `2^J` is read as the finest approximation `x / 2^{J/2}`, and the detail
//! coefficients `d_{j,k}` of that orthonormal pyramid relate to the stored ones
//! by `C_{j,k} = 2^{j/2} d_{j,k}`. With this convention a constant signal `c`
//! has `coarse_mean = c`, and sample values approximate point values of
//! `f = coarse_mean + Σ C_{j,k} ψ_{j,k}`.

mod taps;

use crate::error::{Error, Result};

/// Orthogonal scaling filter of a Daubechies wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    order: usize,
    lowpass: Vec<f64>,
    name: String,
}

impl WaveletFilter {
    /// Builds a filter from arbitrary taps without checking them. Used for
    /// fixtures; [`WaveletFilter::check`] reports any broken invariant.
    pub fn from_taps(name: impl Into<String>, lowpass: Vec<f64>) -> Self {
        let order = lowpass.len() / 2;
        Self {
            order,
            lowpass,
            name: name.into(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Quadrature mirror: `g[n] = (-1)^n h[L-1-n]`.
    pub fn highpass(&self) -> Vec<f64> {
        let len = self.lowpass.len();
        (0..len)
            .map(|n| {
                let v = self.lowpass[len - 1 - n];
                if n % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    /// Checks tap count, tap sum and shift-orthonormality at tolerance `tol`.
    /// Returns the list of violated invariants.
    pub fn check(&self, tol: f64) -> Vec<String> {
        let mut violations = Vec::new();
        let h = &self.lowpass;
        if h.len() != 2 * self.order || h.is_empty() {
            violations.push(format!(
                "{}: tap count {} != 2*order {}",
                self.name,
                h.len(),
                2 * self.order
            ));
            return violations;
        }
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > tol {
            violations.push(format!("{}: tap sum {sum} != sqrt(2)", self.name));
        }
        for m in 0..self.order {
            let dot: f64 = (0..h.len() - 2 * m).map(|n| h[n] * h[n + 2 * m]).sum();
            let want = if m == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > tol {
                violations.push(format!(
                    "{}: shift-{} autocorrelation {dot} != {want}",
                    self.name,
                    2 * m
                ));
            }
        }
        violations
    }
}

/// Extremal-phase Daubechies filter with `order` vanishing moments.
pub fn daubechies_filter(order: usize) -> Result<WaveletFilter> {
    let taps = taps::taps(order).ok_or(Error::UnsupportedOrder(order))?;
    Ok(WaveletFilter {
        order,
        lowpass: taps.to_vec(),
        name: format!("db{order}"),
    })
}

/// Parses labels of the form `db<order>`.
pub fn filter_by_name(name: &str) -> Result<WaveletFilter> {
    let order = name
        .trim()
        .strip_prefix("db")
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| Error::Format(format!("unknown wavelet '{name}', expected db<order>")))?;
    daubechies_filter(order)
}

/// Uniform samples of a 1-periodic function on `[0, 1)`, length `2^J`, `J >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidLength(n));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `J` such that the length is `2^J`.
    pub fn levels(&self) -> usize {
        self.samples.len().trailing_zeros() as usize
    }
}

/// Wavelet coefficients `C_{j,k}` for `j = 0..J`, level `j` holding `2^j`
/// values, plus the coefficient of the constant function.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    levels: Vec<Vec<f64>>,
    coarse_mean: f64,
}

impl CoefficientPyramid {
    pub fn new(levels: Vec<Vec<f64>>, coarse_mean: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidPyramid("no levels".into()));
        }
        for (j, level) in levels.iter().enumerate() {
            if level.len() != 1 << j {
                return Err(Error::InvalidPyramid(format!(
                    "level {j} has {} entries, expected {}",
                    level.len(),
                    1usize << j
                )));
            }
        }
        Ok(Self {
            levels,
            coarse_mean,
        })
    }

    /// All-zero pyramid for a signal of length `2^levels`.
    pub fn zeros(levels: usize) -> Self {
        Self {
            levels: (0..levels).map(|j| vec![0.0; 1 << j]).collect(),
            coarse_mean: 0.0,
        }
    }

    /// `J`: number of detail levels, the signal length being `2^J`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn level_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.levels[j]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn coarse_mean(&self) -> f64 {
        self.coarse_mean
    }

    pub fn set_coarse_mean(&mut self, value: f64) {
        self.coarse_mean = value;
    }

    /// Multiplies every detail coefficient by `factor`.
    pub fn scale_details(&mut self, factor: f64) {
        for level in &mut self.levels {
            level.iter_mut().for_each(|c| *c *= factor);
        }
    }
}

#[inline]
fn wrap(idx: usize, n: usize) -> usize {
    if idx < n {
        idx
    } else {
        idx % n
    }
}

fn analysis_step(input: &[f64], h: &[f64], g: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = input.len();
    for k in 0..n / 2 {
        let mut s = 0.0;
        let mut t = 0.0;
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            let x = input[wrap(2 * k + i, n)];
            s += hi * x;
            t += gi * x;
        }
        approx[k] = s;
        detail[k] = t;
    }
}

fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..n / 2 {
        let a = approx[k];
        let d = detail[k];
        for (i, (&hi, &gi)) in h.iter().zip(g).enumerate() {
            out[wrap(2 * k + i, n)] += hi * a + gi * d;
        }
    }
}

/// Full periodized decomposition down to a single scaling coefficient.
pub fn forward_dwt(signal: &Signal, filter: &WaveletFilter) -> Result<CoefficientPyramid> {
    let n = signal.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidLength(n));
    }
    let depth = signal.levels();
    let h = filter.lowpass();
    let g = filter.highpass();

    let norm = (n as f64).sqrt().recip();
    let mut approx: Vec<f64> = signal.samples().iter().map(|x| x * norm).collect();
    let mut levels = vec![Vec::new(); depth];
    for j in (0..depth).rev() {
        let half = 1usize << j;
        let mut next = vec![0.0; half];
        let mut detail = vec![0.0; half];
        analysis_step(&approx, h, &g, &mut next, &mut detail);
        let scale = (half as f64).sqrt();
        detail.iter_mut().for_each(|d| *d *= scale);
        levels[j] = detail;
        approx = next;
    }
    Ok(CoefficientPyramid {
        levels,
        coarse_mean: approx[0],
    })
}

/// Inverse of [`forward_dwt`].
pub fn inverse_dwt(pyramid: &CoefficientPyramid, filter: &WaveletFilter) -> Result<Signal> {
    for (j, level) in pyramid.levels.iter().enumerate() {
        if level.len() != 1 << j {
            return Err(Error::InvalidPyramid(format!(
                "level {j} has {} entries, expected {}",
                level.len(),
                1usize << j
            )));
        }
    }
    let depth = pyramid.depth();
    let h = filter.lowpass();
    let g = filter.highpass();

    let mut approx = vec![pyramid.coarse_mean];
    let mut detail = Vec::new();
    for j in 0..depth {
        let half = 1usize << j;
        let scale = (half as f64).sqrt().recip();
        detail.clear();
        detail.extend(pyramid.levels[j].iter().map(|c| c * scale));
        let mut out = vec![0.0; 2 * half];
        synthesis_step(&approx, &detail, h, &g, &mut out);
        approx = out;
    }
    let norm = (approx.len() as f64).sqrt();
    approx.iter_mut().for_each(|v| *v *= norm);
    Signal::new(approx)
}
