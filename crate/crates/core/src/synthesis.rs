//! Per-scale coefficient laws and realization of random wavelet series.
//!
//! A scale law describes the distribution of `α = -log₂|C_{j,k}| / j` at one
//! scale, with an atom at `+∞` for zero coefficients. Laws come from a target
//! spectrum (tabulated density `j ln2 / h_max · 2^{j(d(α)-1)}` on
//! `[0, h_max]`), from a selfsimilarity kernel (closed-form convolution
//! powers), or from the degenerate flat construction.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::CoefficientStreams;
use crate::spectra::{check_admissible, KernelLaw, SpectrumCurve};
use crate::wavelet::{daubechies_filter, inverse_dwt, CoefficientPyramid, Signal};

/// How finite exponents are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SamplerKind {
    /// Inverse CDF with linear interpolation between nodes. `cdf[0] = 0` and
    /// `cdf.last() = 1 - p_inf`.
    Tabulated { alpha: Vec<f64>, cdf: Vec<f64> },
    /// `α` drawn from the `j`-fold convolution of the kernel, rescaled by `1/j`.
    Direct(KernelLaw),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLawTable {
    pub j: usize,
    pub p_inf: f64,
    pub kind: SamplerKind,
}

impl ScaleLawTable {
    /// Mass of the finite part.
    pub fn finite_mass(&self) -> f64 {
        1.0 - self.p_inf
    }

    /// Probability of `α ≤ x` (finite part only).
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            SamplerKind::Tabulated { alpha, cdf } => {
                if x < alpha[0] {
                    return 0.0;
                }
                let i = alpha.partition_point(|&a| a <= x);
                if i >= alpha.len() {
                    return *cdf.last().unwrap();
                }
                let t = (x - alpha[i - 1]) / (alpha[i] - alpha[i - 1]);
                cdf[i - 1] + t * (cdf[i] - cdf[i - 1])
            }
            SamplerKind::Direct(KernelLaw::Dirac { h }) => {
                if x >= *h {
                    self.finite_mass()
                } else {
                    0.0
                }
            }
            SamplerKind::Direct(_) => f64::NAN,
        }
    }

    /// Upper end of the tabulated support (`α_cap`).
    pub fn alpha_cap(&self) -> f64 {
        match &self.kind {
            SamplerKind::Tabulated { alpha, .. } => *alpha.last().unwrap(),
            SamplerKind::Direct(k) => kernel_alpha_cap(k, self.j),
        }
    }
}

/// `mean + 12` standard deviations of the scale-`j` kernel law.
fn kernel_alpha_cap(kernel: &KernelLaw, j: usize) -> f64 {
    let jf = j.max(1) as f64;
    match *kernel {
        KernelLaw::Gaussian { mean, sigma } => mean + 12.0 * sigma / jf.sqrt(),
        KernelLaw::ShiftedGamma { alpha0, nu, beta } => {
            alpha0 + nu / beta + 12.0 * (nu / jf).sqrt() / beta
        }
        KernelLaw::ShiftedPoisson { alpha0, c } => alpha0 + c + 12.0 * (c / jf).sqrt(),
        KernelLaw::Dirac { h } => h,
    }
}

/// Tabulates the scale-`j` law attached to an admissible spectrum.
///
/// A single-point spectrum `d(H) = 1` carries no Lebesgue mass; it is mapped to
/// the monofractal law `α = H` almost surely.
pub fn scale_law_from_spectrum(curve: &SpectrumCurve, j: usize) -> Result<ScaleLawTable> {
    let diag = check_admissible(curve);
    if !diag.is_valid() {
        return Err(Error::Inadmissible(diag.summary()));
    }
    if j == 0 {
        return Err(Error::Domain("scale laws start at j = 1".into()));
    }
    if curve.is_single_point() {
        return Ok(ScaleLawTable {
            j,
            p_inf: 0.0,
            kind: SamplerKind::Direct(KernelLaw::Dirac { h: curve.h_max() }),
        });
    }
    let h_max = curve.h_max();
    let jf = j as f64;
    let target_step = 0.002f64.min(h_max / 2048.0);
    let n = (h_max / target_step).ceil() as usize;
    let alpha: Vec<f64> = (0..=n).map(|i| h_max * i as f64 / n as f64).collect();
    let prefactor = jf * LN_2 / h_max;
    let density: Vec<f64> = alpha
        .iter()
        .map(|&a| match curve.interpolate(a) {
            Some(d) => prefactor * (jf * (d - 1.0)).exp2(),
            None => 0.0,
        })
        .collect();
    let mut cdf = Vec::with_capacity(alpha.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..alpha.len() {
        acc += 0.5 * (density[i - 1] + density[i]) * (alpha[i] - alpha[i - 1]);
        cdf.push(acc);
    }
    if acc > 1.0 + 1e-12 {
        return Err(Error::MassExceedsOne { j, mass: acc });
    }
    Ok(ScaleLawTable {
        j,
        p_inf: (1.0 - acc).max(0.0),
        kind: SamplerKind::Tabulated { alpha, cdf },
    })
}

/// Scale-`j` law of the kernel's convolution semigroup.
pub fn scale_law_from_kernel(kernel: &KernelLaw, j: usize) -> Result<ScaleLawTable> {
    kernel.validate()?;
    if j == 0 {
        return Err(Error::Domain("scale laws start at j = 1".into()));
    }
    Ok(ScaleLawTable {
        j,
        p_inf: 0.0,
        kind: SamplerKind::Direct(*kernel),
    })
}

/// Law of the degenerate flat series: `α = α₀` with probability `j 2^{-j}`.
pub fn scale_law_flat(alpha0: f64, j: usize) -> Result<ScaleLawTable> {
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::Domain(format!("flat exponent must be positive, got {alpha0}")));
    }
    let occupancy = j as f64 * (-(j as f64)).exp2();
    Ok(ScaleLawTable {
        j,
        p_inf: 1.0 - occupancy,
        kind: SamplerKind::Direct(KernelLaw::Dirac { h: alpha0 }),
    })
}

/// Draws one exponent; `+∞` encodes a zero coefficient.
pub fn sample_alpha<R: Rng + ?Sized>(law: &ScaleLawTable, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u >= law.finite_mass() {
        return f64::INFINITY;
    }
    match &law.kind {
        SamplerKind::Tabulated { alpha, cdf } => {
            let i = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
            let (c0, c1) = (cdf[i - 1], cdf[i]);
            let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
            alpha[i - 1] + t * (alpha[i] - alpha[i - 1])
        }
        SamplerKind::Direct(kernel) => sample_kernel(kernel, law.j, rng),
    }
}

fn sample_kernel<R: Rng + ?Sized>(kernel: &KernelLaw, j: usize, rng: &mut R) -> f64 {
    let jf = j as f64;
    match *kernel {
        KernelLaw::Gaussian { mean, sigma } => {
            let normal = Normal::new(mean, sigma / jf.sqrt()).expect("validated sigma");
            // truncated to α > 0
            loop {
                let a = normal.sample(rng);
                if a > 0.0 {
                    return a;
                }
            }
        }
        KernelLaw::ShiftedGamma { alpha0, nu, beta } => {
            let gamma = Gamma::new(jf * nu, beta.recip()).expect("validated shape");
            alpha0 + gamma.sample(rng) / jf
        }
        KernelLaw::ShiftedPoisson { alpha0, c } => {
            let poisson = Poisson::new(jf * c).expect("validated rate");
            let count: f64 = poisson.sample(rng);
            alpha0 + count / jf
        }
        KernelLaw::Dirac { h } => h,
    }
}

/// Where the per-scale laws come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Spectrum(SpectrumCurve),
    Kernel(KernelLaw),
    Flat { alpha0: f64 },
}

/// Signs `χ_{j,k}` of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignScheme {
    /// Independent fair ±1.
    #[default]
    Rademacher,
    /// Every sign `+1`; a diagnostic hook for checking linearity.
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Finest scale count `J`; the realization has `2^J` samples.
    pub levels: usize,
    pub source: Source,
    pub wavelet_order: usize,
    pub seed: u64,
    pub sign_scheme: SignScheme,
}

impl SynthesisConfig {
    pub fn new(levels: usize, source: Source, wavelet_order: usize, seed: u64) -> Self {
        Self {
            levels,
            source,
            wavelet_order,
            seed,
            sign_scheme: SignScheme::Rademacher,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 4 {
            return Err(Error::Domain(format!("J must be at least 4, got {}", self.levels)));
        }
        if self.levels > 30 {
            return Err(Error::Domain(format!("J = {} is too large", self.levels)));
        }
        daubechies_filter(self.wavelet_order)?;
        match &self.source {
            Source::Spectrum(curve) => {
                let diag = check_admissible(curve);
                if !diag.is_valid() {
                    return Err(Error::Inadmissible(diag.summary()));
                }
            }
            Source::Kernel(k) => k.validate()?,
            Source::Flat { alpha0 } => {
                scale_law_flat(*alpha0, 1)?;
            }
        }
        Ok(())
    }

    /// Law at scale `j ≥ 1`.
    pub fn scale_law(&self, j: usize) -> Result<ScaleLawTable> {
        match &self.source {
            Source::Spectrum(curve) => scale_law_from_spectrum(curve, j),
            Source::Kernel(k) => scale_law_from_kernel(k, j),
            Source::Flat { alpha0 } => scale_law_flat(*alpha0, j),
        }
    }

    /// The upper end of the prescribed support, used for regularity warnings.
    pub fn h_max(&self) -> f64 {
        match &self.source {
            Source::Spectrum(curve) => curve.h_max(),
            Source::Kernel(k) => k.mode().max(kernel_alpha_cap(k, self.levels)),
            Source::Flat { alpha0 } => *alpha0,
        }
    }
}

/// Draws `C_{j,k} = χ_{j,k} 2^{-j α_{j,k}}` for every `j < J`, `k < 2^j`.
///
/// At `j = 0` the exponent is undefined; kernel sources (where every α is
/// finite) give `|C_{0,0}| = 1`, the others give `0`. The constant term is 0.
pub fn generate_coefficients(config: &SynthesisConfig) -> Result<CoefficientPyramid> {
    config.validate()?;
    let streams = CoefficientStreams::new(config.seed);
    let sign_of = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let bit: bool = rng.random();
        match config.sign_scheme {
            SignScheme::Rademacher if bit => -1.0,
            _ => 1.0,
        }
    };

    let mut levels = Vec::with_capacity(config.levels);
    let top = match config.source {
        Source::Kernel(_) => {
            let mut rng = streams.stream(0, 0);
            sign_of(&mut rng)
        }
        _ => 0.0,
    };
    levels.push(vec![top]);

    for j in 1..config.levels {
        let law = config.scale_law(j)?;
        let jf = j as f64;
        let level: Vec<f64> = (0..1usize << j)
            .into_par_iter()
            .map(|k| {
                let mut rng = streams.stream(j, k);
                let sign = sign_of(&mut rng);
                let alpha = sample_alpha(&law, &mut rng);
                if alpha.is_infinite() {
                    0.0
                } else {
                    sign * (-jf * alpha).exp2()
                }
            })
            .collect();
        levels.push(level);
    }
    CoefficientPyramid::new(levels, 0.0)
}

/// Draws the coefficients and reconstructs `2^J` samples of the realization.
pub fn synthesize(config: &SynthesisConfig) -> Result<Signal> {
    let pyramid = generate_coefficients(config)?;
    let filter = daubechies_filter(config.wavelet_order)?;
    inverse_dwt(&pyramid, &filter)
}

/// Coefficients of the flat-spectrum series with exponent `alpha0`.
pub fn flat_rws(alpha0: f64, levels: usize, seed: u64) -> Result<CoefficientPyramid> {
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::Domain(format!("flat exponent must be positive, got {alpha0}")));
    }
    let config = SynthesisConfig::new(levels, Source::Flat { alpha0 }, 1, seed);
    generate_coefficients(&config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{uniform_grid, DEFAULT_GRID_STEP};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parabola() -> SpectrumCurve {
        let grid = uniform_grid(DEFAULT_GRID_STEP, 3.0).unwrap();
        SpectrumCurve::from_fn(&grid, 0.5, 1.5, |h| (h - 0.5).powi(2)).unwrap()
    }

    /// Cell midpoint around `a` and the average density of that cell.
    fn density_near(law: &ScaleLawTable, a: f64) -> (f64, f64) {
        let SamplerKind::Tabulated { alpha, cdf } = &law.kind else {
            panic!("tabulated law expected")
        };
        let i = alpha.partition_point(|&x| x < a);
        let mid = 0.5 * (alpha[i] + alpha[i - 1]);
        (mid, (cdf[i] - cdf[i - 1]) / (alpha[i] - alpha[i - 1]))
    }

    #[test]
    fn density_value_at_scale_ten() {
        let formula = |a: f64| 10.0 * LN_2 / 1.5 * (10.0 * ((a - 0.5).powi(2) - 1.0)).exp2();
        assert!((formula(1.0) - 0.02553).abs() < 1e-5);
        let law = scale_law_from_spectrum(&parabola(), 10).unwrap();
        let (mid, avg) = density_near(&law, 1.0);
        assert!((mid - 1.0).abs() < 1e-3);
        assert!((avg - formula(mid)).abs() / formula(mid) < 1e-4);
    }

    #[test]
    fn table_invariants_and_mass_bound() {
        let curve = parabola();
        for j in 1..=20 {
            let law = scale_law_from_spectrum(&curve, j).unwrap();
            let SamplerKind::Tabulated { cdf, alpha } = &law.kind else { panic!() };
            assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
            assert!((cdf.last().unwrap() + law.p_inf - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&law.p_inf));
            assert!(*cdf.last().unwrap() <= 1.0);
            assert!((alpha.last().unwrap() - 1.5).abs() < 1e-12);
            assert!(alpha.windows(2).all(|w| w[1] - w[0] <= 0.002 + 1e-12));
        }
    }

    #[test]
    fn inadmissible_curve_is_rejected() {
        let grid = uniform_grid(DEFAULT_GRID_STEP, 2.0).unwrap();
        let curve = SpectrumCurve::from_fn(&grid, 0.5, 1.5, |h| 1.0 - (h - 1.0).powi(2)).unwrap();
        assert!(matches!(scale_law_from_spectrum(&curve, 5), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn monofractal_curve_concentrates() {
        let curve = SpectrumCurve::monofractal(0.8).unwrap();
        for j in [8, 12, 16] {
            let law = scale_law_from_spectrum(&curve, j).unwrap();
            let eps = 0.01;
            let inside = law.cdf(0.8 + eps) - law.cdf(0.8 - eps);
            assert!((inside / law.finite_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn always_infinite_when_atom_is_one() {
        let law = ScaleLawTable {
            j: 3,
            p_inf: 1.0,
            kind: SamplerKind::Tabulated { alpha: vec![0.0, 1.0], cdf: vec![0.0, 0.0] },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| sample_alpha(&law, &mut rng).is_infinite()));
    }

    #[test]
    fn dirac_and_poisson_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let law = scale_law_from_kernel(&KernelLaw::Dirac { h: 0.8 }, 9).unwrap();
        assert!((0..1000).all(|_| sample_alpha(&law, &mut rng) == 0.8));
        let law = scale_law_from_kernel(&KernelLaw::ShiftedPoisson { alpha0: 0.0, c: 1.0 }, 8).unwrap();
        for _ in 0..2000 {
            let a = sample_alpha(&law, &mut rng) * 8.0;
            assert_eq!(a, a.round());
            assert!(a >= 0.0);
        }
    }

    #[test]
    fn gaussian_law_mean() {
        let (m, s, j) = (0.9, 0.3, 6usize);
        let law = scale_law_from_kernel(&KernelLaw::Gaussian { mean: m, sigma: s }, j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_alpha(&law, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - m).abs() < 4.0 * s / ((j * n) as f64).sqrt());
    }

    #[test]
    fn gamma_law_moments() {
        let (a0, nu, beta, j) = (0.1, 2.0, 4.0, 5usize);
        let law = scale_law_from_kernel(&KernelLaw::ShiftedGamma { alpha0: a0, nu, beta }, j).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_alpha(&law, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        // α₀ + Γ(jν, β)/j: mean α₀ + ν/β, variance ν/(jβ²)
        let want_var = nu / (j as f64 * beta * beta);
        assert!((mean - (a0 + nu / beta)).abs() < 4.0 * (want_var / n as f64).sqrt());
        assert!((var / want_var - 1.0).abs() < 0.05);
    }

    #[test]
    fn flat_generator_occupancy() {
        let pyr = flat_rws(1.0, 10, 5).unwrap();
        assert_eq!(pyr.level(0)[0], 0.0);
        for j in 1..10 {
            for &c in pyr.level(j) {
                assert!(c == 0.0 || (c.abs() - (-(j as f64)).exp2()).abs() < 1e-15);
            }
        }
        assert!(matches!(flat_rws(0.0, 8, 1), Err(Error::Domain(_))));
        assert_eq!(scale_law_flat(1.0, 1).unwrap().finite_mass(), 0.5);
    }

    #[test]
    fn dirac_magnitudes_are_exact() {
        let config = SynthesisConfig::new(12, Source::Kernel(KernelLaw::Dirac { h: 0.8 }), 3, 9);
        let pyr = generate_coefficients(&config).unwrap();
        for j in 0..12 {
            let want = (-(j as f64) * 0.8).exp2();
            assert!(pyr.level(j).iter().all(|c| c.abs() == want));
        }
        let plus = pyr.level(11).iter().filter(|&&c| c > 0.0).count();
        assert!(plus > 900 && plus < 1148, "{plus}");
    }

    #[test]
    fn config_validation() {
        let bad_j = SynthesisConfig::new(3, Source::Flat { alpha0: 1.0 }, 3, 0);
        assert!(bad_j.validate().is_err());
        let bad_kernel = SynthesisConfig::new(
            8,
            Source::Kernel(KernelLaw::Gaussian { mean: 1.0, sigma: 1.0 }),
            3,
            0,
        );
        assert!(matches!(bad_kernel.validate(), Err(Error::KernelValidity(_))));
        let bad_wavelet = SynthesisConfig::new(8, Source::Flat { alpha0: 1.0 }, 11, 0);
        assert!(matches!(bad_wavelet.validate(), Err(Error::UnsupportedOrder(11))));
    }
}
