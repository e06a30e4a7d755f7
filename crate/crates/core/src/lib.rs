//! Random wavelet series.
//!
//! Synthesis of 1-periodic processes whose wavelet coefficients are
//! independent with prescribed per-scale laws, so that the almost-sure
//! spectrum of singularities is any admissible (possibly non-concave) curve,
//! and estimation of multifractal spectra from sampled signals through the
//! large-deviation and Legendre formalisms.

pub mod error;
pub mod estimation;
pub mod io;
pub mod rng;
pub mod spectra;
pub mod synthesis;
pub mod wavelet;

pub use error::{Error, Result};
pub use estimation::{
    alpha_exponents, analyze_pyramid, analyze_signal, count_n, critical_q, estimate_lambda,
    large_deviation_spectrum, legendre_spectrum, structure_function, upper_closure, AlphaField,
    Analysis, AnalysisOptions, EstimatedSpectrum, LambdaCurve, TauCurve,
};
pub use spectra::{
    check_admissible, kernel_alpha_star, rho_of_kernel, spectrum_from_rho, Diagnostics, KernelLaw,
    LogDensity, SpectrumCurve,
};
pub use synthesis::{
    flat_rws, generate_coefficients, sample_alpha, scale_law_from_kernel, scale_law_from_spectrum,
    synthesize, ScaleLawTable, SignScheme, Source, SynthesisConfig,
};
pub use wavelet::{daubechies_filter, forward_dwt, inverse_dwt, CoefficientPyramid, Signal, WaveletFilter};
