//! Built-in consistency checks: filter tables, reconstruction, kernel maxima,
//! admissibility of a reference spectrum and the ρ = d identity.

use rws_core::spectra::{uniform_grid, DEFAULT_GRID_STEP};
use rws_core::{
    check_admissible, daubechies_filter, forward_dwt, inverse_dwt, spectrum_from_rho, KernelLaw, Signal,
    SpectrumCurve, WaveletFilter,
};

pub const FILTER_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
pub const MAXIMUM_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-9;

/// Inputs of the checks; tests swap in corrupted tables.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub filters: Vec<WaveletFilter>,
    pub kernels: Vec<KernelLaw>,
    pub spectrum: SpectrumCurve,
}

impl Default for Fixtures {
    fn default() -> Self {
        Self {
            filters: (1..=10).map(|n| daubechies_filter(n).expect("embedded order")).collect(),
            kernels: vec![
                KernelLaw::Gaussian { mean: 1.0, sigma: 0.5 },
                KernelLaw::ShiftedGamma { alpha0: 0.5, nu: 2.0, beta: 4.0 },
                KernelLaw::ShiftedPoisson { alpha0: 0.0, c: 1.0 },
            ],
            spectrum: reference_spectrum(),
        }
    }
}

/// `d(h) = (h − 1/2)²` on `[1/2, 3/2]`.
pub fn reference_spectrum() -> SpectrumCurve {
    let grid = uniform_grid(DEFAULT_GRID_STEP, 3.0).expect("static grid");
    SpectrumCurve::from_fn(&grid, 0.5, 1.5, |h| (h - 0.5).powi(2)).expect("static curve")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.to_string()).collect()
    }

    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

pub fn run(fixtures: &Fixtures) -> Report {
    Report {
        checks: vec![
            filter_check(&fixtures.filters),
            reconstruction_check(&fixtures.filters),
            kernel_maxima_check(&fixtures.kernels),
            admissibility_check(&fixtures.spectrum),
            identity_check(&fixtures.spectrum),
        ],
    }
}

fn result(name: &'static str, problems: Vec<String>, ok: String) -> CheckResult {
    CheckResult {
        name,
        passed: problems.is_empty(),
        detail: if problems.is_empty() { ok } else { problems.join("; ") },
    }
}

fn filter_check(filters: &[WaveletFilter]) -> CheckResult {
    let problems = filters
        .iter()
        .flat_map(|f| f.check(FILTER_TOL).into_iter().map(move |p| format!("{}: {p}", f.name())))
        .collect();
    result("filter-qmf", problems, format!("{} filters within {FILTER_TOL:e}", filters.len()))
}

/// Deterministic, irregular test signal.
fn probe_signal(levels: usize) -> Signal {
    let n = 1usize << levels;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            (2.0 * std::f64::consts::PI * 3.0 * t).sin() + ((k as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0
        })
        .collect();
    Signal::new(samples).expect("power-of-two length")
}

fn reconstruction_check(filters: &[WaveletFilter]) -> CheckResult {
    let x = probe_signal(10);
    let mut problems = Vec::new();
    let mut worst: f64 = 0.0;
    for f in filters {
        let err = forward_dwt(&x, f)
            .and_then(|p| inverse_dwt(&p, f))
            .map(|y| {
                x.samples()
                    .iter()
                    .zip(y.samples())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            });
        match err {
            Ok(e) if e <= RECONSTRUCTION_TOL => worst = worst.max(e),
            Ok(e) => problems.push(format!("{}: max error {e:.3e}", f.name())),
            Err(e) => problems.push(format!("{}: {e}", f.name())),
        }
    }
    result("perfect-reconstruction", problems, format!("max error {worst:.3e}"))
}

fn kernel_maxima_check(kernels: &[KernelLaw]) -> CheckResult {
    let mut problems = Vec::new();
    for k in kernels {
        if let Err(e) = k.validate() {
            problems.push(format!("{}: {e}", k.name()));
            continue;
        }
        let mode = k.mode();
        let at_mode = k.rho_unchecked(mode).unwrap_or(f64::NEG_INFINITY);
        if (at_mode - 1.0).abs() > MAXIMUM_TOL {
            problems.push(format!("{}: rho({mode}) = {at_mode}", k.name()));
        }
        let local_max = (-100..=100)
            .filter_map(|i| k.rho_unchecked(mode + i as f64 * 1e-4))
            .fold(f64::NEG_INFINITY, f64::max);
        if local_max > 1.0 + MAXIMUM_TOL {
            problems.push(format!("{}: rho exceeds 1 near the mode ({local_max})", k.name()));
        }
    }
    result("kernel-maxima", problems, format!("{} kernels peak at 1", kernels.len()))
}

fn admissibility_check(curve: &SpectrumCurve) -> CheckResult {
    let diag = check_admissible(curve);
    let problems = if diag.is_valid() { Vec::new() } else { vec![diag.summary()] };
    result("admissibility", problems, "reference spectrum admissible".into())
}

fn identity_check(curve: &SpectrumCurve) -> CheckResult {
    let problems = match spectrum_from_rho(&curve.as_log_density(), curve.h_grid()) {
        Err(e) => vec![e.to_string()],
        Ok(out) => {
            let mut problems = Vec::new();
            for (h, d) in curve.h_grid().iter().zip(curve.d_values()) {
                let got = out.interpolate(*h);
                let ok = match (d, got) {
                    (Some(a), Some(b)) => (a - b).abs() <= IDENTITY_TOL,
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    problems.push(format!("h = {h}: expected {d:?}, got {got:?}"));
                    break;
                }
            }
            problems
        }
    };
    result("rho-identity", problems, format!("rho = d reproduced within {IDENTITY_TOL:e}"))
}
