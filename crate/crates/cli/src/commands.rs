use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rws_core::estimation::DEFAULT_SCALE_COUNT;
use rws_core::io::{curve_to_csv, format_g12, format_opt, read_signal, spectrum_to_csv, write_signal};
use rws_core::spectra::{uniform_grid, DEFAULT_GRID_STEP};
use rws_core::{analyze_signal, spectrum_from_rho, synthesize, Analysis, AnalysisOptions, KernelLaw, LogDensity};

use crate::config::{load_synth_config, Overrides};
use crate::error::{CliError, CliResult};
use crate::manifest::{sibling_synth_seed, RunManifest};

pub const SIGNAL_FILE: &str = "signal.rws";
pub const DEFAULT_ANALYSIS_WAVELET: usize = 3;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid_step: Option<f64>,
    pub scales: Option<usize>,
    pub wavelet: Option<usize>,
}

impl GlobalOptions {
    fn out_dir(&self) -> CliResult<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn grid_step(&self) -> CliResult<f64> {
        match self.grid_step {
            Some(s) if !(s > 0.0 && s <= 0.5) => Err(CliError::Usage(format!(
                "--grid-step must lie in (0, 0.5], got {s}"
            ))),
            Some(s) => Ok(s),
            None => Ok(DEFAULT_GRID_STEP),
        }
    }
}

pub struct SynthOutcome {
    pub signal_path: PathBuf,
    pub manifest_path: PathBuf,
    pub warnings: Vec<String>,
}

/// `synth CONFIG`: writes `<out>/signal.rws` and `<out>/synth.manifest`.
pub fn cmd_synth(config_path: &Path, opts: &GlobalOptions) -> CliResult<SynthOutcome> {
    let start = Instant::now();
    let setup = load_synth_config(
        config_path,
        Overrides {
            seed: opts.seed,
            wavelet: opts.wavelet,
        },
    )?;
    let mut warnings = Vec::new();
    let order = setup.config.wavelet_order;
    let h_max = setup.config.h_max();
    if h_max > (order as f64 - 1.0) {
        warnings.push(format!(
            "h_max = {} exceeds {} for db{order}; the synthesis wavelet may be too irregular for this spectrum",
            format_g12(h_max),
            order - 1
        ));
    }
    let signal = synthesize(&setup.config)?;

    let dir = opts.out_dir()?;
    let signal_path = dir.join(SIGNAL_FILE);
    write_signal(&signal_path, &signal)?;

    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(setup.config.seed);
    manifest.config = setup.resolved;
    manifest.inputs.push(config_path.to_path_buf());
    manifest.inputs.extend(setup.spectrum_path);
    manifest.outputs.push(signal_path.clone());
    manifest.duration = start.elapsed();
    let manifest_path = manifest.write(&dir)?;
    Ok(SynthOutcome {
        signal_path,
        manifest_path,
        warnings,
    })
}

pub fn analysis_options(opts: &GlobalOptions) -> CliResult<AnalysisOptions> {
    let mut o = AnalysisOptions::with_grid_step(opts.grid_step()?)?;
    o.wavelet_order = opts.wavelet.unwrap_or(DEFAULT_ANALYSIS_WAVELET);
    o.scale_count = opts.scales.unwrap_or(DEFAULT_SCALE_COUNT);
    Ok(o)
}

pub struct AnalyzeOutcome {
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

/// `analyze SIGNAL`: writes the CSV bundle, `meta.txt` and optionally `plot.gp`.
pub fn cmd_analyze(signal_path: &Path, opts: &GlobalOptions, plot: bool) -> CliResult<AnalyzeOutcome> {
    let start = Instant::now();
    let options = analysis_options(opts)?;
    let signal = read_signal(signal_path).map_err(|e| match e {
        rws_core::Error::Io(io) => CliError::Usage(format!("cannot read {}: {io}", signal_path.display())),
        other => other.into(),
    })?;
    let analysis = analyze_signal(&signal, &options)?;
    let source_seed = sibling_synth_seed(signal_path);

    let dir = opts.out_dir()?;
    let mut files = Vec::new();
    let mut emit = |name: &str, text: String| -> CliResult<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };
    emit("lambda.csv", lambda_csv(&analysis))?;
    emit("tau.csv", tau_csv(&analysis))?;
    emit("spectrum.csv", estimated_spectrum_csv(&analysis))?;
    emit("meta.txt", meta_text(&analysis, source_seed))?;
    if plot {
        emit("plot.gp", PLOT_SCRIPT.to_string())?;
    }

    let mut manifest = RunManifest::new("analyze");
    manifest.seed = source_seed;
    manifest.config.insert("wavelet".into(), format!("db{}", options.wavelet_order));
    manifest.config.insert("scales".into(), options.scale_count.to_string());
    manifest.config.insert("grid_step".into(), format_g12(opts.grid_step()?));
    manifest.inputs.push(signal_path.to_path_buf());
    manifest.outputs = files.clone();
    manifest.duration = start.elapsed();
    files.push(manifest.write(&dir)?);
    Ok(AnalyzeOutcome { analysis, files })
}

pub fn lambda_csv(a: &Analysis) -> String {
    let mut out = String::from("# alpha,lambda,closed_lambda,residual\n");
    for i in 0..a.lambda.alpha.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_g12(a.lambda.alpha[i]),
            format_opt(a.lambda.lambda[i]),
            format_opt(a.closed_lambda.lambda[i]),
            format_opt(a.lambda.residuals[i])
        );
    }
    out
}

pub fn tau_csv(a: &Analysis) -> String {
    let mut out = String::from("# q,tau,residual\n");
    for ((q, t), r) in a.tau.q.iter().zip(&a.tau.tau).zip(&a.tau.residuals) {
        let _ = writeln!(out, "{},{},{}", format_g12(*q), format_g12(*t), format_g12(*r));
    }
    out
}

pub fn estimated_spectrum_csv(a: &Analysis) -> String {
    let s = &a.spectrum;
    let mut out = String::from("# h,d2,d1\n");
    for i in 0..s.h.len() {
        let _ = writeln!(out, "{},{},{}", format_g12(s.h[i]), format_opt(s.d2[i]), format_opt(s.d1[i]));
    }
    out
}

pub fn meta_text(a: &Analysis, source_seed: Option<u64>) -> String {
    let m = &a.spectrum.meta;
    let mut out = String::new();
    let _ = writeln!(out, "J = {}", m.depth);
    let _ = writeln!(out, "wavelet = {}", m.wavelet);
    let _ = writeln!(out, "scales = {}..{}", m.scales.0, m.scales.1);
    let _ = writeln!(out, "q_c = {}", format_g12(m.q_c));
    if m.q_c_fallback {
        let _ = writeln!(out, "q_c_note = tau has no sign change on the q grid; smallest grid q used");
    }
    let _ = writeln!(out, "h_max = {}", format_opt(m.h_max));
    match source_seed {
        Some(s) => {
            let _ = writeln!(out, "source_seed = {s}");
        }
        None => {
            let _ = writeln!(out, "source_seed = unknown");
        }
    }
    out
}

const PLOT_SCRIPT: &str = r#"set datafile separator ","
set key top left
set xlabel "h"
set ylabel "d(h)"
set yrange [-0.05:1.1]
plot "spectrum.csv" using 1:2 with points pt 1 title "d2 (large deviation)", \
     "spectrum.csv" using 1:3 with lines title "d1 (Legendre)"
pause -1
"#;

/// Output of `kernel`.
#[derive(Debug, Clone)]
pub struct KernelReport {
    pub kernel: KernelLaw,
    pub alpha_star: Option<f64>,
    pub mode: f64,
    pub files: Vec<PathBuf>,
}

impl KernelReport {
    pub fn render(&self) -> String {
        let mut out = format!("kernel: {}\nvalid: yes\n", self.kernel.name());
        match self.alpha_star {
            Some(a) => {
                let _ = writeln!(out, "alpha*: {}", format_g12(a));
            }
            None => out.push_str("alpha*: none for this kernel\n"),
        }
        let _ = writeln!(out, "rho maximum: 1 at alpha = {}", format_g12(self.mode));
        out
    }
}

/// `kernel KIND key=value…`: writes `rho.csv` and `spectrum.csv`.
pub fn cmd_kernel(kernel: &KernelLaw, opts: &GlobalOptions) -> CliResult<KernelReport> {
    let start = Instant::now();
    kernel.validate()?;
    let alpha_star = match kernel {
        KernelLaw::ShiftedGamma { .. } | KernelLaw::ShiftedPoisson { .. } => Some(kernel.alpha_star()?),
        _ => None,
    };
    let upper = (2.0 * kernel.mode()).max(4.0).ceil();
    let grid = uniform_grid(opts.grid_step()?, upper)?;
    let density = LogDensity::Kernel(*kernel);
    let (alpha, rho) = density.sample(&grid);
    let spectrum = spectrum_from_rho(&density, &grid)?;

    let dir = opts.out_dir()?;
    let rho_path = dir.join("rho.csv");
    let spectrum_path = dir.join("spectrum.csv");
    fs::write(&rho_path, curve_to_csv("alpha,rho", &alpha, &rho))?;
    fs::write(&spectrum_path, spectrum_to_csv(&spectrum))?;

    let mut manifest = RunManifest::new("kernel");
    manifest.config = kernel_entries(kernel);
    manifest.config.insert("grid_step".into(), format_g12(opts.grid_step()?));
    manifest.outputs = vec![rho_path.clone(), spectrum_path.clone()];
    manifest.duration = start.elapsed();
    let manifest_path = manifest.write(&dir)?;
    Ok(KernelReport {
        kernel: *kernel,
        alpha_star,
        mode: kernel.mode(),
        files: vec![rho_path, spectrum_path, manifest_path],
    })
}

fn kernel_entries(kernel: &KernelLaw) -> std::collections::BTreeMap<String, String> {
    let pairs: Vec<(&str, f64)> = match *kernel {
        KernelLaw::Gaussian { mean, sigma } => vec![("m", mean), ("sigma", sigma)],
        KernelLaw::ShiftedGamma { alpha0, nu, beta } => vec![("alpha0", alpha0), ("nu", nu), ("beta", beta)],
        KernelLaw::ShiftedPoisson { alpha0, c } => vec![("alpha0", alpha0), ("c", c)],
        KernelLaw::Dirac { h } => vec![("H", h)],
    };
    let mut map: std::collections::BTreeMap<String, String> =
        pairs.into_iter().map(|(k, v)| (k.to_string(), format_g12(v))).collect();
    map.insert("kernel".into(), kernel_kind(kernel).to_string());
    map
}

/// Config spelling of a kernel variant.
pub fn kernel_kind(kernel: &KernelLaw) -> &'static str {
    match kernel {
        KernelLaw::Gaussian { .. } => "gaussian",
        KernelLaw::ShiftedGamma { .. } => "gamma",
        KernelLaw::ShiftedPoisson { .. } => "poisson",
        KernelLaw::Dirac { .. } => "dirac",
    }
}
