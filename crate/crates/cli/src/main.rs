use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rws_core::io::read_spectrum;
use rws_core::WaveletFilter;
use rws_cli::commands::{cmd_analyze, cmd_kernel, cmd_synth, GlobalOptions};
use rws_cli::config::{kernel_from_params, kernel_keys, parse_wavelet};
use rws_cli::error::{CliError, CliResult, EXIT_OK};
use rws_cli::selftest::{self, Fixtures};

/// Random wavelet series: synthesis with prescribed spectra of singularities
/// and multifractal analysis of sampled signals.
#[derive(Parser, Debug)]
#[command(name = "rws", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for synthesis (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Step of the alpha / h grids.
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// Number of finest scales used in regressions.
    #[arg(long, global = true)]
    scales: Option<usize>,
    /// Wavelet db<order>: synthesis wavelet for `synth`, analyzing wavelet for `analyze`.
    #[arg(long, global = true)]
    wavelet: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a signal from a key=value config; writes signal.rws.
    Synth { config: PathBuf },
    /// Estimate lambda, tau and the d2/d1 spectra of a signal.
    Analyze {
        signal: PathBuf,
        /// Also write a gnuplot script, plot.gp.
        #[arg(long)]
        plot: bool,
    },
    /// Tabulate rho and the spectrum of a kernel, e.g. `kernel poisson c=1 alpha0=0`.
    Kernel {
        /// gaussian | gamma | poisson | dirac
        kind: String,
        /// Parameters as key=value (m, sigma, alpha0, nu, beta, c, H).
        params: Vec<String>,
    },
    /// Run the built-in consistency checks.
    Selftest {
        /// Replace the embedded filter of the same order by taps read from a file.
        #[arg(long, hide = true)]
        taps: Option<PathBuf>,
        /// Replace the reference spectrum by an h,d table.
        #[arg(long, hide = true)]
        spectrum: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    let opts = GlobalOptions {
        seed: g.seed,
        out: g.out,
        grid_step: g.grid_step,
        scales: g.scales,
        wavelet: g.wavelet.as_deref().map(parse_wavelet).transpose()?,
    };
    match cli.command {
        Command::Synth { config } => {
            let outcome = cmd_synth(&config, &opts)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", outcome.signal_path.display());
        }
        Command::Analyze { signal, plot } => {
            let outcome = cmd_analyze(&signal, &opts, plot)?;
            let meta = &outcome.analysis.spectrum.meta;
            println!(
                "scales {}..{}, q_c = {:.6}, h_max = {}",
                meta.scales.0,
                meta.scales.1,
                meta.q_c,
                meta.h_max.map_or("absent".into(), |h| format!("{h:.6}"))
            );
            for f in &outcome.files {
                println!("{}", f.display());
            }
        }
        Command::Kernel { kind, params } => {
            let params = parse_params(&kind, &params)?;
            let kernel = kernel_from_params(&kind, |k| params.get(k).cloned())?;
            let report = cmd_kernel(&kernel, &opts)?;
            print!("{}", report.render());
            for f in &report.files {
                println!("{}", f.display());
            }
        }
        Command::Selftest { taps, spectrum } => {
            let mut fixtures = Fixtures::default();
            if let Some(path) = taps {
                let taps = parse_taps(&std::fs::read_to_string(&path)?)
                    .map_err(|e| CliError::Usage(format!("--taps {}: {e}", path.display())))?;
                let order = taps.len() / 2;
                let slot = fixtures
                    .filters
                    .iter_mut()
                    .find(|f| f.order() == order)
                    .ok_or_else(|| CliError::Usage(format!("--taps: no embedded filter with {} taps", taps.len())))?;
                *slot = WaveletFilter::from_taps(format!("db{order}"), taps);
            }
            if let Some(path) = spectrum {
                fixtures.spectrum = read_spectrum(&path)?;
            }
            let report = selftest::run(&fixtures);
            print!("{}", report.render());
            if !report.passed() {
                return Err(CliError::Selftest(report.failures()));
            }
        }
    }
    Ok(())
}

fn parse_params(kind: &str, params: &[String]) -> CliResult<BTreeMap<String, String>> {
    let allowed = kernel_keys(kind);
    if allowed.is_empty() {
        return Err(CliError::Config(format!(
            "kernel: expected gaussian|gamma|poisson|dirac, got '{kind}'"
        )));
    }
    let mut out = BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got '{p}'")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(CliError::Config(format!("key '{k}' is not used by kernel={kind}")));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

fn parse_taps(text: &str) -> Result<Vec<f64>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().map_err(|_| format!("not a number: '{l}'")))
        .collect()
}
