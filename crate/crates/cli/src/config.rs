//! Flat `key = value` synthesis configs.
//!
//! ```text
//! # parabolic spectrum run
//! mode = spectrum
//! J = 20
//! seed = 1
//! wavelet = db10
//! spectrum_file = parabola_spectrum.csv
//! ```
//!
//! `#` starts a comment; keys are case-sensitive. Relative `spectrum_file`
//! paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rws_core::io::read_spectrum;
use rws_core::{KernelLaw, Source, SynthesisConfig};

use crate::error::{CliError, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "mode",
    "J",
    "seed",
    "wavelet",
    "spectrum_file",
    "kernel",
    "m",
    "sigma",
    "alpha0",
    "nu",
    "beta",
    "c",
    "H",
];

pub const DEFAULT_SYNTH_WAVELET: usize = 10;

/// Key-value pairs as read, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", i + 1)))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!("unknown key '{key}' on line {}", i + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate key '{key}' on line {}", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing key '{key}'")))
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key).map(|v| parse_number(key, v)).transpose()
    }

    /// Rejects keys that the chosen mode would silently ignore.
    fn only(&self, allowed: &[&str], context: &str) -> CliResult<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Config(format!("key '{k}' is not used by {context}"))),
            None => Ok(()),
        }
    }
}

pub fn parse_number(key: &str, value: &str) -> CliResult<f64> {
    match value.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::Config(format!("key '{key}': '{value}' is not a finite number"))),
    }
}

/// `db<n>` → `n`.
pub fn parse_wavelet(value: &str) -> CliResult<usize> {
    value
        .strip_prefix("db")
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|n| (1..=10).contains(n))
        .ok_or_else(|| CliError::Config(format!("key 'wavelet': expected db1..db10, got '{value}'")))
}

/// Builds a kernel from `kind` and its parameters, looked up through `get`.
/// `alpha0` defaults to 0 for the shifted kernels.
pub fn kernel_from_params(
    kind: &str,
    get: impl Fn(&str) -> Option<String>,
) -> CliResult<KernelLaw> {
    let num = |key: &str| -> CliResult<Option<f64>> { get(key).map(|v| parse_number(key, &v)).transpose() };
    let need = |key: &str| -> CliResult<f64> {
        num(key)?.ok_or_else(|| CliError::Config(format!("kernel '{kind}' needs key '{key}'")))
    };
    Ok(match kind {
        "gaussian" => KernelLaw::Gaussian {
            mean: need("m")?,
            sigma: need("sigma")?,
        },
        "gamma" => KernelLaw::ShiftedGamma {
            alpha0: num("alpha0")?.unwrap_or(0.0),
            nu: need("nu")?,
            beta: need("beta")?,
        },
        "poisson" => KernelLaw::ShiftedPoisson {
            alpha0: num("alpha0")?.unwrap_or(0.0),
            c: need("c")?,
        },
        "dirac" => KernelLaw::Dirac { h: need("H")? },
        other => {
            return Err(CliError::Config(format!(
                "key 'kernel': expected gaussian|gamma|poisson|dirac, got '{other}'"
            )))
        }
    })
}

/// Parameter keys each kernel reads.
pub fn kernel_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "gaussian" => &["m", "sigma"],
        "gamma" => &["alpha0", "nu", "beta"],
        "poisson" => &["alpha0", "c"],
        "dirac" => &["H"],
        _ => &[],
    }
}

/// A parsed config together with the resolved values recorded in manifests.
#[derive(Debug, Clone)]
pub struct SynthSetup {
    pub config: SynthesisConfig,
    pub resolved: BTreeMap<String, String>,
    pub spectrum_path: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub wavelet: Option<usize>,
}

pub fn load_synth_config(path: &Path, overrides: Overrides) -> CliResult<SynthSetup> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    build_synth_config(&RawConfig::parse(&text)?, base, overrides)
}

pub fn build_synth_config(raw: &RawConfig, base: &Path, overrides: Overrides) -> CliResult<SynthSetup> {
    const COMMON: [&str; 4] = ["mode", "J", "seed", "wavelet"];
    let mut resolved = BTreeMap::new();

    let levels_text = raw.require("J")?;
    let levels: usize = levels_text
        .parse()
        .map_err(|_| CliError::Config(format!("key 'J': '{levels_text}' is not a non-negative integer")))?;
    let seed = match overrides.seed {
        Some(s) => s,
        None => match raw.get("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("key 'seed': '{v}' is not an unsigned 64-bit integer")))?,
            None => 0,
        },
    };
    let wavelet = match overrides.wavelet {
        Some(w) => w,
        None => raw.get("wavelet").map(parse_wavelet).transpose()?.unwrap_or(DEFAULT_SYNTH_WAVELET),
    };

    let mode = raw.require("mode")?;
    let mut spectrum_path = None;
    let source = match mode {
        "spectrum" => {
            raw.only(&[&COMMON[..], &["spectrum_file"]].concat(), "mode=spectrum")?;
            let file = base.join(raw.require("spectrum_file")?);
            let curve = read_spectrum(&file).map_err(|e| match e {
                rws_core::Error::Io(io) => {
                    CliError::Config(format!("key 'spectrum_file': cannot read {}: {io}", file.display()))
                }
                other => CliError::Config(format!("key 'spectrum_file': {other}")),
            })?;
            resolved.insert("spectrum_file".into(), raw.require("spectrum_file")?.to_string());
            spectrum_path = Some(file);
            Source::Spectrum(curve)
        }
        "kernel" => {
            let kind = raw.require("kernel")?;
            raw.only(&[&COMMON[..], &["kernel"], kernel_keys(kind)].concat(), &format!("kernel={kind}"))?;
            let kernel = kernel_from_params(kind, |k| raw.get(k).map(str::to_string))?;
            resolved.insert("kernel".into(), kind.to_string());
            for key in kernel_keys(kind) {
                if let Some(v) = raw.get(key) {
                    resolved.insert((*key).to_string(), v.to_string());
                }
            }
            Source::Kernel(kernel)
        }
        "flat" => {
            raw.only(&[&COMMON[..], &["alpha0"]].concat(), "mode=flat")?;
            let alpha0 = raw
                .number("alpha0")?
                .ok_or_else(|| CliError::Config("mode=flat needs key 'alpha0'".into()))?;
            resolved.insert("alpha0".into(), raw.require("alpha0")?.to_string());
            Source::Flat { alpha0 }
        }
        other => {
            return Err(CliError::Config(format!(
                "key 'mode': expected spectrum|kernel|flat, got '{other}'"
            )))
        }
    };

    resolved.insert("mode".into(), mode.to_string());
    resolved.insert("J".into(), levels.to_string());
    resolved.insert("seed".into(), seed.to_string());
    resolved.insert("wavelet".into(), format!("db{wavelet}"));

    let config = SynthesisConfig::new(levels, source, wavelet, seed);
    config.validate()?;
    Ok(SynthSetup {
        config,
        resolved,
        spectrum_path,
    })
}
