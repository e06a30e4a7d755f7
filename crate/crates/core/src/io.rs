//! File formats: the binary `rws-sig v1` signal format, plain CSV signals,
//! and `h,d` / `alpha,rho` curve tables.
//!
//! `rws-sig v1` layout (all integers little-endian):
//!
//! | offset | size | content                       |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `RWS1`                  |
//! | 4      | 4    | version, `1`                  |
//! | 8      | 4    | `J`                           |
//! | 12     | 4    | reserved, `0`                 |
//! | 16     | 8·2^J| samples as IEEE-754 binary64  |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::SpectrumCurve;
use crate::wavelet::Signal;

pub const SIGNAL_MAGIC: &[u8; 4] = b"RWS1";
pub const SIGNAL_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_signal(signal: &Signal) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * signal.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&SIGNAL_VERSION.to_le_bytes());
    out.extend_from_slice(&(signal.levels() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for x in signal.samples() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_signal(bytes: &[u8]) -> Result<Signal> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated rws-sig header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    if &bytes[0..4] != SIGNAL_MAGIC {
        return Err(Error::Format("bad magic, expected RWS1".into()));
    }
    if word(4) != SIGNAL_VERSION {
        return Err(Error::Format(format!("unsupported rws-sig version {}", word(4))));
    }
    let depth = word(8);
    if word(12) != 0 {
        return Err(Error::Format("reserved header field is not zero".into()));
    }
    if depth == 0 || depth > 40 {
        return Err(Error::Format(format!("bad J = {depth}")));
    }
    let n = 1usize << depth;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * n {
        return Err(Error::Format(format!(
            "expected {} sample bytes for J = {depth}, found {}",
            8 * n,
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Signal::new(samples)
}

pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    fs::write(path, encode_signal(signal))?;
    Ok(())
}

/// Reads either format: `RWS1` magic selects the binary reader, anything else
/// is parsed as one sample per line.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(SIGNAL_MAGIC) {
        return decode_signal(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Format("signal file is neither rws-sig nor text".into()))?;
    parse_signal_csv(&text)
}

pub fn parse_signal_csv(text: &str) -> Result<Signal> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Format(format!("line {}: not a number: '{line}'", i + 1)))?;
        samples.push(v);
    }
    Signal::new(samples)
}

pub fn signal_to_csv(signal: &Signal) -> String {
    let mut out = String::new();
    for x in signal.samples() {
        out.push_str(&format_g12(*x));
        out.push('\n');
    }
    out
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_g12).unwrap_or_default()
}

/// Two-column table with `#` header, absent values as empty fields.
pub fn curve_to_csv(header: &str, xs: &[f64], ys: &[Option<f64>]) -> String {
    let mut out = format!("# {header}\n");
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{},{}", format_g12(*x), format_opt(*y));
    }
    out
}

pub fn spectrum_to_csv(curve: &SpectrumCurve) -> String {
    curve_to_csv("h,d", curve.h_grid(), curve.d_values())
}

/// Parses `h,d` lines; `#` comments, blank lines and a non-numeric header
/// line are skipped.
pub fn parse_spectrum_csv(text: &str) -> Result<SpectrumCurve> {
    let mut h = Vec::new();
    let mut d = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected 'h,d'", i + 1)))?;
        let Ok(hv) = a.trim().parse::<f64>() else {
            if h.is_empty() {
                continue;
            }
            return Err(Error::Format(format!("line {}: bad h '{a}'", i + 1)));
        };
        let b = b.trim();
        let dv = if b.is_empty() {
            None
        } else {
            Some(
                b.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad d '{b}'", i + 1)))?,
            )
        };
        h.push(hv);
        d.push(dv);
    }
    SpectrumCurve::new(h, d)
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumCurve> {
    parse_spectrum_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(1.0), "1");
        assert_eq!(format_g12(-2.5), "-2.5");
        assert_eq!(format_g12(0.1 + 0.2), "0.3");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(1234567.0), "1234567");
        assert_eq!(format_g12(1e-7), "1e-07");
        assert_eq!(format_g12(6.02214076e23), "6.02214076e+23");
        assert_eq!(format_g12(0.0001), "0.0001");
    }

    #[test]
    fn header_layout() {
        let s = Signal::new(vec![1.0, -2.0, 0.5, 0.25]).unwrap();
        let b = encode_signal(&s);
        assert_eq!(&b[0..4], b"RWS1");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..12], &[2, 0, 0, 0]);
        assert_eq!(&b[12..16], &[0, 0, 0, 0]);
        assert_eq!(b.len(), 16 + 32);
        assert_eq!(&b[16..24], &1.0f64.to_le_bytes());
    }

    #[test]
    fn malformed_files() {
        let s = Signal::new(vec![0.0; 8]).unwrap();
        let mut b = encode_signal(&s);
        b.pop();
        assert!(decode_signal(&b).is_err());
        let mut b = encode_signal(&s);
        b[4] = 2;
        assert!(decode_signal(&b).is_err());
        assert!(decode_signal(b"RWS").is_err());
        assert!(parse_signal_csv("1\n2\nx\n").is_err());
        assert!(parse_signal_csv("1\n2\n3\n").is_err());
    }

    #[test]
    fn spectrum_csv_parsing() {
        let c = parse_spectrum_csv("# h,d\nh,d\n0.4,\n0.5,0\n1,0.5\n1.5,1\n2,\n").unwrap();
        assert_eq!(c.h_min(), 0.5);
        assert_eq!(c.h_max(), 1.5);
        assert_eq!(c.d_values()[0], None);
        let text = spectrum_to_csv(&c);
        assert!(text.starts_with("# h,d\n0.4,\n"));
        assert_eq!(parse_spectrum_csv(&text).unwrap(), c);
    }

    proptest! {
        #[test]
        fn binary_round_trip(depth in 1usize..8, seed in any::<u64>()) {
            let samples: Vec<f64> = (0..1u64 << depth)
                .map(|i| f64::from_bits(seed.wrapping_mul(i + 1) >> 2) - 1.0)
                .collect();
            let s = Signal::new(samples).unwrap();
            prop_assert_eq!(decode_signal(&encode_signal(&s)).unwrap(), s);
        }

        #[test]
        fn g12_parses_back_within_precision(x in -1e12f64..1e12) {
            let y: f64 = format_g12(x).parse().unwrap();
            prop_assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}
