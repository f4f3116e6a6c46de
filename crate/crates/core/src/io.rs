//! CSV formats shared by the synthetic generators and the CLI.
//!
//! Three formats, all UTF-8 with `#` comment lines and a mandatory header:
//!
//! * curve: `pump_mw,sqz_db,antisqz_db,sigma_sqz_db,sigma_antisqz_db`
//!   (pump power in mW at the boundary, converted to watts internally);
//! * visibility: `delay_ps,visibility,sigma`;
//! * spectrum: `freq_hz,level_db`, one file per trace.
//!
//! Metadata rides in `# key = value` comments. Floats are written with
//! Rust's shortest-roundtrip formatting, so write → read is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::curve_fit::{CurvePoint, FitError, MeasuredCurve};
use crate::pulses::{PulseError, VisibilityPoint, VisibilityScan};
use crate::synth::{SpectrumTrace, TraceLabel};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error(transparent)]
    Curve(#[from] FitError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
}

fn read_to_string(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Lines split into (1-based line number, content), comments and blanks
/// separated out as metadata candidates.
struct Table<'a> {
    meta: Vec<(usize, &'a str)>,
    rows: Vec<(usize, &'a str)>,
}

fn split_table(text: &str) -> Table<'_> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            meta.push((i + 1, comment.trim()));
        } else {
            rows.push((i + 1, line));
        }
    }
    Table { meta, rows }
}

fn meta_value<'a>(table: &'a Table<'_>, key: &str) -> Option<&'a str> {
    table.meta.iter().find_map(|(_, m)| {
        let (k, v) = m.split_once('=')?;
        (k.trim() == key).then(|| v.trim())
    })
}

fn parse_fields(line: usize, text: &str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(FormatError::Malformed {
            line,
            message: format!(
                "expected {expected} comma-separated fields, got {}",
                fields.len()
            ),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| FormatError::Malformed {
                line,
                message: format!("`{f}` is not a number"),
            })
        })
        .collect()
}

const CURVE_HEADER: &str = "pump_mw,sqz_db,antisqz_db,sigma_sqz_db,sigma_antisqz_db";
const VISIBILITY_HEADER: &str = "delay_ps,visibility,sigma";
const SPECTRUM_HEADER: &str = "freq_hz,level_db";

pub fn parse_curve(text: &str) -> Result<MeasuredCurve, FormatError> {
    let table = split_table(text);
    let mut rows = table.rows.iter();
    match rows.next() {
        Some(&(_, header)) if header == CURVE_HEADER => {}
        _ => return Err(FormatError::MissingHeader(CURVE_HEADER)),
    }
    let mut points = Vec::new();
    for &(line, row) in rows {
        let f = parse_fields(line, row, 5)?;
        if f[3] <= 0.0 || f[4] <= 0.0 {
            return Err(FormatError::Malformed {
                line,
                message: format!("sigmas must be > 0, got {} and {}", f[3], f[4]),
            });
        }
        points.push(CurvePoint {
            pump_w: f[0] * 1e-3,
            v_minus_db: f[1],
            v_plus_db: f[2],
            sigma_minus_db: f[3],
            sigma_plus_db: f[4],
        });
    }
    let sideband_hz = meta_value(&table, "sideband_hz")
        .and_then(|v| v.parse().ok())
        .unwrap_or(20e6);
    let rbw_hz = meta_value(&table, "rbw_hz")
        .and_then(|v| v.parse().ok())
        .unwrap_or(100e3);
    Ok(MeasuredCurve::new(points, sideband_hz, rbw_hz)?)
}

pub fn read_curve(path: &Path) -> Result<MeasuredCurve, FormatError> {
    parse_curve(&read_to_string(path)?)
}

pub fn format_curve(curve: &MeasuredCurve) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sideband_hz = {}", curve.sideband_hz);
    let _ = writeln!(out, "# rbw_hz = {}", curve.rbw_hz);
    let _ = writeln!(out, "{CURVE_HEADER}");
    for p in curve.points() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.pump_w * 1e3,
            p.v_minus_db,
            p.v_plus_db,
            p.sigma_minus_db,
            p.sigma_plus_db
        );
    }
    out
}

pub fn write_curve(path: &Path, curve: &MeasuredCurve) -> Result<(), FormatError> {
    write_string(path, &format_curve(curve))
}

pub fn parse_visibility(text: &str) -> Result<VisibilityScan, FormatError> {
    let table = split_table(text);
    let mut rows = table.rows.iter();
    match rows.next() {
        Some(&(_, header)) if header == VISIBILITY_HEADER => {}
        _ => return Err(FormatError::MissingHeader(VISIBILITY_HEADER)),
    }
    let mut points = Vec::new();
    for &(line, row) in rows {
        let f = parse_fields(line, row, 3)?;
        points.push(VisibilityPoint {
            delay_ps: f[0],
            visibility: f[1],
            sigma: f[2],
        });
    }
    let wavelength_nm = meta_value(&table, "wavelength_nm")
        .and_then(|v| v.parse().ok())
        .unwrap_or(1064);
    Ok(VisibilityScan::new(points, wavelength_nm)?)
}

pub fn read_visibility(path: &Path) -> Result<VisibilityScan, FormatError> {
    parse_visibility(&read_to_string(path)?)
}

pub fn format_visibility(scan: &VisibilityScan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# wavelength_nm = {}", scan.wavelength_nm);
    let _ = writeln!(out, "{VISIBILITY_HEADER}");
    for p in scan.points() {
        let _ = writeln!(out, "{},{},{}", p.delay_ps, p.visibility, p.sigma);
    }
    out
}

pub fn write_visibility(path: &Path, scan: &VisibilityScan) -> Result<(), FormatError> {
    write_string(path, &format_visibility(scan))
}

pub fn parse_spectrum(text: &str) -> Result<SpectrumTrace, FormatError> {
    let table = split_table(text);
    let mut rows = table.rows.iter();
    match rows.next() {
        Some(&(_, header)) if header == SPECTRUM_HEADER => {}
        _ => return Err(FormatError::MissingHeader(SPECTRUM_HEADER)),
    }
    let label = match meta_value(&table, "label").and_then(TraceLabel::parse) {
        Some(label) => label,
        None => {
            return Err(FormatError::Malformed {
                line: 1,
                message: "missing or unknown `# label = ...` metadata".into(),
            })
        }
    };
    let mut freqs_hz = Vec::new();
    let mut levels_db = Vec::new();
    for &(line, row) in rows {
        let f = parse_fields(line, row, 2)?;
        if let Some(&last) = freqs_hz.last() {
            if f[0] <= last {
                return Err(FormatError::Malformed {
                    line,
                    message: "frequencies must be strictly increasing".into(),
                });
            }
        }
        freqs_hz.push(f[0]);
        levels_db.push(f[1]);
    }
    let rbw_hz = meta_value(&table, "rbw_hz")
        .and_then(|v| v.parse().ok())
        .unwrap_or(100e3);
    let seed = meta_value(&table, "seed")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    Ok(SpectrumTrace {
        freqs_hz,
        levels_db,
        label,
        rbw_hz,
        seed,
    })
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumTrace, FormatError> {
    parse_spectrum(&read_to_string(path)?)
}

pub fn format_spectrum(trace: &SpectrumTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# label = {}", trace.label.as_str());
    let _ = writeln!(out, "# rbw_hz = {}", trace.rbw_hz);
    let _ = writeln!(out, "# seed = {}", trace.seed);
    let _ = writeln!(out, "{SPECTRUM_HEADER}");
    for (f, l) in trace.freqs_hz.iter().zip(&trace.levels_db) {
        let _ = writeln!(out, "{f},{l}");
    }
    out
}

pub fn write_spectrum(path: &Path, trace: &SpectrumTrace) -> Result<(), FormatError> {
    write_string(path, &format_spectrum(trace))
}
