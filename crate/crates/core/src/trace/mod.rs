//! Force-time traces: container, CSV format, synthesis, integration,
//! segmentation and model fitting.

pub mod fit;
pub mod quadrature;
pub mod segment;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::reflex::CollisionParams1D;
use crate::sim::{simulate, SimOptions};

pub use fit::{fit_trace, FitResult, FitSigma};
pub use quadrature::{integrate_trace, IntegrationMethod};
pub use segment::{segment_trace, Segmentation};

/// Samples needed by any analysis routine.
pub const MIN_SAMPLES: usize = 8;

pub const CSV_HEADER: [&str; 2] = ["t_s", "force_n"];

/// Ordered force samples with a source label and nominal sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTrace {
    pub label: String,
    /// Hz
    pub sample_rate: f64,
    t: Vec<f64>,
    f: Vec<f64>,
}

impl ForceTrace {
    /// Builds a trace; times must be finite and strictly increasing.
    pub fn new(label: impl Into<String>, t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() {
            return Err(Error::InvalidTrace {
                index: t.len().min(f.len()),
                message: format!("{} times but {} forces", t.len(), f.len()),
            });
        }
        if t.is_empty() {
            return Err(Error::InvalidTrace {
                index: 0,
                message: "no samples".into(),
            });
        }
        for (i, (&ti, &fi)) in t.iter().zip(&f).enumerate() {
            if !ti.is_finite() || !fi.is_finite() {
                return Err(Error::InvalidTrace {
                    index: i,
                    message: "non-finite value".into(),
                });
            }
            if i > 0 && ti <= t[i - 1] {
                return Err(Error::InvalidTrace {
                    index: i,
                    message: format!("time {ti} does not increase past {}", t[i - 1]),
                });
            }
        }
        let n = t.len();
        let sample_rate = if n > 1 {
            (n - 1) as f64 / (t[n - 1] - t[0])
        } else {
            0.0
        };
        Ok(Self {
            label: label.into(),
            sample_rate,
            t,
            f,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn forces(&self) -> &[f64] {
        &self.f
    }

    pub(crate) fn forces_mut(&mut self) -> &mut [f64] {
        &mut self.f
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.f.iter().copied())
    }

    /// Copy with every force multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            f: self.f.iter().map(|f| alpha * f).collect(),
            ..self.clone()
        }
    }

    pub fn require_samples(&self, required: usize) -> Result<()> {
        if self.len() < required {
            Err(Error::TooFewSamples {
                found: self.len(),
                required,
            })
        } else {
            Ok(())
        }
    }
}

/// Significant digits written to trace files.
pub const CSV_DIGITS: usize = 12;

/// Rounds to `CSV_DIGITS` significant digits and prints the shortest
/// representation of the result.
pub fn format_sig(x: f64) -> String {
    let rounded: f64 = format!("{x:.prec$e}", prec = CSV_DIGITS - 1).parse().unwrap_or(x);
    if rounded == 0.0 {
        "0".into()
    } else {
        format!("{rounded}")
    }
}

pub fn parse_trace(text: &str, source: &str) -> Result<ForceTrace> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_error = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };

    let mut records = reader.records();
    match records.next() {
        Some(Ok(header)) if header.iter().eq(CSV_HEADER) => {}
        Some(Ok(header)) => {
            return Err(parse_error(
                1,
                format!("expected header `t_s,force_n`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
            ))
        }
        Some(Err(e)) => return Err(parse_error(1, e.to_string())),
        None => return Err(parse_error(1, "empty file, expected header `t_s,force_n`".into())),
    }

    let mut t = Vec::new();
    let mut f = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_error(line, format!("expected 2 cells, found {}", record.len())));
        }
        let cell = |i: usize| -> Result<f64> {
            let raw = &record[i];
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(line, format!("`{raw}` in column {} is not a finite number", CSV_HEADER[i]))),
            }
        };
        let (ti, fi) = (cell(0)?, cell(1)?);
        if let Some(&prev) = t.last() {
            if ti <= prev {
                return Err(parse_error(line, format!("time {ti} does not increase past {prev}")));
            }
        }
        t.push(ti);
        f.push(fi);
    }
    if t.is_empty() {
        return Err(parse_error(2, "no samples after header".into()));
    }
    let label = Path::new(source)
        .file_stem()
        .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    ForceTrace::new(label, t, f)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<ForceTrace> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut text = String::new();
    File::open(path).map_err(io)?.read_to_string(&mut text).map_err(io)?;
    parse_trace(&text, &path.display().to_string())
}

pub fn write_trace_to(trace: &ForceTrace, out: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for (t, f) in trace.samples() {
        writeln!(w, "{},{}", format_sig(t), format_sig(f))?;
    }
    w.flush()
}

pub fn write_trace(trace: &ForceTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_trace_to(trace, file).map_err(io)
}

/// Simulated trace of one collision, with the noise requested in `opt`.
pub fn synthesize_trace(p: &CollisionParams1D, opt: &SimOptions) -> Result<ForceTrace> {
    let mut trace = simulate(p, opt)?.trace;
    trace.label = "synthetic".into();
    Ok(trace)
}
