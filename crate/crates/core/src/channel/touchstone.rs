//! Touchstone v1 (`.sNp`) reader and writer.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Complex;

/// Multi-port S-parameter data on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SParamNetwork {
    pub n_ports: usize,
    pub freqs_hz: Vec<f64>,
    /// `s[i][(row, col)]` is S(row+1)(col+1) at `freqs_hz[i]`.
    pub s: Vec<DMatrix<Complex>>,
    pub z0_ohms: f64,
}

impl SParamNetwork {
    pub fn new(
        n_ports: usize,
        freqs_hz: Vec<f64>,
        s: Vec<DMatrix<Complex>>,
        z0_ohms: f64,
    ) -> Result<Self> {
        if freqs_hz.is_empty() || freqs_hz.len() != s.len() {
            return Err(Error::invalid(
                "frequency and matrix counts differ or are empty",
            ));
        }
        if freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequencies must be strictly increasing"));
        }
        if s.iter()
            .any(|m| m.nrows() != n_ports || m.ncols() != n_ports)
        {
            return Err(Error::invalid(format!(
                "every matrix must be {n_ports}x{n_ports}"
            )));
        }
        Ok(SParamNetwork {
            n_ports,
            freqs_hz,
            s,
            z0_ohms,
        })
    }

    pub fn min_freq(&self) -> f64 {
        self.freqs_hz[0]
    }

    pub fn max_freq(&self) -> f64 {
        *self.freqs_hz.last().expect("non-empty")
    }

    /// Linear interpolation of every entry (real and imaginary parts
    /// independently). Exact at sample frequencies.
    pub fn interpolate(&self, freq_hz: f64) -> Result<DMatrix<Complex>> {
        let (lo, hi) = (self.min_freq(), self.max_freq());
        if !(freq_hz >= lo && freq_hz <= hi) {
            return Err(Error::OutOfBand {
                freq_hz,
                min_hz: lo,
                max_hz: hi,
            });
        }
        // index of the last sample <= freq_hz
        let i = self.freqs_hz.partition_point(|&f| f <= freq_hz) - 1;
        if i + 1 == self.freqs_hz.len() || self.freqs_hz[i] == freq_hz {
            return Ok(self.s[i].clone());
        }
        let (f0, f1) = (self.freqs_hz[i], self.freqs_hz[i + 1]);
        let t = (freq_hz - f0) / (f1 - f0);
        let (a, b) = (&self.s[i], &self.s[i + 1]);
        Ok(a.zip_map(b, |x, y| {
            Complex::new(x.re + t * (y.re - x.re), x.im + t * (y.im - x.im))
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DataFormat {
    Ri,
    Ma,
    Db,
}

impl DataFormat {
    fn to_complex(self, a: f64, b: f64) -> Complex {
        match self {
            DataFormat::Ri => Complex::new(a, b),
            DataFormat::Ma => Complex::from_polar(a, b.to_radians()),
            DataFormat::Db => Complex::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }
}

struct Options {
    freq_scale: f64,
    format: DataFormat,
    z0: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            freq_scale: 1e9,
            format: DataFormat::Ma,
            z0: 50.0,
        }
    }
}

fn parse_options(line: &str, lineno: usize) -> Result<Options> {
    let mut opts = Options::default();
    let mut tokens = line.trim_start_matches('#').split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opts.freq_scale = 1.0,
            "KHZ" => opts.freq_scale = 1e3,
            "MHZ" => opts.freq_scale = 1e6,
            "GHZ" => opts.freq_scale = 1e9,
            "S" => {}
            p @ ("Y" | "Z" | "H" | "G") => {
                return Err(Error::parse(
                    lineno,
                    format!("parameter type {p} is not supported, only S"),
                ))
            }
            "RI" => opts.format = DataFormat::Ri,
            "MA" => opts.format = DataFormat::Ma,
            "DB" => opts.format = DataFormat::Db,
            "R" => {
                let z = tokens
                    .next()
                    .ok_or_else(|| Error::parse(lineno, "missing reference resistance after R"))?;
                opts.z0 = z
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad reference resistance {z:?}")))?;
            }
            other => {
                return Err(Error::parse(lineno, format!("unknown option {other:?}")));
            }
        }
    }
    Ok(opts)
}

/// Parses Touchstone v1 text for an `expected_ports`-port network.
///
/// Two-port rows use the `S11 S21 S12 S22` column order; other port counts
/// are row-major, with each frequency point starting on a new line.
pub fn parse_touchstone(text: &str, expected_ports: usize) -> Result<SParamNetwork> {
    if expected_ports == 0 {
        return Err(Error::invalid("port count must be at least 1"));
    }
    let n = expected_ports;
    let record = 1 + 2 * n * n;
    let mut opts: Option<Options> = None;
    // (values, line number of the first value)
    let mut records: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut current: Vec<f64> = Vec::with_capacity(record);
    let mut current_line = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        last_line = lineno;
        if line.starts_with('#') {
            if opts.is_none() {
                opts = Some(parse_options(line, lineno)?);
            }
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::parse(
                lineno,
                "Touchstone v2 keywords are not supported",
            ));
        }
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(lineno, format!("malformed number {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if current.is_empty() {
            current_line = lineno;
        }
        current.extend(values);
        if current.len() > record {
            return Err(Error::parse(
                lineno,
                format!(
                    "frequency point spans {} values, expected {record} for a {n}-port network",
                    current.len()
                ),
            ));
        }
        if current.len() == record {
            records.push((std::mem::take(&mut current), current_line));
        }
    }
    if !current.is_empty() {
        return Err(Error::parse(
            last_line,
            format!(
                "incomplete frequency point starting at line {current_line}: {} of {record} values",
                current.len()
            ),
        ));
    }
    if records.is_empty() {
        return Err(Error::parse(last_line.max(1), "no frequency points"));
    }

    let opts = opts.unwrap_or_default();
    let mut freqs = Vec::with_capacity(records.len());
    let mut mats = Vec::with_capacity(records.len());
    for (values, lineno) in records {
        let f = values[0] * opts.freq_scale;
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(Error::parse(
                    lineno,
                    format!("frequency {f} Hz does not increase (previous {prev} Hz)"),
                ));
            }
        }
        let pairs: Vec<Complex> = values[1..]
            .chunks_exact(2)
            .map(|p| opts.format.to_complex(p[0], p[1]))
            .collect();
        let m = if n == 2 {
            // S11 S21 S12 S22
            DMatrix::from_column_slice(2, 2, &pairs)
        } else {
            DMatrix::from_row_slice(n, n, &pairs)
        };
        freqs.push(f);
        mats.push(m);
    }
    SParamNetwork::new(n, freqs, mats, opts.z0)
}

/// Port count implied by a `.sNp` extension.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    digits.parse().ok().filter(|&n| n > 0)
}

pub fn read_touchstone(path: &Path, expected_ports: Option<usize>) -> Result<SParamNetwork> {
    let ports = expected_ports
        .or_else(|| ports_from_extension(path))
        .ok_or_else(|| {
            Error::invalid(format!(
                "cannot infer port count from {}; expected a .sNp extension",
                path.display()
            ))
        })?;
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_touchstone(&text, ports)
}

/// Serializes in real/imaginary format with Hz frequencies. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_touchstone(net: &SParamNetwork) -> String {
    let mut out = String::new();
    let n = net.n_ports;
    let _ = writeln!(out, "! {n}-port S-parameters");
    let _ = writeln!(out, "# HZ S RI R {:e}", net.z0_ohms);
    for (f, m) in net.freqs_hz.iter().zip(&net.s) {
        let _ = write!(out, "{f:e}");
        if n == 2 {
            for (r, c) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let v = m[(r, c)];
                let _ = write!(out, " {:e} {:e}", v.re, v.im);
            }
            out.push('\n');
        } else {
            for r in 0..n {
                if r > 0 {
                    out.push(' ');
                }
                for c in 0..n {
                    let v = m[(r, c)];
                    let _ = write!(out, " {:e} {:e}", v.re, v.im);
                }
                out.push('\n');
            }
        }
    }
    out
}
