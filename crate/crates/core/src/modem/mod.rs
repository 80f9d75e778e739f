//! Coded bits to OFDM frequency grid and back.

mod constellation;
mod equalizer;
mod interleaver;

pub use constellation::{demap_llr, demap_llr_into, map_symbols, Constellation};
pub use equalizer::{equalize, Detector, EqualizedGrid, MAX_POST_SNR};
pub use interleaver::{deinterleave, interleave, Interleaver};

use crate::coding::Scrambler;
use crate::error::{Error, Result};
use crate::phy::{Bandwidth, Numerology};
use crate::Complex;

/// Frequency-domain symbols for one frame.
///
/// Data values are stored flat in `(ofdm_symbol, stream, data_subcarrier)`
/// order, pilots likewise in `(ofdm_symbol, stream, pilot_subcarrier)` order.
/// At the transmitter the stream axis is the spatial stream; after the
/// channel it is the receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub numerology: Numerology,
    pub n_sym: usize,
    pub n_streams: usize,
    pub data: Vec<Complex>,
    pub pilots: Vec<Complex>,
}

impl FrequencyGrid {
    pub fn zeros(numerology: Numerology, n_sym: usize, n_streams: usize) -> Self {
        let data = vec![Complex::new(0.0, 0.0); n_sym * n_streams * numerology.n_sd()];
        let pilots = vec![Complex::new(0.0, 0.0); n_sym * n_streams * numerology.n_sp()];
        FrequencyGrid {
            numerology,
            n_sym,
            n_streams,
            data,
            pilots,
        }
    }

    pub fn n_sd(&self) -> usize {
        self.numerology.n_sd()
    }

    pub fn n_sp(&self) -> usize {
        self.numerology.n_sp()
    }

    /// Data subcarriers of one stream in one OFDM symbol.
    pub fn data_row(&self, sym: usize, stream: usize) -> &[Complex] {
        let n = self.n_sd();
        let start = (sym * self.n_streams + stream) * n;
        &self.data[start..start + n]
    }

    pub fn data_row_mut(&mut self, sym: usize, stream: usize) -> &mut [Complex] {
        let n = self.n_sd();
        let start = (sym * self.n_streams + stream) * n;
        &mut self.data[start..start + n]
    }

    pub fn pilot_row(&self, sym: usize, stream: usize) -> &[Complex] {
        let n = self.n_sp();
        let start = (sym * self.n_streams + stream) * n;
        &self.pilots[start..start + n]
    }

    pub fn pilot_row_mut(&mut self, sym: usize, stream: usize) -> &mut [Complex] {
        let n = self.n_sp();
        let start = (sym * self.n_streams + stream) * n;
        &mut self.pilots[start..start + n]
    }

    /// Sum of |x|^2 over data subcarriers.
    pub fn data_energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Sum of |x|^2 over data and pilot subcarriers.
    pub fn total_energy(&self) -> f64 {
        self.data_energy() + self.pilots.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }
}

/// Splits coded bits round-robin over `n_ss` streams in groups of
/// `max(1, n_bpscs / 2)` consecutive values.
pub fn stream_parse<T: Copy>(bits: &[T], n_ss: usize, n_bpscs: usize) -> Result<Vec<Vec<T>>> {
    if n_ss == 0 || n_bpscs == 0 {
        return Err(Error::invalid(
            "stream count and bits per subcarrier must be positive",
        ));
    }
    let s = (n_bpscs / 2).max(1);
    if !bits.len().is_multiple_of(n_ss * s) {
        return Err(Error::invalid(format!(
            "{} bits cannot be split into {n_ss} streams of {s}-bit groups",
            bits.len()
        )));
    }
    let mut streams: Vec<Vec<T>> = (0..n_ss)
        .map(|_| Vec::with_capacity(bits.len() / n_ss))
        .collect();
    for (group, chunk) in bits.chunks_exact(s).enumerate() {
        streams[group % n_ss].extend_from_slice(chunk);
    }
    Ok(streams)
}

/// Inverse of [`stream_parse`].
pub fn stream_deparse<T: Copy>(streams: &[Vec<T>], n_bpscs: usize) -> Result<Vec<T>> {
    let n_ss = streams.len();
    if n_ss == 0 {
        return Ok(Vec::new());
    }
    let s = (n_bpscs / 2).max(1);
    let len = streams[0].len();
    if streams.iter().any(|st| st.len() != len) || !len.is_multiple_of(s) {
        return Err(Error::invalid("streams have inconsistent lengths"));
    }
    let mut out = Vec::with_capacity(len * n_ss);
    for group in 0..len / s {
        for st in streams {
            out.extend_from_slice(&st[group * s..(group + 1) * s]);
        }
    }
    Ok(out)
}

/// Base pilot pattern for `(stream, n_streams)`; rotated by one position per OFDM symbol.
fn pilot_pattern(bandwidth: Bandwidth, n_streams: usize, stream: usize) -> &'static [f64] {
    match (bandwidth, n_streams.min(2), stream) {
        (Bandwidth::Mhz20, 1, _) => &[1.0, 1.0, 1.0, -1.0],
        (Bandwidth::Mhz20, _, 0) => &[1.0, 1.0, -1.0, -1.0],
        (Bandwidth::Mhz20, _, _) => &[1.0, -1.0, -1.0, 1.0],
        (Bandwidth::Mhz40, 1, _) => &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
        (Bandwidth::Mhz40, _, 0) => &[1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        (Bandwidth::Mhz40, _, _) => &[1.0, 1.0, 1.0, -1.0, 1.0, 1.0],
    }
}

/// Pilot values of one OFDM data symbol for one stream.
pub fn pilot_values(
    numerology: &Numerology,
    n_streams: usize,
    stream: usize,
    sym: usize,
) -> Vec<Complex> {
    // polarity sequence = 127-periodic scrambler output from the all-ones state,
    // offset by the three HT-SIG/L-SIG symbols that precede the data field
    let polarity_bit = Scrambler::new(0x7f)
        .expect("non-zero seed")
        .nth((sym + 3) % 127)
        .expect("infinite sequence");
    let polarity = 1.0 - 2.0 * polarity_bit as f64;
    let base = pilot_pattern(numerology.bandwidth, n_streams, stream);
    let n = base.len();
    (0..n)
        .map(|j| Complex::new(polarity * base[(sym + j) % n], 0.0))
        .collect()
}

/// Places per-stream data symbols on the data subcarriers and inserts pilots.
pub fn assemble_grid(
    per_stream: &[Vec<Complex>],
    numerology: &Numerology,
    n_sym: usize,
) -> Result<FrequencyGrid> {
    let n_sd = numerology.n_sd();
    let n_streams = per_stream.len();
    if n_streams == 0 {
        return Err(Error::invalid("no streams supplied"));
    }
    for (i, s) in per_stream.iter().enumerate() {
        if s.len() != n_sd * n_sym {
            return Err(Error::invalid(format!(
                "stream {i} has {} symbols, expected {} ({n_sd} x {n_sym})",
                s.len(),
                n_sd * n_sym
            )));
        }
    }
    let mut grid = FrequencyGrid::zeros(numerology.clone(), n_sym, n_streams);
    for sym in 0..n_sym {
        for (st, symbols) in per_stream.iter().enumerate() {
            grid.data_row_mut(sym, st)
                .copy_from_slice(&symbols[sym * n_sd..(sym + 1) * n_sd]);
            let pilots = pilot_values(numerology, n_streams, st, sym);
            grid.pilot_row_mut(sym, st).copy_from_slice(&pilots);
        }
    }
    Ok(grid)
}
