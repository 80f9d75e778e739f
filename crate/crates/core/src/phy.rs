//! HT (802.11n) numerology and modulation/coding tables.
//!
//! Everything downstream is table-driven from [`McsEntry`] and [`Numerology`]:
//! subcarrier layout, interleaver geometry, rates and frame lengths.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subcarrier spacing shared by both channel widths.
pub const SUBCARRIER_SPACING_HZ: f64 = 312_500.0;

/// Default carrier (2.4 GHz ISM).
pub const DEFAULT_CARRIER_HZ: f64 = 2.4e9;

pub const SERVICE_BITS: usize = 16;
pub const TAIL_BITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Bandwidth {
    Mhz20,
    Mhz40,
}

impl Bandwidth {
    pub fn mhz(self) -> u32 {
        match self {
            Bandwidth::Mhz20 => 20,
            Bandwidth::Mhz40 => 40,
        }
    }
}

impl TryFrom<u32> for Bandwidth {
    type Error = Error;

    fn try_from(mhz: u32) -> Result<Self> {
        match mhz {
            20 => Ok(Bandwidth::Mhz20),
            40 => Ok(Bandwidth::Mhz40),
            other => Err(Error::invalid(format!(
                "unsupported bandwidth {other} MHz (expected 20 or 40)"
            ))),
        }
    }
}

impl From<Bandwidth> for u32 {
    fn from(bw: Bandwidth) -> u32 {
        bw.mhz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum GuardInterval {
    Long,
    Short,
}

impl GuardInterval {
    pub fn ns(self) -> u32 {
        match self {
            GuardInterval::Long => 800,
            GuardInterval::Short => 400,
        }
    }

    /// OFDM symbol duration in units of 100 ns (40 for the long GI, 36 for the short one).
    fn symbol_duration_100ns(self) -> u64 {
        match self {
            GuardInterval::Long => 40,
            GuardInterval::Short => 36,
        }
    }

    pub fn symbol_duration_us(self) -> f64 {
        self.symbol_duration_100ns() as f64 / 10.0
    }
}

impl TryFrom<u32> for GuardInterval {
    type Error = Error;

    fn try_from(ns: u32) -> Result<Self> {
        match ns {
            800 => Ok(GuardInterval::Long),
            400 => Ok(GuardInterval::Short),
            other => Err(Error::invalid(format!(
                "unsupported guard interval {other} ns (expected 800 or 400)"
            ))),
        }
    }
}

impl From<GuardInterval> for u32 {
    fn from(gi: GuardInterval) -> u32 {
        gi.ns()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16-QAM",
            Modulation::Qam64 => "64-QAM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "2/3")]
    TwoThirds,
    #[serde(rename = "3/4")]
    ThreeQuarters,
    #[serde(rename = "5/6")]
    FiveSixths,
}

impl CodeRate {
    pub fn numerator(self) -> usize {
        match self {
            CodeRate::Half => 1,
            CodeRate::TwoThirds => 2,
            CodeRate::ThreeQuarters => 3,
            CodeRate::FiveSixths => 5,
        }
    }

    pub fn denominator(self) -> usize {
        match self {
            CodeRate::Half => 2,
            CodeRate::TwoThirds => 3,
            CodeRate::ThreeQuarters => 4,
            CodeRate::FiveSixths => 6,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    pub fn from_ratio(num: usize, den: usize) -> Result<Self> {
        let all = [
            CodeRate::Half,
            CodeRate::TwoThirds,
            CodeRate::ThreeQuarters,
            CodeRate::FiveSixths,
        ];
        all.into_iter()
            .find(|r| r.numerator() * den == num * r.denominator())
            .ok_or_else(|| Error::invalid(format!("unsupported code rate {num}/{den}")))
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

/// Subcarrier layout for one channel width.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerology {
    pub bandwidth: Bandwidth,
    pub fft_size: usize,
    pub data_indices: Vec<i32>,
    pub pilot_indices: Vec<i32>,
    pub carrier_hz: f64,
}

impl Numerology {
    pub fn new(bandwidth: Bandwidth) -> Self {
        Self::with_carrier(bandwidth, DEFAULT_CARRIER_HZ)
    }

    pub fn with_carrier(bandwidth: Bandwidth, carrier_hz: f64) -> Self {
        let (fft_size, edge, dc, pilots): (usize, i32, i32, &[i32]) = match bandwidth {
            Bandwidth::Mhz20 => (64, 28, 0, &[-21, -7, 7, 21]),
            Bandwidth::Mhz40 => (128, 58, 1, &[-53, -25, -11, 11, 25, 53]),
        };
        let data_indices = (-edge..=edge)
            .filter(|k| k.abs() > dc && !pilots.contains(k))
            .collect();
        Numerology {
            bandwidth,
            fft_size,
            data_indices,
            pilot_indices: pilots.to_vec(),
            carrier_hz,
        }
    }

    pub fn n_sd(&self) -> usize {
        self.data_indices.len()
    }

    pub fn n_sp(&self) -> usize {
        self.pilot_indices.len()
    }

    /// Data plus pilot subcarriers; the ones that carry transmit power.
    pub fn n_used(&self) -> usize {
        self.n_sd() + self.n_sp()
    }

    /// All energized subcarrier indices in ascending order.
    pub fn used_indices(&self) -> Vec<i32> {
        let mut all: Vec<i32> = self
            .data_indices
            .iter()
            .chain(&self.pilot_indices)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn subcarrier_freq(&self, index: i32) -> f64 {
        self.carrier_hz + index as f64 * SUBCARRIER_SPACING_HZ
    }

    pub fn symbol_duration_us(&self, gi: GuardInterval) -> f64 {
        gi.symbol_duration_us()
    }

    /// Interleaver column count.
    pub fn interleaver_columns(&self) -> usize {
        match self.bandwidth {
            Bandwidth::Mhz20 => 13,
            Bandwidth::Mhz40 => 18,
        }
    }

    /// Interleaver row count per coded bit per subcarrier.
    pub fn interleaver_row_factor(&self) -> usize {
        match self.bandwidth {
            Bandwidth::Mhz20 => 4,
            Bandwidth::Mhz40 => 6,
        }
    }

    /// Frequency rotation applied to streams beyond the first.
    pub fn interleaver_rotation(&self) -> usize {
        match self.bandwidth {
            Bandwidth::Mhz20 => 11,
            Bandwidth::Mhz40 => 29,
        }
    }
}

/// One row of the HT MCS table for a given bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsEntry {
    pub index: u8,
    pub n_ss: usize,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    pub n_bpscs: usize,
    pub n_cbps: usize,
    pub n_dbps: usize,
    pub bandwidth: Bandwidth,
}

impl McsEntry {
    /// Coded bits per OFDM symbol for a single stream.
    pub fn n_cbpss(&self) -> usize {
        self.n_cbps / self.n_ss
    }
}

const EQM_TABLE: [(Modulation, CodeRate); 8] = [
    (Modulation::Bpsk, CodeRate::Half),
    (Modulation::Qpsk, CodeRate::Half),
    (Modulation::Qpsk, CodeRate::ThreeQuarters),
    (Modulation::Qam16, CodeRate::Half),
    (Modulation::Qam16, CodeRate::ThreeQuarters),
    (Modulation::Qam64, CodeRate::TwoThirds),
    (Modulation::Qam64, CodeRate::ThreeQuarters),
    (Modulation::Qam64, CodeRate::FiveSixths),
];

pub fn mcs_lookup(index: u8, bandwidth: Bandwidth) -> Result<McsEntry> {
    if index > 15 {
        return Err(Error::invalid(format!(
            "MCS index {index} out of range 0..=15"
        )));
    }
    let n_ss = if index < 8 { 1 } else { 2 };
    let (modulation, code_rate) = EQM_TABLE[(index % 8) as usize];
    let n_sd = Numerology::new(bandwidth).n_sd();
    let n_bpscs = modulation.bits_per_symbol();
    let n_cbps = n_sd * n_bpscs * n_ss;
    debug_assert_eq!(n_cbps * code_rate.numerator() % code_rate.denominator(), 0);
    let n_dbps = n_cbps * code_rate.numerator() / code_rate.denominator();
    Ok(McsEntry {
        index,
        n_ss,
        modulation,
        code_rate,
        n_bpscs,
        n_cbps,
        n_dbps,
        bandwidth,
    })
}

/// PHY data rate in Mb/s, rounded to 0.1 Mb/s.
pub fn data_rate(entry: &McsEntry, gi: GuardInterval) -> f64 {
    // n_dbps / (T in 100 ns units) * 10 = Mb/s; work in tenths with round-half-up.
    let t = gi.symbol_duration_100ns();
    let tenths = (entry.n_dbps as u64 * 100 * 2 + t) / (2 * t);
    tenths as f64 / 10.0
}

/// Number of OFDM data symbols for a PSDU with one BCC encoder.
pub fn num_symbols(entry: &McsEntry, psdu_bytes: usize) -> usize {
    (SERVICE_BITS + 8 * psdu_bytes + TAIL_BITS).div_ceil(entry.n_dbps)
}
