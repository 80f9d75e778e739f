use crate::error::{Error, Result};
use crate::phy::Modulation;
use crate::Complex;

/// Gray-mapped square constellation built from two PAM axes.
///
/// Within an axis the bits are MSB first and select the PAM level through the
/// inverse Gray code, e.g. for 16-QAM `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constellation {
    modulation: Modulation,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        Constellation { modulation }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Bits carried per axis; BPSK uses only the in-phase axis.
    fn axis_bits(&self) -> usize {
        match self.modulation {
            Modulation::Bpsk => 1,
            m => m.bits_per_symbol() / 2,
        }
    }

    /// Amplitude normalization giving unit average energy.
    pub fn scale(&self) -> f64 {
        match self.modulation {
            Modulation::Bpsk => 1.0,
            Modulation::Qpsk => 1.0 / 2f64.sqrt(),
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
            Modulation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    fn level(axis_bits: usize, bits: &[u8]) -> f64 {
        let gray = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut idx = gray;
        let mut shift = gray >> 1;
        while shift != 0 {
            idx ^= shift;
            shift >>= 1;
        }
        (2 * idx) as f64 - ((1 << axis_bits) - 1) as f64
    }

    pub fn map(&self, bits: &[u8]) -> Complex {
        let m = self.axis_bits();
        let k = self.scale();
        match self.modulation {
            Modulation::Bpsk => Complex::new(Self::level(1, &bits[..1]) * k, 0.0),
            _ => Complex::new(
                Self::level(m, &bits[..m]) * k,
                Self::level(m, &bits[m..2 * m]) * k,
            ),
        }
    }

    /// Every point with its bit label, in label order.
    pub fn points(&self) -> Vec<(Vec<u8>, Complex)> {
        let n = self.bits_per_symbol();
        (0..1usize << n)
            .map(|v| {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                let p = self.map(&bits);
                (bits, p)
            })
            .collect()
    }

    /// Max-log LLRs for one axis, appended to `out`.
    fn axis_llrs(axis_bits: usize, y: f64, scale: f64, post_snr: f64, out: &mut Vec<f64>) {
        let n_levels = 1usize << axis_bits;
        let mut best = [[f64::INFINITY; 2]; 3];
        for idx in 0..n_levels {
            let level = ((2 * idx) as f64 - (n_levels - 1) as f64) * scale;
            let d = (y - level) * (y - level);
            let gray = idx ^ (idx >> 1);
            for (j, slot) in best.iter_mut().take(axis_bits).enumerate() {
                let bit = (gray >> (axis_bits - 1 - j)) & 1;
                if d < slot[bit] {
                    slot[bit] = d;
                }
            }
        }
        for slot in best.iter().take(axis_bits) {
            out.push(post_snr * (slot[1] - slot[0]));
        }
    }

    /// Appends one LLR per bit (positive favours 0). LLRs are scaled by the
    /// post-detection SNR, i.e. the inverse of the residual noise variance
    /// relative to the unit-energy constellation.
    pub fn demap_into(&self, estimate: Complex, post_snr: f64, out: &mut Vec<f64>) {
        let m = self.axis_bits();
        let k = self.scale();
        match self.modulation {
            Modulation::Bpsk => Self::axis_llrs(1, estimate.re, k, post_snr, out),
            _ => {
                Self::axis_llrs(m, estimate.re, k, post_snr, out);
                Self::axis_llrs(m, estimate.im, k, post_snr, out);
            }
        }
    }
}

pub fn map_symbols(bits: &[u8], modulation: Modulation) -> Result<Vec<Complex>> {
    let c = Constellation::new(modulation);
    let n = c.bits_per_symbol();
    if !bits.len().is_multiple_of(n) {
        return Err(Error::invalid(format!(
            "{} bits is not a multiple of {n} bits per {modulation} symbol",
            bits.len()
        )));
    }
    Ok(bits.chunks_exact(n).map(|chunk| c.map(chunk)).collect())
}

pub fn demap_llr(estimate: Complex, post_snr: f64, modulation: Modulation) -> Vec<f64> {
    let mut out = Vec::with_capacity(modulation.bits_per_symbol());
    Constellation::new(modulation).demap_into(estimate, post_snr, &mut out);
    out
}

pub fn demap_llr_into(
    estimate: Complex,
    post_snr: f64,
    modulation: Modulation,
    out: &mut Vec<f64>,
) {
    Constellation::new(modulation).demap_into(estimate, post_snr, out);
}
