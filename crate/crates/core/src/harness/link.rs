use serde::{Deserialize, Serialize};

use crate::coding::{bcc_encode, depuncture, puncture, scramble, viterbi_decode, Termination};
use crate::error::{Error, Result};
use crate::modem::{
    assemble_grid, demap_llr_into, map_symbols, stream_deparse, stream_parse, EqualizedGrid,
    FrequencyGrid, Interleaver,
};
use crate::phy::{num_symbols, McsEntry, Numerology, SERVICE_BITS, TAIL_BITS};
use crate::Complex;

/// Forward error correction in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    /// Scrambler, BCC, puncturing and interleaving as in the HT data field.
    #[default]
    Bcc,
    /// Payload bits go straight to the mapper; hard decisions at the receiver.
    Uncoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoding {
    #[default]
    Soft,
    Hard,
}

/// Transmit and receive bit chains for one MCS and PSDU length.
///
/// Data field layout (coded): `SERVICE(16) | PSDU | pad | tail(6)`, so the
/// encoder always ends in the zero state and the decoder can use a
/// terminated trellis.
#[derive(Debug, Clone)]
pub struct FrameCodec {
    entry: McsEntry,
    numerology: Numerology,
    psdu_bits: usize,
    n_sym: usize,
    coding: Coding,
    decoding: Decoding,
    interleavers: Vec<Interleaver>,
}

impl FrameCodec {
    pub fn new(
        entry: McsEntry,
        numerology: Numerology,
        psdu_bytes: usize,
        coding: Coding,
        decoding: Decoding,
    ) -> Result<Self> {
        if psdu_bytes == 0 {
            return Err(Error::invalid("PSDU must be at least one byte"));
        }
        if numerology.bandwidth != entry.bandwidth {
            return Err(Error::invalid("MCS entry and numerology bandwidths differ"));
        }
        let psdu_bits = 8 * psdu_bytes;
        let n_sym = match coding {
            Coding::Bcc => num_symbols(&entry, psdu_bytes),
            Coding::Uncoded => psdu_bits.div_ceil(entry.n_cbps),
        };
        let interleavers = (0..entry.n_ss)
            .map(|i| Interleaver::new(&numerology, entry.n_bpscs, i))
            .collect();
        Ok(FrameCodec {
            entry,
            numerology,
            psdu_bits,
            n_sym,
            coding,
            decoding,
            interleavers,
        })
    }

    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    pub fn psdu_bits(&self) -> usize {
        self.psdu_bits
    }

    pub fn entry(&self) -> &McsEntry {
        &self.entry
    }

    fn data_field_bits(&self) -> usize {
        self.n_sym * self.entry.n_dbps
    }

    /// Bits to be mapped, `n_sym * n_cbps` of them.
    fn coded_bits(&self, payload: &[u8], scrambler_seed: u8) -> Result<Vec<u8>> {
        match self.coding {
            Coding::Uncoded => {
                let mut bits = payload.to_vec();
                bits.resize(self.n_sym * self.entry.n_cbps, 0);
                Ok(bits)
            }
            Coding::Bcc => {
                let total = self.data_field_bits();
                let mut data = vec![0u8; total];
                data[SERVICE_BITS..SERVICE_BITS + self.psdu_bits].copy_from_slice(payload);
                let mut scrambled = scramble(&data[..total - TAIL_BITS], scrambler_seed)?;
                scrambled.resize(total, 0);
                puncture(&bcc_encode(&scrambled), self.entry.code_rate)
            }
        }
    }

    /// Runs the transmit chain for one PSDU (given as bits).
    pub fn encode(&self, payload: &[u8], scrambler_seed: u8) -> Result<FrequencyGrid> {
        if payload.len() != self.psdu_bits {
            return Err(Error::invalid(format!(
                "payload has {} bits, expected {}",
                payload.len(),
                self.psdu_bits
            )));
        }
        let bits = self.coded_bits(payload, scrambler_seed)?;
        let n_ss = self.entry.n_ss;
        let interleave = self.coding == Coding::Bcc;
        let mut per_stream: Vec<Vec<Complex>> = (0..n_ss)
            .map(|_| Vec::with_capacity(self.n_sym * self.numerology.n_sd()))
            .collect();
        for chunk in bits.chunks_exact(self.entry.n_cbps) {
            let streams = stream_parse(chunk, n_ss, self.entry.n_bpscs)?;
            for (i, stream) in streams.iter().enumerate() {
                let mapped = if interleave {
                    map_symbols(
                        &self.interleavers[i].interleave(stream)?,
                        self.entry.modulation,
                    )?
                } else {
                    map_symbols(stream, self.entry.modulation)?
                };
                per_stream[i].extend(mapped);
            }
        }
        assemble_grid(&per_stream, &self.numerology, self.n_sym)
    }

    /// Demaps, deinterleaves and decodes an equalized grid back to PSDU bits.
    pub fn decode(&self, eq: &EqualizedGrid, scrambler_seed: u8) -> Result<Vec<u8>> {
        if eq.n_sym != self.n_sym || eq.n_streams != self.entry.n_ss {
            return Err(Error::invalid(
                "equalized grid does not match the frame format",
            ));
        }
        let n_ss = self.entry.n_ss;
        let n_cbpss = self.entry.n_cbpss();
        let mut llrs = Vec::with_capacity(self.n_sym * self.entry.n_cbps);
        let mut stream_llrs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_cbpss); n_ss];
        let mut scratch = vec![0.0; n_cbpss];
        for sym in 0..self.n_sym {
            for (i, out) in stream_llrs.iter_mut().enumerate() {
                out.clear();
                let (est, snr) = eq.row(sym, i);
                for (y, s) in est.iter().zip(snr) {
                    demap_llr_into(*y, *s, self.entry.modulation, out);
                }
                if self.coding == Coding::Bcc {
                    self.interleavers[i].deinterleave_into(out, &mut scratch)?;
                    out.copy_from_slice(&scratch);
                }
            }
            llrs.extend(stream_deparse(&stream_llrs, self.entry.n_bpscs)?);
        }

        match self.coding {
            Coding::Uncoded => Ok(llrs[..self.psdu_bits]
                .iter()
                .map(|&l| u8::from(l < 0.0))
                .collect()),
            Coding::Bcc => {
                let mut soft = depuncture(&llrs, self.entry.code_rate)?;
                if self.decoding == Decoding::Hard {
                    for v in soft.iter_mut() {
                        *v = if *v > 0.0 {
                            1.0
                        } else if *v < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                    }
                }
                let decoded = viterbi_decode(&soft, Termination::Zero)?;
                let total = self.data_field_bits();
                let data = scramble(&decoded[..total - TAIL_BITS], scrambler_seed)?;
                Ok(data[SERVICE_BITS..SERVICE_BITS + self.psdu_bits].to_vec())
            }
        }
    }
}
