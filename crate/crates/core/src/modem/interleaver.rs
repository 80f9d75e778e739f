use crate::error::{Error, Result};
use crate::phy::Numerology;

/// Per-stream, per-OFDM-symbol block interleaver.
///
/// `permutation[k]` is the output position of input bit `k` after the
/// column/row write-read, the adjacent-bit significance rotation and the
/// per-stream frequency rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    permutation: Vec<usize>,
}

impl Interleaver {
    pub fn new(numerology: &Numerology, n_bpscs: usize, stream_index: usize) -> Self {
        let n_cbpss = numerology.n_sd() * n_bpscs;
        let n_col = numerology.interleaver_columns();
        let n_row = numerology.interleaver_row_factor() * n_bpscs;
        let n_rot = numerology.interleaver_rotation();
        let s = (n_bpscs / 2).max(1);
        let rot_steps = (stream_index * 2) % 3 + 3 * (stream_index / 3);
        let shift = (rot_steps * n_rot * n_bpscs) % n_cbpss;

        let permutation = (0..n_cbpss)
            .map(|k| {
                let i = n_row * (k % n_col) + k / n_col;
                let j = s * (i / s) + (i + n_cbpss - (n_col * i) / n_cbpss) % s;
                (j + n_cbpss - shift) % n_cbpss
            })
            .collect();
        Interleaver { permutation }
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.permutation.len() {
            return Err(Error::invalid(format!(
                "interleaver block is {} values, got {n}",
                self.permutation.len()
            )));
        }
        Ok(())
    }

    pub fn interleave_into<T: Copy>(&self, input: &[T], out: &mut [T]) -> Result<()> {
        self.check(input.len())?;
        self.check(out.len())?;
        for (k, &r) in self.permutation.iter().enumerate() {
            out[r] = input[k];
        }
        Ok(())
    }

    pub fn deinterleave_into<T: Copy>(&self, input: &[T], out: &mut [T]) -> Result<()> {
        self.check(input.len())?;
        self.check(out.len())?;
        for (k, &r) in self.permutation.iter().enumerate() {
            out[k] = input[r];
        }
        Ok(())
    }

    pub fn interleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::default(); input.len()];
        self.interleave_into(input, &mut out)?;
        Ok(out)
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::default(); input.len()];
        self.deinterleave_into(input, &mut out)?;
        Ok(out)
    }
}

pub fn interleave<T: Copy + Default>(
    stream_bits: &[T],
    n_bpscs: usize,
    stream_index: usize,
    numerology: &Numerology,
) -> Result<Vec<T>> {
    Interleaver::new(numerology, n_bpscs, stream_index).interleave(stream_bits)
}

pub fn deinterleave<T: Copy + Default>(
    stream_bits: &[T],
    n_bpscs: usize,
    stream_index: usize,
    numerology: &Numerology,
) -> Result<Vec<T>> {
    Interleaver::new(numerology, n_bpscs, stream_index).deinterleave(stream_bits)
}
