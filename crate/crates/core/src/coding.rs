//! Bit-domain pipeline: scrambler, K=7 convolutional code, puncturing and
//! soft-decision Viterbi decoding.
//!
//! Bits are `u8` values in `{0, 1}`. Soft values are log-likelihood ratios
//! with the convention that a positive LLR favours bit 0; an LLR of exactly
//! `0.0` is an erasure.

use crate::error::{Error, Result};
use crate::phy::CodeRate;

/// Generator polynomials (octal 133 and 171), MSB aligned with the newest input bit.
pub const GENERATORS: [u8; 2] = [0o133, 0o171];
pub const CONSTRAINT_LENGTH: usize = 7;
const N_STATES: usize = 1 << (CONSTRAINT_LENGTH - 1);

/// x^7 + x^4 + 1 additive scrambler.
#[derive(Debug, Clone)]
pub struct Scrambler {
    state: u8,
}

impl Scrambler {
    pub fn new(seed: u8) -> Result<Self> {
        let state = seed & 0x7f;
        if state == 0 {
            return Err(Error::invalid(
                "scrambler seed must be a non-zero 7-bit value",
            ));
        }
        Ok(Scrambler { state })
    }

    pub fn next_bit(&mut self) -> u8 {
        let fb = ((self.state >> 6) ^ (self.state >> 3)) & 1;
        self.state = ((self.state << 1) | fb) & 0x7f;
        fb
    }
}

impl Iterator for Scrambler {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.next_bit())
    }
}

/// XORs `bits` with the scrambler sequence started from `seed`. Self-inverse.
pub fn scramble(bits: &[u8], seed: u8) -> Result<Vec<u8>> {
    let lfsr = Scrambler::new(seed)?;
    Ok(bits.iter().zip(lfsr).map(|(b, s)| b ^ s).collect())
}

#[inline]
fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Rate-1/2 encoder output pair for a 7-bit register (bit 6 = newest input).
#[inline]
fn branch_output(reg: u8) -> (u8, u8) {
    (parity(reg & GENERATORS[0]), parity(reg & GENERATORS[1]))
}

/// Rate-1/2 mother-code encoder starting from the all-zero state.
/// Output is interleaved `A0 B0 A1 B1 ...`.
pub fn bcc_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * bits.len());
    let mut state = 0u8;
    for &b in bits {
        let reg = ((b & 1) << 6) | state;
        let (a, c) = branch_output(reg);
        out.push(a);
        out.push(c);
        state = reg >> 1;
    }
    out
}

fn puncture_pattern(rate: CodeRate) -> &'static [bool] {
    const T: bool = true;
    const F: bool = false;
    match rate {
        CodeRate::Half => &[T],
        CodeRate::TwoThirds => &[T, T, T, F],
        CodeRate::ThreeQuarters => &[T, T, T, F, F, T],
        CodeRate::FiveSixths => &[T, T, T, F, F, T, T, F, F, T],
    }
}

/// Deletes mother-code outputs according to the standard puncturing pattern.
pub fn puncture<T: Copy>(coded: &[T], rate: CodeRate) -> Result<Vec<T>> {
    let pattern = puncture_pattern(rate);
    if !coded.len().is_multiple_of(pattern.len()) {
        return Err(Error::invalid(format!(
            "length {} is not a multiple of the rate {rate} puncturing period {}",
            coded.len(),
            pattern.len()
        )));
    }
    Ok(coded
        .iter()
        .zip(pattern.iter().cycle())
        .filter_map(|(v, &keep)| keep.then_some(*v))
        .collect())
}

/// Re-inserts erasures (`0.0`) at the punctured positions.
pub fn depuncture(soft: &[f64], rate: CodeRate) -> Result<Vec<f64>> {
    let pattern = puncture_pattern(rate);
    let kept = pattern.iter().filter(|&&k| k).count();
    if !soft.len().is_multiple_of(kept) {
        return Err(Error::invalid(format!(
            "length {} is not a multiple of {kept} kept values per rate {rate} period",
            soft.len()
        )));
    }
    let mut out = Vec::with_capacity(soft.len() / kept * pattern.len());
    let mut it = soft.iter();
    while it.len() > 0 {
        for &keep in pattern {
            out.push(if keep { *it.next().unwrap() } else { 0.0 });
        }
    }
    Ok(out)
}

/// Whether the encoder was flushed back to the zero state by tail bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    #[default]
    Zero,
    Open,
}

/// Maximum-likelihood decoding of the rate-1/2 mother code over the full
/// block (no traceback window). Input is the depunctured LLR stream.
pub fn viterbi_decode(llrs: &[f64], termination: Termination) -> Result<Vec<u8>> {
    if !llrs.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "soft stream length {} is odd",
            llrs.len()
        )));
    }
    if let Some(bad) = llrs.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite LLR {bad}")));
    }
    let n = llrs.len() / 2;
    if n == 0 {
        return Ok(Vec::new());
    }

    // outputs[ns][lsb] = 2-bit branch label (A<<1 | B) for the transition
    // from predecessor ((ns << 1) & 0x3f) | lsb into ns.
    let mut labels = [[0u8; 2]; N_STATES];
    for (ns, slot) in labels.iter_mut().enumerate() {
        for (lsb, label) in slot.iter_mut().enumerate() {
            let prev = ((ns << 1) & (N_STATES - 1)) | lsb;
            let reg = (((ns >> 5) as u8) << 6) | prev as u8;
            let (a, b) = branch_output(reg);
            *label = (a << 1) | b;
        }
    }

    let mut metric = [f64::NEG_INFINITY; N_STATES];
    metric[0] = 0.0;
    let mut next = [f64::NEG_INFINITY; N_STATES];
    let mut decisions = vec![0u64; n];

    for (step, pair) in llrs.chunks_exact(2).enumerate() {
        let (la, lb) = (pair[0], pair[1]);
        // Correlation metric: +L for a 0 bit, -L for a 1 bit.
        let bm = [la + lb, la - lb, -la + lb, -la - lb];
        let mut dec = 0u64;
        for ns in 0..N_STATES {
            let p0 = (ns << 1) & (N_STATES - 1);
            let m0 = metric[p0] + bm[labels[ns][0] as usize];
            let m1 = metric[p0 | 1] + bm[labels[ns][1] as usize];
            if m1 > m0 {
                next[ns] = m1;
                dec |= 1 << ns;
            } else {
                next[ns] = m0;
            }
        }
        decisions[step] = dec;
        std::mem::swap(&mut metric, &mut next);
    }

    let mut state = match termination {
        Termination::Zero => 0,
        Termination::Open => {
            metric
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (s, &m)| {
                    if m > best.1 {
                        (s, m)
                    } else {
                        best
                    }
                })
                .0
        }
    };
    let mut out = vec![0u8; n];
    for step in (0..n).rev() {
        out[step] = (state >> 5) as u8;
        let lsb = ((decisions[step] >> state) & 1) as usize;
        state = ((state << 1) & (N_STATES - 1)) | lsb;
    }
    Ok(out)
}

/// Maps hard bits to unit-magnitude LLRs (0 -> +1, 1 -> -1).
pub fn hard_llrs(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Hard-decision decoding: Viterbi on unit LLRs minimizes Hamming distance.
pub fn viterbi_decode_hard(bits: &[u8], termination: Termination) -> Result<Vec<u8>> {
    viterbi_decode(&hard_llrs(bits), termination)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn with_tail(mut bits: Vec<u8>) -> Vec<u8> {
        bits.extend([0; 6]);
        bits
    }

    /// Reference sequence by the recurrence s[n] = s[n-7] ^ s[n-4] on the
    /// raw register contents, independent of the bit-packing above.
    fn lfsr_oracle(seed: u8, n: usize) -> Vec<u8> {
        // register x1..x7, x1 newest
        let mut reg: Vec<u8> = (0..7).map(|i| (seed >> i) & 1).collect();
        let mut out = Vec::new();
        for _ in 0..n {
            let fb = reg[6] ^ reg[3];
            out.push(fb);
            reg.rotate_right(1);
            reg[0] = fb;
        }
        out
    }

    #[test]
    fn scrambler_all_ones_seed_matches_standard_sequence() {
        let expected = "00001110111100101100100100000010001001100010111010110110\
                        00001100110101001110011110110100001010101111101001010001\
                        101110001111111";
        let seq: Vec<u8> = Scrambler::new(0x7f).unwrap().take(127).collect();
        let want: Vec<u8> = expected.bytes().map(|c| c - b'0').collect();
        assert_eq!(seq, want);
    }

    #[test]
    fn scrambler_matches_oracle_and_is_periodic() {
        for seed in 1..128u8 {
            let seq: Vec<u8> = Scrambler::new(seed).unwrap().take(254).collect();
            assert_eq!(seq, lfsr_oracle(seed, 254), "seed {seed}");
            assert_eq!(seq[..127], seq[127..]);
            let zeros = vec![0u8; 254];
            assert_eq!(scramble(&zeros, seed).unwrap(), seq);
        }
    }

    #[test]
    fn zero_seed_rejected() {
        assert!(matches!(
            scramble(&[1, 0], 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Scrambler::new(0x80).is_err());
    }

    #[test]
    fn encoder_impulse_response() {
        // Shift-register oracle: A taps b[n], b[n-2], b[n-3], b[n-5], b[n-6];
        // B taps b[n], b[n-1], b[n-2], b[n-3], b[n-6].
        let input = [1u8, 0, 0, 0, 0, 0, 0];
        let taps_a = [0usize, 2, 3, 5, 6];
        let taps_b = [0usize, 1, 2, 3, 6];
        let mut want = Vec::new();
        for n in 0..input.len() {
            let tap = |d: usize| if n >= d { input[n - d] } else { 0 };
            want.push(taps_a.iter().fold(0, |acc, &d| acc ^ tap(d)));
            want.push(taps_b.iter().fold(0, |acc, &d| acc ^ tap(d)));
        }
        assert_eq!(want, [1, 1, 0, 1, 1, 1, 1, 1, 0, 0, 1, 0, 1, 1]);
        assert_eq!(bcc_encode(&input), want);
    }

    #[test]
    fn encoder_zero_input_and_length() {
        assert_eq!(bcc_encode(&[0; 40]), vec![0; 80]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_bits(&mut rng, 333);
        assert_eq!(bcc_encode(&x).len(), 666);
    }

    #[test]
    fn puncture_lengths() {
        let bits: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
        assert_eq!(puncture(&bits, CodeRate::Half).unwrap(), bits);
        assert_eq!(puncture(&bits, CodeRate::ThreeQuarters).unwrap().len(), 8);
        assert_eq!(
            puncture(&[0u8; 20], CodeRate::FiveSixths).unwrap().len(),
            12
        );
        assert_eq!(puncture(&[0u8; 12], CodeRate::TwoThirds).unwrap().len(), 9);
        assert!(puncture(&[0u8; 14], CodeRate::ThreeQuarters).is_err());
        assert!(depuncture(&[1.0; 5], CodeRate::ThreeQuarters).is_err());
    }

    #[test]
    fn depuncture_positions_on_ramp() {
        let ramp: Vec<f64> = (1..=12).map(f64::from).collect();
        let kept = puncture(&ramp, CodeRate::ThreeQuarters).unwrap();
        // pattern keeps A0 B0 A1 B2 of each A0 B0 A1 B1 A2 B2 group
        assert_eq!(kept, [1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 9.0, 12.0]);
        let back = depuncture(&kept, CodeRate::ThreeQuarters).unwrap();
        assert_eq!(
            back,
            [1.0, 2.0, 3.0, 0.0, 0.0, 6.0, 7.0, 8.0, 9.0, 0.0, 0.0, 12.0]
        );
        assert_eq!(depuncture(&ramp, CodeRate::Half).unwrap(), ramp);
    }

    #[test]
    fn depuncture_length_is_inverse_of_rate() {
        for (rate, n) in [
            (CodeRate::TwoThirds, 9),
            (CodeRate::ThreeQuarters, 12),
            (CodeRate::FiveSixths, 18),
        ] {
            let out = depuncture(&vec![1.0; n], rate).unwrap();
            assert_eq!(out.len() * rate.denominator(), n * 2 * rate.numerator());
        }
    }

    #[test]
    fn noiseless_round_trip_all_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for rate in [
            CodeRate::Half,
            CodeRate::TwoThirds,
            CodeRate::ThreeQuarters,
            CodeRate::FiveSixths,
        ] {
            for _ in 0..50 {
                // 294 + 6 = 300 info bits: divisible by every puncturing period.
                let x = with_tail(random_bits(&mut rng, 294));
                let tx = puncture(&bcc_encode(&x), rate).unwrap();
                let llr: Vec<f64> = hard_llrs(&tx).iter().map(|v| 8.0 * v).collect();
                let dec =
                    viterbi_decode(&depuncture(&llr, rate).unwrap(), Termination::Zero).unwrap();
                assert_eq!(dec, x);
            }
        }
    }

    #[test]
    fn every_single_flip_is_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = with_tail(random_bits(&mut rng, 1000));
        let llr = hard_llrs(&bcc_encode(&x));
        for pos in 0..llr.len() {
            let mut noisy = llr.clone();
            noisy[pos] = -noisy[pos];
            let dec = viterbi_decode(&noisy, Termination::Zero).unwrap();
            assert_eq!(dec, x, "flip at {pos}");
        }
    }

    #[test]
    fn total_erasure_and_odd_length() {
        let out = viterbi_decode(&[0.0; 40], Termination::Zero).unwrap();
        assert_eq!(out.len(), 20);
        let out = viterbi_decode(&[0.0; 40], Termination::Open).unwrap();
        assert_eq!(out.len(), 20);
        assert!(viterbi_decode(&[1.0; 3], Termination::Zero).is_err());
        assert!(viterbi_decode(&[f64::NAN, 1.0], Termination::Zero).is_err());
        assert!(viterbi_decode(&[], Termination::Zero).unwrap().is_empty());
    }

    #[test]
    fn hard_decoder_matches_brute_force_small_k() {
        let k = 8;
        let codewords: Vec<(Vec<u8>, Vec<u8>)> = (0..1u32 << k)
            .map(|m| {
                let msg = with_tail((0..k).map(|i| ((m >> i) & 1) as u8).collect());
                let cw = bcc_encode(&msg);
                (msg, cw)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (_, cw) in &codewords {
            let mut rx = cw.clone();
            for _ in 0..rng.random_range(0..6) {
                let p = rng.random_range(0..rx.len());
                rx[p] ^= 1;
            }
            let dist = |c: &[u8]| c.iter().zip(&rx).filter(|(a, b)| a != b).count();
            let best = codewords.iter().map(|(_, c)| dist(c)).min().unwrap();
            let dec = viterbi_decode_hard(&rx, Termination::Zero).unwrap();
            assert_eq!(dist(&bcc_encode(&dec)), best);
            assert!(dec[k..].iter().all(|&b| b == 0));
        }
    }

    proptest! {
        #[test]
        fn scramble_is_an_involution(bits in prop::collection::vec(0u8..2, 1..400), seed in 1u8..128) {
            let once = scramble(&bits, seed).unwrap();
            prop_assert_eq!(scramble(&once, seed).unwrap(), bits);
        }

        #[test]
        fn encoder_is_linear(a in prop::collection::vec(0u8..2, 64), b in prop::collection::vec(0u8..2, 64)) {
            let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let lhs = bcc_encode(&ab);
            let rhs: Vec<u8> = bcc_encode(&a).iter().zip(bcc_encode(&b)).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn decoder_invariant_under_positive_scaling(
            seed in any::<u64>(),
            scale in 0.01f64..1000.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = with_tail(random_bits(&mut rng, 60));
            let llr: Vec<f64> = hard_llrs(&bcc_encode(&x))
                .iter()
                .map(|v| v + rng.random_range(-1.5..1.5))
                .collect();
            let scaled: Vec<f64> = llr.iter().map(|v| v * scale).collect();
            prop_assert_eq!(
                viterbi_decode(&llr, Termination::Zero).unwrap(),
                viterbi_decode(&scaled, Termination::Zero).unwrap()
            );
        }
    }
}
