use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams drawn from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Domain {
    Payload = 1,
    Scrambler = 2,
    Channel = 3,
    Noise = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(master: u64, domain: Domain, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ (domain as u64).rotate_left(56)) ^ index)
}

pub(crate) fn stream(master: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, index))
}

/// Sub-stream of a per-frame stream, e.g. one OFDM symbol's noise.
pub(crate) fn substream(master: u64, domain: Domain, index: u64, sub: u64) -> ChaCha8Rng {
    let mut rng = stream(master, domain, index);
    rng.set_stream(sub);
    rng
}
