//! Link-level Monte-Carlo simulation of an HT (802.11n) MIMO-OFDM physical
//! layer over in-vivo channels.
//!
//! The transmit chain runs scrambler, convolutional encoder, puncturer,
//! stream parser, interleaver and constellation mapper, then places symbols on
//! the OFDM grid. Channels come from Touchstone S-parameter exports or from a
//! parametric path-loss model, and are applied per subcarrier with a fixed
//! transmit power and thermal noise floor. The receiver equalizes (ZF/MMSE),
//! demaps to LLRs and Viterbi-decodes.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod coding;
pub mod error;
pub mod harness;
pub mod modem;
pub mod phy;
mod rng;

pub use channel::{
    ChannelResponse, LinkBudget, PortMap, PowerMode, SParamNetwork, ScenarioDescriptor,
    SyntheticParams,
};
pub use error::{Error, Result};
pub use harness::{
    ber_confidence, run_link, sweep_distance, sweep_mcs, ChannelSource, LinkMode, Regeneration,
    SimConfig, SimResult,
};
pub use modem::{Detector, EqualizedGrid, FrequencyGrid};
pub use phy::{
    data_rate, mcs_lookup, num_symbols, Bandwidth, CodeRate, GuardInterval, McsEntry, Modulation,
    Numerology,
};

pub type Complex = num_complex::Complex64;
