//! Monte-Carlo BER/FER engine and sweeps.
//!
//! Every frame draws its payload, scrambler seed, channel realization and
//! noise from streams keyed by `(seed, frame index)`, so counts do not depend
//! on the worker count or scheduling, and a run over frames `[0, a + b)`
//! equals the sum of runs over `[0, a)` and `[a, a + b)`.

mod link;
mod stats;

pub use link::{Coding, Decoding, FrameCodec};
pub use stats::{ber_confidence, Z_95};

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_channel, read_touchstone, synthetic_channel, to_channel_response, ChannelResponse,
    LinkBudget, PortMap, SyntheticParams,
};
use crate::error::{Error, Result};
use crate::modem::{equalize, Detector};
use crate::phy::{
    data_rate, mcs_lookup, Bandwidth, GuardInterval, McsEntry, Numerology, DEFAULT_CARRIER_HZ,
};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Siso,
    Mimo,
}

impl LinkMode {
    pub fn for_streams(n_ss: usize) -> Self {
        if n_ss == 1 {
            LinkMode::Siso
        } else {
            LinkMode::Mimo
        }
    }
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkMode::Siso => "siso",
            LinkMode::Mimo => "mimo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regeneration {
    PerFrame,
    Fixed,
}

/// A Touchstone export recorded at one antenna separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceFile {
    pub distance_mm: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSource {
    /// `10^(gain_db/20) * I` on every subcarrier.
    Identity {
        #[serde(default)]
        gain_db: f64,
    },
    Synthetic(SyntheticParams),
    Touchstone {
        path: PathBuf,
        /// Defaults to the `.sNp` extension.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ports: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        port_map: Option<PortMap>,
        /// Per-distance files for distance sweeps.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        distance_files: Vec<DistanceFile>,
    },
}

impl Default for ChannelSource {
    fn default() -> Self {
        ChannelSource::Synthetic(SyntheticParams::default())
    }
}

impl ChannelSource {
    fn default_regeneration(&self) -> Regeneration {
        match self {
            ChannelSource::Synthetic(_) => Regeneration::PerFrame,
            _ => Regeneration::Fixed,
        }
    }

    /// Resolves relative Touchstone paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        if let ChannelSource::Touchstone {
            path,
            distance_files,
            ..
        } = self
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            for df in distance_files {
                if df.path.is_relative() {
                    df.path = base.join(&df.path);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub mcs: u8,
    pub bandwidth_mhz: Bandwidth,
    pub guard_interval_ns: GuardInterval,
    pub psdu_bytes: usize,
    pub frames: u64,
    /// Index of the first frame; lets a long run be split into pieces.
    pub first_frame: u64,
    pub seed: u64,
    pub detector: Detector,
    pub coding: Coding,
    pub decoding: Decoding,
    pub carrier_hz: f64,
    /// Defaults to per-frame for synthetic channels, fixed otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regeneration: Option<Regeneration>,
    /// Worker threads; 0 uses all cores. Never changes results.
    pub workers: usize,
    pub budget: LinkBudget,
    pub channel: ChannelSource,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mcs: 13,
            bandwidth_mhz: Bandwidth::Mhz20,
            guard_interval_ns: GuardInterval::Long,
            psdu_bytes: 1000,
            frames: 10_000,
            first_frame: 0,
            seed: 1,
            detector: Detector::Mmse,
            coding: Coding::Bcc,
            decoding: Decoding::Soft,
            carrier_hz: DEFAULT_CARRIER_HZ,
            regeneration: None,
            workers: 0,
            budget: LinkBudget::default(),
            channel: ChannelSource::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<McsEntry> {
        if self.frames == 0 {
            return Err(Error::invalid("at least one frame is required"));
        }
        if self.psdu_bytes == 0 {
            return Err(Error::invalid("PSDU must be at least one byte"));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        self.budget.validate()?;
        if let ChannelSource::Synthetic(p) = &self.channel {
            p.validate()?;
        }
        mcs_lookup(self.mcs, self.bandwidth_mhz)
    }

    pub fn regeneration(&self) -> Regeneration {
        self.regeneration
            .unwrap_or_else(|| self.channel.default_regeneration())
    }

    pub fn numerology(&self) -> Numerology {
        Numerology::with_carrier(self.bandwidth_mhz, self.carrier_hz)
    }

    /// Antenna separation implied by the channel source, if any.
    pub fn distance_mm(&self) -> Option<f64> {
        match &self.channel {
            ChannelSource::Synthetic(p) => Some(p.distance_m * 1e3),
            _ => None,
        }
    }
}

/// Aggregated outcome of one simulated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub mode: LinkMode,
    pub mcs: u8,
    pub rate_mbps: f64,
    pub bandwidth_mhz: u32,
    pub gi_ns: u32,
    pub distance_mm: Option<f64>,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub frames_sent: u64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ber_ci_low: f64,
    pub ber_ci_high: f64,
    pub frame_errors: u64,
    pub fer: f64,
    pub seed: u64,
    pub elapsed_s: f64,
    pub config: SimConfig,
}

impl SimResult {
    /// Counts match (timing and echo aside).
    pub fn same_counts(&self, other: &SimResult) -> bool {
        (
            self.frames_sent,
            self.bits_sent,
            self.bit_errors,
            self.frame_errors,
        ) == (
            other.frames_sent,
            other.bits_sent,
            other.bit_errors,
            other.frame_errors,
        )
    }

    /// True when the two BER confidence intervals intersect.
    pub fn ci_overlaps(&self, other: &SimResult) -> bool {
        self.ber_ci_low <= other.ber_ci_high && other.ber_ci_low <= self.ber_ci_high
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    frames: u64,
    bits: u64,
    bit_errors: u64,
    frame_errors: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            frames: self.frames + o.frames,
            bits: self.bits + o.bits,
            bit_errors: self.bit_errors + o.bit_errors,
            frame_errors: self.frame_errors + o.frame_errors,
        }
    }
}

enum ChannelPlan {
    Fixed(ChannelResponse),
    PerFrame {
        params: SyntheticParams,
        numerology: Numerology,
        n: usize,
    },
}

fn resolve_channel(cfg: &SimConfig, numerology: &Numerology, n: usize) -> Result<ChannelPlan> {
    match &cfg.channel {
        ChannelSource::Identity { gain_db } => Ok(ChannelPlan::Fixed(ChannelResponse::identity(
            numerology,
            n,
            10f64.powf(gain_db / 20.0),
        ))),
        ChannelSource::Synthetic(params) => match cfg.regeneration() {
            Regeneration::Fixed => {
                let seed = rng::derive_seed(cfg.seed, Domain::Channel, 0);
                Ok(ChannelPlan::Fixed(synthetic_channel(
                    params, numerology, n, n, seed,
                )?))
            }
            Regeneration::PerFrame => Ok(ChannelPlan::PerFrame {
                params: params.clone(),
                numerology: numerology.clone(),
                n,
            }),
        },
        ChannelSource::Touchstone {
            path,
            ports,
            port_map,
            ..
        } => {
            if cfg.regeneration() == Regeneration::PerFrame {
                return Err(Error::invalid(
                    "Touchstone channels are deterministic; use fixed regeneration",
                ));
            }
            let net = read_touchstone(path, *ports)?;
            let pm = match port_map {
                Some(pm) => pm.clone(),
                None => PortMap::default_for(net.n_ports)?,
            };
            let resp = to_channel_response(&net, &pm, numerology, &path.display().to_string())?;
            if resp.n_rx < n || resp.n_tx < n {
                return Err(Error::invalid(format!(
                    "{}x{} channel cannot carry {n} spatial streams",
                    resp.n_rx, resp.n_tx
                )));
            }
            Ok(ChannelPlan::Fixed(resp.slice(n, n)?))
        }
    }
}

struct FrameContext<'a> {
    cfg: &'a SimConfig,
    codec: FrameCodec,
    plan: ChannelPlan,
}

impl FrameContext<'_> {
    fn run_frame(&self, frame: u64) -> Result<Counts> {
        let cfg = self.cfg;
        let mut payload_rng = rng::stream(cfg.seed, Domain::Payload, frame);
        let payload: Vec<u8> = (0..self.codec.psdu_bits())
            .map(|_| payload_rng.random_range(0..2u8))
            .collect();
        let scrambler_seed = rng::stream(cfg.seed, Domain::Scrambler, frame).random_range(1..128u8);

        let grid = self.codec.encode(&payload, scrambler_seed)?;
        let drawn;
        let chan = match &self.plan {
            ChannelPlan::Fixed(c) => c,
            ChannelPlan::PerFrame {
                params,
                numerology,
                n,
            } => {
                let seed = rng::derive_seed(cfg.seed, Domain::Channel, frame);
                drawn = synthetic_channel(params, numerology, *n, *n, seed)?;
                &drawn
            }
        };
        let noise_seed = rng::derive_seed(cfg.seed, Domain::Noise, frame);
        let rx = apply_channel(&grid, chan, &cfg.budget, noise_seed)?;
        let effective = chan.scaled(rx.tx_amplitude);
        let eq = equalize(&rx.grid, &effective, rx.noise_var, cfg.detector)?;
        let decoded = self.codec.decode(&eq, scrambler_seed)?;

        let errors = decoded.iter().zip(&payload).filter(|(a, b)| a != b).count() as u64;
        Ok(Counts {
            frames: 1,
            bits: payload.len() as u64,
            bit_errors: errors,
            frame_errors: u64::from(errors > 0),
        })
    }
}

/// Simulates `cfg.frames` frames through TX chain, channel and RX chain.
pub fn run_link(cfg: &SimConfig) -> Result<SimResult> {
    let start = Instant::now();
    let entry = cfg.validate()?;
    let numerology = cfg.numerology();
    let codec = FrameCodec::new(
        entry,
        numerology.clone(),
        cfg.psdu_bytes,
        cfg.coding,
        cfg.decoding,
    )?;
    let plan = resolve_channel(cfg, &numerology, entry.n_ss)?;
    let ctx = FrameContext { cfg, codec, plan };

    let frames = cfg.first_frame..cfg.first_frame + cfg.frames;
    let simulate = || {
        frames
            .clone()
            .into_par_iter()
            .map(|f| {
                ctx.run_frame(f).map_err(|e| Error::Frame {
                    frame: f,
                    source: Box::new(e),
                })
            })
            .try_reduce(Counts::default, |a, b| Ok(a + b))
    };
    let counts = if cfg.workers == 0 {
        simulate()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {} workers: {e}", cfg.workers)))?
            .install(simulate)?
    };

    let (ber_ci_low, ber_ci_high) = ber_confidence(counts.bit_errors, counts.bits);
    Ok(SimResult {
        mode: LinkMode::for_streams(entry.n_ss),
        mcs: cfg.mcs,
        rate_mbps: data_rate(&entry, cfg.guard_interval_ns),
        bandwidth_mhz: cfg.bandwidth_mhz.mhz(),
        gi_ns: cfg.guard_interval_ns.ns(),
        distance_mm: cfg.distance_mm(),
        tx_power_dbm: cfg.budget.tx_power_dbm(),
        noise_dbm: cfg.budget.noise_dbm,
        frames_sent: counts.frames,
        bits_sent: counts.bits,
        bit_errors: counts.bit_errors,
        ber: counts.bit_errors as f64 / counts.bits as f64,
        ber_ci_low,
        ber_ci_high,
        frame_errors: counts.frame_errors,
        fer: counts.frame_errors as f64 / counts.frames as f64,
        seed: cfg.seed,
        elapsed_s: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    })
}

/// One row per MCS, in the order given, all sharing the base seed so
/// channel and noise realizations are paired across rows.
pub fn sweep_mcs(base: &SimConfig, mcs_list: &[u8], mode: LinkMode) -> Result<Vec<SimResult>> {
    for &m in mcs_list {
        let allowed = match mode {
            LinkMode::Siso => m <= 7,
            LinkMode::Mimo => (8..=15).contains(&m),
        };
        if !allowed {
            return Err(Error::invalid(format!(
                "MCS {m} does not belong to {mode} mode ({})",
                match mode {
                    LinkMode::Siso => "0..=7",
                    LinkMode::Mimo => "8..=15",
                }
            )));
        }
    }
    mcs_list
        .iter()
        .map(|&m| {
            run_link(&SimConfig {
                mcs: m,
                ..base.clone()
            })
        })
        .collect()
}

/// Configuration for one antenna separation.
pub fn config_at_distance(base: &SimConfig, distance_mm: f64) -> Result<SimConfig> {
    let mut cfg = base.clone();
    match &mut cfg.channel {
        ChannelSource::Synthetic(p) => p.distance_m = distance_mm / 1e3,
        ChannelSource::Touchstone {
            path,
            distance_files,
            ..
        } => {
            let df = distance_files
                .iter()
                .find(|df| (df.distance_mm - distance_mm).abs() < 1e-9)
                .ok_or(Error::MissingDistance { distance_mm })?;
            *path = df.path.clone();
        }
        ChannelSource::Identity { .. } => {
            return Err(Error::invalid(
                "an identity channel has no distance dependence",
            ));
        }
    }
    Ok(cfg)
}

/// One row per `(distance, mcs)`, distance-major.
pub fn sweep_distance(
    base: &SimConfig,
    distances_mm: &[f64],
    mcs_list: &[u8],
) -> Result<Vec<SimResult>> {
    let mut rows = Vec::with_capacity(distances_mm.len() * mcs_list.len());
    for &d in distances_mm {
        let cfg = config_at_distance(base, d)?;
        for &m in mcs_list {
            let mut row = run_link(&SimConfig {
                mcs: m,
                ..cfg.clone()
            })?;
            row.distance_mm = Some(d);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_cfg(mcs: u8, frames: u64) -> SimConfig {
        SimConfig {
            mcs,
            frames,
            psdu_bytes: 100,
            budget: LinkBudget::noiseless(0.412),
            channel: ChannelSource::Identity { gain_db: 0.0 },
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_identity_has_no_errors() {
        for mcs in [0, 7, 8, 15] {
            let r = run_link(&identity_cfg(mcs, 20)).unwrap();
            assert_eq!((r.bit_errors, r.frame_errors), (0, 0));
            assert_eq!(r.bits_sent, 20 * 800);
            assert_eq!(r.ber_ci_low, 0.0);
        }
    }

    #[test]
    fn rate_column_matches_table() {
        let r = run_link(&identity_cfg(13, 1)).unwrap();
        assert_eq!(r.rate_mbps, 104.0);
        assert_eq!(r.mode, LinkMode::Mimo);
    }

    #[test]
    fn invalid_configs() {
        assert!(run_link(&SimConfig {
            frames: 0,
            ..identity_cfg(0, 1)
        })
        .is_err());
        assert!(run_link(&SimConfig {
            mcs: 16,
            ..identity_cfg(0, 1)
        })
        .is_err());
        assert!(sweep_mcs(&identity_cfg(0, 1), &[9], LinkMode::Siso).is_err());
        assert!(sweep_mcs(&identity_cfg(0, 1), &[2], LinkMode::Mimo).is_err());
        assert!(sweep_mcs(&identity_cfg(0, 1), &[], LinkMode::Mimo)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn missing_touchstone_file_propagates() {
        let cfg = SimConfig {
            channel: ChannelSource::Touchstone {
                path: "/nonexistent/body.s4p".into(),
                ports: None,
                port_map: None,
                distance_files: vec![],
            },
            ..identity_cfg(8, 1)
        };
        assert!(matches!(run_link(&cfg), Err(Error::Io { .. })));
        let e = config_at_distance(&cfg, 95.0).unwrap_err();
        assert!(e.to_string().contains("95"));
    }

    #[test]
    fn split_runs_add_up() {
        let base = SimConfig {
            mcs: 12,
            frames: 12,
            psdu_bytes: 200,
            channel: ChannelSource::Synthetic(SyntheticParams {
                distance_m: 0.13,
                ..Default::default()
            }),
            ..Default::default()
        };
        let whole = run_link(&base).unwrap();
        let a = run_link(&SimConfig {
            frames: 5,
            ..base.clone()
        })
        .unwrap();
        let b = run_link(&SimConfig {
            frames: 7,
            first_frame: 5,
            ..base.clone()
        })
        .unwrap();
        assert_eq!(whole.bit_errors, a.bit_errors + b.bit_errors);
        assert_eq!(whole.frame_errors, a.frame_errors + b.frame_errors);
        assert_eq!(whole.bits_sent, a.bits_sent + b.bits_sent);
    }
}
