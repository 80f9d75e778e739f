//! Channel construction (Touchstone or synthetic) and the power/noise model
//! that carries a transmit grid across it.

mod response;
mod synthetic;
pub mod touchstone;

pub use response::{
    interpolate_channel, to_channel_response, ChannelResponse, PortMap, Provenance,
};
pub use synthetic::{synthetic_channel, SyntheticParams};
pub use touchstone::{parse_touchstone, read_touchstone, write_touchstone, SParamNetwork};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modem::FrequencyGrid;
use crate::rng::{self, Domain};
use crate::Complex;

/// SAR-limited transmit power.
pub const DEFAULT_TX_POWER_MW: f64 = 0.412;
/// Thermal noise floor over the signal bandwidth.
pub const DEFAULT_NOISE_DBM: f64 = -101.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// How `tx_power` is shared between spatial streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// `tx_power` is the total over all transmit antennas.
    #[default]
    Total,
    /// Every transmit antenna radiates `tx_power`.
    PerAntenna,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_mw: f64,
    /// Total noise power over the used subcarriers; `-inf` disables noise.
    pub noise_dbm: f64,
    pub power_mode: PowerMode,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_mw: DEFAULT_TX_POWER_MW,
            noise_dbm: DEFAULT_NOISE_DBM,
            power_mode: PowerMode::Total,
        }
    }
}

impl LinkBudget {
    pub fn noiseless(tx_power_mw: f64) -> Self {
        LinkBudget {
            tx_power_mw,
            noise_dbm: f64::NEG_INFINITY,
            power_mode: PowerMode::Total,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_mw > 0.0) || !self.tx_power_mw.is_finite() {
            return Err(Error::invalid(format!(
                "transmit power {} mW must be positive",
                self.tx_power_mw
            )));
        }
        if self.noise_dbm.is_nan() || self.noise_dbm == f64::INFINITY {
            return Err(Error::invalid(format!(
                "noise power {} dBm is invalid",
                self.noise_dbm
            )));
        }
        Ok(())
    }

    pub fn tx_power_w(&self) -> f64 {
        self.tx_power_mw * 1e-3
    }

    pub fn tx_power_dbm(&self) -> f64 {
        watts_to_dbm(self.tx_power_w())
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// Transmit amplitude applied to unit-energy symbols on each used subcarrier.
    pub fn tx_amplitude(&self, n_used: usize, n_streams: usize) -> f64 {
        let per_subcarrier = self.tx_power_w() / n_used as f64;
        match self.power_mode {
            PowerMode::Total => (per_subcarrier / n_streams as f64).sqrt(),
            PowerMode::PerAntenna => per_subcarrier.sqrt(),
        }
    }

    /// Complex noise variance on each used subcarrier of each receive antenna.
    pub fn noise_var(&self, n_used: usize) -> f64 {
        self.noise_power_w() / n_used as f64
    }
}

/// Grid after the channel, with the scaling the receiver needs.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    pub grid: FrequencyGrid,
    pub noise_var: f64,
    /// Amplitude applied to each transmitted symbol; the receiver's effective
    /// channel is `tx_amplitude * H`.
    pub tx_amplitude: f64,
}

/// `y = a H x + n` on every used subcarrier.
///
/// `a = sqrt(P_sc / n_ss)` (total-power mode) with `P_sc = tx_power / n_used`;
/// `n` is circular complex Gaussian with variance `noise_power / n_used`.
/// Noise for OFDM symbol `i` comes from its own sub-stream of `noise_seed`,
/// so draws do not depend on processing order.
pub fn apply_channel(
    grid: &FrequencyGrid,
    chan: &ChannelResponse,
    budget: &LinkBudget,
    noise_seed: u64,
) -> Result<ChannelOutput> {
    budget.validate()?;
    if grid.n_streams != chan.n_tx {
        return Err(Error::invalid(format!(
            "grid has {} streams but channel has {} transmit antennas",
            grid.n_streams, chan.n_tx
        )));
    }
    let num = &grid.numerology;
    let n_used = num.n_used();
    let amp = budget.tx_amplitude(n_used, grid.n_streams);
    let noise_var = budget.noise_var(n_used);
    let sigma = (noise_var / 2.0).sqrt();

    let lookup = |k: i32| {
        chan.matrix(k)
            .ok_or_else(|| Error::invalid(format!("channel response has no subcarrier {k}")))
    };
    let data_h = num
        .data_indices
        .iter()
        .map(|&k| lookup(k))
        .collect::<Result<Vec<_>>>()?;
    let pilot_h = num
        .pilot_indices
        .iter()
        .map(|&k| lookup(k))
        .collect::<Result<Vec<_>>>()?;

    let mut out = FrequencyGrid::zeros(num.clone(), grid.n_sym, chan.n_rx);
    let mut x = vec![Complex::new(0.0, 0.0); chan.n_tx];
    for sym in 0..grid.n_sym {
        let mut noise = rng::substream(noise_seed, Domain::Noise, 0, sym as u64);
        let mut draw = || {
            if sigma == 0.0 {
                Complex::new(0.0, 0.0)
            } else {
                let re: f64 = noise.sample(StandardNormal);
                let im: f64 = noise.sample(StandardNormal);
                Complex::new(re * sigma, im * sigma)
            }
        };
        for (sc, h) in data_h.iter().enumerate() {
            for (t, slot) in x.iter_mut().enumerate() {
                *slot = grid.data_row(sym, t)[sc];
            }
            for r in 0..chan.n_rx {
                let v: Complex = (0..chan.n_tx).map(|t| h[(r, t)] * x[t]).sum();
                out.data_row_mut(sym, r)[sc] = v * amp + draw();
            }
        }
        for (sc, h) in pilot_h.iter().enumerate() {
            for (t, slot) in x.iter_mut().enumerate() {
                *slot = grid.pilot_row(sym, t)[sc];
            }
            for r in 0..chan.n_rx {
                let v: Complex = (0..chan.n_tx).map(|t| h[(r, t)] * x[t]).sum();
                out.pilot_row_mut(sym, r)[sc] = v * amp + draw();
            }
        }
    }
    Ok(ChannelOutput {
        grid: out,
        noise_var,
        tx_amplitude: amp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierBudget {
    pub subcarrier: i32,
    pub freq_hz: f64,
    /// Average over receive antennas.
    pub rx_power_w: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub per_subcarrier: Vec<SubcarrierBudget>,
    /// Received power per receive antenna summed over the band.
    pub rx_power_w: f64,
    pub rx_power_dbm: f64,
    /// `rx_power_dbm - noise_dbm`; `-inf` when nothing is received.
    pub snr_db: f64,
}

/// Receive power and SNR implied by a channel and budget, without simulation.
pub fn link_budget_report(chan: &ChannelResponse, budget: &LinkBudget) -> Result<LinkReport> {
    budget.validate()?;
    let n_used = chan.subcarriers.len();
    let amp = budget.tx_amplitude(n_used, chan.n_tx);
    let noise_sc = budget.noise_var(n_used);
    let per_subcarrier: Vec<SubcarrierBudget> = chan
        .subcarriers
        .iter()
        .zip(&chan.freqs_hz)
        .zip(&chan.h)
        .map(|((&k, &f), h)| {
            let p = amp * amp * h.norm_squared() / chan.n_rx as f64;
            SubcarrierBudget {
                subcarrier: k,
                freq_hz: f,
                rx_power_w: p,
                snr_db: 10.0 * (p / noise_sc).log10(),
            }
        })
        .collect();
    let rx_power_w: f64 = per_subcarrier.iter().map(|s| s.rx_power_w).sum();
    let rx_power_dbm = watts_to_dbm(rx_power_w);
    let snr_db = if rx_power_w == 0.0 {
        f64::NEG_INFINITY
    } else {
        rx_power_dbm - budget.noise_dbm
    };
    Ok(LinkReport {
        per_subcarrier,
        rx_power_w,
        rx_power_dbm,
        snr_db,
    })
}

/// Antenna placement for one of the bundled body-model scenarios.
/// Coordinates are relative to the origin between the in-vivo antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioDescriptor {
    pub id: u8,
    /// Ex-vivo MIMO antennas 1 and 2, `(x, y)` in mm.
    pub mimo_ex_vivo_mm: [(f64, f64); 2],
    /// Ex-vivo SISO antenna x coordinate in mm.
    pub siso_ex_vivo_x_mm: f64,
}

impl ScenarioDescriptor {
    pub const IN_VIVO_PLACEMENT: &'static str = "MIMO in-vivo antennas inside the abdomen, 14 cm \
        either side of the origin along Y; SISO in-vivo antenna at the origin";

    /// Ex-vivo to in-vivo separation used for distance sweeps.
    pub fn distance_mm(&self) -> f64 {
        self.siso_ex_vivo_x_mm
    }

    pub fn get(id: u8) -> Option<&'static ScenarioDescriptor> {
        SCENARIOS.iter().find(|s| s.id == id)
    }
}

pub const SCENARIOS: [ScenarioDescriptor; 3] = [
    ScenarioDescriptor {
        id: 1,
        mimo_ex_vivo_mm: [(130.0, 50.0), (130.0, -50.0)],
        siso_ex_vivo_x_mm: 130.0,
    },
    ScenarioDescriptor {
        id: 2,
        mimo_ex_vivo_mm: [(100.0, 50.0), (100.0, -50.0)],
        siso_ex_vivo_x_mm: 100.0,
    },
    ScenarioDescriptor {
        id: 3,
        mimo_ex_vivo_mm: [(70.0, 30.0), (70.0, -30.0)],
        siso_ex_vivo_x_mm: 70.0,
    },
];
