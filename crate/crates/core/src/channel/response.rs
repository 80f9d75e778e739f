use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::touchstone::SParamNetwork;
use crate::error::{Error, Result};
use crate::phy::Numerology;
use crate::Complex;

/// Where a channel response came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Touchstone { file: String },
    Synthetic { seed: u64 },
    Identity { amplitude: f64 },
    Flat,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Touchstone { file } => write!(f, "touchstone:{file}"),
            Provenance::Synthetic { seed } => write!(f, "synthetic:{seed}"),
            Provenance::Identity { amplitude } => write!(f, "identity:{amplitude}"),
            Provenance::Flat => f.write_str("flat"),
        }
    }
}

/// Per-subcarrier MIMO channel matrices (`n_rx x n_tx`) over the energized
/// subcarriers of a numerology, in ascending subcarrier order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    pub n_rx: usize,
    pub n_tx: usize,
    pub subcarriers: Vec<i32>,
    pub freqs_hz: Vec<f64>,
    pub h: Vec<DMatrix<Complex>>,
    pub provenance: Provenance,
}

impl ChannelResponse {
    pub fn from_matrices(
        numerology: &Numerology,
        h: Vec<DMatrix<Complex>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let subcarriers = numerology.used_indices();
        if h.len() != subcarriers.len() {
            return Err(Error::invalid(format!(
                "{} matrices for {} subcarriers",
                h.len(),
                subcarriers.len()
            )));
        }
        let (n_rx, n_tx) = h[0].shape();
        if h.iter().any(|m| m.shape() != (n_rx, n_tx)) {
            return Err(Error::invalid("channel matrices have inconsistent shapes"));
        }
        if h.iter()
            .flat_map(|m| m.iter())
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("channel matrix entries must be finite"));
        }
        let freqs_hz = subcarriers
            .iter()
            .map(|&k| numerology.subcarrier_freq(k))
            .collect();
        Ok(ChannelResponse {
            n_rx,
            n_tx,
            subcarriers,
            freqs_hz,
            h,
            provenance,
        })
    }

    /// `amplitude * I` on every subcarrier.
    pub fn identity(numerology: &Numerology, n: usize, amplitude: f64) -> Self {
        let m = DMatrix::<Complex>::identity(n, n) * Complex::new(amplitude, 0.0);
        let h = vec![m; numerology.n_used()];
        Self::from_matrices(numerology, h, Provenance::Identity { amplitude })
            .expect("identity channel is well formed")
    }

    /// The same matrix on every subcarrier.
    pub fn flat(numerology: &Numerology, m: DMatrix<Complex>) -> Self {
        let h = vec![m; numerology.n_used()];
        Self::from_matrices(numerology, h, Provenance::Flat).expect("flat channel is well formed")
    }

    pub fn matrix(&self, subcarrier: i32) -> Option<&DMatrix<Complex>> {
        self.subcarriers
            .binary_search(&subcarrier)
            .ok()
            .map(|i| &self.h[i])
    }

    pub fn scaled(&self, amplitude: f64) -> Self {
        let a = Complex::new(amplitude, 0.0);
        ChannelResponse {
            h: self.h.iter().map(|m| m * a).collect(),
            ..self.clone()
        }
    }

    /// Top-left `n_rx x n_tx` sub-channel (e.g. one antenna pair of a 2x2 link).
    pub fn slice(&self, n_rx: usize, n_tx: usize) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 || n_rx > self.n_rx || n_tx > self.n_tx {
            return Err(Error::invalid(format!(
                "cannot take a {n_rx}x{n_tx} slice of a {}x{} channel",
                self.n_rx, self.n_tx
            )));
        }
        Ok(ChannelResponse {
            n_rx,
            n_tx,
            h: self
                .h
                .iter()
                .map(|m| m.view((0, 0), (n_rx, n_tx)).into_owned())
                .collect(),
            ..self.clone()
        })
    }

    /// Mean of `|H|_F^2 / (n_tx n_rx)` over subcarriers.
    pub fn mean_power_gain(&self) -> f64 {
        let total: f64 = self.h.iter().map(|m| m.norm_squared()).sum();
        total / (self.h.len() * self.n_rx * self.n_tx) as f64
    }
}

/// Which network ports act as transmit and receive antennas (1-based).
/// `H[r][t] = S(rx[r], tx[t])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortMap {
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
}

impl PortMap {
    /// Ports 1..n/2 transmit, the rest receive (4-port: TX 1,2 / RX 3,4;
    /// 2-port: S21).
    pub fn default_for(n_ports: usize) -> Result<Self> {
        if n_ports < 2 || !n_ports.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "no default port map for a {n_ports}-port network"
            )));
        }
        let half = n_ports / 2;
        Ok(PortMap {
            tx: (1..=half).collect(),
            rx: (half + 1..=n_ports).collect(),
        })
    }

    fn validate(&self, n_ports: usize) -> Result<()> {
        if self.tx.is_empty() || self.rx.is_empty() {
            return Err(Error::invalid(
                "port map needs at least one TX and one RX port",
            ));
        }
        if let Some(p) = self
            .tx
            .iter()
            .chain(&self.rx)
            .find(|&&p| p == 0 || p > n_ports)
        {
            return Err(Error::invalid(format!(
                "port {p} does not exist on a {n_ports}-port network"
            )));
        }
        Ok(())
    }
}

/// Interpolates the transmission terms selected by `port_map` onto arbitrary frequencies.
pub fn interpolate_channel(
    net: &SParamNetwork,
    port_map: &PortMap,
    freqs_hz: &[f64],
) -> Result<Vec<DMatrix<Complex>>> {
    port_map.validate(net.n_ports)?;
    freqs_hz
        .iter()
        .map(|&f| {
            let s = net.interpolate(f)?;
            Ok(DMatrix::from_fn(
                port_map.rx.len(),
                port_map.tx.len(),
                |r, t| s[(port_map.rx[r] - 1, port_map.tx[t] - 1)],
            ))
        })
        .collect()
}

pub fn to_channel_response(
    net: &SParamNetwork,
    port_map: &PortMap,
    numerology: &Numerology,
    file_id: &str,
) -> Result<ChannelResponse> {
    let freqs: Vec<f64> = numerology
        .used_indices()
        .iter()
        .map(|&k| numerology.subcarrier_freq(k))
        .collect();
    let h = interpolate_channel(net, port_map, &freqs)?;
    ChannelResponse::from_matrices(
        numerology,
        h,
        Provenance::Touchstone {
            file: file_id.to_string(),
        },
    )
}
