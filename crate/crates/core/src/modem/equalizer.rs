use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::FrequencyGrid;
use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::Complex;

/// Post-detection SNRs are clamped here so noiseless runs produce finite LLRs.
pub const MAX_POST_SNR: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Zf,
    #[default]
    Mmse,
}

/// Equalizer output: unbiased stream estimates plus their effective SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedGrid {
    pub n_sym: usize,
    pub n_streams: usize,
    pub n_sd: usize,
    /// `(ofdm_symbol, stream, data_subcarrier)` order, as in [`FrequencyGrid`].
    pub estimates: Vec<Complex>,
    pub post_snr: Vec<f64>,
}

impl EqualizedGrid {
    pub fn row(&self, sym: usize, stream: usize) -> (&[Complex], &[f64]) {
        let start = (sym * self.n_streams + stream) * self.n_sd;
        let end = start + self.n_sd;
        (&self.estimates[start..end], &self.post_snr[start..end])
    }
}

/// Linear detector for one subcarrier.
struct Weights {
    w: DMatrix<Complex>,
    post_snr: Vec<f64>,
}

fn clamp_snr(snr: f64) -> f64 {
    if snr.is_nan() {
        0.0
    } else {
        snr.clamp(0.0, MAX_POST_SNR)
    }
}

fn zf_weights(h: &DMatrix<Complex>, noise_var: f64, subcarrier: i32) -> Result<Weights> {
    let hh = h.adjoint();
    let gram = &hh * h;
    let n = gram.nrows();
    let trace: f64 = (0..n).map(|i| gram[(i, i)].re).sum();
    let det = gram.determinant().norm();
    if trace <= 0.0 || det <= 1e-12 * trace.powi(n as i32) {
        return Err(Error::SingularChannel { subcarrier });
    }
    let inv = gram
        .try_inverse()
        .ok_or(Error::SingularChannel { subcarrier })?;
    let post_snr = (0..n)
        .map(|i| clamp_snr(1.0 / (noise_var * inv[(i, i)].re)))
        .collect();
    Ok(Weights {
        w: inv * hh,
        post_snr,
    })
}

fn mmse_weights(h: &DMatrix<Complex>, noise_var: f64) -> Weights {
    let hh = h.adjoint();
    let n = h.ncols();
    let reg = &hh * h + DMatrix::<Complex>::identity(n, n) * Complex::new(noise_var, 0.0);
    // positive definite for noise_var > 0
    let inv = reg
        .try_inverse()
        .expect("regularized Gram matrix is invertible");
    let mut w = inv * hh;
    let gain = &w * h;
    let mut post_snr = Vec::with_capacity(n);
    for i in 0..n {
        let beta = gain[(i, i)].re;
        if beta <= 0.0 {
            w.row_mut(i).fill(Complex::new(0.0, 0.0));
            post_snr.push(0.0);
        } else {
            // unbias the estimate; SINR of the MMSE output is beta / (1 - beta)
            w.row_mut(i).scale_mut(1.0 / beta);
            post_snr.push(clamp_snr(beta / (1.0 - beta).max(0.0)));
        }
    }
    Weights { w, post_snr }
}

/// Per-subcarrier linear detection of `received` through the effective
/// channel `h` (already including transmit amplitude scaling).
///
/// ZF: `(H^H H)^-1 H^H y`. MMSE: `(H^H H + noise_var I)^-1 H^H y`, then
/// unbiased per stream. With `noise_var == 0` MMSE reduces to ZF.
pub fn equalize(
    received: &FrequencyGrid,
    h: &ChannelResponse,
    noise_var: f64,
    method: Detector,
) -> Result<EqualizedGrid> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::invalid(format!(
            "noise variance {noise_var} must be finite and >= 0"
        )));
    }
    if received.n_streams != h.n_rx {
        return Err(Error::invalid(format!(
            "grid has {} receive streams but channel has {} receive antennas",
            received.n_streams, h.n_rx
        )));
    }
    let num = &received.numerology;
    let n_sd = num.n_sd();
    let n_tx = h.n_tx;

    let mut weights = Vec::with_capacity(n_sd);
    for &k in &num.data_indices {
        let hk = h
            .matrix(k)
            .ok_or_else(|| Error::invalid(format!("channel response has no subcarrier {k}")))?;
        let wk = match method {
            Detector::Mmse if noise_var > 0.0 => mmse_weights(hk, noise_var),
            _ => zf_weights(hk, noise_var, k)?,
        };
        weights.push(wk);
    }

    let total = received.n_sym * n_tx * n_sd;
    let mut estimates = vec![Complex::new(0.0, 0.0); total];
    let mut post_snr = vec![0.0; total];
    let mut y = vec![Complex::new(0.0, 0.0); h.n_rx];
    for sym in 0..received.n_sym {
        for (sc, wk) in weights.iter().enumerate() {
            for (r, slot) in y.iter_mut().enumerate() {
                *slot = received.data_row(sym, r)[sc];
            }
            for t in 0..n_tx {
                let est: Complex = (0..h.n_rx).map(|r| wk.w[(t, r)] * y[r]).sum();
                let idx = (sym * n_tx + t) * n_sd + sc;
                estimates[idx] = est;
                post_snr[idx] = wk.post_snr[t];
            }
        }
    }
    Ok(EqualizedGrid {
        n_sym: received.n_sym,
        n_streams: n_tx,
        n_sd,
        estimates,
        post_snr,
    })
}
