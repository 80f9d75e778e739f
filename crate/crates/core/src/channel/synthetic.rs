//! Parametric in-vivo channel: log-distance path loss, exponential
//! power-delay profile, Rician LOS component and Kronecker spatial correlation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::response::{ChannelResponse, Provenance};
use crate::error::{Error, Result};
use crate::phy::{Numerology, SUBCARRIER_SPACING_HZ};
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    /// Mean power gain at `reference_distance_m`, in dB.
    pub path_gain_db: f64,
    pub reference_distance_m: f64,
    pub path_loss_exponent: f64,
    pub distance_m: f64,
    /// Ratio of LOS to scattered power (linear).
    pub rician_k: f64,
    /// Correlation coefficient between neighbouring antennas, applied at both ends.
    pub correlation: f64,
    pub n_taps: usize,
    /// Decay constant of the exponential power-delay profile.
    pub rms_delay_spread_s: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            path_gain_db: -70.0,
            reference_distance_m: 0.07,
            path_loss_exponent: 4.0,
            distance_m: 0.1,
            rician_k: 0.0,
            correlation: 0.3,
            n_taps: 3,
            rms_delay_spread_s: 20e-9,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(msg.to_string()));
        if !(self.path_loss_exponent > 0.0) {
            return bad("path loss exponent must be > 0");
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad("antenna correlation must satisfy 0 <= rho < 1");
        }
        if !(self.rician_k >= 0.0) {
            return bad("Rician K must be >= 0");
        }
        if self.n_taps == 0 {
            return bad("at least one tap is required");
        }
        if !(self.distance_m > 0.0) || !(self.reference_distance_m > 0.0) {
            return bad("distances must be > 0");
        }
        if !(self.rms_delay_spread_s >= 0.0) || !self.path_gain_db.is_finite() {
            return bad("delay spread must be >= 0 and path gain finite");
        }
        Ok(())
    }

    /// `G0 - 10 n log10(d / d0)` in dB.
    pub fn mean_gain_db(&self) -> f64 {
        self.path_gain_db
            - 10.0 * self.path_loss_exponent * (self.distance_m / self.reference_distance_m).log10()
    }

    pub fn mean_gain(&self) -> f64 {
        10f64.powf(self.mean_gain_db() / 10.0)
    }

    /// Normalized tap powers at multiples of the sample period.
    pub fn tap_powers(&self, sample_period_s: f64) -> Vec<f64> {
        let mut p: Vec<f64> = (0..self.n_taps)
            .map(|l| {
                if self.rms_delay_spread_s == 0.0 {
                    if l == 0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (-(l as f64) * sample_period_s / self.rms_delay_spread_s).exp()
                }
            })
            .collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }
}

/// Symmetric square root of the exponential correlation matrix `R[i][j] = rho^|i-j|`.
fn correlation_sqrt(n: usize, rho: f64) -> DMatrix<Complex> {
    let r = DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let eig = r.symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    root.map(|v| Complex::new(v, 0.0))
}

fn cn01(rng: &mut ChaCha8Rng) -> Complex {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one frequency response. Deterministic for a given `seed`.
///
/// `H(f_k) = sqrt(G(d)) [ sqrt(K/(K+1)) H_los + sqrt(1/(K+1)) sum_l sqrt(p_l) R_rx^1/2 W_l R_tx^1/2 e^{-j 2 pi k df tau_l} ]`
/// with `W_l` i.i.d. CN(0,1) and `H_los` the all-ones matrix.
pub fn synthetic_channel(
    params: &SyntheticParams,
    numerology: &Numerology,
    n_rx: usize,
    n_tx: usize,
    seed: u64,
) -> Result<ChannelResponse> {
    params.validate()?;
    if n_rx == 0 || n_tx == 0 {
        return Err(Error::invalid("antenna counts must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_period = 1.0 / (numerology.bandwidth.mhz() as f64 * 1e6);
    let powers = params.tap_powers(sample_period);
    let r_rx = correlation_sqrt(n_rx, params.correlation);
    let r_tx = correlation_sqrt(n_tx, params.correlation);

    let taps: Vec<DMatrix<Complex>> = powers
        .iter()
        .map(|&p| {
            let w = DMatrix::from_fn(n_rx, n_tx, |_, _| cn01(&mut rng));
            (&r_rx * w * &r_tx) * Complex::new(p.sqrt(), 0.0)
        })
        .collect();

    let k = params.rician_k;
    let (los_amp, scatter_amp) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    let gain = params.mean_gain().sqrt();
    let los = DMatrix::from_element(n_rx, n_tx, Complex::new(los_amp, 0.0));

    let h = numerology
        .used_indices()
        .iter()
        .map(|&sc| {
            let mut m = DMatrix::<Complex>::zeros(n_rx, n_tx);
            for (l, tap) in taps.iter().enumerate() {
                let phase =
                    -2.0 * PI * sc as f64 * SUBCARRIER_SPACING_HZ * l as f64 * sample_period;
                m += tap * Complex::from_polar(1.0, phase);
            }
            (m * Complex::new(scatter_amp, 0.0) + &los) * Complex::new(gain, 0.0)
        })
        .collect();
    ChannelResponse::from_matrices(numerology, h, Provenance::Synthetic { seed })
}
