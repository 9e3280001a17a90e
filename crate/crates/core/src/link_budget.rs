//! SINR, the Shannon decoding condition, and the number of resource units a
//! transmission needs to meet a reliability target.
//!
//! A packet of `ell` bits spread over `k` RUs is decoded when
//! `log2(1 + SINR) >= ell / (k q)` with `q = B tau` bits per RU per unit of
//! spectral efficiency. Sizing `k` so that this holds with probability
//! `rho` reduces to evaluating the SINR at the `1 - rho` quantile of the
//! fading power.

use crate::channel_model::QuantileSource;
use crate::error::{Error, Result};

/// Physical layer constants shared by every link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    /// Linear transmit SNR `P_T / N_0`.
    pub gamma_t: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Packet size in bits.
    pub ell: u32,
    /// Channel bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Slot duration in seconds.
    pub slot_s: f64,
}

impl LinkParams {
    pub fn new(
        gamma_t_db: f64,
        alpha: f64,
        ell: u32,
        bandwidth_hz: f64,
        slot_s: f64,
    ) -> Result<Self> {
        if !gamma_t_db.is_finite() {
            return Err(Error::param("gamma_T_db", "must be finite"));
        }
        if !(alpha > 0.0) {
            return Err(Error::param(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        if ell == 0 {
            return Err(Error::param("ell", "packet size must be positive"));
        }
        if !(bandwidth_hz > 0.0) || !(slot_s > 0.0) {
            return Err(Error::param(
                "B/tau",
                "bandwidth and slot duration must be positive",
            ));
        }
        Ok(Self {
            gamma_t: db_to_linear(gamma_t_db),
            alpha,
            ell,
            bandwidth_hz,
            slot_s,
        })
    }

    /// 100 dB, alpha = 3, 100-bit packets, 180 kHz channels, 0.144 ms slots.
    pub fn reference() -> Self {
        Self::new(100.0, 3.0, 100, 180e3, 0.144e-3).expect("reference parameters are valid")
    }

    /// Bits per RU per bit/s/Hz: `B tau`.
    pub fn q(&self) -> f64 {
        self.bandwidth_hz * self.slot_s
    }

    /// Mean received SNR over interference, `Gamma_T d^-alpha / Lambda`.
    fn gain(&self, distance: f64, lambda_c: f64) -> f64 {
        self.gamma_t / (lambda_c * distance.powf(self.alpha))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-channel equivalent interference coefficients `Lambda_c = 1 + Y_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelInterference {
    lambda: Vec<f64>,
}

impl ChannelInterference {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some(bad) = lambda.iter().find(|l| !(**l >= 1.0) || l.is_infinite()) {
            return Err(Error::param(
                "lambda",
                format!("coefficients must be >= 1, got {bad}"),
            ));
        }
        Ok(Self { lambda })
    }

    /// No residual interference on any of `channels` channels.
    pub fn clean(channels: usize) -> Self {
        Self {
            lambda: vec![1.0; channels],
        }
    }

    pub fn get(&self, channel: usize) -> f64 {
        self.lambda[channel]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

fn check_link(distance: f64, lambda_c: f64) -> Result<()> {
    if !(distance > 0.0) || distance.is_infinite() {
        return Err(Error::param(
            "distance",
            format!("must be positive, got {distance}"),
        ));
    }
    if !(lambda_c >= 1.0) {
        return Err(Error::param(
            "lambda_c",
            format!("must be >= 1, got {lambda_c}"),
        ));
    }
    Ok(())
}

pub fn sinr(distance: f64, lambda_c: f64, h2: f64, lp: &LinkParams) -> Result<f64> {
    check_link(distance, lambda_c)?;
    if !(h2 >= 0.0) {
        return Err(Error::param(
            "h2",
            format!("must be non-negative, got {h2}"),
        ));
    }
    Ok(lp.gain(distance, lambda_c) * h2)
}

/// Shannon condition for a packet spread over `k` RUs.
pub fn decode_success(
    distance: f64,
    lambda_c: f64,
    h2: f64,
    k: u32,
    lp: &LinkParams,
) -> Result<bool> {
    if k < 1 {
        return Err(Error::param("k", "at least one RU is required"));
    }
    let snr = sinr(distance, lambda_c, h2, lp)?;
    Ok(snr.ln_1p() / std::f64::consts::LN_2 >= f64::from(lp.ell) / (f64::from(k) * lp.q()))
}

/// Unrounded RU requirement for a link whose fading power is guaranteed to
/// exceed `power_quantile` with the target probability.
pub fn rus_real(distance: f64, lambda_c: f64, power_quantile: f64, lp: &LinkParams) -> f64 {
    let efficiency =
        (lp.gain(distance, lambda_c) * power_quantile).ln_1p() / std::f64::consts::LN_2;
    f64::from(lp.ell) / lp.q() / efficiency
}

fn ceil_rus(real: f64) -> u32 {
    if real >= f64::from(u32::MAX) {
        u32::MAX
    } else {
        (real.ceil() as u32).max(1)
    }
}

/// RUs needed with no CSI: the fading power is a unit exponential whose
/// `1 - rho` quantile is `-ln(rho)`.
pub fn required_rus_no_csi(distance: f64, lambda_c: f64, rho: f64, lp: &LinkParams) -> Result<u32> {
    check_link(distance, lambda_c)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param(
            "rho",
            format!("must lie in (0, 1), got {rho}"),
        ));
    }
    Ok(ceil_rus(rus_real(distance, lambda_c, -rho.ln(), lp)))
}

/// Unrounded requirement with CSI of age `age` and measured power `z`.
pub fn required_rus_with_csi_real(
    distance: f64,
    lambda_c: f64,
    age: u32,
    z: f64,
    lp: &LinkParams,
    quantiles: &dyn QuantileSource,
) -> Result<f64> {
    check_link(distance, lambda_c)?;
    if age < 1 {
        return Err(Error::param("age_t", "CSI age must be at least one cycle"));
    }
    if !(z >= 0.0) {
        return Err(Error::param("z", format!("must be non-negative, got {z}")));
    }
    let x = quantiles.quantile(age, z)?;
    Ok(rus_real(distance, lambda_c, x, lp))
}

/// RUs needed when the fading power measured `age` cycles before use was
/// `z`. The reliability target is the one the quantile source was built for.
pub fn required_rus_with_csi(
    distance: f64,
    lambda_c: f64,
    age: u32,
    z: f64,
    lp: &LinkParams,
    quantiles: &dyn QuantileSource,
) -> Result<u32> {
    required_rus_with_csi_real(distance, lambda_c, age, z, lp, quantiles).map(ceil_rus)
}

/// Link constants, per-channel interference and a quantile source: all a
/// caller needs to size a device's allocation on any channel.
#[derive(Clone, Copy)]
pub struct LinkContext<'a> {
    pub link: &'a LinkParams,
    pub interference: &'a ChannelInterference,
    pub quantiles: &'a dyn QuantileSource,
}

impl LinkContext<'_> {
    pub fn channels(&self) -> usize {
        self.interference.len()
    }

    /// RUs for a device at `distance` on `channel`, given CSI `(age, z)` or
    /// none.
    pub fn required(&self, distance: f64, channel: usize, csi: Option<(u32, f64)>) -> Result<u32> {
        let lambda = self.interference.get(channel);
        match csi {
            Some((age, z)) => {
                required_rus_with_csi(distance, lambda, age, z, self.link, self.quantiles)
            }
            None => required_rus_no_csi(distance, lambda, self.quantiles.rho(), self.link),
        }
    }
}
