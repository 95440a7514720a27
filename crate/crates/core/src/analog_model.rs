//! Breakpoint log-distance path loss and the O-QPSK bit error model of the
//! 2.4 GHz PHY.

use libm::{exp, log10, pow};

use crate::{Error, Result};

/// Radio settings shared by every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    /// Minimum received power that disturbs an ongoing reception.
    pub disturb_threshold_dbm: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_power_dbm", self.noise_power_dbm),
            ("disturb_threshold_dbm", self.disturb_threshold_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam { field, reason: alloc::format!("{v} is not finite") });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQuality {
    pub rx_power_dbm: f64,
    pub snr_linear: f64,
    pub ber: f64,
}

/// Distance at which the path loss model switches slope.
pub const BREAKPOINT_M: f64 = 8.0;

fn check_distance(distance_m: f64) -> Result<()> {
    if distance_m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field: "distance_m",
            reason: alloc::format!("{distance_m} is not a positive distance"),
        })
    }
}

/// Received power in dBm at `distance_m` meters. Distances of exactly 8 m use
/// the near-field branch, which leaves a 0.24 dB step at the breakpoint.
pub fn received_power(r: &RadioParams, distance_m: f64) -> Result<f64> {
    check_distance(distance_m)?;
    let loss = if distance_m > BREAKPOINT_M {
        58.5 + 33.0 * log10(distance_m / BREAKPOINT_M)
    } else {
        40.2 + 20.0 * log10(distance_m)
    };
    Ok(r.tx_power_dbm - loss)
}

pub fn snr_linear(rx_power_dbm: f64, noise_power_dbm: f64) -> f64 {
    pow(10.0, (rx_power_dbm - noise_power_dbm) / 10.0)
}

const BINOM_16: [f64; 17] = [
    1.0, 16.0, 120.0, 560.0, 1820.0, 4368.0, 8008.0, 11440.0, 12870.0, 11440.0, 8008.0, 4368.0,
    1820.0, 560.0, 120.0, 16.0, 1.0,
];

/// Bit error rate of the O-QPSK DSSS PHY at linear SNR `snr_linear`.
///
/// Alternating 16-term series; the result is clamped to `[0, 1]` because the
/// cancellation at high SNR can leave tiny negative values.
pub fn bit_error_rate(snr_linear: f64) -> Result<f64> {
    if snr_linear.is_nan() || snr_linear < 0.0 {
        return Err(Error::InvalidParam {
            field: "snr_linear",
            reason: alloc::format!("{snr_linear} is negative"),
        });
    }
    let mut sum = 0.0;
    for (k, &c) in BINOM_16.iter().enumerate().skip(2) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * c * exp(20.0 * snr_linear * (1.0 / k as f64 - 1.0));
    }
    Ok((8.0 / 15.0 / 16.0 * sum).clamp(0.0, 1.0))
}

/// Probability that at least one of `8 * bytes` bits is corrupted.
pub fn packet_error_rate(ber: f64, bytes: u32) -> f64 {
    1.0 - pow(1.0 - ber, 8.0 * f64::from(bytes))
}

/// Whether a transmitter at `distance_m` disturbs a reception.
pub fn in_range(r: &RadioParams, distance_m: f64) -> Result<bool> {
    Ok(received_power(r, distance_m)? > r.disturb_threshold_dbm)
}

pub fn link_quality(r: &RadioParams, distance_m: f64) -> Result<LinkQuality> {
    let rx_power_dbm = received_power(r, distance_m)?;
    let snr = snr_linear(rx_power_dbm, r.noise_power_dbm);
    Ok(LinkQuality { rx_power_dbm, snr_linear: snr, ber: bit_error_rate(snr)? })
}
