//! Protocol, traffic and timing constants.
//!
//! All durations are expressed in time units of one `aUnitBackoffPeriod`
//! (20 symbols of 16 µs on the 2.4 GHz O-QPSK PHY). Fractional durations are
//! kept as `f64` throughout.

use alloc::format;

use crate::{Error, Result};

/// Length of one time unit in seconds (20 symbols x 16 µs).
pub const UNIT_SECONDS: f64 = 20.0 * 16e-6;

/// Symbols per time unit.
pub const SYMBOLS_PER_UNIT: f64 = 20.0;

/// `macAckWaitDuration` in symbols: unit backoff period + turnaround time +
/// SHR duration + 6 octets at 2 symbols per octet.
pub const ACK_WAIT_SYMBOLS: u32 = 20 + 12 + 10 + 6 * 2;

/// Largest backoff exponent accepted, keeps windows well inside `u64`.
const MAX_BACKOFF_EXPONENT: u32 = 30;

/// MAC and PHY parameters of a sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    pub mac_min_be: u32,
    pub mac_max_be: u32,
    /// `macMaxCSMABackoffs`; the first unconditional backoff is not counted.
    pub mac_max_csma_backoffs: u32,
    pub mac_max_frame_retries: u32,
    pub packet_bytes: u32,
    pub ack_bytes: u32,
    pub ifs_symbols: u32,
    pub t_ack_symbols: u32,
}

impl Default for ProtocolParams {
    /// IEEE 802.15.4 defaults with a maximum-size 127 byte frame.
    fn default() -> Self {
        ProtocolParams {
            mac_min_be: 3,
            mac_max_be: 5,
            mac_max_csma_backoffs: 4,
            mac_max_frame_retries: 3,
            packet_bytes: 127,
            ack_bytes: 11,
            ifs_symbols: 40,
            t_ack_symbols: 12,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.mac_min_be > self.mac_max_be {
            return Err(invalid(
                "mac_min_be",
                format!("{} exceeds mac_max_be {}", self.mac_min_be, self.mac_max_be),
            ));
        }
        if self.mac_max_be > MAX_BACKOFF_EXPONENT {
            return Err(invalid(
                "mac_max_be",
                format!("{} exceeds supported maximum {MAX_BACKOFF_EXPONENT}", self.mac_max_be),
            ));
        }
        if self.ack_bytes == 0 {
            return Err(invalid("ack_bytes", "must be positive".into()));
        }
        if self.packet_bytes < self.ack_bytes {
            return Err(invalid(
                "packet_bytes",
                format!("{} is shorter than an acknowledgement ({} bytes)", self.packet_bytes, self.ack_bytes),
            ));
        }
        Ok(())
    }

    /// Number of backoff stages after which the window stops doubling.
    pub fn window_doublings(&self) -> u32 {
        self.mac_max_be - self.mac_min_be
    }

    /// Initial backoff window `2^macMinBE`.
    pub fn initial_window(&self) -> u64 {
        1u64 << self.mac_min_be
    }

    /// Backoff window of stage `i`; the largest drawn backoff is one less.
    pub fn backoff_window(&self, stage: u32) -> Result<u64> {
        if stage > self.mac_max_csma_backoffs {
            return Err(Error::OutOfRange { what: "backoff stage", value: stage as i64 });
        }
        Ok(self.window_unchecked(stage))
    }

    pub(crate) fn window_unchecked(&self, stage: u32) -> u64 {
        self.initial_window() << stage.min(self.window_doublings())
    }
}

/// Poisson traffic intervals. A disabled direction generates no traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficParams {
    /// Mean interval between packets generated by each client, in seconds.
    pub interval_up: f64,
    /// Mean interval between packets the gateway generates for each client.
    pub interval_down: f64,
    pub up_enabled: bool,
    pub down_enabled: bool,
}

impl TrafficParams {
    pub fn new(interval_up: f64, interval_down: f64) -> Self {
        TrafficParams { interval_up, interval_down, up_enabled: true, down_enabled: true }
    }

    pub fn upstream_only(interval_up: f64) -> Self {
        TrafficParams { interval_up, interval_down: 1.0, up_enabled: true, down_enabled: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.up_enabled && !(self.interval_up > 0.0 && self.interval_up.is_finite()) {
            return Err(invalid("interval_up", format!("{} is not a positive duration", self.interval_up)));
        }
        if self.down_enabled && !(self.interval_down > 0.0 && self.interval_down.is_finite()) {
            return Err(invalid(
                "interval_down",
                format!("{} is not a positive duration", self.interval_down),
            ));
        }
        Ok(())
    }
}

/// Durations and rates derived from [`ProtocolParams`] and [`TrafficParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedTiming {
    pub unit_seconds: f64,
    /// Data frame airtime `L`.
    pub packet_units: f64,
    /// Acknowledgement airtime `L_ack`.
    pub ack_units: f64,
    /// Duration of an acknowledged transmission `L_s`.
    pub success_units: f64,
    /// Duration of a transmission whose acknowledgement never arrives `L_c`.
    pub fail_units: f64,
    pub ack_wait_symbols: u32,
    /// Packets per time unit generated by each client.
    pub rate_up: f64,
    /// Packets per time unit generated by the gateway for all clients together.
    pub rate_down: f64,
}

/// Derives the model durations and generation rates.
pub fn derive_timing(p: &ProtocolParams, t: &TrafficParams, node_count: usize) -> Result<DerivedTiming> {
    p.validate()?;
    t.validate()?;
    if node_count < 2 {
        return Err(invalid("node_count", format!("{node_count} nodes, need a gateway and a client")));
    }
    // 4 bits per symbol: bytes * 2 symbols / 20 symbols per unit.
    let bytes_to_units = |b: u32| f64::from(b) * 2.0 / SYMBOLS_PER_UNIT;
    let packet_units = bytes_to_units(p.packet_bytes);
    let ack_units = bytes_to_units(p.ack_bytes);
    let success_units =
        packet_units + ack_units + f64::from(p.ifs_symbols + p.t_ack_symbols) / SYMBOLS_PER_UNIT;
    let fail_units = packet_units + f64::from(ACK_WAIT_SYMBOLS) / SYMBOLS_PER_UNIT;
    let rate_up = if t.up_enabled { UNIT_SECONDS / t.interval_up } else { 0.0 };
    let rate_down =
        if t.down_enabled { (node_count - 1) as f64 * UNIT_SECONDS / t.interval_down } else { 0.0 };
    Ok(DerivedTiming {
        unit_seconds: UNIT_SECONDS,
        packet_units,
        ack_units,
        success_units,
        fail_units,
        ack_wait_symbols: ACK_WAIT_SYMBOLS,
        rate_up,
        rate_down,
    })
}

/// Backoff window `W_i` of stage `i`.
pub fn backoff_window(p: &ProtocolParams, stage: u32) -> Result<u64> {
    p.backoff_window(stage)
}

fn invalid(field: &'static str, reason: alloc::string::String) -> Error {
    Error::InvalidParam { field, reason }
}
