//! Markov chain of the unslotted CSMA/CA procedure of a single sender.
//!
//! States are `idle`, the backoff states `(i, k, j)` (stage `i`, remaining
//! backoff `k`, retransmission `j`), and the transmission states of a
//! successful (`-1`) or failed (`-2`) attempt. The stationary distribution has
//! a closed form, implemented in [`closed_form`]; [`build_chain_oracle`] builds
//! the explicit chain and solves it numerically for cross-checking.

use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, round};

use crate::linalg::{self, Matrix};
use crate::model_config::{DerivedTiming, ProtocolParams};
use crate::{Error, Result};

/// `|1 - x|` below which [`geometric_sum`] returns the limit value `n`.
pub const GEOMETRIC_LIMIT_EPS: f64 = 1e-9;

/// Tolerance on transition-matrix row sums of the explicit chain.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Partial geometric sum `sum_{i=0}^{n-1} x^i`.
pub fn geometric_sum(x: f64, n: i64) -> Result<f64> {
    if n < 0 {
        return Err(Error::OutOfRange { what: "geometric sum length", value: n });
    }
    Ok(geo(x, n as u32))
}

fn geo(x: f64, n: u32) -> f64 {
    if (1.0 - x).abs() > GEOMETRIC_LIMIT_EPS {
        (1.0 - libm::pow(x, f64::from(n))) / (1.0 - x)
    } else {
        f64::from(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainInputs {
    /// Probability that the channel is sensed busy.
    pub alpha: f64,
    /// Probability that no acknowledgement arrives.
    pub p_noack: f64,
    /// Probability that a packet becomes pending within a time unit.
    pub p_send: f64,
    pub success_units: f64,
    pub fail_units: f64,
    pub params: ProtocolParams,
}

impl ChainInputs {
    pub fn new(alpha: f64, p_noack: f64, p_send: f64, params: &ProtocolParams, timing: &DerivedTiming) -> Self {
        ChainInputs {
            alpha,
            p_noack,
            p_send,
            success_units: timing.success_units,
            fail_units: timing.fail_units,
            params: *params,
        }
    }

    /// The same inputs with transmission durations rounded to whole time
    /// units, as the explicit chain needs them.
    pub fn with_integer_durations(&self) -> Self {
        ChainInputs { success_units: round(self.success_units), fail_units: round(self.fail_units), ..*self }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (field, v) in [("alpha", self.alpha), ("p_noack", self.p_noack), ("p_send", self.p_send)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam { field, reason: alloc::format!("{v} is not a probability") });
            }
        }
        for (field, v) in [("success_units", self.success_units), ("fail_units", self.fail_units)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam { field, reason: alloc::format!("{v} is not a positive duration") });
            }
        }
        Ok(())
    }

    fn busy_all_stages(&self) -> f64 {
        pow(self.alpha, f64::from(self.params.mac_max_csma_backoffs + 1))
    }

    /// `y = P_noack (1 - alpha^(m+1))`, the probability that an attempt ends
    /// in a retransmission.
    pub fn retry_probability(&self) -> f64 {
        self.p_noack * (1.0 - self.busy_all_stages())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOutputs {
    pub y: f64,
    /// Probability of the first sensing state `(0, 0, 0)`.
    pub b000: f64,
    /// Probability of being in any sensing state `(i, 0, j)`.
    pub tau: f64,
    pub idle: f64,
}

/// Closed-form stationary quantities of the chain. A sender without traffic
/// (`p_send == 0`) is reported idle with `tau = 0`.
pub fn closed_form(inputs: &ChainInputs) -> Result<ChainOutputs> {
    inputs.validate()?;
    let y = inputs.retry_probability();
    if inputs.p_send <= 0.0 {
        return Ok(ChainOutputs { y, b000: 0.0, tau: 0.0, idle: 1.0 });
    }
    let p = &inputs.params;
    let a = inputs.alpha;
    let m = p.mac_max_csma_backoffs;
    let n = p.mac_max_frame_retries;
    let doublings = p.window_doublings();
    let w0 = p.initial_window() as f64;
    let busy = inputs.busy_all_stages();
    let attempts = geo(y, n + 1);

    let growing = m.min(doublings) + 1;
    let capped = (pow(2.0, f64::from(p.mac_max_be)) + 1.0)
        * pow(a, f64::from(doublings + 1))
        * geo(a, m.saturating_sub(doublings));
    let backoff = 0.5 * (w0 * geo(2.0 * a, growing) + geo(a, growing) + capped) * attempts;
    let transmitting = (1.0 - busy)
        * attempts
        * (inputs.success_units * (1.0 - inputs.p_noack) + inputs.fail_units * inputs.p_noack);
    let idle_per_b000 = (pow(y, f64::from(n + 1))
        + attempts * (busy + (1.0 - inputs.p_noack) * (1.0 - busy)))
        / inputs.p_send;

    let b000 = 1.0 / (backoff + transmitting + idle_per_b000);
    Ok(ChainOutputs { y, b000, tau: b000 * geo(a, m + 1) * attempts, idle: b000 * idle_per_b000 })
}

/// Closed-form probability of backoff state `(stage, counter, attempt)`.
pub fn stationary_probability(inputs: &ChainInputs, stage: u32, counter: u64, attempt: u32) -> Result<f64> {
    let p = &inputs.params;
    if stage > p.mac_max_csma_backoffs {
        return Err(Error::OutOfRange { what: "backoff stage", value: stage as i64 });
    }
    if attempt > p.mac_max_frame_retries {
        return Err(Error::OutOfRange { what: "attempt", value: attempt as i64 });
    }
    let w = p.window_unchecked(stage);
    if counter >= w {
        return Err(Error::OutOfRange { what: "backoff counter", value: counter as i64 });
    }
    let out = closed_form(inputs)?;
    Ok(out.b000
        * pow(out.y, f64::from(attempt))
        * pow(inputs.alpha, f64::from(stage))
        * (w - counter) as f64
        / w as f64)
}

/// Outcome of a transmission in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Collision,
}

/// Closed-form probability of each transmission state of `outcome` during
/// attempt `attempt`; all time steps of a transmission are equally likely.
pub fn transmission_probability(inputs: &ChainInputs, outcome: Outcome, attempt: u32) -> Result<f64> {
    if attempt > inputs.params.mac_max_frame_retries {
        return Err(Error::OutOfRange { what: "attempt", value: attempt as i64 });
    }
    let out = closed_form(inputs)?;
    let share = match outcome {
        Outcome::Success => 1.0 - inputs.p_noack,
        Outcome::Collision => inputs.p_noack,
    };
    Ok(share * out.b000 * pow(out.y, f64::from(attempt)) * (1.0 - inputs.busy_all_stages()))
}

/// Total closed-form probability mass, summed state by state. Equals one for
/// a consistent distribution.
pub fn total_mass(inputs: &ChainInputs) -> Result<f64> {
    let p = &inputs.params;
    let mut total = closed_form(inputs)?.idle;
    for j in 0..=p.mac_max_frame_retries {
        for i in 0..=p.mac_max_csma_backoffs {
            for k in 0..p.window_unchecked(i) {
                total += stationary_probability(inputs, i, k, j)?;
            }
        }
        total += inputs.success_units * transmission_probability(inputs, Outcome::Success, j)?;
        total += inputs.fail_units * transmission_probability(inputs, Outcome::Collision, j)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    Idle,
    Backoff { stage: u32, counter: u64, attempt: u32 },
    Success { elapsed: u32, attempt: u32 },
    Collision { elapsed: u32, attempt: u32 },
}

/// Explicit CSMA/CA chain with its numerically solved stationary vector.
#[derive(Debug, Clone)]
pub struct ChainOracle {
    pub states: Vec<ChainState>,
    pub transitions: Matrix,
    pub stationary: Vec<f64>,
    layout: Layout,
}

#[derive(Debug, Clone)]
struct Layout {
    stage_offset: Vec<usize>,
    backoff_states: usize,
    success_len: u32,
    fail_len: u32,
}

impl Layout {
    fn block(&self) -> usize {
        self.backoff_states + (self.success_len + self.fail_len) as usize
    }

    fn index(&self, s: ChainState) -> usize {
        match s {
            ChainState::Idle => 0,
            ChainState::Backoff { stage, counter, attempt } => {
                1 + attempt as usize * self.block() + self.stage_offset[stage as usize] + counter as usize
            }
            ChainState::Success { elapsed, attempt } => {
                1 + attempt as usize * self.block() + self.backoff_states + elapsed as usize
            }
            ChainState::Collision { elapsed, attempt } => {
                1 + attempt as usize * self.block()
                    + self.backoff_states
                    + self.success_len as usize
                    + elapsed as usize
            }
        }
    }
}

impl ChainOracle {
    pub fn index(&self, s: ChainState) -> usize {
        self.layout.index(s)
    }

    pub fn probability(&self, s: ChainState) -> f64 {
        self.stationary[self.index(s)]
    }

    pub fn idle(&self) -> f64 {
        self.stationary[0]
    }

    pub fn b000(&self) -> f64 {
        self.probability(ChainState::Backoff { stage: 0, counter: 0, attempt: 0 })
    }

    /// Sum of all sensing states `(i, 0, j)`.
    pub fn tau(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.stationary)
            .filter(|(s, _)| matches!(s, ChainState::Backoff { counter: 0, .. }))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Enumerates every state of the chain, fills in the transition matrix and
/// solves `pi P = pi`. Transmission durations are rounded to the nearest
/// whole time unit.
pub fn build_chain_oracle(inputs: &ChainInputs) -> Result<ChainOracle> {
    inputs.validate()?;
    let p = &inputs.params;
    let m = p.mac_max_csma_backoffs;
    let n = p.mac_max_frame_retries;
    let success_len = (round(inputs.success_units) as u32).max(1);
    let fail_len = (round(inputs.fail_units) as u32).max(1);

    let mut stage_offset = Vec::with_capacity(m as usize + 1);
    let mut backoff_states = 0usize;
    for i in 0..=m {
        stage_offset.push(backoff_states);
        backoff_states += p.window_unchecked(i) as usize;
    }
    let layout = Layout { stage_offset, backoff_states, success_len, fail_len };

    let mut states = vec![ChainState::Idle];
    for attempt in 0..=n {
        for stage in 0..=m {
            for counter in 0..p.window_unchecked(stage) {
                states.push(ChainState::Backoff { stage, counter, attempt });
            }
        }
        states.extend((0..success_len).map(|elapsed| ChainState::Success { elapsed, attempt }));
        states.extend((0..fail_len).map(|elapsed| ChainState::Collision { elapsed, attempt }));
    }
    debug_assert!(states.iter().enumerate().all(|(i, &s)| layout.index(s) == i));

    let (a, pn, ps) = (inputs.alpha, inputs.p_noack, inputs.p_send);
    let mut t = Matrix::zeros(states.len());
    let enter_stage = |t: &mut Matrix, from: usize, stage: u32, attempt: u32, prob: f64| {
        let w = p.window_unchecked(stage);
        for counter in 0..w {
            t.add(from, layout.index(ChainState::Backoff { stage, counter, attempt }), prob / w as f64);
        }
    };

    t.add(0, 0, 1.0 - ps);
    enter_stage(&mut t, 0, 0, 0, ps);
    for (from, &s) in states.iter().enumerate() {
        match s {
            ChainState::Idle => {}
            ChainState::Backoff { stage, counter, attempt } if counter > 0 => {
                t.add(from, layout.index(ChainState::Backoff { stage, counter: counter - 1, attempt }), 1.0);
            }
            ChainState::Backoff { stage, attempt, .. } => {
                if stage < m {
                    enter_stage(&mut t, from, stage + 1, attempt, a);
                } else {
                    t.add(from, 0, a);
                }
                t.add(from, layout.index(ChainState::Collision { elapsed: 0, attempt }), (1.0 - a) * pn);
                t.add(from, layout.index(ChainState::Success { elapsed: 0, attempt }), (1.0 - a) * (1.0 - pn));
            }
            ChainState::Success { elapsed, attempt } => {
                let to = if elapsed + 1 < success_len {
                    layout.index(ChainState::Success { elapsed: elapsed + 1, attempt })
                } else {
                    0
                };
                t.add(from, to, 1.0);
            }
            ChainState::Collision { elapsed, attempt } => {
                if elapsed + 1 < fail_len {
                    t.add(from, layout.index(ChainState::Collision { elapsed: elapsed + 1, attempt }), 1.0);
                } else if attempt < n {
                    enter_stage(&mut t, from, 0, attempt + 1, 1.0);
                } else {
                    t.add(from, 0, 1.0);
                }
            }
        }
    }

    for row in 0..states.len() {
        let sum: f64 = t.row(row).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSum { row, sum });
        }
    }
    let stationary = linalg::stationary(&t)?;
    Ok(ChainOracle { states, transitions: t, stationary, layout })
}
