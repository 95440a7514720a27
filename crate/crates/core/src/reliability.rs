//! Link reliability under correlated retransmissions, and path reliability
//! along the routing tree.
//!
//! A link is modeled by an absorbing chain over six states: delivered
//! (`succ`), channel access failure (`cf`), and four transient states `(p, q)`
//! that record whether the previous attempt collided with a hidden (`p`) or a
//! visible (`q`) sender that will retransmit as well.

use alloc::vec;
use alloc::vec::Vec;

use libm::{floor, pow};

use crate::neighborhood::{union, CollisionBreakdown};
use crate::{DerivedTiming, Error, ProtocolParams, Result, Topology};

/// Entries below zero by at most this much are treated as round-off.
pub const ENTRY_TOL: f64 = 1e-12;
/// Largest row-sum defect that is repaired by renormalization.
pub const RENORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetransState {
    Success,
    AccessFailure,
    /// Previous attempt collided with a hidden (`hidden`) and/or a visible
    /// (`visible`) sender that retransmits too.
    Retry { hidden: bool, visible: bool },
}

impl RetransState {
    pub const ALL: [RetransState; 6] = [
        RetransState::Success,
        RetransState::AccessFailure,
        RetransState::Retry { hidden: false, visible: false },
        RetransState::Retry { hidden: true, visible: false },
        RetransState::Retry { hidden: false, visible: true },
        RetransState::Retry { hidden: true, visible: true },
    ];

    pub const START: RetransState = RetransState::Retry { hidden: false, visible: false };

    pub fn index(self) -> usize {
        match self {
            RetransState::Success => 0,
            RetransState::AccessFailure => 1,
            RetransState::Retry { hidden, visible } => 2 + hidden as usize + 2 * visible as usize,
        }
    }

    pub fn name(self) -> &'static str {
        ["succ", "cf", "(0,0)", "(1,0)", "(0,1)", "(1,1)"][self.index()]
    }

    fn is_transient(self) -> bool {
        matches!(self, RetransState::Retry { .. })
    }
}

/// Probabilities that a retransmission collides again with the same sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatedCollision {
    /// Against a hidden sender.
    pub p_bc1: f64,
    /// Against a visible sender.
    pub p_bsc1: f64,
    /// Number of backoff offsets that separate two packets.
    pub omega: f64,
}

pub fn repeated_collision_probs(params: &ProtocolParams, timing: &DerivedTiming) -> Result<RepeatedCollision> {
    params.validate()?;
    let w0 = params.initial_window() as f64;
    let omega = floor((w0 - timing.packet_units - 1.0).max(0.0));
    Ok(RepeatedCollision { p_bc1: 1.0 - (omega + omega * omega) / (w0 * w0), p_bsc1: 1.0 / w0, omega })
}

pub type TransitionMatrix = [[f64; 6]; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetransChain {
    /// Row-stochastic, indexed by [`RetransState::index`].
    pub transitions: TransitionMatrix,
    /// Probability that channel access succeeds within the backoff stages.
    pub b: f64,
    pub repeat: RepeatedCollision,
}

impl RetransChain {
    pub fn get(&self, from: RetransState, to: RetransState) -> f64 {
        self.transitions[from.index()][to.index()]
    }
}

pub fn build_retrans_chain(
    breakdown: &CollisionBreakdown,
    repeat: &RepeatedCollision,
    params: &ProtocolParams,
) -> Result<RetransChain> {
    let fail = pow(breakdown.alpha, f64::from(params.mac_max_csma_backoffs + 1));
    let b = 1.0 - fail;
    let (mh, mv) = (breakdown.mutual_hidden, breakdown.mutual_visible);
    let mutual = union(&[mh, mv]);
    // A mutual disturbance is a loss. The hidden-pair window is longer than
    // the packet collision windows, so the loss probability can fall short
    // of it when the two receivers do not hear each other.
    let lost = breakdown.p_lost_packet.max(mutual);

    let mut t = [[0.0; 6]; 6];
    t[0][0] = 1.0;
    t[1][1] = 1.0;
    for from in RetransState::ALL.into_iter().filter(|s| s.is_transient()) {
        let RetransState::Retry { hidden, visible } = from else { unreachable!() };
        let bc = if hidden { repeat.p_bc1 } else { 0.0 };
        let bsc = if visible { repeat.p_bsc1 } else { 0.0 };
        let row = &mut t[from.index()];
        row[1] = fail;
        row[0] = b * (1.0 - union(&[lost, bc, bsc]));
        row[2] = b * (lost - mutual) * (1.0 - union(&[bc, bsc]));
        row[3] = b * union(&[mh, bc]) * (1.0 - union(&[mv, bsc]));
        row[4] = b * (1.0 - union(&[mh, bc])) * union(&[mv, bsc]);
        row[5] = b * union(&[mh, bc]) * union(&[mv, bsc]);

        for (to, v) in row.iter_mut().enumerate() {
            if !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(v) {
                return Err(Error::ModelInconsistency {
                    from: from.name(),
                    to: RetransState::ALL[to].name(),
                    value: *v,
                });
            }
            *v = v.clamp(0.0, 1.0);
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::RowSum { row: from.index(), sum });
        }
        if sum != 1.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    Ok(RetransChain { transitions: t, b, repeat: *repeat })
}

fn multiply(a: &TransitionMatrix, b: &TransitionMatrix) -> TransitionMatrix {
    let mut out = [[0.0; 6]; 6];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..6).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Probability of reaching `succ` from the first attempt within `n + 1`
/// attempts, read off the `(n + 1)`-th matrix power.
pub fn link_reliability(chain: &RetransChain, n: u32) -> f64 {
    let mut power = chain.transitions;
    for _ in 0..n {
        power = multiply(&power, &chain.transitions);
    }
    // Summation round-off can leave the entry an ulp above one.
    power[RetransState::START.index()][RetransState::Success.index()].clamp(0.0, 1.0)
}

/// [`link_reliability`] by summing the probability of every attempt sequence
/// that ends in `succ`.
pub fn link_reliability_by_paths(chain: &RetransChain, n: u32) -> f64 {
    fn walk(t: &TransitionMatrix, from: usize, steps_left: u32) -> f64 {
        let mut total = t[from][RetransState::Success.index()];
        if steps_left > 1 {
            for next in RetransState::ALL.into_iter().filter(|s| s.is_transient()).map(RetransState::index) {
                if t[from][next] != 0.0 {
                    total += t[from][next] * walk(t, next, steps_left - 1);
                }
            }
        }
        total
    }
    walk(&chain.transitions, RetransState::START.index(), n + 1)
}

/// End-to-end delivery probabilities between each node and the gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReliability {
    pub r_up: Vec<f64>,
    pub r_down: Vec<f64>,
}

pub fn path_reliabilities(topo: &Topology, link_r: &[f64]) -> Result<PathReliability> {
    if link_r.len() != topo.links().len() {
        return Err(Error::InvalidParam {
            field: "link_r",
            reason: alloc::format!("{} values for {} links", link_r.len(), topo.links().len()),
        });
    }
    let tree = topo.tree();
    let mut r_up = vec![1.0; topo.node_count()];
    let mut r_down = vec![1.0; topo.node_count()];
    for &v in tree.root_first() {
        if let (Some(parent), Some(up), Some(down)) = (tree.parent(v), topo.up_link(v), topo.down_link(v)) {
            r_up[v] = r_up[parent] * link_r[up];
            r_down[v] = r_down[parent] * link_r[down];
        }
    }
    Ok(PathReliability { r_up, r_down })
}
