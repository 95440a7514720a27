//! Simultaneous-transmission, collision and busy-channel probabilities.
//!
//! Every probability here is computed from a snapshot of the per-link sensing
//! and busy probabilities `(tau, alpha)`. Distinct collision events are
//! treated as independent, so their union is `1 - prod(1 - p_i)`.

use libm::pow;

use crate::topology::{EventSets, Link};
use crate::{DerivedTiming, Error, LinkId, Result};

/// Largest set accepted by [`some_sending_powerset_oracle`].
pub const POWERSET_MAX_LINKS: usize = 20;

/// Sensing and busy probability of one link in the current iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkActivity {
    pub tau: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollisionBreakdown {
    /// Packet collision events c0..c6.
    pub c: [f64; 7],
    /// Acknowledgement collision events a0, a1.
    pub a: [f64; 2],
    pub p_coll_packet: f64,
    pub p_lost_packet: f64,
    pub p_coll_ack: f64,
    pub p_lost_ack: f64,
    pub p_noack: f64,
    pub alpha_pkt: f64,
    pub alpha_ack: f64,
    pub alpha: f64,
    /// Collisions with hidden senders that are disturbed in turn.
    pub mutual_hidden: f64,
    /// Collisions with senders that can sense each other.
    pub mutual_visible: f64,
}

fn lookup(state: &[LinkActivity], id: LinkId) -> Result<LinkActivity> {
    state.get(id).copied().ok_or(Error::UnknownLink(id))
}

/// Probability that at least one link of `links` starts transmitting in a
/// time unit, i.e. senses the channel idle while attempting.
pub fn some_sending(links: &[LinkId], state: &[LinkActivity]) -> Result<f64> {
    let mut quiet = 1.0;
    for &j in links {
        let s = lookup(state, j)?;
        quiet *= s.tau * s.alpha + (1.0 - s.tau);
    }
    Ok(1.0 - quiet)
}

/// [`some_sending`] extended to an interval of `t` time units.
pub fn some_occupy(t: f64, links: &[LinkId], state: &[LinkActivity]) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParam { field: "t", reason: alloc::format!("{t} is not a non-negative interval") });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - pow(1.0 - some_sending(links, state)?, t))
}

/// Sums over every non-empty subset of `links` that attempts in the same time
/// unit, weighting each by the chance that not all of its members defer.
pub fn some_sending_powerset_oracle(links: &[LinkId], state: &[LinkActivity]) -> Result<f64> {
    if links.len() > POWERSET_MAX_LINKS {
        return Err(Error::SetTooLarge { len: links.len(), max: POWERSET_MAX_LINKS });
    }
    let members = links.iter().map(|&j| lookup(state, j)).collect::<Result<alloc::vec::Vec<_>>>()?;
    let mut total = 0.0;
    for mask in 1u32..(1 << members.len()) {
        let (mut weight, mut all_defer) = (1.0, 1.0);
        for (i, s) in members.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight *= s.tau;
                all_defer *= s.alpha;
            } else {
                weight *= 1.0 - s.tau;
            }
        }
        total += weight * (1.0 - all_defer);
    }
    Ok(total)
}

/// Union of independent events.
pub fn union(probs: &[f64]) -> f64 {
    1.0 - probs.iter().fold(1.0, |acc, p| acc * (1.0 - p))
}

/// All collision and busy probabilities of `link`.
pub fn collision_probabilities(
    link: &Link,
    events: &EventSets,
    state: &[LinkActivity],
    timing: &DerivedTiming,
) -> Result<CollisionBreakdown> {
    let l = timing.packet_units;
    let l_ack = timing.ack_units;
    let windows = [2.0, 2.0 * l, 1.0, 2.0, l_ack, l_ack + 1.0, l + l_ack];
    let mut c = [0.0; 7];
    for (i, (set, t)) in events.packet.iter().zip(windows).enumerate() {
        c[i] = some_occupy(t, set, state)?;
    }
    let a = [some_occupy(1.0, &events.ack[0], state)?, some_occupy(l_ack, &events.ack[1], state)?];

    let p_coll_packet = union(&c);
    let p_lost_packet = p_coll_packet + (1.0 - p_coll_packet) * link.per_packet;
    let p_coll_ack = union(&a);
    let p_lost_ack = p_coll_ack + (1.0 - p_coll_ack) * link.per_ack;
    let p_noack = p_lost_packet + (1.0 - p_lost_packet) * p_lost_ack;

    let alpha_pkt = some_occupy(l, &events.busy_packet, state)?;
    let alpha_ack = some_occupy(l_ack, &events.busy_ack, state)?;
    Ok(CollisionBreakdown {
        c,
        a,
        p_coll_packet,
        p_lost_packet,
        p_coll_ack,
        p_lost_ack,
        p_noack,
        alpha_pkt,
        alpha_ack,
        alpha: alpha_pkt + alpha_ack - alpha_pkt * alpha_ack,
        mutual_hidden: some_occupy(2.0 * l + 2.0, &events.mutual_hidden, state)?,
        mutual_visible: some_occupy(2.0, &events.mutual_visible, state)?,
    })
}
