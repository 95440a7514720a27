//! Offered and forwarded packet rates per link.

use alloc::vec;
use alloc::vec::Vec;

use crate::{DerivedTiming, Error, LinkId, Result, Topology};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkFlow {
    /// Packets per time unit the sender offers to the link.
    pub rate: f64,
    /// Packets per time unit the receiver passes on.
    pub forwarded: f64,
    /// Probability that a packet is pending in a time unit.
    pub p_send: f64,
}

/// Per-link flows, indexed by [`LinkId`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub links: Vec<LinkFlow>,
}

impl FlowState {
    pub fn get(&self, id: LinkId) -> &LinkFlow {
        &self.links[id]
    }
}

/// Poisson probability of at least one pending packet at `rate`.
pub fn pending_probability(rate: f64) -> f64 {
    -libm::expm1(-rate)
}

/// Propagates generated traffic through the routing tree. Upstream links are
/// evaluated leaves first, downstream links gateway first; every hop keeps the
/// fraction `reliability[l]` of what it was offered.
pub fn distribute_traffic(topo: &Topology, timing: &DerivedTiming, reliability: &[f64]) -> Result<FlowState> {
    if reliability.len() != topo.links().len() {
        return Err(Error::InvalidParam {
            field: "reliability",
            reason: alloc::format!("{} values for {} links", reliability.len(), topo.links().len()),
        });
    }
    if let Some(id) = reliability.iter().position(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidParam {
            field: "reliability",
            reason: alloc::format!("link {id} has reliability {}", reliability[id]),
        });
    }
    let tree = topo.tree();
    let mut flows = vec![LinkFlow::default(); topo.links().len()];

    for &v in tree.root_first().iter().rev() {
        let Some(id) = topo.up_link(v) else { continue };
        let inflow: f64 = tree
            .children(v)
            .iter()
            .filter_map(|&c| topo.up_link(c))
            .map(|c| flows[c].forwarded)
            .sum();
        let rate = timing.rate_up + inflow;
        flows[id].rate = rate;
        flows[id].forwarded = rate * reliability[id];
    }

    for &v in tree.root_first() {
        let arriving = match topo.down_link(v) {
            Some(id) => flows[id].forwarded,
            None => timing.rate_down,
        };
        let reachable = tree.descendants(v) as f64;
        for &w in tree.children(v) {
            let Some(id) = topo.down_link(w) else { continue };
            let below = tree.descendants(w) as f64;
            let rate = (1.0 + below) / reachable * arriving;
            flows[id].rate = rate;
            flows[id].forwarded = rate * reliability[id] * below / (1.0 + below);
        }
    }

    for f in &mut flows {
        f.p_send = pending_probability(f.rate);
    }
    Ok(FlowState { links: flows })
}
