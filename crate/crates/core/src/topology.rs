//! Node graph, routing tree, active links and per-link conflict sets.
//!
//! Everything here is computed once before solving. Link ids are dense:
//! upstream links `(c, parent(c))` come first in ascending client id, then the
//! downstream links `(parent(c), c)` in the same client order.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::analog_model::{self, RadioParams};
use crate::{Error, ProtocolParams, Result};

pub type NodeId = usize;
pub type LinkId = usize;

/// Constant added to every edge weight so that hop count decides among
/// error-free routes.
pub const HOP_PENALTY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: Option<(f64, f64)>,
    pub is_gateway: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
}

/// Error model of a node pair in the candidate graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairQuality {
    pub ber: f64,
    pub per_packet: f64,
    pub per_ack: f64,
}

/// An explicitly specified bidirectional link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitLink {
    pub a: NodeId,
    pub b: NodeId,
    pub ber: f64,
    /// Overrides the packet error rate derived from `ber`.
    pub per_packet: Option<f64>,
    /// Overrides the acknowledgement error rate derived from `ber`.
    pub per_ack: Option<f64>,
}

impl ExplicitLink {
    pub fn new(a: NodeId, b: NodeId, ber: f64) -> Self {
        ExplicitLink { a, b, ber, per_packet: None, per_ack: None }
    }
}

/// All usable node pairs with their error rates plus the interference relation.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    node_count: usize,
    gateway: NodeId,
    positions: Option<Vec<(f64, f64)>>,
    quality: Vec<Option<PairQuality>>,
    in_range: Vec<bool>,
}

fn validate_nodes(nodes: &[Node]) -> Result<NodeId> {
    if nodes.len() < 2 {
        return Err(Error::InvalidParam {
            field: "nodes",
            reason: format!("{} node(s), need a gateway and at least one client", nodes.len()),
        });
    }
    let mut seen = vec![false; nodes.len()];
    for n in nodes {
        if n.id >= nodes.len() || seen[n.id] {
            return Err(Error::InvalidParam {
                field: "nodes",
                reason: format!("node ids must be unique and dense in [0, {}), got {}", nodes.len(), n.id),
            });
        }
        seen[n.id] = true;
    }
    let mut gateways = nodes.iter().filter(|n| n.is_gateway);
    match (gateways.next(), gateways.next()) {
        (Some(g), None) => Ok(g.id),
        _ => Err(Error::InvalidParam { field: "gateway", reason: "exactly one gateway required".into() }),
    }
}

fn check_probability(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, reason: format!("{v} is not a probability") })
    }
}

impl CandidateGraph {
    /// Full pairwise graph from node positions via the analog model. Pairs
    /// with a bit error rate of one are not usable for routing.
    pub fn geometric(nodes: &[Node], radio: &RadioParams, protocol: &ProtocolParams) -> Result<Self> {
        let gateway = validate_nodes(nodes)?;
        radio.validate()?;
        let n = nodes.len();
        let mut positions = vec![(0.0, 0.0); n];
        for node in nodes {
            positions[node.id] = node.position.ok_or_else(|| Error::InvalidParam {
                field: "position",
                reason: format!("node {} has no position", node.id),
            })?;
        }
        let mut quality = vec![None; n * n];
        let mut in_range = vec![false; n * n];
        for v in 0..n {
            for w in 0..n {
                if v == w {
                    continue;
                }
                let (dx, dy) = (positions[v].0 - positions[w].0, positions[v].1 - positions[w].1);
                let d = libm::hypot(dx, dy);
                let q = analog_model::link_quality(radio, d)?;
                in_range[v * n + w] = q.rx_power_dbm > radio.disturb_threshold_dbm;
                if q.ber < 1.0 {
                    quality[v * n + w] = Some(PairQuality {
                        ber: q.ber,
                        per_packet: analog_model::packet_error_rate(q.ber, protocol.packet_bytes),
                        per_ack: analog_model::packet_error_rate(q.ber, protocol.ack_bytes),
                    });
                }
            }
        }
        Ok(CandidateGraph { node_count: n, gateway, positions: Some(positions), quality, in_range })
    }

    /// Graph from an explicit link list. `in_range` holds directed pairs and
    /// must be symmetric.
    pub fn explicit(
        node_count: usize,
        gateway: NodeId,
        links: &[ExplicitLink],
        in_range_pairs: &[(NodeId, NodeId)],
        protocol: &ProtocolParams,
    ) -> Result<Self> {
        let nodes: Vec<Node> = (0..node_count)
            .map(|id| Node { id, position: None, is_gateway: id == gateway })
            .collect();
        validate_nodes(&nodes)?;
        let n = node_count;
        let check_node = |id: NodeId| {
            if id < n {
                Ok(())
            } else {
                Err(Error::OutOfRange { what: "node id", value: id as i64 })
            }
        };
        let mut quality = vec![None; n * n];
        for l in links {
            check_node(l.a)?;
            check_node(l.b)?;
            if l.a == l.b {
                return Err(Error::InvalidParam { field: "links", reason: format!("self-link at node {}", l.a) });
            }
            check_probability("ber", l.ber)?;
            let per_packet = l.per_packet.unwrap_or_else(|| analog_model::packet_error_rate(l.ber, protocol.packet_bytes));
            let per_ack = l.per_ack.unwrap_or_else(|| analog_model::packet_error_rate(l.ber, protocol.ack_bytes));
            check_probability("per_packet", per_packet)?;
            check_probability("per_ack", per_ack)?;
            if quality[l.a * n + l.b].is_some() {
                return Err(Error::DuplicateLink { a: l.a, b: l.b });
            }
            let q = Some(PairQuality { ber: l.ber, per_packet, per_ack });
            quality[l.a * n + l.b] = q;
            quality[l.b * n + l.a] = q;
        }
        let mut in_range = vec![false; n * n];
        for &(a, b) in in_range_pairs {
            check_node(a)?;
            check_node(b)?;
            in_range[a * n + b] = true;
        }
        for a in 0..n {
            for b in 0..n {
                if in_range[a * n + b] && !in_range[b * n + a] {
                    return Err(Error::AsymmetricRange { from: a, to: b });
                }
            }
        }
        Ok(CandidateGraph { node_count: n, gateway, positions: None, quality, in_range })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn gateway(&self) -> NodeId {
        self.gateway
    }

    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    pub fn quality(&self, from: NodeId, to: NodeId) -> Option<PairQuality> {
        self.quality[from * self.node_count + to]
    }

    /// Whether a transmission from `from` disturbs a reception at `to`.
    pub fn in_range(&self, from: NodeId, to: NodeId) -> bool {
        self.in_range[from * self.node_count + to]
    }

    fn weight(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.quality(from, to).filter(|q| q.ber < 1.0).map(|q| -libm::log1p(-q.ber) + HOP_PENALTY)
    }
}

/// Shortest-path tree towards the gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    gateway: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    descendants: Vec<usize>,
    depth: Vec<usize>,
    /// Nodes in breadth-first order from the gateway.
    order: Vec<NodeId>,
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    node: NodeId,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed so the max-heap pops the closest node, smaller id first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RoutingTree {
    /// Dijkstra from the gateway with edge weight `-ln(1 - BER) + 1e-3`.
    /// Equal-cost parents are resolved towards the smaller node id.
    pub fn build(graph: &CandidateGraph) -> Result<Self> {
        let n = graph.node_count;
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[graph.gateway] = 0.0;
        heap.push(Frontier { dist: 0.0, node: graph.gateway });
        while let Some(Frontier { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for v in 0..n {
                if v == u || done[v] {
                    continue;
                }
                // Traffic flows v -> u upstream, so the link quality seen by
                // the child is the one that matters for the tree.
                let Some(w) = graph.weight(v, u) else { continue };
                let cand = d + w;
                let better = cand < dist[v] || (cand == dist[v] && parent[v].is_none_or(|p| u < p));
                if better {
                    dist[v] = cand;
                    parent[v] = Some(u);
                    heap.push(Frontier { dist: cand, node: v });
                }
            }
        }
        let unreachable: Vec<NodeId> = (0..n).filter(|&v| !done[v]).collect();
        if !unreachable.is_empty() {
            return Err(Error::Disconnected { unreachable });
        }
        Ok(Self::from_parents(graph.gateway, parent))
    }

    /// Builds a tree from parent pointers that are already known to reach the
    /// gateway.
    pub fn from_parents(gateway: NodeId, parent: Vec<Option<NodeId>>) -> Self {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(c);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut depth = vec![0; n];
        order.push(gateway);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                order.push(c);
            }
        }
        let mut descendants = vec![0; n];
        for &u in order.iter().rev() {
            if let Some(p) = parent[u] {
                descendants[p] += 1 + descendants[u];
            }
        }
        RoutingTree { gateway, parent, children, descendants, depth, order }
    }

    pub fn gateway(&self) -> NodeId {
        self.gateway
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent[node]
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    /// Number of proper descendants `D_n`.
    pub fn descendants(&self, node: NodeId) -> usize {
        self.descendants[node]
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node]
    }

    /// Gateway first, every node after its parent.
    pub fn root_first(&self) -> &[NodeId] {
        &self.order
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub direction: Direction,
    pub ber: f64,
    /// Error rate of a data frame over this link.
    pub per_packet: f64,
    /// Error rate of an acknowledgement over this link.
    pub per_ack: f64,
}

/// Links whose transmissions can disturb a link `(v1, w1)`, by which endpoint
/// of the other link `(v2, w2)` reaches which endpoint of this one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictSets {
    /// `v2` disturbs `v1`.
    pub ss: Vec<LinkId>,
    /// `v2` disturbs `w1`.
    pub rs: Vec<LinkId>,
    /// `w2` disturbs `v1`.
    pub sr: Vec<LinkId>,
    /// `w2` disturbs `w1`.
    pub rr: Vec<LinkId>,
}

impl ConflictSets {
    pub fn is_empty(&self) -> bool {
        self.ss.is_empty() && self.rs.is_empty() && self.sr.is_empty() && self.rr.is_empty()
    }
}

/// The combinations of conflict sets consumed by the collision events, cached
/// so each solver iteration is linear in the neighbourhood size.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventSets {
    /// Packet collision constellations c0..c6.
    pub packet: [Vec<LinkId>; 7],
    /// Acknowledgement collision constellations a0, a1.
    pub ack: [Vec<LinkId>; 2],
    /// `(RS ∩ SR) \ SS`: hidden senders that disturb each other.
    pub mutual_hidden: Vec<LinkId>,
    /// `RS ∩ SR ∩ SS`: senders that hear each other yet disturb each other.
    pub mutual_visible: Vec<LinkId>,
    /// `SS`, packets sensed at the sender.
    pub busy_packet: Vec<LinkId>,
    /// `SR`, acknowledgements sensed at the sender.
    pub busy_ack: Vec<LinkId>,
}

impl EventSets {
    fn from_membership(members: impl Iterator<Item = (LinkId, [bool; 4])>) -> Self {
        let mut e = EventSets::default();
        for (j, [ss, rs, sr, rr]) in members {
            let packet = [
                rs && ss,
                rs && !ss,
                ss && sr && rr,
                sr && rr && !ss,
                ss && rr && !sr,
                rs && rr && !ss && !sr,
                rr && !ss && !sr && !rs,
            ];
            for (set, hit) in e.packet.iter_mut().zip(packet) {
                if hit {
                    set.push(j);
                }
            }
            if ss && rs {
                e.ack[0].push(j);
            }
            if ss && !rs {
                e.ack[1].push(j);
            }
            if rs && sr && !ss {
                e.mutual_hidden.push(j);
            }
            if rs && sr && ss {
                e.mutual_visible.push(j);
            }
            if ss {
                e.busy_packet.push(j);
            }
            if sr {
                e.busy_ack.push(j);
            }
        }
        e
    }
}

/// Static part of the model: graph, tree, active links and conflict sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    graph: CandidateGraph,
    tree: RoutingTree,
    links: Vec<Link>,
    up_link: Vec<Option<LinkId>>,
    down_link: Vec<Option<LinkId>>,
    conflicts: Vec<ConflictSets>,
    events: Vec<EventSets>,
}

impl Topology {
    /// Routes the graph and precomputes all per-link sets.
    pub fn build(graph: CandidateGraph) -> Result<Self> {
        let tree = RoutingTree::build(&graph)?;
        Self::with_tree(graph, tree)
    }

    /// Uses a given routing tree instead of the shortest-path tree. Every tree
    /// edge must be usable in both directions.
    pub fn with_tree(graph: CandidateGraph, tree: RoutingTree) -> Result<Self> {
        let n = graph.node_count;
        let clients: Vec<NodeId> = (0..n).filter(|&v| v != tree.gateway).collect();
        let mut links = Vec::with_capacity(2 * clients.len());
        let mut up_link = vec![None; n];
        let mut down_link = vec![None; n];
        for direction in [Direction::Up, Direction::Down] {
            for &c in &clients {
                let p = tree.parent(c).ok_or(Error::Disconnected { unreachable: vec![c] })?;
                let (sender, receiver) = match direction {
                    Direction::Up => (c, p),
                    Direction::Down => (p, c),
                };
                let q = graph.quality(sender, receiver).ok_or_else(|| Error::InvalidParam {
                    field: "tree",
                    reason: format!("tree edge {sender} -> {receiver} is not in the graph"),
                })?;
                let id = links.len();
                links.push(Link {
                    id,
                    sender,
                    receiver,
                    direction,
                    ber: q.ber,
                    per_packet: q.per_packet,
                    per_ack: q.per_ack,
                });
                match direction {
                    Direction::Up => up_link[c] = Some(id),
                    Direction::Down => down_link[c] = Some(id),
                }
            }
        }
        let conflicts: Vec<ConflictSets> = links.iter().map(|l| conflict_sets(&graph, &links, l)).collect();
        let events = links
            .iter()
            .map(|l| {
                EventSets::from_membership(links.iter().filter(|j| j.sender != l.sender).map(|j| {
                    let (v1, w1, v2, w2) = (l.sender, l.receiver, j.sender, j.receiver);
                    (
                        j.id,
                        [
                            graph.in_range(v1, v2),
                            graph.in_range(w1, v2),
                            graph.in_range(v1, w2),
                            graph.in_range(w1, w2),
                        ],
                    )
                }))
            })
            .collect();
        Ok(Topology { graph, tree, links, up_link, down_link, conflicts, events })
    }

    pub fn graph(&self) -> &CandidateGraph {
        &self.graph
    }

    pub fn tree(&self) -> &RoutingTree {
        &self.tree
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    /// Link `(c, parent(c))`; `None` for the gateway.
    pub fn up_link(&self, node: NodeId) -> Option<LinkId> {
        self.up_link[node]
    }

    /// Link `(parent(c), c)`; `None` for the gateway.
    pub fn down_link(&self, node: NodeId) -> Option<LinkId> {
        self.down_link[node]
    }

    pub fn conflicts(&self, id: LinkId) -> &ConflictSets {
        &self.conflicts[id]
    }

    pub fn events(&self, id: LinkId) -> &EventSets {
        &self.events[id]
    }
}

/// The four conflict sets of `l` over the active links.
pub fn conflict_sets(graph: &CandidateGraph, links: &[Link], l: &Link) -> ConflictSets {
    let (v1, w1) = (l.sender, l.receiver);
    let mut sets = ConflictSets::default();
    for j in links.iter().filter(|j| j.sender != v1) {
        let (v2, w2) = (j.sender, j.receiver);
        if graph.in_range(v1, v2) {
            sets.ss.push(j.id);
        }
        if graph.in_range(w1, v2) {
            sets.rs.push(j.id);
        }
        if graph.in_range(v1, w2) {
            sets.sr.push(j.id);
        }
        if graph.in_range(w1, w2) {
            sets.rr.push(j.id);
        }
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn proto() -> ProtocolParams {
        ProtocolParams::default()
    }

    fn radio() -> RadioParams {
        RadioParams { tx_power_dbm: 0.0, noise_power_dbm: -95.0, disturb_threshold_dbm: -100.0 }
    }

    fn nodes(pos: &[(f64, f64)]) -> Vec<Node> {
        pos.iter().enumerate().map(|(id, &p)| Node { id, position: Some(p), is_gateway: id == 0 }).collect()
    }

    fn explicit(n: usize, links: &[(NodeId, NodeId, f64)], range: &[(NodeId, NodeId)]) -> CandidateGraph {
        let links: Vec<ExplicitLink> = links.iter().map(|&(a, b, ber)| ExplicitLink::new(a, b, ber)).collect();
        let mut pairs = Vec::new();
        for &(a, b) in range {
            pairs.push((a, b));
            pairs.push((b, a));
        }
        CandidateGraph::explicit(n, 0, &links, &pairs, &proto()).unwrap()
    }

    #[test]
    fn close_pair_has_clean_link() {
        let g = CandidateGraph::geometric(&nodes(&[(0.0, 0.0), (1.0, 0.0)]), &radio(), &proto()).unwrap();
        let q = g.quality(1, 0).unwrap();
        assert_eq!(q.ber, 0.0);
        assert_eq!(q.per_packet, 0.0);
        assert!(g.in_range(0, 1) && g.in_range(1, 0));
    }

    #[test]
    fn geometric_requires_two_nodes_and_positions() {
        assert!(CandidateGraph::geometric(&nodes(&[(0.0, 0.0)]), &radio(), &proto()).is_err());
        let mut ns = nodes(&[(0.0, 0.0), (1.0, 0.0)]);
        ns[1].position = None;
        assert!(matches!(
            CandidateGraph::geometric(&ns, &radio(), &proto()),
            Err(Error::InvalidParam { field: "position", .. })
        ));
        let mut ns = nodes(&[(0.0, 0.0), (1.0, 0.0)]);
        ns[1].is_gateway = true;
        assert!(CandidateGraph::geometric(&ns, &radio(), &proto()).is_err());
    }

    #[test]
    fn explicit_input_validation() {
        let p = proto();
        let dup = [ExplicitLink::new(0, 1, 0.0), ExplicitLink::new(1, 0, 0.0)];
        assert_eq!(CandidateGraph::explicit(2, 0, &dup, &[], &p), Err(Error::DuplicateLink { a: 1, b: 0 }));
        let one = [ExplicitLink::new(0, 1, 0.0)];
        assert_eq!(
            CandidateGraph::explicit(2, 0, &one, &[(0, 1)], &p),
            Err(Error::AsymmetricRange { from: 0, to: 1 })
        );
        assert!(CandidateGraph::explicit(2, 0, &[ExplicitLink::new(0, 5, 0.0)], &[], &p).is_err());
        assert!(CandidateGraph::explicit(2, 0, &[ExplicitLink::new(0, 1, 1.5)], &[], &p).is_err());
    }

    #[test]
    fn explicit_half_ber_is_useless_for_data() {
        let g = explicit(2, &[(0, 1, 0.5)], &[]);
        assert!(g.quality(0, 1).unwrap().per_packet > 1.0 - 1e-15);
    }

    #[test]
    fn explicit_per_overrides() {
        let l = ExplicitLink { per_packet: Some(0.1), per_ack: Some(0.01), ..ExplicitLink::new(0, 1, 0.0) };
        let g = CandidateGraph::explicit(2, 0, &[l], &[], &proto()).unwrap();
        let q = g.quality(1, 0).unwrap();
        assert_eq!((q.per_packet, q.per_ack), (0.1, 0.01));
    }

    #[test]
    fn error_free_line_routes_hop_by_hop() {
        // No direct 0-2 link: the chain is the only route.
        let g = explicit(3, &[(0, 1, 0.0), (1, 2, 0.0)], &[]);
        let t = RoutingTree::build(&g).unwrap();
        assert_eq!(t.parent(1), Some(0));
        assert_eq!(t.parent(2), Some(1));
        assert_eq!(t.descendants(0), 2);
        assert_eq!(t.depth(2), 2);
    }

    #[test]
    fn error_free_links_minimise_hops() {
        let g = explicit(3, &[(0, 1, 0.0), (1, 2, 0.0), (0, 2, 0.0)], &[]);
        let t = RoutingTree::build(&g).unwrap();
        assert_eq!(t.parent(2), Some(0));
    }

    #[test]
    fn star_around_gateway() {
        let g = explicit(5, &[(0, 1, 0.0), (0, 2, 0.0), (0, 3, 0.0), (0, 4, 0.0)], &[]);
        let t = RoutingTree::build(&g).unwrap();
        assert!((1..5).all(|c| t.parent(c) == Some(0)));
        assert_eq!(t.descendants(0), 4);
    }

    #[test]
    fn lossy_direct_link_loses_to_two_good_hops() {
        // 2 * (-ln(1 - 1e-6) + 1e-3) ~ 0.002 against -ln(0.9) + 1e-3 ~ 0.106.
        let g = explicit(3, &[(0, 1, 1e-6), (1, 2, 1e-6), (0, 2, 0.1)], &[]);
        let t = RoutingTree::build(&g).unwrap();
        assert_eq!(t.parent(2), Some(1));
    }

    #[test]
    fn tie_prefers_smaller_parent() {
        // 3 reaches the gateway through 1 or 2 at identical cost.
        let g = explicit(4, &[(0, 1, 0.0), (0, 2, 0.0), (1, 3, 0.0), (2, 3, 0.0)], &[]);
        assert_eq!(RoutingTree::build(&g).unwrap().parent(3), Some(1));
        let g = explicit(4, &[(0, 1, 0.0), (0, 2, 0.0), (2, 3, 0.0), (1, 3, 0.0)], &[]);
        assert_eq!(RoutingTree::build(&g).unwrap().parent(3), Some(1));
    }

    #[test]
    fn disconnected_nodes_reported() {
        let g = explicit(4, &[(0, 1, 0.0), (2, 3, 0.0)], &[]);
        assert_eq!(RoutingTree::build(&g), Err(Error::Disconnected { unreachable: vec![2, 3] }));
        let g = explicit(2, &[(0, 1, 1.0)], &[]);
        assert_eq!(RoutingTree::build(&g), Err(Error::Disconnected { unreachable: vec![1] }));
    }

    #[test]
    fn link_numbering() {
        let g = explicit(3, &[(0, 1, 0.0), (1, 2, 0.0)], &[]);
        let topo = Topology::build(g).unwrap();
        let l: Vec<(NodeId, NodeId, Direction)> =
            topo.links().iter().map(|l| (l.sender, l.receiver, l.direction)).collect();
        assert_eq!(
            l,
            vec![(1, 0, Direction::Up), (2, 1, Direction::Up), (0, 1, Direction::Down), (1, 2, Direction::Down)]
        );
        assert_eq!(topo.up_link(2), Some(1));
        assert_eq!(topo.down_link(2), Some(3));
        assert_eq!(topo.up_link(0), None);
    }

    #[test]
    fn single_link_sets_empty() {
        // Without interference between the pair, the up and down links do
        // not conflict.
        let topo = Topology::build(explicit(2, &[(0, 1, 0.0)], &[])).unwrap();
        assert!(topo.links().iter().all(|l| topo.conflicts(l.id).is_empty()));
    }

    #[test]
    fn disjoint_links_in_full_range() {
        // Star 1 -> 0 <- 2 with everybody in range: the two upstream links
        // have different senders and see each other through every endpoint.
        let topo = Topology::build(explicit(
            3,
            &[(0, 1, 0.0), (0, 2, 0.0)],
            &[(0, 1), (0, 2), (1, 2)],
        ))
        .unwrap();
        let (a, b) = (topo.up_link(1).unwrap(), topo.up_link(2).unwrap());
        // The receivers coincide, and a node never disturbs itself.
        let s = topo.conflicts(a);
        assert!(s.ss.contains(&b) && s.rs.contains(&b) && s.sr.contains(&b));
        assert!(!s.rr.contains(&b));
        // Four separate nodes, all in range: every relation holds.
        let topo = Topology::with_tree(
            explicit(4, &[(0, 1, 0.0), (0, 2, 0.0), (2, 3, 0.0)], &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
            RoutingTree::from_parents(0, vec![None, Some(0), Some(0), Some(2)]),
        )
        .unwrap();
        let (a, b) = (topo.up_link(1).unwrap(), topo.up_link(3).unwrap());
        for (x, y) in [(a, b), (b, a)] {
            let s = topo.conflicts(x);
            for set in [&s.ss, &s.rs, &s.sr, &s.rr] {
                assert!(set.contains(&y));
            }
        }
    }

    #[test]
    fn shared_sender_excluded() {
        // Node 1 sends upstream to 0 and downstream to 2.
        let topo = Topology::build(explicit(3, &[(0, 1, 0.0), (1, 2, 0.0)], &[(0, 1), (1, 2), (0, 2)])).unwrap();
        let up = topo.up_link(1).unwrap();
        let down = topo.down_link(2).unwrap();
        assert_eq!(topo.link(up).sender, topo.link(down).sender);
        for (x, y) in [(up, down), (down, up)] {
            let s = topo.conflicts(x);
            for set in [&s.ss, &s.rs, &s.sr, &s.rr] {
                assert!(!set.contains(&y));
            }
        }
    }

    #[test]
    fn event_sets_follow_conflict_sets() {
        let pos: Vec<(f64, f64)> = (0..12).map(|i| ((i % 4) as f64 * 35.0, (i / 4) as f64 * 35.0)).collect();
        let topo = Topology::build(CandidateGraph::geometric(&nodes(&pos), &radio(), &proto()).unwrap()).unwrap();
        for l in topo.links() {
            let c = topo.conflicts(l.id);
            let e = topo.events(l.id);
            let has = |s: &Vec<LinkId>, j| s.contains(&j);
            for j in 0..topo.links().len() {
                let (ss, rs, sr, rr) = (has(&c.ss, j), has(&c.rs, j), has(&c.sr, j), has(&c.rr, j));
                assert_eq!(has(&e.packet[0], j), rs && ss);
                assert_eq!(has(&e.packet[6], j), rr && !ss && !sr && !rs);
                assert_eq!(has(&e.mutual_hidden, j), rs && sr && !ss);
                assert_eq!(has(&e.busy_packet, j), ss);
                assert_eq!(has(&e.busy_ack, j), sr);
            }
        }
    }

    proptest! {
        #[test]
        fn random_geometric_invariants(
            pos in proptest::collection::vec((0.0f64..200.0, 0.0f64..200.0), 2..25)
        ) {
            let mut pos = pos;
            // Keep positions distinct.
            for (i, p) in pos.iter_mut().enumerate() {
                p.0 += i as f64 * 1e-3;
            }
            let g = CandidateGraph::geometric(&nodes(&pos), &radio(), &proto()).unwrap();
            for v in 0..pos.len() {
                for w in 0..pos.len() {
                    prop_assert_eq!(g.in_range(v, w), g.in_range(w, v));
                }
            }
            let topo = Topology::build(g).unwrap();
            let n = pos.len();
            let tree = topo.tree();
            prop_assert_eq!(tree.descendants(tree.gateway()), n - 1);
            let up = topo.links().iter().filter(|l| l.direction == Direction::Up).count();
            prop_assert_eq!(up, n - 1);
            prop_assert_eq!(topo.links().len(), 2 * (n - 1));
            let sum_desc: usize = (0..n).map(|v| tree.descendants(v)).sum();
            let sum_depth: usize = (0..n).map(|v| tree.depth(v)).sum();
            prop_assert_eq!(sum_desc, sum_depth);
            for v in 0..n {
                let from_children: usize = tree.children(v).iter().map(|&c| 1 + tree.descendants(c)).sum();
                prop_assert_eq!(tree.descendants(v), from_children);
            }
            for l in topo.links() {
                let s = topo.conflicts(l.id);
                for set in [&s.ss, &s.rs, &s.sr, &s.rr] {
                    for &j in set.iter() {
                        prop_assert!(j < topo.links().len());
                        prop_assert_ne!(topo.link(j).sender, l.sender);
                    }
                }
                for &j in &s.ss {
                    // Sender-pair membership is symmetric under a symmetric relation.
                    prop_assert!(topo.conflicts(j).ss.contains(&l.id) || topo.link(j).sender == l.sender);
                }
            }
        }
    }
}
