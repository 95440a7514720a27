//! Damped fixed-point iteration over the coupled per-link unknowns.
//!
//! One pass of the pipeline maps an iterate to a new one:
//!
//! 1. collision and busy probabilities from the previous `(tau, alpha)` of
//!    every link (all links read the same snapshot),
//! 2. link reliability from the resulting retransmission chain,
//! 3. offered rates from the new reliabilities,
//! 4. the sensing probability `tau` from the new rates and busy probabilities.
//!
//! Links without any conflicting neighbour are updated undamped, since their
//! pass does not depend on the iterate at all.

use alloc::vec::Vec;

use crate::csma_chain::{closed_form, ChainInputs};
use crate::model_config::derive_timing;
use crate::neighborhood::{collision_probabilities, CollisionBreakdown, LinkActivity};
use crate::reliability::{
    build_retrans_chain, link_reliability, path_reliabilities, repeated_collision_probs, PathReliability,
    RepeatedCollision,
};
use crate::traffic_distribution::distribute_traffic;
use crate::{DerivedTiming, Error, ProtocolParams, Result, Topology, TrafficParams};

/// Iterations without a new best residual before the damping is halved.
pub const STALL_WINDOW: usize = 50;
pub const MIN_DAMPING: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init_r: f64,
    pub init_alpha: f64,
    pub init_tau: f64,
    pub init_pnoack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.5,
            tol: 1e-9,
            max_iter: 10_000,
            init_r: 1.0,
            init_alpha: 0.0,
            init_tau: 0.0,
            init_pnoack: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: &str| Err(Error::InvalidParam { field, reason: reason.into() });
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return invalid("damping", "must lie in (0, 1]");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid("tol", "must be positive");
        }
        if self.max_iter == 0 {
            return invalid("max_iter", "must be at least 1");
        }
        for (field, v) in [
            ("init_r", self.init_r),
            ("init_alpha", self.init_alpha),
            ("init_tau", self.init_tau),
            ("init_pnoack", self.init_pnoack),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(field, "must be a probability");
            }
        }
        Ok(())
    }
}

/// Unknowns of one link plus the collision breakdown they were derived from.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkState {
    /// Offered packets per time unit.
    pub f: f64,
    pub p_send: f64,
    pub tau: f64,
    pub alpha: f64,
    pub p_noack: f64,
    pub r: f64,
    pub breakdown: CollisionBreakdown,
}

impl LinkState {
    pub const UNKNOWNS: [&'static str; 6] = ["f", "p_send", "tau", "alpha", "p_noack", "r"];

    /// The fixed-point unknowns, in the order of [`LinkState::UNKNOWNS`].
    pub fn unknowns(&self) -> [f64; 6] {
        [self.f, self.p_send, self.tau, self.alpha, self.p_noack, self.r]
    }

    fn blend(&self, new: &LinkState, lambda: f64) -> LinkState {
        let mix = |old: f64, new: f64| old + lambda * (new - old);
        LinkState {
            f: mix(self.f, new.f),
            p_send: mix(self.p_send, new.p_send),
            tau: mix(self.tau, new.tau),
            alpha: mix(self.alpha, new.alpha),
            p_noack: mix(self.p_noack, new.p_noack),
            r: mix(self.r, new.r),
            breakdown: new.breakdown,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    /// Indexed by link id.
    pub links: Vec<LinkState>,
    pub paths: PathReliability,
    pub timing: DerivedTiming,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Damping in effect when the iteration stopped.
    pub damping: f64,
}

/// Max-norm distance between two iterates over all unknowns.
pub fn residual(a: &[LinkState], b: &[LinkState]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParam {
            field: "state",
            reason: alloc::format!("{} links against {}", a.len(), b.len()),
        });
    }
    Ok(a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.unknowns().into_iter().zip(y.unknowns()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max))
}

/// A topology together with the parameters that stay fixed while solving.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    topo: &'a Topology,
    params: ProtocolParams,
    timing: DerivedTiming,
    repeat: RepeatedCollision,
}

impl<'a> Model<'a> {
    pub fn new(topo: &'a Topology, params: &ProtocolParams, traffic: &TrafficParams) -> Result<Self> {
        let timing = derive_timing(params, traffic, topo.node_count())?;
        let repeat = repeated_collision_probs(params, &timing)?;
        Ok(Model { topo, params: *params, timing, repeat })
    }

    pub fn timing(&self) -> &DerivedTiming {
        &self.timing
    }

    pub fn topology(&self) -> &Topology {
        self.topo
    }

    pub fn initial_state(&self, cfg: &SolverConfig) -> Vec<LinkState> {
        let init = LinkState {
            tau: cfg.init_tau,
            alpha: cfg.init_alpha,
            p_noack: cfg.init_pnoack,
            r: cfg.init_r,
            ..Default::default()
        };
        alloc::vec![init; self.topo.links().len()]
    }

    /// One undamped pipeline pass.
    pub fn pass(&self, state: &[LinkState]) -> Result<Vec<LinkState>> {
        let links = self.topo.links();
        if state.len() != links.len() {
            return Err(Error::InvalidParam {
                field: "state",
                reason: alloc::format!("{} entries for {} links", state.len(), links.len()),
            });
        }
        let activity: Vec<LinkActivity> = state.iter().map(|s| LinkActivity { tau: s.tau, alpha: s.alpha }).collect();
        let mut next = Vec::with_capacity(links.len());
        for link in links {
            let breakdown = collision_probabilities(link, self.topo.events(link.id), &activity, &self.timing)?;
            let chain = build_retrans_chain(&breakdown, &self.repeat, &self.params)?;
            let r = link_reliability(&chain, self.params.mac_max_frame_retries);
            next.push(LinkState { alpha: breakdown.alpha, p_noack: breakdown.p_noack, r, breakdown, ..Default::default() });
        }
        let reliability: Vec<f64> = next.iter().map(|s| s.r).collect();
        let flows = distribute_traffic(self.topo, &self.timing, &reliability)?;
        for (s, flow) in next.iter_mut().zip(&flows.links) {
            s.f = flow.rate;
            s.p_send = flow.p_send;
            let inputs = ChainInputs::new(s.alpha, s.p_noack, s.p_send, &self.params, &self.timing);
            s.tau = closed_form(&inputs)?.tau;
        }
        for (link, s) in next.iter().enumerate() {
            if let Some(i) = s.unknowns().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { link, variable: LinkState::UNKNOWNS[i] });
            }
        }
        Ok(next)
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<ModelSolution> {
        self.solve_with_observer(cfg, |_, _| {})
    }

    /// Like [`Model::solve`], reporting `(iteration, residual)` after every pass.
    pub fn solve_with_observer(&self, cfg: &SolverConfig, mut observe: impl FnMut(usize, f64)) -> Result<ModelSolution> {
        cfg.validate()?;
        let uncoupled: Vec<bool> = self.topo.links().iter().map(|l| self.topo.conflicts(l.id).is_empty()).collect();
        let mut damping = cfg.damping;
        let mut x = self.initial_state(cfg);
        let mut best: Option<(f64, Vec<LinkState>)> = None;
        let mut since_best = 0;
        let mut iterations = 0;

        for iteration in 1..=cfg.max_iter {
            iterations = iteration;
            let g = self.pass(&x)?;
            let res = residual(&g, &x)?;
            observe(iteration, res);
            // Report the breakdowns that belong to the returned unknowns.
            let current: Vec<LinkState> =
                x.iter().zip(&g).map(|(old, new)| LinkState { breakdown: new.breakdown, ..*old }).collect();
            if res <= cfg.tol {
                return self.finish(current, iteration, res, true, damping);
            }
            if best.as_ref().is_none_or(|(b, _)| res < *b) {
                best = Some((res, current));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= STALL_WINDOW {
                    if damping <= MIN_DAMPING {
                        break;
                    }
                    damping = (damping / 2.0).max(MIN_DAMPING);
                    since_best = 0;
                }
            }
            x = x
                .iter()
                .zip(&g)
                .zip(&uncoupled)
                .map(|((old, new), &free)| old.blend(new, if free { 1.0 } else { damping }))
                .collect();
        }
        let (res, state) = best.expect("at least one pass ran");
        self.finish(state, iterations, res, false, damping)
    }

    fn finish(
        &self,
        links: Vec<LinkState>,
        iterations: usize,
        final_residual: f64,
        converged: bool,
        damping: f64,
    ) -> Result<ModelSolution> {
        let r: Vec<f64> = links.iter().map(|s| s.r).collect();
        let paths = path_reliabilities(self.topo, &r)?;
        Ok(ModelSolution { links, paths, timing: self.timing, iterations, final_residual, converged, damping })
    }
}

/// Builds the [`Model`] and solves it.
pub fn solve(
    topo: &Topology,
    params: &ProtocolParams,
    traffic: &TrafficParams,
    cfg: &SolverConfig,
) -> Result<ModelSolution> {
    Model::new(topo, params, traffic)?.solve(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{CandidateGraph, ExplicitLink};
    use alloc::vec;

    fn pair(per: Option<(f64, f64)>) -> Topology {
        let link = ExplicitLink { per_packet: per.map(|p| p.0), per_ack: per.map(|p| p.1), ..ExplicitLink::new(0, 1, 0.0) };
        Topology::build(CandidateGraph::explicit(2, 0, &[link], &[], &ProtocolParams::default()).unwrap()).unwrap()
    }

    fn all_in_range(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect()
    }

    fn star(clients: usize) -> Topology {
        let links: Vec<_> = (1..=clients).map(|c| ExplicitLink::new(0, c, 1e-5)).collect();
        let n = clients + 1;
        Topology::build(CandidateGraph::explicit(n, 0, &links, &all_in_range(n), &ProtocolParams::default()).unwrap())
            .unwrap()
    }

    fn traffic() -> TrafficParams {
        TrafficParams::new(1.0, 5.0)
    }

    #[test]
    fn residual_examples() {
        let a = vec![LinkState::default(); 3];
        assert_eq!(residual(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[1].alpha = 0.5;
        assert_eq!(residual(&a, &b).unwrap(), 0.5);
        assert!(residual(&a, &b[..2]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { damping: 0.0, ..Default::default() },
            SolverConfig { damping: 1.5, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
            SolverConfig { init_r: 2.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn clean_isolated_pair() {
        let t = pair(None);
        let sol = solve(&t, &ProtocolParams::default(), &traffic(), &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.iterations <= 2);
        for s in &sol.links {
            assert_eq!((s.alpha, s.p_noack, s.r), (0.0, 0.0, 1.0));
        }
        assert_eq!(sol.paths.r_up[1], 1.0);
    }

    #[test]
    fn lossy_isolated_pair() {
        let t = pair(Some((0.1, 0.01)));
        let sol = solve(&t, &ProtocolParams::default(), &traffic(), &SolverConfig::default()).unwrap();
        assert!(sol.converged && sol.iterations <= 2);
        for s in &sol.links {
            assert!((s.p_noack - 0.109).abs() < 1e-12);
            // No collisions, so every attempt fails independently with PER 0.1.
            assert!((s.r - (1.0 - 1e-4)).abs() < 1e-15);
        }
        assert!((sol.paths.r_up[1] - 0.9999).abs() < 1e-15);
    }

    #[test]
    fn symmetric_star_is_symmetric() {
        let t = star(2);
        let cfg = SolverConfig::default();
        let sol = solve(&t, &ProtocolParams::default(), &TrafficParams::new(0.2, 0.5), &cfg).unwrap();
        assert!(sol.converged);
        for (a, b) in [(t.up_link(1), t.up_link(2)), (t.down_link(1), t.down_link(2))] {
            let (a, b) = (&sol.links[a.unwrap()], &sol.links[b.unwrap()]);
            assert!(residual(core::slice::from_ref(a), core::slice::from_ref(b)).unwrap() <= cfg.tol);
        }
        assert!(sol.links.iter().all(|s| s.alpha > 0.0));
    }

    #[test]
    fn converged_state_is_idempotent() {
        let t = star(4);
        let model = Model::new(&t, &ProtocolParams::default(), &TrafficParams::new(0.1, 0.3)).unwrap();
        let cfg = SolverConfig::default();
        let sol = model.solve(&cfg).unwrap();
        assert!(sol.converged);
        let again = model.pass(&sol.links).unwrap();
        assert!(residual(&again, &sol.links).unwrap() <= cfg.tol);
    }

    #[test]
    fn single_pass_cannot_converge_coupled_star() {
        let t = star(3);
        let cfg = SolverConfig { max_iter: 1, ..Default::default() };
        let sol = solve(&t, &ProtocolParams::default(), &traffic(), &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.final_residual > cfg.tol);
    }

    #[test]
    fn deterministic_trace() {
        let t = star(3);
        let run = || {
            let mut trace = Vec::new();
            let model = Model::new(&t, &ProtocolParams::default(), &traffic()).unwrap();
            let sol = model.solve_with_observer(&SolverConfig::default(), |i, r| trace.push((i, r))).unwrap();
            (sol, trace)
        };
        let (s1, t1) = run();
        let (s2, t2) = run();
        assert_eq!(s1, s2);
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), s1.iterations);
    }

    #[test]
    fn zero_traffic_leaves_channel_idle() {
        let t = star(3);
        let tr = TrafficParams { up_enabled: false, down_enabled: false, ..traffic() };
        let sol = solve(&t, &ProtocolParams::default(), &tr, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        for (s, l) in sol.links.iter().zip(t.links()) {
            assert_eq!((s.f, s.tau, s.alpha), (0.0, 0.0, 0.0));
            let pure = l.per_packet + (1.0 - l.per_packet) * l.per_ack;
            assert!((s.p_noack - pure).abs() <= SolverConfig::default().tol);
        }
    }
}
