use mh154_model::analog_model::RadioParams;
use mh154_model::solver::{residual, Model};
use mh154_model::topology::{CandidateGraph, Direction, Node};
use mh154_model::traffic_distribution::distribute_traffic;
use mh154_model::{ProtocolParams, SolverConfig, Topology, TrafficParams};
use proptest::prelude::*;

fn radio() -> RadioParams {
    RadioParams { tx_power_dbm: 0.0, noise_power_dbm: -95.0, disturb_threshold_dbm: -100.0 }
}

fn topology(points: &[(f64, f64)]) -> Option<Topology> {
    let nodes: Vec<Node> = points
        .iter()
        .enumerate()
        .map(|(id, &p)| Node { id, position: Some(p), is_gateway: id == 0 })
        .collect();
    let graph = CandidateGraph::geometric(&nodes, &radio(), &ProtocolParams::default()).ok()?;
    Topology::build(graph).ok()
}

fn points(max: usize, extent: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.5..extent, 0.5..extent), 2..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_solutions_are_consistent(pts in points(14, 150.0), up in 2.0f64..30.0, down in 2.0f64..30.0) {
        let Some(topo) = topology(&pts) else { return Ok(()) };
        let model = Model::new(&topo, &ProtocolParams::default(), &TrafficParams::new(up, down)).unwrap();
        let cfg = SolverConfig::default();
        let sol = model.solve(&cfg).unwrap();
        prop_assert!(sol.converged, "residual {}", sol.final_residual);
        prop_assert!(sol.final_residual <= cfg.tol);

        for s in &sol.links {
            prop_assert!(s.f >= 0.0);
            for p in [s.p_send, s.tau, s.alpha, s.p_noack, s.r] {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
        let again = model.pass(&sol.links).unwrap();
        prop_assert!(residual(&again, &sol.links).unwrap() <= cfg.tol);

        let tree = topo.tree();
        for v in 0..topo.node_count() {
            if let Some(parent) = tree.parent(v) {
                prop_assert!(sol.paths.r_up[v] <= sol.paths.r_up[parent]);
                prop_assert!(sol.paths.r_down[v] <= sol.paths.r_down[parent]);
            }
        }
    }

    #[test]
    fn lossless_flows_are_conserved(pts in points(60, 400.0)) {
        let Some(topo) = topology(&pts) else { return Ok(()) };
        let n = topo.node_count();
        let timing = mh154_model::model_config::derive_timing(
            &ProtocolParams::default(), &TrafficParams::new(3.0, 7.0), n).unwrap();
        let flows = distribute_traffic(&topo, &timing, &vec![1.0; topo.links().len()]).unwrap();
        let tree = topo.tree();
        let at_gateway: f64 = tree
            .children(tree.gateway())
            .iter()
            .map(|&c| flows.get(topo.up_link(c).unwrap()).forwarded)
            .sum();
        prop_assert!((at_gateway - (n - 1) as f64 * timing.rate_up).abs() <= 1e-12);
        for l in topo.links().iter().filter(|l| l.direction == Direction::Down) {
            prop_assert!(flows.get(l.id).rate > 0.0);
        }
    }

    #[test]
    fn deterministic(pts in points(10, 120.0)) {
        let Some(topo) = topology(&pts) else { return Ok(()) };
        let model = Model::new(&topo, &ProtocolParams::default(), &TrafficParams::new(5.0, 5.0)).unwrap();
        let a = model.solve(&SolverConfig::default()).unwrap();
        let b = model.solve(&SolverConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn heavier_load_raises_contention() {
    let pts: Vec<(f64, f64)> = (0..9).map(|i| ((i % 3) as f64 * 25.0, (i / 3) as f64 * 25.0)).collect();
    let topo = topology(&pts).unwrap();
    let solve = |interval| {
        Model::new(&topo, &ProtocolParams::default(), &TrafficParams::new(interval, interval))
            .unwrap()
            .solve(&SolverConfig::default())
            .unwrap()
    };
    let light = solve(60.0);
    let heavy = solve(1.0);
    assert!(light.converged && heavy.converged);
    let mean_alpha = |s: &mh154_model::ModelSolution| s.links.iter().map(|l| l.alpha).sum::<f64>() / s.links.len() as f64;
    assert!(mean_alpha(&heavy) > mean_alpha(&light));
}
