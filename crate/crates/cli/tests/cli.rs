use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mh154::config::ExperimentConfig;
use mh154::dump::{node_csv_path, LinkRecord, LinkRow, NodeRecord, SolutionDump};
use mh154::generate::NodeFile;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mh154(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mh154"))
        .args(args)
        .env_remove("MH154_TOL")
        .env_remove("MH154_MAX_ITER")
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dump(p: &Path) -> SolutionDump {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, json: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json.to_string()).unwrap();
    p
}

#[test]
fn clean_pair_solves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pair.json",
        serde_json::json!({
            "traffic": { "interval_up_s": 5.0, "interval_down_s": 5.0 },
            "topology": { "kind": "explicit", "node_count": 2, "gateway": 0,
                          "links": [{ "a": 0, "b": 1, "ber": 0.0 }] }
        }),
    );
    let out = mh154(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dump: SolutionDump = serde_json::from_slice(&out.stdout).unwrap();
    assert!(dump.diagnostics.converged);
    assert!(dump.links.iter().all(|l| l.r == 1.0 && l.p_noack == 0.0));
}

#[test]
fn bad_parameter_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        serde_json::json!({
            "protocol": { "mac_min_be": 6, "mac_max_be": 5 },
            "traffic": { "interval_up_s": 5.0, "interval_down_s": 5.0 },
            "topology": { "kind": "explicit", "node_count": 2, "gateway": 0,
                          "links": [{ "a": 0, "b": 1, "ber": 0.0 }] }
        }),
    );
    let out = mh154(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mac_min_be"));
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        serde_json::json!({
            "traffic": { "interval_up_s": 5.0, "interval_down_s": 5.0, "intreval": 1 },
            "topology": { "kind": "explicit", "node_count": 2, "gateway": 0, "links": [] }
        }),
    );
    let out = mh154(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("intreval"));
}

#[test]
fn missing_config_is_an_input_error() {
    let out = mh154(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_convergence_still_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("grid.json");
    let cfg = configs().join("grid7x7.json");
    let out = mh154(&["solve", "--config", path_str(&cfg), "--max-iter", "1", "--out", path_str(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
    let dump = read_dump(&out_path);
    assert!(!dump.diagnostics.converged);
    assert_eq!(dump.diagnostics.iterations, 1);
}

#[test]
fn env_overrides_iteration_limit() {
    let cfg = configs().join("grid7x7.json");
    let out = Command::new(env!("CARGO_BIN_EXE_mh154"))
        .args(["solve", "--config", path_str(&cfg)])
        .env("MH154_MAX_ITER", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("star.json");
    let json = dir.path().join("star.json");
    let csv = dir.path().join("star.csv");
    assert_eq!(mh154(&["solve", "--config", path_str(&cfg), "--out", path_str(&json)]).status.code(), Some(0));
    let out = mh154(&["solve", "--config", path_str(&cfg), "--format", "csv", "--out", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0));

    let dump = read_dump(&json);
    let links: Vec<LinkRecord> = csv::Reader::from_path(&csv)
        .unwrap()
        .deserialize::<LinkRow>()
        .map(|r| LinkRecord::from(&r.unwrap()))
        .collect();
    assert_eq!(links, dump.links);
    let nodes: Vec<NodeRecord> =
        csv::Reader::from_path(node_csv_path(&csv)).unwrap().deserialize().map(Result::unwrap).collect();
    assert_eq!(nodes, dump.nodes);
}

#[test]
fn csv_to_stdout_is_refused() {
    let cfg = configs().join("star.json");
    assert_eq!(mh154(&["solve", "--config", path_str(&cfg), "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn generated_nodes_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let src = configs().join("uniform50.json");
    let nodes = dir.path().join("nodes.json");
    assert_eq!(mh154(&["generate", "--config", path_str(&src), "--out", path_str(&nodes)]).status.code(), Some(0));

    let mut from_file = ExperimentConfig::load(&src).unwrap();
    from_file.topology = serde_json::from_value(serde_json::json!({ "kind": "file", "path": "nodes.json" })).unwrap();
    let file_cfg = write_config(dir.path(), "from_file.json", serde_json::to_value(&from_file).unwrap());

    let generated = ExperimentConfig::load(&src).unwrap().build_topology(None).unwrap();
    let reloaded = ExperimentConfig::load(&file_cfg).unwrap().build_topology(None).unwrap();
    assert_eq!(generated, reloaded);

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(mh154(&["solve", "--config", path_str(&src), "--out", path_str(&a)]).status.code(), Some(0));
    assert_eq!(mh154(&["solve", "--config", path_str(&file_cfg), "--out", path_str(&b)]).status.code(), Some(0));
    assert_eq!(read_dump(&a), read_dump(&b));
}

#[test]
fn generation_is_seeded() {
    let src = configs().join("uniform50.json");
    let run = |seed: &str| mh154(&["generate", "--config", path_str(&src), "--seed", seed]).stdout;
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
    let file: NodeFile = serde_json::from_slice(&run("3")).unwrap();
    assert_eq!(file.nodes.len(), 50);
}

#[test]
fn explicit_topology_cannot_be_generated() {
    let cfg = configs().join("isolated_pair.json");
    assert_eq!(mh154(&["generate", "--config", path_str(&cfg)]).status.code(), Some(1));
}

#[test]
fn validate_suites_pass() {
    for suite in ["powerset", "retrans"] {
        let out = mh154(&["validate", suite]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().all(|l| l.contains(" ok ")), "{text}");
    }
}
