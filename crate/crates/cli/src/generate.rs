//! Deterministic node placement and the node file format.

use std::path::Path;

use mh154_model::topology::{Node, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const NODE_FILE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `rows * cols` nodes, row-major ids, `spacing_m` apart.
    Grid { rows: usize, cols: usize, spacing_m: f64, gateway: NodeId, seed: Option<u64> },
    /// `count` nodes drawn uniformly from a `width_m * height_m` rectangle.
    Uniform { count: usize, width_m: f64, height_m: f64, gateway: NodeId, seed: Option<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacedNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

/// Output of `generate`, readable back as a `file` topology source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub schema_version: u32,
    pub gateway: NodeId,
    pub nodes: Vec<PlacedNode>,
}

impl NodeFile {
    pub fn new(gateway: NodeId, positions: Vec<Position>) -> Self {
        let nodes = positions.into_iter().enumerate().map(|(id, p)| PlacedNode { id, x: p.x, y: p.y }).collect();
        NodeFile { schema_version: NODE_FILE_SCHEMA, gateway, nodes }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read node file {}: {e}", path.display())))?;
        let file: NodeFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid node file {}: {e}", path.display())))?;
        if file.schema_version != NODE_FILE_SCHEMA {
            return Err(CliError::Input(format!(
                "node file {} has schema_version {}, expected {NODE_FILE_SCHEMA}",
                path.display(),
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_nodes(&self) -> Vec<Node> {
        self.nodes
            .iter()
            .map(|n| Node { id: n.id, position: Some((n.x, n.y)), is_gateway: n.id == self.gateway })
            .collect()
    }
}

fn check_gateway(gateway: NodeId, count: usize) -> Result<(), CliError> {
    if count < 2 {
        return Err(CliError::Input(format!("topology: {count} node(s), need a gateway and at least one client")));
    }
    if gateway >= count {
        return Err(CliError::Input(format!("topology.gateway: {gateway} is not one of the {count} nodes")));
    }
    Ok(())
}

/// Places the nodes of `spec`. `seed_override` replaces the configured seed.
pub fn generate(spec: &GeneratorSpec, seed_override: Option<u64>) -> Result<NodeFile, CliError> {
    let missing_seed = || CliError::Input("topology.seed: a generator needs a seed (or pass --seed)".into());
    match *spec {
        GeneratorSpec::Grid { rows, cols, spacing_m, gateway, seed } => {
            seed_override.or(seed).ok_or_else(missing_seed)?;
            check_gateway(gateway, rows * cols)?;
            if !(spacing_m > 0.0 && spacing_m.is_finite()) {
                return Err(CliError::Input(format!("topology.spacing_m: {spacing_m} is not a positive distance")));
            }
            let positions = (0..rows * cols)
                .map(|id| Position { x: (id % cols) as f64 * spacing_m, y: (id / cols) as f64 * spacing_m })
                .collect();
            Ok(NodeFile::new(gateway, positions))
        }
        GeneratorSpec::Uniform { count, width_m, height_m, gateway, seed } => {
            let seed = seed_override.or(seed).ok_or_else(missing_seed)?;
            check_gateway(gateway, count)?;
            if !(width_m > 0.0 && height_m > 0.0 && (width_m * height_m).is_finite()) {
                return Err(CliError::Input(format!(
                    "topology.width_m/height_m: {width_m} x {height_m} m is not a positive area"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let positions =
                (0..count).map(|_| Position { x: rng.gen_range(0.0..width_m), y: rng.gen_range(0.0..height_m) }).collect();
            Ok(NodeFile::new(gateway, positions))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(count: usize, seed: Option<u64>) -> GeneratorSpec {
        GeneratorSpec::Uniform { count, width_m: 100.0, height_m: 50.0, gateway: 0, seed }
    }

    #[test]
    fn grid_layout() {
        let spec = GeneratorSpec::Grid { rows: 3, cols: 3, spacing_m: 10.0, gateway: 4, seed: Some(0) };
        let f = generate(&spec, None).unwrap();
        assert_eq!(f.nodes.len(), 9);
        assert_eq!((f.nodes[0].x, f.nodes[0].y), (0.0, 0.0));
        assert_eq!((f.nodes[5].x, f.nodes[5].y), (20.0, 10.0));
        assert_eq!((f.nodes[8].x, f.nodes[8].y), (20.0, 20.0));
        assert_eq!(f.gateway, 4);
    }

    #[test]
    fn uniform_is_reproducible() {
        let a = generate(&uniform(25, Some(7)), None).unwrap();
        assert_eq!(a, generate(&uniform(25, Some(7)), None).unwrap());
        assert_ne!(a, generate(&uniform(25, Some(8)), None).unwrap());
        assert_eq!(generate(&uniform(25, None), Some(7)).unwrap(), a);
        assert!(a.nodes.iter().all(|n| (0.0..100.0).contains(&n.x) && (0.0..50.0).contains(&n.y)));
    }

    #[test]
    fn input_errors() {
        assert!(generate(&uniform(25, None), None).unwrap_err().to_string().contains("seed"));
        assert!(generate(&uniform(1, Some(1)), None).is_err());
        let flat = GeneratorSpec::Uniform { count: 5, width_m: 10.0, height_m: 0.0, gateway: 0, seed: Some(1) };
        assert!(generate(&flat, None).unwrap_err().to_string().contains("area"));
        let bad_gw = GeneratorSpec::Grid { rows: 2, cols: 2, spacing_m: 1.0, gateway: 4, seed: Some(1) };
        assert!(generate(&bad_gw, None).is_err());
    }
}
