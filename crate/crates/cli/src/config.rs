//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mh154_model::analog_model::RadioParams;
use mh154_model::topology::{CandidateGraph, ExplicitLink, NodeId};
use mh154_model::{ProtocolParams, SolverConfig, Topology, TrafficParams};
use serde::{Deserialize, Serialize};

use crate::generate::{self, NodeFile};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    pub traffic: TrafficConfig,
    pub topology: TopologySource,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub disturb_threshold_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig { tx_power_dbm: 0.0, noise_power_dbm: -95.0, disturb_threshold_dbm: -100.0 }
    }
}

impl From<RadioConfig> for RadioParams {
    fn from(r: RadioConfig) -> Self {
        RadioParams {
            tx_power_dbm: r.tx_power_dbm,
            noise_power_dbm: r.noise_power_dbm,
            disturb_threshold_dbm: r.disturb_threshold_dbm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub mac_min_be: u32,
    pub mac_max_be: u32,
    pub mac_max_csma_backoffs: u32,
    pub mac_max_frame_retries: u32,
    pub packet_bytes: u32,
    pub ack_bytes: u32,
    pub ifs_symbols: u32,
    pub t_ack_symbols: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        ProtocolConfig {
            mac_min_be: p.mac_min_be,
            mac_max_be: p.mac_max_be,
            mac_max_csma_backoffs: p.mac_max_csma_backoffs,
            mac_max_frame_retries: p.mac_max_frame_retries,
            packet_bytes: p.packet_bytes,
            ack_bytes: p.ack_bytes,
            ifs_symbols: p.ifs_symbols,
            t_ack_symbols: p.t_ack_symbols,
        }
    }
}

impl From<ProtocolConfig> for ProtocolParams {
    fn from(p: ProtocolConfig) -> Self {
        ProtocolParams {
            mac_min_be: p.mac_min_be,
            mac_max_be: p.mac_max_be,
            mac_max_csma_backoffs: p.mac_max_csma_backoffs,
            mac_max_frame_retries: p.mac_max_frame_retries,
            packet_bytes: p.packet_bytes,
            ack_bytes: p.ack_bytes,
            ifs_symbols: p.ifs_symbols,
            t_ack_symbols: p.t_ack_symbols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    /// Seconds between packets generated by each client.
    pub interval_up_s: f64,
    /// Seconds between packets the gateway sends to each client.
    pub interval_down_s: f64,
    #[serde(default = "enabled")]
    pub up_enabled: bool,
    #[serde(default = "enabled")]
    pub down_enabled: bool,
}

fn enabled() -> bool {
    true
}

impl From<TrafficConfig> for TrafficParams {
    fn from(t: TrafficConfig) -> Self {
        TrafficParams {
            interval_up: t.interval_up_s,
            interval_down: t.interval_down_s,
            up_enabled: t.up_enabled,
            down_enabled: t.down_enabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection { damping: d.damping, tol: d.tol, max_iter: d.max_iter }
    }
}

impl From<SolverSection> for SolverConfig {
    fn from(s: SolverSection) -> Self {
        SolverConfig { damping: s.damping, tol: s.tol, max_iter: s.max_iter, ..SolverConfig::default() }
    }
}

/// Where the nodes and links come from. Exactly one source per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    Generator(generate::GeneratorSpec),
    /// Inline node positions.
    Nodes { gateway: NodeId, nodes: Vec<generate::Position> },
    /// A node file written by `generate`, relative to the config file.
    File { path: PathBuf },
    Explicit {
        node_count: usize,
        gateway: NodeId,
        links: Vec<LinkSpec>,
        /// Directed `[from, to]` pairs; must be symmetric.
        #[serde(default)]
        in_range: Vec<(NodeId, NodeId)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub ber: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_packet: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_ack: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;
        if let TopologySource::File { path: p } = &mut cfg.topology {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn protocol(&self) -> ProtocolParams {
        self.protocol.into()
    }

    pub fn traffic(&self) -> TrafficParams {
        self.traffic.into()
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver.into()
    }

    /// Nodes of a position-based source; `seed` overrides the generator seed.
    pub fn nodes(&self, seed: Option<u64>) -> Result<Option<NodeFile>, CliError> {
        Ok(match &self.topology {
            TopologySource::Generator(spec) => Some(generate::generate(spec, seed)?),
            TopologySource::Nodes { gateway, nodes } => Some(NodeFile::new(*gateway, nodes.clone())),
            TopologySource::File { path } => Some(NodeFile::load(path)?),
            TopologySource::Explicit { .. } => None,
        })
    }

    pub fn build_topology(&self, seed: Option<u64>) -> Result<Topology, CliError> {
        let protocol = self.protocol();
        let graph = match (&self.topology, self.nodes(seed)?) {
            (_, Some(file)) => CandidateGraph::geometric(&file.to_nodes(), &self.radio.into(), &protocol)?,
            (TopologySource::Explicit { node_count, gateway, links, in_range }, None) => {
                let links: Vec<ExplicitLink> = links
                    .iter()
                    .map(|l| ExplicitLink { a: l.a, b: l.b, ber: l.ber, per_packet: l.per_packet, per_ack: l.per_ack })
                    .collect();
                CandidateGraph::explicit(*node_count, *gateway, &links, in_range, &protocol)?
            }
            (_, None) => unreachable!("only explicit sources lack positions"),
        };
        Ok(Topology::build(graph)?)
    }
}
