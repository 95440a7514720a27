//! Solution dumps in JSON and CSV.
//!
//! JSON is the canonical format. The CSV variant writes the link table to the
//! requested path and the node table next to it as `<stem>.nodes.csv`. Floats
//! are written in shortest round-trip form, so both formats carry the exact
//! values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mh154_model::neighborhood::CollisionBreakdown;
use mh154_model::topology::Direction;
use mh154_model::{ModelSolution, SolverConfig, Topology};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DUMP_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub schema_version: u32,
    pub diagnostics: Diagnostics,
    pub links: Vec<LinkRecord>,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    /// Damping in effect when the solver stopped.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: usize,
    pub sender: usize,
    pub receiver: usize,
    pub direction: DirectionName,
    pub f: f64,
    pub p_send: f64,
    pub tau: f64,
    pub alpha: f64,
    pub p_noack: f64,
    pub r: f64,
    pub breakdown: BreakdownRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRecord {
    pub c: [f64; 7],
    pub a: [f64; 2],
    pub p_coll_packet: f64,
    pub p_lost_packet: f64,
    pub p_coll_ack: f64,
    pub p_lost_ack: f64,
    pub p_noack: f64,
    pub alpha_pkt: f64,
    pub alpha_ack: f64,
    pub alpha: f64,
    pub mutual_hidden: f64,
    pub mutual_visible: f64,
}

impl From<&CollisionBreakdown> for BreakdownRecord {
    fn from(b: &CollisionBreakdown) -> Self {
        BreakdownRecord {
            c: b.c,
            a: b.a,
            p_coll_packet: b.p_coll_packet,
            p_lost_packet: b.p_lost_packet,
            p_coll_ack: b.p_coll_ack,
            p_lost_ack: b.p_lost_ack,
            p_noack: b.p_noack,
            alpha_pkt: b.alpha_pkt,
            alpha_ack: b.alpha_ack,
            alpha: b.alpha,
            mutual_hidden: b.mutual_hidden,
            mutual_visible: b.mutual_visible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Nodes below this one in the routing tree.
    pub descendants: usize,
    pub r_up: f64,
    pub r_down: f64,
}

impl SolutionDump {
    pub fn new(topo: &Topology, sol: &ModelSolution, cfg: &SolverConfig) -> Self {
        let links = topo
            .links()
            .iter()
            .zip(&sol.links)
            .map(|(l, s)| LinkRecord {
                id: l.id,
                sender: l.sender,
                receiver: l.receiver,
                direction: match l.direction {
                    Direction::Up => DirectionName::Up,
                    Direction::Down => DirectionName::Down,
                },
                f: s.f,
                p_send: s.p_send,
                tau: s.tau,
                alpha: s.alpha,
                p_noack: s.p_noack,
                r: s.r,
                breakdown: (&s.breakdown).into(),
            })
            .collect();
        let tree = topo.tree();
        let nodes = (0..topo.node_count())
            .map(|id| NodeRecord {
                id,
                parent: tree.parent(id),
                depth: tree.depth(id),
                descendants: tree.descendants(id),
                r_up: sol.paths.r_up[id],
                r_down: sol.paths.r_down[id],
            })
            .collect();
        SolutionDump {
            schema_version: DUMP_SCHEMA,
            diagnostics: Diagnostics {
                converged: sol.converged,
                iterations: sol.iterations,
                final_residual: sol.final_residual,
                damping: sol.damping,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
            },
            links,
            nodes,
        }
    }

    /// Every probability in the dump, labelled for error messages.
    pub fn probabilities(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        let links = self.links.iter().flat_map(|l| {
            let b = &l.breakdown;
            let named = [
                ("p_send", l.p_send),
                ("tau", l.tau),
                ("alpha", l.alpha),
                ("p_noack", l.p_noack),
                ("r", l.r),
                ("p_coll_packet", b.p_coll_packet),
                ("p_lost_packet", b.p_lost_packet),
                ("p_coll_ack", b.p_coll_ack),
                ("p_lost_ack", b.p_lost_ack),
                ("breakdown.p_noack", b.p_noack),
                ("alpha_pkt", b.alpha_pkt),
                ("alpha_ack", b.alpha_ack),
                ("breakdown.alpha", b.alpha),
                ("mutual_hidden", b.mutual_hidden),
                ("mutual_visible", b.mutual_visible),
            ];
            let events = b.c.iter().chain(&b.a).map(|&v| ("event", v));
            named.into_iter().chain(events).map(move |(name, v)| (format!("link {} {name}", l.id), v))
        });
        let nodes = self
            .nodes
            .iter()
            .flat_map(|n| [(format!("node {} r_up", n.id), n.r_up), (format!("node {} r_down", n.id), n.r_down)]);
        links.chain(nodes)
    }

    pub fn write_json(&self, out: &mut impl Write) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut *out, self).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }

    pub fn write_link_csv(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        for l in &self.links {
            w.serialize(LinkRow::from(l))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_node_csv(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        for n in &self.nodes {
            w.serialize(n)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the dump to `path`; returns every file written.
    pub fn write(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let create = |p: &Path| {
            File::create(p).map(BufWriter::new).map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))
        };
        match format {
            Format::Json => {
                let mut f = create(path)?;
                self.write_json(&mut f)?;
                f.flush()?;
                Ok(vec![path.to_path_buf()])
            }
            Format::Csv => {
                let nodes = node_csv_path(path);
                self.write_link_csv(create(path)?)?;
                self.write_node_csv(create(&nodes)?)?;
                Ok(vec![path.to_path_buf(), nodes])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// `<dir>/<stem>.nodes.csv` for a link table at `<dir>/<stem>.<ext>`.
pub fn node_csv_path(links: &Path) -> PathBuf {
    let stem = links.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "solution".into());
    links.with_file_name(format!("{stem}.nodes.csv"))
}

/// Flat link row; nested breakdown fields get their own columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub id: usize,
    pub sender: usize,
    pub receiver: usize,
    pub direction: DirectionName,
    pub f: f64,
    pub p_send: f64,
    pub tau: f64,
    pub alpha: f64,
    pub p_noack: f64,
    pub r: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub a0: f64,
    pub a1: f64,
    pub p_coll_packet: f64,
    pub p_lost_packet: f64,
    pub p_coll_ack: f64,
    pub p_lost_ack: f64,
    pub breakdown_p_noack: f64,
    pub alpha_pkt: f64,
    pub alpha_ack: f64,
    pub breakdown_alpha: f64,
    pub mutual_hidden: f64,
    pub mutual_visible: f64,
}

impl From<&LinkRecord> for LinkRow {
    fn from(l: &LinkRecord) -> Self {
        let b = &l.breakdown;
        LinkRow {
            id: l.id,
            sender: l.sender,
            receiver: l.receiver,
            direction: l.direction,
            f: l.f,
            p_send: l.p_send,
            tau: l.tau,
            alpha: l.alpha,
            p_noack: l.p_noack,
            r: l.r,
            c0: b.c[0],
            c1: b.c[1],
            c2: b.c[2],
            c3: b.c[3],
            c4: b.c[4],
            c5: b.c[5],
            c6: b.c[6],
            a0: b.a[0],
            a1: b.a[1],
            p_coll_packet: b.p_coll_packet,
            p_lost_packet: b.p_lost_packet,
            p_coll_ack: b.p_coll_ack,
            p_lost_ack: b.p_lost_ack,
            breakdown_p_noack: b.p_noack,
            alpha_pkt: b.alpha_pkt,
            alpha_ack: b.alpha_ack,
            breakdown_alpha: b.alpha,
            mutual_hidden: b.mutual_hidden,
            mutual_visible: b.mutual_visible,
        }
    }
}

impl From<&LinkRow> for LinkRecord {
    fn from(r: &LinkRow) -> Self {
        LinkRecord {
            id: r.id,
            sender: r.sender,
            receiver: r.receiver,
            direction: r.direction,
            f: r.f,
            p_send: r.p_send,
            tau: r.tau,
            alpha: r.alpha,
            p_noack: r.p_noack,
            r: r.r,
            breakdown: BreakdownRecord {
                c: [r.c0, r.c1, r.c2, r.c3, r.c4, r.c5, r.c6],
                a: [r.a0, r.a1],
                p_coll_packet: r.p_coll_packet,
                p_lost_packet: r.p_lost_packet,
                p_coll_ack: r.p_coll_ack,
                p_lost_ack: r.p_lost_ack,
                p_noack: r.breakdown_p_noack,
                alpha_pkt: r.alpha_pkt,
                alpha_ack: r.alpha_ack,
                alpha: r.breakdown_alpha,
                mutual_hidden: r.mutual_hidden,
                mutual_visible: r.mutual_visible,
            },
        }
    }
}
