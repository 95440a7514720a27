//! Analytical performance model for IEEE 802.15.4 multi-hop networks running
//! unslotted CSMA/CA.
//!
//! The model couples four parts that are solved together as a fixed point:
//!
//! - [`traffic_distribution`]: per-link offered rates from the routing tree and
//!   the current link reliabilities,
//! - [`csma_chain`]: the CSMA/CA Markov chain that turns a pending-packet
//!   probability into a channel-sensing probability,
//! - [`neighborhood`]: collision and busy-channel probabilities derived from the
//!   per-link conflict sets,
//! - [`reliability`]: the absorbing retransmission chain that yields link and
//!   path reliabilities.
//!
//! [`topology`] and [`analog_model`] are evaluated once up front, and
//! [`solver`] iterates the coupled system to convergence.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analog_model;
pub mod csma_chain;
mod error;
pub mod linalg;
pub mod model_config;
pub mod neighborhood;
pub mod reliability;
pub mod solver;
pub mod topology;
pub mod traffic_distribution;

pub use error::{Error, Result};
pub use model_config::{DerivedTiming, ProtocolParams, TrafficParams};
pub use solver::{LinkState, ModelSolution, SolverConfig};
pub use topology::{LinkId, NodeId, Topology};
