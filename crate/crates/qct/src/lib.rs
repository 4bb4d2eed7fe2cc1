//! Qubit routing with supervised-learning-enhanced SWAP selection.
//!
//! The crate transforms logical circuits (CNOT sequences) into physical
//! circuits that respect a device's coupling graph by inserting SWAP gates.
//! It ships a greedy baseline router, a depth-d look-ahead search router, a
//! Monte Carlo tree search router, and variants of all three that consult a
//! policy network trained on labeled shallow circuits. See the `examples/`
//! directory for one runnable walkthrough per capability.

pub mod arch;
pub mod circuit;
pub mod error;
pub mod fixtures;
pub mod mcts;
pub mod policy;
pub mod qasm;
pub mod route;
pub mod sahs;

mod state;

pub use arch::{ArchGraph, DistanceMatrix};
pub use circuit::{Circuit, Gate, GateKind};
pub use route::{Mapping, RoutingResult};
