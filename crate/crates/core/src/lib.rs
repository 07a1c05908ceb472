//! Simulation and analysis of digital memcomputing machines.
//!
//! A factorization problem is compiled into an array multiplier, encoded as
//! clauses, and evolved as a continuous-time dynamical system whose
//! voltages carry the literals and whose memory variables weight the
//! clauses. On top of the dynamics the crate provides ensemble correlation
//! analysis over the literal graph and a low-dimensional laboratory for
//! signed intersection numbers on instanton families.

pub mod cli;
pub mod cnf;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod netlist;
pub mod stats;
pub mod toy;

pub use cnf::{encode_cnf, ClauseSystem, Lit};
pub use error::{Error, Result};
pub use graph::{graph_distance, literal_graph, LiteralGraph};
pub use netlist::{build_multiplier, GateKind, GateNetlist};
