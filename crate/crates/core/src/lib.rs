//! Simulation of quantum-walk pathfinding on welded-tree-path graphs and of
//! the classical oracle games it is compared against.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, experiment
//! sweeps and the command line live in the `wpl` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classical;
pub mod ctqw;
pub mod graph;
pub mod oracle;
pub mod pathfinder;
mod union_find;

pub use classical::{theoretical_bound, GameOutcome, Referee, Strategy};
pub use ctqw::{evolve, hit_probability, measure, Hamiltonian, Propagator, PropagatorConfig, QuantumState};
pub use graph::{
    GraphParams, LabeledGraph, VertexId, VertexName, VertexRole, Violation, WeldedTree, WeldedTreePathGraph,
};
pub use oracle::{Oracle, QueryLedger, Response};
pub use pathfinder::{find_path, verify_path, PathResult, PathfinderConfig};
