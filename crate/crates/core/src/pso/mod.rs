//! Modified particle swarm optimizer and its use on the per-cell problem.

mod intra_cell;
mod swarm;

pub use intra_cell::{solve_intra_cell, IntraCell, IntraCellSolution};
pub use swarm::{pso_minimize, PsoConfig, PsoOutcome, SearchBox};
