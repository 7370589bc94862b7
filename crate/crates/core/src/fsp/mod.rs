//! Finite state projection: truncated spaces, surrogate generators and the
//! adaptive, error-budgeted CME solver.

pub mod adaptive;
pub mod generator;
pub mod space;
pub mod sparse;

pub use adaptive::{solve_cme_adaptive, AdaptiveFspConfig, Checkpoint, FspSolution};
pub use generator::{
    assemble_generator, assemble_time_varying, fsp_error_mass, SparseGenerator,
    TimeVaryingGenerator,
};
pub use space::{
    build_rectangle_space, constrained_space, constraints_cover_bound, default_constraints,
    expand_state_set, FidelityBound, LinearConstraint, TruncatedStateSpace,
};
pub use sparse::CsrMatrix;
