//! Way-point sufficient conditions for non-singularity of the
//! control-to-propagator map in bilinear quantum control
//! `i dU/dt = (H0 − ε(t) μ) U`.
//!
//! The conjugated dipole `μ̂(t) = U*(t,0) μ U(t,0)` makes the map non-singular
//! when its values span the traceless Hermitian matrices. This crate builds
//! way-point sets of unitaries that guarantee the span, checks it numerically,
//! and synthesizes piecewise-constant controls whose propagator visits them.

pub mod cli;
pub mod codec;
pub mod error;
pub mod evolve;
pub mod landscape;
pub mod matspace;
pub mod model;
pub mod reachability;
pub mod steer;
pub mod waypoints;

pub use nalgebra;

pub use error::{Error, Result};
pub use evolve::{
    conjugated_dipole, evolve_density, expectation, propagate, ControlField, DensityMatrix,
    PropagatorTrajectory,
};
pub use landscape::{
    gradient, kinematic_residual, spanning_rank, trajectory_independence, waypoint_visits,
    GradientVector, SpanReport, VisitRecord,
};
pub use matspace::{
    basis_zt, embed_2x2, hs_inner, submatrix_2x2, to_coords, CMatrix, HermitianZT, UnitaryMatrix,
    ZtBasis, C64,
};
pub use model::{check_hypotheses, load_system, save_system, HypothesisReport, QuantumSystem};
pub use reachability::{is_controllable, lie_closure, Controllability, LieClosureResult};
pub use steer::{
    synthesize_through_waypoints, synthesize_to_target, SteerOptions, SynthesisResult,
    WaypointSynthesis,
};
pub use waypoints::{
    default_theta_grid, lemma1_check, separating_unitary, theorem1_waypoints, theorem3_waypoints,
    Provenance, SeparatingWitness, ThetaGrid, WaypointSet,
};
