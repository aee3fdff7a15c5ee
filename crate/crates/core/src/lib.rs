//! Bearing-only consensus and formation control.
//!
//! Simulates the nonsmooth gradient flows `ẋ = H(u - u*)` and `ẋ = H₊(u - u*)`
//! for single-integrator agents that only sense unit bearings, monitors their
//! Lyapunov functions, and computes the quantitative certificates around them:
//! the `ν` constant and finite-time bound, rigidity ranks, Jacobian spectra,
//! Fermat-point equilibria and bearing-persistence witnesses.

pub mod analysis;
pub mod controllers;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod parallel;
pub mod scenario;
pub mod sim;

pub use controllers::{velocity, ControllerFamily, ControllerKind, Topology, VelocityField};
pub use error::{Error, Result};
pub use geometry::{BearingTarget, Formation, PairRelation};
pub use graph::DirectedGraph;
pub use parallel::Execution;
pub use sim::{simulate, SimConfig, StopReason, Trajectory};
