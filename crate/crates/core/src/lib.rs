//! Random billiards driven by the four-branch random reflection law.
//!
//! The crate covers the reflection law itself ([`feres`]), the exact
//! reachable-angle Markov chains it induces ([`reachable`]), billiard
//! dynamics on the circle ([`circle`]) and in the pipeline ([`pipeline`]),
//! and the evolution of angle distributions toward μ(dθ) = ½ sin θ dθ
//! ([`measure`]).

pub mod angle;
pub mod circle;
pub mod error;
pub mod export;
pub mod feres;
pub mod measure;
pub mod pipeline;
pub mod quadrature;
pub mod reachable;
pub mod rng;
pub mod stats;

pub use angle::{AngleSpec, BaseAngle, BaseForm};
pub use circle::{CausticEstimate, JacobianAccumulator, PhasePoint, Trajectory};
pub use error::{Error, Result};
pub use feres::{BranchId, BranchProbabilities};
pub use measure::{AngleDensity, InvariantIntervalFamily, Reference, SkewState};
pub use pipeline::{PipelineJacobian, PipelineState, PipelineTrajectory, Wall};
pub use reachable::{ReachableSet, SymbolicAngle, TransitionMatrix};
