//! Dissimilarity between dynamical systems measured against a library of
//! canonical archetypes.
//!
//! A target's trajectories are compared with an archetype's after a learned
//! change of coordinates `Φ` (the time-1 flow of a small ReLU network). The
//! result is a pair: the trajectory mismatch that remains, and the mean
//! deviation of `Φ`'s Jacobian from the identity.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod archetypes;
pub mod diffeo;
pub mod error;
pub mod field;
pub mod perturb;
pub mod scalar;
pub mod score;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod targets;
pub mod train;

pub use archetypes::{ArchetypeParams, SystemKind, TrainableParam};
pub use error::{DaaError, Result};
pub use field::VectorField;
pub use scalar::Real;

pub type SystemSpec = archetypes::SystemSpec<f64>;
pub type TargetSpec = targets::TargetSpec<f64>;
pub type TrajectoryBatch = sim::TrajectoryBatch<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type DiffeoModel = diffeo::DiffeoModel<f64>;
pub type PerturbationSpec = perturb::PerturbationSpec<f64>;
pub type FitConfig = train::FitConfig<f64>;
pub type FitResult = train::FitResult<f64>;
pub type ScoreMatrix = score::ScoreMatrix<f64>;
