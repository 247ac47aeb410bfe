//! Sampling discretization and recovery in Orlicz spaces.

pub mod chaining;
pub mod config;
pub mod density;
pub mod discretization;
pub mod error;
pub mod measure;
pub mod norm;
pub mod optimize;
pub mod phi;
pub mod recovery;
pub mod runner;
pub mod seeding;
pub mod subspace;

pub use error::{Error, Result};
pub use measure::{DiscreteMeasure, SampledFunction};
pub use phi::{PhiFunction, PhiSpec};
