//! Sagittal-plane musculoskeletal biped: rigid-body dynamics with compliant
//! ground contact, two actuation variants (series-elastic passive model and
//! stiff geared torque model), a learning environment, a desk-scale
//! model-based agent, and gait analysis.

pub mod actuation;
pub mod agent;
pub mod analysis;
pub mod contact;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod io;
pub mod models;
pub mod rng;

pub use error::{Error, Result};
