//! Run configuration, manifests, CSV tables and SVG plots.

mod config;
mod manifest;
pub mod svg;
mod tables;

use sha2::{Digest, Sha256};

pub use config::RunConfig;
pub use manifest::{RunManifest, MANIFEST_FILE, MANIFEST_SCHEMA, SUBSTITUTIONS};
pub use tables::{find_trajectories, read_learning_curve, read_rows, write_learning_curve, write_rows, write_table};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
