//! Model, cohort and atlas documents, CSV tables and legacy VTK input.

mod documents;
mod tables;
mod vtk;

pub use documents::*;
pub use tables::*;
pub use vtk::{parse_vtk, read_vtk};

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
