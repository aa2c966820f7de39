pub mod atlas;
pub mod centerline;
pub mod cli;
pub mod cohort;
pub mod coords;
pub mod error;
pub mod io;
pub mod mesh;
pub mod model;
pub mod splines;
pub mod synthetic;

pub use error::{Result, VcsError};
