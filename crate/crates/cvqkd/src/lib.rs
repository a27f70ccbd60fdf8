//! Std companion of `cvqkd-core`: file formats, configuration, code catalogs,
//! session orchestration, sweeps and the `cvqkd` command line.

pub mod catalog;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod sweep;

pub use catalog::{Catalog, CatalogEntry};
pub use config::{PaMode, SessionConfig};
pub use error::{LabError, LabResult};
pub use pipeline::{run_session, SessionReport};
