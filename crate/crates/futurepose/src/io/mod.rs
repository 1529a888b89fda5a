//! Interchange formats and report writers: dataset text files, binary
//! checkpoints, run configuration documents, CSV metric logs, and SVG
//! stick-figure renderings.

mod checkpoint;
mod config;
mod csv;
mod dataset;
mod svg;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{parse_run_config, write_run_config};
pub use csv::{accuracy_csv, confusion_csv, eval_csv, metrics_csv, METRICS_CSV_HEADER};
pub use dataset::{format_dataset, load_dataset, parse_dataset, save_dataset, Dataset};
pub use svg::render_strips;

use crate::Result;
use std::path::Path;

/// Writes a file atomically: the bytes land under a temporary name and are
/// renamed into place, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => path.with_file_name(format!("{}.tmp", name.to_string_lossy())),
        None => path.with_extension("tmp"),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
