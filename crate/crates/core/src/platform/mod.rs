//! Running-system plumbing shared by the server, the CLI and the Python
//! bindings: checkpoint files, SMILES corpus ingestion, background
//! optimization jobs and atomic file output.

mod checkpoint;
mod dataset;
mod jobs;

use std::io::{self, Write};
use std::path::Path;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, model_version, save_checkpoint, CheckpointError,
    TrainingMetadata, FORMAT_VERSION, MAGIC,
};
pub use dataset::{ingest_dataset, ingest_str, DatasetEntry, DatasetError, IngestReport, Rejection};
pub use jobs::{JobError, JobState, JobStore, OptimizeJob};

/// Write `bytes` to a temporary file next to `path`, then rename it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
