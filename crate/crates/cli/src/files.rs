//! Output plumbing: atomic writes, input digests and the run manifest.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Write through a temporary file in the target directory, then rename it
/// into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(InputDigest { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub subcommand: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

/// `<out>.manifest.json` next to the primary output.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_manifest<C: Serialize>(out: &Path, manifest: &Manifest<'_, C>) -> Result<PathBuf> {
    let path = manifest_path(out);
    write_atomic(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, manifest).map_err(|e| CliError::io(out, e.into()))?;
        writeln!(w).map_err(|e| CliError::io(out, e))
    })?;
    Ok(path)
}
