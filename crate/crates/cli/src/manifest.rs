use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use densam::genbench::{sha256_hex, ExperimentConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

impl OutputFile {
    pub fn write(path: &Path, bytes: &[u8]) -> io::Result<Self> {
        fs::write(path, bytes)?;
        Ok(OutputFile {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        })
    }
}

/// Record of one sweep run. Written last, so its presence means every
/// listed output is complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub library_version: String,
    pub seeds: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub cells: usize,
    pub cells_ok: usize,
    pub outputs: Vec<OutputFile>,
    pub exit_status: u8,
}

impl RunManifest {
    /// Writes to a temporary sibling and renames it into place.
    pub fn write_atomic(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)
    }
}
