//! Deterministic file emission: CSV tables, two-column plot data and the
//! run manifest, each written through a temporary file and a rename.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Full-precision decimal (17 significant digits).
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

fn write_atomic(path: &Path, data: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// An output directory that records every file written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write(&mut self, name: &str, data: &[u8]) -> io::Result<()> {
        write_atomic(&self.root.join(name), data)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: data.len() as u64,
            sha256: sha256_hex(data),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Whitespace-separated `x y` pairs under a `#` comment line.
    pub fn write_plot(&mut self, name: &str, comment: &str, points: &[(f64, f64)]) -> io::Result<()> {
        let mut text = format!("# {comment}\n");
        for (x, y) in points {
            text.push_str(&format!("{} {}\n", float(*x), float(*y)));
        }
        self.write(name, text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ChecksFailed,
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub status: RunStatus,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub config: RunConfig,
    pub checks: Vec<CheckOutcome>,
    pub files: Vec<FileEntry>,
    /// Set when a step failed; the emitted files then cover the completed steps only.
    pub partial: Option<String>,
}

pub fn now_unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, started_unix_ms: u128) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            status: RunStatus::Ok,
            started_unix_ms,
            finished_unix_ms: started_unix_ms,
            config: config.clone(),
            checks: Vec::new(),
            files: Vec::new(),
            partial: None,
        }
    }

    /// Takes the file inventory from `out` and writes `manifest.json` last.
    pub fn finish(mut self, out: &OutputDir) -> io::Result<Self> {
        self.files = out.files().to_vec();
        self.finished_unix_ms = now_unix_ms();
        let json = serde_json::to_string_pretty(&self).map_err(io::Error::other)?;
        write_atomic(&out.root().join("manifest.json"), json.as_bytes())?;
        Ok(self)
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }
}
