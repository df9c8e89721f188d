//! Outputs are staged in memory and written together, so a failed run
//! leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes everything under `dir`, removing what was written if any
    /// file fails.
    pub fn commit(self, dir: &Path) -> Result<(), CliError> {
        let mut written: Vec<PathBuf> = Vec::new();
        let mut created_dirs: Vec<PathBuf> = Vec::new();
        let result = (|| -> std::io::Result<()> {
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                if let Some(parent) = path.parent() {
                    if !parent.exists() {
                        fs::create_dir_all(parent)?;
                        created_dirs.push(parent.to_path_buf());
                    }
                }
                let tmp = path.with_extension("partial");
                fs::write(&tmp, bytes)?;
                written.push(tmp.clone());
                fs::rename(&tmp, &path)?;
                *written.last_mut().expect("just pushed") = path;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for p in written {
                let _ = fs::remove_file(p);
            }
            for d in created_dirs.into_iter().rev() {
                let _ = fs::remove_dir(d);
            }
            return Err(CliError::Data(format!(
                "writing outputs to {}: {e}",
                dir.display()
            )));
        }
        Ok(())
    }
}

pub fn require_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}

#[derive(Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes a file, or every regular file of a directory in name order.
pub fn hash_input(path: &Path) -> Result<Vec<InputHash>, CliError> {
    let read = |p: &Path| fs::read(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())));
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        entries
            .iter()
            .map(|p| {
                Ok(InputHash {
                    path: p.display().to_string(),
                    sha256: hex(&Sha256::digest(read(p)?)),
                })
            })
            .collect()
    } else {
        Ok(vec![InputHash {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(read(path)?)),
        }])
    }
}

impl<C: Serialize> Manifest<C> {
    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))
    }
}
