//! Output directory bookkeeping and the `run.json` manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files into one directory and remembers their digests.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.file != name);
        self.files.push(OutputFile { file: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub status: &'a str,
    pub exit_code: i32,
    pub message: Option<String>,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub config: &'a RunConfig,
    pub seed: u64,
    pub workers: usize,
    pub exploratory: bool,
    pub hypothesis_violations: &'a [String],
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

impl Manifest<'_> {
    /// Writes `run.json`; the manifest lists every other output.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(dir.join("run.json"), text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn rewriting_a_file_keeps_one_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::create(&dir.path().join("a/b")).unwrap();
        out.write("x.csv", b"1").unwrap();
        out.write("x.csv", b"22").unwrap();
        assert_eq!(out.files().len(), 1);
        assert_eq!(out.files()[0].bytes, 2);
        assert_eq!(fs::read(dir.path().join("a/b/x.csv")).unwrap(), b"22");
    }
}
