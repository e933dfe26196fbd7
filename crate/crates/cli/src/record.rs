use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything written for one invocation. `results` depends only on the
/// input and flags; `wall_time_s` does not.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub flags: Vec<String>,
    pub input_hash: String,
    pub wall_time_s: f64,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn new(command: &str, flags: Vec<String>, input: &[u8]) -> Self {
        RunRecord {
            tool: "specshift",
            version: VERSION,
            command: command.to_string(),
            flags,
            input_hash: sha256_hex(input),
            wall_time_s: 0.0,
            results: serde_json::Value::Null,
            warnings: Vec::new(),
        }
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.wall_time_s = elapsed.as_secs_f64();
    }

    /// Comment lines prefixed to CSV output.
    pub fn csv_header(&self) -> String {
        let mut h = format!(
            "# specshift {} {}\n# input sha256 {}\n",
            self.version, self.command, self.input_hash
        );
        for w in &self.warnings {
            h.push_str(&format!("# warning: {w}\n"));
        }
        h
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
