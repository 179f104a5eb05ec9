//! Output directory bookkeeping: written files, their hashes, stage timings,
//! the run manifest, and cleanup of partial outputs on failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Outputs {
    dir: PathBuf,
    /// Paths created by this run, removed again if it fails.
    created: Vec<PathBuf>,
    files: Vec<(String, String, u64)>,
    stages: Vec<(String, f64)>,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let mut created = Vec::new();
        if !dir.exists() {
            let mut top = dir.to_path_buf();
            while let Some(parent) = top.parent().filter(|p| !p.as_os_str().is_empty() && !p.exists()) {
                top = parent.to_path_buf();
            }
            fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
            created.push(top);
        }
        // a stale manifest must not vouch for files this run overwrites
        let stale = dir.join(MANIFEST);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| Failure::io(&stale, e))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            created,
            files: Vec::new(),
            stages: Vec::new(),
        })
    }

    /// Runs one pipeline stage, timing it and naming it in any error.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> mtvar_core::Result<T>) -> CliResult<T> {
        let start = Instant::now();
        let out = f().map_err(|e| Failure::staged(name, e))?;
        self.stages.push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }

    /// Times a stage whose errors are already command failures.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let out = f()?;
        self.stages.push((name.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        if !path.exists() {
            self.created.push(path.clone());
        }
        fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
        self.record(name, contents.as_bytes());
        Ok(())
    }

    /// Takes ownership of a file or directory filled by a library writer.
    pub fn adopt(&mut self, name: &str, fill: impl FnOnce(&Path) -> mtvar_core::Result<()>) -> CliResult<()> {
        let path = self.dir.join(name);
        if !path.exists() {
            self.created.push(path.clone());
        }
        fill(&path).map_err(|e| Failure::staged(&format!("write {name}"), e))?;
        let mut files = Vec::new();
        if path.is_dir() {
            collect_files(&path, &mut files).map_err(|e| Failure::io(&path, e))?;
        } else {
            files.push(path.clone());
        }
        files.sort();
        for f in files {
            let bytes = fs::read(&f).map_err(|e| Failure::io(&f, e))?;
            let rel = f.strip_prefix(&self.dir).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            self.record(&rel, &bytes);
        }
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.files.push((name.to_string(), sha256_hex(bytes), bytes.len() as u64));
    }

    /// Writes the manifest last; only a finished run has one.
    pub fn finish(mut self, command: &str, config: Value, inputs: Value) -> CliResult<()> {
        let outputs: Vec<Value> = self
            .files
            .iter()
            .map(|(path, sha, bytes)| json!({ "path": path, "sha256": sha, "bytes": bytes }))
            .collect();
        let stages: Vec<Value> = self
            .stages
            .iter()
            .map(|(name, secs)| json!({ "stage": name, "seconds": secs }))
            .collect();
        let manifest = json!({
            "tool": "mtvar",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "inputs": inputs,
            "stages": stages,
            "outputs": outputs,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        self.created.clear();
        Ok(())
    }

    /// Removes everything this run created.
    pub fn discard(self) {
        for p in self.created.iter().rev() {
            if p.is_dir() {
                let _ = fs::remove_dir_all(p);
            } else {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Content hash of an input file or of every file under an input directory.
pub fn hash_input(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, &mut files).map_err(|e| Failure::io(path, e))?;
        files.sort();
        let mut h = Sha256::new();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            h.update(rel.as_bytes());
            h.update([0]);
            h.update(fs::read(&f).map_err(|e| Failure::io(&f, e))?);
            h.update([0]);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    } else {
        Ok(sha256_hex(&fs::read(path).map_err(|e| Failure::io(path, e))?))
    }
}
