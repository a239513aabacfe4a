use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes `path` through a temporary file in the same directory, renaming it
/// into place only after `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h)?;
    Ok(format!("{:x}", h.finalize()))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub flags: serde_json::Value,
    pub threads: usize,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub duration_seconds: f64,
}

/// Collects what a run read and wrote, then emits one manifest per output.
pub struct Run {
    subcommand: String,
    flags: serde_json::Value,
    seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    /// (path, gets its own manifest)
    outputs: Vec<(PathBuf, bool)>,
    started: Instant,
}

impl Run {
    pub fn new<F: Serialize>(subcommand: &str, flags: &F) -> Result<Self> {
        Ok(Run {
            subcommand: subcommand.to_string(),
            flags: serde_json::to_value(flags)?,
            seed: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn builtin_input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), format!("{:x}", Sha256::digest(bytes)));
    }

    pub fn write<F>(&mut self, path: &Path, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        write_atomic(path, fill)?;
        self.outputs.push((path.to_path_buf(), true));
        Ok(())
    }

    /// Companion file listed in the manifests of the other outputs.
    pub fn write_aux_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        self.write_json(path, value)?;
        if let Some(last) = self.outputs.last_mut() {
            last.1 = false;
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        self.write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// Writes `<output>.manifest.json` next to every output, or a single
    /// `manifest.json` when `dir` is given.
    pub fn finish(self, dir: Option<&Path>) -> Result<()> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand.clone(),
            flags: self.flags.clone(),
            threads: rayon::current_num_threads(),
            inputs: self
                .inputs
                .iter()
                .map(|(p, d)| InputDigest {
                    path: p.clone(),
                    sha256: d.clone(),
                })
                .collect(),
            outputs: self.outputs.iter().map(|(p, _)| p.display().to_string()).collect(),
            seed: self.seed,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let write = |path: PathBuf| {
            write_atomic(&path, |w| {
                serde_json::to_writer_pretty(&mut *w, &manifest)?;
                w.write_all(b"\n")?;
                Ok(())
            })
        };
        match dir {
            Some(d) => write(d.join("manifest.json"))?,
            None => {
                for (out, _) in self.outputs.iter().filter(|(_, own)| *own) {
                    let mut name = out.as_os_str().to_owned();
                    name.push(".manifest.json");
                    write(PathBuf::from(name))?;
                }
            }
        }
        Ok(())
    }
}
