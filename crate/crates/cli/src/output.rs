//! Output directory, CSV/JSON writers and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use cyberlab::graph::Graph;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub runs: u64,
    pub threads: usize,
    pub config: ExperimentConfig,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

/// Collects outputs and stage timings for one run.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    stages: Vec<StageTiming>,
}

impl Outputs {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            stages: Vec::new(),
        })
    }

    /// Runs `f` and records its duration under `name`.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
        let start = Instant::now();
        let out = f().with_context(|| format!("stage `{name}`"))?;
        self.stages.push(StageTiming {
            stage: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn register(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> anyhow::Result<()> {
        let path = self.register(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.register(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn text(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.register(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    pub fn edge_list(&mut self, name: &str, g: &Graph) -> anyhow::Result<()> {
        let path = self.register(name);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf)?;
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))
    }

    pub fn into_parts(self) -> (PathBuf, Vec<String>, Vec<StageTiming>) {
        (self.dir, self.files, self.stages)
    }
}

/// Writes the manifest through a temporary file and a rename.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<PathBuf> {
    let path = dir.join(MANIFEST);
    let tmp = dir.join(format!(".{MANIFEST}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?;
    f.write_all(serde_json::to_string_pretty(manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.sync_all()?;
    fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let path = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
