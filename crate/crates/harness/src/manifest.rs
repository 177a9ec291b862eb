//! Run manifests: what was run, with which seeds, and the hash of every
//! file it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use neuralbayes::io::write_atomic;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiments::{charts_for, run, Artifacts};
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub config_hash: String,
    pub code_version: String,
    pub seeds: BTreeMap<String, u64>,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
    /// The full configuration, so the run can be repeated from the manifest alone.
    pub config_toml: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&self.config_toml)
    }

    pub fn csv_files(&self) -> impl Iterator<Item = &FileRecord> {
        self.files.iter().filter(|f| f.path.ends_with(".csv"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Serialized outputs of a run: CSVs, SVGs rendered from the CSV bytes, and
/// any other files.
pub fn render(art: &Artifacts) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    for (name, table) in &art.tables {
        if !table.all_finite() {
            return Err(HarnessError::Orchestration(format!(
                "{name} contains a non-finite cell"
            )));
        }
        let bytes = table.to_csv()?;
        for (svg, chart) in charts_for(name, &Table::from_csv(&bytes)?)? {
            files.insert(svg, chart.render().into_bytes());
        }
        files.insert(name.clone(), bytes);
    }
    for (name, bytes) in &art.extra {
        files.insert(name.clone(), bytes.clone());
    }
    Ok(files)
}

/// Runs an experiment, writes every output into `out` and finishes with the
/// manifest.
pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let art = run(cfg)?;
    let files = render(&art)?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut records = Vec::new();
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
        records.push(FileRecord {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        id: cfg.id.clone(),
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: art.seeds,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: records,
        config_toml: cfg.to_toml()?,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&out.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

/// Outcome of repeating a manifest.
#[derive(Debug, Clone)]
pub struct Reproduction {
    pub checked: Vec<String>,
    pub rerun: Manifest,
}

/// Repeats the run recorded in `manifest` into `out` and requires every CSV
/// to be byte-identical to the recorded one.
pub fn reproduce(manifest: &Manifest, out: &Path) -> Result<Reproduction> {
    let cfg = manifest.config()?;
    if cfg.hash() != manifest.config_hash {
        return Err(HarnessError::Reproduction(format!(
            "embedded configuration hashes to {} but the manifest records {}",
            cfg.hash(),
            manifest.config_hash
        )));
    }
    let rerun = execute(&cfg, out)?;
    let fresh: BTreeMap<&str, &FileRecord> = rerun.files.iter().map(|f| (f.path.as_str(), f)).collect();
    let mut checked = Vec::new();
    for old in manifest.csv_files() {
        match fresh.get(old.path.as_str()) {
            Some(new) if new.sha256 == old.sha256 => checked.push(old.path.clone()),
            Some(new) => {
                return Err(HarnessError::Reproduction(format!(
                    "{} differs: recorded {}, reproduced {}",
                    old.path, old.sha256, new.sha256
                )))
            }
            None => return Err(HarnessError::Reproduction(format!("{} was not reproduced", old.path))),
        }
    }
    Ok(Reproduction { checked, rerun })
}

/// Default manifest location for a run directory.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.join(MANIFEST_FILE)
}
