//! `run.json` records: the resolved config, checksums of every input file
//! and the tool/layout versions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use slackcast::{Error, Result};

#[derive(Serialize)]
struct Versions {
    slackcast: &'static str,
    checkpoint: &'static str,
    phi_layout: &'static str,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    subcommand: &'a str,
    config: &'a Value,
    inputs: BTreeMap<String, String>,
    versions: Versions,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Directory for one run: `<results>/<subcommand>-<first 12 hex of sha256(config)>`.
pub fn run_dir(results: &Path, subcommand: &str, config: &Value) -> PathBuf {
    let digest = hex::encode(Sha256::digest(config.to_string().as_bytes()));
    results.join(format!("{}-{}", subcommand.replace(' ', "-"), &digest[..12]))
}

/// Writes `run.json` into `dir`; `inputs` are files (a directory input
/// contributes each of its regular files).
pub fn write_run(dir: &Path, subcommand: &str, config: &Value, inputs: &[PathBuf]) -> Result<PathBuf> {
    let mut sums = BTreeMap::new();
    for p in inputs {
        if p.is_dir() {
            let mut names: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.is_file())
                .collect();
            names.sort();
            for q in names {
                sums.insert(q.display().to_string(), sha256_file(&q)?);
            }
        } else {
            sums.insert(p.display().to_string(), sha256_file(p)?);
        }
    }
    let record = RunRecord {
        subcommand,
        config,
        inputs: sums,
        versions: Versions {
            slackcast: env!("CARGO_PKG_VERSION"),
            checkpoint: slackcast::model::CHECKPOINT_VERSION,
            phi_layout: slackcast_stage1::LAYOUT_VERSION,
        },
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("run.json");
    slackcast::jsonl::write_json(&path, &record)?;
    Ok(path)
}
