//! Write-once output files: identical reruns are no-ops, differing content
//! needs `--force`, and every write is atomic.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use phaseprobe::datagen::{
    load_dataset, save_dataset, write_atomic, write_dataset_csv, LabeledDataset,
};
use phaseprobe::models::{load_checkpoint, save_checkpoint, Checkpoint, TrainConfig};

fn refuse(path: &Path) -> Result<()> {
    bail!(
        "{} already exists with different contents (pass --force to replace it)",
        path.display()
    )
}

/// Write `bytes` unless the file already holds exactly them.
pub fn put(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    if let Ok(existing) = std::fs::read(path) {
        if existing == bytes {
            return Ok(());
        }
        if !force {
            return refuse(path);
        }
    }
    Ok(write_atomic(path, bytes)?)
}

/// Store a dataset as the binary container plus a CSV export next to it.
pub fn put_dataset(ds: &LabeledDataset, path: &Path, force: bool) -> Result<()> {
    if path.exists() {
        let same = load_dataset(path).map(|old| old == *ds).unwrap_or(false);
        if !same && !force {
            return refuse(path);
        }
        if same && path.with_extension("csv").exists() {
            return Ok(());
        }
    }
    save_dataset(ds, path)?;
    write_dataset_csv(ds, &path.with_extension("csv"))?;
    Ok(())
}

pub fn put_checkpoint(
    ckpt: &Checkpoint,
    config: &TrainConfig,
    path: &Path,
    force: bool,
) -> Result<()> {
    if path.exists() {
        let same = load_checkpoint(path)
            .map(|(c, m)| c == *ckpt && m.config == *config)
            .unwrap_or(false);
        if same {
            return Ok(());
        }
        if !force {
            return refuse(path);
        }
    }
    Ok(save_checkpoint(ckpt, config, path)?)
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("step-{step:010}.ppck"))
}

/// Checkpoint files in a directory, sorted by step.
pub fn list_checkpoints(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e).with_context(|| format!("reading {}", dir.display())),
    };
    for entry in entries {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(step) = name
            .strip_prefix("step-")
            .and_then(|s| s.strip_suffix(".ppck"))
            .and_then(|s| s.parse().ok())
        {
            out.push((step, path));
        }
    }
    out.sort();
    Ok(out)
}
