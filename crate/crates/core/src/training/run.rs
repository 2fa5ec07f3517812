//! Run-directory layout for a training job.
//!
//! ```text
//! <dir>/config.txt                  configuration echo
//! <dir>/<name>.weights              final weights
//! <dir>/<name>_history.csv          per-epoch losses
//! <dir>/checkpoints/<name>_last.weights
//! <dir>/checkpoints/<name>_best.weights   lowest epoch training loss so far
//! ```

use std::path::{Path, PathBuf};

use crate::data::MiniTrack;
use crate::error::Result;
use crate::model::ModelParams;
use crate::training::config::TrainConfig;
use crate::training::trainer::{train_with, TrainHistory};
use crate::training::weights::save_model;

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub weights: PathBuf,
    pub history: PathBuf,
    pub last_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
}

pub fn train_run(
    cfg: &TrainConfig,
    minitracks: &[MiniTrack],
    dir: &Path,
    name: &str,
    config_echo: &str,
) -> Result<(ModelParams<f64>, TrainHistory, RunArtifacts)> {
    let ckpt = dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt)?;
    std::fs::write(dir.join("config.txt"), config_echo)?;
    let art = RunArtifacts {
        weights: dir.join(format!("{name}.weights")),
        history: dir.join(format!("{name}_history.csv")),
        last_checkpoint: ckpt.join(format!("{name}_last.weights")),
        best_checkpoint: ckpt.join(format!("{name}_best.weights")),
    };
    let mut best = f64::INFINITY;
    let (params, history) = train_with(cfg, minitracks, |stats, params| {
        save_model(params, config_echo, &art.last_checkpoint)?;
        if stats.loss < best {
            best = stats.loss;
            save_model(params, config_echo, &art.best_checkpoint)?;
        }
        Ok(())
    })?;
    save_model(&params, config_echo, &art.weights)?;
    history.write_csv(std::io::BufWriter::new(std::fs::File::create(&art.history)?))?;
    Ok((params, history, art))
}
