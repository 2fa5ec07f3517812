//! One model per loss mode, scored at several horizons.

use std::io::Write;

use crate::data::MiniTrack;
use crate::error::{Error, Result};
use crate::eval::evaluate::evaluate;
use crate::model::LossMode;
use crate::training::{train, TrainConfig};

pub const DEFAULT_HORIZONS: [usize; 4] = [15, 30, 45, 60];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AblationCell {
    pub mode: LossMode,
    pub horizon: usize,
    pub ade: f64,
    pub fde: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    pub modes: Vec<LossMode>,
    pub horizons: Vec<usize>,
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn get(&self, mode: LossMode, horizon: usize) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.mode == mode && c.horizon == horizon)
    }

    /// One row per horizon, ADE and FDE columns per mode.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["horizon".to_string()];
        for m in &self.modes {
            header.push(format!("{m}_ade"));
            header.push(format!("{m}_fde"));
        }
        writeln!(out, "{}", header.join(","))?;
        for h in &self.horizons {
            let mut row = vec![h.to_string()];
            for m in &self.modes {
                let c = self.get(*m, *h).expect("complete table");
                row.push(c.ade.to_string());
                row.push(c.fde.to_string());
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn truncate(minitracks: &[MiniTrack], len: usize) -> Vec<MiniTrack> {
    minitracks
        .iter()
        .map(|m| MiniTrack { boxes: m.boxes[..len.min(m.boxes.len())].to_vec(), ..m.clone() })
        .collect()
}

/// Trains one model per mode with the shared seed in `cfg`. Without
/// `retrain_per_horizon` the `cfg.p` model is scored at shorter horizons by
/// truncating its predictions; with it, a separate model is trained for each
/// horizon.
pub fn ablation_run(
    cfg: &TrainConfig,
    train_set: &[MiniTrack],
    test_set: &[MiniTrack],
    modes: &[LossMode],
    horizons: &[usize],
    retrain_per_horizon: bool,
) -> Result<AblationTable> {
    if modes.is_empty() || horizons.is_empty() {
        return Err(Error::Config("ablation needs at least one mode and one horizon".into()));
    }
    if let Some(h) = horizons.iter().find(|h| **h == 0 || **h > cfg.p) {
        return Err(Error::Config(format!("horizon {h} outside 1..={}", cfg.p)));
    }
    let mut cells = Vec::new();
    for &mode in modes {
        if retrain_per_horizon {
            for &h in horizons {
                let c = TrainConfig { mode, p: h, ..cfg.clone() };
                let (params, _) = train(&c, &truncate(train_set, c.k + h))?;
                let r = evaluate(&params, &truncate(test_set, c.k + h), c.k)?;
                cells.push(AblationCell { mode, horizon: h, ade: r.ade, fde: r.fde });
            }
        } else {
            let c = TrainConfig { mode, ..cfg.clone() };
            let (params, _) = train(&c, train_set)?;
            let full = evaluate(&params, test_set, c.k)?;
            for &h in horizons {
                let r = full.truncated(h)?;
                cells.push(AblationCell { mode, horizon: h, ade: r.ade, fde: r.fde });
            }
        }
    }
    Ok(AblationTable { modes: modes.to_vec(), horizons: horizons.to_vec(), cells })
}
