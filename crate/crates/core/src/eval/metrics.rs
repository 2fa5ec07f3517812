//! Centroid displacement metrics. Width and height never enter a score.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::BoxSequence;

fn check(pred: &BoxSequence, gt: &BoxSequence) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::dimension("displacement", format!("{} steps", gt.len()), format!("{} steps", pred.len())));
    }
    if gt.is_empty() {
        return Err(Error::Empty("displacement"));
    }
    Ok(())
}

/// Per-step centroid Euclidean distance.
pub fn displacements(pred: &BoxSequence, gt: &BoxSequence) -> Result<Vec<f64>> {
    check(pred, gt)?;
    Ok(pred.rows.iter().zip(&gt.rows).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
}

pub fn ade(pred: &BoxSequence, gt: &BoxSequence) -> Result<f64> {
    let d = displacements(pred, gt)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

pub fn fde(pred: &BoxSequence, gt: &BoxSequence) -> Result<f64> {
    fde_at(pred, gt, gt.len())
}

/// Displacement at 1-based step `t`.
pub fn fde_at(pred: &BoxSequence, gt: &BoxSequence, t: usize) -> Result<f64> {
    check(pred, gt)?;
    if t == 0 || t > gt.len() {
        return Err(Error::Index { step: t, max: gt.len() });
    }
    let (a, b) = (pred.rows[t - 1], gt.rows[t - 1]);
    Ok((a[0] - b[0]).hypot(a[1] - b[1]))
}

/// Aggregate scores over a set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub ade: f64,
    pub fde: f64,
    /// Mean displacement at every 1-based step.
    pub fde_at: BTreeMap<usize, f64>,
    pub n_samples: usize,
    pub p: usize,
    pub k: usize,
    /// Predicted boxes with width or height <= 0.
    pub non_positive_sizes: usize,
}

impl MetricReport {
    /// Builds a report from per-sample displacement vectors of equal length.
    pub fn from_displacements(per_sample: &[Vec<f64>], k: usize, non_positive_sizes: usize) -> Result<Self> {
        let first = per_sample.first().ok_or_else(|| Error::Config("no samples to evaluate".into()))?;
        let p = first.len();
        if p == 0 {
            return Err(Error::Empty("displacement"));
        }
        let mut sums = vec![0.0; p];
        let mut ade_sum = 0.0;
        for d in per_sample {
            if d.len() != p {
                return Err(Error::dimension("MetricReport", format!("{p} steps"), format!("{} steps", d.len())));
            }
            for (s, v) in sums.iter_mut().zip(d) {
                *s += v;
            }
            ade_sum += d.iter().sum::<f64>() / p as f64;
        }
        let n = per_sample.len() as f64;
        let fde_at: BTreeMap<usize, f64> = sums.iter().enumerate().map(|(i, s)| (i + 1, s / n)).collect();
        Ok(Self {
            ade: ade_sum / n,
            fde: fde_at[&p],
            fde_at,
            n_samples: per_sample.len(),
            p,
            k,
            non_positive_sizes,
        })
    }

    /// Scores of the first `h` steps only, as if the horizon were `h`.
    pub fn truncated(&self, h: usize) -> Result<Self> {
        if h == 0 || h > self.p {
            return Err(Error::Index { step: h, max: self.p });
        }
        let fde_at: BTreeMap<usize, f64> = self.fde_at.range(1..=h).map(|(k, v)| (*k, *v)).collect();
        Ok(Self {
            ade: fde_at.values().sum::<f64>() / h as f64,
            fde: fde_at[&h],
            fde_at,
            n_samples: self.n_samples,
            p: h,
            k: self.k,
            non_positive_sizes: self.non_positive_sizes,
        })
    }

    pub fn fde_at_step(&self, t: usize) -> Result<f64> {
        self.fde_at.get(&t).copied().ok_or(Error::Index { step: t, max: self.p })
    }
}

pub const METRICS_HEADER: &str = "label,n_samples,k,p,ade,fde,non_positive_sizes";

pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[(String, MetricReport)]) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for (label, r) in rows {
        writeln!(out, "{label},{},{},{},{},{},{}", r.n_samples, r.k, r.p, r.ade, r.fde, r.non_positive_sizes)?;
    }
    Ok(())
}

/// Per-step mean displacement, for plotting error against horizon.
pub fn write_per_step_csv<W: Write>(mut out: W, report: &MetricReport) -> Result<()> {
    writeln!(out, "step,mean_displacement")?;
    for (t, v) in &report.fde_at {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}
