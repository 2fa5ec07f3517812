use crate::data::MiniTrack;
use crate::error::{Error, Result};
use crate::eval::metrics::{displacements, MetricReport};
use crate::eval::predictor::Predictor;
use crate::model::BoxSequence;

/// Predicts from the first `k` boxes of each mini-track and scores against
/// the remaining `p`.
pub fn evaluate<P: Predictor + ?Sized>(predictor: &P, minitracks: &[MiniTrack], k: usize) -> Result<MetricReport> {
    if minitracks.is_empty() {
        return Err(Error::Config("no mini-tracks to evaluate".into()));
    }
    let p = predictor.horizon();
    let mut per_sample = Vec::with_capacity(minitracks.len());
    let mut non_positive = 0;
    for m in minitracks {
        if m.boxes.len() < k + p {
            return Err(Error::Input(format!(
                "mini-track {}/{} at frame {} has {} boxes, need {}",
                m.video_id,
                m.track_id,
                m.start_frame,
                m.boxes.len(),
                k + p
            )));
        }
        let pred = predictor.predict(&m.boxes[..k], m.predecessor.as_ref())?;
        non_positive += pred.rows.iter().filter(|r| r[2] <= 0.0 || r[3] <= 0.0).count();
        let gt = BoxSequence::from_boxes(&m.boxes[k..k + p]);
        per_sample.push(displacements(&pred, &gt)?);
    }
    MetricReport::from_displacements(&per_sample, k, non_positive)
}

/// Per-fold reports and the unweighted mean of per-fold means.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidationReport {
    pub folds: Vec<MetricReport>,
    pub mean_ade: f64,
    pub mean_fde: f64,
}

impl CrossValidationReport {
    pub fn from_folds(folds: Vec<MetricReport>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Config("no folds to aggregate".into()));
        }
        let n = folds.len() as f64;
        let mean_ade = folds.iter().map(|r| r.ade).sum::<f64>() / n;
        let mean_fde = folds.iter().map(|r| r.fde).sum::<f64>() / n;
        Ok(Self { folds, mean_ade, mean_fde })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{slice_all, synth_tracks, SynthSpec};
    use crate::eval::predictor::{Baseline, BaselineKind};
    use crate::model::BBox;

    struct Oracle {
        v: [f64; 2],
        p: usize,
    }

    impl Predictor for Oracle {
        fn horizon(&self) -> usize {
            self.p
        }

        fn predict(&self, past: &[BBox], _: Option<&BBox>) -> Result<BoxSequence> {
            let l = past.last().unwrap();
            Ok(BoxSequence { rows: (1..=self.p).map(|t| [l.cx + self.v[0] * t as f64, l.cy + self.v[1] * t as f64, l.w, l.h]).collect() })
        }
    }

    fn cv_minitracks() -> Vec<MiniTrack> {
        let spec = SynthSpec { start_jitter: 30.0, length: 150, seed: 8, ..Default::default() };
        slice_all(&synth_tracks(&spec, 5).unwrap(), 90, 30).unwrap()
    }

    #[test]
    fn perfect_stub_scores_zero() {
        let r = evaluate(&Oracle { v: [2.0, 1.0], p: 60 }, &cv_minitracks(), 30).unwrap();
        assert_eq!((r.ade, r.fde, r.n_samples), (0.0, 0.0, 15));
    }

    #[test]
    fn stationary_closed_form() {
        let r = evaluate(&Baseline { kind: BaselineKind::Stationary, p: 60 }, &cv_minitracks(), 30).unwrap();
        for t in 1..=60 {
            assert!((r.fde_at[&t] - t as f64 * 5f64.sqrt()).abs() < 1e-9);
        }
        assert!((r.ade - 30.5 * 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn means_match_independent_recomputation() {
        let spec = SynthSpec { noise_std: 3.0, length: 100, seed: 2, ..Default::default() };
        let m = slice_all(&synth_tracks(&spec, 4).unwrap(), 12, 7).unwrap();
        let pred = Baseline { kind: BaselineKind::ConstantVelocity, p: 4 };
        let r = evaluate(&pred, &m, 8).unwrap();
        let (mut ade, mut fde) = (0.0, 0.0);
        for mt in &m {
            let out = pred.predict(&mt.boxes[..8], None).unwrap();
            let mut s = 0.0;
            for i in 0..4 {
                let g = mt.boxes[8 + i];
                let d = ((out.rows[i][0] - g.cx).powi(2) + (out.rows[i][1] - g.cy).powi(2)).sqrt();
                s += d;
                if i == 3 {
                    fde += d;
                }
            }
            ade += s / 4.0;
        }
        let n = m.len() as f64;
        assert!((r.ade - ade / n).abs() < 1e-9);
        assert!((r.fde - fde / n).abs() < 1e-9);
    }

    #[test]
    fn empty_and_short() {
        let b = Baseline { kind: BaselineKind::Stationary, p: 60 };
        assert!(matches!(evaluate(&b, &[], 30), Err(Error::Config(_))));
        assert!(matches!(evaluate(&b, &cv_minitracks(), 40), Err(Error::Input(_))));
    }

    #[test]
    fn fold_mean_of_means() {
        let mk = |a| MetricReport::from_displacements(&[vec![a, a]], 1, 0).unwrap();
        let cv = CrossValidationReport::from_folds(vec![mk(1.0), mk(2.0), mk(6.0)]).unwrap();
        assert_eq!((cv.mean_ade, cv.mean_fde), (3.0, 3.0));
    }
}
