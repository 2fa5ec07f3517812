//! Fixed-length training windows, fold assignment and frame-rate reduction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::track::Track;
use crate::error::{Error, Result};
use crate::model::{BBox, Sample};

/// A contiguous `k + p` slice of a track.
#[derive(Clone, Debug, PartialEq)]
pub struct MiniTrack {
    pub video_id: String,
    pub track_id: String,
    pub start_frame: i64,
    pub boxes: Vec<BBox>,
    /// Box on the frame right before `start_frame`, when the track has one.
    pub predecessor: Option<BBox>,
}

impl MiniTrack {
    /// Splits into the observed `k` boxes and the future, building the
    /// supervised sample.
    pub fn to_sample(&self, k: usize) -> Result<Sample> {
        if k == 0 || k >= self.boxes.len() {
            return Err(Error::Input(format!(
                "mini-track of {} boxes cannot be split at k = {k}",
                self.boxes.len()
            )));
        }
        Sample::new(&self.boxes[..k], self.predecessor.as_ref(), &self.boxes[k..])
    }

    pub fn past(&self, k: usize) -> &[BBox] {
        &self.boxes[..k]
    }

    pub fn future(&self, k: usize) -> &[BBox] {
        &self.boxes[k..]
    }
}

/// Windows of `window` boxes starting at offsets `0, stride, 2*stride, ...`
/// while a full window fits.
pub fn slice_minitracks(track: &Track, window: usize, stride: usize) -> Result<Vec<MiniTrack>> {
    if window == 0 || stride == 0 {
        return Err(Error::Config(format!("window ({window}) and stride ({stride}) must be positive")));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + window <= track.boxes.len() {
        out.push(MiniTrack {
            video_id: track.video_id.clone(),
            track_id: track.track_id.clone(),
            start_frame: track.boxes[start].frame,
            boxes: track.boxes[start..start + window].to_vec(),
            predecessor: start.checked_sub(1).map(|i| track.boxes[i]),
        });
        start += stride;
    }
    Ok(out)
}

pub fn slice_all(tracks: &[Track], window: usize, stride: usize) -> Result<Vec<MiniTrack>> {
    let mut out = Vec::new();
    for t in tracks {
        out.extend(slice_minitracks(t, window, stride)?);
    }
    Ok(out)
}

/// Assignment of whole tracks to folds.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldSplit {
    pub n_folds: usize,
    pub seed: u64,
    /// Track keys (`video/track`) per fold.
    pub folds: Vec<Vec<String>>,
}

impl FoldSplit {
    pub fn fold_of(&self, key: &str) -> Option<usize> {
        self.folds.iter().position(|f| f.iter().any(|k| k == key))
    }

    /// `(train, test)` tracks for the given held-out fold.
    pub fn partition<'a>(&self, tracks: &'a [Track], fold: usize) -> (Vec<&'a Track>, Vec<&'a Track>) {
        let test = &self.folds[fold];
        tracks.iter().partition(|t| !test.contains(&t.key()))
    }
}

/// Seeded shuffle of the tracks followed by round-robin assignment.
pub fn split_folds(tracks: &[Track], n: usize, seed: u64) -> Result<FoldSplit> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {n}")));
    }
    let mut keys: Vec<String> = tracks.iter().map(Track::key).collect();
    keys.sort();
    keys.dedup();
    if keys.len() < n {
        return Err(Error::Config(format!("{} tracks cannot fill {n} folds", keys.len())));
    }
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); n];
    for (i, k) in keys.into_iter().enumerate() {
        folds[i % n].push(k);
    }
    Ok(FoldSplit { n_folds: n, seed, folds })
}

/// Keeps frames `0, factor, 2*factor, ...` renumbered consecutively from the
/// first frame; the frame rate is divided by `factor`.
pub fn subsample(track: &Track, factor: usize) -> Result<Track> {
    if factor == 0 {
        return Err(Error::Config("subsampling factor must be at least 1".into()));
    }
    let first = track.boxes.first().map_or(0, |b| b.frame);
    let boxes = track
        .boxes
        .iter()
        .step_by(factor)
        .enumerate()
        .map(|(i, b)| BBox { frame: first + i as i64, ..*b })
        .collect();
    Ok(Track {
        video_id: track.video_id.clone(),
        track_id: track.track_id.clone(),
        boxes,
        frame_rate_hz: track.frame_rate_hz / factor as f64,
    })
}
