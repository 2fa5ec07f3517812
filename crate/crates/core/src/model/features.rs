//! Box geometry and the 8-d per-frame feature rows fed to the encoder.

use crate::error::{Error, Result};

/// One detection: centroid and size in pixels at a frame index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub frame: i64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(frame: i64, cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { frame, cx, cy, w, h }
    }

    /// Builds a box from corner coordinates `(x1, y1, x2, y2)`.
    pub fn from_corners(frame: i64, x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { frame, cx: 0.5 * (x1 + x2), cy: 0.5 * (y1 + y2), w: x2 - x1, h: y2 - y1 }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::Validation(format!("frame {}: non-finite centroid", self.frame)));
        }
        if !(self.w > 0.0 && self.h > 0.0 && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::Validation(format!(
                "frame {}: width and height must be positive, got {}x{}",
                self.frame, self.w, self.h
            )));
        }
        Ok(())
    }
}

/// Model input: `k` rows of `(cx, cy, w, h, dcx, dcy, dw, dh)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWindow {
    rows: Vec<[f64; 8]>,
}

impl FeatureWindow {
    pub fn from_rows(rows: Vec<[f64; 8]>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; 8]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(cx, cy, w, h)` of the last observed frame, the anchor of the
    /// trajectory concatenation layer.
    pub fn anchor(&self) -> Option<[f64; 4]> {
        self.rows.last().map(|r| [r[0], r[1], r[2], r[3]])
    }
}

pub fn build_features(boxes: &[BBox], predecessor: Option<&BBox>) -> Result<FeatureWindow> {
    if boxes.is_empty() {
        return Err(Error::Empty("build_features"));
    }
    let mut prev = match predecessor {
        Some(p) => {
            p.validate()?;
            if p.frame + 1 != boxes[0].frame {
                return Err(Error::FrameGap { previous: p.frame, found: boxes[0].frame });
            }
            Some(p)
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(boxes.len());
    for b in boxes {
        b.validate()?;
        let u = b.coords();
        let mut row = [u[0], u[1], u[2], u[3], 0.0, 0.0, 0.0, 0.0];
        if let Some(p) = prev {
            if p.frame + 1 != b.frame {
                return Err(Error::FrameGap { previous: p.frame, found: b.frame });
            }
            let q = p.coords();
            for j in 0..4 {
                row[4 + j] = u[j] - q[j];
            }
        }
        rows.push(row);
        prev = Some(b);
    }
    Ok(FeatureWindow { rows })
}

/// Time-reversed window with the change terms negated: the target the
/// auto-decoder learns to reproduce.
pub fn reconstruction_target(window: &FeatureWindow) -> FeatureWindow {
    let rows = window
        .rows
        .iter()
        .rev()
        .map(|r| [r[0], r[1], r[2], r[3], -r[4], -r[5], -r[6], -r[7]])
        .collect();
    FeatureWindow { rows }
}

/// Per-step `(dcx, dcy, dw, dh)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSequence {
    pub rows: Vec<[f64; 4]>,
}

/// Per-step absolute `(cx, cy, w, h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSequence {
    pub rows: Vec<[f64; 4]>,
}

impl BoxSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_boxes(boxes: &[BBox]) -> Self {
        Self { rows: boxes.iter().map(BBox::coords).collect() }
    }

    /// Keeps the first `n` steps.
    pub fn truncated(&self, n: usize) -> Self {
        Self { rows: self.rows[..n.min(self.rows.len())].to_vec() }
    }
}

/// Parameter-free cumulative sum: `O_1 = anchor + V_1`, `O_i = O_{i-1} + V_i`.
pub fn concat_trajectory(deltas: &DeltaSequence, anchor: [f64; 4]) -> Result<BoxSequence> {
    if deltas.rows.is_empty() {
        return Err(Error::Empty("concat_trajectory"));
    }
    let mut cur = anchor;
    let rows = deltas
        .rows
        .iter()
        .map(|d| {
            for j in 0..4 {
                cur[j] += d[j];
            }
            cur
        })
        .collect();
    Ok(BoxSequence { rows })
}
