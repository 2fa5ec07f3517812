use crate::error::{Error, Result};
use crate::model::{predict, BBox, BoxSequence, ModelParams};
use crate::tensor::Real;

/// Anything that forecasts `horizon()` boxes from past boxes.
pub trait Predictor: Sync {
    fn horizon(&self) -> usize;

    fn predict(&self, past: &[BBox], predecessor: Option<&BBox>) -> Result<BoxSequence>;
}

impl<T: Real + Sync> Predictor for ModelParams<T> {
    fn horizon(&self) -> usize {
        self.dims.p
    }

    fn predict(&self, past: &[BBox], predecessor: Option<&BBox>) -> Result<BoxSequence> {
        predict(self, past, predecessor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    ConstantVelocity,
    ConstantAcceleration,
    Stationary,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] =
        [BaselineKind::ConstantVelocity, BaselineKind::ConstantAcceleration, BaselineKind::Stationary];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::ConstantVelocity => "constant-velocity",
            BaselineKind::ConstantAcceleration => "constant-acceleration",
            BaselineKind::Stationary => "stationary",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-velocity" | "cv" => Ok(BaselineKind::ConstantVelocity),
            "constant-acceleration" | "ca" => Ok(BaselineKind::ConstantAcceleration),
            "stationary" => Ok(BaselineKind::Stationary),
            _ => Err(Error::Config(format!("unknown baseline `{s}`"))),
        }
    }
}

/// Extrapolates all four box coordinates from the last observed steps.
///
/// * constant velocity: `x_N + t v`, `v = x_N - x_{N-1}`
/// * constant acceleration: `x_N + t v + a t (t + 1) / 2`, with
///   `a = x_N - 2 x_{N-1} + x_{N-2}`
/// * stationary: `x_N`
pub fn baseline_predict(kind: BaselineKind, past: &[BBox], p: usize) -> Result<BoxSequence> {
    let need = match kind {
        BaselineKind::ConstantVelocity => 2,
        BaselineKind::ConstantAcceleration => 3,
        BaselineKind::Stationary => 1,
    };
    if past.len() < need {
        return Err(Error::Input(format!("{} baseline needs {need} past boxes, got {}", kind.as_str(), past.len())));
    }
    let n = past.len();
    let last = past[n - 1].coords();
    let mut v = [0.0; 4];
    let mut a = [0.0; 4];
    if need >= 2 {
        let prev = past[n - 2].coords();
        for j in 0..4 {
            v[j] = last[j] - prev[j];
        }
    }
    if need == 3 {
        let (prev, prev2) = (past[n - 2].coords(), past[n - 3].coords());
        for j in 0..4 {
            a[j] = last[j] - 2.0 * prev[j] + prev2[j];
        }
    }
    let rows = (1..=p)
        .map(|t| {
            let t = t as f64;
            let mut r = [0.0; 4];
            for j in 0..4 {
                r[j] = last[j] + t * v[j] + a[j] * t * (t + 1.0) / 2.0;
            }
            r
        })
        .collect();
    Ok(BoxSequence { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Baseline {
    pub kind: BaselineKind,
    pub p: usize,
}

impl Predictor for Baseline {
    fn horizon(&self) -> usize {
        self.p
    }

    fn predict(&self, past: &[BBox], _predecessor: Option<&BBox>) -> Result<BoxSequence> {
        baseline_predict(self.kind, past, self.p)
    }
}
