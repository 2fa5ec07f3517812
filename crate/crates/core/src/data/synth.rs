//! Seeded synthetic pedestrian tracks.
//!
//! Each track follows one kinematic law on the centroid, a linear law on the
//! box size (floored at 1 px), and optional Gaussian pixel noise added on top
//! of the clean path.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::track::{Track, DEFAULT_FRAME_RATE};
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::model::BBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    ConstantVelocity,
    ConstantAcceleration,
    Sinusoidal,
    StopAndGo,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::ConstantVelocity => "constant-velocity",
            SynthKind::ConstantAcceleration => "constant-acceleration",
            SynthKind::Sinusoidal => "sinusoidal",
            SynthKind::StopAndGo => "stop-and-go",
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-velocity" | "cv" => Ok(SynthKind::ConstantVelocity),
            "constant-acceleration" | "ca" => Ok(SynthKind::ConstantAcceleration),
            "sinusoidal" => Ok(SynthKind::Sinusoidal),
            "stop-and-go" => Ok(SynthKind::StopAndGo),
            _ => Err(Error::Config(format!("unknown synthetic kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// `(cx, cy, w, h)` at frame 0.
    pub start: [f64; 4],
    /// Centroid velocity, px/frame.
    pub velocity: [f64; 2],
    /// Centroid acceleration, px/frame^2 (constant-acceleration only).
    pub acceleration: [f64; 2],
    /// Width and height change, px/frame.
    pub size_rate: [f64; 2],
    /// Lateral amplitude (px) and period (frames) of the sinusoidal kind.
    pub amplitude: f64,
    pub period: f64,
    /// Walking and stopped segment length ranges (frames) for stop-and-go.
    pub walk_frames: (usize, usize),
    pub stop_frames: (usize, usize),
    pub length: usize,
    pub noise_std: f64,
    /// Per-track uniform perturbation of the start centroid (+- px) and of the
    /// velocity (+- px/frame).
    pub start_jitter: f64,
    pub velocity_jitter: f64,
    pub frame_rate_hz: f64,
    pub video_id: String,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::ConstantVelocity,
            start: [320.0, 240.0, 40.0, 100.0],
            velocity: [2.0, 1.0],
            acceleration: [0.02, 0.0],
            size_rate: [0.0, 0.0],
            amplitude: 20.0,
            period: 60.0,
            walk_frames: (20, 60),
            stop_frames: (10, 30),
            length: 150,
            noise_std: 0.0,
            start_jitter: 0.0,
            velocity_jitter: 0.0,
            frame_rate_hz: DEFAULT_FRAME_RATE,
            video_id: "synth".into(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self, min_length: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.length < min_length.max(1) {
            return bad(format!("track length {} is shorter than the {min_length} frames required", self.length));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if !(self.start[2] > 0.0 && self.start[3] > 0.0) {
            return bad("start box must have positive size".into());
        }
        if !(self.start_jitter >= 0.0 && self.velocity_jitter >= 0.0) {
            return bad("jitter ranges must be >= 0".into());
        }
        if self.kind == SynthKind::Sinusoidal && !(self.period > 0.0) {
            return bad("sinusoidal period must be positive".into());
        }
        if self.kind == SynthKind::StopAndGo
            && (self.walk_frames.0 == 0
                || self.stop_frames.0 == 0
                || self.walk_frames.0 > self.walk_frames.1
                || self.stop_frames.0 > self.stop_frames.1)
        {
            return bad("stop-and-go segment ranges must be non-empty and positive".into());
        }
        if !(self.frame_rate_hz > 0.0) {
            return bad("frame rate must be positive".into());
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            kind: kv.get_or("kind", d.kind)?,
            start: [
                kv.get_or("start_cx", d.start[0])?,
                kv.get_or("start_cy", d.start[1])?,
                kv.get_or("start_w", d.start[2])?,
                kv.get_or("start_h", d.start[3])?,
            ],
            velocity: [kv.get_or("vx", d.velocity[0])?, kv.get_or("vy", d.velocity[1])?],
            acceleration: [kv.get_or("ax", d.acceleration[0])?, kv.get_or("ay", d.acceleration[1])?],
            size_rate: [kv.get_or("dw", d.size_rate[0])?, kv.get_or("dh", d.size_rate[1])?],
            amplitude: kv.get_or("amplitude", d.amplitude)?,
            period: kv.get_or("period", d.period)?,
            walk_frames: (kv.get_or("walk_min", d.walk_frames.0)?, kv.get_or("walk_max", d.walk_frames.1)?),
            stop_frames: (kv.get_or("stop_min", d.stop_frames.0)?, kv.get_or("stop_max", d.stop_frames.1)?),
            length: kv.get_or("length", d.length)?,
            noise_std: kv.get_or("noise_std", d.noise_std)?,
            start_jitter: kv.get_or("start_jitter", d.start_jitter)?,
            velocity_jitter: kv.get_or("velocity_jitter", d.velocity_jitter)?,
            frame_rate_hz: kv.get_or("frame_rate", d.frame_rate_hz)?,
            video_id: kv.get_str("video_id").map_or(d.video_id, str::to_string),
            seed: kv.get_or("seed", d.seed)?,
        })
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("kind", self.kind.as_str());
        kv.set("start_cx", self.start[0]);
        kv.set("start_cy", self.start[1]);
        kv.set("start_w", self.start[2]);
        kv.set("start_h", self.start[3]);
        kv.set("vx", self.velocity[0]);
        kv.set("vy", self.velocity[1]);
        kv.set("ax", self.acceleration[0]);
        kv.set("ay", self.acceleration[1]);
        kv.set("dw", self.size_rate[0]);
        kv.set("dh", self.size_rate[1]);
        kv.set("amplitude", self.amplitude);
        kv.set("period", self.period);
        kv.set("walk_min", self.walk_frames.0);
        kv.set("walk_max", self.walk_frames.1);
        kv.set("stop_min", self.stop_frames.0);
        kv.set("stop_max", self.stop_frames.1);
        kv.set("length", self.length);
        kv.set("noise_std", self.noise_std);
        kv.set("start_jitter", self.start_jitter);
        kv.set("velocity_jitter", self.velocity_jitter);
        kv.set("frame_rate", self.frame_rate_hz);
        kv.set("video_id", &self.video_id);
        kv.set("seed", self.seed);
        kv
    }
}

fn clean_path(spec: &SynthSpec, start: [f64; 2], vel: [f64; 2], rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = spec.length;
    match spec.kind {
        SynthKind::ConstantVelocity => {
            (0..n).map(|i| [start[0] + vel[0] * i as f64, start[1] + vel[1] * i as f64]).collect()
        }
        SynthKind::ConstantAcceleration => (0..n)
            .map(|i| {
                let t = i as f64;
                [
                    start[0] + vel[0] * t + 0.5 * spec.acceleration[0] * t * t,
                    start[1] + vel[1] * t + 0.5 * spec.acceleration[1] * t * t,
                ]
            })
            .collect(),
        SynthKind::Sinusoidal => {
            let speed = vel[0].hypot(vel[1]);
            let lateral = if speed > 0.0 { [-vel[1] / speed, vel[0] / speed] } else { [1.0, 0.0] };
            (0..n)
                .map(|i| {
                    let t = i as f64;
                    let s = spec.amplitude * (std::f64::consts::TAU * t / spec.period).sin();
                    [start[0] + vel[0] * t + s * lateral[0], start[1] + vel[1] * t + s * lateral[1]]
                })
                .collect()
        }
        SynthKind::StopAndGo => {
            let mut out = Vec::with_capacity(n);
            let mut pos = start;
            let mut walking = true;
            let mut left = rng.gen_range(spec.walk_frames.0..=spec.walk_frames.1);
            for i in 0..n {
                if i > 0 {
                    if walking {
                        pos = [pos[0] + vel[0], pos[1] + vel[1]];
                    }
                    left -= 1;
                    if left == 0 {
                        walking = !walking;
                        let (lo, hi) = if walking { spec.walk_frames } else { spec.stop_frames };
                        left = rng.gen_range(lo..=hi);
                    }
                }
                out.push(pos);
            }
            out
        }
    }
}

/// Generates `count` tracks with ids `0..count`.
pub fn synth_tracks(spec: &SynthSpec, count: usize) -> Result<Vec<Track>> {
    spec.validate(1)?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tracks = Vec::with_capacity(count);
    for id in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let mut jitter = |r: f64| if r > 0.0 { rng.gen_range(-r..=r) } else { 0.0 };
        let start = [spec.start[0] + jitter(spec.start_jitter), spec.start[1] + jitter(spec.start_jitter)];
        let vel = [spec.velocity[0] + jitter(spec.velocity_jitter), spec.velocity[1] + jitter(spec.velocity_jitter)];
        let path = clean_path(spec, start, vel, &mut rng);

        let boxes = path
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let t = i as f64;
                let mut noise = [0.0; 4];
                for n in &mut noise {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *n = spec.noise_std * z;
                }
                let w = (spec.start[2] + spec.size_rate[0] * t).max(1.0);
                let h = (spec.start[3] + spec.size_rate[1] * t).max(1.0);
                BBox::new(i as i64, c[0] + noise[0], c[1] + noise[1], (w + noise[2]).max(1.0), (h + noise[3]).max(1.0))
            })
            .collect();
        tracks.push(Track::new(spec.video_id.clone(), id.to_string(), boxes, spec.frame_rate_hz)?);
    }
    Ok(tracks)
}
