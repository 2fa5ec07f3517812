use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use trajcast_core::data::{slice_all, split_folds, synth_tracks, write_tracks_file, SynthSpec, Track};
use trajcast_core::eval::{
    ablation_run, benchmark_tps, evaluate, write_bench_csv, write_metrics_csv, write_per_step_csv, Baseline,
    BaselineKind, CrossValidationReport, MetricReport, REFERENCE_TPS,
};
use trajcast_core::kv::KvMap;
use trajcast_core::model::{predict, LossMode, ModelDims, ModelParams};
use trajcast_core::training::{load_model, train_run, TrainConfig};
use trajcast_core::{Error, Result};

use crate::settings::{echo_path, input_path, load_tracks, required, write_echo};

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

fn owned(tracks: Vec<&Track>) -> Vec<Track> {
    tracks.into_iter().cloned().collect()
}

pub fn synth(kv: &KvMap) -> Result<()> {
    let spec = SynthSpec::from_kv(kv)?;
    let count: usize = kv.get_or("count", 20)?;
    let out = PathBuf::from(required(kv, "out")?);
    let tracks = synth_tracks(&spec, count)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_tracks_file(&out, &tracks)?;
    write_echo(&echo_path(&out), kv)?;
    eprintln!("wrote {count} tracks of {} frames to {}", spec.length, out.display());
    Ok(())
}

pub fn train(kv: &KvMap) -> Result<()> {
    let cfg = TrainConfig::from_kv(kv)?;
    cfg.validate()?;
    let stride: usize = kv.get_or("stride", 30)?;
    let folds: usize = kv.get_or("folds", 0)?;
    let dir = PathBuf::from(required(kv, "out")?);
    let tracks = load_tracks(kv)?;
    let window = cfg.k + cfg.p;
    let echo = kv.to_text();
    std::fs::create_dir_all(&dir)?;

    if folds == 0 {
        let minitracks = slice_all(&tracks, window, stride)?;
        eprintln!("training on {} mini-tracks from {} tracks", minitracks.len(), tracks.len());
        let (params, history, art) = train_run(&cfg, &minitracks, &dir, "model", &echo)?;
        let report = evaluate(&params, &minitracks, cfg.k)?;
        write_metrics_csv(create(&dir.join("metrics.csv"))?, &[("train".into(), report)])?;
        eprintln!("final loss {:.4}; weights in {}", history.last_loss().unwrap_or(f64::NAN), art.weights.display());
        return Ok(());
    }

    let split = split_folds(&tracks, folds, cfg.seed)?;
    let mut assign = create(&dir.join("folds.csv"))?;
    writeln!(assign, "fold,track")?;
    for (i, keys) in split.folds.iter().enumerate() {
        for k in keys {
            writeln!(assign, "{i},{k}")?;
        }
    }
    assign.flush()?;
    let mut rows = Vec::new();
    for fold in 0..folds {
        let (tr, te) = split.partition(&tracks, fold);
        let train_set = slice_all(&owned(tr), window, stride)?;
        let test_set = slice_all(&owned(te), window, stride)?;
        eprintln!("fold {fold}: {} training, {} held-out mini-tracks", train_set.len(), test_set.len());
        let (params, _, _) = train_run(&cfg, &train_set, &dir, &format!("fold{fold}"), &echo)?;
        rows.push((format!("fold{fold}"), evaluate(&params, &test_set, cfg.k)?));
    }
    let cv = CrossValidationReport::from_folds(rows.iter().map(|r| r.1.clone()).collect())?;
    let mut out = create(&dir.join("cv_metrics.csv"))?;
    write_metrics_csv(&mut out, &rows)?;
    let n: usize = rows.iter().map(|r| r.1.n_samples).sum();
    let nonpos: usize = rows.iter().map(|r| r.1.non_positive_sizes).sum();
    writeln!(out, "mean_of_fold_means,{n},{},{},{},{},{nonpos}", cfg.k, cfg.p, cv.mean_ade, cv.mean_fde)?;
    out.flush()?;
    eprintln!("cross-validation ADE {:.3} FDE {:.3} (mean of per-fold means)", cv.mean_ade, cv.mean_fde);
    Ok(())
}

pub fn predict_cmd(kv: &KvMap) -> Result<()> {
    let (params, _) = load_model(&input_path(kv, "weights")?)?;
    let tracks = load_tracks(kv)?;
    let out_path = PathBuf::from(required(kv, "out")?);
    let k = params.dims.k;
    let mut out = create(&out_path)?;
    writeln!(out, "video_id,track_id,step,cx,cy,w,h")?;
    let mut written = 0;
    for t in &tracks {
        if t.len() < k {
            eprintln!("warning: skipping {}: {} frames, need {k}", t.key(), t.len());
            continue;
        }
        let n = t.len();
        let pred = predict(&params, &t.boxes[n - k..], (n > k).then(|| &t.boxes[n - k - 1]))?;
        for (i, r) in pred.rows.iter().enumerate() {
            writeln!(out, "{},{},{},{},{},{},{}", t.video_id, t.track_id, i + 1, r[0], r[1], r[2], r[3])?;
        }
        written += 1;
    }
    out.flush()?;
    write_echo(&echo_path(&out_path), kv)?;
    if written == 0 {
        return Err(Error::Input(format!("no track has the {k} frames needed for a prediction")));
    }
    eprintln!("predicted {written} of {} tracks", tracks.len());
    Ok(())
}

fn with_horizons(label: &str, report: MetricReport, horizons: &[usize], rows: &mut Vec<(String, MetricReport)>) -> Result<()> {
    for &h in horizons {
        if h < report.p {
            rows.push((format!("{label}@{h}"), report.truncated(h)?));
        }
    }
    rows.push((label.to_string(), report));
    Ok(())
}

pub fn eval(kv: &KvMap) -> Result<()> {
    let stride: usize = kv.get_or("stride", 30)?;
    let out_path = PathBuf::from(required(kv, "out")?);
    let horizons: Vec<usize> = kv.get_list("horizons")?.unwrap_or_default();
    let tracks = load_tracks(kv)?;
    let mut rows = Vec::new();

    let (k, p) = match kv.get_str("baseline").filter(|s| !s.is_empty() && *s != "none") {
        Some(b) => {
            let k: usize = kv.get_or("k", 30)?;
            let predictor = Baseline { kind: b.parse()?, p: kv.get_or("p", 60)? };
            let m = slice_all(&tracks, k + predictor.p, stride)?;
            with_horizons(predictor.kind.as_str(), evaluate(&predictor, &m, k)?, &horizons, &mut rows)?;
            (k, predictor.p)
        }
        None => {
            let (params, _) = load_model(&input_path(kv, "weights")?)?;
            let (k, p) = (params.dims.k, params.dims.p);
            let m = slice_all(&tracks, k + p, stride)?;
            let report = evaluate(&params, &m, k)?;
            if let Some(path) = kv.get_str("per_step").filter(|s| !s.is_empty()) {
                write_per_step_csv(create(Path::new(path))?, &report)?;
            }
            with_horizons("model", report, &horizons, &mut rows)?;
            (k, p)
        }
    };
    if kv.get_or("baselines", false)? {
        let m = slice_all(&tracks, k + p, stride)?;
        for kind in BaselineKind::ALL {
            with_horizons(kind.as_str(), evaluate(&Baseline { kind, p }, &m, k)?, &horizons, &mut rows)?;
        }
    }
    write_metrics_csv(create(&out_path)?, &rows)?;
    write_echo(&echo_path(&out_path), kv)?;
    for (label, r) in &rows {
        eprintln!("{label}: ADE {:.3} FDE {:.3} over {} samples", r.ade, r.fde, r.n_samples);
    }
    Ok(())
}

pub fn bench(kv: &KvMap) -> Result<()> {
    let params: ModelParams<f32> = match kv.get_str("weights").filter(|s| !s.is_empty() && *s != "none") {
        Some(_) => load_model(&input_path(kv, "weights")?)?.0.cast(),
        None => {
            let cfg = TrainConfig::from_kv(kv)?;
            let dims = ModelDims { k: cfg.k, p: cfg.p, hidden: cfg.hidden, latent: cfg.latent, decoder_init: cfg.decoder_init };
            dims.validate()?;
            ModelParams::<f64>::init(dims, cfg.seed).cast()
        }
    };
    let threads: Vec<usize> = kv.get_list("threads")?.unwrap_or_else(|| vec![1]);
    let seconds: f64 = kv.get_or("duration", 5.0)?;
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::Config(format!("duration must be positive, got {seconds}")));
    }
    let out_path = PathBuf::from(required(kv, "out")?);
    let mut reports = Vec::new();
    for &n in &threads {
        let r = benchmark_tps(&params, n, Duration::from_secs_f64(seconds), kv.get_or("seed", 0)?)?;
        eprintln!("{n} thread(s): {:.2} trajectories/s, {:.0} equivalent fps", r.trajectories_per_second, r.equivalent_fps);
        reports.push(r);
    }
    let refs: Vec<String> = REFERENCE_TPS.iter().map(|(t, v)| format!("{t} cores: {v}")).collect();
    eprintln!("reference points (trajectories/s): {}", refs.join(", "));
    write_bench_csv(create(&out_path)?, &reports)?;
    write_echo(&echo_path(&out_path), kv)?;
    Ok(())
}

pub fn ablate(kv: &KvMap) -> Result<()> {
    let cfg = TrainConfig::from_kv(kv)?;
    cfg.validate()?;
    let stride: usize = kv.get_or("stride", 30)?;
    let folds: usize = kv.get_or("folds", 3)?;
    let test_fold: usize = kv.get_or("test_fold", 0)?;
    if test_fold >= folds {
        return Err(Error::Config(format!("test_fold {test_fold} must be below folds {folds}")));
    }
    let horizons: Vec<usize> = kv.get_list("horizons")?.unwrap_or_else(|| vec![15, 30, 45, 60]);
    let modes: Vec<LossMode> = kv.get_list("modes")?.unwrap_or_else(|| LossMode::ALL.to_vec());
    let retrain: bool = kv.get_or("retrain_per_horizon", false)?;
    let out_path = PathBuf::from(required(kv, "out")?);
    let tracks = load_tracks(kv)?;
    let split = split_folds(&tracks, folds, cfg.seed)?;
    let (tr, te) = split.partition(&tracks, test_fold);
    let window = cfg.k + cfg.p;
    let train_set = slice_all(&owned(tr), window, stride)?;
    let test_set = slice_all(&owned(te), window, stride)?;
    eprintln!("ablation: {} training, {} held-out mini-tracks", train_set.len(), test_set.len());
    let table = ablation_run(&cfg, &train_set, &test_set, &modes, &horizons, retrain)?;
    table.write_csv(create(&out_path)?)?;
    write_echo(&echo_path(&out_path), kv)?;
    Ok(())
}
