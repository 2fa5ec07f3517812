use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::gradcheck::{finite_diff_grad, relative_error};
use crate::lstm::{lstm_cell_forward, LstmCellState};
use crate::ops::relu;
use crate::tensor::{linear_forward, Tensor1, Tensor2};

fn tiny_dims() -> ModelDims {
    ModelDims { k: 4, p: 3, hidden: 8, latent: 6, decoder_init: DecoderInit::Full }
}

fn randomized(dims: ModelDims, seed: u64) -> ModelParams<f64> {
    let mut p = ModelParams::<f64>::init(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    // non-zero biases so every code path is exercised
    for t in p.tensors_mut() {
        if t.len() <= 4 * dims.hidden {
            for v in t.iter_mut() {
                *v = rng.gen_range(-0.3..0.3);
            }
        }
    }
    p
}

fn random_window(k: usize, rng: &mut ChaCha8Rng) -> FeatureWindow {
    let boxes: Vec<BBox> = (0..k)
        .map(|i| {
            BBox::new(
                i as i64,
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
            )
        })
        .collect();
    build_features(&boxes, None).unwrap()
}

fn stub_boxes(k: usize) -> Vec<BBox> {
    (0..k).map(|i| BBox::new(i as i64, 100.0 - (k - 1 - i) as f64, 50.0, 10.0, 20.0)).collect()
}

#[test]
fn full_size_parameter_count() {
    assert_eq!(ModelDims::full_size().param_count(), 4_360_460);
    let p = ModelParams::<f32>::zeros(ModelDims::full_size());
    assert_eq!(p.param_count(), 4_360_460);
    // single-bias variant for reference: one 4H bias per cell fewer
    assert_eq!(4_360_460 - 3 * 4 * 512, 4_354_316);
}

#[test]
fn zero_params_expose_biases() {
    let dims = tiny_dims();
    let mut p = ModelParams::<f64>::zeros(dims);
    for (j, v) in p.latent_fc.bias.as_mut_slice().iter_mut().enumerate() {
        *v = j as f64 + 0.5;
    }
    p.reconstruction_fc.bias.as_mut_slice().copy_from_slice(&[1., 2., 3., 4., 5., 6., 7., 8.]);
    p.delta_fc.bias.as_mut_slice().copy_from_slice(&[-1., 0.5, 2., 3.]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random_window(dims.k, &mut rng);

    let (z, st) = encode(&p, &w).unwrap();
    assert_eq!(z.as_slice(), p.latent_fc.bias.as_slice());
    assert!(st.h.as_slice().iter().all(|v| *v == 0.0));

    let r = reconstruct(&p, &z).unwrap();
    assert_eq!(r.shape(), (dims.k, 8));
    for t in 0..dims.k {
        assert_eq!(r.row(t), p.reconstruction_fc.bias.as_slice());
    }
    let d = decode_future(&p, &z, &st).unwrap();
    assert_eq!(d.rows.len(), dims.p);
    assert!(d.rows.iter().all(|row| row == &[-1., 0.5, 2., 3.]));
}

#[test]
fn full_size_latent_is_256() {
    let p = ModelParams::<f32>::init(ModelDims::full_size(), 3);
    let boxes: Vec<BBox> = (0..30).map(|i| BBox::new(i, 300.0 + i as f64, 200.0, 40.0, 90.0)).collect();
    let (z, st) = encode(&p, &build_features(&boxes, None).unwrap()).unwrap();
    assert_eq!(z.len(), 256);
    assert_eq!(st.h.len(), 512);
}

#[test]
fn public_ops_match_manual_composition() {
    let dims = tiny_dims();
    let p = randomized(dims, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w = random_window(dims.k, &mut rng);

    // encoder: k cell steps, relu, linear
    let mut s = LstmCellState::zeros(dims.hidden);
    for r in w.rows() {
        s = lstm_cell_forward(&p.encoder, &Tensor1::from_vec(r.to_vec()), &s).unwrap().0;
    }
    let z_manual =
        linear_forward(&p.latent_fc.weight, &p.latent_fc.bias, &Tensor1::from_vec(relu(s.h.as_slice()))).unwrap();
    let (z, st) = encode(&p, &w).unwrap();
    for (a, b) in z.as_slice().iter().zip(z_manual.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(st, s);

    // auto-decoder: k steps from zero state on constant latent
    let mut s2 = LstmCellState::zeros(dims.hidden);
    let recon = reconstruct(&p, &z).unwrap();
    for t in 0..dims.k {
        s2 = lstm_cell_forward(&p.auto_decoder, &z, &s2).unwrap().0;
        let row = linear_forward(&p.reconstruction_fc.weight, &p.reconstruction_fc.bias, &s2.h).unwrap();
        for (a, b) in recon.row(t).iter().zip(row.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    // future decoder: p steps from the encoder state
    let mut s3 = st.clone();
    let deltas = decode_future(&p, &z, &st).unwrap();
    for t in 0..dims.p {
        s3 = lstm_cell_forward(&p.future_decoder, &z, &s3).unwrap().0;
        let row = linear_forward(&p.delta_fc.weight, &p.delta_fc.bias, &s3.h).unwrap();
        for (a, b) in deltas.rows[t].iter().zip(row.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    // full forward equals composing the public ops
    let (recon_t, boxes) = forward_train(&p, &w).unwrap();
    assert_eq!(recon_t, recon);
    assert_eq!(boxes, concat_trajectory(&deltas, w.anchor().unwrap()).unwrap());
}

#[test]
fn hidden_only_init_zeroes_cell_state() {
    let mut dims = tiny_dims();
    dims.decoder_init = DecoderInit::HiddenOnly;
    let p = randomized(dims, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = random_window(dims.k, &mut rng);
    let (z, st) = encode(&p, &w).unwrap();
    let mut s = LstmCellState { h: st.h.clone(), c: Tensor1::zeros(dims.hidden) };
    let d = decode_future(&p, &z, &st).unwrap();
    s = lstm_cell_forward(&p.future_decoder, &z, &s).unwrap().0;
    let row = linear_forward(&p.delta_fc.weight, &p.delta_fc.bias, &s.h).unwrap();
    assert_eq!(d.rows[0].to_vec(), row.as_slice().to_vec());
}

#[test]
fn predict_skips_auto_decoder_and_matches_training_head() {
    let dims = tiny_dims();
    let p = randomized(dims, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_window(dims.k, &mut rng);
    let (_, train_boxes) = forward_train(&p, &w).unwrap();
    assert_eq!(predict_window(&p, &w).unwrap(), train_boxes);

    // scrambling the auto-decoder cannot change the trajectory head
    let mut q = p.clone();
    q.auto_decoder.recurrent_weights.fill(7.0);
    q.reconstruction_fc.bias.fill(-3.0);
    assert_eq!(predict_window(&q, &w).unwrap(), train_boxes);
    assert_eq!(forward_train(&q, &w).unwrap().1, train_boxes);
}

#[test]
fn predict_with_stub_decoder() {
    let dims = ModelDims { k: 5, p: 4, hidden: 8, latent: 6, decoder_init: DecoderInit::Full };
    let mut p = randomized(dims, 7);
    p.delta_fc.weight.fill(0.0);
    p.delta_fc.bias.as_mut_slice().copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
    let out = predict(&p, &stub_boxes(5), None).unwrap();
    assert_eq!(out.len(), 4);
    for (i, r) in out.rows.iter().enumerate() {
        assert_eq!(r, &[101.0 + i as f64, 50.0, 10.0, 20.0]);
    }
    let err = predict(&p, &stub_boxes(4), None).unwrap_err();
    assert!(matches!(err, Error::Input(_)));
}

fn batch_for(samples: &[Sample]) -> (BatchInput<f64>, BatchTargets<f64>) {
    let refs: Vec<&Sample> = samples.iter().collect();
    make_batch(&refs).unwrap()
}

fn sample_from(rng: &mut ChaCha8Rng, k: usize, p: usize) -> Sample {
    let boxes: Vec<BBox> = (0..k + p)
        .map(|i| {
            BBox::new(
                i as i64,
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.5..3.0),
            )
        })
        .collect();
    Sample::new(&boxes[..k], None, &boxes[k..]).unwrap()
}

#[test]
fn composite_loss_examples() {
    let dims = tiny_dims();
    let p = randomized(dims, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = sample_from(&mut rng, dims.k, dims.p);
    let (input, mut targets) = batch_for(&[s]);
    let (out, _) = forward_batch(&p, &input, true).unwrap();

    // perfect predictions in every branch
    targets.reconstruction = out.reconstruction.clone().unwrap();
    targets.boxes = out.boxes.clone();
    targets.deltas = out.deltas.clone();
    for mode in LossMode::ALL {
        let (l, _) = composite_loss(&out, &targets, &LossWeights::new(1.0, 2.0, mode).unwrap()).unwrap();
        assert_eq!(l.total, 0.0);
    }

    // both branch L1s equal 0.5
    let shift = |ts: &[Tensor2<f64>], d: f64| -> Vec<Tensor2<f64>> {
        ts.iter()
            .map(|t| Tensor2::from_vec(t.rows(), t.cols(), t.as_slice().iter().map(|v| v + d).collect()).unwrap())
            .collect()
    };
    targets.reconstruction = shift(out.reconstruction.as_ref().unwrap(), 0.5);
    targets.boxes = shift(&out.boxes, -0.5);
    let (l, _) = composite_loss(&out, &targets, &LossWeights::default()).unwrap();
    assert!((l.auto_enc - 0.5).abs() < 1e-12 && (l.traj - 0.5).abs() < 1e-12);
    assert!((l.total - 1.5).abs() < 1e-12);

    assert!(LossWeights::new(-1.0, 2.0, LossMode::Traj).is_err());
}

#[test]
fn auto_enc_mode_requires_reconstruction_head() {
    let dims = tiny_dims();
    let p = randomized(dims, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (input, targets) = batch_for(&[sample_from(&mut rng, dims.k, dims.p)]);
    let (out, _) = forward_batch(&p, &input, false).unwrap();
    let err = composite_loss(&out, &targets, &LossWeights::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

/// Targets pushed at least `margin` away from the current outputs so that
/// finite-difference probes never cross an L1 kink.
fn offset_targets(out: &ForwardOutput<f64>, targets: &mut BatchTargets<f64>, rng: &mut ChaCha8Rng, margin: f64) {
    let mut push = |ts: &[Tensor2<f64>]| -> Vec<Tensor2<f64>> {
        ts.iter()
            .map(|t| {
                let data = t
                    .as_slice()
                    .iter()
                    .map(|v| {
                        let m = rng.gen_range(margin..1.0);
                        if rng.gen_bool(0.5) { v + m } else { v - m }
                    })
                    .collect();
                Tensor2::from_vec(t.rows(), t.cols(), data).unwrap()
            })
            .collect()
    };
    targets.reconstruction = push(out.reconstruction.as_ref().unwrap());
    targets.boxes = push(&out.boxes);
    targets.deltas = push(&out.deltas);
}

#[test]
fn model_gradients_match_finite_differences() {
    for (seed, init) in [(10, DecoderInit::Full), (11, DecoderInit::HiddenOnly)] {
        let dims = ModelDims { decoder_init: init, ..tiny_dims() };
        let p = randomized(dims, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Sample> = (0..2).map(|_| sample_from(&mut rng, dims.k, dims.p)).collect();
        let (input, mut targets) = batch_for(&samples);
        let (out, _) = forward_batch(&p, &input, true).unwrap();
        offset_targets(&out, &mut targets, &mut rng, 0.05);

        for mode in LossMode::ALL {
            let w = LossWeights::new(1.0, 2.0, mode).unwrap();
            let (_, g) = loss_and_gradients(&p, &input, &targets, &w).unwrap();
            let fd = finite_diff_grad(
                |v| {
                    let mut q = p.clone();
                    q.set_flat(v)?;
                    Ok(loss_value(&q, &input, &targets, &w)?.total)
                },
                &p.to_flat(),
                1e-5,
            )
            .unwrap();
            let worst = g
                .to_flat()
                .iter()
                .zip(&fd)
                .map(|(a, n)| relative_error(*a, *n, 1e-6))
                .fold(0.0, f64::max);
            assert!(worst < 1e-4, "{mode} {init:?}: worst relative error {worst}");
        }
    }
}

#[test]
fn batch_gradient_is_mean_of_sample_gradients() {
    let dims = tiny_dims();
    let p = randomized(dims, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let samples: Vec<Sample> = (0..7).map(|_| sample_from(&mut rng, dims.k, dims.p)).collect();
    let w = LossWeights::default();
    let (input, targets) = batch_for(&samples);
    let (batch_loss, batch_g) = loss_and_gradients(&p, &input, &targets, &w).unwrap();

    let mut sum_g = vec![0.0; p.param_count()];
    let mut sum_l = 0.0;
    for s in &samples {
        let (i1, t1) = batch_for(std::slice::from_ref(s));
        let (l, g) = loss_and_gradients(&p, &i1, &t1, &w).unwrap();
        sum_l += l.total;
        for (a, b) in sum_g.iter_mut().zip(g.to_flat()) {
            *a += b;
        }
    }
    let n = samples.len() as f64;
    assert!((batch_loss.total - sum_l / n).abs() < 1e-12);
    for (a, b) in batch_g.to_flat().iter().zip(&sum_g) {
        assert!((a - b / n).abs() < 1e-10);
    }
}

#[test]
fn traj_mode_leaves_auto_decoder_untouched() {
    let dims = tiny_dims();
    let p = randomized(dims, 13);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (input, targets) = batch_for(&[sample_from(&mut rng, dims.k, dims.p)]);
    for mode in [LossMode::Traj, LossMode::TrajDel] {
        let (l, g) = loss_and_gradients(&p, &input, &targets, &LossWeights::new(1.0, 2.0, mode).unwrap()).unwrap();
        assert_eq!(l.auto_enc, 0.0);
        assert!(g.auto_decoder.recurrent_weights.as_slice().iter().all(|v| *v == 0.0));
        assert!(g.reconstruction_fc.bias.as_slice().iter().all(|v| *v == 0.0));
        assert!(g.future_decoder.recurrent_weights.as_slice().iter().any(|v| *v != 0.0));
    }
}

#[test]
fn concat_backward_is_suffix_sum() {
    let g: Vec<Tensor2<f64>> =
        (1..=3).map(|i| Tensor2::from_vec(1, 4, vec![i as f64, 0.0, 1.0, -1.0]).unwrap()).collect();
    let d = concat_backward(&g);
    assert_eq!(d[0].as_slice(), &[6.0, 0.0, 3.0, -3.0]);
    assert_eq!(d[1].as_slice(), &[5.0, 0.0, 2.0, -2.0]);
    assert_eq!(d[2].as_slice(), &[3.0, 0.0, 1.0, -1.0]);
}
