use duet_core::dataset::{synth_recording, SynthConfig};
use duet_core::diffusion::*;
use duet_core::face::*;
use duet_core::metrics::lve;
use duet_core::nn::{Graph, Mat};
use duet_core::par::Execution;
use duet_core::Error;
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
}

struct Inputs {
    q: Mat,
    k: Mat,
    v: Mat,
    conds: [Mat; 3],
}

fn inputs(seed: u64, t: usize, tk: usize, d: usize) -> Inputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Inputs {
        q: rand_mat(&mut rng, t, d),
        k: rand_mat(&mut rng, tk, d),
        v: rand_mat(&mut rng, tk, d),
        conds: [rand_mat(&mut rng, 1, d), rand_mat(&mut rng, 1, d), rand_mat(&mut rng, 1, d)],
    }
}

fn run(x: &Inputs, bias: &Mat) -> (Mat, Mat) {
    let [es, ep, en] = &x.conds;
    biased_conditional_attention(&x.q, &x.k, &x.v, es, ep, en, bias).unwrap()
}

#[test]
fn zero_queries_attend_uniformly() {
    let mut x = inputs(1, 4, 7, 5);
    x.q.fill(0.0);
    let (w, _) = run(&x, &Mat::zeros((4, 10)));
    assert!(w.iter().all(|&v| v == 1.0 / 10.0));
}

#[test]
fn masked_temporal_slots_leave_only_conditions() {
    let x = inputs(2, 3, 6, 4);
    let mut bias = attention_bias(3, 6, 30.0);
    bias.slice_mut(s![.., CONDITION_SLOTS..]).fill(f64::NEG_INFINITY);
    let (w, _) = run(&x, &bias);
    for row in w.rows() {
        assert!(row.iter().skip(CONDITION_SLOTS).all(|&v| v == 0.0));
        assert!((row.iter().take(CONDITION_SLOTS).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn masking_a_condition_slot_removes_it() {
    let x = inputs(3, 5, 5, 4);
    let base = attention_bias(5, 5, 30.0);
    for slot in 0..CONDITION_SLOTS {
        let mut bias = base.clone();
        bias.column_mut(slot).fill(f64::NEG_INFINITY);
        let (_, out) = run(&x, &bias);
        // Oracle: explicit softmax over the remaining slots.
        let mut keys: Vec<Vec<f64>> = Vec::new();
        let mut vals: Vec<Vec<f64>> = Vec::new();
        let mut cols = Vec::new();
        for j in 0..CONDITION_SLOTS + 5 {
            if j == slot {
                continue;
            }
            let (k, v) = if j < CONDITION_SLOTS {
                (x.conds[j].row(0).to_vec(), x.conds[j].row(0).to_vec())
            } else {
                (x.k.row(j - 3).to_vec(), x.v.row(j - 3).to_vec())
            };
            keys.push(k);
            vals.push(v);
            cols.push(j);
        }
        for i in 0..5 {
            let scores: Vec<f64> = keys
                .iter()
                .zip(&cols)
                .map(|(k, &j)| k.iter().zip(x.q.row(i)).map(|(a, b)| a * b).sum::<f64>() + base[[i, j]])
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            for c in 0..4 {
                let want: f64 = scores.iter().zip(&vals).map(|(s, v)| s.exp() / z * v[c]).sum();
                assert!((out[[i, c]] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn graph_attention_matches_plain_version() {
    let x = inputs(4, 6, 6, 3);
    let bias = attention_bias(6, 6, 2.0);
    let (w0, o0) = run(&x, &bias);
    let mut g = Graph::new();
    let [q, k, v, es, ep, en, b] = [&x.q, &x.k, &x.v, &x.conds[0], &x.conds[1], &x.conds[2], &bias].map(|m| g.input(m.clone()));
    let (w, o) = attend(&mut g, q, k, v, es, ep, en, b).unwrap();
    assert_eq!(g.value(w), &w0);
    assert_eq!(g.value(o), &o0);
}

proptest! {
    #[test]
    fn attention_rows_are_probabilities(seed in 0u64..1000, t in 1usize..6, tk in 1usize..8) {
        let x = inputs(seed, t, tk, 4);
        let (w, _) = run(&x, &attention_bias(t, tk, 30.0));
        for row in w.rows() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }
}

fn face_recording(seed: u64, frames: usize, facing: bool) -> FaceRecording {
    let ids = if facing { ["A".into(), "B".into()] } else { ["C".into(), "A".into()] };
    let cfg = SynthConfig { seed, frames, facing, with_face: true, ids, ..SynthConfig::default() };
    synth_recording(&cfg).unwrap().face_recording().unwrap()
}

fn dataset(recs: Vec<FaceRecording>) -> FaceDataset {
    FaceDataset { fps: 30.0, masks: GridFace::default().masks(), recordings: recs, config_fingerprint: "test".into() }
}

#[test]
fn latent_encoding_is_affine_and_round_trips() {
    let train = [face_recording(1, 60, true), face_recording(2, 60, false)];
    let joints: Vec<FaceSequence> = train.iter().map(|r| concat_faces(&r.faces[0], &r.faces[1]).unwrap()).collect();
    let ae = FaceAutoencoder::fit(&joints.iter().collect::<Vec<_>>(), 24, 0).unwrap();
    assert_eq!(ae.encode(&joints[0]).unwrap().dim(), (60, 24));

    let (u, w) = (&joints[0], &joints[1]);
    let alpha = 0.3;
    let mix = FaceSequence::new(u.template.clone(), &u.frames * alpha + &w.frames * (1.0 - alpha)).unwrap();
    let lhs = ae.encode(&mix).unwrap();
    let rhs = ae.encode(u).unwrap() * alpha + ae.encode(w).unwrap() * (1.0 - alpha);
    assert!((&lhs - &rhs).iter().all(|d| d.abs() < 1e-6));

    // Zero displacement sits on the bias latent and decodes back to the template.
    let still = FaceSequence::static_template(u.template.clone(), 3);
    let z = ae.encode(&still).unwrap();
    let bias_latent = ae.encode_rows(&Array2::zeros((1, ae.input_dim()))).unwrap();
    assert!(z.rows().into_iter().all(|r| r == bias_latent.row(0)));
    assert!(ae.round_trip_error(&still).unwrap() <= ae.tolerance);

    for seed in [11, 12, 13] {
        let held = face_recording(seed, 45, seed % 2 == 0);
        let j = concat_faces(&held.faces[0], &held.faces[1]).unwrap();
        assert!(ae.round_trip_error(&j).unwrap() <= ae.tolerance, "seed {seed}");
    }
    assert!(ae.encode(&held_out_wrong_size()).is_err());
}

fn held_out_wrong_size() -> FaceSequence {
    FaceSequence::static_template(GridFace { rows: 2, cols: 2, spacing: 0.01 }.template(), 2)
}

fn tiny_face_model(seed: u64) -> FaceDenoiser {
    FaceDenoiser::new(FaceNetConfig { width: 6, audio_dim: 4, styles: 2, style_dim: 3, step_dim: 4, tau: 2.0 }, seed)
}

fn tiny_face_items(rng: &mut ChaCha8Rng) -> Vec<Item<FaceCond>> {
    (0..3)
        .map(|i| Item {
            cond: FaceCond {
                audio: [rand_mat(rng, 5, 4), rand_mat(rng, 5, 4)],
                styles: [StyleRef::Known(i % 2), if i == 2 { StyleRef::Mean } else { StyleRef::Known(1) }],
                facing: facing_one_hot(i != 1),
            },
            y0: standard_normal(rng, 5, 6),
        })
        .collect()
}

#[test]
fn face_loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut model = tiny_face_model(2);
    let s = ScheduleConfig::short().build().unwrap();
    let items = tiny_face_items(&mut rng);
    let refs: Vec<_> = items.iter().collect();
    let draws = draw_noise(&refs, &s, &mut rng);
    let (_, grads) = loss_and_grad(&model, &refs, &draws, &s, Execution::default()).unwrap();
    let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
    let n = model.params.len();
    let h = 1e-5;
    for _ in 0..150 {
        let k = rng.random_range(0..n);
        let orig = model.params.get(k);
        model.params.set(k, orig + h);
        let lp = loss_only(&model, &refs, &draws, &s).unwrap();
        model.params.set(k, orig - h);
        let lm = loss_only(&model, &refs, &draws, &s).unwrap();
        model.params.set(k, orig);
        let fd = (lp - lm) / (2.0 * h);
        let rel = (fd - flat[k]).abs() / fd.abs().max(flat[k].abs()).max(1e-8);
        assert!(rel < 1e-4, "coordinate {k}: analytic {} numeric {fd}", flat[k]);
    }
}

#[test]
fn denoiser_shape_and_condition_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = tiny_face_model(0);
    let items = tiny_face_items(&mut rng);
    let x = standard_normal(&mut rng, 5, 6);
    assert_eq!(model.predict(&x, 4, &items[0].cond).unwrap().dim(), (5, 6));
    let w = model.attention_weights(&x, 4, &items[0].cond).unwrap();
    assert_eq!(w.dim(), (5, 8));
    let mut bad = items[0].cond.clone();
    bad.facing = [1.0, 1.0];
    assert!(model.predict(&x, 4, &bad).is_err());
    let mut short = items[0].cond.clone();
    short.audio[1] = rand_mat(&mut rng, 4, 4);
    assert!(model.predict(&x, 4, &short).is_err());
    let mut unknown = items[0].cond.clone();
    unknown.styles[0] = StyleRef::Known(5);
    assert!(model.predict(&x, 4, &unknown).is_err());
}

#[test]
fn latent_marginals_match_closed_form() {
    let s = Schedule::from_betas(vec![0.2, 0.1, 0.3]).unwrap();
    let y0 = Array2::from_elem((60_000, 2), -0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut y = y0.clone();
    for t in 1..=3 {
        y = q_step(&y, t, &s, &mut rng).unwrap();
    }
    let ab: f64 = [0.8, 0.9, 0.7].iter().product();
    let m = y.mean().unwrap();
    let v = y.mapv(|x| (x - m) * (x - m)).mean().unwrap();
    assert!((m - (-0.7 * ab.sqrt())).abs() / (0.7 * ab.sqrt()) < 0.03);
    assert!((v - (1.0 - ab)).abs() / (1.0 - ab) < 0.03);
}

#[test]
fn face_smoke_training_beats_white_noise() {
    let recs = vec![face_recording(1, 60, true), face_recording(2, 60, false)];
    let data = dataset(recs.clone());
    let opts = FaceOptions { latent_dim: 16, style_dim: 4, step_dim: 8, ..FaceOptions::default() };
    let sched = ScheduleConfig { steps: 50, ..ScheduleConfig::default() };
    let train = TrainConfig { steps: 1500, lr: 1e-3, clip: 1.0, batch: 0, seed: 3 };
    let mut ck = FaceCheckpoint::init(&data, opts, sched, train, "test").unwrap();
    ck.fit(&data, Execution::default(), |_, _| {}).unwrap();
    let losses = &ck.state.losses;
    let tail = losses[losses.len() - 20..].iter().sum::<f64>() / 20.0;
    assert!(tail < 0.1 * losses[0], "initial {} final {tail}", losses[0]);

    let lip = &data.masks.lip;
    for (i, r) in recs.iter().enumerate() {
        let gen = ck.generate([&r.mel[0], &r.mel[1]], [&r.styles[0], &r.styles[1]], r.facing, 7, 60, StylePolicy::Strict).unwrap();
        assert!(gen.warnings.is_empty());
        let noise = ck.white_noise(60, 7).unwrap();
        for p in 0..2 {
            let g = lve(&r.faces[p], &gen.faces[p], lip, true).unwrap();
            let w = lve(&r.faces[p], &noise[p], lip, true).unwrap();
            assert!(g < w, "recording {i} person {p}: generated {g} vs noise {w}");
        }
    }

    // Facing flag is a live condition after training.
    let r = &recs[0];
    let z = standard_normal(&mut ChaCha8Rng::seed_from_u64(1), 60, 16);
    let cond = |facing| FaceCond {
        audio: r.mel.clone(),
        styles: [StyleRef::Known(0), StyleRef::Known(1)],
        facing: facing_one_hot(facing),
    };
    let (a, b) = (ck.denoiser.predict(&z, 10, &cond(true)).unwrap(), ck.denoiser.predict(&z, 10, &cond(false)).unwrap());
    assert!((&a - &b).iter().fold(0.0f64, |m, d| m.max(d.abs())) > 0.0);

    // Persistence, determinism and the error paths.
    let bytes = save_face_checkpoint(&ck).unwrap();
    let back = load_face_checkpoint(&bytes).unwrap();
    assert_eq!(back, ck);
    let g1 = generate_faces(&back, &r.mel[0], &r.mel[1], "A", "B", true, 5, 40).unwrap();
    let g2 = generate_faces(&ck, &r.mel[0], &r.mel[1], "A", "B", true, 5, 40).unwrap();
    assert_eq!(g1, g2);
    assert_eq!(g1.faces[0].len(), 40);
    let fallback = generate_faces(&ck, &r.mel[0], &r.mel[1], "Z", "B", true, 5, 10).unwrap();
    assert_eq!(fallback.warnings.len(), 1);
    assert!(ck.generate([&r.mel[0], &r.mel[1]], ["Z", "B"], true, 5, 10, StylePolicy::Strict).is_err());
    let short = r.mel[1].slice(s![..30, ..]).to_owned();
    assert!(generate_faces(&ck, &r.mel[0], &short, "A", "B", true, 5, 20).is_err());
    assert!(generate_faces(&ck, &r.mel[0], &r.mel[1], "A", "B", true, 5, 61).is_err());

    let other = dataset(vec![face_recording(5, 60, true)]);
    assert!(matches!(ck.fit(&other, Execution::default(), |_, _| {}), Err(Error::ManifestMismatch(_))));
}
