//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p duet-cli --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use duet_core::analysis::*;
use duet_core::dataset::*;
use duet_core::diffusion::body::white_noise_sample;
use duet_core::diffusion::*;
use duet_core::face::*;
use duet_core::metrics::*;
use duet_core::motion::rotation::{rot_y, Axis, EulerOrder};
use duet_core::motion::*;
use duet_core::par::Execution;
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let mut g = || -> f64 { rng.sample(StandardNormal) };
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(g(), g(), g(), g())).to_rotation_matrix()
}

fn rotation_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rots: Vec<Rotation3<f64>> = (0..10_000 - 4).map(|_| random_rotation(&mut rng)).collect();
    // Angles near zero and near pi stress the log map.
    for angle in [0.0, 1e-9, std::f64::consts::PI, std::f64::consts::PI - 1e-9] {
        rots.push(Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(0.3, -0.5, 0.8)), angle));
    }
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for r in &rots {
        let e = ExpMap::from_matrix(r.matrix()).map_err(|e| e.to_string())?;
        worst = worst.max((e.to_matrix() - r.matrix()).abs().max());
        let again = ExpMap::from_matrix(&e.to_matrix()).map_err(|e| e.to_string())?;
        worst = worst.max((again.to_matrix() - r.matrix()).abs().max());
    }
    let took = t0.elapsed();
    check(worst < 1e-6, || format!("max error {worst:e}"))?;
    check(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("10000 rotations, max error {worst:.1e}, {took:.2?}"))
}

fn random_motion(rng: &mut impl Rng, frames: usize) -> MotionSequence {
    let s = Skeleton::reference_body();
    let frames = (0..frames)
        .map(|_| FramePose {
            root_translation: Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(0.5..1.5), rng.random_range(-2.0..2.0)),
            rotations: (0..s.len()).map(|_| ExpMap::from_matrix(random_rotation(rng).matrix()).unwrap()).collect(),
        })
        .collect();
    MotionSequence::new(s, frames, 1.0 / 30.0).unwrap()
}

fn delta_encoding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut rigid): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let m = random_motion(&mut rng, 300);
        let enc = encode_local_deltas(&m).map_err(|e| e.to_string())?;
        let back = decode_local_deltas(&enc).map_err(|e| e.to_string())?;
        for (fa, fb) in m.frames.iter().zip(&back.frames) {
            worst = worst.max((fa.root_translation - fb.root_translation).abs().max());
            for (ra, rb) in fa.rotations.iter().zip(&fb.rotations) {
                worst = worst.max((ra.to_matrix() - rb.to_matrix()).abs().max());
            }
        }
        if i % 10 == 0 {
            let rot = random_rotation(&mut rng);
            let shift = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
            let moved = encode_local_deltas(&m.transformed(rot.matrix(), &shift)).map_err(|e| e.to_string())?;
            for (a, b) in enc.to_table().iter().zip(&moved.to_table()) {
                for (x, y) in a.iter().zip(b) {
                    rigid = rigid.max((x - y).abs());
                }
            }
        }
    }
    check(worst < 1e-6, || format!("round trip error {worst:e}"))?;
    check(rigid < 1e-9, || format!("rigid deviation {rigid:e}"))?;
    Ok(format!("100x300 frames, round trip {worst:.1e}, rigid {rigid:.1e}"))
}

fn axis_parts(a: Axis) -> (&'static str, Unit<Vector3<f64>>) {
    match a {
        Axis::X => ("X", Vector3::x_axis()),
        Axis::Y => ("Y", Vector3::y_axis()),
        Axis::Z => ("Z", Vector3::z_axis()),
    }
}

/// Three-joint chain in centimetres plus independently computed world
/// positions in meters.
fn chain_file(order: EulerOrder, rng: &mut impl Rng, frames: usize) -> (String, Vec<Vec<Vector3<f64>>>) {
    let chans: String = order.0.iter().map(|a| format!(" {}rotation", axis_parts(*a).0)).collect();
    let offsets = [Vector3::zeros(), Vector3::new(0.0, 20.0, 5.0), Vector3::new(10.0, 15.0, 0.0)];
    let mut text = format!(
        "HIERARCHY\nROOT Root\n{{\n\tOFFSET 0 0 0\n\tCHANNELS 6 Xposition Yposition Zposition{chans}\n\tJOINT Mid\n\t{{\n\t\tOFFSET 0 20 5\n\t\tCHANNELS 3{chans}\n\t\tJOINT Tip\n\t\t{{\n\t\t\tOFFSET 10 15 0\n\t\t\tCHANNELS 3{chans}\n\t\t\tEnd Site\n\t\t\t{{\n\t\t\t\tOFFSET 0 5 0\n\t\t\t}}\n\t\t}}\n\t}}\n}}\nMOTION\nFrames: {frames}\nFrame Time: 0.0333333\n"
    );
    let mut positions = Vec::new();
    for _ in 0..frames {
        let t = Vector3::new(rng.random_range(-50.0..50.0), rng.random_range(50.0..100.0), rng.random_range(-50.0..50.0));
        let mut row = vec![t.x, t.y, t.z];
        let (mut world, mut pos) = (Matrix3::identity(), t);
        let mut frame_pos = Vec::new();
        for (j, off) in offsets.iter().enumerate() {
            let angles: [f64; 3] = std::array::from_fn(|_| rng.random_range(-170.0..170.0));
            row.extend(angles);
            let local = (0..3).fold(Matrix3::identity(), |acc, k| {
                acc * Rotation3::from_axis_angle(&axis_parts(order.0[k]).1, angles[k].to_radians()).into_inner()
            });
            if j > 0 {
                pos += world * off;
            }
            world *= local;
            frame_pos.push(pos * 0.01);
        }
        positions.push(frame_pos);
        text += &row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        text.push('\n');
    }
    (text, positions)
}

fn bvh_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = BvhOptions::default();
    let mut worst: f64 = 0.0;
    for order in EulerOrder::ALL {
        let (text, oracle) = chain_file(order, &mut rng, 40);
        let (skel, m) = parse_bvh(&text, &opts).map_err(|e| e.to_string())?;
        let again = write_bvh(&skel, &m, &opts).map_err(|e| e.to_string())?;
        let (skel2, m2) = parse_bvh(&again, &opts).map_err(|e| e.to_string())?;
        for (t, want) in oracle.iter().enumerate() {
            for got in [forward_kinematics(&skel, &m.frames[t]), forward_kinematics(&skel2, &m2.frames[t])] {
                for j in 0..3 {
                    worst = worst.max((got[j] - want[j]).norm());
                }
            }
        }
    }
    check(worst < 1e-5, || format!("max position error {worst:e} m"))?;
    Ok(format!("6 Euler orders, max position error {worst:.1e} m"))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

fn diffusion_marginals() -> Outcome {
    let s = Schedule::from_betas(vec![0.1, 0.2, 0.3, 0.15, 0.25]).map_err(|e| e.to_string())?;
    let y0 = Array2::from_elem((100_000, 1), 0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut iter = y0.clone();
    let mut worst: f64 = 0.0;
    for t in 1..=5 {
        iter = q_step(&iter, t, &s, &mut rng).map_err(|e| e.to_string())?;
        let closed = q_sample(&y0, t, &s, &mut rng).map_err(|e| e.to_string())?;
        let (mi, vi) = mean_var(iter.as_slice().unwrap());
        let (mc, vc) = mean_var(closed.as_slice().unwrap());
        worst = worst.max(((mi - mc) / mc).abs()).max(((vi - vc) / vc).abs());
    }
    check(worst < 0.03, || format!("iterated vs closed form differ by {:.2}%", worst * 100.0))?;

    let s = ScheduleConfig::default().build().map_err(|e| e.to_string())?;
    let y0 = Array2::from_shape_fn((100_000, 2), |(i, j)| if (i + j) % 2 == 0 { 1.0 } else { -0.5 });
    let out = q_sample(&y0, s.steps(), &s, &mut rng).map_err(|e| e.to_string())?;
    let mut terminal = Vec::new();
    for col in out.columns() {
        let (m, v) = mean_var(&col.to_vec());
        check(m.abs() < 0.02 && (v - 1.0).abs() < 0.03, || format!("terminal mean {m} var {v}"))?;
        terminal.push(format!("({m:+.3}, {v:.3})"));
    }
    Ok(format!("max relative gap {:.2}%, terminal {}", worst * 100.0, terminal.join(" ")))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut model = ConvResDenoiser::new(ConvResConfig { y_dim: 4, cond_dim: 8, hidden: 6, step_dim: 4, pos_dim: 4 }, 3);
    let s = ScheduleConfig::short().build().map_err(|e| e.to_string())?;
    let items: Vec<Item<BodyCond>> = (0..3)
        .map(|_| Item {
            cond: BodyCond { x: standard_normal(&mut rng, 5, 5), offset: [0.4, -0.2, 1.0] },
            y0: standard_normal(&mut rng, 5, 4),
        })
        .collect();
    let refs: Vec<_> = items.iter().collect();
    let draws = draw_noise(&refs, &s, &mut rng);
    let (_, grads) = loss_and_grad(&model, &refs, &draws, &s, Execution::default()).map_err(|e| e.to_string())?;
    let flat: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
    let h = 1e-5;
    let coords = 150;
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let k = rng.random_range(0..model.params.len());
        let orig = model.params.get(k);
        model.params.set(k, orig + h);
        let lp = loss_only(&model, &refs, &draws, &s).map_err(|e| e.to_string())?;
        model.params.set(k, orig - h);
        let lm = loss_only(&model, &refs, &draws, &s).map_err(|e| e.to_string())?;
        model.params.set(k, orig);
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max((fd - flat[k]).abs() / fd.abs().max(flat[k].abs()).max(1e-8));
    }
    check(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("{coords} coordinates, max relative error {worst:.1e}"))
}

fn body_smoke() -> Outcome {
    let t0 = Instant::now();
    let e = |e: duet_core::Error| e.to_string();
    let (a, b) = synth_generate(&SynthConfig { frames: 128, seed: 3, ..SynthConfig::default() }).map_err(e)?;
    let pair = pair_streams(&a, &b).map_err(e)?;
    let m = Manifest::new(30.0, a.motion.skeleton.clone(), 32, 32, "acceptance");
    let data = build_container(m, &[(pair, BTreeMap::new())], Execution::default()).map_err(e)?;
    check(data.samples.len() == 4, || format!("{} windows", data.samples.len()))?;
    let mut ck = BodyCheckpoint::init(
        &data,
        BodyNetConfig { hidden: 64, step_dim: 16, pos_dim: 16 },
        ScheduleConfig::short(),
        TrainConfig { steps: 2000, lr: 1e-3, clip: 1.0, batch: 0, seed: 1 },
        "acceptance",
    )
    .map_err(e)?;
    check(ck.schedule.steps() == 50, || "schedule is not T=50".into())?;
    ck.fit(&data, Execution::default(), |_, _| {}).map_err(e)?;
    let l = &ck.state.losses;
    let (initial, last) = (l[0], l[l.len() - 1]);
    check(last < 0.1 * initial, || format!("loss {initial:.3} -> {last:.3}"))?;

    let (sk, dt) = (&data.manifest.skeleton, data.frame_time());
    let width = ck.denoiser.config.y_dim;
    let (mut gt, mut gen, mut noise) = (Vec::new(), Vec::new(), Vec::new());
    for (i, s) in data.samples.iter().enumerate() {
        gt.push(s.decode(sk, dt).map_err(e)?);
        let (y, anchors) = ck.generate_window(&s.x, s.offset, 100 + i as u64, Some(&s.anchors[0])).map_err(e)?;
        gen.push(PairedSample { y, anchors, ..s.clone() }.decode(sk, dt).map_err(e)?);
        noise.push(ck.decode_normalized(&white_noise_sample(s.x.nrows(), width, 100 + i as u64), &s.offset).map_err(e)?);
    }
    let fg = fid_g(&gt, &gen, Execution::default()).map_err(e)?;
    let fw = fid_g(&gt, &noise, Execution::default()).map_err(e)?;
    check(fg < fw, || format!("FID_g generated {fg:.4} vs white noise {fw:.4}"))?;
    let took = t0.elapsed();
    check(took < Duration::from_secs(600), || format!("took {took:?}"))?;
    Ok(format!("loss {initial:.3} -> {last:.4}, FID_g {fg:.4} < noise {fw:.4}, {took:.1?}"))
}

fn face_recording(seed: u64, frames: usize, facing: bool) -> FaceRecording {
    let ids = if facing { ["A".into(), "B".into()] } else { ["C".into(), "A".into()] };
    let cfg = SynthConfig { seed, frames, facing, with_face: true, ids, ..SynthConfig::default() };
    synth_recording(&cfg).unwrap().face_recording().unwrap()
}

fn face_smoke() -> Outcome {
    let e = |e: duet_core::Error| e.to_string();
    let recs = vec![face_recording(1, 60, true), face_recording(2, 60, false)];
    let data = FaceDataset { fps: 30.0, masks: GridFace::default().masks(), recordings: recs.clone(), config_fingerprint: "acceptance".into() };
    let opts = FaceOptions { latent_dim: 16, style_dim: 4, step_dim: 8, ..FaceOptions::default() };
    let sched = ScheduleConfig { steps: 50, ..ScheduleConfig::default() };
    let train = TrainConfig { steps: 1500, lr: 1e-3, clip: 1.0, batch: 0, seed: 3 };
    let mut ck = FaceCheckpoint::init(&data, opts, sched, train, "acceptance").map_err(e)?;
    ck.fit(&data, Execution::default(), |_, _| {}).map_err(e)?;
    let mut lines = Vec::new();
    for r in &recs {
        let gen = ck.generate([&r.mel[0], &r.mel[1]], [&r.styles[0], &r.styles[1]], r.facing, 7, 60, StylePolicy::Strict).map_err(e)?;
        let noise = ck.white_noise(60, 7).map_err(e)?;
        for p in 0..2 {
            let g = lve(&r.faces[p], &gen.faces[p], &data.masks.lip, true).map_err(e)?;
            let w = lve(&r.faces[p], &noise[p], &data.masks.lip, true).map_err(e)?;
            check(g < w, || format!("LVE generated {g:.3e} vs white noise {w:.3e}"))?;
            lines.push(format!("{g:.1e}<{w:.1e}"));
        }
    }
    Ok(format!("LVE generated < noise for 2 sequences x 2 persons: {}", lines.join(" ")))
}

fn gaussian(mean: &[f64], var: &[f64]) -> GaussianStats {
    GaussianStats::new(DVector::from_vec(mean.to_vec()), DMatrix::from_diagonal(&DVector::from_vec(var.to_vec()))).unwrap()
}

fn frechet_oracle() -> Outcome {
    let e = |e: duet_core::Error| e.to_string();
    let shift = frechet_distance(&gaussian(&[0.0], &[1.0]), &gaussian(&[1.0], &[1.0])).map_err(e)?;
    let scale = frechet_distance(&gaussian(&[0.0], &[1.0]), &gaussian(&[0.0], &[4.0])).map_err(e)?;
    check((shift - 1.0).abs() < 1e-9 && (scale - 1.0).abs() < 1e-9, || format!("1-d cases {shift} {scale}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut v = || -> Vec<f64> { (0..8).map(|_| rng.random_range(-2.0..2.0)).collect() };
        let (ma, mb) = (v(), v());
        let la: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..5.0)).collect();
        let lb: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..5.0)).collect();
        let oracle: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
            + la.iter().zip(&lb).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum::<f64>();
        let got = frechet_distance(&gaussian(&ma, &la), &gaussian(&mb, &lb)).map_err(e)?;
        worst = worst.max((got - oracle).abs());
    }
    check(worst < 1e-6, || format!("diagonal cases off by {worst:e}"))?;
    Ok(format!("1-d cases {shift} and {scale}, 50 diagonal 8-d cases within {worst:.1e}"))
}

fn zero_faces(frames: usize, verts: usize) -> FaceSequence {
    FaceSequence::new(Array2::zeros((verts, 3)), Array3::zeros((frames, verts, 3))).unwrap()
}

fn still_foot() -> MotionSequence {
    let sk = Skeleton::new(vec![Joint { name: "LeftFoot".into(), parent: None, offset: Vector3::zeros(), channels: vec![], end_site: None }])
        .unwrap();
    let mut p = FramePose::identity(1);
    p.root_translation = Vector3::new(0.2, 0.03, -0.1);
    MotionSequence::new(sk, vec![p; 12], 1.0 / 30.0).unwrap()
}

fn metric_identities() -> Outcome {
    let e = |e: duet_core::Error| e.to_string();
    let ex = Execution::default();
    let recs: Vec<SynthRecording> = (0..3)
        .map(|i| synth_recording(&SynthConfig { frames: 60, seed: 10 + i, with_face: true, ..SynthConfig::default() }))
        .collect::<duet_core::Result<_>>()
        .map_err(e)?;
    let pairs: Vec<[MotionSequence; 2]> = recs.iter().map(|r| [r.persons[0].motion.clone(), r.persons[1].motion.clone()]).collect();
    let singles: Vec<MotionSequence> = pairs.iter().flat_map(|p| p.iter().cloned()).collect();
    let masks = GridFace::default().masks();
    let face = recs[0].persons[0].face.clone().unwrap();
    let values = [
        ("FID_g", fid_g(&pairs, &pairs, ex).map_err(e)?),
        ("FID_k", fid_k(&singles, &singles, ex).map_err(e)?),
        ("FID_r", fid_r(&pairs, &pairs, ex).map_err(e)?),
        ("LVE", lve(&face, &face, &masks.lip, true).map_err(e)?),
        ("FDD", fdd(&face, &face, &masks.upper).map_err(e)?),
    ];
    for (name, v) in values {
        check(v.abs() < 1e-6, || format!("{name} of identical sets is {v:e}"))?;
    }
    let feat = window_feature(&pairs[0]).map_err(e)?;
    let div = diversity(&[feat.clone(), feat.clone(), feat], ex).map_err(e)?;
    check(div == 0.0, || format!("diversity {div}"))?;
    let slide = foot_slide(&still_foot(), &["LeftFoot"]).map_err(e)?;
    check(slide == 0.0, || format!("foot slide {slide}"))?;
    let gt = zero_faces(10, 4);
    let mut pred = gt.clone();
    pred.frames[[3, 1, 2]] = 1e-3;
    let single = lve(&gt, &pred, &[1], true).map_err(e)?;
    check(single == 1e-7, || format!("single-vertex LVE {single:e}"))?;
    let worst = values.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
    Ok(format!("identities within {worst:.1e}, single-vertex LVE = {single:e}"))
}

fn head_on_stick(at: Vector3<f64>, yaw: f64) -> MotionSequence {
    let sk = Skeleton::new(vec![
        Joint { name: "Hips".into(), parent: None, offset: Vector3::zeros(), channels: vec![], end_site: None },
        Joint { name: "Head".into(), parent: Some(0), offset: Vector3::new(0.0, 0.6, 0.0), channels: vec![], end_site: None },
    ])
    .unwrap();
    let mut p = FramePose::identity(2);
    p.root_translation = at;
    p.rotations[0] = ExpMap::from_matrix(&rot_y(yaw)).unwrap();
    MotionSequence::new(sk, vec![p], 1.0 / 30.0).unwrap()
}

fn facing_label(turn_deg: f64) -> FacingLabel {
    let a = head_on_stick(Vector3::new(0.0, 0.93, 0.0), 0.0);
    let b = head_on_stick(Vector3::new(0.0, 0.93, 1.0), std::f64::consts::PI + turn_deg.to_radians());
    detect_facing(&[a, b], "Head").unwrap()[0]
}

fn analysis_checks() -> Outcome {
    let e = |e: duet_core::Error| e.to_string();
    for (deg, want) in [(0.0, FacingLabel::Facing), (90.0, FacingLabel::NotFacing), (30.0, FacingLabel::Facing)] {
        let got = facing_label(deg);
        check(got == want, || format!("{deg} degrees labelled {}", got.as_str()))?;
    }

    let amp = 0.3;
    let sk = Skeleton::reference_body();
    let k = sk.require_joint("LeftArm").map_err(e)?;
    let frames = (0..400)
        .map(|t| {
            let mut p = FramePose::identity(sk.len());
            p.rotations[k] = ExpMap::from_axis_angle(Vector3::x(), 1.0 + amp * (std::f64::consts::TAU * t as f64 / 40.0).sin());
            p
        })
        .collect();
    let m = MotionSequence::new(sk, frames, 1.0 / 30.0).map_err(e)?;
    let table = angle_std_table(&[GroupedMotion { motion: &m, groups: vec!["all".into(); 400] }], &DEFAULT_COLUMNS).map_err(e)?;
    let (got, want) = (table.rows[0].std_deg[0], amp.to_degrees() / 2f64.sqrt());
    check((got - want).abs() / want < 0.01, || format!("sinusoid std {got} vs {want}"))?;

    let recs: Vec<[MotionSequence; 2]> = (0..3)
        .map(|i| {
            let r = synth_recording(&SynthConfig { frames: 80 + 10 * i, seed: i as u64, facing: i % 2 == 0, ..SynthConfig::default() }).unwrap();
            [r.persons[0].motion.clone(), r.persons[1].motion.clone()]
        })
        .collect();
    let narrow = Bins::new(-0.5, 0.5, 4).map_err(e)?;
    let h = relative_position_histogram(&recs, narrow, narrow).map_err(e)?;
    check(h.total() == 270, || format!("histogram holds {} of 270 frames", h.total()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut row_err: f64 = 0.0;
    let mut mat = |r, c| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
    for (t, tk) in [(1, 1), (4, 7), (9, 3)] {
        let (q, kk, v) = (mat(t, 5), mat(tk, 5), mat(tk, 5));
        let (es, ep, en) = (mat(1, 5), mat(1, 5), mat(1, 5));
        let (w, _) = biased_conditional_attention(&q, &kk, &v, &es, &ep, &en, &attention_bias(t, tk, 30.0)).map_err(e)?;
        for r in w.rows() {
            row_err = row_err.max((r.sum() - 1.0).abs());
        }
    }
    check(row_err < 1e-6, || format!("attention rows off by {row_err:e}"))?;
    let tk = 7;
    let (q, kk, v) = (Array2::zeros((4, 5)), mat(tk, 5), mat(tk, 5));
    let (es, ep, en) = (mat(1, 5), mat(1, 5), mat(1, 5));
    let (w, _) = biased_conditional_attention(&q, &kk, &v, &es, &ep, &en, &Array2::zeros((4, 3 + tk))).map_err(e)?;
    let uniform = 1.0 / (3 + tk) as f64;
    check(w.iter().all(|&x| x == uniform), || "uniform case is not exactly 1/(3+T_k)".into())?;
    Ok(format!("facing cases ok, sinusoid std {got:.4} vs {want:.4}, histogram 270/270, rows within {row_err:.1e}"))
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        common::pipeline(d.path());
    }
    let (a, b) = (common::artifacts(dirs[0].path()), common::artifacts(dirs[1].path()));
    let names_a: Vec<_> = a.keys().collect();
    check(names_a == b.keys().collect::<Vec<_>>(), || "runs produced different file sets".into())?;
    let differing: Vec<String> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    check(differing.is_empty(), || format!("differing artifacts: {}", differing.join(", ")))?;
    Ok(format!("{} artifacts byte-identical across two runs", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("rotation algebra", rotation_algebra),
        ("delta encoding", delta_encoding),
        ("bvh round trip", bvh_round_trip),
        ("diffusion marginals", diffusion_marginals),
        ("gradient check", gradient_check),
        ("body smoke training", body_smoke),
        ("face smoke training", face_smoke),
        ("frechet oracle", frechet_oracle),
        ("metric identities", metric_identities),
        ("analysis", analysis_checks),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{:.1?}]", i + 1, t0.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{:.1?}]", i + 1, t0.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
