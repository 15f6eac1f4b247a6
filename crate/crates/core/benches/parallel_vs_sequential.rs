use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use duet_core::dataset::{build_container, pair_streams, synth_generate, synth_recording, SynthConfig, Manifest, PairedStream};
use duet_core::diffusion::*;
use duet_core::metrics::{diversity, fid_g, fid_k};
use duet_core::motion::MotionSequence;
use duet_core::par::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn streams(n: u64, frames: usize) -> Vec<(PairedStream, BTreeMap<String, String>)> {
    (0..n)
        .map(|seed| {
            let (a, b) = synth_generate(&SynthConfig { frames, seed, ..SynthConfig::default() }).unwrap();
            (pair_streams(&a, &b).unwrap(), BTreeMap::new())
        })
        .collect()
}

fn preprocessing(c: &mut Criterion) {
    let input = streams(8, 300);
    let skeleton = input[0].0.motions[0].skeleton.clone();
    let mut g = c.benchmark_group("build_container");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| build_container(Manifest::new(30.0, skeleton.clone(), 60, 30, "bench"), &input, exec).unwrap())
        });
    }
    g.finish();
}

fn loss_gradient(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = ConvResDenoiser::new(ConvResConfig { y_dim: 64, cond_dim: 127, hidden: 64, step_dim: 16, pos_dim: 16 }, 0);
    let s = ScheduleConfig::short().build().unwrap();
    let mut g = c.benchmark_group("loss_and_grad");
    g.sample_size(20);
    for batch in [4usize, 16] {
        let items: Vec<Item<BodyCond>> = (0..batch)
            .map(|_| Item {
                cond: BodyCond { x: standard_normal(&mut rng, 60, 124), offset: [rng.random_range(-1.0..1.0), 1.0, 0.0] },
                y0: standard_normal(&mut rng, 60, 64),
            })
            .collect();
        let refs: Vec<_> = items.iter().collect();
        let draws = draw_noise(&refs, &s, &mut rng);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, batch), &batch, |b, _| {
                b.iter(|| loss_and_grad(&model, &refs, &draws, &s, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let pairs: Vec<[MotionSequence; 2]> = (0..8)
        .map(|seed| {
            let r = synth_recording(&SynthConfig { frames: 150, seed, ..SynthConfig::default() }).unwrap();
            [r.persons[0].motion.clone(), r.persons[1].motion.clone()]
        })
        .collect();
    let singles: Vec<MotionSequence> = pairs.iter().flat_map(|p| p.iter().cloned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let feats: Vec<Vec<f64>> = (0..200).map(|_| (0..500).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut g = c.benchmark_group("metrics");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("fid_g", name), |b| b.iter(|| fid_g(&pairs, &pairs, exec).unwrap()));
        g.bench_function(BenchmarkId::new("fid_k", name), |b| b.iter(|| fid_k(&singles, &singles, exec).unwrap()));
        g.bench_function(BenchmarkId::new("diversity", name), |b| b.iter(|| diversity(&feats, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, preprocessing, loss_gradient, metrics);
criterion_main!(benches);
