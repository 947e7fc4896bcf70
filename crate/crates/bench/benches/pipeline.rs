use std::hint::black_box;

use beamcolor::env::{covariance, derive_paths, generate_environment, EnvConfig};
use beamcolor::graph::{greedy_color, ConflictGraph};
use beamcolor::harness::{simulate_drop, ExperimentConfig};
use beamcolor::linalg::{complex_normal, CVec};
use beamcolor::rng::seeded;
use beamcolor::spectrum::{dft_codebook, dominant_support, BeamDomainChannel, DominantSupport};
use beamcolor::training::{analytic_mse, TrainingPlan, UserEstimator};
use beamcolor::txsim::{rzf_precoder, RzfMode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

fn coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy_color");
    for (m, n_ms) in [(64, 20), (400, 100)] {
        let mut rng = seeded(1);
        let sups: Vec<_> = (0..n_ms)
            .map(|k| DominantSupport::from_mask(k, (0..m).map(|_| rng.random::<f64>() < 0.03).collect()))
            .collect();
        let g = ConflictGraph::from_supports(&sups, m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &g, |b, g| b.iter(|| greedy_color(black_box(g))));
    }
    group.finish();
}

fn mmse_routes(c: &mut Criterion) {
    let m = 64;
    let cfg = EnvConfig {
        n_ms: 4,
        n_s: 10,
        m_antennas: m,
        ..EnvConfig::default()
    };
    let env = generate_environment(&cfg, &mut seeded(2));
    let f = dft_codebook(m);
    let paths = derive_paths(&env, 0, &cfg).unwrap();
    let r = covariance(&paths, m);
    let ch = BeamDomainChannel::from_paths(&paths, &f);
    let gains = ch.beam_gains();
    let support = dominant_support(&gains.normalized(gains.max()), -40.0);
    let plan = TrainingPlan::orthogonal(std::slice::from_ref(&support), m);
    let (p_tr, sigma2) = (1e-9, 1e-12);

    let mut group = c.benchmark_group("mmse");
    group.bench_function("dense", |b| b.iter(|| analytic_mse(&r, &plan, 0, &f, p_tr, sigma2).unwrap()));
    group.bench_function("low_rank", |b| {
        b.iter(|| UserEstimator::new(&ch, &plan.users[0], p_tr, sigma2).unwrap())
    });
    group.finish();
}

fn rzf(c: &mut Criterion) {
    let mut group = c.benchmark_group("rzf");
    for (m, n) in [(64, 20), (400, 100)] {
        let mut rng = seeded(3);
        let hats: Vec<CVec> = (0..n).map(|_| CVec::from_fn(m, |_, _| complex_normal(&mut rng))).collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &hats, |b, hats| {
            b.iter(|| rzf_precoder(hats, 0.1, RzfMode::Regularized).unwrap())
        });
    }
    group.finish();
}

fn one_drop(c: &mut Criterion) {
    let cfg = ExperimentConfig::desk();
    let f = dft_codebook(cfg.m());
    let mut group = c.benchmark_group("drop");
    group.sample_size(10);
    group.bench_function("desk", |b| b.iter(|| simulate_drop(&cfg, &f, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, coloring, mmse_routes, rzf, one_drop);
criterion_main!(benches);
