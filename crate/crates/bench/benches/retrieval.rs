use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use structret::metrics::{chamfer, emd};
use structret::synth::{ShapeGenerator, SynthConfig};
use structret::{extract_structure, retrieve, MatchConfig};
use structret_bench::{half_crop_query, synthetic_database};

fn bench_retrieve(c: &mut Criterion) {
    let db = synthetic_database(1000, 256, 1);
    let query = half_crop_query(99);
    let cfg = MatchConfig::for_database(&db);
    c.bench_function("retrieve_1000x64_q32", |b| {
        b.iter(|| retrieve(black_box(&db), black_box(&query), &cfg, 5).unwrap())
    });
}

fn bench_kmeans(c: &mut Criterion) {
    let shape = ShapeGenerator::new(SynthConfig::default(), 3).next_shape();
    let mut group = c.benchmark_group("extract_structure_2048");
    for k in [16, 32, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| extract_structure(black_box(&shape), k, 0).unwrap())
        });
    }
    group.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let mut gen = ShapeGenerator::new(
        SynthConfig {
            points: 256,
            ..Default::default()
        },
        5,
    );
    let (a, b) = (gen.next_shape(), gen.next_shape());
    c.bench_function("chamfer_256", |bn| bn.iter(|| chamfer(a.points(), b.points()).unwrap()));
    c.bench_function("emd_exact_256", |bn| bn.iter(|| emd(a.points(), b.points()).unwrap()));

    let mut gen = ShapeGenerator::new(
        SynthConfig {
            points: 1024,
            ..Default::default()
        },
        6,
    );
    let (a, b) = (gen.next_shape(), gen.next_shape());
    let mut group = c.benchmark_group("emd_auction");
    group.sample_size(10);
    group.bench_function("1024", |bn| bn.iter(|| emd(a.points(), b.points()).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_retrieve, bench_kmeans, bench_metrics);
criterion_main!(benches);
