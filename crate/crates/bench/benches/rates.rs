use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use zenoscope_bench::{reference_model, reference_states};
use zenoscope_core::{sample_curve, ModelParams, RateDefinition, RateMode, TauGrid};

fn single_rate(c: &mut Criterion) {
    let model = reference_model();
    let mut group = c.benchmark_group("gamma");
    for mode in [RateMode::Effective, RateMode::Modified] {
        for (name, state) in reference_states() {
            group.bench_with_input(BenchmarkId::new(mode.name(), name), &state, |b, s| {
                b.iter(|| {
                    model
                        .gamma(black_box(2.0), s, mode, RateDefinition::LinearInS)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let p = ModelParams::super_ohmic(1.0, 0.05, 2.0, 1.0);
    let grid = TauGrid::linear(0.05, 5.0, 40);
    let (_, state) = reference_states().remove(1);
    let mut group = c.benchmark_group("curve");
    group.sample_size(10);
    group.bench_function("effective_40_points", |b| {
        b.iter(|| sample_curve(&state, &p, RateMode::Effective, &grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_rate, curve);
criterion_main!(benches);
