use criterion::{criterion_group, criterion_main, Criterion};
use cylfield_bench::bench_spec;
use cylfield_core::alpha::{AlphaSeries, SeriesTruncation};
use cylfield_core::ce::{ce_mc, PolynomialObservable};
use cylfield_core::free::sample_free;

fn sampling(c: &mut Criterion) {
    let spec = bench_spec();
    c.bench_function("sample_free_10k", |b| b.iter(|| sample_free(&spec, 10_000, 7).unwrap()));
}

fn conditional_expectation(c: &mut Criterion) {
    let spec = bench_spec();
    let ens = sample_free(&spec, 20_000, 7).unwrap();
    let f = PolynomialObservable::new(3, vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let obs = |c: &cylfield_core::FieldConfig, s: &[f64]| f.eval(c.level_value(f.level, s));
    c.bench_function("ce_mc_level1_degree4", |b| b.iter(|| ce_mc(obs, &ens, 1, 4).unwrap()));
}

fn alpha_series(c: &mut Criterion) {
    let spec = bench_spec();
    let trunc = SeriesTruncation::new(3, 4);
    c.bench_function("alpha_series_free", |b| b.iter(|| AlphaSeries::free(&spec, trunc).unwrap()));
    let ens = sample_free(&spec, 20_000, 7).unwrap();
    let mut group = c.benchmark_group("mc");
    group.sample_size(10);
    group.bench_function("alpha_series_estimate", |b| b.iter(|| AlphaSeries::estimate(&ens, trunc).unwrap()));
    group.finish();
}

criterion_group!(benches, sampling, conditional_expectation, alpha_series);
criterion_main!(benches);
