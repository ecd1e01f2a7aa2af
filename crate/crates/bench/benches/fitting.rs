use std::hint::black_box;

use casfit::distance::{axial_distance, cas_distance, orthogonal_distance, sampson_distance};
use casfit::synth::make_instance;
use casfit::{fit, lls_fit, DatasetSpec, FitConfig, Instance};
use criterion::{criterion_group, criterion_main, Criterion};

fn instance(spec: &DatasetSpec) -> Instance {
    make_instance(spec, &mut spec.instance_rng(0)).unwrap()
}

fn distances(c: &mut Criterion) {
    let inst = instance(&DatasetSpec::gaussian(0.25));
    let (m, pts) = (&inst.truth, &inst.points);
    let mut g = c.benchmark_group("distance_500pts");
    g.bench_function("axial", |b| {
        b.iter(|| pts.iter().map(|p| axial_distance(p, m)).sum::<f64>())
    });
    g.bench_function("sampson", |b| {
        b.iter(|| pts.iter().filter_map(|p| sampson_distance(p, m).ok()).sum::<f64>())
    });
    g.bench_function("cas", |b| {
        b.iter(|| pts.iter().filter_map(|p| cas_distance(p, m, 0.5).ok()).sum::<f64>())
    });
    g.bench_function("orthogonal", |b| {
        b.iter(|| pts.iter().filter_map(|p| orthogonal_distance(p, m).ok()).sum::<f64>())
    });
    g.finish();
}

fn least_squares(c: &mut Criterion) {
    let inst = instance(&DatasetSpec::gaussian(0.1));
    c.bench_function("lls_fit_500pts", |b| b.iter(|| lls_fit(black_box(&inst.points)).unwrap()));
    c.bench_function("lls_fit_minimal", |b| b.iter(|| lls_fit(black_box(&inst.points[..9])).unwrap()));
}

fn consensus(c: &mut Criterion) {
    let spec = DatasetSpec::outlier(0.2);
    let inst = instance(&spec);
    let sigma = Instance::noise_sigma(&inst.truth, spec.sigma_rel);
    let mut g = c.benchmark_group("fit_500pts_20pct_outliers");
    g.sample_size(10);
    for (name, cfg) in [
        ("proposed", FitConfig::proposed(2.0 * sigma)),
        ("ransac", FitConfig::ransac(1.5 * sigma)),
    ] {
        g.bench_function(name, |b| b.iter(|| fit(black_box(&inst.points), &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, distances, least_squares, consensus);
criterion_main!(benches);
