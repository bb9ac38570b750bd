use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rug::Float;

use expdyn_core::constructions::four_arc_jordan;
use expdyn_core::curves::{iterate_curve, Parametrization, SampledCurve};
use expdyn_core::hairs::{trace_hair, Itinerary};
use expdyn_core::{make_map, par, ExpMap, HPComplex, KPolicy, Precision};

fn unit_map() -> ExpMap {
    make_map(HPComplex::one(Precision::default()), KPolicy::Auto).unwrap()
}

fn modes() -> [(&'static str, bool); 2] {
    [("rayon", true), ("sequential", false)]
}

fn bench_iterate(c: &mut Criterion) {
    let map = unit_map();
    let p = map.precision();
    let seg = Parametrization::segment(HPComplex::from_f64(2.0, -3.0, p), HPComplex::from_f64(2.0, 3.0, p));
    let curve = SampledCurve::from_source(&map, seg, 65, false).unwrap();
    let mut g = c.benchmark_group("iterate_curve");
    for (name, on) in modes() {
        g.bench_function(BenchmarkId::new(name, "segment_n2"), |b| {
            par::set_enabled(on);
            b.iter(|| iterate_curve(&map, &curve, 2, 0.05).unwrap())
        });
    }
    g.finish();
}

fn bench_hair(c: &mut Criterion) {
    let map = unit_map();
    let p = map.precision();
    let a: Itinerary = "01*".parse().unwrap();
    let anchors: Vec<Float> = (0..256).map(|i| p.float(11.0 + i as f64 / 16.0)).collect();
    let mut g = c.benchmark_group("trace_hair");
    for (name, on) in modes() {
        g.bench_function(BenchmarkId::new(name, "256_anchors"), |b| {
            par::set_enabled(on);
            b.iter(|| trace_hair(&map, &a, 20, &anchors).unwrap())
        });
    }
    g.finish();
}

fn bench_four_arc(c: &mut Criterion) {
    let map = unit_map();
    let z = HPComplex::from_f64(2.0, 1.0, map.precision());
    let mut g = c.benchmark_group("four_arc_jordan");
    g.sample_size(10);
    for (name, on) in modes() {
        g.bench_function(BenchmarkId::new(name, "eps_0.1"), |b| {
            par::set_enabled(on);
            b.iter(|| four_arc_jordan(&map, &z, 0.1).unwrap())
        });
    }
    g.finish();
    par::set_enabled(true);
}

criterion_group!(benches, bench_iterate, bench_hair, bench_four_arc);
criterion_main!(benches);
