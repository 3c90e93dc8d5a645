use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pentalab::kdvlimit::{continuous_limit_check, curve_from_potentials, kdv_flow};
use pentalab::lax::spectral;
use pentalab::pentagram::pentagram_map;
use pentalab_bench::{float_polygon, rational_polygon, smooth_operator};

fn polygons(c: &mut Criterion) {
    let exact = rational_polygon(3, 7);
    c.bench_function("map rational d=3 n=7", |b| b.iter(|| pentagram_map(black_box(&exact)).unwrap()));
    c.bench_function("spectral rational d=3 n=7", |b| b.iter(|| spectral(black_box(&exact)).unwrap()));
    let float = float_polygon(5, 7, 256);
    c.bench_function("map float256 d=5 n=7", |b| b.iter(|| pentagram_map(black_box(&float)).unwrap()));
    c.bench_function("spectral float256 d=5 n=7", |b| b.iter(|| spectral(black_box(&float)).unwrap()));
}

fn operators(c: &mut Criterion) {
    let l = smooth_operator(3, 64);
    c.bench_function("kdv flow d=3 N=64 100 steps", |b| b.iter(|| kdv_flow(black_box(&l), 5e-4, 100).unwrap()));
    let small = smooth_operator(2, 32);
    c.bench_function("lifted curve d=2 N=32", |b| b.iter(|| curve_from_potentials(black_box(&small)).unwrap()));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("continuous limit d=2 N=32", |b| {
        b.iter(|| continuous_limit_check(black_box(&small), &[0.08, 0.04, 0.02]).unwrap())
    });
    group.finish();
}

criterion_group!(benches, polygons, operators);
criterion_main!(benches);
