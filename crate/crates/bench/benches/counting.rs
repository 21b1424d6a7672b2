use alab_bench::chain;
use alab_core::estimators::{check_wegner, sample_rng, McConfig};
use alab_core::{count_in_interval, HalfOpenInterval};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn sturm_count(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_in_interval");
    let interval = HalfOpenInterval::centered(0.0, 0.05).unwrap();
    for sites in [256, 1024, 4096] {
        let h = chain(sites).sample_hamiltonian(&mut sample_rng(3, 0));
        group.bench_with_input(BenchmarkId::new("tridiagonal", sites), &h, |b, h| {
            b.iter(|| count_in_interval(black_box(h), black_box(&interval)))
        });
    }
    group.finish();
}

fn wegner_run(c: &mut Criterion) {
    let e = chain(1024);
    let interval = HalfOpenInterval::centered(0.0, 0.05).unwrap();
    let mc = McConfig::new(1000, 11);
    let mut group = c.benchmark_group("wegner");
    group.sample_size(10);
    group.bench_function("sites1024_samples1000", |b| {
        b.iter(|| check_wegner(&e, &interval, &mc).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sturm_count, wegner_run);
criterion_main!(benches);
