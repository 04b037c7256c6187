use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use wds_bench::{config, qpsk_vector};
use wds_core::sefdm::modulate_direct;
use wds_core::Modem;

fn modulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("modulate");
    for n in [16, 64, 256] {
        let cfg = config(n, 4, 0.8);
        let modem = Modem::new(&cfg);
        let s = qpsk_vector(n, 1);
        g.bench_with_input(BenchmarkId::new("truncated-idft", n), &s, |b, s| {
            b.iter(|| modem.modulate(black_box(s)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("direct", n), &s, |b, s| {
            b.iter(|| modulate_direct(&cfg, black_box(s)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, modulate);
criterion_main!(benches);
