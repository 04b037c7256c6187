use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wds_bench::{config, qpsk_vector};
use wds_core::channel::{awgn, NoiseSpec};
use wds_core::detect::{detect_id, detect_ml, detect_sd};
use wds_core::sefdm::correlation_matrix;
use wds_core::{rng, Constellation, Modem};

fn detectors(c: &mut Criterion) {
    let cfg = config(8, 4, 0.8);
    let corr = correlation_matrix(&cfg);
    let modem = Modem::new(&cfg);
    let qpsk = Constellation::qpsk();
    let y = awgn(
        &modem.modulate(&qpsk_vector(8, 7)).unwrap(),
        NoiseSpec::new(10.0),
        &mut rng::stream(7),
    )
    .unwrap();
    let r = modem.demodulate(&y).unwrap();
    let mut g = c.benchmark_group("detect-n8");
    g.bench_function("sd", |b| {
        b.iter(|| detect_sd(&corr, black_box(&r), &qpsk).unwrap())
    });
    g.bench_function("ml", |b| {
        b.iter(|| detect_ml(&corr, black_box(&r), &qpsk).unwrap())
    });
    g.bench_function("id", |b| {
        b.iter(|| detect_id(&corr, black_box(&r), &qpsk, 20).unwrap())
    });
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = detectors
}
criterion_main!(benches);
