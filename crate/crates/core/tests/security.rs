use rand::Rng;
use wds_core::harness::ber::transmit;
use wds_core::harness::{self, ExperimentConfig, ExperimentKind};
use wds_core::patterns::{schedule, Schedule};
use wds_core::wlan::{
    bit_errors, build_frame, eve_scenario2_receive, FixedClassifier, ModemBank, RandomClassifier,
    ReceiverOptions, SymbolClassifier, WlanConfig,
};
use wds_core::{rng, BcfPattern};

fn cfg(kind: ExperimentKind, text: &str) -> ExperimentConfig {
    ExperimentConfig::from_text(text, kind).unwrap()
}

#[test]
fn eavesdroppers_lose_an_order_of_magnitude() {
    let grid = "es_n0_db = 15, 20, 30\ntrials = 30\nmax_trials = 30\nseed = 11";
    let legit = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        &format!("{grid}\npipeline = legit"),
    ))
    .unwrap();
    let s1 = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        &format!("{grid}\npipeline = scenario1"),
    ))
    .unwrap();
    let s2 = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        &format!("{grid}\npipeline = scenario2\ntrain_per_class = 200"),
    ))
    .unwrap();
    for es in [15.0, 20.0, 30.0] {
        let l = legit
            .find("legit", es)
            .unwrap()
            .metric
            .max(1.0 / legit.find("legit", es).unwrap().n as f64);
        assert!(
            s1.find("scenario1", es).unwrap().metric >= 10.0 * l,
            "scenario I at {es} dB"
        );
        assert!(
            s2.find("scenario2", es).unwrap().metric >= 10.0 * l,
            "scenario II at {es} dB"
        );
        assert!(s2.find("classifier-accuracy", es).unwrap().metric <= 0.45);
    }
}

/// Mean and frame-level standard error of per-frame BERs.
fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn frame_ber(
    c: &ExperimentConfig,
    sched: &Schedule,
    classifier: &mut dyn SymbolClassifier,
    seed: u64,
) -> f64 {
    let wlan = WlanConfig::default();
    let mut bank = ModemBank::new();
    let mut r = rng::stream(seed);
    let bits: Vec<u8> = (0..wlan.bits_per_symbol() * sched.len())
        .map(|_| r.random_range(0..2u8))
        .collect();
    let frame = build_frame(&wlan, sched, &bits, &mut bank)
        .unwrap()
        .samples();
    let stream = transmit(&frame, c, wlan.symbol_len(), 20.0, &mut r).unwrap();
    let (rx, _) = eve_scenario2_receive(
        &stream,
        &wlan,
        &c.pattern,
        classifier,
        sched,
        &ReceiverOptions::default(),
        &mut bank,
    )
    .unwrap();
    bit_errors(&bits, &rx).unwrap() as f64 / bits.len() as f64
}

#[test]
fn random_guessing_matches_the_mapping_average() {
    let c = cfg(ExperimentKind::Ber, "");
    let p = BcfPattern::wlan_type3();
    let random: Vec<f64> = (0..150u64)
        .map(|t| {
            let sched = schedule(&p, 20, rng::derive(21, &[t]));
            frame_ber(
                &c,
                &sched,
                &mut RandomClassifier::new(5, rng::derive(22, &[t])),
                rng::derive(23, &[t]),
            )
        })
        .collect();
    // Per cell mean, then the plain average of the 25 cell means.
    let mut cell_means = Vec::new();
    let mut cell_vars = 0.0;
    for t in 0..5 {
        for q in 0..5 {
            let sched = Schedule::constant(&p, t, 20).unwrap();
            let v: Vec<f64> = (0..6u64)
                .map(|n| {
                    frame_ber(
                        &c,
                        &sched,
                        &mut FixedClassifier(q),
                        rng::derive(24, &[t as u64, q as u64, n]),
                    )
                })
                .collect();
            let (m, se) = mean_se(&v);
            cell_means.push(m);
            cell_vars += (se / 25.0).powi(2);
        }
    }
    let avg = cell_means.iter().sum::<f64>() / 25.0;
    let (rm, rse) = mean_se(&random);
    let tol = 3.0 * (rse * rse + cell_vars).sqrt();
    assert!(
        (rm - avg).abs() <= tol,
        "random {rm:.4} vs mapping average {avg:.4} (tolerance {tol:.4})"
    );
}

#[test]
fn replayed_confusion_is_far_worse_than_legit() {
    let dir = tempfile::tempdir().unwrap();
    let study = cfg(ExperimentKind::Classify, "pattern = wlan-type3\nchannel = awgn\nes_n0_db = 20\ntrain_per_class = 200\ntest_per_class = 100");
    harness::run(&study, dir.path()).unwrap();
    let text = format!(
        "confusion = {}\nes_n0_db = 20\ntrials = 2\npsdu_symbols = 10",
        dir.path().join("confusion.json").display()
    );
    let mapped = harness::run_mapping_ber(&cfg(ExperimentKind::MappingBer, &text)).unwrap();
    let weighted = mapped.find("weighted", 20.0).unwrap().metric;
    let legit = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        "pipeline = legit\nes_n0_db = 20\ntrials = 100\nmax_trials = 100",
    ))
    .unwrap();
    assert!(
        weighted >= 10.0 * legit.rows[0].metric,
        "weighted {weighted} vs legit {}",
        legit.rows[0].metric
    );
}
