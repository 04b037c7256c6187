use wds_core::classify::{ConfusionMatrix, EcocModel, LabeledDataset};
use wds_core::harness::{self, ExperimentConfig, ExperimentKind};
use wds_core::Error;

fn cfg(kind: ExperimentKind, text: &str) -> ExperimentConfig {
    ExperimentConfig::from_text(text, kind).unwrap()
}

#[test]
fn every_output_embeds_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(ExperimentKind::Complexity, "seed = 77\npattern = type3");
    let out = harness::run(&c, dir.path()).unwrap();
    let csv = std::fs::read_to_string(&out.files[0]).unwrap();
    assert!(csv.contains("# seed: 77"));
    assert!(csv.contains("# config: pattern = type3"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.files.last().unwrap()).unwrap()).unwrap();
    assert_eq!(meta["seed"], 77);
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn classify_run_writes_loadable_model_and_confusions() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        ExperimentKind::Classify,
        "pattern = type1\nrho = 2\nn_subcarriers = 256\ntrain_per_class = 30\ntest_per_class = 10\nepochs = 5\nes_n0_db = 10, 30",
    );
    harness::run(&c, dir.path()).unwrap();
    let model = EcocModel::load(dir.path().join("model.json")).unwrap();
    assert_eq!(model.n_classes, 4);
    let cm: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("confusion.json")).unwrap())
            .unwrap();
    assert_eq!(cm["points"].as_array().unwrap().len(), 2);
    let replay = harness::study::load_confusion(&dir.path().join("confusion.json"), 30.0).unwrap();
    assert_eq!(replay.total(), 40);
}

#[test]
fn gen_dataset_round_trips_through_the_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(
        ExperimentKind::GenDataset,
        "pattern = type1\nrho = 2\nn_subcarriers = 256\nper_class = 3\nmode = da",
    );
    harness::run(&c, dir.path()).unwrap();
    let ds = LabeledDataset::read(dir.path().join("dataset.bin")).unwrap();
    assert_eq!(ds.records.len(), 12);
    assert_eq!(ds.class_counts(), vec![3; 4]);
    assert!(
        std::fs::read_to_string(dir.path().join("dataset.csv"))
            .unwrap()
            .lines()
            .count()
            > 12
    );
}

#[test]
fn mapping_with_one_wrong_cell_equals_that_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut counts = vec![vec![0u64; 5]; 5];
    counts[4][0] = 9;
    let path = dir.path().join("cm.json");
    std::fs::write(
        &path,
        serde_json::to_string(&ConfusionMatrix { counts }).unwrap(),
    )
    .unwrap();
    let text = format!(
        "confusion = {}\nes_n0_db = 30\ntrials = 1\npsdu_symbols = 2",
        path.display()
    );
    let t = harness::run_mapping_ber(&cfg(ExperimentKind::MappingBer, &text)).unwrap();
    let cell = t.find("cell-4-0", 30.0).unwrap().metric;
    assert!(cell > 0.05);
    assert_eq!(t.find("weighted", 30.0).unwrap().metric, cell);
}

#[test]
fn scenario2_with_oracle_equals_legit() {
    let base = "es_n0_db = 20\ntrials = 4\nmax_trials = 4\npsdu_symbols = 5\nseed = 3";
    let legit = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        &format!("{base}\npipeline = legit"),
    ))
    .unwrap();
    let eve = harness::run_ber_sweep(&cfg(
        ExperimentKind::Ber,
        &format!("{base}\npipeline = scenario2\nclassifier = oracle"),
    ))
    .unwrap();
    assert_eq!(legit.rows[0].hits, eve.rows[0].hits);
    assert_eq!(eve.find("classifier-accuracy", 20.0).unwrap().metric, 1.0);
}

#[test]
fn configuration_errors_are_typed() {
    let bad = |kind, text: &str| ExperimentConfig::from_text(text, kind).unwrap_err();
    assert!(matches!(
        bad(ExperimentKind::Ber, "es_n0_db = "),
        Error::Parse(_)
    ));
    assert!(matches!(
        bad(ExperimentKind::Ber, "channel = rayleigh"),
        Error::InvalidConfig(_)
    ));
    assert!(matches!(
        bad(ExperimentKind::Ber, "pattern = type9"),
        Error::InvalidConfig(_) | Error::Parse(_)
    ));
    let short = cfg(
        ExperimentKind::GenDataset,
        "pattern = type1\nrho = 2\nn_subcarriers = 16\nper_class = 1",
    );
    assert_eq!(
        harness::generate_dataset(&short).unwrap_err().kind(),
        "channel_too_long"
    );
    let not_wlan = cfg(
        ExperimentKind::Ber,
        "pattern = type1\nrho = 4\nn_subcarriers = 16",
    );
    assert!(harness::run_ber_sweep(&not_wlan).is_err());
}
