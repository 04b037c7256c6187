//! Experiment runners: seeded Monte-Carlo sweeps, classifier studies,
//! complexity tables and dataset generation, all driven by a flat
//! key/value configuration and written as CSV plus JSON side files.

pub mod ber;
pub mod config;
pub mod mapping;
pub mod study;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use ber::run_ber_sweep;
pub use config::{
    parse_flat, parse_grid, ConfusionSource, EveClassifier, ExperimentConfig, ExperimentKind,
    Pipeline,
};
pub use mapping::run_mapping_ber;
pub use study::{generate_dataset, run_classifier_study, train_model, ClassifierStudy};
pub use table::{ResultTable, Row, VERSION};

use crate::complexity::{ops_ofdm, ops_sefdm, ops_sefdm_pruned};
use crate::Result;

/// OFDM, SEFDM and pruned SEFDM operation counts for every pattern α.
pub fn run_complexity(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let q = cfg.sefdm_template()?.n_samples();
    let mut table = ResultTable::new(cfg, "alpha", "ops");
    for &a in cfg.pattern.alphas() {
        table.push(Row::value("OFDM", a, ops_ofdm(q).count));
        table.push(Row::value("SEFDM", a, ops_sefdm(q, a).count));
        table.push(Row::value("SEFDM-pruned", a, ops_sefdm_pruned(q, a).count));
    }
    Ok(table)
}

/// Files produced by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub files: Vec<PathBuf>,
}

/// Runs the configured experiment and writes its outputs into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let name = cfg.kind.name();
    let mut files = Vec::new();
    let table = match cfg.kind {
        ExperimentKind::Ber => run_ber_sweep(cfg)?,
        ExperimentKind::MappingBer => run_mapping_ber(cfg)?,
        ExperimentKind::Complexity => run_complexity(cfg)?,
        ExperimentKind::Classify => {
            let study = run_classifier_study(cfg)?;
            let cm = out_dir.join("confusion.json");
            std::fs::write(&cm, study.confusion_json()?)?;
            let model = out_dir.join("model.json");
            study.model.save(&model)?;
            files.extend([cm, model]);
            study.table
        }
        ExperimentKind::GenDataset => {
            let (ds, table) = generate_dataset(cfg)?;
            let bin = out_dir.join("dataset.bin");
            let manifest = out_dir.join("dataset.csv");
            ds.write(&bin)?;
            ds.write_manifest(&manifest)?;
            files.extend([bin, manifest]);
            table
        }
    };
    let csv = out_dir.join(format!("{name}.csv"));
    table.write_csv(&csv)?;
    files.insert(0, csv);
    let meta = out_dir.join(format!("{name}.meta.json"));
    table::write_meta(&meta, &table, started.elapsed().as_secs_f64(), &files)?;
    files.push(meta);
    Ok(RunOutput { table, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_table() {
        let cfg = ExperimentConfig::from_text("", ExperimentKind::Complexity).unwrap();
        let t = run_complexity(&cfg).unwrap();
        assert_eq!(t.rows.len(), 15);
        assert_eq!(t.find("OFDM", 1.0).unwrap().metric, 384.0);
        assert!((t.find("SEFDM", 0.94).unwrap().metric - 414.59).abs() < 0.01);
    }

    #[test]
    fn modem_sweep_is_deterministic_and_noiseless_is_clean() {
        let text = "pipeline = modem\npattern = type1\nn_subcarriers = 16\nrho = 4\nalpha = 1\nes_n0_db = inf, 0\ntrials = 20\nmax_trials = 200\nmin_errors = 50\nbatch = 8";
        let cfg = ExperimentConfig::from_text(text, ExperimentKind::Ber).unwrap();
        let a = run_ber_sweep(&cfg).unwrap();
        let b = run_ber_sweep(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows[0].hits, 0);
        assert!(a.rows[1].hits >= 50);
        assert_eq!(a.rows[1].n % 8, 0);
    }

    #[test]
    fn legit_frames_without_noise() {
        let text = "pipeline = legit\nes_n0_db = inf\ntrials = 4\nmax_trials = 4\npsdu_symbols = 5";
        let cfg = ExperimentConfig::from_text(text, ExperimentKind::Ber).unwrap();
        let t = run_ber_sweep(&cfg).unwrap();
        assert_eq!(t.rows[0].hits, 0);
        assert_eq!(t.rows[0].n, 4 * 5 * 96);
    }

    #[test]
    fn mapping_identity_weights() {
        let text = "es_n0_db = 40\ntrials = 1\npsdu_symbols = 2\nconfusion = identity";
        let cfg = ExperimentConfig::from_text(text, ExperimentKind::MappingBer).unwrap();
        let t = run_mapping_ber(&cfg).unwrap();
        assert_eq!(t.find("weighted", 40.0).unwrap().metric, 0.0);
        assert!(t.find("unweighted", 40.0).unwrap().metric > 0.05);
        assert_eq!(t.rows.len(), 27);
    }
}
