use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::table::{ResultTable, Row, VERSION};
use crate::classify::{
    ConfusionMatrix, EcocModel, FeatureExtractor, GenerationMode, LabeledDataset, TrainOptions,
    WaveletBank,
};
use crate::patterns::{DatasetSpec, NoisePlan};
use crate::{rng, Result};

const TAG_TRAIN: u64 = 0x5452_4e00;
const TAG_TEST: u64 = 0x5445_5300;

pub fn wavelet_bank(cfg: &ExperimentConfig) -> Result<WaveletBank> {
    let q = cfg.sefdm_template()?.n_samples();
    let bank = WaveletBank::new(q).with_scales(cfg.n_scales);
    bank.validate()?;
    Ok(bank)
}

fn spec(
    cfg: &ExperimentConfig,
    mode: GenerationMode,
    seed: u64,
    noise: NoisePlan,
) -> Result<DatasetSpec> {
    Ok(
        DatasetSpec::new(cfg.pattern.clone(), cfg.sefdm_template()?, mode, seed)
            .with_profile(cfg.profile.clone())
            .with_noise(noise),
    )
}

/// Generates records and reduces them to features without keeping samples.
fn features_of(
    spec: &DatasetSpec,
    per_class: usize,
    bank: &WaveletBank,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let modems = spec.modems()?;
    let fx = FeatureExtractor::new(bank)?;
    let k = spec.pattern.n_classes();
    let features = (0..k * per_class)
        .into_par_iter()
        .map(|i| {
            let rec = spec.record(&modems, i / per_class, i % per_class)?;
            fx.features(&rec.samples)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..k * per_class).map(|i| i / per_class).collect();
    Ok((features, labels))
}

fn train_options(cfg: &ExperimentConfig) -> TrainOptions {
    TrainOptions {
        epochs: cfg.epochs,
        lambda: cfg.lambda,
        seed: rng::derive(cfg.seed, &[TAG_TRAIN, 1]),
    }
}

/// Trains the ECOC classifier on a freshly generated training set.
pub fn train_model(cfg: &ExperimentConfig) -> Result<EcocModel> {
    let bank = wavelet_bank(cfg)?;
    let train = spec(
        cfg,
        cfg.mode,
        rng::derive(cfg.seed, &[TAG_TRAIN]),
        cfg.train_noise.clone(),
    )?;
    let (features, labels) = features_of(&train, cfg.train_per_class, &bank)?;
    EcocModel::train_features(
        &features,
        &labels,
        cfg.pattern.class_names(),
        &bank,
        &train_options(cfg),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionPoint {
    pub es_n0_db: f64,
    pub accuracy: f64,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct ClassifierStudy {
    pub table: ResultTable,
    pub confusions: Vec<(f64, ConfusionMatrix)>,
    pub model: EcocModel,
}

#[derive(Serialize)]
struct ConfusionFile<'a> {
    version: &'a str,
    seed: u64,
    config: &'a [String],
    pattern: &'a str,
    class_names: &'a [String],
    points: Vec<ConfusionPoint>,
}

impl ClassifierStudy {
    pub fn confusion_json(&self) -> Result<String> {
        let points = self
            .confusions
            .iter()
            .map(|(es, cm)| ConfusionPoint {
                // JSON has no infinity; a noiseless point is written as a large number.
                es_n0_db: if es.is_finite() { *es } else { f64::MAX },
                accuracy: cm.accuracy(),
                counts: cm.counts.clone(),
            })
            .collect();
        let file = ConfusionFile {
            version: VERSION,
            seed: self.table.seed,
            config: &self.table.config,
            pattern: self.table.config_value("pattern").unwrap_or_default(),
            class_names: &self.model.class_names,
            points,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// Train once, then evaluate on a DD test set at every Es/N0 point. The test
/// sets do not depend on the training mode, so DA and DD runs with the same
/// seed share them.
pub fn run_classifier_study(cfg: &ExperimentConfig) -> Result<ClassifierStudy> {
    let model = train_model(cfg)?;
    let bank = model.bank.clone();
    let mut table = ResultTable::new(cfg, "es_n0_db", "accuracy");
    let mut confusions = Vec::new();
    for (i, &es) in cfg.es_n0_db.iter().enumerate() {
        let test = spec(
            cfg,
            GenerationMode::Dd,
            rng::derive(cfg.seed, &[TAG_TEST, i as u64]),
            NoisePlan::Fixed(es),
        )?;
        let (features, labels) = features_of(&test, cfg.test_per_class, &bank)?;
        let mut cm = ConfusionMatrix::new(model.n_classes);
        for (f, &l) in features.iter().zip(&labels) {
            cm.record(l, model.predict_features(f));
        }
        let correct: u64 = (0..cm.n_classes()).map(|c| cm.counts[c][c]).sum();
        table.push(Row::proportion("accuracy", es, correct, cm.total()));
        confusions.push((es, cm));
    }
    Ok(ClassifierStudy {
        table,
        confusions,
        model,
    })
}

/// Loads confusion counts from a bare `{"counts": ...}` matrix or a study
/// file. Study files yield the point at `es_n0_db`, or the sum over points.
pub fn load_confusion(path: &Path, es_n0_db: f64) -> Result<ConfusionMatrix> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if v.get("counts").is_some() {
        return Ok(serde_json::from_value(v)?);
    }
    let points: Vec<serde_json::Value> = v
        .get("points")
        .and_then(|p| p.as_array())
        .cloned()
        .ok_or_else(|| crate::Error::Format(format!("{}: no counts or points", path.display())))?;
    let mut merged: Option<ConfusionMatrix> = None;
    for p in points {
        let cm: ConfusionMatrix = serde_json::from_value(p.clone())?;
        if p.get("es_n0_db").and_then(|e| e.as_f64()) == Some(es_n0_db) {
            return Ok(cm);
        }
        match &mut merged {
            Some(m) => m.merge(&cm),
            None => merged = Some(cm),
        }
    }
    merged.ok_or_else(|| crate::Error::Format(format!("{}: empty confusion file", path.display())))
}

/// Generates a dataset with the configured mode and noise plan.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<(LabeledDataset, ResultTable)> {
    let ds = spec(cfg, cfg.mode, cfg.seed, cfg.noise.clone())?.generate(cfg.per_class)?;
    let mut table = ResultTable::new(cfg, "alpha", "records");
    for ((name, &a), n) in cfg
        .pattern
        .class_names()
        .iter()
        .zip(cfg.pattern.alphas())
        .zip(ds.class_counts())
    {
        let mut row = Row::value(name.as_str(), a, n as f64);
        row.n = n as u64;
        table.push(row);
    }
    Ok((ds, table))
}
