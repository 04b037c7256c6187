use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::features::FeatureExtractor;
use super::wavelet::WaveletBank;
use crate::{rng, Complex, Error, Result};

pub const MODEL_FORMAT: &str = "wds-ecoc-model";
pub const MODEL_VERSION: u32 = 1;
pub const MIN_RECORDS_PER_CLASS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 50,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

/// Per-dimension z-score parameters from the training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalizer {
    fn fit(features: &[Vec<f64>]) -> Self {
        let dim = features[0].len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in scale.iter_mut().zip(f).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        for s in &mut scale {
            let sd = (*s / n).sqrt();
            *s = if sd > 1e-12 { sd } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Linear max-margin binary learner `sign(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLearner {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearLearner {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Pegasos: stochastic subgradient descent on the regularized hinge loss
    /// with step `1/(λt)` and projection onto the `1/√λ` ball. The bias is an
    /// extra constant input.
    fn train(samples: &[(&[f64], f64)], opts: &TrainOptions, seed: u64) -> Self {
        let dim = samples[0].0.len();
        let mut w = vec![0.0; dim + 1];
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut stream = rng::stream(seed);
        let radius = 1.0 / opts.lambda.sqrt();
        let mut t = 0usize;
        for _ in 0..opts.epochs {
            order.shuffle(&mut stream);
            for &i in &order {
                t += 1;
                let (x, y) = samples[i];
                let eta = 1.0 / (opts.lambda * t as f64);
                let margin = y * (w[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
                let shrink = 1.0 - eta * opts.lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wv, xv) in w[..dim].iter_mut().zip(x) {
                        *wv += eta * y * xv;
                    }
                    w[dim] += eta * y;
                }
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > radius {
                    let g = radius / norm;
                    w.iter_mut().for_each(|v| *v *= g);
                }
            }
        }
        let bias = w.pop().unwrap();
        Self { weights: w, bias }
    }
}

/// One-vs-one ECOC classifier over linear learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcocModel {
    pub format: String,
    pub version: u32,
    pub n_classes: usize,
    pub class_names: Vec<String>,
    pub bank: WaveletBank,
    pub normalizer: Normalizer,
    /// `n_classes × n_learners`, entries in {−1, 0, +1}.
    pub coding: Vec<Vec<i8>>,
    pub learners: Vec<LinearLearner>,
    pub options: TrainOptions,
}

fn one_vs_one(k: usize) -> (Vec<(usize, usize)>, Vec<Vec<i8>>) {
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let coding = (0..k)
        .map(|c| {
            pairs
                .iter()
                .map(|&(a, b)| {
                    if c == a {
                        1
                    } else if c == b {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    (pairs, coding)
}

impl EcocModel {
    /// Trains on precomputed feature vectors.
    pub fn train_features(
        features: &[Vec<f64>],
        labels: &[usize],
        class_names: Vec<String>,
        bank: &WaveletBank,
        opts: &TrainOptions,
    ) -> Result<Self> {
        let k = class_names.len();
        if k < 2 {
            return Err(Error::Training("at least two classes are required".into()));
        }
        if features.len() != labels.len() || features.is_empty() {
            return Err(Error::Training(
                "feature and label counts differ or are zero".into(),
            ));
        }
        let dim = bank.feature_len();
        if features.iter().any(|f| f.len() != dim) {
            return Err(Error::Training(format!(
                "feature vectors must have length {dim}"
            )));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite feature value".into()));
        }
        for (c, name) in class_names.iter().enumerate() {
            let members: Vec<&Vec<f64>> = features
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(f, _)| f)
                .collect();
            if members.len() < MIN_RECORDS_PER_CLASS {
                return Err(Error::Training(format!(
                    "class {c} ({name}) has {} records, at least {MIN_RECORDS_PER_CLASS} required",
                    members.len()
                )));
            }
            if members.iter().all(|f| *f == members[0]) {
                return Err(Error::Training(format!(
                    "class {c} ({name}) is degenerate: all feature vectors are identical"
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Training(format!(
                "label {bad} out of range for {k} classes"
            )));
        }

        let normalizer = Normalizer::fit(features);
        let normalized: Vec<Vec<f64>> = features.iter().map(|f| normalizer.apply(f)).collect();
        let (pairs, coding) = one_vs_one(k);
        let learners = pairs
            .par_iter()
            .enumerate()
            .map(|(idx, &(a, b))| {
                let samples: Vec<(&[f64], f64)> = normalized
                    .iter()
                    .zip(labels)
                    .filter_map(|(f, &l)| match l {
                        l if l == a => Some((f.as_slice(), 1.0)),
                        l if l == b => Some((f.as_slice(), -1.0)),
                        _ => None,
                    })
                    .collect();
                LinearLearner::train(&samples, opts, rng::derive(opts.seed, &[idx as u64]))
            })
            .collect();
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_classes: k,
            class_names,
            bank: bank.clone(),
            normalizer,
            coding,
            learners,
            options: *opts,
        })
    }

    /// Binary learner scores for a raw feature vector.
    pub fn scores(&self, features: &[f64]) -> Vec<f64> {
        let x = self.normalizer.apply(features);
        self.learners.iter().map(|l| l.score(&x)).collect()
    }

    /// Hamming decoding: each learner disagreeing in sign with a class's code
    /// costs 1, a zero score costs ½. Ties go to the lowest class index.
    pub fn decode(&self, scores: &[f64]) -> usize {
        let mut best = 0;
        let mut best_loss = f64::INFINITY;
        for (c, code) in self.coding.iter().enumerate() {
            let loss: f64 = code
                .iter()
                .zip(scores)
                .filter(|(&m, _)| m != 0)
                .map(|(&m, &s)| (1.0 - (m as f64 * s).signum_or_zero()) / 2.0)
                .sum();
            if loss < best_loss {
                best_loss = loss;
                best = c;
            }
        }
        best
    }

    pub fn predict_features(&self, features: &[f64]) -> usize {
        self.decode(&self.scores(features))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format {} v{}",
                model.format, model.version
            )));
        }
        if model.learners.len() != model.n_classes * (model.n_classes - 1) / 2
            || model.normalizer.mean.len() != model.bank.feature_len()
        {
            return Err(Error::Format("model dimensions are inconsistent".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Extracts features for every record in parallel, preserving order.
pub fn extract_all(records: &[&[Complex]], bank: &WaveletBank) -> Result<Vec<Vec<f64>>> {
    let fx = FeatureExtractor::new(bank)?;
    records.par_iter().map(|x| fx.features(x)).collect()
}

/// Feature extraction followed by one-vs-one training.
pub fn train(ds: &LabeledDataset, bank: &WaveletBank, opts: &TrainOptions) -> Result<EcocModel> {
    let samples: Vec<&[Complex]> = ds.records.iter().map(|r| r.samples.as_slice()).collect();
    let features = extract_all(&samples, bank)?;
    let labels: Vec<usize> = ds.records.iter().map(|r| r.label).collect();
    EcocModel::train_features(&features, &labels, ds.pattern.class_names(), bank, opts)
}

pub fn predict(model: &EcocModel, x: &[Complex], bank: &WaveletBank) -> Result<usize> {
    let fx = FeatureExtractor::new(bank)?;
    Ok(model.predict_features(&fx.features(x)?))
}

/// Counts per (true, predicted) pair; rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn identity_counts(k: usize, per_class: u64) -> Self {
        let mut m = Self::new(k);
        for i in 0..k {
            m.counts[i][i] = per_class;
        }
        m
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn per_class_accuracy(&self) -> Vec<f64> {
        (0..self.n_classes())
            .map(|i| {
                let t = self.row_total(i);
                if t == 0 {
                    0.0
                } else {
                    self.counts[i][i] as f64 / t as f64
                }
            })
            .collect()
    }

    /// `trace / total`.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.n_classes())
            .map(|i| self.counts[i][i])
            .sum::<u64>() as f64
            / total as f64
    }

    /// Joint frequency of each (true, predicted) cell.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / total).collect())
            .collect()
    }
}

pub fn evaluate(
    model: &EcocModel,
    test: &LabeledDataset,
    bank: &WaveletBank,
) -> Result<ConfusionMatrix> {
    let samples: Vec<&[Complex]> = test.records.iter().map(|r| r.samples.as_slice()).collect();
    let features = extract_all(&samples, bank)?;
    let mut cm = ConfusionMatrix::new(model.n_classes);
    for (f, rec) in features.iter().zip(&test.records) {
        cm.record(rec.label, model.predict_features(f));
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn bank() -> WaveletBank {
        WaveletBank::new(64).with_scales(4)
    }

    /// Gaussian blobs in feature space, one per class.
    fn blobs(k: usize, per_class: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = rng::stream(seed);
        let dim = bank().feature_len();
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for c in 0..k {
            for _ in 0..per_class {
                let f: Vec<f64> = (0..dim)
                    .map(
                        |d| if d % k == c { 5.0 } else { 0.0 } + spread * (r.random::<f64>() - 0.5),
                    )
                    .collect();
                feats.push(f);
                labels.push(c);
            }
        }
        (feats, labels)
    }

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn separable_classes_are_learned() {
        let (f, l) = blobs(3, 40, 1.0, 1);
        let m =
            EcocModel::train_features(&f, &l, names(3), &bank(), &TrainOptions::default()).unwrap();
        assert_eq!(m.learners.len(), 3);
        for (x, &y) in f.iter().zip(&l) {
            assert_eq!(m.predict_features(x), y);
        }
    }

    #[test]
    fn shuffled_labels_fall_to_chance() {
        let (f, mut l) = blobs(4, 100, 8.0, 2);
        // Pure noise features: same distribution for every class.
        let mut r = rng::stream(3);
        let f: Vec<Vec<f64>> = f
            .iter()
            .map(|v| v.iter().map(|_| r.random::<f64>()).collect())
            .collect();
        l.shuffle(&mut r);
        let m =
            EcocModel::train_features(&f, &l, names(4), &bank(), &TrainOptions::default()).unwrap();
        let mut cm = ConfusionMatrix::new(4);
        for c in 0..4 {
            for _ in 0..125 {
                let x: Vec<f64> = (0..bank().feature_len())
                    .map(|_| r.random::<f64>())
                    .collect();
                cm.record(c, m.predict_features(&x));
            }
        }
        assert!(
            (cm.accuracy() - 0.25).abs() <= 0.10,
            "accuracy {}",
            cm.accuracy()
        );
    }

    #[test]
    fn training_is_deterministic() {
        let (f, l) = blobs(3, 30, 3.0, 4);
        let opts = TrainOptions {
            seed: 99,
            ..TrainOptions::default()
        };
        let a = EcocModel::train_features(&f, &l, names(3), &bank(), &opts).unwrap();
        let b = EcocModel::train_features(&f, &l, names(3), &bank(), &opts).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let back = EcocModel::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn zero_scores_decode_to_class_zero() {
        let (f, l) = blobs(5, 20, 1.0, 5);
        let m =
            EcocModel::train_features(&f, &l, names(5), &bank(), &TrainOptions::default()).unwrap();
        assert_eq!(m.decode(&vec![0.0; m.learners.len()]), 0);
    }

    #[test]
    fn training_errors() {
        let (f, l) = blobs(2, 30, 1.0, 6);
        let one = EcocModel::train_features(&f, &l, names(1), &bank(), &TrainOptions::default());
        assert!(matches!(one, Err(Error::Training(_))));

        let (f, l) = blobs(2, 10, 1.0, 6);
        assert!(
            EcocModel::train_features(&f, &l, names(2), &bank(), &TrainOptions::default()).is_err()
        );

        let (mut f, l) = blobs(2, 30, 1.0, 7);
        for (x, &y) in f.iter_mut().zip(&l) {
            if y == 1 {
                *x = vec![1.0; x.len()];
            }
        }
        let err = EcocModel::train_features(&f, &l, names(2), &bank(), &TrainOptions::default())
            .unwrap_err();
        assert!(err.to_string().contains("class 1 (c1)"), "{err}");
    }

    #[test]
    fn confusion_matrix_arithmetic() {
        let mut cm = ConfusionMatrix::new(2);
        cm.record(0, 0);
        cm.record(0, 1);
        cm.record(1, 1);
        cm.record(1, 1);
        assert_eq!(cm.row_total(0), 2);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.per_class_accuracy(), vec![0.5, 1.0]);
        assert_eq!(cm.accuracy(), 0.75);
        let id = ConfusionMatrix::identity_counts(3, 7);
        assert_eq!(id.accuracy(), 1.0);
    }

    #[test]
    fn uniform_random_predictions_hit_one_in_k() {
        let mut r = rng::stream(8);
        let mut cm = ConfusionMatrix::new(5);
        for i in 0..1000 {
            cm.record(i % 5, r.random_range(0..5));
        }
        assert!((cm.accuracy() - 0.2).abs() <= 0.05);
    }
}
