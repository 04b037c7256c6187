//! Eavesdropper-side signal-format classification.

pub mod dataset;
pub mod ecoc;
pub mod features;
pub mod likelihood;
pub mod wavelet;

pub use dataset::{GenerationMode, LabeledDataset, Record};
pub use ecoc::{evaluate, predict, train, ConfusionMatrix, EcocModel, TrainOptions};
pub use features::{interquartile_range, reduce_features, FeatureExtractor};
pub use likelihood::classify_modulation_ml;
pub use wavelet::{scalogram, Scalogram, WaveletBank, WaveletFilters};
