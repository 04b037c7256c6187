//! Waveform-defined security laboratory.
//!
//! An SEFDM/OFDM modem with its correlation-matrix interference model,
//! seeded channel impairments, symbol detectors (MF, ZF, iterative, sphere
//! decoding, exhaustive ML), the eavesdropper's wavelet/ECOC signal-format
//! classifier, BCF pattern scheduling and dataset generation, an
//! 802.11a-shaped frame with legitimate and eavesdropper receivers, a
//! complexity model, and the experiment runners used by the `wds` CLI.

// Guards such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod classify;
pub mod complexity;
pub mod detect;
mod error;
pub mod harness;
pub mod patterns;
pub mod rng;
pub mod sefdm;
pub mod wlan;

pub use num_complex::Complex64 as Complex;

pub use channel::{ChannelProfile, NoiseSpec};
pub use classify::{ConfusionMatrix, EcocModel, LabeledDataset, WaveletBank};
pub use detect::{DetectorKind, DetectorResult};
pub use error::{Error, Result};
pub use patterns::{BcfPattern, Schedule};
pub use sefdm::{Constellation, CorrelationMatrix, Modem, Oversampling, SefdmConfig};
pub use wlan::{WdsFrame, WlanConfig};
