//! BCF pattern sets, per-symbol schedules and labelled dataset generation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{impair, ChannelProfile, NoiseSpec};
use crate::classify::dataset::{GenerationMode, LabeledDataset, Record};
use crate::sefdm::{Constellation, Modem, SefdmConfig};
use crate::{rng, Complex, Error, Result};

/// An ordered set of BCF classes, strictly decreasing from OFDM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcfPattern {
    name: String,
    alphas: Vec<f64>,
    delta: f64,
}

impl BcfPattern {
    pub fn new(name: impl Into<String>, alphas: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if alphas.first() != Some(&1.0) {
            return Err(Error::InvalidConfig(format!(
                "pattern {name} must start at α = 1"
            )));
        }
        if alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "pattern {name} has α outside (0, 1]"
            )));
        }
        if alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "pattern {name} must be strictly decreasing"
            )));
        }
        let delta = if alphas.len() > 1 {
            alphas[0] - alphas[1]
        } else {
            0.0
        };
        Ok(Self {
            name,
            alphas,
            delta,
        })
    }

    pub fn type1() -> Self {
        Self::new("type1", vec![1.0, 0.9, 0.8, 0.7]).unwrap()
    }

    pub fn type2() -> Self {
        Self::new("type2", vec![1.0, 0.95, 0.90, 0.85, 0.80, 0.75, 0.70]).unwrap()
    }

    pub fn type3() -> Self {
        Self::new("type3", vec![1.0, 0.985, 0.97, 0.955, 0.94]).unwrap()
    }

    /// The Type-III set as carried in the WLAN PSDU.
    pub fn wlan_type3() -> Self {
        Self::new("wlan-type3", vec![1.0, 0.985, 0.97, 0.955, 0.94]).unwrap()
    }

    pub fn by_name(name: &str) -> Result<Self> {
        builtin_patterns()
            .remove(&name.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown BCF pattern '{name}'")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha(&self, class: usize) -> Result<f64> {
        self.alphas
            .get(class)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: class,
                len: self.alphas.len(),
            })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_classes(&self) -> usize {
        self.alphas.len()
    }

    /// Class index of a nominal α (exact match to 1e-12).
    pub fn class_of(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|&a| (a - alpha).abs() < 1e-12)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.alphas.iter().map(|a| format!("alpha={a}")).collect()
    }
}

pub fn builtin_patterns() -> BTreeMap<String, BcfPattern> {
    [
        BcfPattern::type1(),
        BcfPattern::type2(),
        BcfPattern::type3(),
        BcfPattern::wlan_type3(),
    ]
    .into_iter()
    .map(|p| (p.name.clone(), p))
    .collect()
}

/// Per-symbol BCF classes drawn uniformly from a pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub classes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl Schedule {
    /// A schedule with explicitly chosen classes.
    pub fn from_classes(p: &BcfPattern, classes: Vec<usize>) -> Result<Self> {
        let alphas = classes.iter().map(|&c| p.alpha(c)).collect::<Result<_>>()?;
        Ok(Self {
            classes,
            alphas,
            seed: 0,
        })
    }

    pub fn constant(p: &BcfPattern, class: usize, len: usize) -> Result<Self> {
        Self::from_classes(p, vec![class; len])
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub fn schedule(p: &BcfPattern, n_symbols: usize, seed: u64) -> Schedule {
    let mut r = rng::stream(seed);
    let classes: Vec<usize> = (0..n_symbols)
        .map(|_| r.random_range(0..p.n_classes()))
        .collect();
    let alphas = classes.iter().map(|&c| p.alphas[c]).collect();
    Schedule {
        classes,
        alphas,
        seed,
    }
}

/// Es/N0 assignment for generated records.
#[derive(Debug, Clone, PartialEq)]
pub enum NoisePlan {
    Fixed(f64),
    /// Uniform draw per record from the listed points.
    Uniform(Vec<f64>),
}

impl NoisePlan {
    /// −20 dB to 50 dB in 10 dB steps.
    pub fn training_grid() -> Self {
        NoisePlan::Uniform((0..8).map(|i| -20.0 + 10.0 * i as f64).collect())
    }

    pub fn noiseless() -> Self {
        NoisePlan::Fixed(f64::INFINITY)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoisePlan::Fixed(v) => *v,
            NoisePlan::Uniform(grid) => grid[rng.random_range(0..grid.len())],
        }
    }
}

impl fmt::Display for NoisePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoisePlan::Fixed(v) => write!(f, "fixed:{v}"),
            NoisePlan::Uniform(g) => {
                let s: Vec<String> = g.iter().map(f64::to_string).collect();
                write!(f, "uniform:{}", s.join(","))
            }
        }
    }
}

impl FromStr for NoisePlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "noise plan '{s}': expected fixed:<dB> or uniform:<dB,...>"
            ))
        };
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        match kind.trim() {
            "fixed" => Ok(NoisePlan::Fixed(num(rest)?)),
            "uniform" => {
                let g = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if g.is_empty() {
                    return Err(bad());
                }
                Ok(NoisePlan::Uniform(g))
            }
            _ => Err(bad()),
        }
    }
}

// Seed path tags.
const TAG_SOURCE: u64 = 0x5352_4345;
const TAG_CHANNEL: u64 = 0x4348_4e4c;

/// Everything needed to regenerate any record of a dataset on demand.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub pattern: BcfPattern,
    /// Waveform template; its BCF is replaced per class.
    pub config: SefdmConfig,
    pub profile: Option<ChannelProfile>,
    pub noise: NoisePlan,
    pub mode: GenerationMode,
    pub constellation: Constellation,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(pattern: BcfPattern, config: SefdmConfig, mode: GenerationMode, seed: u64) -> Self {
        Self {
            pattern,
            config,
            profile: None,
            noise: NoisePlan::training_grid(),
            mode,
            constellation: Constellation::qpsk(),
            seed,
        }
    }

    pub fn with_profile(mut self, profile: Option<ChannelProfile>) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_noise(mut self, noise: NoisePlan) -> Self {
        self.noise = noise;
        self
    }

    pub fn modems(&self) -> Result<Vec<Modem>> {
        self.pattern
            .alphas()
            .iter()
            .map(|&a| Ok(Modem::new(&self.config.with_bcf(a)?)))
            .collect()
    }

    /// Source symbols for record `index` of `class`. DA reuses one vector per class.
    pub fn source(&self, class: usize, index: usize) -> Vec<Complex> {
        let path = match self.mode {
            GenerationMode::Dd => vec![TAG_SOURCE, class as u64, index as u64],
            GenerationMode::Da => vec![TAG_SOURCE, class as u64],
        };
        let mut r = rng::derived_stream(self.seed, &path);
        let pts = self.constellation.points();
        (0..self.config.n_subcarriers())
            .map(|_| pts[r.random_range(0..pts.len())])
            .collect()
    }

    /// Regenerates one record; `modems` must come from [`DatasetSpec::modems`].
    pub fn record(&self, modems: &[Modem], class: usize, index: usize) -> Result<Record> {
        let source = self.source(class, index);
        let clean = modems[class].modulate(&source)?;
        let mut r = rng::derived_stream(self.seed, &[TAG_CHANNEL, class as u64, index as u64]);
        let es_n0_db = self.noise.draw(&mut r);
        let samples = impair(
            &clean,
            self.profile.as_ref(),
            NoiseSpec::new(es_n0_db),
            &mut r,
        )?;
        Ok(Record {
            samples,
            label: class,
            es_n0_db,
            source,
        })
    }

    pub fn generate(&self, per_class: usize) -> Result<LabeledDataset> {
        self.pattern.alpha(0)?;
        let modems = self.modems()?;
        let k = self.pattern.n_classes();
        let records = (0..k * per_class)
            .into_par_iter()
            .map(|i| self.record(&modems, i / per_class, i % per_class))
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset {
            pattern: self.pattern.clone(),
            config: self.config.clone(),
            mode: self.mode,
            seed: self.seed,
            profile: self.profile.clone(),
            noise: self.noise.clone(),
            records,
        })
    }
}

/// Fresh source symbols and an independent channel for every record.
pub fn generate_dd(
    p: &BcfPattern,
    per_class: usize,
    cfg: &SefdmConfig,
    profile: Option<&ChannelProfile>,
    noise: NoisePlan,
    seed: u64,
) -> Result<LabeledDataset> {
    DatasetSpec::new(p.clone(), cfg.clone(), GenerationMode::Dd, seed)
        .with_profile(profile.cloned())
        .with_noise(noise)
        .generate(per_class)
}

/// One source symbol per class, expanded through independent channels.
pub fn generate_da(
    p: &BcfPattern,
    per_class: usize,
    cfg: &SefdmConfig,
    profile: Option<&ChannelProfile>,
    noise: NoisePlan,
    seed: u64,
) -> Result<LabeledDataset> {
    DatasetSpec::new(p.clone(), cfg.clone(), GenerationMode::Da, seed)
        .with_profile(profile.cloned())
        .with_noise(noise)
        .generate(per_class)
}
