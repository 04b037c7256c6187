use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::ChannelProfile;
use crate::classify::GenerationMode;
use crate::detect::{DetectorKind, ID_DEFAULT_ITERATIONS};
use crate::patterns::{BcfPattern, NoisePlan};
use crate::sefdm::{Oversampling, SefdmConfig};
use crate::wlan::WlanConfig;
use crate::{Error, Result};

/// `key = value` lines; `#` starts a comment.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!(
                "line {}: expected 'key = value', got '{line}'",
                no + 1
            ))
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", no + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!(
                "line {}: duplicate key '{key}'",
                no + 1
            )));
        }
    }
    Ok(map)
}

/// A comma list (`0, 5, 10`) or an inclusive range `start:step:stop`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::Parse(format!(
            "grid '{s}': expected 'a, b, c' or 'start:step:stop'"
        ))
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + step * i as f64).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Ber,
    Classify,
    MappingBer,
    Complexity,
    GenDataset,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Ber => "ber",
            ExperimentKind::Classify => "classify",
            ExperimentKind::MappingBer => "mapping-ber",
            ExperimentKind::Complexity => "complexity",
            ExperimentKind::GenDataset => "gen-dataset",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ber" => Ok(ExperimentKind::Ber),
            "classify" => Ok(ExperimentKind::Classify),
            "mapping-ber" => Ok(ExperimentKind::MappingBer),
            "complexity" => Ok(ExperimentKind::Complexity),
            "gen-dataset" => Ok(ExperimentKind::GenDataset),
            other => Err(Error::Parse(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Receive chain simulated by a BER sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Bare modem: modulate, AWGN, demodulate, detect.
    Modem,
    Legit,
    Scenario1,
    Scenario2,
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Modem => "modem",
            Pipeline::Legit => "legit",
            Pipeline::Scenario1 => "scenario1",
            Pipeline::Scenario2 => "scenario2",
        }
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "modem" => Ok(Pipeline::Modem),
            "legit" => Ok(Pipeline::Legit),
            "scenario1" => Ok(Pipeline::Scenario1),
            "scenario2" => Ok(Pipeline::Scenario2),
            other => Err(Error::Parse(format!("unknown pipeline '{other}'"))),
        }
    }
}

/// BCF classifier used by the Scenario-II eavesdropper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EveClassifier {
    /// Load a model file, or train one from the training keys when absent.
    Model(Option<PathBuf>),
    Random,
    Oracle,
}

/// Source of the confusion matrix replayed by a mapping-BER run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfusionSource {
    Identity,
    Uniform,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub es_n0_db: Vec<f64>,
    pub pattern: BcfPattern,
    /// Fixed BCF for every symbol; otherwise drawn from the pattern.
    pub alpha: Option<f64>,
    pub n_subcarriers: usize,
    pub oversampling: Oversampling,
    pub sample_rate: f64,
    pub carrier_freq: f64,
    pub pipeline: Pipeline,
    pub detector: DetectorKind,
    pub id_iterations: usize,
    pub trials: usize,
    pub max_trials: usize,
    pub min_errors: u64,
    pub batch: usize,
    pub psdu_symbols: usize,
    pub profile: Option<ChannelProfile>,
    pub perfect_csi: bool,
    pub classifier: EveClassifier,
    pub mode: GenerationMode,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub train_noise: NoisePlan,
    pub n_scales: usize,
    pub epochs: usize,
    pub lambda: f64,
    pub confusion: ConfusionSource,
    pub per_class: usize,
    pub noise: NoisePlan,
    /// Resolved configuration, echoed into every output.
    pub echo: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "es_n0_db",
    "pattern",
    "alpha",
    "n_subcarriers",
    "rho",
    "sample_rate",
    "carrier_freq",
    "pipeline",
    "detector",
    "id.max_iter",
    "sd.node_budget",
    "trials",
    "max_trials",
    "min_errors",
    "batch",
    "psdu_symbols",
    "channel",
    "perfect_csi",
    "classifier",
    "model",
    "mode",
    "train_per_class",
    "test_per_class",
    "train_es_n0_db",
    "n_scales",
    "epochs",
    "lambda",
    "confusion",
    "per_class",
    "noise",
];

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &str, default: &str) -> String {
        let v = self
            .map
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string());
        self.echo.insert(key.to_string(), v.clone());
        v
    }

    fn parse<T: FromStr>(&mut self, key: &str, default: &str) -> Result<T> {
        let v = self.raw(key, default);
        v.parse()
            .map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}'")))
    }

    fn optional(&mut self, key: &str) -> Option<String> {
        let v = self.map.get(key).cloned();
        if let Some(v) = &v {
            self.echo.insert(key.to_string(), v.clone());
        }
        v
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!(
            "{key}: expected true or false, got '{v}'"
        ))),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>, kind: ExperimentKind) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_flat(&parse_flat(&text)?, kind)
    }

    pub fn from_text(text: &str, kind: ExperimentKind) -> Result<Self> {
        Self::from_flat(&parse_flat(text)?, kind)
    }

    /// Builds a configuration; keys absent from `map` take their defaults.
    pub fn from_flat(map: &BTreeMap<String, String>, kind: ExperimentKind) -> Result<Self> {
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) && !key.starts_with("channel.") {
                return Err(Error::InvalidConfig(format!("unknown key '{key}'")));
            }
        }
        if let Some(e) = map.get("experiment") {
            let declared: ExperimentKind = e.parse()?;
            if declared != kind {
                return Err(Error::InvalidConfig(format!(
                    "config declares experiment '{declared}' but '{kind}' was requested"
                )));
            }
        }
        let mut r = Reader {
            map,
            echo: BTreeMap::new(),
        };
        r.echo.insert("experiment".into(), kind.to_string());
        let dataset_kind = matches!(kind, ExperimentKind::Classify | ExperimentKind::GenDataset);

        let seed = r.parse("seed", "1")?;
        let es_n0_db = parse_grid(&r.raw("es_n0_db", "0:5:30"))?;
        let pattern = BcfPattern::by_name(&r.raw("pattern", "wlan-type3"))?;
        let alpha = match r.optional("alpha") {
            Some(v) => {
                let a: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("alpha: cannot parse '{v}'")))?;
                if !(a > 0.0 && a <= 1.0) {
                    return Err(Error::InvalidConfig(format!("alpha {a} outside (0, 1]")));
                }
                Some(a)
            }
            None => None,
        };
        let n_subcarriers = r.parse("n_subcarriers", "52")?;
        let oversampling = r.parse("rho", "16/13")?;
        let sample_rate: f64 = r.parse("sample_rate", "20e6")?;
        let carrier_freq: f64 = r.parse("carrier_freq", "2.412e9")?;
        let pipeline = r.parse("pipeline", "legit")?;
        let id_iterations: usize = r.parse("id.max_iter", &ID_DEFAULT_ITERATIONS.to_string())?;
        let node_budget: u64 = r.parse("sd.node_budget", "10000000")?;
        let detector = match r.raw("detector", "id").as_str() {
            "id" => DetectorKind::Id {
                max_iter: id_iterations,
            },
            "sd" => DetectorKind::Sd { node_budget },
            other => other.parse()?,
        };
        let trials: usize = r.parse("trials", "100")?;
        let max_trials: usize = r.parse("max_trials", &(trials * 100).to_string())?;
        let min_errors = r.parse("min_errors", "100")?;
        let batch: usize = r.parse("batch", "32")?;
        let psdu_symbols: usize = r.parse("psdu_symbols", "20")?;

        let channel = r.raw("channel", if dataset_kind { "indoor" } else { "awgn" });
        let profile = match channel.as_str() {
            "awgn" => None,
            "indoor" => {
                let defaults = ChannelProfile::indoor(sample_rate, carrier_freq);
                let p = ChannelProfile::from_flat(map, &defaults)?;
                for (k, v) in p.to_flat() {
                    r.echo.insert(k, v);
                }
                Some(p)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "channel '{other}': expected awgn or indoor"
                )))
            }
        };
        let perfect_csi = parse_bool("perfect_csi", &r.raw("perfect_csi", "false"))?;
        let classifier = match r.raw("classifier", "model").as_str() {
            "model" => EveClassifier::Model(r.optional("model").map(PathBuf::from)),
            "random" => EveClassifier::Random,
            "oracle" => EveClassifier::Oracle,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "classifier '{other}': expected model, random or oracle"
                )))
            }
        };
        let mode = r.parse("mode", "dd")?;
        let train_per_class = r.parse("train_per_class", "500")?;
        let test_per_class = r.parse("test_per_class", "200")?;
        let train_noise = NoisePlan::Uniform(parse_grid(&r.raw("train_es_n0_db", "-20:10:50"))?);
        let n_scales = r.parse("n_scales", "32")?;
        let epochs = r.parse("epochs", "50")?;
        let lambda: f64 = r.parse("lambda", "1e-3")?;
        let confusion = match r.raw("confusion", "identity").as_str() {
            "identity" => ConfusionSource::Identity,
            "uniform" => ConfusionSource::Uniform,
            path => ConfusionSource::File(PathBuf::from(path)),
        };
        let per_class = r.parse("per_class", "100")?;
        let noise = r.parse("noise", "uniform:-20,-10,0,10,20,30,40,50")?;

        if trials == 0 || batch == 0 || psdu_symbols == 0 {
            return Err(Error::InvalidConfig(
                "trials, batch and psdu_symbols must be at least 1".into(),
            ));
        }
        if max_trials < trials {
            return Err(Error::InvalidConfig(
                "max_trials must be at least trials".into(),
            ));
        }
        if !(lambda > 0.0) || epochs == 0 {
            return Err(Error::InvalidConfig(
                "lambda must be positive and epochs at least 1".into(),
            ));
        }
        let cfg = Self {
            kind,
            seed,
            es_n0_db,
            pattern,
            alpha,
            n_subcarriers,
            oversampling,
            sample_rate,
            carrier_freq,
            pipeline,
            detector,
            id_iterations,
            trials,
            max_trials,
            min_errors,
            batch,
            psdu_symbols,
            profile,
            perfect_csi,
            classifier,
            mode,
            train_per_class,
            test_per_class,
            train_noise,
            n_scales,
            epochs,
            lambda,
            confusion,
            per_class,
            noise,
            echo: r.echo,
        };
        cfg.sefdm_template()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.echo.insert("seed".into(), seed.to_string());
        self
    }

    pub fn is_wlan(&self) -> bool {
        self.pattern.name().starts_with("wlan")
    }

    /// α = 1 waveform geometry; WLAN patterns use the centred 802.11a band.
    pub fn sefdm_template(&self) -> Result<SefdmConfig> {
        if self.is_wlan() {
            let w = WlanConfig::default();
            if self.n_subcarriers != w.n_occupied || self.oversampling != w.oversampling() {
                return Err(Error::InvalidConfig(format!(
                    "WLAN patterns need n_subcarriers = {} and rho = {}",
                    w.n_occupied,
                    w.oversampling()
                )));
            }
            return w.sefdm_config(1.0);
        }
        SefdmConfig::new(self.n_subcarriers, self.oversampling, 1.0, self.sample_rate)
    }

    pub fn echo_lines(&self) -> Vec<String> {
        self.echo
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_parsing() {
        let m = parse_flat("# comment\nseed = 7\n\nes_n0_db = 0, 10 # trailing\n").unwrap();
        assert_eq!(m["seed"], "7");
        assert_eq!(m["es_n0_db"], "0, 10");
        assert!(parse_flat("seed 7").is_err());
        assert!(parse_flat("a = 1\na = 2").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:10:30").unwrap(), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(parse_grid("-20:10:50").unwrap().len(), 8);
        assert_eq!(parse_grid("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_grid("inf").unwrap(), vec![f64::INFINITY]);
        assert!(parse_grid("0:0:3").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c = ExperimentConfig::from_text("", ExperimentKind::Ber).unwrap();
        assert_eq!(c.pattern.name(), "wlan-type3");
        assert_eq!(c.sefdm_template().unwrap().n_samples(), 64);
        assert!(c.profile.is_none());
        let d = ExperimentConfig::from_text(
            "pattern = type1\nrho = 8\nn_subcarriers = 256",
            ExperimentKind::Classify,
        )
        .unwrap();
        assert!(d.profile.is_some());
        assert_eq!(d.echo["channel.k_factor"], "4");
        assert!(ExperimentConfig::from_text("bogus = 1", ExperimentKind::Ber).is_err());
        assert!(ExperimentConfig::from_text("experiment = classify", ExperimentKind::Ber).is_err());
        assert!(
            ExperimentConfig::from_text("pattern = wlan-type3\nrho = 2", ExperimentKind::Ber)
                .is_err()
        );
        assert!(ExperimentConfig::from_text("trials = 0", ExperimentKind::Ber).is_err());
        let e =
            ExperimentConfig::from_text("detector = sd\nsd.node_budget = 5", ExperimentKind::Ber)
                .unwrap();
        assert_eq!(e.detector, DetectorKind::Sd { node_budget: 5 });
    }
}
