use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{EveClassifier, ExperimentConfig, Pipeline};
use super::study::train_model;
use super::table::{ResultTable, Row};
use crate::channel::{apply_cfo, awgn, mean_energy, FadingRealization, NoiseSpec};
use crate::classify::{ConfusionMatrix, EcocModel};
use crate::patterns::{schedule, Schedule};
use crate::sefdm::{correlation_matrix, Constellation, CorrelationMatrix, Modem};
use crate::wlan::{
    bit_errors, build_frame, eve_scenario1_receive, eve_scenario2_receive, legit_receive,
    ModelClassifier, ModemBank, OracleClassifier, RandomClassifier, ReceiverOptions,
    SymbolClassifier, WlanConfig,
};
use crate::{rng, Complex, Error, Result};

const TAG_BER: u64 = 0x4245_5200;
const TAG_EVE: u64 = 0x4556_4500;

/// Outcome of one simulated frame or modem block.
#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    pub errors: u64,
    pub bits: u64,
    pub confusion: Option<ConfusionMatrix>,
}

/// Bits and errors accumulated at one Es/N0 point.
#[derive(Debug, Clone)]
pub struct PointTally {
    pub errors: u64,
    pub bits: u64,
    pub trials: usize,
    pub confusion: Option<ConfusionMatrix>,
}

/// Runs batches of `batch` trials until the stop rule holds: at least
/// `min_trials` done and `min_errors` counted, or `max_trials` reached.
/// Trial `t` depends only on `t`, so the result is thread-count independent.
pub fn run_until<F>(
    min_trials: usize,
    max_trials: usize,
    min_errors: u64,
    batch: usize,
    trial: F,
) -> Result<PointTally>
where
    F: Fn(usize) -> Result<TrialOutcome> + Sync,
{
    let mut tally = PointTally {
        errors: 0,
        bits: 0,
        trials: 0,
        confusion: None,
    };
    while tally.trials < max_trials && (tally.trials < min_trials || tally.errors < min_errors) {
        let end = (tally.trials + batch).min(max_trials);
        let outcomes = (tally.trials..end)
            .into_par_iter()
            .map(&trial)
            .collect::<Result<Vec<_>>>()?;
        for o in outcomes {
            tally.errors += o.errors;
            tally.bits += o.bits;
            if let Some(cm) = o.confusion {
                match &mut tally.confusion {
                    Some(acc) => acc.merge(&cm),
                    None => tally.confusion = Some(cm),
                }
            }
        }
        tally.trials = end;
    }
    Ok(tally)
}

/// Fading (held per symbol), carrier offset, then noise scaled to the
/// frame's own energy. The stream is padded by the channel span.
pub fn transmit<R: Rng + ?Sized>(
    frame: &[Complex],
    cfg: &ExperimentConfig,
    block_len: usize,
    es_n0_db: f64,
    r: &mut R,
) -> Result<Vec<Complex>> {
    let Some(profile) = &cfg.profile else {
        return awgn(frame, NoiseSpec::new(es_n0_db), r);
    };
    let mut padded = frame.to_vec();
    padded.resize(frame.len() + profile.span(), Complex::new(0.0, 0.0));
    let faded = FadingRealization::draw(profile, r)?.apply_blocks(&padded, block_len, 0.0)?;
    let shifted = apply_cfo(&faded, profile.cfo_hz(), profile.sample_rate)?;
    let es = mean_energy(&shifted[..frame.len()]);
    let var = NoiseSpec::new(es_n0_db).variance(es);
    if var == 0.0 {
        return Ok(shifted);
    }
    let sigma = (var / 2.0).sqrt();
    Ok(shifted
        .into_iter()
        .map(|v| {
            let re: f64 = StandardNormal.sample(r);
            let im: f64 = StandardNormal.sample(r);
            v + Complex::new(re, im) * sigma
        })
        .collect())
}

fn random_bits<R: Rng + ?Sized>(n: usize, r: &mut R) -> Vec<u8> {
    (0..n).map(|_| r.random_range(0..2u8)).collect()
}

fn draw_schedule<R: Rng + ?Sized>(cfg: &ExperimentConfig, n: usize, r: &mut R) -> Result<Schedule> {
    match cfg.alpha {
        Some(a) => {
            let class = cfg.pattern.class_of(a).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "alpha {a} is not a class of pattern {}",
                    cfg.pattern.name()
                ))
            })?;
            Schedule::constant(&cfg.pattern, class, n)
        }
        None => Ok(schedule(&cfg.pattern, n, r.random())),
    }
}

pub(crate) fn receiver_options(cfg: &ExperimentConfig) -> ReceiverOptions {
    ReceiverOptions {
        perfect_csi: cfg.perfect_csi,
        correct_cfo: cfg.profile.is_some(),
        id_iterations: cfg.id_iterations,
        ..ReceiverOptions::default()
    }
}

struct ModemSetup {
    modems: Vec<(Modem, CorrelationMatrix)>,
}

impl ModemSetup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let template = cfg.sefdm_template()?;
        let alphas: Vec<f64> = match cfg.alpha {
            Some(a) => vec![a],
            None => cfg.pattern.alphas().to_vec(),
        };
        let modems = alphas
            .iter()
            .map(|&a| {
                let c = template.with_bcf(a)?;
                Ok((Modem::new(&c), correlation_matrix(&c)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { modems })
    }

    fn trial(&self, cfg: &ExperimentConfig, es_n0_db: f64, seed: u64) -> Result<TrialOutcome> {
        let mut r = rng::stream(seed);
        let (modem, corr) = &self.modems[r.random_range(0..self.modems.len())];
        let qpsk = Constellation::qpsk();
        let bits = random_bits(2 * modem.config().n_subcarriers(), &mut r);
        let s = qpsk.map_bits(&bits)?;
        let x = modem.modulate(&s)?;
        let y = transmit(&x, cfg, x.len(), es_n0_db, &mut r)?;
        let rx = modem.demodulate(&y[..x.len()])?;
        let det = cfg.detector.detect(corr, &rx, &qpsk)?;
        Ok(TrialOutcome {
            errors: bit_errors(&bits, &det.bits)?,
            bits: bits.len() as u64,
            confusion: None,
        })
    }
}

/// Symbol classifier used by a Scenario-II sweep.
enum EveModel {
    Model(Box<EcocModel>),
    Random,
    Oracle,
}

fn eve_model(cfg: &ExperimentConfig) -> Result<EveModel> {
    Ok(match &cfg.classifier {
        EveClassifier::Model(Some(path)) => {
            let m = EcocModel::load(path)?;
            if m.n_classes != cfg.pattern.n_classes() {
                return Err(Error::InvalidConfig(format!(
                    "model has {} classes, pattern {} has {}",
                    m.n_classes,
                    cfg.pattern.name(),
                    cfg.pattern.n_classes()
                )));
            }
            EveModel::Model(Box::new(m))
        }
        EveClassifier::Model(None) => EveModel::Model(Box::new(train_model(cfg)?)),
        EveClassifier::Random => EveModel::Random,
        EveClassifier::Oracle => EveModel::Oracle,
    })
}

fn frame_trial(
    cfg: &ExperimentConfig,
    wlan: &WlanConfig,
    eve: Option<&EveModel>,
    es_n0_db: f64,
    seed: u64,
    bank: &mut ModemBank,
) -> Result<TrialOutcome> {
    let mut r = rng::stream(seed);
    let sched = draw_schedule(cfg, cfg.psdu_symbols, &mut r)?;
    let bits = random_bits(wlan.bits_per_symbol() * sched.len(), &mut r);
    let frame = build_frame(wlan, &sched, &bits, bank)?.samples();
    let stream = transmit(&frame, cfg, wlan.symbol_len(), es_n0_db, &mut r)?;
    let opts = receiver_options(cfg);
    let (rx, confusion) = match cfg.pipeline {
        Pipeline::Legit => (legit_receive(&stream, wlan, &sched, &opts, bank)?, None),
        Pipeline::Scenario1 => (
            eve_scenario1_receive(&stream, wlan, Some(sched.len()), &opts, bank)?,
            None,
        ),
        Pipeline::Scenario2 => {
            let mut random;
            let mut model;
            let classifier: &mut dyn SymbolClassifier = match eve {
                Some(EveModel::Model(m)) => {
                    model = ModelClassifier::new(m)?;
                    &mut model
                }
                Some(EveModel::Random) => {
                    random = RandomClassifier::new(
                        cfg.pattern.n_classes(),
                        rng::derive(seed, &[TAG_EVE]),
                    );
                    &mut random
                }
                _ => &mut OracleClassifier,
            };
            let (bits, cm) = eve_scenario2_receive(
                &stream,
                wlan,
                &cfg.pattern,
                classifier,
                &sched,
                &opts,
                bank,
            )?;
            (bits, Some(cm))
        }
        Pipeline::Modem => unreachable!("modem trials do not build frames"),
    };
    Ok(TrialOutcome {
        errors: bit_errors(&bits, &rx)?,
        bits: bits.len() as u64,
        confusion,
    })
}

/// BER per Es/N0 point for the configured pipeline. Scenario-II sweeps also
/// report the eavesdropper's per-symbol classification accuracy.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(cfg, "es_n0_db", "ber");
    let series = cfg.pipeline.name();
    let modem = match cfg.pipeline {
        Pipeline::Modem => Some(ModemSetup::new(cfg)?),
        _ => {
            if !cfg.is_wlan() {
                return Err(Error::InvalidConfig(format!(
                    "pipeline {series} needs a WLAN pattern, got {}",
                    cfg.pattern.name()
                )));
            }
            None
        }
    };
    let eve = match cfg.pipeline {
        Pipeline::Scenario2 => Some(eve_model(cfg)?),
        _ => None,
    };
    let wlan = WlanConfig::default();
    for (i, &es) in cfg.es_n0_db.iter().enumerate() {
        let seed_of = |t: usize| rng::derive(cfg.seed, &[TAG_BER, i as u64, t as u64]);
        let tally =
            run_until(
                cfg.trials,
                cfg.max_trials,
                cfg.min_errors,
                cfg.batch,
                |t| match &modem {
                    Some(m) => m.trial(cfg, es, seed_of(t)),
                    None => frame_trial(
                        cfg,
                        &wlan,
                        eve.as_ref(),
                        es,
                        seed_of(t),
                        &mut ModemBank::new(),
                    ),
                },
            )?;
        table.push(Row::proportion(series, es, tally.errors, tally.bits));
        if let Some(cm) = &tally.confusion {
            let correct: u64 = (0..cm.n_classes()).map(|c| cm.counts[c][c]).sum();
            table.push(Row::proportion(
                "classifier-accuracy",
                es,
                correct,
                cm.total(),
            ));
        }
    }
    Ok(table)
}
