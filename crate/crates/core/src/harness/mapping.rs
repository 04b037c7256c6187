use rand::Rng;
use rayon::prelude::*;

use super::ber::{receiver_options, transmit};
use super::config::{ConfusionSource, ExperimentConfig};
use super::study::load_confusion;
use super::table::{ResultTable, Row};
use crate::classify::ConfusionMatrix;
use crate::patterns::Schedule;
use crate::wlan::{
    bit_errors, build_frame, eve_scenario2_receive, FixedClassifier, ModemBank, WlanConfig,
};
use crate::{rng, Error, Result};

const TAG_MAP: u64 = 0x4d41_5000;

/// Joint (true, predicted) weights summing to one.
pub fn cell_weights(source: &ConfusionSource, k: usize, es_n0_db: f64) -> Result<Vec<Vec<f64>>> {
    let cm = match source {
        ConfusionSource::Identity => ConfusionMatrix::identity_counts(k, 1),
        ConfusionSource::Uniform => ConfusionMatrix {
            counts: vec![vec![1; k]; k],
        },
        ConfusionSource::File(path) => load_confusion(path, es_n0_db)?,
    };
    if cm.n_classes() != k || cm.counts.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidConfig(format!(
            "confusion matrix is not {k} x {k}"
        )));
    }
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidConfig(
            "confusion matrix has no counts".into(),
        ));
    }
    Ok(cm
        .counts
        .iter()
        .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
        .collect())
}

fn cell_trial(
    cfg: &ExperimentConfig,
    truth: usize,
    predicted: usize,
    es_n0_db: f64,
    seed: u64,
) -> Result<(u64, u64)> {
    let wlan = WlanConfig::default();
    let mut bank = ModemBank::new();
    let mut r = rng::stream(seed);
    let sched = Schedule::constant(&cfg.pattern, truth, cfg.psdu_symbols)?;
    let bits: Vec<u8> = (0..wlan.bits_per_symbol() * sched.len())
        .map(|_| r.random_range(0..2u8))
        .collect();
    let frame = build_frame(&wlan, &sched, &bits, &mut bank)?.samples();
    let stream = transmit(&frame, cfg, wlan.symbol_len(), es_n0_db, &mut r)?;
    let (rx, _) = eve_scenario2_receive(
        &stream,
        &wlan,
        &cfg.pattern,
        &mut FixedClassifier(predicted),
        &sched,
        &receiver_options(cfg),
        &mut bank,
    )?;
    Ok((bit_errors(&bits, &rx)?, bits.len() as u64))
}

/// BER of every (true α, assumed α) pair, combined by confusion frequency
/// and by a plain average over all pairs.
pub fn run_mapping_ber(cfg: &ExperimentConfig) -> Result<ResultTable> {
    if !cfg.is_wlan() {
        return Err(Error::InvalidConfig(format!(
            "mapping BER needs a WLAN pattern, got {}",
            cfg.pattern.name()
        )));
    }
    let k = cfg.pattern.n_classes();
    let mut table = ResultTable::new(cfg, "es_n0_db", "ber");
    for (i, &es) in cfg.es_n0_db.iter().enumerate() {
        let weights = cell_weights(&cfg.confusion, k, es)?;
        let jobs: Vec<(usize, usize, usize)> = (0..k)
            .flat_map(|t| (0..k).flat_map(move |p| (0..cfg.trials).map(move |n| (t, p, n))))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(t, p, n)| {
                cell_trial(
                    cfg,
                    t,
                    p,
                    es,
                    rng::derive(cfg.seed, &[TAG_MAP, i as u64, t as u64, p as u64, n as u64]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cells = vec![vec![(0u64, 0u64); k]; k];
        for (&(t, p, _), (e, b)) in jobs.iter().zip(results) {
            cells[t][p].0 += e;
            cells[t][p].1 += b;
        }
        let (mut weighted, mut var_w, mut plain, mut var_p) = (0.0, 0.0, 0.0, 0.0);
        let m = (k * k) as f64;
        for t in 0..k {
            for p in 0..k {
                let (e, b) = cells[t][p];
                let row = Row::proportion(format!("cell-{t}-{p}"), es, e, b);
                let w = weights[t][p];
                weighted += w * row.metric;
                var_w += (w * row.stderr).powi(2);
                plain += row.metric / m;
                var_p += (row.stderr / m).powi(2);
                table.push(row);
            }
        }
        let bits_total: u64 = cells.iter().flatten().map(|c| c.1).sum();
        let errors_total: u64 = cells.iter().flatten().map(|c| c.0).sum();
        table.push(Row {
            series: "weighted".into(),
            x: es,
            metric: weighted,
            stderr: var_w.sqrt(),
            n: bits_total,
            hits: errors_total,
        });
        table.push(Row {
            series: "unweighted".into(),
            x: es,
            metric: plain,
            stderr: var_p.sqrt(),
            n: bits_total,
            hits: errors_total,
        });
    }
    Ok(table)
}
