use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::Result;

pub const VERSION: &str = concat!("wds-core ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub x: f64,
    pub metric: f64,
    pub stderr: f64,
    /// Bits, records or symbols behind the metric.
    pub n: u64,
    /// Errors or correct decisions counted.
    pub hits: u64,
}

impl Row {
    /// A proportion `hits / n` with its binomial standard error.
    pub fn proportion(series: impl Into<String>, x: f64, hits: u64, n: u64) -> Self {
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        Self {
            series: series.into(),
            x,
            metric: p,
            stderr: binomial_stderr(p, n),
            n,
            hits,
        }
    }

    pub fn value(series: impl Into<String>, x: f64, metric: f64) -> Self {
        Self {
            series: series.into(),
            x,
            metric,
            stderr: 0.0,
            n: 1,
            hits: 0,
        }
    }
}

pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub x_label: String,
    pub metric_label: String,
    pub seed: u64,
    pub config: Vec<String>,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn new(cfg: &ExperimentConfig, x_label: &str, metric_label: &str) -> Self {
        Self {
            experiment: cfg.kind.to_string(),
            x_label: x_label.into(),
            metric_label: metric_label.into(),
            seed: cfg.seed,
            config: cfg.echo_lines(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn series(&self, name: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.series == name).collect()
    }

    pub fn find(&self, series: &str, x: f64) -> Option<&Row> {
        self.rows.iter().find(|r| r.series == series && r.x == x)
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config.iter().find_map(|l| {
            let (k, v) = l.split_once(" = ")?;
            (k == key).then_some(v)
        })
    }

    /// Deterministic CSV: header comments, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {VERSION}");
        let _ = writeln!(s, "# experiment: {}", self.experiment);
        let _ = writeln!(s, "# seed: {}", self.seed);
        for line in &self.config {
            let _ = writeln!(s, "# config: {line}");
        }
        let _ = writeln!(
            s,
            "series,{},{},stderr,n,hits",
            self.x_label, self.metric_label
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.series, r.x, r.metric, r.stderr, r.n, r.hits
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct RunMeta<'a> {
    pub version: &'a str,
    pub experiment: &'a str,
    pub seed: u64,
    pub config: &'a [String],
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

pub fn write_meta(
    path: &Path,
    table: &ResultTable,
    wall_time_s: f64,
    outputs: &[PathBuf],
) -> Result<()> {
    let meta = RunMeta {
        version: VERSION,
        experiment: &table.experiment,
        seed: table.seed,
        config: &table.config,
        wall_time_s,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::from_text("seed = 9", ExperimentKind::Complexity).unwrap();
        let mut t = ResultTable::new(&cfg, "alpha", "ops");
        t.push(Row::value("OFDM", 1.0, 384.0));
        t.push(Row::proportion("ber", 10.0, 5, 1000));
        let csv = t.to_csv();
        assert!(csv.contains("# seed: 9\n"));
        assert!(csv.contains("# config: seed = 9\n"));
        assert!(csv.contains("series,alpha,ops,stderr,n,hits\nOFDM,1,384,0,1,0\n"));
        let se = (0.005f64 * 0.995 / 1000.0).sqrt();
        assert!(csv.ends_with(&format!("ber,10,0.005,{se},1000,5\n")));
        assert_eq!(t.find("ber", 10.0).unwrap().hits, 5);
    }
}
