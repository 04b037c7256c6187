use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelProfile;
use crate::patterns::{BcfPattern, NoisePlan};
use crate::sefdm::SefdmConfig;
use crate::{Complex, Error, Result};

const MAGIC: &[u8; 8] = b"WDSDSET1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerationMode {
    /// Data augmentation: one source symbol per class.
    Da,
    /// Data diversification: fresh source symbols per record.
    Dd,
}

impl fmt::Display for GenerationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenerationMode::Da => "da",
            GenerationMode::Dd => "dd",
        })
    }
}

impl FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "da" => Ok(GenerationMode::Da),
            "dd" => Ok(GenerationMode::Dd),
            other => Err(Error::Parse(format!(
                "generation mode '{other}': expected da or dd"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub samples: Vec<Complex>,
    pub label: usize,
    pub es_n0_db: f64,
    /// Transmitted constellation symbols; empty when loaded from a file.
    pub source: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub pattern: BcfPattern,
    pub config: SefdmConfig,
    pub mode: GenerationMode,
    pub seed: u64,
    pub profile: Option<ChannelProfile>,
    pub noise: NoisePlan,
    pub records: Vec<Record>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    pattern: BcfPattern,
    config: SefdmConfig,
    mode: GenerationMode,
    seed: u64,
    count: usize,
    n_samples: usize,
    class_counts: Vec<usize>,
    noise: String,
    channel: Option<BTreeMap<String, String>>,
}

impl LabeledDataset {
    pub fn n_samples(&self) -> usize {
        self.config.n_samples()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.pattern.n_classes()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.n_samples();
        for r in &self.records {
            if r.samples.len() != q {
                return Err(Error::LengthMismatch {
                    expected: q,
                    actual: r.samples.len(),
                });
            }
            if r.label >= self.pattern.n_classes() {
                return Err(Error::IndexOutOfRange {
                    index: r.label,
                    len: self.pattern.n_classes(),
                });
            }
        }
        Ok(())
    }

    /// Little-endian binary: magic, `u32` header length, JSON header, then per
    /// record `u32` label, `f64` Es/N0 and `Q` interleaved I/Q `f64` pairs.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let header = Header {
            pattern: self.pattern.clone(),
            config: self.config.clone(),
            mode: self.mode,
            seed: self.seed,
            count: self.records.len(),
            n_samples: self.n_samples(),
            class_counts: self.class_counts(),
            noise: self.noise.to_string(),
            channel: self
                .profile
                .as_ref()
                .map(|p| p.to_flat().into_iter().collect()),
        };
        let json = serde_json::to_vec(&header)?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        for r in &self.records {
            w.write_all(&(r.label as u32).to_le_bytes())?;
            w.write_all(&r.es_n0_db.to_le_bytes())?;
            for v in &r.samples {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a dataset file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let mut json = vec![0u8; u32::from_le_bytes(u32buf) as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        let profile = match &header.channel {
            Some(map) => Some(ChannelProfile::from_flat(
                map,
                &ChannelProfile::line_of_sight(header.config.sample_rate()),
            )?),
            None => None,
        };
        let mut next_f64 = |r: &mut BufReader<File>| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let mut records = Vec::with_capacity(header.count);
        for _ in 0..header.count {
            r.read_exact(&mut u32buf)?;
            let label = u32::from_le_bytes(u32buf) as usize;
            let es_n0_db = next_f64(&mut r)?;
            let samples = (0..header.n_samples)
                .map(|_| Ok(Complex::new(next_f64(&mut r)?, next_f64(&mut r)?)))
                .collect::<Result<Vec<_>>>()?;
            records.push(Record {
                samples,
                label,
                es_n0_db,
                source: Vec::new(),
            });
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(Error::Format("trailing bytes after the last record".into()));
        }
        let ds = Self {
            pattern: header.pattern,
            config: header.config,
            mode: header.mode,
            seed: header.seed,
            profile,
            noise: header.noise.parse()?,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// One CSV line per record: index, label, α, Es/N0, mean sample energy.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# pattern = {}", self.pattern.name())?;
        writeln!(w, "# mode = {}", self.mode)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# n_samples = {}", self.n_samples())?;
        writeln!(w, "index,label,alpha,es_n0_db,mean_energy")?;
        for (i, r) in self.records.iter().enumerate() {
            let e = r.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.samples.len() as f64;
            writeln!(
                w,
                "{i},{},{},{},{e:.9e}",
                r.label,
                self.pattern.alphas()[r.label],
                r.es_n0_db
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::generate_dd;
    use crate::sefdm::Oversampling;

    #[test]
    fn binary_round_trip() {
        let cfg = SefdmConfig::new(8, Oversampling::integer(2).unwrap(), 1.0, 1e6).unwrap();
        let profile = ChannelProfile {
            tap_delays: vec![0.0, 2e-6],
            tap_powers_db: vec![0.0, -3.0],
            ..ChannelProfile::indoor(1e6, 2.4e9)
        };
        let ds = generate_dd(
            &BcfPattern::type1(),
            3,
            &cfg,
            Some(&profile),
            NoisePlan::training_grid(),
            4,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.bin");
        ds.write(&path).unwrap();
        let back = LabeledDataset::read(&path).unwrap();
        assert_eq!(back.records.len(), 12);
        assert_eq!(back.profile, ds.profile);
        assert_eq!(back.noise, ds.noise);
        for (a, b) in back.records.iter().zip(&ds.records) {
            assert_eq!(a.samples, b.samples);
            assert_eq!(a.label, b.label);
            assert_eq!(a.es_n0_db, b.es_n0_db);
        }
        ds.write_manifest(dir.path().join("m.csv")).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 13);

        std::fs::write(&path, b"garbage!").unwrap();
        assert!(matches!(LabeledDataset::read(&path), Err(Error::Format(_))));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("DD".parse::<GenerationMode>().unwrap(), GenerationMode::Dd);
        assert_eq!(GenerationMode::Da.to_string(), "da");
        assert!("xx".parse::<GenerationMode>().is_err());
    }
}
