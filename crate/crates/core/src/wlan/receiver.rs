use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rustfft::FftPlanner;

use super::frame::{ModemBank, WlanConfig};
use super::preamble::{
    l_stf, ltf_symbol, FFT_SIZE, LTF_GUARD, LTF_SPECTRUM, PREAMBLE_LEN, STF_LEN,
};
use crate::classify::{ConfusionMatrix, EcocModel, FeatureExtractor};
use crate::detect::id_soft;
use crate::patterns::{BcfPattern, Schedule};
use crate::sefdm::Constellation;
use crate::{rng, Complex, Error, Result};

pub const SYNC_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverOptions {
    /// Skip synchronization and estimation: the frame starts at sample 0 and
    /// the channel is flat with unit gain.
    pub perfect_csi: bool,
    /// Estimate and remove a carrier offset from the long training field.
    pub correct_cfo: bool,
    pub id_iterations: usize,
    /// Latest frame start the synchronizer searches for.
    pub search_window: usize,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        Self {
            perfect_csi: false,
            correct_cfo: false,
            id_iterations: 20,
            search_window: 320,
        }
    }
}

/// Per-symbol detection strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolDetector {
    /// Slice the equalized statistics directly.
    Mf,
    /// Iterative cancellation with the given iteration count.
    Id(usize),
}

/// Frame timing and per-bin channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    pub start: usize,
    /// Channel gain on bins −26..=26.
    pub gains: Vec<Complex>,
    /// Estimated carrier offset in cycles per sample.
    pub cfo: f64,
}

impl SyncResult {
    fn ideal() -> Self {
        Self {
            start: 0,
            gains: vec![Complex::new(1.0, 0.0); 53],
            cfo: 0.0,
        }
    }

    /// Linear interpolation of the gain at a fractional bin position.
    pub fn gain_at(&self, bin: f64) -> Complex {
        let x = (bin + 26.0).clamp(0.0, 52.0);
        let lo = x.floor() as usize;
        let hi = (lo + 1).min(52);
        let t = x - lo as f64;
        self.gains[lo] * (1.0 - t) + self.gains[hi] * t
    }
}

fn correlate(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn energy(a: &[Complex]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Coarse timing from the short training field, fine timing and channel
/// estimate from the long training field.
pub fn synchronize(stream: &[Complex], opts: &ReceiverOptions) -> Result<SyncResult> {
    if stream.len() < PREAMBLE_LEN {
        return Err(Error::NoFrame {
            peak: 0.0,
            threshold: SYNC_THRESHOLD,
        });
    }
    let stf = l_stf();
    let stf_norm = energy(&stf).sqrt();
    let last = opts.search_window.min(stream.len() - PREAMBLE_LEN);
    let mut coarse = 0;
    let mut peak = 0.0;
    for d in 0..=last {
        let w = &stream[d..d + STF_LEN];
        let e = energy(w).sqrt() * stf_norm;
        let m = if e > 0.0 {
            correlate(w, &stf).norm() / e
        } else {
            0.0
        };
        if m > peak {
            peak = m;
            coarse = d;
        }
    }
    if peak < SYNC_THRESHOLD {
        return Err(Error::NoFrame {
            peak,
            threshold: SYNC_THRESHOLD,
        });
    }

    let ltf = ltf_symbol();
    let nominal = coarse + STF_LEN + LTF_GUARD;
    let lo = nominal.saturating_sub(20);
    let hi = (nominal + 20).min(stream.len() - 2 * FFT_SIZE);
    let mut ltf_start = nominal.min(hi);
    let mut best = -1.0;
    for d in lo..=hi {
        let m = correlate(&stream[d..d + FFT_SIZE], &ltf).norm();
        if m > best {
            best = m;
            ltf_start = d;
        }
    }
    let start = ltf_start.saturating_sub(STF_LEN + LTF_GUARD);

    let first = &stream[ltf_start..ltf_start + FFT_SIZE];
    let second = &stream[ltf_start + FFT_SIZE..ltf_start + 2 * FFT_SIZE];
    let cfo = if opts.correct_cfo {
        correlate(second, first).arg() / (2.0 * PI * FFT_SIZE as f64)
    } else {
        0.0
    };
    let derotate = |x: &[Complex], offset: usize| -> Vec<Complex> {
        x.iter()
            .enumerate()
            .map(|(k, v)| v * Complex::from_polar(1.0, -2.0 * PI * cfo * (offset + k) as f64))
            .collect()
    };
    let a = derotate(first, 0);
    let b = derotate(second, FFT_SIZE);
    let avg: Vec<Complex> = a.iter().zip(&b).map(|(x, y)| (x + y) * 0.5).collect();
    let spectrum = dft64(&avg);
    let mut gains = vec![Complex::new(0.0, 0.0); 53];
    for (i, &l) in LTF_SPECTRUM.iter().enumerate() {
        if l != 0.0 {
            let bin = i as i64 - 26;
            gains[i] = spectrum[bin.rem_euclid(FFT_SIZE as i64) as usize] / l;
        }
    }
    gains[26] = (gains[25] + gains[27]) * 0.5;
    Ok(SyncResult { start, gains, cfo })
}

/// `(1/√64)·Σ_k x_k·exp(−j2πbk/64)`, indexed by `b mod 64`.
fn dft64(x: &[Complex]) -> Vec<Complex> {
    let mut buf = x.to_vec();
    FftPlanner::new()
        .plan_fft_forward(FFT_SIZE)
        .process(&mut buf);
    let g = 1.0 / (FFT_SIZE as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= g);
    buf
}

/// Demodulates, equalizes, detects and demaps one PSDU symbol (post-CP).
pub fn detect_symbol(
    cfg: &WlanConfig,
    j: usize,
    body: &[Complex],
    alpha: f64,
    detector: SymbolDetector,
    sync: &SyncResult,
    bank: &mut ModemBank,
) -> Result<Vec<u8>> {
    let (modem, corr) = bank.get(cfg, alpha)?;
    let eff = modem.config().effective_bcf();
    let mut r = modem.demodulate(body)?;
    for (n, v) in r.iter_mut().enumerate() {
        let h = sync.gain_at((n as i64 + cfg.first_bin) as f64 * eff);
        if h.norm_sqr() > 0.0 {
            *v /= h;
        }
    }
    let mut soft = match detector {
        SymbolDetector::Mf => r,
        SymbolDetector::Id(iters) => id_soft(corr, &r, iters)?.0,
    };
    let pilots = cfg.pilots(j);
    let cpe: Complex = cfg
        .pilot_indices()
        .iter()
        .zip(&pilots)
        .map(|(&i, p)| soft[i] * p.conj())
        .sum();
    if cpe.norm() > 0.0 {
        let rot = Complex::from_polar(1.0, -cpe.arg());
        soft.iter_mut().for_each(|v| *v *= rot);
    }
    let data: Vec<Complex> = cfg.data_indices().iter().map(|&i| soft[i]).collect();
    Ok(Constellation::qpsk().demap(&data))
}

/// Runs the PSDU chain with a per-symbol choice of α and detector.
pub fn receive_psdu<F>(
    stream: &[Complex],
    cfg: &WlanConfig,
    n_symbols: Option<usize>,
    opts: &ReceiverOptions,
    bank: &mut ModemBank,
    mut decide: F,
) -> Result<Vec<u8>>
where
    F: FnMut(usize, &[Complex]) -> Result<(f64, SymbolDetector)>,
{
    let sync = if opts.perfect_csi {
        SyncResult::ideal()
    } else {
        synchronize(stream, opts)?
    };
    let psdu_start = sync.start + PREAMBLE_LEN;
    let sym_len = cfg.symbol_len();
    let available = stream.len().saturating_sub(psdu_start) / sym_len;
    let n = n_symbols.unwrap_or(available);
    if n > available {
        return Err(Error::LengthMismatch {
            expected: cfg.frame_len(n) + sync.start,
            actual: stream.len(),
        });
    }
    let mut bits = Vec::with_capacity(n * cfg.bits_per_symbol());
    for j in 0..n {
        let off = psdu_start + j * sym_len + cfg.cp_length;
        let body: Vec<Complex> = if sync.cfo != 0.0 {
            stream[off..off + cfg.fft_size]
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex::from_polar(1.0, -2.0 * PI * sync.cfo * (off + k) as f64))
                .collect()
        } else {
            stream[off..off + cfg.fft_size].to_vec()
        };
        let (alpha, det) = decide(j, &body)?;
        bits.extend(detect_symbol(cfg, j, &body, alpha, det, &sync, bank)?);
    }
    Ok(bits)
}

/// The legitimate receiver knows the schedule and uses iterative detection.
pub fn legit_receive(
    stream: &[Complex],
    cfg: &WlanConfig,
    sched: &Schedule,
    opts: &ReceiverOptions,
    bank: &mut ModemBank,
) -> Result<Vec<u8>> {
    let iters = opts.id_iterations;
    receive_psdu(stream, cfg, Some(sched.len()), opts, bank, |j, _| {
        let alpha = sched.alphas[j];
        Ok((
            alpha,
            if alpha == 1.0 {
                SymbolDetector::Mf
            } else {
                SymbolDetector::Id(iters)
            },
        ))
    })
}

/// Scenario I: every PSDU symbol is treated as standard OFDM.
pub fn eve_scenario1_receive(
    stream: &[Complex],
    cfg: &WlanConfig,
    n_symbols: Option<usize>,
    opts: &ReceiverOptions,
    bank: &mut ModemBank,
) -> Result<Vec<u8>> {
    receive_psdu(stream, cfg, n_symbols, opts, bank, |_, _| {
        Ok((1.0, SymbolDetector::Mf))
    })
}

/// Decides the BCF class of one received PSDU symbol.
pub trait SymbolClassifier {
    /// `truth` is only available to reference classifiers.
    fn classify(&mut self, samples: &[Complex], truth: usize) -> Result<usize>;
}

/// A trained wavelet/ECOC model.
pub struct ModelClassifier<'a> {
    model: &'a EcocModel,
    extractor: FeatureExtractor,
}

impl<'a> ModelClassifier<'a> {
    pub fn new(model: &'a EcocModel) -> Result<Self> {
        Ok(Self {
            model,
            extractor: FeatureExtractor::new(&model.bank)?,
        })
    }
}

impl SymbolClassifier for ModelClassifier<'_> {
    fn classify(&mut self, samples: &[Complex], _truth: usize) -> Result<usize> {
        Ok(self
            .model
            .predict_features(&self.extractor.features(samples)?))
    }
}

/// Always right.
pub struct OracleClassifier;

impl SymbolClassifier for OracleClassifier {
    fn classify(&mut self, _samples: &[Complex], truth: usize) -> Result<usize> {
        Ok(truth)
    }
}

/// Uniform guess over `k` classes.
pub struct RandomClassifier {
    k: usize,
    stream: rng::Stream,
}

impl RandomClassifier {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            stream: rng::stream(seed),
        }
    }
}

impl SymbolClassifier for RandomClassifier {
    fn classify(&mut self, _samples: &[Complex], _truth: usize) -> Result<usize> {
        Ok(self.stream.random_range(0..self.k))
    }
}

/// Always answers the same class.
pub struct FixedClassifier(pub usize);

impl SymbolClassifier for FixedClassifier {
    fn classify(&mut self, _samples: &[Complex], _truth: usize) -> Result<usize> {
        Ok(self.0)
    }
}

/// Scenario II: classify each symbol's BCF, then detect with the guess.
#[allow(clippy::too_many_arguments)]
pub fn eve_scenario2_receive(
    stream: &[Complex],
    cfg: &WlanConfig,
    pattern: &BcfPattern,
    classifier: &mut dyn SymbolClassifier,
    truth: &Schedule,
    opts: &ReceiverOptions,
    bank: &mut ModemBank,
) -> Result<(Vec<u8>, ConfusionMatrix)> {
    let mut cm = ConfusionMatrix::new(pattern.n_classes());
    let iters = opts.id_iterations;
    let bits = receive_psdu(stream, cfg, Some(truth.len()), opts, bank, |j, body| {
        let predicted = classifier.classify(body, truth.classes[j])?;
        cm.record(truth.classes[j], predicted);
        let alpha = pattern.alpha(predicted)?;
        Ok((
            alpha,
            if alpha == 1.0 {
                SymbolDetector::Mf
            } else {
                SymbolDetector::Id(iters)
            },
        ))
    })?;
    Ok((bits, cm))
}

pub fn bit_errors(tx: &[u8], rx: &[u8]) -> Result<u64> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count() as u64)
}

pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.is_empty() {
        return Err(Error::EmptyInput("bit vector"));
    }
    Ok(bit_errors(tx, rx)? as f64 / tx.len() as f64)
}

/// Interleaved little-endian `f64` I/Q samples.
pub fn write_iq(path: impl AsRef<Path>, samples: &[Complex]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in samples {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<Vec<Complex>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Format(format!(
            "I/Q file of {} bytes is not a whole number of samples",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, NoiseSpec};
    use crate::patterns::schedule;
    use crate::wlan::frame::build_frame;

    fn random_bits(n: usize, seed: u64) -> Vec<u8> {
        let mut r = rng::stream(seed);
        (0..n).map(|_| r.random_range(0..2u8)).collect()
    }

    fn frame(sched: &Schedule, seed: u64, bank: &mut ModemBank) -> (Vec<u8>, Vec<Complex>) {
        let cfg = WlanConfig::default();
        let bits = random_bits(cfg.bits_per_symbol() * sched.len(), seed);
        let f = build_frame(&cfg, sched, &bits, bank).unwrap();
        (bits, f.samples())
    }

    #[test]
    fn ber_arithmetic() {
        assert_eq!(ber(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(ber(&[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
        let a = vec![0u8; 1000];
        let mut b = a.clone();
        b[17] = 1;
        assert_eq!(ber(&a, &b).unwrap(), 0.001);
        assert!(ber(&a, &b[1..]).is_err());
    }

    #[test]
    fn noiseless_round_trip_for_every_class() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = Schedule::from_classes(&p, vec![0, 1, 2, 3, 4, 4, 3, 2, 1, 0]).unwrap();
        let (bits, stream) = frame(&sched, 1, &mut bank);
        for perfect in [true, false] {
            let opts = ReceiverOptions {
                perfect_csi: perfect,
                ..Default::default()
            };
            let rx = legit_receive(&stream, &cfg, &sched, &opts, &mut bank).unwrap();
            assert_eq!(rx, bits);
        }
    }

    #[test]
    fn synchronizes_after_leading_noise() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = schedule(&p, 12, 2);
        let (bits, stream) = frame(&sched, 3, &mut bank);
        let mut padded = vec![Complex::new(0.0, 0.0); 37];
        padded.extend(stream);
        let noisy = awgn(&padded, NoiseSpec::new(30.0), &mut rng::stream(4)).unwrap();
        let opts = ReceiverOptions::default();
        assert_eq!(synchronize(&noisy, &opts).unwrap().start, 37);
        let rx = legit_receive(&noisy, &cfg, &sched, &opts, &mut bank).unwrap();
        assert_eq!(ber(&bits, &rx).unwrap(), 0.0);
    }

    #[test]
    fn noise_only_input_is_not_a_frame() {
        let mut r = rng::stream(5);
        let noise: Vec<Complex> = (0..1200)
            .map(|_| Complex::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        assert!(matches!(
            synchronize(&noise, &ReceiverOptions::default()),
            Err(Error::NoFrame { .. })
        ));
    }

    #[test]
    fn ofdm_frames_are_read_by_everyone() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = Schedule::constant(&p, 0, 8).unwrap();
        let (bits, stream) = frame(&sched, 6, &mut bank);
        let opts = ReceiverOptions::default();
        let legit = legit_receive(&stream, &cfg, &sched, &opts, &mut bank).unwrap();
        let eve = eve_scenario1_receive(&stream, &cfg, None, &opts, &mut bank).unwrap();
        assert_eq!(legit, bits);
        assert_eq!(eve, legit);
    }

    #[test]
    fn wrong_schedule_breaks_detection() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = schedule(&p, 40, 7);
        let (bits, stream) = frame(&sched, 8, &mut bank);
        let noisy = awgn(&stream, NoiseSpec::new(30.0), &mut rng::stream(9)).unwrap();
        let shifted =
            Schedule::from_classes(&p, sched.classes.iter().map(|c| (c + 1) % 5).collect())
                .unwrap();
        let opts = ReceiverOptions::default();
        let rx = legit_receive(&noisy, &cfg, &shifted, &opts, &mut bank).unwrap();
        assert!(ber(&bits, &rx).unwrap() > 0.05);
    }

    #[test]
    fn compressed_symbol_defeats_ofdm_eavesdropper() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = Schedule::constant(&p, 4, 1).unwrap();
        let mut hits = 0;
        for t in 0..200 {
            let (bits, stream) = frame(&sched, 100 + t, &mut bank);
            let noisy = awgn(&stream, NoiseSpec::new(50.0), &mut rng::stream(t)).unwrap();
            let rx =
                eve_scenario1_receive(&noisy, &cfg, None, &ReceiverOptions::default(), &mut bank)
                    .unwrap();
            if bit_errors(&bits, &rx).unwrap() > 0 {
                hits += 1;
            }
        }
        assert!(hits >= 198, "{hits}/200");
    }

    #[test]
    fn oracle_scenario2_matches_legit() {
        let cfg = WlanConfig::default();
        let p = BcfPattern::wlan_type3();
        let mut bank = ModemBank::new();
        let sched = schedule(&p, 20, 10);
        let (_, stream) = frame(&sched, 11, &mut bank);
        let noisy = awgn(&stream, NoiseSpec::new(12.0), &mut rng::stream(12)).unwrap();
        let opts = ReceiverOptions::default();
        let legit = legit_receive(&noisy, &cfg, &sched, &opts, &mut bank).unwrap();
        let (eve, cm) = eve_scenario2_receive(
            &noisy,
            &cfg,
            &p,
            &mut OracleClassifier,
            &sched,
            &opts,
            &mut bank,
        )
        .unwrap();
        assert_eq!(eve, legit);
        assert_eq!(cm.accuracy(), 1.0);
    }

    #[test]
    fn iq_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.iq");
        let x = vec![Complex::new(1.5, -2.0), Complex::new(0.0, 1e-300)];
        write_iq(&path, &x).unwrap();
        assert_eq!(read_iq(&path).unwrap(), x);
        std::fs::write(&path, [0u8; 9]).unwrap();
        assert!(read_iq(&path).is_err());
    }
}
