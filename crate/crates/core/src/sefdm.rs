//! SEFDM/OFDM symbol generation and demodulation.
//!
//! A symbol carries `N` sub-carriers spaced by `α/T`. With `Q = ρN` time
//! samples per symbol, sample `k` is
//!
//! ```text
//! X_k = 1/√Q · Σ_n s_n · exp(j2π (n + b) k α / Q)
//! ```
//!
//! where `b` is an optional frequency-bin offset (zero for the one-sided
//! layout, `-N/2` for a band centred on DC). The fast path zero-pads the
//! symbol vector to `M = round(Q/α)` bins, runs an `M`-point inverse DFT and
//! keeps the first `Q` samples. Because `M` is rounded, the realized
//! compression is `α' = Q/M`; every transform and every correlation matrix
//! here is built from `α'` so the transmitter and receiver stay consistent.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Oversampling factor `ρ = num/den`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Oversampling {
    num: u32,
    den: u32,
}

impl Oversampling {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidConfig(format!(
                "oversampling {num}/{den} must be positive"
            )));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(rho: u32) -> Result<Self> {
        Self::new(rho, 1)
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ρ·n` when it is an integer.
    pub fn samples_for(&self, n: usize) -> Option<usize> {
        let prod = n as u64 * self.num as u64;
        prod.is_multiple_of(self.den as u64)
            .then(|| (prod / self.den as u64) as usize)
    }
}

impl fmt::Display for Oversampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Oversampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid oversampling factor '{s}'"));
        match s.trim().split_once('/') {
            Some((n, d)) => Self::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => Self::integer(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

/// The waveform tuple that governs every transform in this module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SefdmConfig {
    n_subcarriers: usize,
    oversampling: Oversampling,
    bcf: f64,
    n_samples: usize,
    dft_size: usize,
    sample_rate: f64,
    first_bin: i64,
}

impl SefdmConfig {
    pub fn new(
        n_subcarriers: usize,
        oversampling: Oversampling,
        bcf: f64,
        sample_rate: f64,
    ) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidConfig(
                "at least one sub-carrier is required".into(),
            ));
        }
        if !(bcf > 0.0 && bcf <= 1.0) {
            return Err(Error::InvalidConfig(format!("BCF {bcf} outside (0, 1]")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        let n_samples = oversampling.samples_for(n_subcarriers).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "oversampling {oversampling} times {n_subcarriers} sub-carriers is not an integer"
            ))
        })?;
        let dft_size = (n_samples as f64 / bcf).round() as usize;
        if dft_size < n_subcarriers {
            return Err(Error::InvalidConfig(format!(
                "DFT size {dft_size} cannot hold {n_subcarriers} sub-carriers"
            )));
        }
        Ok(Self {
            n_subcarriers,
            oversampling,
            bcf,
            n_samples,
            dft_size,
            sample_rate,
            first_bin: 0,
        })
    }

    /// Shifts every sub-carrier by `bin` DFT bins (e.g. `-N/2` to centre the band).
    pub fn with_first_bin(mut self, bin: i64) -> Self {
        self.first_bin = bin;
        self
    }

    /// Same waveform geometry with a different BCF.
    pub fn with_bcf(&self, bcf: f64) -> Result<Self> {
        Ok(
            Self::new(self.n_subcarriers, self.oversampling, bcf, self.sample_rate)?
                .with_first_bin(self.first_bin),
        )
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn oversampling(&self) -> Oversampling {
        self.oversampling
    }

    /// Nominal BCF `α` (the class label).
    pub fn bcf(&self) -> f64 {
        self.bcf
    }

    /// Realized BCF `α' = Q/M`.
    pub fn effective_bcf(&self) -> f64 {
        self.n_samples as f64 / self.dft_size as f64
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dft_size(&self) -> usize {
        self.dft_size
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn first_bin(&self) -> i64 {
        self.first_bin
    }

    /// Symbol duration `T = Q / fs`.
    pub fn symbol_duration(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate
    }

    /// Sub-carrier spacing `Δf = α'/T`.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.effective_bcf() / self.symbol_duration()
    }

    fn bin_of(&self, n: usize) -> usize {
        (n as i64 + self.first_bin).rem_euclid(self.dft_size as i64) as usize
    }

    fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: len,
            });
        }
        Ok(())
    }
}

/// A Gray-labelled constellation with unit average energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    label: String,
    points: Vec<Complex>,
    /// Bit label of each point, MSB first.
    labels: Vec<u32>,
    bits_per_symbol: usize,
}

impl Constellation {
    /// `0 → +1`, `1 → −1`.
    pub fn bpsk() -> Self {
        Self {
            label: "BPSK".into(),
            points: vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
            labels: vec![0, 1],
            bits_per_symbol: 1,
        }
    }

    /// `00 → (1+j)/√2`, `01 → (−1+j)/√2`, `11 → (−1−j)/√2`, `10 → (1−j)/√2`.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            label: "QPSK".into(),
            points: vec![
                Complex::new(a, a),
                Complex::new(-a, a),
                Complex::new(-a, -a),
                Complex::new(a, -a),
            ],
            labels: vec![0b00, 0b01, 0b11, 0b10],
            bits_per_symbol: 2,
        }
    }

    pub fn by_label(label: &str) -> Result<Self> {
        match label.to_ascii_uppercase().as_str() {
            "BPSK" => Ok(Self::bpsk()),
            "QPSK" => Ok(Self::qpsk()),
            _ => Err(Error::InvalidConfig(format!(
                "unknown constellation '{label}'"
            ))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Complex] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest(&self, v: Complex) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (v - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn slice(&self, v: Complex) -> Complex {
        self.points[self.nearest(v)]
    }

    /// Maps a bit stream (one bit per byte, MSB first per symbol) to points.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::LengthMismatch {
                expected: bits.len().next_multiple_of(self.bits_per_symbol),
                actual: bits.len(),
            });
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32);
                let idx = self.labels.iter().position(|&l| l == label).unwrap();
                self.points[idx]
            })
            .collect())
    }

    /// Appends the bits of point `idx` to `out`.
    pub fn push_bits(&self, idx: usize, out: &mut Vec<u8>) {
        let label = self.labels[idx];
        for shift in (0..self.bits_per_symbol).rev() {
            out.push(((label >> shift) & 1) as u8);
        }
    }

    /// Hard-decision demapping of arbitrary complex values.
    pub fn demap(&self, values: &[Complex]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(values.len() * self.bits_per_symbol);
        for &v in values {
            self.push_bits(self.nearest(v), &mut bits);
        }
        bits
    }
}

/// `N × N` Gram matrix `C = F*F` of the sub-carrier set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<Complex>);

impl CorrelationMatrix {
    pub fn from_matrix(m: DMatrix<Complex>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidConfig(
                "correlation matrix must be square".into(),
            ));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.0[(row, col)]
    }

    /// `C·s`.
    pub fn apply(&self, s: &[Complex]) -> Vec<Complex> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * s[j]).sum())
            .collect()
    }

    /// Eigenvalues in ascending order (C is Hermitian).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `λmax/λmin`, infinite when the smallest eigenvalue is not positive.
    pub fn condition_estimate(&self) -> f64 {
        let ev = self.eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Mean magnitude of the off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.dim();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += self.0[(i, j)].norm();
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }
}

/// FFT-backed modulator/demodulator for one configuration.
#[derive(Clone)]
pub struct Modem {
    cfg: SefdmConfig,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Modem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modem").field("cfg", &self.cfg).finish()
    }
}

impl Modem {
    pub fn new(cfg: &SefdmConfig) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            cfg: cfg.clone(),
            inverse: planner.plan_fft_inverse(cfg.dft_size),
            forward: planner.plan_fft_forward(cfg.dft_size),
        }
    }

    pub fn config(&self) -> &SefdmConfig {
        &self.cfg
    }

    /// Zero-padded `M`-point IDFT truncated to `Q` samples, scaled to `1/√Q`.
    pub fn modulate(&self, s: &[Complex]) -> Result<Vec<Complex>> {
        let cfg = &self.cfg;
        cfg.check_len(s.len(), cfg.n_subcarriers)?;
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.dft_size];
        for (n, &v) in s.iter().enumerate() {
            buf[cfg.bin_of(n)] = v;
        }
        self.inverse.process(&mut buf);
        // 1/√M from the IDFT times √(M/Q) back to the direct-form scaling.
        let scale = 1.0 / (cfg.n_samples as f64).sqrt();
        buf.truncate(cfg.n_samples);
        buf.iter_mut().for_each(|x| *x *= scale);
        Ok(buf)
    }

    /// Zero-padded `M`-point DFT truncated to the `N` sub-carrier bins.
    pub fn demodulate(&self, y: &[Complex]) -> Result<Vec<Complex>> {
        let cfg = &self.cfg;
        cfg.check_len(y.len(), cfg.n_samples)?;
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.dft_size];
        buf[..cfg.n_samples].copy_from_slice(y);
        self.forward.process(&mut buf);
        let scale = 1.0 / (cfg.n_samples as f64).sqrt();
        Ok((0..cfg.n_subcarriers)
            .map(|n| buf[cfg.bin_of(n)] * scale)
            .collect())
    }
}

/// Direct `O(NQ)` evaluation of the symbol sum at BCF `α'`.
pub fn modulate_direct(cfg: &SefdmConfig, s: &[Complex]) -> Result<Vec<Complex>> {
    modulate_direct_with_bcf(cfg, s, cfg.effective_bcf())
}

/// Direct evaluation with an explicit BCF, e.g. the nominal `α`.
pub fn modulate_direct_with_bcf(
    cfg: &SefdmConfig,
    s: &[Complex],
    bcf: f64,
) -> Result<Vec<Complex>> {
    cfg.check_len(s.len(), cfg.n_subcarriers)?;
    let q = cfg.n_samples as f64;
    let scale = 1.0 / q.sqrt();
    Ok((0..cfg.n_samples)
        .map(|k| {
            s.iter()
                .enumerate()
                .map(|(n, &sn)| {
                    let f = (n as i64 + cfg.first_bin) as f64;
                    sn * Complex::from_polar(1.0, 2.0 * PI * f * k as f64 * bcf / q)
                })
                .sum::<Complex>()
                * scale
        })
        .collect())
}

pub fn modulate(cfg: &SefdmConfig, s: &[Complex]) -> Result<Vec<Complex>> {
    Modem::new(cfg).modulate(s)
}

pub fn demodulate(cfg: &SefdmConfig, y: &[Complex]) -> Result<Vec<Complex>> {
    Modem::new(cfg).demodulate(y)
}

/// `C[m, n] = 1/Q · Σ_k exp(j2π (n − m) k α' / Q)`.
///
/// Depends only on `n − m`, so one row of lags is computed and mirrored; the
/// result is exactly Hermitian with an exactly unit diagonal.
pub fn correlation_matrix(cfg: &SefdmConfig) -> CorrelationMatrix {
    let n = cfg.n_subcarriers;
    let q = cfg.n_samples;
    let bcf = cfg.effective_bcf();
    let lags: Vec<Complex> = (0..n)
        .map(|d| {
            if d == 0 {
                return Complex::new(1.0, 0.0);
            }
            (0..q)
                .map(|k| Complex::from_polar(1.0, 2.0 * PI * d as f64 * k as f64 * bcf / q as f64))
                .sum::<Complex>()
                / q as f64
        })
        .collect();
    let m = DMatrix::from_fn(n, n, |row, col| {
        if col >= row {
            lags[col - row]
        } else {
            lags[row - col].conj()
        }
    });
    CorrelationMatrix(m)
}

/// Splits `|X_k|²` into its signal term and its inter-carrier interference term.
pub fn power_decomposition(cfg: &SefdmConfig, s: &[Complex], k: usize) -> Result<(f64, f64)> {
    cfg.check_len(s.len(), cfg.n_subcarriers)?;
    if k >= cfg.n_samples {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: cfg.n_samples,
        });
    }
    let q = cfg.n_samples as f64;
    let bcf = cfg.effective_bcf();
    let signal = s.iter().map(|v| v.norm_sqr()).sum::<f64>() / q;
    let mut ici = Complex::new(0.0, 0.0);
    for (n, &sn) in s.iter().enumerate() {
        for (m, &sm) in s.iter().enumerate() {
            if m != n {
                let phase = 2.0 * PI * (n as f64 - m as f64) * k as f64 * bcf / q;
                ici += sn * sm.conj() * Complex::from_polar(1.0, phase);
            }
        }
    }
    Ok((signal, ici.re / q))
}

/// [`power_decomposition`] summed over all `Q` samples of the symbol.
///
/// For `α = 1` the summed interference vanishes (the sub-carriers are
/// orthogonal over the symbol), while individual samples still carry
/// cross terms whenever `N > 1`.
pub fn symbol_power_decomposition(cfg: &SefdmConfig, s: &[Complex]) -> Result<(f64, f64)> {
    (0..cfg.n_samples).try_fold((0.0, 0.0), |(a, b), k| {
        let (sig, ici) = power_decomposition(cfg, s, k)?;
        Ok((a + sig, b + ici))
    })
}
