use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// Complex Morlet filter bank on a geometric scale grid.
///
/// Scale `i` is centred on normalized frequency
/// `f_i = ½ · (2/Q)^(i/(n−1))`, so the grid runs from `1/2` down to `1/Q`
/// cycles per sample and the scales `ω₀/(2π f_i)` increase strictly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletBank {
    pub omega0: f64,
    pub n_scales: usize,
    pub n_samples: usize,
}

impl WaveletBank {
    pub const DEFAULT_SCALES: usize = 32;
    pub const DEFAULT_OMEGA0: f64 = 6.0;

    pub fn new(n_samples: usize) -> Self {
        Self {
            omega0: Self::DEFAULT_OMEGA0,
            n_scales: Self::DEFAULT_SCALES,
            n_samples,
        }
    }

    pub fn with_scales(mut self, n_scales: usize) -> Self {
        self.n_scales = n_scales;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scales < 2 {
            return Err(Error::InvalidConfig(
                "wavelet bank needs at least two scales".into(),
            ));
        }
        if self.n_samples < 8 {
            return Err(Error::InvalidConfig(format!(
                "wavelet bank needs at least 8 samples, got {}",
                self.n_samples
            )));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::InvalidConfig(
                "Morlet centre frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Centre frequencies in cycles per sample, highest first.
    pub fn center_frequencies(&self) -> Vec<f64> {
        let q = self.n_samples as f64;
        let last = (self.n_scales - 1) as f64;
        (0..self.n_scales)
            .map(|i| 0.5 * (2.0 / q).powf(i as f64 / last))
            .collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.center_frequencies()
            .into_iter()
            .map(|f| self.omega0 / (2.0 * PI * f))
            .collect()
    }

    /// Feature vector length produced by [`reduce_features`](super::reduce_features).
    pub fn feature_len(&self) -> usize {
        2 * self.n_scales
    }
}

/// Scalogram magnitudes, row-major `n_scales × n_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    n_scales: usize,
    n_samples: usize,
    data: Vec<f64>,
}

impl Scalogram {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_scales = rows.len();
        let n_samples = rows.first().map_or(0, Vec::len);
        if n_scales == 0 || n_samples == 0 || rows.iter().any(|r| r.len() != n_samples) {
            return Err(Error::InvalidConfig(
                "scalogram rows must be non-empty and equal length".into(),
            ));
        }
        Ok(Self {
            n_scales,
            n_samples,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_scales(&self) -> usize {
        self.n_scales
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_samples)
    }
}

/// Precomputed frequency responses and FFT plans for one bank.
#[derive(Clone)]
pub struct WaveletFilters {
    bank: WaveletBank,
    responses: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for WaveletFilters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveletFilters")
            .field("bank", &self.bank)
            .finish()
    }
}

impl WaveletFilters {
    pub fn new(bank: &WaveletBank) -> Result<Self> {
        bank.validate()?;
        let q = bank.n_samples;
        let responses = bank
            .scales()
            .into_iter()
            .map(|s| {
                // Analytic Morlet: exp(−(sω − ω₀)²/2) on positive frequencies.
                let mut h: Vec<f64> = (0..q)
                    .map(|k| {
                        if k == 0 || k > q / 2 {
                            0.0
                        } else {
                            let w = 2.0 * PI * k as f64 / q as f64;
                            (-(s * w - bank.omega0).powi(2) / 2.0).exp()
                        }
                    })
                    .collect();
                // Unit L2 norm of the time-domain atom: (1/Q)·Σ|H_k|² = 1.
                let energy = h.iter().map(|v| v * v).sum::<f64>() / q as f64;
                if energy > 0.0 {
                    let g = 1.0 / energy.sqrt();
                    h.iter_mut().for_each(|v| *v *= g);
                }
                h
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            bank: bank.clone(),
            responses,
            forward: planner.plan_fft_forward(q),
            inverse: planner.plan_fft_inverse(q),
        })
    }

    pub fn bank(&self) -> &WaveletBank {
        &self.bank
    }

    /// Magnitude of the circular convolution of `x` with every atom.
    pub fn scalogram(&self, x: &[Complex]) -> Result<Scalogram> {
        if x.len() < 8 {
            return Err(Error::InvalidConfig(format!(
                "scalogram needs at least 8 samples, got {}",
                x.len()
            )));
        }
        let q = self.bank.n_samples;
        if x.len() != q {
            return Err(Error::LengthMismatch {
                expected: q,
                actual: x.len(),
            });
        }
        let mut spectrum = x.to_vec();
        self.forward.process(&mut spectrum);
        let mut data = Vec::with_capacity(self.responses.len() * q);
        let mut buf = vec![Complex::new(0.0, 0.0); q];
        for h in &self.responses {
            for ((b, &xs), &hk) in buf.iter_mut().zip(&spectrum).zip(h) {
                *b = xs * hk;
            }
            self.inverse.process(&mut buf);
            data.extend(buf.iter().map(|v| v.norm() / q as f64));
        }
        Ok(Scalogram {
            n_scales: self.responses.len(),
            n_samples: q,
            data,
        })
    }
}

pub fn scalogram(x: &[Complex], bank: &WaveletBank) -> Result<Scalogram> {
    WaveletFilters::new(bank)?.scalogram(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_and_increasing() {
        let bank = WaveletBank::new(256);
        let f = bank.center_frequencies();
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert!((f[31] - 1.0 / 256.0).abs() < 1e-15);
        let s = bank.scales();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(WaveletBank::new(256).with_scales(1).validate().is_err());
    }

    #[test]
    fn zero_input_gives_zero_scalogram() {
        let sg = scalogram(&vec![Complex::new(0.0, 0.0); 64], &WaveletBank::new(64)).unwrap();
        assert!(sg.rows().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn short_input_is_rejected() {
        let bank = WaveletBank {
            n_samples: 4,
            ..WaveletBank::new(4)
        };
        assert!(scalogram(&[Complex::new(1.0, 0.0); 4], &bank).is_err());
    }

    #[test]
    fn magnitudes_scale_with_input() {
        let bank = WaveletBank::new(128);
        let x: Vec<Complex> = (0..128)
            .map(|k| Complex::new((k as f64 * 0.3).sin(), (k as f64 * 0.05).cos()))
            .collect();
        let c = Complex::new(-1.5, 2.0);
        let a = scalogram(&x, &bank).unwrap();
        let b = scalogram(&x.iter().map(|v| v * c).collect::<Vec<_>>(), &bank).unwrap();
        for (u, v) in a.rows().flatten().zip(b.rows().flatten()) {
            assert!((v - u * c.norm()).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn tone_energy_peaks_at_matching_scale() {
        let q = 1024;
        let bank = WaveletBank::new(q);
        let filters = WaveletFilters::new(&bank).unwrap();
        let freqs = bank.center_frequencies();
        // Scales whose centre sits below ~16 bins are too coarsely sampled
        // in frequency to resolve from their neighbours.
        for (i, &f) in freqs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &f)| f * q as f64 >= 16.0)
        {
            let x: Vec<Complex> = (0..q)
                .map(|k| Complex::from_polar(1.0, 2.0 * PI * f * k as f64))
                .collect();
            let sg = filters.scalogram(&x).unwrap();
            let energy: Vec<f64> = sg.rows().map(|r| r.iter().map(|v| v * v).sum()).collect();
            let best = (0..energy.len())
                .max_by(|&a, &b| energy[a].total_cmp(&energy[b]))
                .unwrap();
            assert_eq!(best, i, "tone at f = {f}");
        }
    }
}
