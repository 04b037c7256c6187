//! Seeded channel impairments: AWGN at a given Es/N0, carrier-frequency
//! offset, and a tapped-delay-line Rician/Rayleigh fading channel.
//!
//! Fading taps follow a sum-of-sinusoids approximation of the classical
//! Doppler spectrum. Tap gains are evaluated once per block (one symbol)
//! and held constant inside it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// Oscillators per diffuse tap process.
pub const SOS_OSCILLATORS: usize = 16;

/// Noise level for [`awgn`]. `es_n0_db = +∞` disables the noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub es_n0_db: f64,
}

impl NoiseSpec {
    pub fn new(es_n0_db: f64) -> Self {
        Self { es_n0_db }
    }

    pub fn noiseless() -> Self {
        Self {
            es_n0_db: f64::INFINITY,
        }
    }

    /// `σ² = Es / 10^(Es/N0 / 10)`.
    pub fn variance(&self, es: f64) -> f64 {
        if self.es_n0_db == f64::INFINITY {
            0.0
        } else {
            es / 10f64.powf(self.es_n0_db / 10.0)
        }
    }
}

/// Mean sample energy of a block.
pub fn mean_energy(x: &[Complex]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Adds circularly-symmetric Gaussian noise scaled to the block's measured
/// mean sample energy.
pub fn awgn<R: Rng + ?Sized>(x: &[Complex], spec: NoiseSpec, rng: &mut R) -> Result<Vec<Complex>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("awgn input"));
    }
    let var = spec.variance(mean_energy(x));
    if var == 0.0 {
        return Ok(x.to_vec());
    }
    let sigma = (var / 2.0).sqrt();
    Ok(x.iter()
        .map(|&v| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            v + Complex::new(re, im) * sigma
        })
        .collect())
}

/// Offset in Hz for a ppm error at a carrier frequency.
pub fn cfo_hz_from_ppm(ppm: f64, carrier_freq: f64) -> f64 {
    ppm * 1e-6 * carrier_freq
}

/// `y_k = x_k · exp(j2π · cfo · k / fs)`.
pub fn apply_cfo(x: &[Complex], cfo_hz: f64, sample_rate: f64) -> Result<Vec<Complex>> {
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sample rate {sample_rate} must be positive"
        )));
    }
    // Reduce the per-sample phase step modulo one cycle so that an offset of
    // exactly one sample rate is the identity.
    let step = (cfo_hz / sample_rate).rem_euclid(1.0);
    Ok(x.iter()
        .enumerate()
        .map(|(k, &v)| {
            let cycles = (step * k as f64).rem_euclid(1.0);
            v * Complex::from_polar(1.0, 2.0 * PI * cycles)
        })
        .collect())
}

/// Power-delay profile plus Rician, Doppler and CFO parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub tap_delays: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    /// Rician K of the first tap (linear). `+∞` is pure line of sight.
    pub k_factor: f64,
    pub max_doppler: f64,
    pub cfo_ppm: f64,
    pub carrier_freq: f64,
    pub sample_rate: f64,
}

impl ChannelProfile {
    /// Three-path indoor profile: delays 0/9/17 µs, powers 0/−2/−10 dB,
    /// K = 4, 4 Hz Doppler, 2 ppm CFO.
    pub fn indoor(sample_rate: f64, carrier_freq: f64) -> Self {
        Self {
            tap_delays: vec![0.0, 9e-6, 1.7e-5],
            tap_powers_db: vec![0.0, -2.0, -10.0],
            k_factor: 4.0,
            max_doppler: 4.0,
            cfo_ppm: 2.0,
            carrier_freq,
            sample_rate,
        }
    }

    /// A single static line-of-sight tap.
    pub fn line_of_sight(sample_rate: f64) -> Self {
        Self {
            tap_delays: vec![0.0],
            tap_powers_db: vec![0.0],
            k_factor: f64::INFINITY,
            max_doppler: 0.0,
            cfo_ppm: 0.0,
            carrier_freq: 0.0,
            sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tap_delays.is_empty() || self.tap_delays.len() != self.tap_powers_db.len() {
            return bad("tap delay and power lists must be non-empty and of equal length".into());
        }
        if self.tap_delays[0] != 0.0 {
            return bad("first tap delay must be zero".into());
        }
        if self
            .tap_delays
            .iter()
            .any(|&d| !(d >= 0.0) || !d.is_finite())
        {
            return bad("tap delays must be finite and non-negative".into());
        }
        if !(self.k_factor >= 0.0) {
            return bad(format!("K-factor {} must be non-negative", self.k_factor));
        }
        if !(self.sample_rate > 0.0) {
            return bad(format!("sample rate {} must be positive", self.sample_rate));
        }
        if !(self.max_doppler >= 0.0) {
            return bad(format!("Doppler {} must be non-negative", self.max_doppler));
        }
        Ok(())
    }

    /// Linear tap powers normalized to unit total gain.
    pub fn linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .tap_powers_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Tap delays rounded to the nearest sample.
    pub fn sample_offsets(&self) -> Vec<usize> {
        self.tap_delays
            .iter()
            .map(|d| (d * self.sample_rate).round() as usize)
            .collect()
    }

    /// Number of samples covered by the delay line.
    pub fn span(&self) -> usize {
        self.sample_offsets().into_iter().max().unwrap_or(0) + 1
    }

    pub fn cfo_hz(&self) -> f64 {
        cfo_hz_from_ppm(self.cfo_ppm, self.carrier_freq)
    }

    /// Flat `channel.*` key/value pairs for the harness config file.
    pub fn to_flat(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        vec![
            ("channel.tap_delays".into(), list(&self.tap_delays)),
            ("channel.tap_powers_db".into(), list(&self.tap_powers_db)),
            ("channel.k_factor".into(), self.k_factor.to_string()),
            ("channel.max_doppler".into(), self.max_doppler.to_string()),
            ("channel.cfo_ppm".into(), self.cfo_ppm.to_string()),
            ("channel.carrier_freq".into(), self.carrier_freq.to_string()),
            ("channel.sample_rate".into(), self.sample_rate.to_string()),
        ]
    }

    /// Parses the keys written by [`ChannelProfile::to_flat`]; missing keys
    /// fall back to `defaults`.
    pub fn from_flat(map: &BTreeMap<String, String>, defaults: &ChannelProfile) -> Result<Self> {
        let num = |key: &str, fallback: f64| -> Result<f64> {
            match map.get(key) {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{key}: expected a number, got '{v}'"))),
                None => Ok(fallback),
            }
        };
        let list = |key: &str, fallback: &[f64]| -> Result<Vec<f64>> {
            match map.get(key) {
                Some(v) => v
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("{key}: bad list entry '{t}'")))
                    })
                    .collect(),
                None => Ok(fallback.to_vec()),
            }
        };
        let profile = Self {
            tap_delays: list("channel.tap_delays", &defaults.tap_delays)?,
            tap_powers_db: list("channel.tap_powers_db", &defaults.tap_powers_db)?,
            k_factor: num("channel.k_factor", defaults.k_factor)?,
            max_doppler: num("channel.max_doppler", defaults.max_doppler)?,
            cfo_ppm: num("channel.cfo_ppm", defaults.cfo_ppm)?,
            carrier_freq: num("channel.carrier_freq", defaults.carrier_freq)?,
            sample_rate: num("channel.sample_rate", defaults.sample_rate)?,
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone)]
struct TapProcess {
    amplitude: f64,
    los: Complex,
    diffuse: f64,
    /// (Doppler shift in Hz, phase) per oscillator.
    oscillators: Vec<(f64, f64)>,
}

impl TapProcess {
    fn gain_at(&self, t: f64) -> Complex {
        let mut g = self.los;
        if self.diffuse > 0.0 {
            let sos: Complex = self
                .oscillators
                .iter()
                .map(|&(f, phi)| Complex::from_polar(1.0, 2.0 * PI * f * t + phi))
                .sum();
            g += sos * (self.diffuse / (self.oscillators.len() as f64).sqrt());
        }
        g * self.amplitude
    }
}

/// One random draw of the tap processes of a [`ChannelProfile`].
#[derive(Debug, Clone)]
pub struct FadingRealization {
    taps: Vec<TapProcess>,
    offsets: Vec<usize>,
    sample_rate: f64,
}

impl FadingRealization {
    pub fn draw<R: Rng + ?Sized>(profile: &ChannelProfile, rng: &mut R) -> Result<Self> {
        profile.validate()?;
        let powers = profile.linear_powers();
        let taps = powers
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (los_amp, diffuse) = if i == 0 {
                    let k = profile.k_factor;
                    if k.is_infinite() {
                        (1.0, 0.0)
                    } else {
                        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
                    }
                } else {
                    (0.0, 1.0)
                };
                let los_phase = rng.random::<f64>() * 2.0 * PI;
                let oscillators = (0..SOS_OSCILLATORS)
                    .map(|_| {
                        let theta = rng.random::<f64>() * 2.0 * PI;
                        let phi = rng.random::<f64>() * 2.0 * PI;
                        (profile.max_doppler * theta.cos(), phi)
                    })
                    .collect();
                TapProcess {
                    amplitude: p.sqrt(),
                    los: Complex::from_polar(los_amp, los_phase),
                    diffuse,
                    oscillators,
                }
            })
            .collect();
        Ok(Self {
            taps,
            offsets: profile.sample_offsets(),
            sample_rate: profile.sample_rate,
        })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Complex tap gains at time `t` seconds.
    pub fn gains_at(&self, t: f64) -> Vec<Complex> {
        self.taps.iter().map(|tap| tap.gain_at(t)).collect()
    }

    fn span(&self) -> usize {
        self.offsets.iter().copied().max().unwrap_or(0) + 1
    }

    /// Tapped-delay-line filtering with gains refreshed every `block_len`
    /// samples, starting at time `t0`. Output length equals input length.
    pub fn apply_blocks(&self, x: &[Complex], block_len: usize, t0: f64) -> Result<Vec<Complex>> {
        let span = self.span();
        if x.len() < span {
            return Err(Error::ChannelTooLong { span, len: x.len() });
        }
        let block_len = block_len.max(1);
        let mut y = vec![Complex::new(0.0, 0.0); x.len()];
        for (b, chunk) in y.chunks_mut(block_len).enumerate() {
            let start = b * block_len;
            let gains = self.gains_at(t0 + start as f64 / self.sample_rate);
            for (i, out) in chunk.iter_mut().enumerate() {
                let k = start + i;
                *out = gains
                    .iter()
                    .zip(&self.offsets)
                    .filter(|(_, &d)| d <= k)
                    .map(|(g, &d)| g * x[k - d])
                    .sum();
            }
        }
        Ok(y)
    }
}

/// Passes one block through a fresh fading realization (gains held constant).
pub fn fade<R: Rng + ?Sized>(
    x: &[Complex],
    profile: &ChannelProfile,
    rng: &mut R,
) -> Result<Vec<Complex>> {
    let realization = FadingRealization::draw(profile, rng)?;
    realization.apply_blocks(x, x.len(), 0.0)
}

/// `fade → apply_cfo → awgn`. With no profile only the noise is applied.
pub fn impair<R: Rng + ?Sized>(
    x: &[Complex],
    profile: Option<&ChannelProfile>,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Complex>> {
    match profile {
        Some(p) => {
            let faded = fade(x, p, rng)?;
            let shifted = apply_cfo(&faded, p.cfo_hz(), p.sample_rate)?;
            awgn(&shifted, noise, rng)
        }
        None => awgn(x, noise, rng),
    }
}
