use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::preamble::{self, pilot_polarity, FFT_SIZE, PREAMBLE_LEN};
use crate::patterns::Schedule;
use crate::sefdm::{
    correlation_matrix, Constellation, CorrelationMatrix, Modem, Oversampling, SefdmConfig,
};
use crate::{Complex, Error, Result};

/// 802.11a PSDU geometry: 52 contiguous sub-carriers on bins −26..=25,
/// 4 pilots at −21, −7, +7, +21, 48 QPSK data sub-carriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlanConfig {
    pub fft_size: usize,
    pub cp_length: usize,
    pub sample_rate: f64,
    pub first_bin: i64,
    pub n_occupied: usize,
    pub pilot_bins: [i64; 4],
    pub pilot_values: [f64; 4],
}

impl Default for WlanConfig {
    fn default() -> Self {
        Self {
            fft_size: FFT_SIZE,
            cp_length: 16,
            sample_rate: 20e6,
            first_bin: -26,
            n_occupied: 52,
            pilot_bins: [-21, -7, 7, 21],
            pilot_values: [1.0, 1.0, 1.0, -1.0],
        }
    }
}

impl WlanConfig {
    pub fn oversampling(&self) -> Oversampling {
        Oversampling::new(self.fft_size as u32, self.n_occupied as u32).expect("non-zero sizes")
    }

    pub fn sefdm_config(&self, alpha: f64) -> Result<SefdmConfig> {
        Ok(SefdmConfig::new(
            self.n_occupied,
            self.oversampling(),
            alpha,
            self.sample_rate,
        )?
        .with_first_bin(self.first_bin))
    }

    /// Logical sub-carrier indices of the pilots.
    pub fn pilot_indices(&self) -> [usize; 4] {
        self.pilot_bins.map(|b| (b - self.first_bin) as usize)
    }

    pub fn data_indices(&self) -> Vec<usize> {
        let pilots = self.pilot_indices();
        (0..self.n_occupied)
            .filter(|i| !pilots.contains(i))
            .collect()
    }

    pub fn n_data(&self) -> usize {
        self.n_occupied - 4
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.n_data()
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_length
    }

    pub fn frame_len(&self, n_symbols: usize) -> usize {
        PREAMBLE_LEN + n_symbols * self.symbol_len()
    }

    /// Known pilot values of PSDU symbol `j`.
    pub fn pilots(&self, j: usize) -> [Complex; 4] {
        let p = pilot_polarity()[(j + 1) % 127];
        self.pilot_values.map(|v| Complex::new(v * p, 0.0))
    }
}

/// Modems and correlation matrices keyed by nominal α, built on first use.
#[derive(Debug, Default)]
pub struct ModemBank {
    entries: HashMap<u64, (Modem, CorrelationMatrix)>,
}

impl ModemBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, cfg: &WlanConfig, alpha: f64) -> Result<&(Modem, CorrelationMatrix)> {
        use std::collections::hash_map::Entry;
        match self.entries.entry(alpha.to_bits()) {
            Entry::Occupied(e) => Ok(e.into_mut()),
            Entry::Vacant(e) => {
                let c = cfg.sefdm_config(alpha)?;
                Ok(e.insert((Modem::new(&c), correlation_matrix(&c))))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WdsFrame {
    pub preamble: Vec<Complex>,
    /// PSDU symbols including their cyclic prefix.
    pub symbols: Vec<Vec<Complex>>,
    pub schedule: Schedule,
    pub n_bits: usize,
    /// Sub-carrier values per PSDU symbol (data and pilots).
    pub sources: Vec<Vec<Complex>>,
}

impl WdsFrame {
    pub fn samples(&self) -> Vec<Complex> {
        let mut out = self.preamble.clone();
        for s in &self.symbols {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.preamble.len() + self.symbols.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Maps 96 bits to 48 QPSK data values and inserts the pilots of symbol `j`.
pub fn map_symbol(cfg: &WlanConfig, j: usize, bits: &[u8]) -> Result<Vec<Complex>> {
    let data = Constellation::qpsk().map_bits(bits)?;
    if data.len() != cfg.n_data() {
        return Err(Error::LengthMismatch {
            expected: cfg.bits_per_symbol(),
            actual: bits.len(),
        });
    }
    let mut s = vec![Complex::new(0.0, 0.0); cfg.n_occupied];
    for (&i, v) in cfg.data_indices().iter().zip(data) {
        s[i] = v;
    }
    for (&i, p) in cfg.pilot_indices().iter().zip(cfg.pilots(j)) {
        s[i] = p;
    }
    Ok(s)
}

pub fn build_frame(
    cfg: &WlanConfig,
    sched: &Schedule,
    bits: &[u8],
    bank: &mut ModemBank,
) -> Result<WdsFrame> {
    let per = cfg.bits_per_symbol();
    if bits.len() != per * sched.len() {
        return Err(Error::LengthMismatch {
            expected: per * sched.len(),
            actual: bits.len(),
        });
    }
    let mut symbols = Vec::with_capacity(sched.len());
    let mut sources = Vec::with_capacity(sched.len());
    for (j, (&alpha, chunk)) in sched.alphas.iter().zip(bits.chunks(per)).enumerate() {
        let s = map_symbol(cfg, j, chunk)?;
        let body = bank.get(cfg, alpha)?.0.modulate(&s)?;
        let mut sym = body[body.len() - cfg.cp_length..].to_vec();
        sym.extend_from_slice(&body);
        symbols.push(sym);
        sources.push(s);
    }
    Ok(WdsFrame {
        preamble: preamble::preamble(),
        symbols,
        schedule: sched.clone(),
        n_bits: bits.len(),
        sources,
    })
}
