//! Closed-form operation counts for IDFT-based symbol generation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpCount {
    pub label: String,
    pub count: f64,
}

/// How the IDFT length `Q/α` enters the SEFDM formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LengthMode {
    /// Real-valued `Q/α`, as the formulas are usually printed.
    #[default]
    Exact,
    /// The rounded transform size `M = round(Q/α)` actually used.
    Rounded,
}

impl LengthMode {
    fn length(self, q: usize, alpha: f64) -> f64 {
        let l = q as f64 / alpha;
        match self {
            LengthMode::Exact => l,
            LengthMode::Rounded => l.round(),
        }
    }
}

/// `Q·log2(Q)`.
pub fn ops_ofdm(q: usize) -> OpCount {
    let q = q as f64;
    OpCount {
        label: "OFDM".into(),
        count: q * q.log2(),
    }
}

/// `(Q/α)·log2(Q/α)`.
pub fn ops_sefdm(q: usize, alpha: f64) -> OpCount {
    ops_sefdm_with(q, alpha, LengthMode::Exact)
}

pub fn ops_sefdm_with(q: usize, alpha: f64, mode: LengthMode) -> OpCount {
    let l = mode.length(q, alpha);
    OpCount {
        label: "SEFDM".into(),
        count: l * l.log2(),
    }
}

/// `(Q/α)·log2(Q)`: only `Q` outputs of the longer transform are kept.
pub fn ops_sefdm_pruned(q: usize, alpha: f64) -> OpCount {
    ops_sefdm_pruned_with(q, alpha, LengthMode::Exact)
}

pub fn ops_sefdm_pruned_with(q: usize, alpha: f64, mode: LengthMode) -> OpCount {
    OpCount {
        label: "SEFDM-pruned".into(),
        count: mode.length(q, alpha) * (q as f64).log2(),
    }
}
