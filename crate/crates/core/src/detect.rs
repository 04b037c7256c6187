//! Symbol detectors for `R = C·S + Z`.
//!
//! All detectors take the demodulated statistics `R` and the correlation
//! matrix `C` and return hard constellation decisions. Ties always resolve to
//! the lowest constellation or candidate index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::sefdm::{Constellation, CorrelationMatrix};
use crate::{Complex, Error, Result};

/// Condition estimate above which [`detect_zf`] refuses to invert.
pub const ZF_CONDITION_LIMIT: f64 = 1e12;
/// Diagonal loading applied before factorizations.
pub const REGULARIZATION: f64 = 1e-8;
/// Largest `P^N` the exhaustive search accepts.
pub const ML_SEARCH_LIMIT: f64 = (1u64 << 24) as f64;
pub const ID_DEFAULT_ITERATIONS: usize = 20;
pub const ID_TOLERANCE: f64 = 1e-6;
pub const ID_DIVERGENCE_NORM: f64 = 1e6;
/// `ρ(C − I)` at or above `1 − ID_RADIUS_MARGIN` is treated as non-convergent.
pub const ID_RADIUS_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectorStats {
    pub iterations: usize,
    pub nodes_visited: u64,
    /// Iterative detection reached its fixed-point tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorResult {
    /// Constellation index per sub-carrier.
    pub indices: Vec<usize>,
    pub symbols: Vec<Complex>,
    pub bits: Vec<u8>,
    pub stats: DetectorStats,
}

impl DetectorResult {
    fn from_indices(c: &Constellation, indices: Vec<usize>, stats: DetectorStats) -> Self {
        let symbols = indices.iter().map(|&i| c.points()[i]).collect();
        let mut bits = Vec::with_capacity(indices.len() * c.bits_per_symbol());
        for &i in &indices {
            c.push_bits(i, &mut bits);
        }
        Self {
            indices,
            symbols,
            bits,
            stats,
        }
    }

    fn from_soft(c: &Constellation, soft: &[Complex], stats: DetectorStats) -> Self {
        Self::from_indices(c, soft.iter().map(|&v| c.nearest(v)).collect(), stats)
    }
}

/// Detector selection as exposed in harness configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DetectorKind {
    Mf,
    Zf,
    Id { max_iter: usize },
    Sd { node_budget: u64 },
    Ml,
}

impl DetectorKind {
    pub fn detect(
        &self,
        c: &CorrelationMatrix,
        r: &[Complex],
        cons: &Constellation,
    ) -> Result<DetectorResult> {
        match *self {
            DetectorKind::Mf => detect_mf(r, cons),
            DetectorKind::Zf => detect_zf(c, r, cons),
            DetectorKind::Id { max_iter } => detect_id(c, r, cons, max_iter),
            DetectorKind::Sd { node_budget } => detect_sd_with(
                c,
                r,
                cons,
                &SdOptions {
                    node_budget,
                    ..SdOptions::default()
                },
            ),
            DetectorKind::Ml => detect_ml(c, r, cons),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Mf => "mf",
            DetectorKind::Zf => "zf",
            DetectorKind::Id { .. } => "id",
            DetectorKind::Sd { .. } => "sd",
            DetectorKind::Ml => "ml",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mf" => Ok(DetectorKind::Mf),
            "zf" => Ok(DetectorKind::Zf),
            "id" => Ok(DetectorKind::Id {
                max_iter: ID_DEFAULT_ITERATIONS,
            }),
            "sd" => Ok(DetectorKind::Sd {
                node_budget: SdOptions::default().node_budget,
            }),
            "ml" => Ok(DetectorKind::Ml),
            other => Err(Error::Parse(format!("unknown detector '{other}'"))),
        }
    }
}

pub fn slice(c: &Constellation, v: Complex) -> Complex {
    c.slice(v)
}

fn check_dims(c: &CorrelationMatrix, r: &[Complex]) -> Result<()> {
    if c.dim() != r.len() {
        return Err(Error::LengthMismatch {
            expected: c.dim(),
            actual: r.len(),
        });
    }
    Ok(())
}

fn to_vector(v: &[Complex]) -> DVector<Complex> {
    DVector::from_column_slice(v)
}

fn residual_norm(c: &CorrelationMatrix, r: &[Complex], s: &[Complex]) -> f64 {
    c.apply(s)
        .iter()
        .zip(r)
        .map(|(cs, rv)| (rv - cs).norm_sqr())
        .sum()
}

/// Element-wise slicing of the matched-filter statistics.
pub fn detect_mf(r: &[Complex], c: &Constellation) -> Result<DetectorResult> {
    Ok(DetectorResult::from_soft(c, r, DetectorStats::default()))
}

/// `⌊C⁻¹R⌉`, refusing matrices whose condition estimate exceeds 1e12.
pub fn detect_zf(
    corr: &CorrelationMatrix,
    r: &[Complex],
    c: &Constellation,
) -> Result<DetectorResult> {
    check_dims(corr, r)?;
    let condition = corr.condition_estimate();
    if !(condition <= ZF_CONDITION_LIMIT) {
        return Err(Error::Singular { condition });
    }
    let soft = corr
        .matrix()
        .clone()
        .lu()
        .solve(&to_vector(r))
        .ok_or(Error::Singular { condition })?;
    Ok(DetectorResult::from_soft(
        c,
        soft.as_slice(),
        DetectorStats::default(),
    ))
}

/// Soft zero-forcing through `(C + εI)⁻¹`; never fails on near-singular `C`.
pub fn zf_regularized(corr: &CorrelationMatrix) -> DMatrix<Complex> {
    let n = corr.dim();
    let loaded =
        corr.matrix() + DMatrix::<Complex>::identity(n, n) * Complex::new(REGULARIZATION, 0.0);
    loaded
        .try_inverse()
        .unwrap_or_else(|| DMatrix::<Complex>::identity(n, n))
}

/// Spectral radius of `C − I`, which governs iterative detection.
pub fn id_spectral_radius(corr: &CorrelationMatrix) -> f64 {
    let ev = corr.eigenvalues();
    ev.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max)
}

/// Whether `S_ζ = R − (C − I)S_{ζ−1}` is a contraction for this `C`.
pub fn id_converges(corr: &CorrelationMatrix) -> bool {
    id_spectral_radius(corr) < 1.0 - ID_RADIUS_MARGIN
}

/// Soft iterative cancellation starting from `S_0 = R`.
pub fn id_soft(
    corr: &CorrelationMatrix,
    r: &[Complex],
    max_iter: usize,
) -> Result<(Vec<Complex>, DetectorStats)> {
    check_dims(corr, r)?;
    if max_iter == 0 {
        return Err(Error::InvalidConfig(
            "iterative detection needs at least one iteration".into(),
        ));
    }
    let n = r.len();
    let m = corr.matrix();
    let mut s = r.to_vec();
    let mut next = vec![Complex::new(0.0, 0.0); n];
    let mut stats = DetectorStats::default();
    for it in 1..=max_iter {
        for i in 0..n {
            let mut acc = r[i];
            for j in 0..n {
                if j != i {
                    acc -= m[(i, j)] * s[j];
                } else {
                    acc -= (m[(i, i)] - 1.0) * s[j];
                }
            }
            next[i] = acc;
        }
        let delta = next
            .iter()
            .zip(&s)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let norm = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        std::mem::swap(&mut s, &mut next);
        stats.iterations = it;
        if !norm.is_finite() || norm > ID_DIVERGENCE_NORM {
            return Err(Error::Divergence {
                norm,
                spectral_radius: id_spectral_radius(corr),
            });
        }
        if delta < ID_TOLERANCE {
            stats.converged = true;
            break;
        }
    }
    Ok((s, stats))
}

/// Iterative detection followed by a single slicing step.
pub fn detect_id(
    corr: &CorrelationMatrix,
    r: &[Complex],
    c: &Constellation,
    max_iter: usize,
) -> Result<DetectorResult> {
    let (soft, stats) = id_soft(corr, r, max_iter)?;
    Ok(DetectorResult::from_soft(c, &soft, stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdOptions {
    pub max_dim: usize,
    pub node_budget: u64,
}

impl Default for SdOptions {
    fn default() -> Self {
        Self {
            max_dim: 32,
            node_budget: 10_000_000,
        }
    }
}

pub fn detect_sd(
    corr: &CorrelationMatrix,
    r: &[Complex],
    c: &Constellation,
) -> Result<DetectorResult> {
    detect_sd_with(corr, r, c, &SdOptions::default())
}

struct SphereSearch<'a> {
    upper: &'a DMatrix<Complex>,
    target: &'a DVector<Complex>,
    points: &'a [Complex],
    current: Vec<usize>,
    best: Vec<usize>,
    best_metric: f64,
    nodes: u64,
    budget: u64,
}

impl SphereSearch<'_> {
    /// Depth-first Schnorr–Euchner descent from `level` down to 0.
    fn descend(&mut self, level: usize, partial: f64) -> bool {
        let n = self.current.len();
        let mut b = self.target[level];
        for j in level + 1..n {
            b -= self.upper[(level, j)] * self.points[self.current[j]];
        }
        let diag = self.upper[(level, level)];
        let mut children: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(p, &pt)| ((b - diag * pt).norm_sqr(), p))
            .collect();
        // Stable sort keeps the lowest index first among equal increments.
        children.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (inc, p) in children {
            let metric = partial + inc;
            if metric >= self.best_metric {
                break;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return false;
            }
            self.current[level] = p;
            if level == 0 {
                self.best_metric = metric;
                self.best.copy_from_slice(&self.current);
            } else if !self.descend(level - 1, metric) {
                return false;
            }
        }
        true
    }
}

/// Sphere decoding: exact ML search over a QR factorization of `C`, with the
/// initial squared radius set by the zero-forcing estimate.
pub fn detect_sd_with(
    corr: &CorrelationMatrix,
    r: &[Complex],
    c: &Constellation,
    opts: &SdOptions,
) -> Result<DetectorResult> {
    check_dims(corr, r)?;
    let n = r.len();
    if n > opts.max_dim {
        return Err(Error::InvalidConfig(format!(
            "sphere decoding limited to {} sub-carriers, got {n}",
            opts.max_dim
        )));
    }
    // ‖R − CS‖² = ‖QᴴR − US‖² for C = QU.
    let qr = corr.matrix().clone().qr();
    let upper = qr.r();
    let target = qr.q().adjoint() * to_vector(r);

    let zf_soft = zf_regularized(corr) * to_vector(r);
    let zf: Vec<usize> = zf_soft.iter().map(|&v| c.nearest(v)).collect();
    let zf_syms: Vec<Complex> = zf.iter().map(|&i| c.points()[i]).collect();
    let radius = (&target - &upper * to_vector(&zf_syms)).norm_squared();

    let r_energy: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    if radius <= f64::EPSILON * r_energy {
        return Ok(DetectorResult::from_indices(
            c,
            zf,
            DetectorStats::default(),
        ));
    }

    let mut search = SphereSearch {
        upper: &upper,
        target: &target,
        points: c.points(),
        current: vec![0; n],
        best: zf,
        best_metric: radius,
        nodes: 0,
        budget: opts.node_budget,
    };
    let complete = search.descend(n - 1, 0.0);
    let stats = DetectorStats {
        nodes_visited: search.nodes,
        ..DetectorStats::default()
    };
    let result = DetectorResult::from_indices(c, search.best, stats);
    if complete {
        Ok(result)
    } else {
        Err(Error::NodeBudgetExceeded {
            budget: opts.node_budget,
            best: Box::new(result),
        })
    }
}

/// Exhaustive `argmin ‖R − CS‖²` over all `P^N` candidates.
///
/// Candidates are enumerated as an odometer with sub-carrier 0 as the fastest
/// digit; the residual is updated incrementally, so each candidate costs
/// `O(N)`.
pub fn detect_ml(
    corr: &CorrelationMatrix,
    r: &[Complex],
    c: &Constellation,
) -> Result<DetectorResult> {
    check_dims(corr, r)?;
    let n = r.len();
    let p = c.len();
    let size = (p as f64).powi(n as i32);
    if size > ML_SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge { size });
    }
    let m = corr.matrix();
    let pts = c.points();
    let mut digits = vec![0usize; n];
    let start: Vec<Complex> = vec![pts[0]; n];
    let cs = corr.apply(&start);
    let mut residual: Vec<Complex> = r.iter().zip(&cs).map(|(a, b)| a - b).collect();
    let mut best = digits.clone();
    let mut best_metric: f64 = residual.iter().map(|v| v.norm_sqr()).sum();
    let total = size as u64;
    for _ in 1..total {
        // Advance the odometer, updating the residual for every changed digit.
        let mut pos = 0;
        loop {
            let old = pts[digits[pos]];
            digits[pos] = (digits[pos] + 1) % p;
            let delta = pts[digits[pos]] - old;
            for i in 0..n {
                residual[i] -= m[(i, pos)] * delta;
            }
            if digits[pos] != 0 {
                break;
            }
            pos += 1;
        }
        let metric: f64 = residual.iter().map(|v| v.norm_sqr()).sum();
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&digits);
        }
    }
    let stats = DetectorStats {
        nodes_visited: total,
        ..DetectorStats::default()
    };
    Ok(DetectorResult::from_indices(c, best, stats))
}

/// `‖R − C·S‖²` for a detector decision.
pub fn ml_metric(corr: &CorrelationMatrix, r: &[Complex], s: &[Complex]) -> f64 {
    residual_norm(corr, r, s)
}
