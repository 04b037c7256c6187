use super::wavelet::{Scalogram, WaveletBank, WaveletFilters};
use crate::{Complex, Result};

/// Linear interpolation between order statistics: position `p·(n−1)` in the
/// sorted sample (the "type 7" rule). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)
}

/// Per-scale variance followed by per-scale interquartile range.
pub fn reduce_features(sg: &Scalogram) -> Vec<f64> {
    let vars = sg.rows().map(variance);
    let iqrs: Vec<f64> = sg.rows().map(interquartile_range).collect();
    vars.chain(iqrs).collect()
}

/// Classifier front end: power normalization, scalogram, statistics.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    filters: WaveletFilters,
}

impl FeatureExtractor {
    pub fn new(bank: &WaveletBank) -> Result<Self> {
        Ok(Self {
            filters: WaveletFilters::new(bank)?,
        })
    }

    pub fn bank(&self) -> &WaveletBank {
        self.filters.bank()
    }

    /// Rescales `x` to unit mean sample energy (an ideal AGC) before the
    /// wavelet transform, so fading gain does not leak into the features.
    pub fn features(&self, x: &[Complex]) -> Result<Vec<f64>> {
        let energy = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len().max(1) as f64;
        let sg = if energy > 0.0 {
            let g = 1.0 / energy.sqrt();
            let scaled: Vec<Complex> = x.iter().map(|v| v * g).collect();
            self.filters.scalogram(&scaled)?
        } else {
            self.filters.scalogram(x)?
        };
        Ok(reduce_features(&sg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rows_have_no_spread() {
        let sg = Scalogram::from_rows(vec![vec![3.0; 10], vec![0.5; 10]]).unwrap();
        assert_eq!(reduce_features(&sg), vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ramp_statistics() {
        let row: Vec<f64> = (0..100).map(f64::from).collect();
        assert!((variance(&row) - 833.25).abs() < 1e-9);
        // Q1 at position 24.75, Q3 at 74.25.
        assert!((interquartile_range(&row) - 49.5).abs() < 1e-12);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 8.0);
        assert!((quantile_sorted(&v, 0.5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn features_ignore_global_phase() {
        let bank = WaveletBank::new(64);
        let fx = FeatureExtractor::new(&bank).unwrap();
        let x: Vec<Complex> = (0..64)
            .map(|k| Complex::new((k as f64 * 0.7).cos(), (k as f64 * 0.2).sin()))
            .collect();
        let rot = Complex::from_polar(1.0, 1.1);
        let a = fx.features(&x).unwrap();
        let b = fx
            .features(&x.iter().map(|v| v * rot).collect::<Vec<_>>())
            .unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9 * (1.0 + u.abs()));
        }
        assert_eq!(a.len(), bank.feature_len());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn time_permutation_invariance(rows in prop::collection::vec(prop::collection::vec(0.0..10.0f64, 12), 1..5), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                let sg = Scalogram::from_rows(rows.clone()).unwrap();
                let mut perm: Vec<usize> = (0..12).collect();
                perm.shuffle(&mut crate::rng::stream(seed));
                let shuffled = Scalogram::from_rows(rows.iter().map(|r| perm.iter().map(|&i| r[i]).collect()).collect()).unwrap();
                let a = reduce_features(&sg);
                let b = reduce_features(&shuffled);
                for (u, v) in a.iter().zip(&b) {
                    prop_assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }
}
