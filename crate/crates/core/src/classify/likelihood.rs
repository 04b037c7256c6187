use crate::sefdm::Constellation;
use crate::{Complex, Error, Result};

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln L(r | 𝔐, σ)` for
/// `L = (1/P) · Π_n Σ_p exp(−|r_n − 𝔐_p|² / 2σ²) / (2πσ²)`.
///
/// The `1/P` prefactor is applied once for the whole observation.
pub fn log_likelihood(r: &[Complex], c: &Constellation, sigma2: f64) -> f64 {
    let norm = -(2.0 * std::f64::consts::PI * sigma2).ln();
    let per_symbol: f64 = r
        .iter()
        .map(|&x| {
            norm + log_sum_exp(
                c.points()
                    .iter()
                    .map(|p| -(x - p).norm_sqr() / (2.0 * sigma2)),
            )
        })
        .sum();
    per_symbol - (c.len() as f64).ln()
}

/// Maximum-likelihood modulation classification; ties go to the first candidate.
pub fn classify_modulation_ml<'a>(
    r: &[Complex],
    candidates: &'a [Constellation],
    sigma2: f64,
) -> Result<&'a Constellation> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("modulation candidate list"));
    }
    if r.is_empty() {
        return Err(Error::EmptyInput("observation"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise variance {sigma2} must be positive"
        )));
    }
    let mut best = &candidates[0];
    let mut best_ll = f64::NEG_INFINITY;
    for c in candidates {
        let ll = log_likelihood(r, c, sigma2);
        if ll > best_ll {
            best_ll = ll;
            best = c;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, NoiseSpec};
    use crate::rng;
    use rand::Rng;

    #[test]
    fn exact_bpsk_is_recognized() {
        let r: Vec<Complex> = [1.0, -1.0, -1.0, 1.0, 1.0]
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        let cands = [Constellation::bpsk(), Constellation::qpsk()];
        assert_eq!(
            classify_modulation_ml(&r, &cands, 0.01).unwrap().label(),
            "BPSK"
        );
    }

    #[test]
    fn single_candidate_wins() {
        let cands = [Constellation::qpsk()];
        let r = [Complex::new(0.2, 0.1)];
        assert_eq!(
            classify_modulation_ml(&r, &cands, 1.0).unwrap().label(),
            "QPSK"
        );
        assert!(classify_modulation_ml(&r, &[], 1.0).is_err());
        assert!(classify_modulation_ml(&r, &cands, 0.0).is_err());
    }

    #[test]
    fn qpsk_at_ten_db() {
        let q = Constellation::qpsk();
        let cands = [Constellation::bpsk(), Constellation::qpsk()];
        let mut r = rng::stream(11);
        let sigma2 = 10f64.powf(-1.0);
        let mut correct = 0;
        for _ in 0..100 {
            let s: Vec<Complex> = (0..256).map(|_| q.points()[r.random_range(0..4)]).collect();
            let y = awgn(&s, NoiseSpec::new(10.0), &mut r).unwrap();
            if classify_modulation_ml(&y, &cands, sigma2).unwrap().label() == "QPSK" {
                correct += 1;
            }
        }
        assert!(correct >= 99, "{correct}/100");
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp([-1000.0, -1000.0].into_iter());
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
