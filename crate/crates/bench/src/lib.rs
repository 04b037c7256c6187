//! Shared inputs for the benchmarks.

use rand::Rng;
use wds_core::{rng, Complex, Constellation, Oversampling, SefdmConfig};

pub fn qpsk_vector(n: usize, seed: u64) -> Vec<Complex> {
    let pts = Constellation::qpsk().points().to_vec();
    let mut r = rng::stream(seed);
    (0..n).map(|_| pts[r.random_range(0..4)]).collect()
}

pub fn config(n: usize, rho: u32, alpha: f64) -> SefdmConfig {
    SefdmConfig::new(
        n,
        Oversampling::integer(rho).expect("non-zero"),
        alpha,
        20e6,
    )
    .expect("valid geometry")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures() {
        assert_eq!(super::qpsk_vector(12, 3), super::qpsk_vector(12, 3));
        assert_eq!(super::config(16, 4, 0.8).n_samples(), 64);
    }
}
