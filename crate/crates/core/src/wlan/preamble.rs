//! Legacy 802.11a training fields and a fixed signal field.

use rustfft::FftPlanner;

use crate::Complex;

pub const FFT_SIZE: usize = 64;
pub const STF_LEN: usize = 160;
pub const LTF_GUARD: usize = 32;
pub const LTF_LEN: usize = LTF_GUARD + 2 * FFT_SIZE;
pub const SIG_LEN: usize = 80;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN + SIG_LEN;

/// Pilot polarity `p_0..p_126`: the 127-bit scrambler sequence
/// (`x⁷ + x⁴ + 1`, all-ones seed) mapped 0 → +1, 1 → −1.
pub fn pilot_polarity() -> [f64; 127] {
    let mut state = [1u8; 7];
    let mut out = [0.0; 127];
    for p in &mut out {
        let bit = state[6] ^ state[3];
        state.rotate_right(1);
        state[0] = bit;
        *p = if bit == 0 { 1.0 } else { -1.0 };
    }
    out
}

/// L-STF sub-carrier values for bins −26..=26.
pub fn stf_spectrum() -> [Complex; 53] {
    let a = (13.0f64 / 6.0).sqrt();
    let p = Complex::new(a, a);
    let mut s = [Complex::new(0.0, 0.0); 53];
    let signs = [
        1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0,
    ];
    let bins = [-24, -20, -16, -12, -8, -4, 4, 8, 12, 16, 20, 24];
    for (bin, sign) in bins.into_iter().zip(signs) {
        s[(bin + 26) as usize] = p * sign;
    }
    s
}

/// L-LTF sub-carrier values for bins −26..=26 (zero at DC).
pub const LTF_SPECTRUM: [f64; 53] = [
    1., 1., -1., -1., 1., 1., -1., 1., -1., 1., 1., 1., 1., 1., 1., -1., -1., 1., 1., -1., 1., -1.,
    1., 1., 1., 1., 0., 1., -1., -1., 1., 1., -1., 1., -1., 1., -1., -1., -1., -1., -1., 1., 1.,
    -1., -1., 1., -1., 1., -1., 1., 1., 1., 1.,
];

/// `(1/√64)·Σ_b S_b·exp(j2πbk/64)` for `S` given on bins −26..=26.
pub fn ofdm_symbol(spectrum: &[Complex; 53]) -> Vec<Complex> {
    let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
    for (i, v) in spectrum.iter().enumerate() {
        let bin = i as i64 - 26;
        buf[bin.rem_euclid(FFT_SIZE as i64) as usize] = *v;
    }
    FftPlanner::new()
        .plan_fft_inverse(FFT_SIZE)
        .process(&mut buf);
    let g = 1.0 / (FFT_SIZE as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= g);
    buf
}

pub fn ltf_symbol() -> Vec<Complex> {
    let mut s = [Complex::new(0.0, 0.0); 53];
    for (d, &v) in s.iter_mut().zip(&LTF_SPECTRUM) {
        *d = Complex::new(v, 0.0);
    }
    ofdm_symbol(&s)
}

pub fn l_stf() -> Vec<Complex> {
    let period = ofdm_symbol(&stf_spectrum());
    (0..STF_LEN).map(|k| period[k % FFT_SIZE]).collect()
}

pub fn l_ltf() -> Vec<Complex> {
    let sym = ltf_symbol();
    let mut out = sym[FFT_SIZE - LTF_GUARD..].to_vec();
    out.extend_from_slice(&sym);
    out.extend_from_slice(&sym);
    out
}

/// Fixed BPSK signal field on the standard 48 data bins with `p_0` pilots,
/// prefixed by a 16-sample guard.
pub fn l_sig() -> Vec<Complex> {
    let pilots = [(-21, 1.0), (-7, 1.0), (7, 1.0), (21, -1.0)];
    let polarity = pilot_polarity();
    let mut s = [Complex::new(0.0, 0.0); 53];
    let mut bit = 0usize;
    for bin in -26i64..=26 {
        if bin == 0 {
            continue;
        }
        let v = match pilots.iter().find(|(b, _)| *b == bin) {
            Some(&(_, p)) => p * polarity[0],
            None => {
                // Content borrowed from the scrambler sequence.
                bit += 1;
                polarity[bit]
            }
        };
        s[(bin + 26) as usize] = Complex::new(v, 0.0);
    }
    let sym = ofdm_symbol(&s);
    let mut out = sym[FFT_SIZE - 16..].to_vec();
    out.extend_from_slice(&sym);
    out
}

pub fn preamble() -> Vec<Complex> {
    let mut out = l_stf();
    out.extend(l_ltf());
    out.extend(l_sig());
    out
}
