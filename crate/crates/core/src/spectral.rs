//! FFT helpers on centered frequency grids.
//!
//! Spectra are stored with index `j` mapping to detuning `(j - N/2)·res`.
//! Time samples use standard FFT order (`n >= N/2` are negative times).

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Scalar;

fn alternate<T: Scalar>(buf: &mut [Complex<T>]) {
    for (n, v) in buf.iter_mut().enumerate() {
        if n % 2 == 1 {
            *v = -*v;
        }
    }
}

/// Time samples to centered spectrum (unnormalized forward DFT).
pub fn to_centered_spectrum<T: Scalar>(time: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = time.to_vec();
    alternate(&mut buf);
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Centered spectrum back to time samples (normalized inverse DFT).
pub fn from_centered_spectrum<T: Scalar>(spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = spectrum.to_vec();
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::of_usize(n);
    for v in buf.iter_mut() {
        *v = *v * scale;
    }
    alternate(&mut buf);
    buf
}

/// Discrete Hilbert transform of a real sequence sampled on a periodic grid,
/// signed so that `exp(x + i·hilbert(x))` is the spectrum of a causal response.
///
/// Works through the real cepstrum: positive quefrencies are doubled,
/// negative ones dropped, the Nyquist term kept once.
pub fn causal_hilbert<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    assert!(n >= 2 && n % 2 == 0, "hilbert transform needs an even length");
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = T::one() / T::of_usize(n);
    let two = T::of(2.0);
    for (k, v) in buf.iter_mut().enumerate() {
        let w = if k == 0 || k == n / 2 {
            scale
        } else if k < n / 2 {
            two * scale
        } else {
            T::zero()
        };
        *v = *v * w;
    }
    planner.plan_fft_forward(n).process(&mut buf);
    buf.into_iter().map(|c| c.im).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_round_trip() {
        let x: Vec<Complex<f64>> = (0..64)
            .map(|i| Complex::new((i as f64 * 0.3).sin(), (i as f64 * 0.1).cos()))
            .collect();
        let back = from_centered_spectrum(&to_centered_spectrum(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_lands_in_the_middle() {
        let x = vec![Complex::new(1.0f64, 0.0); 16];
        let s = to_centered_spectrum(&x);
        assert!((s[8].re - 16.0).abs() < 1e-12);
        assert!(s.iter().enumerate().all(|(j, v)| j == 8 || v.norm() < 1e-12));
    }

    #[test]
    fn hilbert_of_constant_is_zero() {
        let h = causal_hilbert(&vec![-1.0f64; 128]);
        assert!(h.iter().all(|v| v.abs() < 1e-13));
    }
}
