use num_complex::Complex;

use super::transfer::TransferFunction;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectral::{from_centered_spectrum, to_centered_spectrum};

/// Gaussian field envelope with intensity FWHM `fwhm_ps`, centered at t=0 on
/// the time grid conjugate to `tf`.
pub fn gaussian_pulse<T: Scalar>(tf: &TransferFunction<T>, fwhm_ps: T) -> Vec<Complex<T>> {
    // intensity FWHM -> field sigma: |E|² ∝ exp(-t²/σ_E²)
    let fwhm_ns = fwhm_ps / T::of(1000.0);
    let sigma_field = fwhm_ns / (T::of(2.0) * T::of(std::f64::consts::LN_2).sqrt());
    tf.time_grid_ns()
        .into_iter()
        .map(|t| {
            let x = t / sigma_field;
            Complex::new((-x * x / T::of(2.0)).exp(), T::zero())
        })
        .collect()
}

/// Output field envelope for an input envelope sampled on the time grid of `tf`.
///
/// The comb acts as a linear filter: the output is the inverse transform of
/// the input spectrum times `H`.
pub fn echo_response<T: Scalar>(tf: &TransferFunction<T>, input: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if input.len() != tf.len() {
        return Err(invalid(
            "input_pulse",
            format!("pulse has {} samples, grid has {}", input.len(), tf.len()),
        ));
    }
    let span_ns = tf.time_step_ns() * T::of_usize(tf.len());
    let needed = T::of(3000.0) / tf.spacing();
    if !(span_ns > needed) {
        return Err(invalid(
            "grid",
            format!("time span {span_ns} ns must exceed three storage times ({needed} ns)"),
        ));
    }
    let mut spectrum = to_centered_spectrum(input);
    for (s, h) in spectrum.iter_mut().zip(tf.amplitude()) {
        *s = *s * h;
    }
    Ok(from_centered_spectrum(&spectrum))
}

/// Energy bookkeeping of an echo simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoAccounting<T> {
    /// Fraction of input energy leaving in the t≈0 window.
    pub transmitted: T,
    /// Fraction leaving around `m/Δ`, index 0 is the first echo.
    pub echoes: Vec<T>,
    /// Fraction in windows at negative multiples of 1/Δ (should be ~0 for a causal filter).
    pub precursor: T,
    /// `1 - (transmitted + echoes + precursor)`.
    pub absorbed: T,
    /// Absorbed fraction computed independently in the frequency domain.
    pub absorbed_spectral: T,
    /// Energy centroid (ns) of each echo window.
    pub echo_times_ns: Vec<T>,
    /// Energy centroid (ns) of the transmitted window. Nonzero because the
    /// finite comb band adds a group delay common to all outputs.
    pub transmitted_time_ns: T,
}

impl<T: Scalar> EchoAccounting<T> {
    pub fn first_echo(&self) -> T {
        self.echoes.first().copied().unwrap_or_else(T::zero)
    }

    /// First-echo delay relative to the transmitted pulse (ns).
    pub fn storage_delay_ns(&self) -> T {
        self.echo_times_ns.first().copied().unwrap_or_else(T::nan) - self.transmitted_time_ns
    }
}

/// Splits the output energy into windows centered on multiples of 1/Δ.
pub fn account_echo<T: Scalar>(
    tf: &TransferFunction<T>,
    input: &[Complex<T>],
    output: &[Complex<T>],
) -> EchoAccounting<T> {
    let e_in: T = input.iter().map(|c| c.norm_sqr()).sum();
    let period = T::of(1000.0) / tf.spacing();
    let times = tf.time_grid_ns();
    let n_pos = ((times.len() / 2) as f64 * tf.time_step_ns().to_f64_lossy() / period.to_f64_lossy()).floor() as usize + 2;
    let mut energy = vec![T::zero(); n_pos];
    let mut moment = vec![T::zero(); n_pos];
    let mut transmitted = T::zero();
    let mut transmitted_moment = T::zero();
    let mut precursor = T::zero();
    for (&t, y) in times.iter().zip(output) {
        let e = y.norm_sqr();
        let m = (t / period).round().to_f64_lossy() as i64;
        match m {
            0 => {
                transmitted = transmitted + e;
                transmitted_moment = transmitted_moment + e * t;
            }
            m if m < 0 => precursor = precursor + e,
            m => {
                let i = (m - 1) as usize;
                energy[i] = energy[i] + e;
                moment[i] = moment[i] + e * t;
            }
        }
    }
    while energy.last().is_some_and(|&e| e == T::zero()) {
        energy.pop();
        moment.pop();
    }
    let echo_times_ns = energy
        .iter()
        .zip(&moment)
        .map(|(&e, &m)| if e > T::zero() { m / e } else { T::nan() })
        .collect();
    let echoes: Vec<T> = energy.iter().map(|&e| e / e_in).collect();
    let transmitted_time_ns = if transmitted > T::zero() {
        transmitted_moment / transmitted
    } else {
        T::zero()
    };
    let transmitted = transmitted / e_in;
    let precursor = precursor / e_in;
    let out: T = echoes.iter().copied().sum::<T>() + transmitted + precursor;

    let spec = to_centered_spectrum(input);
    let s_in: T = spec.iter().map(|c| c.norm_sqr()).sum();
    let s_abs: T = spec
        .iter()
        .zip(tf.amplitude())
        .map(|(x, h)| x.norm_sqr() * (T::one() - h.norm_sqr()))
        .sum();

    EchoAccounting {
        transmitted,
        echoes,
        precursor,
        absorbed: T::one() - out,
        absorbed_spectral: s_abs / s_in,
        echo_times_ns,
        transmitted_time_ns,
    }
}

/// Convenience: first-echo energy fraction and arrival time for a Gaussian probe.
pub fn probe_echo<T: Scalar>(tf: &TransferFunction<T>, fwhm_ps: T) -> Result<EchoAccounting<T>> {
    let input = gaussian_pulse(tf, fwhm_ps);
    let output = echo_response(tf, &input)?;
    Ok(account_echo(tf, &input, &output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::profile::{CombParams, CombProfile, ToothShape};
    use crate::comb::transfer::transfer_function;

    fn tf(d: f64, d0: f64) -> TransferFunction<f64> {
        transfer_function(
            &CombProfile::build(CombParams {
                spacing: 5.0,
                tooth_fwhm: 2.5,
                peak_od: d,
                background_od: d0,
                bandwidth_ghz: 4.0,
                shape: ToothShape::Gaussian,
                grid_resolution: 0.25,
            })
            .unwrap(),
        )
    }

    #[test]
    fn transparent_comb_is_identity() {
        let t = tf(0.0, 0.0);
        let x = gaussian_pulse(&t, 300.0);
        let y = echo_response(&t, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn first_echo_at_200ns() {
        let t = tf(1.0, 0.1);
        let acc = probe_echo(&t, 300.0).unwrap();
        assert!((acc.storage_delay_ns() - 200.0).abs() < 0.01, "{:?} {}", acc.echo_times_ns, acc.transmitted_time_ns);
        assert!(acc.first_echo() > 0.01);
        assert!(acc.precursor < 1e-6);
    }

    #[test]
    fn energy_balances_in_both_domains() {
        let t = tf(2.0, 0.3);
        let acc = probe_echo(&t, 300.0).unwrap();
        assert!((acc.absorbed - acc.absorbed_spectral).abs() < 1e-6);
        assert!(acc.absorbed >= 0.0);
    }

    #[test]
    fn rejects_mismatched_input() {
        let t = tf(1.0, 0.0);
        assert!(echo_response(&t, &[Complex::new(1.0, 0.0); 8]).is_err());
    }

    #[test]
    fn aliasing_guard() {
        let det: Vec<f64> = (0..64).map(|i| (i as f64 - 32.0) * 1.0).collect();
        let amp = vec![Complex::new(1.0, 0.0); 64];
        // 1 µs span, spacing 5 MHz needs > 600 ns: ok; spacing 2 MHz needs 1.5 µs: rejected
        let ok = TransferFunction::from_parts(det.clone(), amp.clone(), 5.0).unwrap();
        assert!(echo_response(&ok, &amp).is_ok());
        let bad = TransferFunction::from_parts(det, amp.clone(), 2.0).unwrap();
        assert!(echo_response(&bad, &amp).is_err());
    }
}
