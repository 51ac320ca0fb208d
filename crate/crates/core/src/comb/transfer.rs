use num_complex::Complex;

use super::profile::CombProfile;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::spectral::causal_hilbert;

/// Complex field transmission of the comb on the profile's detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<T> {
    pub(crate) detuning: Vec<T>,
    pub(crate) amplitude: Vec<Complex<T>>,
    /// Tooth spacing (MHz) the function was built for; used by the aliasing guard.
    pub(crate) spacing: T,
}

impl<T: Scalar> TransferFunction<T> {
    pub fn from_parts(detuning: Vec<T>, amplitude: Vec<Complex<T>>, spacing: T) -> Result<Self> {
        if detuning.len() != amplitude.len() || detuning.len() < 2 || detuning.len() % 2 != 0 {
            return Err(invalid("amplitude", "needs an even-length grid matching the detuning axis"));
        }
        Ok(TransferFunction {
            detuning,
            amplitude,
            spacing,
        })
    }

    pub fn detuning(&self) -> &[T] {
        &self.detuning
    }

    pub fn amplitude(&self) -> &[Complex<T>] {
        &self.amplitude
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn resolution(&self) -> T {
        self.detuning[1] - self.detuning[0]
    }

    /// Sample spacing of the conjugate time grid (ns).
    pub fn time_step_ns(&self) -> T {
        T::of(1000.0) / (self.resolution() * T::of_usize(self.len()))
    }

    /// Times (ns) of the conjugate grid in FFT order: index `n >= N/2` is negative.
    pub fn time_grid_ns(&self) -> Vec<T> {
        let n = self.len();
        let dt = self.time_step_ns();
        (0..n)
            .map(|i| {
                if i < n / 2 {
                    T::of_usize(i) * dt
                } else {
                    -(T::of_usize(n - i) * dt)
                }
            })
            .collect()
    }

    pub fn phase(&self) -> Vec<T> {
        self.amplitude.iter().map(|c| c.arg()).collect()
    }

    pub fn magnitude(&self) -> Vec<T> {
        self.amplitude.iter().map(|c| c.norm()).collect()
    }

    /// Pointwise product, i.e. two media in series.
    pub fn cascade(&self, other: &TransferFunction<T>) -> Result<Self> {
        if self.detuning != other.detuning {
            return Err(invalid("detuning", "transfer functions live on different grids"));
        }
        Ok(TransferFunction {
            detuning: self.detuning.clone(),
            amplitude: self
                .amplitude
                .iter()
                .zip(&other.amplitude)
                .map(|(a, b)| a * b)
                .collect(),
            spacing: self.spacing,
        })
    }
}

/// Field transmission `exp(-d/2 + iφ)` with φ the causal Hilbert partner of `-d/2`.
pub fn transfer_function<T: Scalar>(profile: &CombProfile<T>) -> TransferFunction<T> {
    let half = T::of(0.5);
    let log_mag: Vec<T> = profile.od().iter().map(|&d| -d * half).collect();
    let phase = causal_hilbert(&log_mag);
    let amplitude = log_mag
        .iter()
        .zip(&phase)
        .map(|(&a, &p)| Complex::from_polar(a.exp(), p))
        .collect();
    TransferFunction {
        detuning: profile.detuning().to_vec(),
        amplitude,
        spacing: profile.params().spacing,
    }
}
