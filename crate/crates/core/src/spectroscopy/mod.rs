//! Closed-form spectroscopy models: spectral-hole decay, superhyperfine side
//! holes, two-pulse echo decay and inhomogeneous absorption. Each doubles as a
//! synthetic-data generator and as a fit target.

pub mod absorption;
pub mod dataset;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub use absorption::{optical_depth, transmitted_power, AbsorptionLine};
pub use dataset::{Dataset, NoiseModel};

/// Two-component population decay of a spectral hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleDecayParams<T> {
    pub amp_a: T,
    pub amp_b: T,
    /// Short lifetime, seconds.
    pub tau_a: T,
    /// Long lifetime, seconds.
    pub tau_b: T,
}

impl<T: Scalar> HoleDecayParams<T> {
    pub fn new(amp_a: T, amp_b: T, tau_a: T, tau_b: T) -> Result<Self> {
        if !(amp_a >= T::zero() && amp_b >= T::zero()) {
            return Err(invalid("amp_a", "amplitudes must be non-negative"));
        }
        if !(tau_a > T::zero() && tau_a < tau_b) {
            return Err(invalid("tau_a", "need 0 < tau_a < tau_b"));
        }
        Ok(HoleDecayParams {
            amp_a,
            amp_b,
            tau_a,
            tau_b,
        })
    }

    /// Unit initial depth split 29% / 71% between 0.55 s and 32.75 s.
    pub fn measured() -> Self {
        HoleDecayParams {
            amp_a: T::of(0.29),
            amp_b: T::of(0.71),
            tau_a: T::of(0.55),
            tau_b: T::of(32.75),
        }
    }
}

pub fn hole_depth<T: Scalar>(t_s: T, p: &HoleDecayParams<T>) -> T {
    p.amp_a * (-t_s / p.tau_a).exp() + p.amp_b * (-t_s / p.tau_b).exp()
}

/// Field-dependent superhyperfine side holes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideHoleModel<T> {
    /// ⁹³Nb detuning slope, kHz/G.
    pub slope_nb: T,
    /// ⁷Li detuning slope, kHz/G.
    pub slope_li: T,
    pub field_gauss: T,
    pub hole_fwhm_central: T,
    pub hole_fwhm_nb: T,
    pub hole_fwhm_li: T,
}

impl<T: Scalar> SideHoleModel<T> {
    pub fn measured() -> Self {
        SideHoleModel {
            slope_nb: T::of(1.077),
            slope_li: T::of(1.487),
            field_gauss: T::of(13000.0),
            hole_fwhm_central: T::of(4.0),
            hole_fwhm_nb: T::of(6.0),
            hole_fwhm_li: T::of(3.0),
        }
    }

    /// Side holes at this model's field, ready for the comb penalty.
    pub fn side_holes(&self) -> [crate::comb::SideHole<T>; 2] {
        let (nb, li) = side_hole_detunings(self.field_gauss, self);
        [
            crate::comb::SideHole {
                detuning_mhz: nb,
                fwhm_mhz: self.hole_fwhm_nb,
            },
            crate::comb::SideHole {
                detuning_mhz: li,
                fwhm_mhz: self.hole_fwhm_li,
            },
        ]
    }
}

/// `(nb, li)` detunings in MHz at field `b_gauss`.
pub fn side_hole_detunings<T: Scalar>(b_gauss: T, m: &SideHoleModel<T>) -> (T, T) {
    let k = T::of(1e-3);
    (m.slope_nb * b_gauss * k, m.slope_li * b_gauss * k)
}

/// Lorentzian line of unit peak height.
pub fn lorentzian<T: Scalar>(detuning: T, fwhm: T) -> T {
    let x = T::of(2.0) * detuning / fwhm;
    T::one() / (T::one() + x * x)
}

/// Transparency (hole depth relative to the central hole) around a burned
/// hole: central hole plus symmetric Nb and Li side holes with relative weights.
pub fn hole_spectrum<T: Scalar>(detuning: T, m: &SideHoleModel<T>, weight_nb: T, weight_li: T) -> T {
    let (nb, li) = side_hole_detunings(m.field_gauss, m);
    let pair = |c: T, w: T| lorentzian(detuning - c, w) + lorentzian(detuning + c, w);
    lorentzian(detuning, m.hole_fwhm_central) + weight_nb * pair(nb, m.hole_fwhm_nb) + weight_li * pair(li, m.hole_fwhm_li)
}

/// Two-pulse photon echo decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoDecayParams<T> {
    pub area_zero: T,
    /// Coherence time, µs.
    pub t2: T,
    pub shape_x: T,
}

impl<T: Scalar> EchoDecayParams<T> {
    pub fn new(area_zero: T, t2: T, shape_x: T) -> Result<Self> {
        if !(t2 > T::zero()) {
            return Err(invalid("t2", "must be positive"));
        }
        if !(shape_x >= T::one() && shape_x <= T::of(3.0)) {
            return Err(invalid("shape_x", "must lie in [1, 3]"));
        }
        Ok(EchoDecayParams {
            area_zero,
            t2,
            shape_x,
        })
    }

    pub fn measured() -> Self {
        EchoDecayParams {
            area_zero: T::one(),
            t2: T::of(90.34),
            shape_x: T::of(1.93),
        }
    }
}

/// `A₀ exp(-2 (2 t₁₂ / T₂)^x)`, `t12` in µs.
pub fn echo_area<T: Scalar>(t12_us: T, p: &EchoDecayParams<T>) -> T {
    let u = T::of(2.0) * t12_us / p.t2;
    p.area_zero * (-T::of(2.0) * u.powf(p.shape_x)).exp()
}
