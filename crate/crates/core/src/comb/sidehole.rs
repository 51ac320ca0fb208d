//! Superhyperfine side holes versus the comb's transparency pattern.
//!
//! Optical pumping of a transparency window at δ also burns side holes at
//! δ ± s. When `s` is a multiple of the tooth spacing those land in other
//! transparency windows; otherwise they erode teeth. [`misalignment`]
//! quantifies that on a 0 (aligned) to 1 (worst case, half a period off) scale.

use serde::{Deserialize, Serialize};

use super::profile::CombParams;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Misalignment above which a side-hole species is reported as landing on teeth.
pub const ALIGNMENT_THRESHOLD: f64 = 0.25;

const SAMPLES_PER_PERIOD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideHole<T> {
    pub detuning_mhz: T,
    /// Lorentzian FWHM of the side hole.
    pub fwhm_mhz: T,
}

/// Lorentzian of HWHM `g` summed over all periods `p`, evaluated at `x`.
fn periodic_lorentzian(x: f64, g: f64, p: f64) -> f64 {
    let a = 2.0 * std::f64::consts::PI * g / p;
    let b = 2.0 * std::f64::consts::PI * x / p;
    a.sinh() / (p * (a.cosh() - b.cos()))
}

fn overlap_curve<T: Scalar>(comb: &CombParams<T>, fwhm: f64) -> Vec<f64> {
    let p = comb.spacing.to_f64_lossy();
    let w = comb.tooth_fwhm.to_f64_lossy();
    let n = SAMPLES_PER_PERIOD;
    let h = p / n as f64;
    let x = |i: usize| (i as f64 - (n / 2) as f64) * h;
    let tooth: Vec<f64> = (0..n)
        .map(|i| comb.shape.height(T::of(x(i)), T::of(w)).to_f64_lossy())
        .collect();
    let kernel: Vec<f64> = (0..n)
        .map(|i| periodic_lorentzian(i as f64 * h, fwhm / 2.0, p) * h)
        .collect();
    // side hole profile seen at each point: tooth pattern smeared by the Lorentzian
    let smeared: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| tooth[(i + n - k) % n] * kernel[k]).sum())
        .collect();
    // O(shift) = <(1 - tooth(x)) · smeared(x + shift)>
    (0..n)
        .map(|s| {
            (0..n)
                .map(|i| (1.0 - tooth[i]) * smeared[(i + s) % n])
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// 0 when the side hole falls on transparency windows, 1 when it lands squarely on teeth.
pub fn misalignment<T: Scalar>(comb: &CombParams<T>, hole: SideHole<T>) -> T {
    let curve = overlap_curve(comb, hole.fwhm_mhz.to_f64_lossy());
    let n = curve.len();
    let lo = curve[0];
    let hi = curve[n / 2];
    if !(hi > lo) {
        return T::zero();
    }
    let p = comb.spacing.to_f64_lossy();
    let frac = (hole.detuning_mhz.to_f64_lossy() / p).rem_euclid(1.0) * n as f64;
    let i0 = frac.floor() as usize % n;
    let t = frac - frac.floor();
    let v = curve[i0] * (1.0 - t) + curve[(i0 + 1) % n] * t;
    T::of(((v - lo) / (hi - lo)).clamp(0.0, 1.0))
}

pub fn is_aligned<T: Scalar>(comb: &CombParams<T>, hole: SideHole<T>) -> bool {
    misalignment(comb, hole).to_f64_lossy() < ALIGNMENT_THRESHOLD
}

/// Multiplicative efficiency loss `Π (1 - strength · misalignment)` over side-hole species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideHolePenalty<T> {
    pub strength: T,
}

impl<T: Scalar> SideHolePenalty<T> {
    pub fn none() -> Self {
        SideHolePenalty { strength: T::zero() }
    }

    pub fn factor(&self, comb: &CombParams<T>, holes: &[SideHole<T>]) -> T {
        holes
            .iter()
            .map(|&h| (T::one() - self.strength * misalignment(comb, h)).max(T::zero()))
            .fold(T::one(), |a, b| a * b)
    }

    /// Strength reproducing `factor(a) / factor(b) = target_ratio`, by bisection on [0, 1].
    pub fn calibrate(
        comb_a: &CombParams<T>,
        comb_b: &CombParams<T>,
        holes: &[SideHole<T>],
        target_ratio: T,
    ) -> Result<Self> {
        let ratio = |k: f64| {
            let p = SideHolePenalty { strength: T::of(k) };
            (p.factor(comb_a, holes) / p.factor(comb_b, holes)).to_f64_lossy()
        };
        let target = target_ratio.to_f64_lossy();
        let (mut lo, mut hi) = (0.0, 1.0 - 1e-9);
        let (r_lo, r_hi) = (ratio(lo) - target, ratio(hi) - target);
        if r_lo * r_hi > 0.0 {
            return Err(invalid(
                "target_ratio",
                format!("ratio {target} not reachable (spans {:.3}..{:.3})", r_lo + target, r_hi + target),
            ));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if (ratio(mid) - target) * r_lo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(SideHolePenalty {
            strength: T::of(0.5 * (lo + hi)),
        })
    }
}
