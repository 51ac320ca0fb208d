use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Speed of light in nm·GHz.
const C_NM_GHZ: f64 = 299_792_458.0;

/// `αL = ln(P_in / P_out)`.
pub fn optical_depth<T: Scalar>(p_in: T, p_out: T) -> Result<T> {
    if !(p_out > T::zero()) || !(p_in > T::zero()) {
        return Err(invalid("p_out", "powers must be positive"));
    }
    if p_out > p_in {
        return Err(invalid("p_out", format!("output {p_out} W exceeds input {p_in} W")));
    }
    Ok((p_in / p_out).ln())
}

/// Beer–Lambert: `P_in e^{-αL}`.
pub fn transmitted_power<T: Scalar>(p_in: T, od: T) -> T {
    p_in * (-od).exp()
}

/// Single Gaussian inhomogeneous line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionLine<T> {
    pub center_nm: T,
    pub fwhm_ghz: T,
    pub peak_od: T,
}

impl<T: Scalar> AbsorptionLine<T> {
    /// 180 GHz wide line centered on the 1532.05 nm memory wavelength.
    pub fn erbium_default() -> Self {
        AbsorptionLine {
            center_nm: T::of(1532.05),
            fwhm_ghz: T::of(180.0),
            peak_od: T::of(3.0),
        }
    }

    pub fn od_at_nm(&self, wavelength_nm: T) -> T {
        let c = T::of(C_NM_GHZ);
        let df = c / wavelength_nm - c / self.center_nm;
        self.od_at_offset_ghz(df)
    }

    pub fn od_at_offset_ghz(&self, df_ghz: T) -> T {
        let x = df_ghz / self.fwhm_ghz;
        self.peak_od * (-T::of(4.0 * std::f64::consts::LN_2) * x * x).exp()
    }

    /// Simulated transmission sweep: `(wavelength_nm, p_out)` for constant `p_in`.
    pub fn sweep(&self, p_in: T, lo_nm: T, hi_nm: T, n: usize) -> Vec<(T, T)> {
        (0..n)
            .map(|i| {
                let w = lo_nm + (hi_nm - lo_nm) * T::of_usize(i) / T::of_usize(n.max(2) - 1);
                (w, transmitted_power(p_in, self.od_at_nm(w)))
            })
            .collect()
    }
}

/// FWHM in GHz of an optical-depth spectrum sampled versus wavelength, by
/// linear interpolation of the half-maximum crossings.
pub fn measured_fwhm_ghz(points: &[(f64, f64)]) -> Option<f64> {
    let (imax, &(_, peak)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let half = peak / 2.0;
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let left = (1..=imax).rev().find(|&i| points[i - 1].1 < half).map(|i| cross(points[i - 1], points[i]))?;
    let right = (imax..points.len() - 1)
        .find(|&i| points[i + 1].1 < half)
        .map(|i| cross(points[i], points[i + 1]))?;
    Some((C_NM_GHZ / left - C_NM_GHZ / right).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optical_depth_definition() {
        assert_eq!(optical_depth(1.0, 1.0).unwrap(), 0.0);
        assert!((optical_depth(1.0, (-2f64).exp()).unwrap() - 2.0).abs() < 1e-15);
        assert!(optical_depth(1.0, 1.1).is_err());
    }

    #[test]
    fn sweep_recovers_180ghz() {
        let line = AbsorptionLine::<f64>::erbium_default();
        let sweep = line.sweep(10e-6, 1529.0, 1535.0, 3001);
        let od: Vec<(f64, f64)> = sweep
            .iter()
            .map(|&(w, p)| (w, optical_depth(10e-6, p).unwrap()))
            .collect();
        let fwhm = measured_fwhm_ghz(&od).unwrap();
        assert!((fwhm - 180.0).abs() < 1.0, "{fwhm}");
    }
}
