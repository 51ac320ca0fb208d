use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Shape of an individual absorption tooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ToothShape {
    Square,
    #[default]
    Gaussian,
}

impl ToothShape {
    pub fn name(self) -> &'static str {
        match self {
            ToothShape::Square => "square",
            ToothShape::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "square" => Some(ToothShape::Square),
            "gaussian" => Some(ToothShape::Gaussian),
            _ => None,
        }
    }

    /// Normalized tooth height at offset `dist` (MHz) from the tooth center, in `[0, 1]`.
    pub fn height<T: Scalar>(self, dist: T, fwhm: T) -> T {
        let half = fwhm / T::of(2.0);
        match self {
            ToothShape::Square => {
                let a = dist.abs();
                // half weight exactly on the edge keeps the sampled duty cycle at 1/F
                let eps = fwhm * T::of(1e-9);
                if (a - half).abs() <= eps {
                    T::of(0.5)
                } else if a < half {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ToothShape::Gaussian => {
                let x = dist / fwhm;
                (-T::of(4.0 * std::f64::consts::LN_2) * x * x).exp()
            }
        }
    }
}

/// Construction parameters for an AFC profile. Frequencies in MHz except
/// `bandwidth_ghz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombParams<T> {
    pub spacing: T,
    pub tooth_fwhm: T,
    pub peak_od: T,
    pub background_od: T,
    pub bandwidth_ghz: T,
    pub shape: ToothShape,
    pub grid_resolution: T,
}

impl CombParams<f64> {
    /// 4 GHz comb with 5 MHz teeth of 2.5 MHz width, resolved at a tenth of the tooth width.
    pub fn paper_default() -> Self {
        CombParams {
            spacing: 5.0,
            tooth_fwhm: 2.5,
            peak_od: super::calibrate::DEFAULT_PEAK_OD,
            background_od: super::calibrate::DEFAULT_BACKGROUND_OD,
            bandwidth_ghz: 4.0,
            shape: ToothShape::Gaussian,
            grid_resolution: 0.25,
        }
    }
}

/// Optical depth versus detuning for a prepared atomic frequency comb.
///
/// The grid is uniform, centered on zero detuning and has a power-of-two
/// length covering at least twice the comb bandwidth. Outside the comb band
/// the optical depth is zero; inside it is `background_od` plus the nearest
/// tooth.
#[derive(Debug, Clone, PartialEq)]
pub struct CombProfile<T> {
    pub(crate) detuning: Vec<T>,
    pub(crate) od: Vec<T>,
    pub(crate) params: CombParams<T>,
}

impl<T: Scalar> CombParams<T> {
    pub fn validate(&self) -> Result<()> {
        let CombParams {
            spacing,
            tooth_fwhm,
            peak_od,
            background_od,
            bandwidth_ghz,
            grid_resolution,
            ..
        } = *self;
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(tooth_fwhm) {
            return Err(invalid("tooth_fwhm", "must be positive"));
        }
        if !positive(spacing) || spacing <= tooth_fwhm {
            return Err(invalid(
                "spacing",
                format!("finesse must exceed 1 (spacing {spacing} <= tooth width {tooth_fwhm})"),
            ));
        }
        if !(peak_od >= T::zero() && background_od >= T::zero()) {
            return Err(invalid("peak_od", "optical depths must be non-negative"));
        }
        let bandwidth = bandwidth_ghz * T::of(1000.0);
        if !(bandwidth >= T::of(10.0) * spacing) {
            return Err(invalid("bandwidth_ghz", "comb must hold at least 10 teeth"));
        }
        if !positive(grid_resolution) || grid_resolution > tooth_fwhm / T::of(10.0) {
            return Err(invalid(
                "grid_resolution",
                format!("{grid_resolution} MHz does not resolve teeth of {tooth_fwhm} MHz (need <= fwhm/10)"),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> CombProfile<T> {
    pub fn build(params: CombParams<T>) -> Result<Self> {
        params.validate()?;
        let bandwidth = params.bandwidth_ghz * T::of(1000.0);
        let grid_resolution = params.grid_resolution;
        let min_points = (T::of(2.0) * bandwidth / grid_resolution).ceil().to_f64_lossy() as usize;
        let n = min_points.max(1024).next_power_of_two();
        let half = n / 2;
        let detuning: Vec<T> = (0..n)
            .map(|j| (T::of_usize(j) - T::of_usize(half)) * grid_resolution)
            .collect();

        let profile = CombProfile {
            od: detuning.iter().map(|&d| od_at(&params, d)).collect(),
            detuning,
            params,
        };
        Ok(profile)
    }

    /// Builds from explicit samples. Used for persisted profiles; the header
    /// parameters are trusted and the samples are taken as given.
    pub fn from_samples(params: CombParams<T>, detuning: Vec<T>, od: Vec<T>) -> Result<Self> {
        if detuning.len() != od.len() || detuning.len() < 2 {
            return Err(invalid("od", "detuning and od columns must have equal length >= 2"));
        }
        if od.iter().any(|&v| !(v >= T::zero())) {
            return Err(invalid("od", "optical depth must be non-negative"));
        }
        if !detuning.len().is_power_of_two() {
            return Err(invalid("detuning", "grid length must be a power of two"));
        }
        Ok(CombProfile {
            detuning,
            od,
            params,
        })
    }

    pub fn params(&self) -> &CombParams<T> {
        &self.params
    }

    pub fn detuning(&self) -> &[T] {
        &self.detuning
    }

    pub fn od(&self) -> &[T] {
        &self.od
    }

    pub fn len(&self) -> usize {
        self.od.len()
    }

    pub fn is_empty(&self) -> bool {
        self.od.is_empty()
    }

    pub fn resolution(&self) -> T {
        self.detuning[1] - self.detuning[0]
    }

    pub fn finesse(&self) -> T {
        self.params.spacing / self.params.tooth_fwhm
    }

    pub fn n_teeth(&self) -> usize {
        n_teeth(&self.params)
    }

    /// Tooth center frequencies in MHz.
    pub fn tooth_centers(&self) -> Vec<T> {
        let (lo, hi) = tooth_index_range(&self.params);
        (lo..=hi)
            .map(|k| T::of(k as f64) * self.params.spacing)
            .collect()
    }

    /// Inclusive comb band edges in MHz.
    pub fn band_edges(&self) -> (T, T) {
        band_edges(&self.params)
    }

    /// Storage time 1/Δ in ns.
    pub fn storage_time_ns(&self) -> T {
        T::of(1000.0) / self.params.spacing
    }

    /// Time span covered by the grid's reciprocal (ns).
    pub fn time_span_ns(&self) -> T {
        T::of(1000.0) / self.resolution()
    }

    /// Sum of another profile's optical depth onto this one. Grids must match.
    pub fn superpose(&self, other: &CombProfile<T>) -> Result<CombProfile<T>> {
        if self.detuning != other.detuning {
            return Err(invalid("detuning", "profiles live on different grids"));
        }
        Ok(CombProfile {
            detuning: self.detuning.clone(),
            od: self.od.iter().zip(&other.od).map(|(&a, &b)| a + b).collect(),
            params: self.params,
        })
    }
}

pub(crate) fn n_teeth<T: Scalar>(p: &CombParams<T>) -> usize {
    (p.bandwidth_ghz * T::of(1000.0) / p.spacing + T::of(1e-9))
        .floor()
        .to_f64_lossy() as usize
}

fn tooth_index_range<T: Scalar>(p: &CombParams<T>) -> (i64, i64) {
    let n = n_teeth(p) as i64;
    let lo = -(n / 2);
    (lo, lo + n - 1)
}

fn band_edges<T: Scalar>(p: &CombParams<T>) -> (T, T) {
    let (lo, hi) = tooth_index_range(p);
    let half = p.spacing / T::of(2.0);
    (
        T::of(lo as f64) * p.spacing - half,
        T::of(hi as f64) * p.spacing + half,
    )
}

fn od_at<T: Scalar>(p: &CombParams<T>, detuning: T) -> T {
    let (lo_edge, hi_edge) = band_edges(p);
    if detuning < lo_edge || detuning >= hi_edge {
        return T::zero();
    }
    let (lo, hi) = tooth_index_range(p);
    let k = (detuning / p.spacing)
        .round()
        .to_f64_lossy()
        .clamp(lo as f64, hi as f64);
    let dist = detuning - T::of(k) * p.spacing;
    p.background_od + p.peak_od * p.shape.height(dist, p.tooth_fwhm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(spacing: f64, fwhm: f64, d: f64, d0: f64) -> CombParams<f64> {
        CombParams {
            spacing,
            tooth_fwhm: fwhm,
            peak_od: d,
            background_od: d0,
            bandwidth_ghz: 4.0,
            shape: ToothShape::Gaussian,
            grid_resolution: 0.25,
        }
    }

    #[test]
    fn paper_comb_has_800_teeth() {
        let p = CombProfile::build(params(5.0, 2.5, 1.0, 0.1)).unwrap();
        assert_eq!(p.n_teeth(), 800);
        assert_eq!(p.finesse(), 2.0);
        assert!(p.len().is_power_of_two());
        // span >= 8 GHz
        assert!(p.resolution() * p.len() as f64 >= 8000.0);
    }

    #[test]
    fn six_mhz_teeth_sit_on_multiples() {
        let mut pp = params(6.0, 2.5, 1.0, 0.0);
        pp.grid_resolution = 0.25;
        let p = CombProfile::build(pp).unwrap();
        assert_eq!(p.n_teeth(), 666);
        for c in p.tooth_centers() {
            let k = c / 6.0;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_depth_is_transparent() {
        let p = CombProfile::build(params(5.0, 2.5, 0.0, 0.0)).unwrap();
        assert!(p.od().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn od_bounded_and_periodic() {
        let p = CombProfile::build(params(5.0, 2.5, 1.3, 0.2)).unwrap();
        assert!(p.od().iter().all(|&v| (0.0..=1.5 + 1e-12).contains(&v)));
        // 20 grid points per period inside the band
        let mid = p.len() / 2;
        for j in mid - 4000..mid + 4000 {
            assert!((p.od()[j] - p.od()[j + 20]).abs() < 1e-12);
        }
        assert!((p.od()[mid] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_low_finesse_and_coarse_grid() {
        assert!(CombProfile::build(params(2.5, 2.5, 1.0, 0.0)).is_err());
        let mut pp = params(5.0, 2.5, 1.0, 0.0);
        pp.grid_resolution = 0.3;
        assert!(CombProfile::build(pp).is_err());
        let mut pp = params(5.0, 2.5, 1.0, 0.0);
        pp.bandwidth_ghz = 0.04;
        assert!(CombProfile::build(pp).is_err());
    }

    #[test]
    fn square_teeth_duty_cycle_is_one_over_finesse() {
        let mut pp = params(5.0, 2.5, 1.0, 0.0);
        pp.shape = ToothShape::Square;
        let p = CombProfile::build(pp).unwrap();
        let mid = p.len() / 2;
        let duty: f64 = p.od()[mid..mid + 20].iter().sum::<f64>() / 20.0;
        assert!((duty - 0.5).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let p = CombProfile::<f32>::build(CombParams {
            spacing: 5.0f32,
            tooth_fwhm: 2.5,
            peak_od: 1.0,
            background_od: 0.0,
            bandwidth_ghz: 4.0,
            shape: ToothShape::Gaussian,
            grid_resolution: 0.25,
        })
        .unwrap();
        assert_eq!(p.n_teeth(), 800);
    }
}
