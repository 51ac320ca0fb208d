use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Spectral shape assumed for the heralded photon when computing how much of
/// it falls inside the comb band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PhotonSpectrum {
    /// Rectangular passband of the given width (fiber Bragg grating filter).
    #[default]
    FlatTop,
    Gaussian,
    Lorentzian,
}

/// How the internal efficiency is backed out of a measured system efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InternalConvention {
    /// `η_i = η_s / (η_t · overlap)`
    FilterCorrected,
    /// `η_i = factor · η_s / η_t`, with the published factor 1.3.
    FixedFactor(f64),
}

pub const PUBLISHED_FILTER_FACTOR: f64 = 1.3;

impl InternalConvention {
    pub fn internal<T: Scalar>(self, system: T, transmission: T, overlap: T) -> T {
        match self {
            InternalConvention::FilterCorrected => system / (transmission * overlap),
            InternalConvention::FixedFactor(k) => T::of(k) * system / transmission,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBreakdown<T> {
    pub internal: T,
    pub transmission: T,
    pub filter_overlap: T,
    pub system: T,
    pub storage_time_ns: T,
}

impl<T: Scalar> EfficiencyBreakdown<T> {
    pub fn new(internal: T, transmission: T, filter_overlap: T, storage_time_ns: T) -> Result<Self> {
        for (name, v) in [
            ("internal", internal),
            ("transmission", transmission),
            ("filter_overlap", filter_overlap),
        ] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(invalid(name, format!("{v} outside [0, 1]")));
            }
        }
        Ok(EfficiencyBreakdown {
            internal,
            transmission,
            filter_overlap,
            system: transmission * filter_overlap * internal,
            storage_time_ns,
        })
    }

    /// Internal efficiency re-derived from the system efficiency under `convention`.
    pub fn internal_under(&self, convention: InternalConvention) -> T {
        convention.internal(self.system, self.transmission, self.filter_overlap)
    }
}

/// Fraction of the photon spectrum (FWHM `photon_bw_ghz`) inside a centered
/// band of width `afc_bw_ghz`.
pub fn filter_overlap<T: Scalar>(spectrum: PhotonSpectrum, photon_bw_ghz: T, afc_bw_ghz: T) -> Result<T> {
    if !(photon_bw_ghz > T::zero()) || !(afc_bw_ghz > T::zero()) {
        return Err(invalid("bandwidth", "bandwidths must be positive"));
    }
    // spectra are evaluated on ±4 photon linewidths
    if afc_bw_ghz > T::of(8.0) * photon_bw_ghz {
        return Err(invalid(
            "afc_bw",
            format!("{afc_bw_ghz} GHz exceeds the photon grid coverage of {} GHz", T::of(8.0) * photon_bw_ghz),
        ));
    }
    let ratio = (afc_bw_ghz / photon_bw_ghz).to_f64_lossy();
    let v = match spectrum {
        PhotonSpectrum::FlatTop => ratio.min(1.0),
        PhotonSpectrum::Gaussian => erf(ratio * (2f64.ln()).sqrt()),
        PhotonSpectrum::Lorentzian => 2.0 / std::f64::consts::PI * ratio.atan(),
    };
    Ok(T::of(v))
}

pub fn efficiency_breakdown<T: Scalar>(
    echo_energy_fraction: T,
    transmission: T,
    photon_bw_ghz: T,
    afc_bw_ghz: T,
    spectrum: PhotonSpectrum,
) -> Result<EfficiencyBreakdown<T>> {
    if !(transmission > T::zero() && transmission <= T::one()) {
        return Err(invalid("transmission", "must lie in (0, 1]"));
    }
    let overlap = filter_overlap(spectrum, photon_bw_ghz, afc_bw_ghz)?;
    EfficiencyBreakdown::new(echo_energy_fraction, transmission, overlap, T::nan())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_top_overlap_is_bandwidth_ratio() {
        let o: f64 = filter_overlap(PhotonSpectrum::FlatTop, 5.2, 4.0).unwrap();
        assert!((o - 0.77).abs() < 0.02);
        let g: f64 = filter_overlap(PhotonSpectrum::Gaussian, 5.2, 4.0).unwrap();
        assert!((g - 0.635).abs() < 0.01);
    }

    #[test]
    fn system_efficiency_product() {
        let b = efficiency_breakdown(0.0283f64, 0.26, 5.2, 4.0, PhotonSpectrum::FlatTop).unwrap();
        assert!((b.system * 100.0 - 0.59).abs() < 0.05, "{}", b.system);
        let id = efficiency_breakdown(0.0283, 1.0, 4.0, 4.0, PhotonSpectrum::FlatTop).unwrap();
        assert_eq!(id.system, id.internal);
    }

    #[test]
    fn conventions() {
        let b = EfficiencyBreakdown::new(0.0295f64, 0.26, 0.77, 200.0).unwrap();
        let a = b.internal_under(InternalConvention::FilterCorrected);
        assert!((a - 0.0295).abs() < 1e-12);
        let f = b.internal_under(InternalConvention::FixedFactor(PUBLISHED_FILTER_FACTOR));
        assert!((f - 1.3 * b.system / 0.26).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(EfficiencyBreakdown::new(1.2, 0.5, 0.5, 1.0).is_err());
        assert!(filter_overlap(PhotonSpectrum::Gaussian, 1.0, 9.0).is_err());
    }
}
