//! Columnar text format for comb profiles.
//!
//! ```text
//! spacing_mhz=5
//! tooth_fwhm_mhz=2.5
//! peak_od=1.2
//! background_od=0.1
//! shape=gaussian
//! bandwidth_ghz=4
//! grid_resolution_mhz=0.25
//! detuning_MHz,od
//! -8192,0
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so a write/read cycle is lossless.

use std::fmt::Write as _;

use super::profile::{CombParams, CombProfile, ToothShape};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const COLUMNS: &str = "detuning_MHz,od";

pub fn write_profile<T: Scalar>(profile: &CombProfile<T>) -> String {
    let p = profile.params();
    let mut out = String::with_capacity(profile.len() * 16 + 200);
    let _ = writeln!(out, "spacing_mhz={}", p.spacing);
    let _ = writeln!(out, "tooth_fwhm_mhz={}", p.tooth_fwhm);
    let _ = writeln!(out, "peak_od={}", p.peak_od);
    let _ = writeln!(out, "background_od={}", p.background_od);
    let _ = writeln!(out, "shape={}", p.shape.name());
    let _ = writeln!(out, "bandwidth_ghz={}", p.bandwidth_ghz);
    let _ = writeln!(out, "grid_resolution_mhz={}", p.grid_resolution);
    out.push_str(COLUMNS);
    out.push('\n');
    for (d, od) in profile.detuning().iter().zip(profile.od()) {
        let _ = writeln!(out, "{d},{od}");
    }
    out
}

fn num<T: Scalar>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| Error::Format(format!("cannot parse {what} value `{s}`")))
}

pub fn read_profile<T: Scalar>(text: &str) -> Result<CombProfile<T>> {
    let mut lines = text.lines().enumerate();
    let mut header = std::collections::HashMap::new();
    for (_, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == COLUMNS {
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("expected key=value header, got `{line}`")))?;
        header.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| {
        header
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing header `{k}`")))
    };
    let shape = ToothShape::parse(get("shape")?)
        .ok_or_else(|| Error::Format(format!("unknown shape `{}`", header["shape"])))?;
    let params = CombParams {
        spacing: num(get("spacing_mhz")?, "spacing_mhz")?,
        tooth_fwhm: num(get("tooth_fwhm_mhz")?, "tooth_fwhm_mhz")?,
        peak_od: num(get("peak_od")?, "peak_od")?,
        background_od: num(get("background_od")?, "background_od")?,
        shape,
        bandwidth_ghz: num(get("bandwidth_ghz")?, "bandwidth_ghz")?,
        grid_resolution: num(get("grid_resolution_mhz")?, "grid_resolution_mhz")?,
    };
    let mut detuning = Vec::new();
    let mut od = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected two columns", i + 1)))?;
        detuning.push(num(a, "detuning")?);
        od.push(num(b, "od")?);
    }
    CombProfile::from_samples(params, detuning, od)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CombProfile<f64> {
        CombProfile::build(CombParams {
            spacing: 5.0,
            tooth_fwhm: 1.7,
            peak_od: 1.2345678901234567,
            background_od: 0.1,
            bandwidth_ghz: 0.05,
            shape: ToothShape::Gaussian,
            grid_resolution: 0.15,
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let p = small();
        let text = write_profile(&p);
        let q: CombProfile<f64> = read_profile(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(text, write_profile(&q));
    }

    #[test]
    fn round_trip_f32() {
        let p = CombProfile::<f32>::build(CombParams {
            spacing: 5.0,
            tooth_fwhm: 2.5,
            peak_od: 0.3,
            background_od: 0.0,
            bandwidth_ghz: 0.05,
            shape: ToothShape::Square,
            grid_resolution: 0.25,
        })
        .unwrap();
        let q: CombProfile<f32> = read_profile(&write_profile(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn reports_missing_header() {
        let text = write_profile(&small()).replace("peak_od=", "peakod=");
        let err = read_profile::<f64>(&text).unwrap_err().to_string();
        assert!(err.contains("peak_od"), "{err}");
    }
}
