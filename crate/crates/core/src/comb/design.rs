use serde::{Deserialize, Serialize};

use super::calibrate::comb_for_storage_time;
use super::profile::CombParams;
use super::sidehole::{misalignment, ALIGNMENT_THRESHOLD};
use crate::error::{invalid, Result};
use crate::spectroscopy::SideHoleModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideHoleReport {
    pub species: String,
    pub detuning_mhz: f64,
    /// Detuning in units of the tooth spacing.
    pub detuning_spacings: f64,
    pub misalignment: f64,
    /// Lands on transparency regions rather than teeth.
    pub aligned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfcDesign {
    pub storage_time_ns: f64,
    pub bandwidth_ghz: f64,
    pub spacing_mhz: f64,
    pub tooth_fwhm_mhz: f64,
    pub n_teeth: u64,
    pub time_bandwidth_product: f64,
    pub field_gauss: f64,
    pub side_holes: Vec<SideHoleReport>,
}

/// Comb layout for storage time `t_ns` over `bandwidth_ghz`, with the side-hole
/// positions of `holes` evaluated at `field_gauss`. Finesse and tooth shape come from `base`.
pub fn design_afc(
    base: &CombParams<f64>,
    holes: &SideHoleModel<f64>,
    t_ns: f64,
    bandwidth_ghz: f64,
    field_gauss: f64,
) -> Result<AfcDesign> {
    if !(bandwidth_ghz > 0.0) || !bandwidth_ghz.is_finite() {
        return Err(invalid("bandwidth", "must be positive"));
    }
    if !(field_gauss >= 0.0) || !field_gauss.is_finite() {
        return Err(invalid("field", "must be non-negative"));
    }
    let comb = comb_for_storage_time(
        &CombParams {
            bandwidth_ghz,
            ..*base
        },
        t_ns,
    )?;
    let at_field = SideHoleModel {
        field_gauss,
        ..*holes
    };
    let side_holes = ["93Nb", "7Li"]
        .into_iter()
        .zip(at_field.side_holes())
        .map(|(species, h)| {
            let m = misalignment(&comb, h);
            SideHoleReport {
                species: species.to_string(),
                detuning_mhz: h.detuning_mhz,
                detuning_spacings: h.detuning_mhz / comb.spacing,
                misalignment: m,
                aligned: m < ALIGNMENT_THRESHOLD,
            }
        })
        .collect();
    Ok(AfcDesign {
        storage_time_ns: t_ns,
        bandwidth_ghz,
        spacing_mhz: comb.spacing,
        tooth_fwhm_mhz: comb.tooth_fwhm,
        n_teeth: (bandwidth_ghz * 1e3 / comb.spacing).round() as u64,
        time_bandwidth_product: t_ns * bandwidth_ghz,
        field_gauss,
        side_holes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_200ns_4ghz() {
        let d = design_afc(&CombParams::paper_default(), &SideHoleModel::measured(), 200.0, 4.0, 13000.0).unwrap();
        assert!((d.spacing_mhz - 5.0).abs() < 1e-12);
        assert_eq!(d.n_teeth, 800);
        assert!((d.time_bandwidth_product - 800.0).abs() < 1e-9);
        assert!(!d.side_holes[0].aligned);
        assert!(d.side_holes[1].aligned);
        assert!((d.side_holes[1].detuning_spacings - 4.0).abs() < 0.2);
    }

    #[test]
    fn zero_storage_time_rejected() {
        assert!(design_afc(&CombParams::paper_default(), &SideHoleModel::measured(), 0.0, 4.0, 13000.0).is_err());
    }
}
