use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Source-to-object geometry of a scattering speckle source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceGeometry<S> {
    /// Source-object distance (mm).
    pub z: S,
    /// Illuminated source diameter (mm).
    pub d_ph: S,
    /// Effective scatterer diameter (um).
    pub rho_eff: S,
    /// Wavelength (um).
    pub lambda: S,
}

impl<S: Scalar> SourceGeometry<S> {
    pub fn new(z: S, d_ph: S, rho_eff: S, lambda: S) -> Result<Self> {
        for (name, v) in [("z", z), ("d_ph", d_ph), ("rho_eff", rho_eff), ("lambda", lambda)] {
            if !(v > S::zero() && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(Self {
            z,
            d_ph,
            rho_eff,
            lambda,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeckleRegime {
    FarField,
    NearField,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<S> {
    pub regime: SpeckleRegime,
    /// Expected speckle size (um); `None` in the crossover.
    pub predicted_speckle_size: Option<S>,
    /// `rho^2 / lambda` (mm).
    pub near_field_onset: S,
    /// `D rho / lambda` (mm).
    pub crossover_distance: S,
}

/// Far field when `z >= 10 D rho / lambda`, near field when
/// `10 rho^2 / lambda <= z <= 0.1 D rho / lambda`, crossover otherwise.
pub fn classify_speckle_regime<S: Scalar>(g: &SourceGeometry<S>) -> RegimeReport<S> {
    let um_per_mm = S::of(1000.0);
    let near_field_onset = g.rho_eff * g.rho_eff / g.lambda / um_per_mm;
    let crossover_distance = g.d_ph * g.rho_eff / g.lambda;
    let ten = S::of(10.0);
    let (regime, size) = if g.z >= ten * crossover_distance {
        (SpeckleRegime::FarField, Some(g.z * g.lambda / g.d_ph))
    } else if g.z >= ten * near_field_onset && g.z <= crossover_distance / ten {
        (SpeckleRegime::NearField, Some(g.rho_eff))
    } else {
        (SpeckleRegime::Indeterminate, None)
    };
    RegimeReport {
        regime,
        predicted_speckle_size: size,
        near_field_onset,
        crossover_distance,
    }
}
