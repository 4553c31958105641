//! Analytic references and pattern diagnostics: grating spectra, peak
//! integration, speckle-size estimation, source regimes and the
//! direct-summation correlation oracles.

mod grating;
mod oracle;
mod peaks;
mod regime;

pub use grating::{
    grating_coefficient, grating_coefficient_quadrature, grating_coefficients, grating_efficiency,
    peak_positions, phase_from_groove, AngleMapping, DiffractionPrediction, GratingSpec,
};
pub use oracle::{oracle_correlation, oracle_hbt, OracleMap, MAX_ORACLE_POINTS};
pub use peaks::{fwhm, integrate_peaks, integrate_peaks_at, Baseline};
pub use regime::{classify_speckle_regime, RegimeReport, SourceGeometry, SpeckleRegime};
