//! Experiment description read from TOML.

use std::f64::consts::PI;
use std::path::PathBuf;

use ghostdiff::analysis::{Baseline, GratingSpec};
use ghostdiff::optics::{BeamSplitterSpec, DetectorSpec, OpticalConfig, TransmissionObject};
use ghostdiff::specklefield::{EnvelopeShape, SpeckleSpec};
use ghostdiff::{Complex, GridAxis};
use serde::{Deserialize, Serialize};

/// Invalid configuration, naming the offending field.
#[derive(Debug, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<ghostdiff::Error> for ConfigError {
    fn from(e: ghostdiff::Error) -> Self {
        match e {
            ghostdiff::Error::InvalidParameter { field, reason } => Self::new(field, reason),
            other => Self::new("config", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub object: ObjectConfig,
    #[serde(default)]
    pub optics: OpticsConfig,
    #[serde(default)]
    pub beam_splitter: BeamSplitterConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    /// Object-plane sample spacing (um); alternative to `pixels_per_period`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_um: Option<f64>,
    /// Samples per grating period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels_per_period: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Coherence lengths to sweep (um).
    pub delta_x_n_um: Vec<f64>,
    /// Source aperture (um); defaults to `lambda F / 80 um`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_um: Option<f64>,
    #[serde(default)]
    pub envelope: EnvelopeShape,
    pub master_seed: u64,
    pub n_frames: u64,
    /// Full-size frame count, used with `--full`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_frames: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectConfig {
    Identity,
    SquarePhaseGrating {
        period_um: f64,
        groove_width_um: f64,
        /// Phase step in units of pi.
        phase_shift_pi: f64,
    },
    DoubleSlit {
        width_um: f64,
        separation_um: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsConfig {
    pub wavelength_um: f64,
    pub focal_length_mm: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            wavelength_um: 0.532,
            focal_length_mm: 50.0,
        }
    }
}

/// Complex amplitudes as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSplitterConfig {
    pub r: [f64; 2],
    pub t: [f64; 2],
}

impl Default for BeamSplitterConfig {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            r: [0.0, h],
            t: [h, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Detector pixel (um in the focal plane); defaults to the field pitch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixel_pitch_um: Option<f64>,
    #[serde(default)]
    pub shot_noise: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_noise_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    MeanIntensity,
    FixedPixel {
        /// Test-arm pixel positions (um in the focal plane).
        x1_um: Vec<f64>,
        #[serde(default)]
        normalize: bool,
    },
    SpatialAverage {
        max_shift_um: f64,
    },
    Autocorrelation {
        x1_um: Vec<f64>,
    },
    Visibility,
    GammaOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Highest diffraction order in predictions and peak tables.
    pub n_orders: u32,
    /// Integration window (um); defaults to half the first-order spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_window_um: Option<f64>,
    #[serde(default)]
    pub baseline: Baseline,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_orders: 2,
            peak_window_um: None,
            baseline: Baseline::FlankMedian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("ghostdiff-out"),
            formats: vec![OutputFormat::Tsv, OutputFormat::Json],
        }
    }
}

/// Validated bench built from a config for one coherence length.
#[derive(Debug, Clone)]
pub struct Bench {
    pub axis: GridAxis<f64>,
    pub speckle: SpeckleSpec<f64>,
    pub object: TransmissionObject<f64>,
    pub grating: Option<GratingSpec<f64>>,
    pub optics: OpticalConfig<f64>,
    pub splitter: BeamSplitterSpec<f64>,
    pub detector: DetectorSpec<f64>,
    /// Detector-plane axis after binning.
    pub detector_axis: GridAxis<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|s| text.get(s))
                .map(|s| s.trim().to_string())
                .unwrap_or_else(|| "config".into());
            ConfigError::new(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grating(&self) -> Result<Option<GratingSpec<f64>>, ConfigError> {
        match &self.object {
            ObjectConfig::SquarePhaseGrating {
                period_um,
                groove_width_um,
                phase_shift_pi,
            } => GratingSpec::new(*period_um, *groove_width_um, phase_shift_pi * PI)
                .map(Some)
                .map_err(|e| prefixed("object", e)),
            _ => Ok(None),
        }
    }

    pub fn pitch(&self) -> Result<f64, ConfigError> {
        match (self.grid.pitch_um, self.grid.pixels_per_period) {
            (Some(p), None) => {
                if p > 0.0 && p.is_finite() {
                    Ok(p)
                } else {
                    Err(ConfigError::new("grid.pitch_um", "must be positive"))
                }
            }
            (None, Some(k)) => {
                let g = self.grating()?.ok_or_else(|| {
                    ConfigError::new("grid.pixels_per_period", "needs a grating object")
                })?;
                if k == 0 {
                    return Err(ConfigError::new("grid.pixels_per_period", "must be positive"));
                }
                Ok(g.period_d / k as f64)
            }
            _ => Err(ConfigError::new(
                "grid",
                "give exactly one of pitch_um and pixels_per_period",
            )),
        }
    }

    pub fn aperture(&self) -> f64 {
        self.source
            .aperture_um
            .unwrap_or(self.optics.wavelength_um * self.optics.focal_length_mm * 1000.0 / 80.0)
    }

    /// Bench for coherence length `delta`.
    pub fn bench(&self, delta: f64) -> Result<Bench, ConfigError> {
        let pitch = self.pitch()?;
        let axis = GridAxis::centered(self.grid.n_points, pitch).map_err(|e| prefixed("grid", e))?;
        let speckle = SpeckleSpec::new(delta, self.aperture(), axis).with_envelope(self.source.envelope);
        speckle.validate().map_err(|e| prefixed("source", e))?;
        let grating = self.grating()?;
        let object = match &self.object {
            ObjectConfig::Identity => TransmissionObject::Identity,
            ObjectConfig::SquarePhaseGrating { .. } => grating
                .as_ref()
                .expect("grating present")
                .to_object()
                .map_err(|e| prefixed("object", e))?,
            ObjectConfig::DoubleSlit {
                width_um,
                separation_um,
            } => TransmissionObject::double_slit(axis, *width_um, *separation_um)
                .map_err(|e| prefixed("object", e))?,
        };
        let optics = OpticalConfig::new(self.optics.wavelength_um, self.optics.focal_length_mm)
            .map_err(|e| prefixed("optics", e))?;
        let c = |v: [f64; 2]| Complex::new(v[0], v[1]);
        let splitter = BeamSplitterSpec::new(c(self.beam_splitter.r), c(self.beam_splitter.t))
            .map_err(|e| prefixed("beam_splitter", e))?;
        let mut detector = DetectorSpec {
            pixel_pitch: self.detector.pixel_pitch_um,
            add_shot_noise: self.detector.shot_noise,
            ..DetectorSpec::default()
        };
        if let Some(s) = self.detector.shot_noise_scale {
            if !(s > 0.0) {
                return Err(ConfigError::new("detector.shot_noise_scale", "must be positive"));
            }
            detector.shot_noise_scale = s;
        }
        let far = optics.far_field_axis(&axis).map_err(|e| prefixed("optics", e))?;
        let detector_axis = detector.pixel_axis(&far).map_err(|e| prefixed("detector", e))?;
        Ok(Bench {
            axis,
            speckle,
            object,
            grating,
            optics,
            splitter,
            detector,
            detector_axis,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.source.delta_x_n_um.is_empty() {
            return Err(ConfigError::new("source.delta_x_n_um", "no coherence length given"));
        }
        if self.source.n_frames < 2 {
            return Err(ConfigError::new("source.n_frames", "must be at least 2"));
        }
        if self.estimators.is_empty() {
            return Err(ConfigError::new("estimators", "no estimator requested"));
        }
        if self.analysis.n_orders < 2 {
            return Err(ConfigError::new("analysis.n_orders", "must be at least 2"));
        }
        if let Some(w) = self.analysis.peak_window_um {
            if !(w > 0.0) {
                return Err(ConfigError::new("analysis.peak_window_um", "must be positive"));
            }
        }
        if self.outputs.formats.is_empty() {
            return Err(ConfigError::new("outputs.formats", "no output format"));
        }
        for &delta in &self.source.delta_x_n_um {
            let bench = self.bench(delta)?;
            let ax = bench.detector_axis;
            let on_axis = |field: &str, x: f64| -> Result<(), ConfigError> {
                if ax.index_of(x).is_none() {
                    Err(ConfigError::new(
                        field,
                        format!(
                            "{x} um is off the detector ({} .. {} um)",
                            ax.coordinate(0),
                            ax.coordinate(ax.n_points() - 1)
                        ),
                    ))
                } else {
                    Ok(())
                }
            };
            for (k, est) in self.estimators.iter().enumerate() {
                match est {
                    EstimatorConfig::FixedPixel { x1_um, .. } | EstimatorConfig::Autocorrelation { x1_um } => {
                        if x1_um.is_empty() {
                            return Err(ConfigError::new(format!("estimators[{k}].x1_um"), "empty"));
                        }
                        for &x in x1_um {
                            on_axis(&format!("estimators[{k}].x1_um"), x)?;
                        }
                    }
                    EstimatorConfig::SpatialAverage { max_shift_um } => {
                        let r = (max_shift_um / ax.pitch()).round();
                        if !(r >= 1.0) || 2.0 * r >= ax.n_points() as f64 {
                            return Err(ConfigError::new(
                                format!("estimators[{k}].max_shift_um"),
                                "must span at least one pixel and less than half the detector",
                            ));
                        }
                    }
                    EstimatorConfig::GammaOracle => {
                        if self.grid.n_points > ghostdiff::analysis::MAX_ORACLE_POINTS {
                            return Err(ConfigError::new(
                                format!("estimators[{k}]"),
                                format!(
                                    "gamma_oracle needs n_points <= {}",
                                    ghostdiff::analysis::MAX_ORACLE_POINTS
                                ),
                            ));
                        }
                        if self.detector.pixel_pitch_um.is_some() || self.detector.shot_noise {
                            return Err(ConfigError::new(
                                format!("estimators[{k}]"),
                                "gamma_oracle needs an unbinned, noiseless detector",
                            ));
                        }
                    }
                    EstimatorConfig::MeanIntensity | EstimatorConfig::Visibility => {}
                }
            }
        }
        Ok(())
    }
}

fn prefixed(section: &str, e: ghostdiff::Error) -> ConfigError {
    match e {
        ghostdiff::Error::InvalidParameter { field, reason } => {
            ConfigError::new(format!("{section}.{field}"), reason)
        }
        other => ConfigError::new(section, other.to_string()),
    }
}
