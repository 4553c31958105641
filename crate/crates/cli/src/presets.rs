//! Built-in experiment configurations, one per reproduced figure.

use ghostdiff::analysis::Baseline;

use crate::config::{
    AnalysisConfig, EstimatorConfig, ExperimentConfig, GridConfig, ObjectConfig, OutputConfig,
    SourceConfig,
};

/// Grating used throughout: 12.5 um period, 4.2 um grooves, 0.84 pi step.
const GRATING: ObjectConfig = ObjectConfig::SquarePhaseGrating {
    period_um: 12.5,
    groove_width_um: 4.2,
    phase_shift_pi: 0.84,
};

/// Peak window for ghost patterns (um): three detector pixels, about 2.5
/// far-field speckle sizes. Wider windows only add noise.
pub const GHOST_WINDOW_UM: f64 = 200.0;

/// Focal-plane position of the first order for the default lens (um).
pub const FIRST_ORDER_UM: f64 = 2128.0;

pub const NAMES: [&str; 7] = ["fig2", "fig3", "fig5", "fig6", "fig7", "fig8", "fig10"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => "mean test-arm intensity for four coherence lengths",
        "fig3" => "normalized ghost pattern, autocorrelation and visibility vs coherence length",
        "fig5" => "fixed-pixel ghost patterns for three reference positions",
        "fig6" => "spatial-average ghost pattern from 100 frames",
        "fig7" => "partially coherent source, 14 um coherence length",
        "fig8" => "partially coherent source, 33 um coherence length",
        "fig10" => "normalized ghost patterns at 14 and 33 um",
        _ => return None,
    })
}

/// Default frame count: the figure's own, capped at this many.
pub const DEFAULT_FRAME_CAP: u64 = 20_000;

fn base(name: &str, delta: Vec<f64>, full_frames: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        grid: GridConfig {
            n_points: 1024,
            pitch_um: None,
            pixels_per_period: Some(32),
        },
        source: SourceConfig {
            delta_x_n_um: delta,
            aperture_um: None,
            envelope: Default::default(),
            master_seed: 20_100_503,
            n_frames: full_frames.min(DEFAULT_FRAME_CAP),
            full_frames: Some(full_frames),
        },
        object: GRATING,
        optics: Default::default(),
        beam_splitter: Default::default(),
        detector: Default::default(),
        estimators: Vec::new(),
        analysis: AnalysisConfig {
            n_orders: 2,
            peak_window_um: None,
            baseline: Baseline::FlankMedian,
        },
        outputs: OutputConfig::default(),
    }
}

fn partially_coherent(name: &str, delta: f64) -> ExperimentConfig {
    let mut c = base(name, vec![delta], 30_000);
    c.estimators = vec![
        EstimatorConfig::MeanIntensity,
        EstimatorConfig::FixedPixel {
            x1_um: vec![0.0],
            normalize: false,
        },
        EstimatorConfig::Autocorrelation { x1_um: vec![0.0] },
        EstimatorConfig::Visibility,
    ];
    c
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let x1 = FIRST_ORDER_UM;
    let mut c = match name {
        "fig2" => {
            let mut c = base(name, vec![2.0, 6.0, 12.0, 48.0], 100_000);
            c.estimators = vec![EstimatorConfig::MeanIntensity];
            c
        }
        "fig3" => {
            let mut c = base(name, vec![2.0, 6.0, 12.0, 48.0], 100_000);
            c.estimators = vec![
                EstimatorConfig::FixedPixel {
                    x1_um: vec![0.0],
                    normalize: true,
                },
                EstimatorConfig::Autocorrelation { x1_um: vec![0.0] },
                EstimatorConfig::Visibility,
            ];
            c
        }
        "fig5" => {
            let mut c = base(name, vec![2.0], 18_000);
            c.estimators = vec![EstimatorConfig::FixedPixel {
                x1_um: vec![-x1, 0.0, x1],
                normalize: true,
            }];
            c
        }
        "fig6" => {
            let mut c = base(name, vec![2.0], 100);
            c.estimators = vec![EstimatorConfig::SpatialAverage {
                max_shift_um: 3.0 * x1,
            }];
            c
        }
        "fig7" => partially_coherent(name, 14.0),
        "fig8" => partially_coherent(name, 33.0),
        "fig10" => {
            let mut c = base(name, vec![14.0, 33.0], 30_000);
            c.estimators = vec![EstimatorConfig::FixedPixel {
                x1_um: vec![0.0],
                normalize: true,
            }];
            c
        }
        _ => return None,
    };
    if matches!(name, "fig3" | "fig5" | "fig6" | "fig10") {
        c.analysis.peak_window_um = Some(GHOST_WINDOW_UM);
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for name in NAMES {
            let c = preset(name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
            assert!(describe(name).is_some());
        }
        assert!(preset("fig4").is_none());
    }

    #[test]
    fn grid_gives_the_far_field_pitch() {
        let c = preset("fig2").unwrap();
        let b = c.bench(2.0).unwrap();
        assert_eq!(b.axis.pitch(), 0.390625);
        assert!((b.detector_axis.pitch() - 66.5).abs() < 1e-9);
        assert!(b.detector_axis.index_of(FIRST_ORDER_UM).is_some());
    }
}
