//! The frame loop and estimator finalization behind `ghostdiff run`.

use std::path::PathBuf;
use std::time::Instant;

use ghostdiff::analysis::{
    grating_coefficients, integrate_peaks_at, oracle_correlation, oracle_hbt,
    DiffractionPrediction,
};
use ghostdiff::correlator::{tree_reduce, AccumulatorMode, MomentAccumulator, NORMALIZATION_FLOOR};
use ghostdiff::optics::{apply_object, detect, split_beam, FourierLens};
use ghostdiff::specklefield::{GammaAccumulator, SpeckleGenerator};
use ghostdiff::{child_seed, GridAxis, Pattern, PeakEntry};
use serde::{Deserialize, Serialize};

use crate::config::{Bench, ConfigError, EstimatorConfig, ExperimentConfig, OutputFormat};
use crate::output::{pattern_tsv, sha256_hex, FileEntry, OutputDir};

/// Frames handled by one leaf of the reduction tree.
pub const FRAME_CHUNK: u64 = 100;

/// Full-matrix accumulation is used up to this many detector pixels.
const FULL_MATRIX_LIMIT: usize = 256;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub frames: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Use the figure's own frame count when the config names one.
    pub full: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_sha256: String,
    pub seed: u64,
    pub n_frames: u64,
    pub delta_x_n_um: Vec<f64>,
    pub workers: usize,
    pub files: Vec<FileEntry>,
    pub wall_clock_s: f64,
    /// Estimator failures; outputs of the other estimators are still written.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSummary {
    pub estimator: String,
    pub file: String,
    pub peaks: Vec<PeakEntry<f64>>,
    /// Orders whose window does not fit on this pattern.
    pub unreachable_orders: Vec<i32>,
    /// Why the peak table is empty, when it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySummary {
    pub max_visibility: f64,
    pub argmax_x1_um: f64,
    pub argmax_x2_um: f64,
    /// Largest `V - 3 SE` over unmasked points.
    pub max_lower_bound_3se: f64,
    pub normalization_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    /// Relative RMS distance of the Monte Carlo G from the Γ oracle.
    pub cross_relative_rms: f64,
    /// Same for the test-arm autocorrelation and the HBT oracle.
    pub hbt_relative_rms: f64,
    pub unmasked_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub delta_x_n_um: f64,
    pub directory: String,
    pub n_frames: u64,
    pub outputs: Vec<OutputSummary>,
    pub visibility: Option<VisibilitySummary>,
    pub oracle: Option<OracleSummary>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub n_frames: u64,
    pub prediction: Option<DiffractionPrediction<f64>>,
    pub sweeps: Vec<SweepSummary>,
}

/// Accumulated state of one contiguous slice of frames.
#[derive(Debug, Clone)]
struct Partial {
    matrix: MomentAccumulator<f64>,
    spatial: Option<MomentAccumulator<f64>>,
    gamma: Option<GammaAccumulator<f64>>,
}

impl Partial {
    fn merge(mut self, other: Self) -> ghostdiff::Result<Self> {
        self.matrix.merge(&other.matrix)?;
        if let (Some(a), Some(b)) = (self.spatial.as_mut(), other.spatial.as_ref()) {
            a.merge(b)?;
        }
        if let (Some(a), Some(b)) = (self.gamma.as_mut(), other.gamma.as_ref()) {
            a.merge(b)?;
        }
        Ok(self)
    }
}

/// Sub-directory name for one coherence length.
pub fn sweep_dir(delta: f64) -> String {
    format!("dx{delta}um")
}

fn label(x: f64) -> String {
    format!("{}", x.round() as i64)
}

/// Frame count actually used for `cfg` under `opts`.
pub fn effective_frames(cfg: &ExperimentConfig, opts: &RunOptions) -> u64 {
    match (opts.frames, opts.full, cfg.source.full_frames) {
        (Some(n), _, _) => n,
        (None, true, Some(p)) => p,
        _ => cfg.source.n_frames,
    }
}

/// Runs every sweep of `cfg`, writing outputs under the chosen directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.source.master_seed = s;
    }
    cfg.source.n_frames = effective_frames(&cfg, opts);
    cfg.validate()?;
    let workers = opts.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;

    // The output location is not part of the experiment: it stays out of
    // the stored config so runs differing only in destination are identical.
    let root = opts.out_dir.as_ref().unwrap_or(&cfg.outputs.directory);
    let mut out = OutputDir::create(root)?;
    let config_text = cfg.to_toml();
    out.write("config.toml", config_text.as_bytes())?;

    let first = cfg.bench(cfg.source.delta_x_n_um[0])?;
    let prediction = match &first.grating {
        Some(g) => Some(
            grating_coefficients(&g.sampled_on(&first.axis), &first.optics, cfg.analysis.n_orders)
                .map_err(|e| ConfigError::new("object", e.to_string()))?,
        ),
        None => None,
    };
    if let Some(p) = &prediction {
        out.write_json("prediction.json", p)?;
    }

    let mut sweeps = Vec::new();
    let mut errors = Vec::new();
    for &delta in &cfg.source.delta_x_n_um {
        let bench = cfg.bench(delta)?;
        let t0 = Instant::now();
        let sweep = pool.install(|| run_sweep(&cfg, &bench, delta, prediction.as_ref(), &mut out))?;
        eprintln!(
            "{}: {} frames in {:.2} s",
            sweep_dir(delta),
            cfg.source.n_frames,
            t0.elapsed().as_secs_f64()
        );
        errors.extend(sweep.errors.iter().map(|e| format!("{}: {e}", sweep_dir(delta))));
        sweeps.push(sweep);
    }

    let summary = RunSummary {
        name: cfg.name.clone(),
        seed: cfg.source.master_seed,
        n_frames: cfg.source.n_frames,
        prediction,
        sweeps,
    };
    if cfg.outputs.formats.contains(&OutputFormat::Json) {
        out.write_json("summary.json", &summary)?;
    }
    let manifest = RunManifest {
        name: cfg.name.clone(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: cfg.source.master_seed,
        n_frames: cfg.source.n_frames,
        delta_x_n_um: cfg.source.delta_x_n_um.clone(),
        workers,
        files: out.files().to_vec(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        errors,
    };
    out.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn x1_positions(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut xs = Vec::new();
    for e in &cfg.estimators {
        if let EstimatorConfig::FixedPixel { x1_um, .. } | EstimatorConfig::Autocorrelation { x1_um } = e {
            xs.extend(x1_um.iter().copied());
        }
    }
    xs
}

fn matrix_mode(cfg: &ExperimentConfig, axis: &GridAxis<f64>) -> AccumulatorMode {
    let wants_full = cfg
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorConfig::GammaOracle | EstimatorConfig::Visibility));
    if wants_full && axis.n_points() <= FULL_MATRIX_LIMIT {
        return AccumulatorMode::FullMatrix;
    }
    let mut rows: Vec<usize> = x1_positions(cfg)
        .iter()
        .filter_map(|&x| axis.index_of(x))
        .collect();
    if rows.is_empty() {
        rows.push(axis.center_index());
    }
    rows.sort_unstable();
    rows.dedup();
    AccumulatorMode::FixedPixel(rows)
}

fn run_sweep(
    cfg: &ExperimentConfig,
    bench: &Bench,
    delta: f64,
    prediction: Option<&DiffractionPrediction<f64>>,
    out: &mut OutputDir,
) -> Result<SweepSummary, RunError> {
    let dir = sweep_dir(delta);
    let gen = SpeckleGenerator::new(bench.speckle).map_err(ConfigError::from)?;
    let lens = FourierLens::new(bench.optics, bench.axis).map_err(ConfigError::from)?;
    let det_axis = bench.detector_axis;
    let mode = matrix_mode(cfg, &det_axis);
    let spatial_shift = cfg.estimators.iter().find_map(|e| match e {
        EstimatorConfig::SpatialAverage { max_shift_um } => {
            Some((max_shift_um / det_axis.pitch()).round() as usize)
        }
        _ => None,
    });
    let wants_gamma = cfg.estimators.contains(&EstimatorConfig::GammaOracle);
    let master = cfg.source.master_seed;

    let leaf = |range: std::ops::Range<u64>| -> ghostdiff::Result<Partial> {
        let mut p = Partial {
            matrix: MomentAccumulator::new(det_axis, det_axis, mode.clone())?.starting_at(range.start),
            spatial: match spatial_shift {
                Some(r) => Some(
                    MomentAccumulator::new(det_axis, det_axis, AccumulatorMode::DifferenceCoordinate { max_shift: r })?
                        .starting_at(range.start),
                ),
                None => None,
            },
            gamma: if wants_gamma {
                Some(GammaAccumulator::full(bench.axis)?)
            } else {
                None
            },
        };
        for k in range {
            let seed = child_seed(master, k);
            let field = gen.generate(seed);
            if let Some(g) = p.gamma.as_mut() {
                g.add(&field)?;
            }
            let (t, r) = split_beam(&field, &bench.splitter);
            let a = lens.apply(&apply_object(&t, &bench.object))?;
            let b = lens.apply(&r)?;
            let i1 = detect(&a, &bench.detector, child_seed(seed, 1))?;
            let i2 = detect(&b, &bench.detector, child_seed(seed, 2))?;
            p.matrix.accumulate_frame(&i1, &i2)?;
            if let Some(s) = p.spatial.as_mut() {
                s.accumulate_frame(&i1, &i2)?;
            }
        }
        Ok(p)
    };
    let merge = |a: ghostdiff::Result<Partial>, b: ghostdiff::Result<Partial>| a?.merge(b?);
    let n = cfg.source.n_frames;
    let mut sweep = SweepSummary {
        delta_x_n_um: delta,
        directory: dir.clone(),
        n_frames: n,
        outputs: Vec::new(),
        visibility: None,
        oracle: None,
        errors: Vec::new(),
    };
    let acc = match tree_reduce(0..n, FRAME_CHUNK, &leaf, &merge) {
        Ok(a) => a,
        Err(e) => {
            sweep.errors.push(format!("frame loop: {e}"));
            return Ok(sweep);
        }
    };

    let tsv = cfg.outputs.formats.contains(&OutputFormat::Tsv);
    let window = peak_window(cfg, prediction);
    let emit = |sweep: &mut SweepSummary,
                    out: &mut OutputDir,
                    estimator: String,
                    file: String,
                    p: ghostdiff::Result<Pattern<f64>>,
                    coordinate: &str,
                    peaks: bool|
     -> Result<(), RunError> {
        let p = match p {
            Ok(p) => p,
            Err(e) => {
                sweep.errors.push(format!("{estimator}: {e}"));
                return Ok(());
            }
        };
        let rel = format!("{dir}/{file}");
        if tsv {
            out.write(&rel, pattern_tsv(&p, coordinate).as_bytes())?;
        }
        // A pattern too narrow for the peak windows is not an estimator failure.
        let (table, unreachable, peak_note) = match (peaks, prediction, window) {
            (true, Some(pred), Some(w)) => match peak_table(&p, pred, w, cfg) {
                Ok((t, u)) => (t, u, None),
                Err(e) => (Vec::new(), pred.orders.clone(), Some(e.to_string())),
            },
            _ => (Vec::new(), Vec::new(), None),
        };
        sweep.outputs.push(OutputSummary {
            estimator,
            file: rel,
            peaks: table,
            unreachable_orders: unreachable,
            peak_note,
        });
        Ok(())
    };

    for est in &cfg.estimators {
        match est {
            EstimatorConfig::MeanIntensity => {
                let m = acc.matrix.mean_intensity_test();
                emit(&mut sweep, out, "mean_intensity_test".into(), "test_mean.tsv".into(), m, "x_um", true)?;
                let m = acc.matrix.mean_intensity_reference();
                emit(&mut sweep, out, "mean_intensity_reference".into(), "reference_mean.tsv".into(), m, "x_um", false)?;
            }
            EstimatorConfig::FixedPixel { x1_um, normalize } => {
                for &x1 in x1_um {
                    let i = det_axis.index_of(x1).expect("validated position");
                    let x1_grid = det_axis.coordinate(i);
                    let p = acc
                        .matrix
                        .ghost_pattern_fixed_pixel(i, *normalize)
                        .map(|p| p.mirrored_about(x1_grid));
                    let suffix = if *normalize { "_norm" } else { "" };
                    emit(
                        &mut sweep,
                        out,
                        format!("fixed_pixel x1={}um{}", label(x1), suffix),
                        format!("ghost_x1_{}um{suffix}.tsv", label(x1)),
                        p,
                        "x1_minus_x2_um",
                        true,
                    )?;
                }
            }
            EstimatorConfig::SpatialAverage { .. } => {
                let p = match &acc.spatial {
                    Some(s) => s.ghost_pattern_spatial_average(),
                    None => Err(ghostdiff::Error::NotAccumulated("spatial average".into())),
                };
                emit(&mut sweep, out, "spatial_average".into(), "spatial_average.tsv".into(), p, "x1_minus_x2_um", true)?;
            }
            EstimatorConfig::Autocorrelation { x1_um } => {
                for &x1 in x1_um {
                    let i = det_axis.index_of(x1).expect("validated position");
                    let x1_grid = det_axis.coordinate(i);
                    let p = acc.matrix.autocorrelation(i).map(|mut p| {
                        p.axis = GridAxis::new(p.len(), p.axis.pitch(), p.axis.origin() - x1_grid)
                            .expect("valid axis");
                        p
                    });
                    emit(
                        &mut sweep,
                        out,
                        format!("autocorrelation x1={}um", label(x1)),
                        format!("autocorr_x1_{}um.tsv", label(x1)),
                        p,
                        "x_minus_x1_um",
                        true,
                    )?;
                }
            }
            EstimatorConfig::Visibility => match acc.matrix.visibility() {
                Ok(v) => {
                    sweep.visibility = Some(VisibilitySummary {
                        max_visibility: v.max_visibility,
                        argmax_x1_um: det_axis.coordinate(v.argmax.0),
                        argmax_x2_um: det_axis.coordinate(v.argmax.1),
                        max_lower_bound_3se: v.max_lower_bound(3.0),
                        normalization_floor: NORMALIZATION_FLOOR,
                    });
                    if tsv {
                        let n2 = det_axis.n_points();
                        let k = v.rows.iter().position(|&r| r == v.argmax.0).unwrap_or(0);
                        let mut p = Pattern::new(det_axis, v.values[k * n2..(k + 1) * n2].to_vec());
                        p.mask = v.mask[k * n2..(k + 1) * n2].to_vec();
                        p.std_error = v.std_error[k * n2..(k + 1) * n2].to_vec();
                        out.write(
                            &format!("{dir}/visibility_x1_{}um.tsv", label(det_axis.coordinate(v.rows[k]))),
                            pattern_tsv(&p, "x2_um").as_bytes(),
                        )?;
                    }
                }
                Err(e) => sweep.errors.push(format!("visibility: {e}")),
            },
            EstimatorConfig::GammaOracle => match oracle_check(&acc, bench) {
                Ok((summary, row)) => {
                    if tsv {
                        out.write(&format!("{dir}/oracle_cross_center_row.tsv"), pattern_tsv(&row, "x2_um").as_bytes())?;
                    }
                    sweep.oracle = Some(summary);
                }
                Err(e) => sweep.errors.push(format!("gamma_oracle: {e}")),
            },
        }
    }
    Ok(sweep)
}

fn peak_window(cfg: &ExperimentConfig, prediction: Option<&DiffractionPrediction<f64>>) -> Option<f64> {
    if let Some(w) = cfg.analysis.peak_window_um {
        return Some(w);
    }
    let x1 = prediction?.position_of(1)?;
    Some(0.5 * x1.abs() * 1000.0)
}

/// Integrates the predicted orders that fit on `p`; the rest are reported.
pub fn peak_table(
    p: &Pattern<f64>,
    pred: &DiffractionPrediction<f64>,
    window: f64,
    cfg: &ExperimentConfig,
) -> ghostdiff::Result<(Vec<PeakEntry<f64>>, Vec<i32>)> {
    let (inside, outside) = crate::compare::split_orders(p, pred, window);
    let table = integrate_peaks_at(p, &inside, window, cfg.analysis.baseline)?;
    Ok((table, outside))
}

fn oracle_check(
    acc: &Partial,
    bench: &Bench,
) -> ghostdiff::Result<(OracleSummary, Pattern<f64>)> {
    let gamma = acc
        .gamma
        .as_ref()
        .ok_or_else(|| ghostdiff::Error::NotAccumulated("Γ".into()))?
        .finish_full()?;
    let g_mc = acc.matrix.cross_correlation()?;
    let c_mc = acc.matrix.autocorrelation_matrix()?;
    let g_or = oracle_correlation(&gamma, &bench.object, &bench.optics, &bench.splitter)?;
    let h_or = oracle_hbt(&gamma, &bench.object, &bench.optics)?;
    let t4 = bench.splitter.t.norm_sqr().powi(2);
    let n = bench.detector_axis.n_points();
    let (_, s1, s2, _, _) = acc.matrix.raw_sums();
    let floor = |s: &[f64]| {
        let m = s.iter().copied().fold(0.0, f64::max);
        s.iter().map(|v| *v >= NORMALIZATION_FLOOR * m).collect::<Vec<bool>>()
    };
    let m1 = floor(&s1);
    let m2 = floor(&s2);
    let (mut dc, mut nc, mut dh, mut nh, mut count) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            if m1[i] && m2[j] {
                let o = g_or.get(i, j);
                dc += (g_mc.values[i * n + j] - o).powi(2);
                nc += o * o;
                count += 1;
            }
            if m1[i] && m1[j] {
                let o = t4 * h_or.get(i, j);
                dh += (c_mc[i * n + j] - o).powi(2);
                nh += o * o;
            }
        }
    }
    if count == 0 {
        return Err(ghostdiff::Error::AllMasked("oracle comparison".into()));
    }
    let c = n / 2;
    let mut row = Pattern::new(bench.detector_axis, g_mc.values[c * n..(c + 1) * n].to_vec());
    row.std_error = g_mc.std_error[c * n..(c + 1) * n].to_vec();
    Ok((
        OracleSummary {
            cross_relative_rms: (dc / nc).sqrt(),
            hbt_relative_rms: (dh / nh).sqrt(),
            unmasked_points: count,
        },
        row,
    ))
}
