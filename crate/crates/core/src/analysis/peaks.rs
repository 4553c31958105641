use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pattern::{Pattern, PeakEntry};
use crate::scalar::Scalar;
use crate::stats::{jackknife_std_error, median};

use super::grating::DiffractionPrediction;

/// Local background removed from each integration window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Median of the flanking gap samples.
    #[default]
    FlankMedian,
    /// Least-squares parabola through the flanking gap samples.
    FlankQuadratic,
    None,
}

struct Window {
    order: i32,
    center: f64,
    inside: Vec<usize>,
    flank: Vec<usize>,
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

fn windows<S: Scalar>(p: &Pattern<S>, peaks: &[(i32, S)], window: S) -> Result<Vec<Window>> {
    let pitch = p.axis.pitch().to_f64_lossy();
    let w = window.to_f64_lossy();
    if !(w >= 2.0 * pitch) {
        return Err(invalid(
            "window",
            format!("{w} is narrower than two samples (pitch {pitch})"),
        ));
    }
    let mut sorted: Vec<(i32, f64)> = peaks.iter().map(|(o, x)| (*o, x.to_f64_lossy())).collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut spacing = f64::INFINITY;
    for pair in sorted.windows(2) {
        if pair[1].1 - pair[0].1 < w {
            return Err(Error::OverlappingWindows(pair[0].0, pair[1].0));
        }
        spacing = spacing.min(pair[1].1 - pair[0].1);
    }
    // Flank width: the gap between neighbouring windows, or one window
    // for an isolated peak.
    let gap = if spacing.is_finite() { (spacing - w).max(pitch) } else { w };
    let coords: Vec<f64> = p.axis.coordinates().map(|x| x.to_f64_lossy()).collect();
    let half = 0.5 * w;
    let eps = 1e-9 * pitch;
    sorted
        .into_iter()
        .map(|(order, center)| {
            let mut inside = Vec::new();
            let mut flank = Vec::new();
            for (i, &x) in coords.iter().enumerate() {
                if !p.mask[i] {
                    continue;
                }
                let dx = (x - center).abs();
                if dx <= half + eps {
                    inside.push(i);
                } else if dx <= half + gap + eps {
                    flank.push(i);
                }
            }
            if inside.is_empty() {
                return Err(Error::EmptyWindow(order));
            }
            Ok(Window {
                order,
                center,
                inside,
                flank,
            })
        })
        .collect()
}

fn window_height<S: Scalar>(
    p: &Pattern<S>,
    values: &[S],
    w: &Window,
    baseline: Baseline,
) -> Result<f64> {
    let x = |i: usize| p.axis.coordinate(i).to_f64_lossy() - w.center;
    let v = |i: usize| values[i].to_f64_lossy();
    let raw: f64 = w.inside.iter().map(|&i| v(i)).sum();
    let base = match baseline {
        Baseline::None => 0.0,
        Baseline::FlankMedian => {
            if w.flank.is_empty() {
                return Err(Error::Degenerate(format!("order {} has no flank samples", w.order)));
            }
            let f: Vec<f64> = w.flank.iter().map(|&i| v(i)).collect();
            median(&f).unwrap_or(0.0) * w.inside.len() as f64
        }
        Baseline::FlankQuadratic => {
            if w.flank.len() < 3 {
                return Err(Error::Degenerate(format!(
                    "order {} has fewer than three flank samples",
                    w.order
                )));
            }
            let mut m = [[0.0; 3]; 3];
            let mut b = [0.0; 3];
            for &i in &w.flank {
                let t = x(i);
                let pw = [1.0, t, t * t];
                for r in 0..3 {
                    for c in 0..3 {
                        m[r][c] += pw[r] * pw[c];
                    }
                    b[r] += pw[r] * v(i);
                }
            }
            let c = solve3(m, b).ok_or_else(|| {
                Error::Degenerate(format!("order {} flanks do not fix a parabola", w.order))
            })?;
            w.inside
                .iter()
                .map(|&i| {
                    let t = x(i);
                    c[0] + c[1] * t + c[2] * t * t
                })
                .sum()
        }
    };
    Ok(raw - base)
}

/// Baseline-subtracted window sums around each `(order, position)`;
/// positions are in the pattern's axis units.
pub fn integrate_peaks_at<S: Scalar>(
    p: &Pattern<S>,
    peaks: &[(i32, S)],
    window: S,
    baseline: Baseline,
) -> Result<Vec<PeakEntry<S>>> {
    if peaks.is_empty() {
        return Err(invalid("peaks", "no peak positions given"));
    }
    let ws = windows(p, peaks, window)?;
    let heights = |values: &[S]| -> Result<Vec<f64>> {
        ws.iter().map(|w| window_height(p, values, w, baseline)).collect()
    };
    let h = heights(&p.values)?;
    let zero = ws.iter().position(|w| w.order == 0);
    let ratios = |h: &[f64]| -> Vec<f64> {
        match zero {
            Some(z) => h.iter().map(|v| v / h[z]).collect(),
            None => vec![f64::NAN; h.len()],
        }
    };
    let r = ratios(&h);
    let mut h_err = vec![f64::NAN; h.len()];
    let mut r_err = vec![f64::NAN; h.len()];
    if !p.replicates.is_empty() {
        let reps: Vec<Vec<f64>> = p.replicates.iter().map(|v| heights(v)).collect::<Result<_>>()?;
        let rep_r: Vec<Vec<f64>> = reps.iter().map(|h| ratios(h)).collect();
        for k in 0..h.len() {
            h_err[k] = jackknife_std_error(&reps.iter().map(|v| v[k]).collect::<Vec<_>>());
            r_err[k] = jackknife_std_error(&rep_r.iter().map(|v| v[k]).collect::<Vec<_>>());
        }
    }
    Ok(ws
        .iter()
        .enumerate()
        .map(|(k, w)| PeakEntry {
            order: w.order,
            position: S::of(w.center),
            integrated_height: S::of(h[k]),
            ratio_to_zero: S::of(r[k]),
            height_std_error: S::of(h_err[k]),
            ratio_std_error: S::of(r_err[k]),
        })
        .collect())
}

/// [`integrate_peaks_at`] at the predicted positions (mm), for a pattern
/// whose axis is in micrometres.
pub fn integrate_peaks<S: Scalar>(
    p: &Pattern<S>,
    predicted: &DiffractionPrediction<S>,
    window: S,
    baseline: Baseline,
) -> Result<Vec<PeakEntry<S>>> {
    let peaks: Vec<(i32, S)> = predicted
        .orders
        .iter()
        .zip(&predicted.x)
        .map(|(o, x)| (*o, *x * S::of(1000.0)))
        .collect();
    integrate_peaks_at(p, &peaks, window, baseline)
}

/// Full width at half maximum of the global peak, above a baseline taken
/// as the median of the outer 10% of samples.
pub fn fwhm<S: Scalar>(p: &Pattern<S>) -> Result<S> {
    let n = p.len();
    let v: Vec<f64> = p.values.iter().map(|x| x.to_f64_lossy()).collect();
    let edge = (n / 20).max(1);
    let outer: Vec<f64> = (0..n)
        .filter(|&i| (i < edge || i >= n - edge) && p.mask[i])
        .map(|i| v[i])
        .collect();
    let base = median(&outer).unwrap_or(0.0);
    let peak = (0..n)
        .filter(|&i| p.mask[i])
        .max_by(|&a, &b| v[a].total_cmp(&v[b]))
        .ok_or_else(|| Error::AllMasked("profile".into()))?;
    if !(v[peak] > base) {
        return Err(Error::Degenerate("maximum does not rise above the baseline".into()));
    }
    let half = base + 0.5 * (v[peak] - base);
    let pitch = p.axis.pitch().to_f64_lossy();
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize - step) as usize;
            if p.mask[i] && v[i] < half {
                let t = (v[j] - half) / (v[j] - v[i]);
                return Some(pitch * (j as f64 + step as f64 * t));
            }
        }
        None
    };
    let left = cross(&mut (0..peak).rev(), -1).ok_or(Error::NoCrossing("left"))?;
    let right = cross(&mut (peak + 1..n), 1).ok_or(Error::NoCrossing("right"))?;
    Ok(S::of(right - left))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridAxis;

    fn pattern(values: Vec<f64>, pitch: f64) -> Pattern<f64> {
        let axis = GridAxis::centered(values.len(), pitch).unwrap();
        Pattern::new(axis, values)
    }

    #[test]
    fn gaussian_fwhm() {
        let sigma = 7.3f64;
        let axis = GridAxis::<f64>::centered(400, 0.5).unwrap();
        let v: Vec<f64> = axis.coordinates().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let w = fwhm(&Pattern::new(axis, v)).unwrap();
        assert!((w - 2.354_820_045 * sigma).abs() < 0.5);
    }

    #[test]
    fn triangle_fwhm() {
        let base = 40.0f64;
        let axis = GridAxis::<f64>::centered(200, 1.0).unwrap();
        let v: Vec<f64> = axis.coordinates().map(|x| (1.0 - x.abs() / (base / 2.0)).max(0.0)).collect();
        let w = fwhm(&Pattern::new(axis, v)).unwrap();
        assert!((w - base / 2.0).abs() <= 1.0);
    }

    #[test]
    fn fwhm_without_crossing_is_rejected() {
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(fwhm(&pattern(v, 1.0)).is_err());
        assert!(fwhm(&pattern(vec![1.0; 20], 1.0)).is_err());
    }

    #[test]
    fn flat_pattern_integrates_to_zero_above_baseline() {
        let p = pattern(vec![3.0; 101], 1.0);
        let peaks = [(-1, -20.0), (0, 0.0), (1, 20.0)];
        for b in [Baseline::FlankMedian, Baseline::FlankQuadratic] {
            let t = integrate_peaks_at(&p, &peaks, 6.0, b).unwrap();
            for e in &t {
                assert!(e.integrated_height.abs() < 1e-9);
            }
        }
        let raw = integrate_peaks_at(&p, &peaks, 6.0, Baseline::None).unwrap();
        assert!(raw.iter().all(|e| e.integrated_height == raw[0].integrated_height));
    }

    #[test]
    fn quadratic_baseline_removes_curvature() {
        let axis = GridAxis::<f64>::centered(200, 1.0).unwrap();
        let v: Vec<f64> = axis
            .coordinates()
            .map(|x| 5.0 - 1e-3 * x * x + if x.abs() < 1.5 { 2.0 } else { 0.0 })
            .collect();
        let p = Pattern::new(axis, v);
        let t = integrate_peaks_at(&p, &[(0, 0.0)], 8.0, Baseline::FlankQuadratic).unwrap();
        assert!((t[0].integrated_height - 6.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_windows_are_rejected() {
        let p = pattern(vec![1.0; 64], 1.0);
        assert!(integrate_peaks_at(&p, &[(0, 0.0)], 1.0, Baseline::None).is_err());
        assert!(matches!(
            integrate_peaks_at(&p, &[(0, 0.0), (1, 3.0)], 4.0, Baseline::None),
            Err(Error::OverlappingWindows(0, 1))
        ));
        assert!(matches!(
            integrate_peaks_at(&p, &[(0, 0.0), (5, 500.0)], 4.0, Baseline::None),
            Err(Error::EmptyWindow(5))
        ));
    }
}
