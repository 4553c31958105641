//! Peak-ratio comparison of a measured pattern against a grating prediction.

use std::path::Path;

use ghostdiff::analysis::{Baseline, DiffractionPrediction};
use ghostdiff::Pattern;
use serde::{Deserialize, Serialize};

use crate::output::read_pattern_tsv;

/// Slack added to the tolerance to absorb rounding in the ratio itself.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    pub order: i32,
    pub predicted_ratio: f64,
    pub measured_ratio: f64,
    pub measured_std_error: f64,
    /// `|measured - predicted| / predicted`.
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tolerance: f64,
    pub window_um: f64,
    pub orders: Vec<OrderComparison>,
    /// Predicted orders that could not be measured on the pattern.
    pub missing_orders: Vec<i32>,
    pub pass: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("{0}: {1}")]
    Read(String, String),
    #[error("peak integration: {0}")]
    Numerical(#[from] ghostdiff::Error),
    #[error("{0}")]
    Input(String),
}

/// Ratios `G_n / G_0` of `p` at the predicted positions (mm in
/// `pred`, um on the pattern axis) against `eta_n / eta_0`.
pub fn compare_with_reference(
    p: &Pattern<f64>,
    pred: &DiffractionPrediction<f64>,
    tolerance: f64,
    window_um: Option<f64>,
    baseline: Baseline,
) -> Result<CompareReport, CompareError> {
    if !(tolerance >= 0.0) {
        return Err(CompareError::Input(format!("tolerance {tolerance} must be >= 0")));
    }
    let window = match window_um {
        Some(w) => w,
        None => {
            let x1 = pred
                .position_of(1)
                .ok_or_else(|| CompareError::Input("prediction has no first order".into()))?;
            0.5 * x1.abs() * 1000.0
        }
    };
    if pred.position_of(0).is_none() {
        return Err(CompareError::Input("prediction has no zeroth order".into()));
    }
    let (inside, missing) = split_orders(p, pred, window);
    if missing.contains(&0) {
        return Err(CompareError::Input("zeroth order is off the pattern".into()));
    }
    let table = ghostdiff::analysis::integrate_peaks_at(p, &inside, window, baseline)?;
    let orders: Vec<OrderComparison> = table
        .iter()
        .filter(|e| e.order != 0)
        .map(|e| {
            let predicted = pred.ratio_to_zero(e.order).unwrap_or(f64::NAN);
            let deviation = ((e.ratio_to_zero - predicted) / predicted).abs();
            OrderComparison {
                order: e.order,
                predicted_ratio: predicted,
                measured_ratio: e.ratio_to_zero,
                measured_std_error: e.ratio_std_error,
                deviation,
                pass: deviation <= tolerance + ROUNDING_SLACK,
            }
        })
        .collect();
    let pass = missing.is_empty() && !orders.is_empty() && orders.iter().all(|o| o.pass);
    Ok(CompareReport {
        tolerance,
        window_um: window,
        orders,
        missing_orders: missing,
        pass,
    })
}

/// Predicted `(order, position um)` pairs whose window and flanks lie on
/// `p` with at least one valid sample, and the orders that do not.
pub fn split_orders(
    p: &Pattern<f64>,
    pred: &DiffractionPrediction<f64>,
    window: f64,
) -> (Vec<(i32, f64)>, Vec<i32>) {
    let lo = p.axis.coordinate(0);
    let hi = p.axis.coordinate(p.len() - 1);
    let mut inside = Vec::new();
    let mut missing = Vec::new();
    for (o, x) in pred.orders.iter().zip(&pred.x) {
        let x = x * 1000.0;
        let valid = p
            .axis
            .coordinates()
            .zip(&p.mask)
            .any(|(c, m)| *m && (c - x).abs() <= 0.5 * window);
        if x - window >= lo && x + window <= hi && valid {
            inside.push((*o, x));
        } else {
            missing.push(*o);
        }
    }
    (inside, missing)
}

/// File front end: a pattern TSV and a prediction JSON.
pub fn compare_files(
    pattern: &Path,
    prediction: &Path,
    tolerance: f64,
    window_um: Option<f64>,
    baseline: Baseline,
) -> Result<CompareReport, CompareError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|e| CompareError::Read(p.display().to_string(), e.to_string()))
    };
    let pat = read_pattern_tsv(&read(pattern)?)
        .map_err(|e| CompareError::Read(pattern.display().to_string(), e))?;
    let pred: DiffractionPrediction<f64> = serde_json::from_str(&read(prediction)?)
        .map_err(|e| CompareError::Read(prediction.display().to_string(), e.to_string()))?;
    compare_with_reference(&pat, &pred, tolerance, window_um, baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ghostdiff::GridAxis;

    fn prediction() -> DiffractionPrediction<f64> {
        DiffractionPrediction {
            orders: vec![-2, -1, 0, 1, 2],
            eta: vec![0.02, 0.1, 0.25, 0.1, 0.02],
            theta: vec![0.0; 5],
            x: vec![-0.2, -0.1, 0.0, 0.1, 0.2],
            evanescent: vec![],
        }
    }

    fn synthetic(pred: &DiffractionPrediction<f64>, n: usize) -> Pattern<f64> {
        let axis = GridAxis::centered(n, 5.0).unwrap();
        let mut v = vec![0.0; n];
        for (eta, x) in pred.eta.iter().zip(&pred.x) {
            if let Some(i) = axis.index_of(x * 1000.0) {
                v[i] = *eta;
            }
        }
        Pattern::new(axis, v)
    }

    #[test]
    fn prediction_itself_passes_at_zero_tolerance() {
        let pred = prediction();
        let r = compare_with_reference(&synthetic(&pred, 200), &pred, 0.0, None, Baseline::FlankMedian).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.orders.len(), 4);
    }

    #[test]
    fn orders_off_the_pattern_fail() {
        let pred = prediction();
        let r = compare_with_reference(&synthetic(&pred, 80), &pred, 0.5, None, Baseline::FlankMedian).unwrap();
        assert!(!r.pass);
        assert_eq!(r.missing_orders, vec![-2, 2]);
    }

    #[test]
    fn wrong_ratio_fails() {
        let pred = prediction();
        let mut p = synthetic(&pred, 200);
        let i = p.axis.index_of(100.0).unwrap();
        p.values[i] *= 1.2;
        let r = compare_with_reference(&p, &pred, 0.1, None, Baseline::FlankMedian).unwrap();
        assert!(!r.pass);
        let r = compare_with_reference(&p, &pred, 0.25, None, Baseline::FlankMedian).unwrap();
        assert!(r.pass);
    }
}
