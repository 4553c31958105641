use serde::{Deserialize, Serialize};

use crate::grid::GridAxis;
use crate::scalar::Scalar;
use crate::stats::jackknife_std_error;

/// One row of a peak table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEntry<S> {
    pub order: i32,
    /// Peak centre in the pattern's axis units (um).
    pub position: S,
    /// Baseline-subtracted sum over the window.
    pub integrated_height: S,
    /// `integrated_height / integrated_height(order 0)`.
    pub ratio_to_zero: S,
    /// Jackknife errors; NaN when the pattern carries no replicates.
    pub height_std_error: S,
    pub ratio_std_error: S,
}

/// Real 1-D profile with an optional validity mask and jackknife replicates.
///
/// Masked samples hold zero and are skipped by every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern<S> {
    pub axis: GridAxis<S>,
    pub values: Vec<S>,
    /// `true` where the sample is valid.
    pub mask: Vec<bool>,
    /// Per-sample standard error (NaN when unknown).
    pub std_error: Vec<S>,
    /// Delete-one-block replicates of `values`, empty when not available.
    pub replicates: Vec<Vec<S>>,
    pub peak_table: Vec<PeakEntry<S>>,
}

impl<S: Scalar> Pattern<S> {
    /// Unmasked pattern without error information.
    pub fn new(axis: GridAxis<S>, values: Vec<S>) -> Self {
        let n = values.len();
        Self {
            axis,
            values,
            mask: vec![true; n],
            std_error: vec![S::nan(); n],
            replicates: Vec::new(),
            peak_table: Vec::new(),
        }
    }

    /// Pattern whose errors come from delete-one-block replicates.
    pub fn with_replicates(
        axis: GridAxis<S>,
        values: Vec<S>,
        mask: Vec<bool>,
        replicates: Vec<Vec<S>>,
    ) -> Self {
        let n = values.len();
        let std_error = (0..n)
            .map(|i| {
                if !mask[i] || replicates.is_empty() {
                    S::nan()
                } else {
                    let r: Vec<S> = replicates.iter().map(|rep| rep[i]).collect();
                    jackknife_std_error(&r)
                }
            })
            .collect();
        Self {
            axis,
            values,
            mask,
            std_error,
            replicates,
            peak_table: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Same samples re-expressed against `r = x_ref - x`, i.e. mirrored
    /// about `x_ref`. Fixed-pixel ghost patterns then peak at `+x_n`.
    pub fn mirrored_about(&self, x_ref: S) -> Self {
        let n = self.len();
        let last = self.axis.coordinate(n - 1);
        let axis = GridAxis::new(n, self.axis.pitch(), x_ref - last).expect("valid axis");
        let rev = |v: &Vec<S>| v.iter().rev().copied().collect::<Vec<S>>();
        Self {
            axis,
            values: rev(&self.values),
            mask: self.mask.iter().rev().copied().collect(),
            std_error: rev(&self.std_error),
            replicates: self.replicates.iter().map(rev).collect(),
            peak_table: Vec::new(),
        }
    }
}
