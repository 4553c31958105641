use crate::error::{Error, Result};
use crate::grid::GridAxis;
use crate::pattern::Pattern;
use crate::scalar::Scalar;
use crate::stats::jackknife_std_error;

use super::accumulator::{AccumulatorMode, FixedSlot, MomentAccumulator};
use super::moments::Moments;

/// Fraction of the maximum mean intensity below which normalized and
/// visibility estimates are masked instead of divided.
pub const NORMALIZATION_FLOOR: f64 = 0.05;

/// `G(x1, x2) = <I1 I2> - <I1><I2>` for the tracked test-arm pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMap<S> {
    pub axis1: GridAxis<S>,
    pub axis2: GridAxis<S>,
    /// Test-arm pixel of each row.
    pub rows: Vec<usize>,
    /// Row-major, `rows.len() x axis2.n_points()`.
    pub values: Vec<S>,
    pub std_error: Vec<S>,
}

impl<S: Scalar> CorrelationMap<S> {
    pub fn n_cols(&self) -> usize {
        self.axis2.n_points()
    }

    /// Row for test-arm pixel `x1_index`, if tracked.
    pub fn row(&self, x1_index: usize) -> Option<&[S]> {
        let k = self.rows.iter().position(|&r| r == x1_index)?;
        let n = self.n_cols();
        Some(&self.values[k * n..(k + 1) * n])
    }
}

/// `V = G / (<I1><I2> + G)` over the tracked pixel pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport<S> {
    pub axis2: GridAxis<S>,
    pub rows: Vec<usize>,
    /// Row-major like [`CorrelationMap::values`]; masked entries hold zero.
    pub values: Vec<S>,
    pub mask: Vec<bool>,
    pub std_error: Vec<S>,
    pub max_visibility: S,
    /// `(x1_index, x2_index)` of the maximum.
    pub argmax: (usize, usize),
}

impl<S: Scalar> VisibilityReport<S> {
    /// Largest `V - k * SE` over unmasked points.
    pub fn max_lower_bound(&self, k: S) -> S {
        self.values
            .iter()
            .zip(&self.std_error)
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|((v, e), _)| if e.is_finite() { *v - k * *e } else { *v })
            .fold(S::neg_infinity(), S::max)
    }
}

fn floor_mask<S: Scalar>(means: &[S]) -> Vec<bool> {
    let max = means.iter().copied().fold(S::zero(), S::max);
    let floor = S::of(NORMALIZATION_FLOOR) * max;
    means.iter().map(|m| max > S::zero() && *m >= floor).collect()
}

impl<S: Scalar> MomentAccumulator<S> {
    /// Evaluates `f` on the summed moments and on every delete-one-block
    /// total; returns values and replicates.
    fn jackknifed<F>(&self, f: F) -> Result<(Vec<S>, Vec<Vec<S>>)>
    where
        F: Fn(&Moments<S>) -> Vec<S>,
    {
        let total = self.total();
        total.frames(2)?;
        let values = f(&total);
        let loo = self.leave_one_out(&total);
        let replicates = if loo.len() >= 2 && loo.iter().all(|m| m.n_frames > 0) {
            loo.iter().map(&f).collect()
        } else {
            Vec::new()
        };
        Ok((values, replicates))
    }

    fn masked_pattern(
        &self,
        axis: GridAxis<S>,
        mask: Vec<bool>,
        values: Vec<S>,
        replicates: Vec<Vec<S>>,
    ) -> Pattern<S> {
        let zero_masked = |mut v: Vec<S>| {
            for (x, m) in v.iter_mut().zip(&mask) {
                if !m {
                    *x = S::zero();
                }
            }
            v
        };
        let values = zero_masked(values);
        let replicates = replicates.into_iter().map(zero_masked).collect();
        Pattern::with_replicates(axis, values, mask, replicates)
    }

    /// Tracked test-arm pixels.
    fn tracked_rows(&self) -> Vec<usize> {
        match &self.mode {
            AccumulatorMode::FullMatrix => (0..self.axis1.n_points()).collect(),
            AccumulatorMode::FixedPixel(p) => p.clone(),
            AccumulatorMode::DifferenceCoordinate { .. } => Vec::new(),
        }
    }

    fn cross_rows(m: &Moments<S>, rows: &[usize]) -> Vec<S> {
        let nf = S::of_usize(m.n_frames);
        let n2 = m.sum_i2.len();
        let mut out = Vec::with_capacity(rows.len() * n2);
        for (k, &x1) in rows.iter().enumerate() {
            let m1 = m.sum_i1[x1] / nf;
            for j in 0..n2 {
                out.push(m.cross[k * n2 + j] / nf - m1 * (m.sum_i2[j] / nf));
            }
        }
        out
    }

    fn require_matrix(&self, what: &str) -> Result<Vec<usize>> {
        let rows = self.tracked_rows();
        if rows.is_empty() {
            return Err(Error::NotAccumulated(format!(
                "{what} needs full-matrix or fixed-pixel accumulation"
            )));
        }
        Ok(rows)
    }

    /// Background-subtracted cross-correlation for every tracked pixel.
    pub fn cross_correlation(&self) -> Result<CorrelationMap<S>> {
        let rows = self.require_matrix("cross-correlation")?;
        let (values, reps) = self.jackknifed(|m| Self::cross_rows(m, &rows))?;
        let std_error = point_errors(&values, &reps);
        Ok(CorrelationMap {
            axis1: self.axis1,
            axis2: self.axis2,
            rows,
            values,
            std_error,
        })
    }

    /// `<I1>` over the test arm.
    pub fn mean_intensity_test(&self) -> Result<Pattern<S>> {
        let (v, r) = self.jackknifed(|m| m.mean_i1())?;
        Ok(Pattern::with_replicates(self.axis1, v, vec![true; self.axis1.n_points()], r))
    }

    /// `<I2>` over the reference arm.
    pub fn mean_intensity_reference(&self) -> Result<Pattern<S>> {
        let (v, r) = self.jackknifed(|m| m.mean_i2())?;
        Ok(Pattern::with_replicates(self.axis2, v, vec![true; self.axis2.n_points()], r))
    }

    /// `G(x1 fixed, x2)` against `x2`. With `normalize`, divided by
    /// `<I2(x2)>^2`, masking points below the normalization floor.
    pub fn ghost_pattern_fixed_pixel(&self, x1_index: usize, normalize: bool) -> Result<Pattern<S>> {
        let slot = self.fixed_slot(x1_index)?;
        let k = match slot {
            FixedSlot::Full(i) | FixedSlot::Row(i) => i,
        };
        let n2 = self.axis2.n_points();
        let total = self.total();
        total.frames(2)?;
        let mask = if normalize {
            floor_mask(&total.mean_i2())
        } else {
            vec![true; n2]
        };
        if !mask.iter().any(|m| *m) {
            return Err(Error::AllMasked(format!(
                "reference-arm mean intensity is zero everywhere (pixel {x1_index})"
            )));
        }
        let (values, reps) = self.jackknifed(|m| {
            let nf = S::of_usize(m.n_frames);
            let m1 = m.sum_i1[x1_index] / nf;
            (0..n2)
                .map(|j| {
                    let m2 = m.sum_i2[j] / nf;
                    let g = m.cross[k * n2 + j] / nf - m1 * m2;
                    if !normalize {
                        g
                    } else if mask[j] {
                        g / (m2 * m2)
                    } else {
                        S::zero()
                    }
                })
                .collect()
        })?;
        Ok(self.masked_pattern(self.axis2, mask, values, reps))
    }

    /// `C_auto(x, x1 fixed) = <I1(x) I1(x1)> - <I1(x)><I1(x1)>` against `x`.
    pub fn autocorrelation(&self, x1_index: usize) -> Result<Pattern<S>> {
        let slot = self.fixed_slot(x1_index)?;
        let n1 = self.axis1.n_points();
        let (values, reps) = self.jackknifed(|m| {
            let nf = S::of_usize(m.n_frames);
            let m1 = m.sum_i1[x1_index] / nf;
            (0..n1)
                .map(|x| {
                    let s = match slot {
                        FixedSlot::Full(i) => m.auto[i.min(x) * n1 + i.max(x)],
                        FixedSlot::Row(k) => m.auto[k * n1 + x],
                    };
                    s / nf - m1 * (m.sum_i1[x] / nf)
                })
                .collect()
        })?;
        Ok(self.masked_pattern(self.axis1, vec![true; n1], values, reps))
    }

    /// Full `C_auto` matrix, row-major `n1 x n1`. Full-matrix mode only.
    pub fn autocorrelation_matrix(&self) -> Result<Vec<S>> {
        if self.mode != AccumulatorMode::FullMatrix {
            return Err(Error::NotAccumulated(
                "autocorrelation matrix needs full-matrix accumulation".into(),
            ));
        }
        let m = self.total();
        let nf = m.frames(2)?;
        let n1 = self.axis1.n_points();
        let mut out = vec![S::zero(); n1 * n1];
        for i in 0..n1 {
            for j in i..n1 {
                let c = m.auto[i * n1 + j] / nf - (m.sum_i1[i] / nf) * (m.sum_i1[j] / nf);
                out[i * n1 + j] = c;
                out[j * n1 + i] = c;
            }
        }
        Ok(out)
    }

    /// Spatially averaged background-subtracted correlation against the
    /// difference coordinate `r = x1 - x2`.
    pub fn ghost_pattern_spatial_average(&self) -> Result<Pattern<S>> {
        let r_max = match self.mode {
            AccumulatorMode::DifferenceCoordinate { max_shift } => max_shift,
            _ => {
                return Err(Error::NotAccumulated(
                    "spatial average needs difference-coordinate accumulation".into(),
                ))
            }
        };
        let n = self.axis1.n_points();
        let lo = r_max;
        let hi = n - r_max;
        let count = S::of_usize(hi - lo);
        let (values, reps) = self.jackknifed(|m| {
            let nf = S::of_usize(m.n_frames);
            let m1 = m.mean_i1();
            let m2 = m.mean_i2();
            (0..=2 * r_max)
                .map(|slot| {
                    let r = slot as isize - r_max as isize;
                    let mut bg = S::zero();
                    for x in lo..hi {
                        bg += m1[x] * m2[(x as isize - r) as usize];
                    }
                    (m.cross[slot] / nf - bg) / count
                })
                .collect()
        })?;
        let p = self.axis1.pitch();
        let axis = GridAxis::new(2 * r_max + 1, p, -S::of_usize(r_max) * p)?;
        Ok(self.masked_pattern(axis, vec![true; 2 * r_max + 1], values, reps))
    }

    /// Pointwise visibility over the tracked pixel pairs.
    pub fn visibility(&self) -> Result<VisibilityReport<S>> {
        let rows = self.require_matrix("visibility")?;
        let total = self.total();
        total.frames(2)?;
        let n2 = self.axis2.n_points();
        let mask1 = floor_mask(&total.mean_i1());
        let mask2 = floor_mask(&total.mean_i2());
        let mask: Vec<bool> = rows
            .iter()
            .flat_map(|&x1| {
                let on = mask1[x1];
                mask2.iter().map(move |m2| on && *m2)
            })
            .collect();
        if !mask.iter().any(|m| *m) {
            return Err(Error::AllMasked("mean intensity below the floor everywhere".into()));
        }
        let (values, reps) = self.jackknifed(|m| {
            let nf = S::of_usize(m.n_frames);
            let g = Self::cross_rows(m, &rows);
            let mut out = Vec::with_capacity(g.len());
            for (k, &x1) in rows.iter().enumerate() {
                let m1 = m.sum_i1[x1] / nf;
                for j in 0..n2 {
                    let idx = k * n2 + j;
                    if !mask[idx] {
                        out.push(S::zero());
                        continue;
                    }
                    let gp = g[idx].max(S::zero());
                    let den = m1 * (m.sum_i2[j] / nf) + gp;
                    out.push(if den > S::zero() { gp / den } else { S::zero() });
                }
            }
            out
        })?;
        let mut std_error = point_errors(&values, &reps);
        for (e, m) in std_error.iter_mut().zip(&mask) {
            if !m {
                *e = S::nan();
            }
        }
        let mut best = (S::zero(), 0usize);
        for (i, (v, m)) in values.iter().zip(&mask).enumerate() {
            if *m && *v > best.0 {
                best = (*v, i);
            }
        }
        Ok(VisibilityReport {
            axis2: self.axis2,
            argmax: (rows[best.1 / n2], best.1 % n2),
            rows,
            values,
            mask,
            std_error,
            max_visibility: best.0,
        })
    }
}

fn point_errors<S: Scalar>(values: &[S], reps: &[Vec<S>]) -> Vec<S> {
    if reps.is_empty() {
        return vec![S::nan(); values.len()];
    }
    (0..values.len())
        .map(|i| {
            let r: Vec<S> = reps.iter().map(|rep| rep[i]).collect();
            jackknife_std_error(&r)
        })
        .collect()
}
