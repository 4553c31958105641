use crate::error::{invalid, Error, Result};
use crate::field::IntensityFrame;
use crate::grid::GridAxis;
use crate::scalar::Scalar;

use super::moments::Moments;

/// Number of interleaved blocks used for jackknife errors.
pub const JACKKNIFE_BLOCKS: usize = 10;

/// Largest detector for which full `n x n` product sums are kept.
pub const MAX_FULL_MATRIX: usize = 2048;

/// Which second moments the accumulator keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccumulatorMode {
    /// All `I1(x1) I2(x2)` and `I1(x) I1(x')` products.
    FullMatrix,
    /// Products with `I1` at the listed test-arm pixels only.
    FixedPixel(Vec<usize>),
    /// `sum_x I1(x) I2(x - r)` for `|r| <= max_shift` pixels, with `x`
    /// restricted to the region valid for every shift.
    DifferenceCoordinate { max_shift: usize },
}

/// Mergeable running sums of intensity moments for a two-arm ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator<S> {
    pub(crate) axis1: GridAxis<S>,
    pub(crate) axis2: GridAxis<S>,
    pub(crate) mode: AccumulatorMode,
    pub(crate) blocks: Vec<Moments<S>>,
    n_frames: usize,
    first_frame: usize,
}

impl<S: Scalar> MomentAccumulator<S> {
    pub fn new(axis1: GridAxis<S>, axis2: GridAxis<S>, mode: AccumulatorMode) -> Result<Self> {
        let n1 = axis1.n_points();
        let n2 = axis2.n_points();
        let (n_cross, n_auto) = match &mode {
            AccumulatorMode::FullMatrix => {
                let n = n1.max(n2);
                if n > MAX_FULL_MATRIX {
                    return Err(Error::GridTooLarge {
                        what: "full-matrix accumulation",
                        n,
                        max: MAX_FULL_MATRIX,
                    });
                }
                (n1 * n2, n1 * n1)
            }
            AccumulatorMode::FixedPixel(pixels) => {
                if pixels.is_empty() {
                    return Err(invalid("x1_index", "no test-arm pixel selected"));
                }
                if let Some(&bad) = pixels.iter().find(|&&p| p >= n1) {
                    return Err(invalid(
                        "x1_index",
                        format!("pixel {bad} outside the {n1}-pixel test arm"),
                    ));
                }
                (pixels.len() * n2, pixels.len() * n1)
            }
            AccumulatorMode::DifferenceCoordinate { max_shift } => {
                axis1.ensure_matches(&axis2)?;
                if 2 * max_shift >= n1 {
                    return Err(invalid(
                        "max_shift",
                        format!("{max_shift} pixels leaves no common overlap on {n1} pixels"),
                    ));
                }
                (2 * max_shift + 1, 0)
            }
        };
        let blocks = (0..JACKKNIFE_BLOCKS)
            .map(|_| Moments::zeros(n1, n2, n_cross, n_auto))
            .collect();
        Ok(Self {
            axis1,
            axis2,
            mode,
            blocks,
            n_frames: 0,
            first_frame: 0,
        })
    }

    /// Accumulator for a slice of a larger run whose first frame has global
    /// index `first_frame`, so blocks line up when slices are merged.
    pub fn starting_at(mut self, first_frame: u64) -> Self {
        self.first_frame = (first_frame % JACKKNIFE_BLOCKS as u64) as usize;
        self
    }

    pub fn mode(&self) -> &AccumulatorMode {
        &self.mode
    }

    pub fn axis1(&self) -> GridAxis<S> {
        self.axis1
    }

    pub fn axis2(&self) -> GridAxis<S> {
        self.axis2
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    /// Adds one frame pair; the run's frame `k` goes to block
    /// `k mod JACKKNIFE_BLOCKS`.
    pub fn accumulate_frame(&mut self, i1: &IntensityFrame<S>, i2: &IntensityFrame<S>) -> Result<()> {
        self.axis1.ensure_matches(&i1.axis)?;
        self.axis2.ensure_matches(&i2.axis)?;
        if i1.values.len() != self.axis1.n_points() {
            return Err(Error::ShapeMismatch {
                expected: self.axis1.n_points(),
                got: i1.values.len(),
            });
        }
        if i2.values.len() != self.axis2.n_points() {
            return Err(Error::ShapeMismatch {
                expected: self.axis2.n_points(),
                got: i2.values.len(),
            });
        }
        let block = &mut self.blocks[(self.first_frame + self.n_frames) % JACKKNIFE_BLOCKS];
        let a = &i1.values;
        let b = &i2.values;
        for (s, v) in block.sum_i1.iter_mut().zip(a) {
            *s += *v;
        }
        for (s, v) in block.sum_i2.iter_mut().zip(b) {
            *s += *v;
        }
        let n1 = a.len();
        let n2 = b.len();
        match &self.mode {
            AccumulatorMode::FullMatrix => {
                for (x1, &v1) in a.iter().enumerate() {
                    let row = &mut block.cross[x1 * n2..(x1 + 1) * n2];
                    for (s, &v2) in row.iter_mut().zip(b) {
                        *s += v1 * v2;
                    }
                    // Upper triangle only; the estimator mirrors it.
                    let row = &mut block.auto[x1 * n1..(x1 + 1) * n1];
                    for (s, &v) in row[x1..].iter_mut().zip(&a[x1..]) {
                        *s += v1 * v;
                    }
                }
            }
            AccumulatorMode::FixedPixel(pixels) => {
                for (k, &p) in pixels.iter().enumerate() {
                    let v1 = a[p];
                    let row = &mut block.cross[k * n2..(k + 1) * n2];
                    for (s, &v2) in row.iter_mut().zip(b) {
                        *s += v1 * v2;
                    }
                    let row = &mut block.auto[k * n1..(k + 1) * n1];
                    for (s, &v) in row.iter_mut().zip(a) {
                        *s += v1 * v;
                    }
                }
            }
            AccumulatorMode::DifferenceCoordinate { max_shift } => {
                let r_max = *max_shift as isize;
                let lo = *max_shift;
                let hi = n1 - *max_shift;
                for (slot, r) in (-r_max..=r_max).enumerate() {
                    let mut acc = S::zero();
                    for x in lo..hi {
                        acc += a[x] * b[(x as isize - r) as usize];
                    }
                    block.cross[slot] += acc;
                }
            }
        }
        block.n_frames += 1;
        self.n_frames += 1;
        Ok(())
    }

    /// Adds the sums of `other`, block by block.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.axis1.ensure_matches(&other.axis1)?;
        self.axis2.ensure_matches(&other.axis2)?;
        if self.mode != other.mode {
            return Err(Error::AxisMismatch(format!(
                "cannot merge {:?} with {:?}",
                self.mode, other.mode
            )));
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.add_assign(b);
        }
        self.n_frames += other.n_frames;
        Ok(())
    }

    /// Sums over all blocks, in block order.
    pub(crate) fn total(&self) -> Moments<S> {
        let mut t = self.blocks[0].clone();
        for b in &self.blocks[1..] {
            t.add_assign(b);
        }
        t
    }

    /// Totals with each block removed in turn.
    pub(crate) fn leave_one_out(&self, total: &Moments<S>) -> Vec<Moments<S>> {
        self.blocks
            .iter()
            .filter(|b| b.n_frames > 0)
            .map(|b| {
                let mut t = total.clone();
                t.sub_assign(b);
                t
            })
            .collect()
    }

    /// Flat views of the summed moments: `(n, sum_I1, sum_I2, cross, auto)`.
    pub fn raw_sums(&self) -> (usize, Vec<S>, Vec<S>, Vec<S>, Vec<S>) {
        let t = self.total();
        (t.n_frames, t.sum_i1, t.sum_i2, t.cross, t.auto)
    }

    pub(crate) fn fixed_slot(&self, x1_index: usize) -> Result<FixedSlot> {
        match &self.mode {
            AccumulatorMode::FullMatrix if x1_index < self.axis1.n_points() => {
                Ok(FixedSlot::Full(x1_index))
            }
            AccumulatorMode::FixedPixel(p) => p
                .iter()
                .position(|&q| q == x1_index)
                .map(FixedSlot::Row)
                .ok_or_else(|| Error::NotAccumulated(format!("test-arm pixel {x1_index}"))),
            _ => Err(Error::NotAccumulated(format!("test-arm pixel {x1_index}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum FixedSlot {
    Full(usize),
    Row(usize),
}
