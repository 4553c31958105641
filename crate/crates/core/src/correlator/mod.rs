//! Streaming estimation of intensity-correlation quantities.
//!
//! [`MomentAccumulator`] keeps running sums of `I1`, `I2`, `I1 I2` and
//! `I1 I1'` split into [`JACKKNIFE_BLOCKS`] interleaved blocks (frame `k`
//! lands in block `k mod B`). Every estimator is a function of the summed
//! moments and is re-evaluated with each block left out to give
//! delete-one-block jackknife errors.

mod accumulator;
mod estimators;
mod moments;
mod reduce;

pub use accumulator::{AccumulatorMode, MomentAccumulator, JACKKNIFE_BLOCKS, MAX_FULL_MATRIX};
pub use estimators::{CorrelationMap, VisibilityReport, NORMALIZATION_FLOOR};
pub use reduce::tree_reduce;

use crate::error::Result;
use crate::field::IntensityFrame;
use crate::pattern::Pattern;
use crate::scalar::Scalar;

/// Spatial-average ghost pattern of a sequence of frame pairs, for shifts
/// `|r| <= max_shift` detector pixels.
pub fn ghost_pattern_spatial_average<'a, S, I>(frames: I, max_shift: usize) -> Result<Pattern<S>>
where
    S: Scalar,
    I: IntoIterator<Item = (&'a IntensityFrame<S>, &'a IntensityFrame<S>)>,
{
    let mut iter = frames.into_iter();
    let (a, b) = iter.next().ok_or(crate::error::Error::InsufficientFrames {
        needed: 2,
        got: 0,
    })?;
    let mut acc = MomentAccumulator::new(
        a.axis,
        b.axis,
        AccumulatorMode::DifferenceCoordinate { max_shift },
    )?;
    acc.accumulate_frame(a, b)?;
    for (a, b) in iter {
        acc.accumulate_frame(a, b)?;
    }
    acc.ghost_pattern_spatial_average()
}
