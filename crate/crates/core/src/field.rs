use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::GridAxis;
use crate::scalar::Scalar;

/// Sampled complex optical amplitude. Intensity is `|value|^2`, normalized so
/// that a unit-mean speckle field has mean intensity 1 at the aperture centre.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<S> {
    pub axis: GridAxis<S>,
    pub values: Vec<Complex<S>>,
}

impl<S: Scalar> ComplexField<S> {
    pub fn new(axis: GridAxis<S>, values: Vec<Complex<S>>) -> Result<Self> {
        if values.len() != axis.n_points() {
            return Err(Error::ShapeMismatch {
                expected: axis.n_points(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Degenerate("field contains non-finite samples".into()));
        }
        Ok(Self { axis, values })
    }

    pub fn constant(axis: GridAxis<S>, value: Complex<S>) -> Self {
        Self {
            values: vec![value; axis.n_points()],
            axis,
        }
    }

    pub fn intensity(&self) -> IntensityFrame<S> {
        IntensityFrame {
            axis: self.axis,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// `sum |a|^2 * pitch`.
    pub fn power(&self) -> S {
        self.values.iter().map(|v| v.norm_sqr()).sum::<S>() * self.axis.pitch()
    }

    pub fn scaled(&self, factor: Complex<S>) -> Self {
        Self {
            axis: self.axis,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Real intensity samples on a detector (or field) axis.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityFrame<S> {
    pub axis: GridAxis<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> IntensityFrame<S> {
    pub fn new(axis: GridAxis<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != axis.n_points() {
            return Err(Error::ShapeMismatch {
                expected: axis.n_points(),
                got: values.len(),
            });
        }
        Ok(Self { axis, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
