use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raw sums for one jackknife block.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments<S> {
    pub n_frames: usize,
    pub sum_i1: Vec<S>,
    pub sum_i2: Vec<S>,
    /// Mode-dependent layout of `sum I1 I2` products.
    pub cross: Vec<S>,
    /// Mode-dependent layout of `sum I1 I1'` products.
    pub auto: Vec<S>,
}

impl<S: Scalar> Moments<S> {
    pub fn zeros(n1: usize, n2: usize, n_cross: usize, n_auto: usize) -> Self {
        Self {
            n_frames: 0,
            sum_i1: vec![S::zero(); n1],
            sum_i2: vec![S::zero(); n2],
            cross: vec![S::zero(); n_cross],
            auto: vec![S::zero(); n_auto],
        }
    }

    fn zip_with(&mut self, other: &Self, f: impl Fn(S, S) -> S) {
        for (a, b) in self.sum_i1.iter_mut().zip(&other.sum_i1) {
            *a = f(*a, *b);
        }
        for (a, b) in self.sum_i2.iter_mut().zip(&other.sum_i2) {
            *a = f(*a, *b);
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a = f(*a, *b);
        }
        for (a, b) in self.auto.iter_mut().zip(&other.auto) {
            *a = f(*a, *b);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.zip_with(other, |a, b| a + b);
        self.n_frames += other.n_frames;
    }

    pub fn sub_assign(&mut self, other: &Self) {
        self.zip_with(other, |a, b| a - b);
        self.n_frames -= other.n_frames;
    }

    pub fn frames(&self, needed: usize) -> Result<S> {
        if self.n_frames < needed {
            return Err(Error::InsufficientFrames {
                needed,
                got: self.n_frames,
            });
        }
        Ok(S::of_usize(self.n_frames))
    }

    pub fn mean_i1(&self) -> Vec<S> {
        let nf = S::of_usize(self.n_frames);
        self.sum_i1.iter().map(|s| *s / nf).collect()
    }

    pub fn mean_i2(&self) -> Vec<S> {
        let nf = S::of_usize(self.n_frames);
        self.sum_i2.iter().map(|s| *s / nf).collect()
    }
}
