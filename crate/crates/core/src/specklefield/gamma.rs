use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::field::ComplexField;
use crate::grid::GridAxis;
use crate::scalar::Scalar;

/// Largest grid for which the full `n x n` Γ is materialized.
pub const MAX_FULL_GAMMA: usize = 2048;

/// Estimate of `Γ(x_i, x_j) = <a*(x_i) a(x_j)>`, row-major `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix<S> {
    pub axis: GridAxis<S>,
    values: Vec<Complex<S>>,
}

impl<S: Scalar> GammaMatrix<S> {
    /// Wraps an explicit matrix. The caller is responsible for Hermiticity.
    pub fn from_values(axis: GridAxis<S>, values: Vec<Complex<S>>) -> Result<Self> {
        let n = axis.n_points();
        if values.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self { axis, values })
    }

    /// Rank-one (fully coherent) Γ built from a single field.
    pub fn coherent(field: &ComplexField<S>) -> Self {
        let n = field.values.len();
        let mut values = Vec::with_capacity(n * n);
        for ai in &field.values {
            for aj in &field.values {
                values.push(ai.conj() * aj);
            }
        }
        Self {
            axis: field.axis,
            values,
        }
    }

    /// Delta-correlated Γ with the given mean intensity per sample:
    /// `Γ(x_i, x_j) = I(x_i) δ_ij`.
    pub fn delta_correlated(axis: GridAxis<S>, intensity: &[S]) -> Result<Self> {
        let n = axis.n_points();
        if intensity.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: intensity.len(),
            });
        }
        let mut values = vec![Complex::new(S::zero(), S::zero()); n * n];
        for i in 0..n {
            values[i * n + i] = Complex::new(intensity[i], S::zero());
        }
        Ok(Self { axis, values })
    }

    pub fn n(&self) -> usize {
        self.axis.n_points()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<S> {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[Complex<S>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[Complex<S>] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    /// Largest `|Γ(i,j) - conj(Γ(j,i))|`.
    pub fn hermitian_defect(&self) -> S {
        let n = self.n();
        let mut worst = S::zero();
        for i in 0..n {
            for j in 0..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Selected rows `Γ(x_r, ·)` for grids too large for the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRows<S> {
    pub axis: GridAxis<S>,
    pub rows: Vec<usize>,
    values: Vec<Complex<S>>,
}

impl<S: Scalar> GammaRows<S> {
    /// Row `k` of the selection, i.e. `Γ(x_{rows[k]}, x_j)` for all `j`.
    pub fn row(&self, k: usize) -> &[Complex<S>] {
        let n = self.axis.n_points();
        &self.values[k * n..(k + 1) * n]
    }

    /// Normalized intensity correlation `|Γ(x_r, x_j)|^2 / (Γ(r,r) Γ(j,j))`
    /// along row `k`; zero where either mean intensity vanishes.
    pub fn intensity_correlation(&self, k: usize, diagonal: &[S]) -> Vec<S> {
        let r = self.rows[k];
        self.row(k)
            .iter()
            .zip(diagonal)
            .map(|(g, &d)| {
                let denom = diagonal[r] * d;
                if denom > S::zero() {
                    g.norm_sqr() / denom
                } else {
                    S::zero()
                }
            })
            .collect()
    }
}

/// Streaming sums for Γ. Either the upper triangle of the full matrix or a
/// fixed set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaAccumulator<S> {
    axis: GridAxis<S>,
    rows: Option<Vec<usize>>,
    sums: Vec<Complex<S>>,
    diagonal: Vec<S>,
    n_fields: usize,
}

impl<S: Scalar> GammaAccumulator<S> {
    pub fn full(axis: GridAxis<S>) -> Result<Self> {
        let n = axis.n_points();
        if n > MAX_FULL_GAMMA {
            return Err(Error::GridTooLarge {
                what: "full gamma matrix",
                n,
                max: MAX_FULL_GAMMA,
            });
        }
        Ok(Self {
            axis,
            rows: None,
            sums: vec![Complex::new(S::zero(), S::zero()); n * n],
            diagonal: vec![S::zero(); n],
            n_fields: 0,
        })
    }

    pub fn rows(axis: GridAxis<S>, rows: Vec<usize>) -> Result<Self> {
        let n = axis.n_points();
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(invalid("rows", format!("index {bad} outside grid of {n}")));
        }
        Ok(Self {
            axis,
            sums: vec![Complex::new(S::zero(), S::zero()); rows.len() * n],
            rows: Some(rows),
            diagonal: vec![S::zero(); n],
            n_fields: 0,
        })
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn add(&mut self, field: &ComplexField<S>) -> Result<()> {
        self.axis.ensure_matches(&field.axis)?;
        let a = &field.values;
        let n = a.len();
        for (d, v) in self.diagonal.iter_mut().zip(a) {
            *d += v.norm_sqr();
        }
        match &self.rows {
            None => {
                for i in 0..n {
                    let ci = a[i].conj();
                    let row = &mut self.sums[i * n..(i + 1) * n];
                    for j in (i + 1)..n {
                        row[j] += ci * a[j];
                    }
                }
            }
            Some(rows) => {
                for (k, &r) in rows.iter().enumerate() {
                    let cr = a[r].conj();
                    let row = &mut self.sums[k * n..(k + 1) * n];
                    for (s, v) in row.iter_mut().zip(a) {
                        *s += cr * v;
                    }
                }
            }
        }
        self.n_fields += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.axis.ensure_matches(&other.axis)?;
        if self.rows != other.rows {
            return Err(Error::AxisMismatch("gamma accumulators select different rows".into()));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.diagonal.iter_mut().zip(&other.diagonal) {
            *a += *b;
        }
        self.n_fields += other.n_fields;
        Ok(())
    }

    fn check_count(&self) -> Result<S> {
        if self.n_fields < 2 {
            return Err(Error::InsufficientFrames {
                needed: 2,
                got: self.n_fields,
            });
        }
        Ok(S::of_usize(self.n_fields))
    }

    /// Mean intensity `Γ(x_i, x_i)`.
    pub fn mean_intensity(&self) -> Result<Vec<S>> {
        let nf = self.check_count()?;
        Ok(self.diagonal.iter().map(|d| *d / nf).collect())
    }

    pub fn finish_full(&self) -> Result<GammaMatrix<S>> {
        if self.rows.is_some() {
            return Err(Error::NotAccumulated("the full gamma matrix".into()));
        }
        let nf = self.check_count()?;
        let n = self.axis.n_points();
        let mut values = vec![Complex::new(S::zero(), S::zero()); n * n];
        for i in 0..n {
            values[i * n + i] = Complex::new(self.diagonal[i] / nf, S::zero());
            for j in (i + 1)..n {
                let g = self.sums[i * n + j] / nf;
                values[i * n + j] = g;
                values[j * n + i] = g.conj();
            }
        }
        Ok(GammaMatrix {
            axis: self.axis,
            values,
        })
    }

    pub fn finish_rows(&self) -> Result<GammaRows<S>> {
        let rows = self
            .rows
            .clone()
            .ok_or_else(|| Error::NotAccumulated("row slices".into()))?;
        let nf = self.check_count()?;
        let n = self.axis.n_points();
        let mut values: Vec<Complex<S>> = self.sums.iter().map(|s| *s / nf).collect();
        // Keep the diagonal entries exactly real.
        for (k, &r) in rows.iter().enumerate() {
            values[k * n + r] = Complex::new(self.diagonal[r] / nf, S::zero());
        }
        Ok(GammaRows {
            axis: self.axis,
            rows,
            values,
        })
    }
}

/// Sample mean of `conj(a(x_i)) a(x_j)` over an ensemble on one axis.
pub fn estimate_gamma<'a, S, I>(fields: I) -> Result<GammaMatrix<S>>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ComplexField<S>>,
{
    let mut iter = fields.into_iter();
    let first = iter
        .next()
        .ok_or(Error::InsufficientFrames { needed: 2, got: 0 })?;
    let mut acc = GammaAccumulator::full(first.axis)?;
    acc.add(first)?;
    for f in iter {
        acc.add(f)?;
    }
    acc.finish_full()
}

/// Row slices of Γ for the given row indices.
pub fn estimate_gamma_rows<'a, S, I>(fields: I, rows: Vec<usize>) -> Result<GammaRows<S>>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ComplexField<S>>,
{
    let mut iter = fields.into_iter();
    let first = iter
        .next()
        .ok_or(Error::InsufficientFrames { needed: 2, got: 0 })?;
    let mut acc = GammaAccumulator::rows(first.axis, rows)?;
    acc.add(first)?;
    for f in iter {
        acc.add(f)?;
    }
    acc.finish_rows()
}
