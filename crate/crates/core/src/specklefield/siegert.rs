//! Gaussian-statistics diagnostics: the Siegert relation
//! `<I(x)I(x')> - <I(x)><I(x')> = |Γ(x,x')|^2` and the negative-exponential
//! intensity law.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::GridAxis;
use crate::scalar::Scalar;
use crate::stats::ks_unit_exponential;

/// Smallest ensemble accepted by [`siegert_check`].
pub const MIN_SIEGERT_FIELDS: usize = 1000;

/// Upper bound on the number of sampled positions per axis.
const MAX_SAMPLED_POINTS: usize = 64;

/// Points with mean intensity below this fraction of the maximum are ignored.
const INTENSITY_FLOOR: f64 = 0.01;

fn sampled_points(n: usize) -> Vec<usize> {
    let stride = n.div_ceil(MAX_SAMPLED_POINTS).max(1);
    (0..n).step_by(stride).collect()
}

/// Worst normalized Siegert deviation over the sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiegertReport<S> {
    pub max_deviation: S,
    /// Grid indices `(x, x')` where the maximum occurs.
    pub worst_pair: (usize, usize),
    pub n_pairs: usize,
    pub n_fields: usize,
}

/// Streaming fourth- and second-order moments on a sampled subgrid, for a
/// pair of fields `(a, b)` (use the same field twice for a single beam).
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceAccumulator<S> {
    axis: GridAxis<S>,
    points: Vec<usize>,
    sum_ia: Vec<S>,
    sum_ib: Vec<S>,
    sum_iaib: Vec<S>,
    sum_cross: Vec<Complex<S>>,
    n_fields: usize,
}

impl<S: Scalar> CoherenceAccumulator<S> {
    pub fn new(axis: GridAxis<S>) -> Self {
        let points = sampled_points(axis.n_points());
        let p = points.len();
        Self {
            axis,
            points,
            sum_ia: vec![S::zero(); p],
            sum_ib: vec![S::zero(); p],
            sum_iaib: vec![S::zero(); p * p],
            sum_cross: vec![Complex::new(S::zero(), S::zero()); p * p],
            n_fields: 0,
        }
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn add(&mut self, a: &ComplexField<S>, b: &ComplexField<S>) -> Result<()> {
        self.axis.ensure_matches(&a.axis)?;
        self.axis.ensure_matches(&b.axis)?;
        let p = self.points.len();
        let av: Vec<Complex<S>> = self.points.iter().map(|&i| a.values[i]).collect();
        let bv: Vec<Complex<S>> = self.points.iter().map(|&i| b.values[i]).collect();
        for k in 0..p {
            self.sum_ia[k] += av[k].norm_sqr();
            self.sum_ib[k] += bv[k].norm_sqr();
        }
        for i in 0..p {
            let ia = av[i].norm_sqr();
            let ca = av[i].conj();
            for j in 0..p {
                self.sum_iaib[i * p + j] += ia * bv[j].norm_sqr();
                self.sum_cross[i * p + j] += ca * bv[j];
            }
        }
        self.n_fields += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.axis.ensure_matches(&other.axis)?;
        for (x, y) in self.sum_ia.iter_mut().zip(&other.sum_ia) {
            *x += *y;
        }
        for (x, y) in self.sum_ib.iter_mut().zip(&other.sum_ib) {
            *x += *y;
        }
        for (x, y) in self.sum_iaib.iter_mut().zip(&other.sum_iaib) {
            *x += *y;
        }
        for (x, y) in self.sum_cross.iter_mut().zip(&other.sum_cross) {
            *x += y;
        }
        self.n_fields += other.n_fields;
        Ok(())
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn report(&self) -> Result<SiegertReport<S>> {
        if self.n_fields < MIN_SIEGERT_FIELDS {
            return Err(Error::InsufficientFrames {
                needed: MIN_SIEGERT_FIELDS,
                got: self.n_fields,
            });
        }
        let nf = S::of_usize(self.n_fields);
        let p = self.points.len();
        let ma: Vec<S> = self.sum_ia.iter().map(|s| *s / nf).collect();
        let mb: Vec<S> = self.sum_ib.iter().map(|s| *s / nf).collect();
        let max_a = ma.iter().copied().fold(S::zero(), S::max);
        let max_b = mb.iter().copied().fold(S::zero(), S::max);
        if !(max_a > S::zero() && max_b > S::zero()) {
            return Err(Error::Degenerate("zero mean intensity everywhere".into()));
        }
        let floor = S::of(INTENSITY_FLOOR);
        let mut worst = S::zero();
        let mut worst_pair = (0, 0);
        let mut n_pairs = 0;
        for i in 0..p {
            if ma[i] <= floor * max_a {
                continue;
            }
            for j in 0..p {
                if mb[j] <= floor * max_b {
                    continue;
                }
                let background = ma[i] * mb[j];
                let fluct = self.sum_iaib[i * p + j] / nf - background;
                let gamma = self.sum_cross[i * p + j] / nf;
                let dev = (fluct - gamma.norm_sqr()).abs() / background;
                n_pairs += 1;
                if dev > worst || n_pairs == 1 {
                    worst = dev;
                    worst_pair = (self.points[i], self.points[j]);
                }
            }
        }
        Ok(SiegertReport {
            max_deviation: worst,
            worst_pair,
            n_pairs,
            n_fields: self.n_fields,
        })
    }
}

/// Maximum normalized deviation from the Siegert relation over sampled pairs
/// of one ensemble. Values near zero indicate circular Gaussian statistics.
pub fn siegert_check<'a, S, I>(fields: I) -> Result<SiegertReport<S>>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ComplexField<S>>,
{
    siegert_check_cross(fields.into_iter().map(|f| (f, f)))
}

/// Siegert deviation with `x` taken from the first field of each pair and
/// `x'` from the second.
pub fn siegert_check_cross<'a, S, I>(pairs: I) -> Result<SiegertReport<S>>
where
    S: Scalar,
    I: IntoIterator<Item = (&'a ComplexField<S>, &'a ComplexField<S>)>,
{
    let mut iter = pairs.into_iter();
    let (a0, b0) = iter.next().ok_or(Error::InsufficientFrames {
        needed: MIN_SIEGERT_FIELDS,
        got: 0,
    })?;
    let mut acc = CoherenceAccumulator::new(a0.axis);
    acc.add(a0, b0)?;
    for (a, b) in iter {
        acc.add(a, b)?;
    }
    acc.report()
}

/// `<I^2>/<I>^2 - 1` at every grid point; zero where `<I>` vanishes.
pub fn pointwise_contrast<'a, S, I>(fields: I) -> Result<Vec<S>>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ComplexField<S>>,
{
    let mut s1: Vec<S> = Vec::new();
    let mut s2: Vec<S> = Vec::new();
    let mut axis: Option<GridAxis<S>> = None;
    let mut count = 0usize;
    for f in fields {
        match &axis {
            None => {
                axis = Some(f.axis);
                s1 = vec![S::zero(); f.values.len()];
                s2 = vec![S::zero(); f.values.len()];
            }
            Some(ax) => ax.ensure_matches(&f.axis)?,
        }
        for ((a, b), v) in s1.iter_mut().zip(s2.iter_mut()).zip(&f.values) {
            let i = v.norm_sqr();
            *a += i;
            *b += i * i;
        }
        count += 1;
    }
    if count < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: count,
        });
    }
    let nf = S::of_usize(count);
    Ok(s1
        .iter()
        .zip(&s2)
        .map(|(&a, &b)| {
            let m = a / nf;
            if m > S::zero() {
                (b / nf) / (m * m) - S::one()
            } else {
                S::zero()
            }
        })
        .collect())
}

/// Kolmogorov–Smirnov distance of the pooled normalized intensity
/// `I(x) / <I(x)>` from the unit exponential law, over sampled points whose
/// mean intensity exceeds 1% of the maximum.
pub fn exponential_ks<'a, S, I>(fields: I) -> Result<f64>
where
    S: Scalar,
    I: IntoIterator<Item = &'a ComplexField<S>>,
{
    let mut points: Vec<usize> = Vec::new();
    let mut axis: Option<GridAxis<S>> = None;
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for f in fields {
        match &axis {
            None => {
                axis = Some(f.axis);
                points = sampled_points(f.values.len());
                samples = vec![Vec::new(); points.len()];
            }
            Some(ax) => ax.ensure_matches(&f.axis)?,
        }
        for (s, &p) in samples.iter_mut().zip(&points) {
            s.push(f.values[p].norm_sqr().to_f64_lossy());
        }
    }
    let count = samples.first().map_or(0, Vec::len);
    if count < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: count,
        });
    }
    let means: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let max = means.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Degenerate("zero mean intensity everywhere".into()));
    }
    let mut pooled: Vec<f64> = Vec::new();
    for (s, &m) in samples.iter().zip(&means) {
        if m > INTENSITY_FLOOR * max {
            pooled.extend(s.iter().map(|i| i / m));
        }
    }
    Ok(ks_unit_exponential(&mut pooled))
}
