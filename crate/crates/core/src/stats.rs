//! Small statistical helpers shared by the estimators.

use crate::scalar::Scalar;

/// Median of the finite values in `values`; `None` when there are none.
pub fn median<S: Scalar>(values: &[S]) -> Option<S> {
    let mut v: Vec<S> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / S::of(2.0)
    })
}

/// Delete-one-block jackknife standard error.
///
/// `replicates[b]` is the statistic recomputed with block `b` left out.
pub fn jackknife_std_error<S: Scalar>(replicates: &[S]) -> S {
    let b = replicates.len();
    if b < 2 {
        return S::nan();
    }
    let bf = S::of_usize(b);
    let mean = replicates.iter().copied().sum::<S>() / bf;
    let ss = replicates
        .iter()
        .map(|&r| (r - mean) * (r - mean))
        .sum::<S>();
    ((bf - S::one()) / bf * ss).sqrt()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the unit-mean exponential law `1 - exp(-x)`.
pub fn ks_unit_exponential(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let cdf = 1.0 - (-x.max(0.0)).exp();
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
    }
    d
}
