use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::GridAxis;
use crate::optics::{transmission_at, BeamSplitterSpec, OpticalConfig, TransmissionObject};
use crate::scalar::Scalar;
use crate::specklefield::GammaMatrix;

/// Largest grid accepted by the direct-summation oracles.
pub const MAX_ORACLE_POINTS: usize = 128;

/// `G(x1, x2)` on the focal-plane grid, row-major in `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMap<S> {
    pub axis: GridAxis<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> OracleMap<S> {
    pub fn get(&self, m1: usize, m2: usize) -> S {
        self.values[m1 * self.axis.n_points() + m2]
    }

    pub fn row(&self, m1: usize) -> &[S] {
        let n = self.axis.n_points();
        &self.values[m1 * n..(m1 + 1) * n]
    }
}

/// `gain |sum_ij conj(K(m1,i) T1_i) Γ_ij K(m2,j) T2_j|^2` with `K` the
/// discrete lens kernel, evaluated by direct summation.
fn kernel_sum<S: Scalar>(
    gamma: &GammaMatrix<S>,
    obj1: &TransmissionObject<S>,
    obj2: &TransmissionObject<S>,
    cfg: &OpticalConfig<S>,
    gain: S,
) -> Result<OracleMap<S>> {
    let n = gamma.n();
    if n > MAX_ORACLE_POINTS {
        return Err(Error::GridTooLarge {
            what: "quadrature oracle",
            n,
            max: MAX_ORACLE_POINTS,
        });
    }
    let axis = gamma.axis;
    if n % 2 != 0 || !GridAxis::centered(n, axis.pitch())?.matches(&axis) {
        return Err(Error::AxisMismatch("oracle needs an even, centered grid".into()));
    }
    let out_axis = cfg.far_field_axis(&axis)?;
    let norm = S::one() / S::of_usize(n).sqrt();
    let half = (n / 2) as i64;
    let kernel = |m: usize, i: usize| {
        let p = ((m as i64 - half) * (i as i64 - half)).rem_euclid(n as i64);
        Complex::from_polar(norm, -S::TAU() * S::of_usize(p as usize) / S::of_usize(n))
    };
    let t1: Vec<Complex<S>> = axis.coordinates().map(|x| transmission_at(obj1, x)).collect();
    let t2: Vec<Complex<S>> = axis.coordinates().map(|x| transmission_at(obj2, x)).collect();
    // P[i][m2] = sum_j Γ_ij K(m2,j) T2_j
    let b: Vec<Complex<S>> = (0..n * n).map(|k| kernel(k / n, k % n) * t2[k % n]).collect();
    let mut p = vec![Complex::new(S::zero(), S::zero()); n * n];
    for i in 0..n {
        let g = gamma.row(i);
        for m2 in 0..n {
            let brow = &b[m2 * n..(m2 + 1) * n];
            p[i * n + m2] = g.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    let mut values = Vec::with_capacity(n * n);
    for m1 in 0..n {
        let a: Vec<Complex<S>> = (0..n).map(|i| (kernel(m1, i) * t1[i]).conj()).collect();
        for m2 in 0..n {
            let s: Complex<S> = (0..n).map(|i| a[i] * p[i * n + m2]).sum();
            values.push(gain * s.norm_sqr());
        }
    }
    Ok(OracleMap {
        axis: out_axis,
        values,
    })
}

/// Ghost-diffraction cross-correlation predicted from Γ: object in the
/// test arm only.
pub fn oracle_correlation<S: Scalar>(
    gamma: &GammaMatrix<S>,
    obj: &TransmissionObject<S>,
    cfg: &OpticalConfig<S>,
    bs: &BeamSplitterSpec<S>,
) -> Result<OracleMap<S>> {
    kernel_sum(gamma, obj, &TransmissionObject::Identity, cfg, bs.cross_gain())
}

/// Intensity autocorrelation behind the object (object in both kernels),
/// per unit field amplitude.
pub fn oracle_hbt<S: Scalar>(
    gamma: &GammaMatrix<S>,
    obj: &TransmissionObject<S>,
    cfg: &OpticalConfig<S>,
) -> Result<OracleMap<S>> {
    kernel_sum(gamma, obj, obj, cfg, S::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ComplexField;
    use crate::optics::lens_far_field;

    fn setup() -> (GridAxis<f64>, OpticalConfig<f64>) {
        (
            GridAxis::centered(32, 1.5625).unwrap(),
            OpticalConfig::new(0.532, 50.0).unwrap(),
        )
    }

    #[test]
    fn rank_one_gamma_factorizes_into_lens_intensities() {
        let (axis, cfg) = setup();
        let vals: Vec<Complex<f64>> = axis
            .coordinates()
            .map(|x| Complex::from_polar((-x * x / 400.0).exp(), 0.01 * x))
            .collect();
        let field = ComplexField::new(axis, vals).unwrap();
        let obj = TransmissionObject::square_phase_grating(12.5, 4.2, 2.6).unwrap();
        let gamma = GammaMatrix::coherent(&field);
        let bs = BeamSplitterSpec::balanced();
        let g = oracle_correlation(&gamma, &obj, &cfg, &bs).unwrap();
        let i1 = lens_far_field(&crate::optics::apply_object(&field, &obj), &cfg)
            .unwrap()
            .intensity();
        let i2 = lens_far_field(&field, &cfg).unwrap().intensity();
        let scale = g.values.iter().fold(0.0f64, |a, b| a.max(*b));
        for m1 in 0..32 {
            for m2 in 0..32 {
                let want = bs.cross_gain() * i1.values[m1] * i2.values[m2];
                assert!((g.get(m1, m2) - want).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn identity_object_gives_identical_schemes() {
        let (axis, cfg) = setup();
        let intensity: Vec<f64> = (0..32).map(|i| 1.0 + (i as f64 * 0.3).sin().abs()).collect();
        let gamma = GammaMatrix::delta_correlated(axis, &intensity).unwrap();
        let unit = BeamSplitterSpec {
            r: Complex::new(1.0, 0.0),
            t: Complex::new(1.0, 0.0),
        };
        let id = TransmissionObject::Identity;
        assert_eq!(
            oracle_correlation(&gamma, &id, &cfg, &unit).unwrap(),
            oracle_hbt(&gamma, &id, &cfg).unwrap()
        );
    }

    #[test]
    fn delta_gamma_hides_phase_objects_from_hbt() {
        let (axis, cfg) = setup();
        let gamma = GammaMatrix::delta_correlated(axis, &[1.0; 32]).unwrap();
        let obj = TransmissionObject::square_phase_grating(12.5, 4.2, 2.6).unwrap();
        let with = oracle_hbt(&gamma, &obj, &cfg).unwrap();
        let without = oracle_hbt(&gamma, &TransmissionObject::Identity, &cfg).unwrap();
        for (a, b) in with.values.iter().zip(&without.values) {
            assert!((a - b).abs() < 1e-9);
        }
        // Only the ridge m1 == m2 survives.
        let peak = with.get(3, 3);
        assert!(with.get(3, 4).abs() < 1e-6 * peak);
    }

    #[test]
    fn rejects_large_grids() {
        let axis = GridAxis::centered(130, 1.0).unwrap();
        let gamma = GammaMatrix::delta_correlated(axis, &vec![1.0; 130]).unwrap();
        let cfg = OpticalConfig::new(0.532, 50.0).unwrap();
        assert!(matches!(
            oracle_hbt(&gamma, &TransmissionObject::Identity, &cfg),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
