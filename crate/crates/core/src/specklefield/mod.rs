//! Pseudo-thermal speckle synthesis and second-order field statistics.
//!
//! A realization is circular complex Gaussian white noise, low-passed by a
//! Gaussian filter in the spatial-frequency domain, transformed back and
//! multiplied by the source envelope. The filter width fixes the transverse
//! coherence length; the envelope fixes the far-field speckle size
//! independently.
//!
//! The coherence length `delta_x_n` is the FWHM of the intensity correlation
//! peak above baseline, `|Γ(x, x+u)|^2 / (<I(x)><I(x+u)>)`, which is what a
//! measured speckle autocorrelation reports. For the Gaussian filter used here
//! `|Γ|` itself is wider by `sqrt(2)`.

mod gamma;
mod siegert;

pub use gamma::{estimate_gamma, estimate_gamma_rows, GammaAccumulator, GammaMatrix, GammaRows};
pub use siegert::{
    exponential_ks, pointwise_contrast, siegert_check, siegert_check_cross, CoherenceAccumulator,
    SiegertReport, MIN_SIEGERT_FIELDS,
};

use std::sync::Arc;

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::field::ComplexField;
use crate::grid::GridAxis;
use crate::scalar::Scalar;
use crate::seed::{child_seed, rng_from_seed};

/// Shape of the mean-intensity envelope imposed at the source plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    /// Hard pinhole: unit amplitude for `|x| <= D/2`, zero outside.
    #[default]
    HardPinhole,
    /// Gaussian amplitude whose intensity falls to `1/e^2` at `|x| = D/2`.
    Gaussian,
}

/// Generator parameters. Lengths in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleSpec<S> {
    /// Near-field coherence length (speckle FWHM).
    pub delta_x_n: S,
    /// Envelope diameter `D_ph`.
    pub aperture_d_ph: S,
    pub axis: GridAxis<S>,
    pub envelope_shape: EnvelopeShape,
}

impl<S: Scalar> SpeckleSpec<S> {
    pub fn new(delta_x_n: S, aperture_d_ph: S, axis: GridAxis<S>) -> Self {
        Self {
            delta_x_n,
            aperture_d_ph,
            axis,
            envelope_shape: EnvelopeShape::HardPinhole,
        }
    }

    pub fn with_envelope(mut self, shape: EnvelopeShape) -> Self {
        self.envelope_shape = shape;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pitch = self.axis.pitch();
        if !(self.delta_x_n.is_finite() && self.delta_x_n > S::zero()) {
            return Err(invalid("delta_x_n", "must be a positive length"));
        }
        if self.delta_x_n < S::of(2.0) * pitch {
            return Err(invalid(
                "delta_x_n",
                format!(
                    "{} um is below two grid pitches ({} um); refine the grid",
                    self.delta_x_n,
                    S::of(2.0) * pitch
                ),
            ));
        }
        if !(self.aperture_d_ph.is_finite() && self.aperture_d_ph > S::zero()) {
            return Err(invalid("aperture_d_ph", "must be a positive length"));
        }
        if self.aperture_d_ph > self.axis.extent() {
            return Err(invalid(
                "aperture_d_ph",
                format!(
                    "{} um exceeds the grid extent {} um",
                    self.aperture_d_ph,
                    self.axis.extent()
                ),
            ));
        }
        Ok(())
    }

    /// Coherence length below the envelope size, i.e. many speckles across
    /// the source.
    pub fn is_incoherent(&self) -> bool {
        self.delta_x_n < self.aperture_d_ph
    }

    /// Width `sigma` of the normalized field correlation
    /// `|Γ(u)| / Γ(0) = exp(-u^2 / (2 sigma^2))`.
    pub fn correlation_sigma(&self) -> S {
        self.delta_x_n / (S::of(2.0) * S::LN_2().sqrt())
    }

    /// Envelope amplitude at coordinate `x`.
    pub fn envelope(&self, x: S) -> S {
        let half = self.aperture_d_ph / S::of(2.0);
        match self.envelope_shape {
            EnvelopeShape::HardPinhole => {
                if x.abs() <= half {
                    S::one()
                } else {
                    S::zero()
                }
            }
            EnvelopeShape::Gaussian => (-(x / half).powi(2)).exp(),
        }
    }
}

/// Reusable speckle source: the FFT plans, spectral filter and envelope are
/// computed once and shared by every realization.
#[derive(Clone)]
pub struct SpeckleGenerator<S: Scalar> {
    spec: SpeckleSpec<S>,
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
    /// Spectral filter in FFT bin order, including the normalization.
    filter: Vec<S>,
    envelope: Vec<S>,
}

impl<S: Scalar> std::fmt::Debug for SpeckleGenerator<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpeckleGenerator")
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> SpeckleGenerator<S> {
    pub fn new(spec: SpeckleSpec<S>) -> Result<Self> {
        spec.validate()?;
        let n = spec.axis.n_points();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        // |H(q)|^2 = exp(-q^2 sigma^2 / 2) is the Fourier pair of
        // exp(-u^2 / (2 sigma^2)).
        let sigma = spec.correlation_sigma();
        let dq = S::TAU() / spec.axis.extent();
        let nn = n as i64;
        let mut filter: Vec<S> = (0..nn)
            .map(|k| {
                let ks = if k <= nn / 2 { k } else { k - nn };
                let q = S::from_i64(ks).expect("bin index") * dq;
                (-(q * q * sigma * sigma) / S::of(4.0)).exp()
            })
            .collect();
        // Unit variance after forward FFT, filter and unnormalized inverse.
        let power: S = filter.iter().map(|h| *h * *h).sum();
        let scale = (S::of_usize(n) / power).sqrt() / S::of_usize(n);
        filter.iter_mut().for_each(|h| *h *= scale);

        let envelope = spec.axis.coordinates().map(|x| spec.envelope(x)).collect();
        Ok(Self {
            spec,
            forward,
            inverse,
            filter,
            envelope,
        })
    }

    pub fn spec(&self) -> &SpeckleSpec<S> {
        &self.spec
    }

    pub fn axis(&self) -> GridAxis<S> {
        self.spec.axis
    }

    /// One realization, a deterministic function of `seed`.
    pub fn generate(&self, seed: u64) -> ComplexField<S> {
        let n = self.spec.axis.n_points();
        let mut rng = rng_from_seed(seed);
        let half = S::of(0.5).sqrt();
        let mut buf: Vec<Complex<S>> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex::new(S::of(re) * half, S::of(im) * half)
            })
            .collect();
        let mut scratch =
            vec![Complex::new(S::zero(), S::zero()); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for (v, h) in buf.iter_mut().zip(&self.filter) {
            *v = v.scale(*h);
        }
        scratch.resize(
            self.inverse.get_inplace_scratch_len(),
            Complex::new(S::zero(), S::zero()),
        );
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        for (v, e) in buf.iter_mut().zip(&self.envelope) {
            *v = v.scale(*e);
        }
        ComplexField {
            axis: self.spec.axis,
            values: buf,
        }
    }

    /// Realization `index` of the ensemble keyed by `master_seed`.
    pub fn frame(&self, master_seed: u64, index: u64) -> ComplexField<S> {
        self.generate(child_seed(master_seed, index))
    }

    /// Lazily generated ensemble of `count` frames.
    pub fn ensemble(
        &self,
        master_seed: u64,
        count: usize,
    ) -> impl Iterator<Item = ComplexField<S>> + '_ {
        (0..count as u64).map(move |k| self.frame(master_seed, k))
    }
}

/// One speckle realization for `spec`, deterministic in `seed`.
///
/// Plans the FFT on every call; use [`SpeckleGenerator`] for ensembles.
pub fn synthesize_speckle<S: Scalar>(spec: &SpeckleSpec<S>, seed: u64) -> Result<ComplexField<S>> {
    Ok(SpeckleGenerator::new(*spec)?.generate(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_axis() -> GridAxis<f64> {
        GridAxis::centered(1024, 12.5 / 32.0).unwrap()
    }

    #[test]
    fn rejects_undersampled_coherence_length() {
        let spec = SpeckleSpec::new(0.5, 300.0, fig2_axis());
        let err = synthesize_speckle(&spec, 1).unwrap_err();
        assert!(err.to_string().contains("delta_x_n"), "{err}");
    }

    #[test]
    fn rejects_aperture_wider_than_grid() {
        let spec = SpeckleSpec::new(2.0, 500.0, fig2_axis());
        let err = synthesize_speckle(&spec, 1).unwrap_err();
        assert!(err.to_string().contains("aperture_d_ph"), "{err}");
    }

    #[test]
    fn bit_reproducible_for_fixed_seed() {
        let spec = SpeckleSpec::new(2.0, 332.5, fig2_axis());
        let a = synthesize_speckle(&spec, 42).unwrap();
        let b = synthesize_speckle(&spec, 42).unwrap();
        let c = synthesize_speckle(&spec, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let generator = SpeckleGenerator::new(spec).unwrap();
        assert_eq!(generator.generate(42), a);
    }

    #[test]
    fn field_vanishes_outside_hard_pinhole() {
        let spec = SpeckleSpec::new(2.0, 100.0, fig2_axis());
        let f = synthesize_speckle(&spec, 3).unwrap();
        for (x, v) in f.axis.coordinates().zip(&f.values) {
            if x.abs() > 50.0 {
                assert_eq!(v.norm_sqr(), 0.0);
            }
        }
    }

    #[test]
    fn single_speckle_limit_is_flat_over_aperture() {
        // Coherence length far beyond the aperture: one speckle.
        let spec = SpeckleSpec::new(5.0e4, 40.0, fig2_axis());
        let f = synthesize_speckle(&spec, 11).unwrap();
        let inside: Vec<f64> = f
            .axis
            .coordinates()
            .zip(&f.values)
            .filter(|(x, _)| x.abs() <= 20.0)
            .map(|(_, v)| v.norm_sqr())
            .collect();
        let mean = inside.iter().sum::<f64>() / inside.len() as f64;
        let var = inside.iter().map(|i| (i - mean).powi(2)).sum::<f64>() / inside.len() as f64;
        assert!(var.sqrt() / mean < 1e-3, "contrast {}", var.sqrt() / mean);
    }

    #[test]
    fn works_in_single_precision() {
        let axis = GridAxis::<f32>::centered(256, 0.5).unwrap();
        let spec = SpeckleSpec::new(2.0f32, 100.0, axis).with_envelope(EnvelopeShape::Gaussian);
        let f = synthesize_speckle(&spec, 5).unwrap();
        assert!(f.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        assert!(f.power() > 0.0);
    }
}
