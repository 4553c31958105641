//! The two-arm bench: object transmission, beam splitter, f-f lens and
//! pixelated detection.

use std::sync::Arc;

use num_complex::Complex;
use rand_distr::{Distribution, Poisson};
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::field::{ComplexField, IntensityFrame};
use crate::grid::GridAxis;
use crate::scalar::Scalar;
use crate::seed::rng_from_seed;

/// Wavelength in micrometres, focal length in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig<S> {
    pub wavelength_lambda: S,
    pub focal_length_f: S,
}

impl<S: Scalar> OpticalConfig<S> {
    pub fn new(wavelength_lambda: S, focal_length_f: S) -> Result<Self> {
        if !(wavelength_lambda > S::zero() && wavelength_lambda.is_finite()) {
            return Err(invalid("wavelength_lambda", "must be positive"));
        }
        if !(focal_length_f > S::zero() && focal_length_f.is_finite()) {
            return Err(invalid("focal_length_f", "must be positive"));
        }
        Ok(Self {
            wavelength_lambda,
            focal_length_f,
        })
    }

    /// `2 pi / lambda` in rad/um.
    pub fn wavenumber_k(&self) -> S {
        S::TAU() / self.wavelength_lambda
    }

    pub fn focal_length_um(&self) -> S {
        self.focal_length_f * S::of(1000.0)
    }

    /// Focal-plane axis conjugate to `input`: pitch `lambda F / (n * pitch)`.
    pub fn far_field_axis(&self, input: &GridAxis<S>) -> Result<GridAxis<S>> {
        let n = input.n_points();
        let pitch = self.wavelength_lambda * self.focal_length_um() / input.extent();
        GridAxis::centered(n, pitch)
    }
}

/// Complex transmission function of the object.
#[derive(Debug, Clone, PartialEq)]
pub enum TransmissionObject<S> {
    Identity,
    /// Periodic binary phase profile: `exp(i dphi)` for `0 <= x mod d <= a`,
    /// `1` for `a < x mod d < d`.
    SquarePhaseGrating {
        period_d: S,
        groove_width_a: S,
        phase_shift_dphi: S,
    },
    /// Real transmittance sampled on `axis`; zero outside it.
    AmplitudeMask { axis: GridAxis<S>, values: Vec<S> },
}

impl<S: Scalar> TransmissionObject<S> {
    pub fn square_phase_grating(period_d: S, groove_width_a: S, phase_shift_dphi: S) -> Result<Self> {
        if !(period_d > S::zero() && period_d.is_finite()) {
            return Err(invalid("period_d", "must be positive"));
        }
        if !(groove_width_a > S::zero() && groove_width_a < period_d) {
            return Err(invalid(
                "groove_width_a",
                format!("{groove_width_a} not inside (0, {period_d})"),
            ));
        }
        if !phase_shift_dphi.is_finite() {
            return Err(invalid("phase_shift_dphi", "not finite"));
        }
        Ok(Self::SquarePhaseGrating {
            period_d,
            groove_width_a,
            phase_shift_dphi,
        })
    }

    pub fn amplitude_mask(axis: GridAxis<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != axis.n_points() {
            return Err(Error::ShapeMismatch {
                expected: axis.n_points(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= S::zero() && *v <= S::one())) {
            return Err(invalid("amplitude_mask", "transmittance outside [0, 1]"));
        }
        Ok(Self::AmplitudeMask { axis, values })
    }

    /// Two slits of width `width` whose centres are `separation` apart,
    /// symmetric about the origin.
    pub fn double_slit(axis: GridAxis<S>, width: S, separation: S) -> Result<Self> {
        let half_w = width / S::of(2.0);
        let half_s = separation / S::of(2.0);
        let values = axis
            .coordinates()
            .map(|x| {
                if (x - half_s).abs() <= half_w || (x + half_s).abs() <= half_w {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        Self::amplitude_mask(axis, values)
    }

    /// `true` when `|T(x)| = 1` everywhere.
    pub fn is_pure_phase(&self) -> bool {
        match self {
            Self::Identity | Self::SquarePhaseGrating { .. } => true,
            Self::AmplitudeMask { values, .. } => values.iter().all(|v| *v == S::one()),
        }
    }
}

/// `T_obj(x)` at a single coordinate.
pub fn transmission_at<S: Scalar>(obj: &TransmissionObject<S>, x: S) -> Complex<S> {
    match obj {
        TransmissionObject::Identity => Complex::new(S::one(), S::zero()),
        TransmissionObject::SquarePhaseGrating {
            period_d,
            groove_width_a,
            phase_shift_dphi,
        } => {
            let r = x - (x / *period_d).floor() * *period_d;
            if r <= *groove_width_a {
                Complex::from_polar(S::one(), *phase_shift_dphi)
            } else {
                Complex::new(S::one(), S::zero())
            }
        }
        TransmissionObject::AmplitudeMask { axis, values } => match axis.index_of(x) {
            Some(i) => Complex::new(values[i], S::zero()),
            None => Complex::new(S::zero(), S::zero()),
        },
    }
}

/// Pointwise product with the object transmission.
pub fn apply_object<S: Scalar>(field: &ComplexField<S>, obj: &TransmissionObject<S>) -> ComplexField<S> {
    if let TransmissionObject::Identity = obj {
        return field.clone();
    }
    ComplexField {
        axis: field.axis,
        values: field
            .axis
            .coordinates()
            .zip(&field.values)
            .map(|(x, v)| v * transmission_at(obj, x))
            .collect(),
    }
}

/// Amplitude reflection and transmission of the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec<S> {
    pub r: Complex<S>,
    pub t: Complex<S>,
}

impl<S: Scalar> BeamSplitterSpec<S> {
    pub fn new(r: Complex<S>, t: Complex<S>) -> Result<Self> {
        let total = r.norm_sqr() + t.norm_sqr();
        if !(total <= S::one() + S::of(1e-12)) {
            return Err(invalid(
                "beam_splitter",
                format!("|r|^2 + |t|^2 = {total} exceeds 1"),
            ));
        }
        Ok(Self { r, t })
    }

    /// Lossless 50/50 splitter, `t = 1/sqrt 2`, `r = i/sqrt 2`.
    pub fn balanced() -> Self {
        let h = S::FRAC_1_SQRT_2();
        Self {
            r: Complex::new(S::zero(), h),
            t: Complex::new(h, S::zero()),
        }
    }

    /// `|r t|^2`, the prefactor of the cross-correlation.
    pub fn cross_gain(&self) -> S {
        (self.r * self.t).norm_sqr()
    }
}

impl<S: Scalar> Default for BeamSplitterSpec<S> {
    fn default() -> Self {
        Self::balanced()
    }
}

/// Classical copies `(t a, r a)`: test arm first, reference arm second.
pub fn split_beam<S: Scalar>(
    field: &ComplexField<S>,
    bs: &BeamSplitterSpec<S>,
) -> (ComplexField<S>, ComplexField<S>) {
    (field.scaled(bs.t), field.scaled(bs.r))
}

/// f-f lens: exact discrete Fourier transform between front and back focal
/// planes with kernel `exp(-i x x' k / F) / sqrt(n)`.
///
/// Both axes are centered; output sample `m` sits at `(m - n/2) lambda F /
/// (n pitch)`. The constant `(i lambda F)^-1` is dropped, so the total
/// intensity `sum |a|^2` is conserved.
#[derive(Clone)]
pub struct FourierLens<S: Scalar> {
    cfg: OpticalConfig<S>,
    input: GridAxis<S>,
    output: GridAxis<S>,
    fft: Arc<dyn Fft<S>>,
}

impl<S: Scalar> std::fmt::Debug for FourierLens<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierLens")
            .field("cfg", &self.cfg)
            .field("input", &self.input)
            .field("output", &self.output)
            .finish_non_exhaustive()
    }
}

impl<S: Scalar> FourierLens<S> {
    pub fn new(cfg: OpticalConfig<S>, input: GridAxis<S>) -> Result<Self> {
        let n = input.n_points();
        if n % 2 != 0 {
            return Err(invalid("n_points", "the lens transform needs an even grid"));
        }
        let centered = GridAxis::centered(n, input.pitch())?;
        if !centered.matches(&input) {
            return Err(Error::AxisMismatch(
                "lens input must be on a centered axis".into(),
            ));
        }
        let output = cfg.far_field_axis(&input)?;
        let fft = FftPlanner::new().plan_fft_forward(n);
        Ok(Self {
            cfg,
            input,
            output,
            fft,
        })
    }

    pub fn input_axis(&self) -> GridAxis<S> {
        self.input
    }

    pub fn output_axis(&self) -> GridAxis<S> {
        self.output
    }

    pub fn apply(&self, field: &ComplexField<S>) -> Result<ComplexField<S>> {
        self.input.ensure_matches(&field.axis)?;
        let n = self.input.n_points();
        let mut buf = field.values.clone();
        // Sample n/2 (x = 0) to bin 0, transform, and back.
        buf.rotate_left(n / 2);
        self.fft.process(&mut buf);
        buf.rotate_left(n / 2);
        let norm = S::one() / S::of_usize(n).sqrt();
        for v in buf.iter_mut() {
            *v = v.scale(norm);
        }
        Ok(ComplexField {
            axis: self.output,
            values: buf,
        })
    }
}

/// One-shot [`FourierLens`] application.
pub fn lens_far_field<S: Scalar>(
    field: &ComplexField<S>,
    cfg: &OpticalConfig<S>,
) -> Result<ComplexField<S>> {
    FourierLens::new(*cfg, field.axis)?.apply(field)
}

/// Pixelated intensity detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec<S> {
    /// Pixel size in micrometres; `None` means one pixel per field sample.
    pub pixel_pitch: Option<S>,
    pub add_shot_noise: bool,
    /// Photons per unit intensity when shot noise is enabled.
    pub shot_noise_scale: S,
}

impl<S: Scalar> Default for DetectorSpec<S> {
    fn default() -> Self {
        Self {
            pixel_pitch: None,
            add_shot_noise: false,
            shot_noise_scale: S::of(1000.0),
        }
    }
}

impl<S: Scalar> DetectorSpec<S> {
    pub fn with_pixel_pitch(pixel_pitch: S) -> Self {
        Self {
            pixel_pitch: Some(pixel_pitch),
            ..Self::default()
        }
    }

    /// Number of field samples per detector pixel.
    pub fn binning(&self, field_pitch: S) -> Result<usize> {
        let Some(pp) = self.pixel_pitch else {
            return Ok(1);
        };
        if !(pp > S::zero() && pp.is_finite()) {
            return Err(invalid("pixel_pitch", "must be positive"));
        }
        let ratio = pp / field_pitch;
        let rounded = ratio.round();
        if rounded < S::one() || ratio < S::of(0.99) {
            return Err(invalid(
                "pixel_pitch",
                format!("{pp} um is smaller than the field pitch {field_pitch} um"),
            ));
        }
        if ((ratio - rounded) / ratio).abs() > S::of(0.01) {
            return Err(invalid(
                "pixel_pitch",
                format!("pitch ratio {ratio} is not an integer within 1%"),
            ));
        }
        if self.add_shot_noise && !(self.shot_noise_scale > S::zero()) {
            return Err(invalid("shot_noise_scale", "must be positive"));
        }
        rounded
            .to_usize()
            .ok_or_else(|| invalid("pixel_pitch", "binning factor overflow"))
    }

    /// Axis of the detector pixels for a field on `field_axis`. Trailing
    /// samples that do not fill a whole pixel are dropped.
    pub fn pixel_axis(&self, field_axis: &GridAxis<S>) -> Result<GridAxis<S>> {
        let b = self.binning(field_axis.pitch())?;
        let n = field_axis.n_points() / b;
        let pitch = field_axis.pitch() * S::of_usize(b);
        let origin = field_axis.origin() + field_axis.pitch() * S::of_usize(b - 1) / S::of(2.0);
        GridAxis::new(n, pitch, origin)
    }
}

/// Box-averaged `|a|^2` per detector pixel, with optional Poisson noise
/// drawn from `seed`.
pub fn detect<S: Scalar>(
    field: &ComplexField<S>,
    det: &DetectorSpec<S>,
    seed: u64,
) -> Result<IntensityFrame<S>> {
    let b = det.binning(field.axis.pitch())?;
    let axis = det.pixel_axis(&field.axis)?;
    let inv_b = S::one() / S::of_usize(b);
    let mut values: Vec<S> = field
        .values
        .chunks_exact(b)
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<S>() * inv_b)
        .collect();
    if det.add_shot_noise {
        let mut rng = rng_from_seed(seed);
        let scale = det.shot_noise_scale.to_f64_lossy();
        for v in values.iter_mut() {
            let mean = v.to_f64_lossy() * scale;
            let count = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::Degenerate(format!("poisson mean {mean}: {e}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            *v = S::of(count / scale);
        }
    }
    IntensityFrame::new(axis, values)
}
