use gauss_quad::GaussLegendre;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridAxis;
use crate::optics::{OpticalConfig, TransmissionObject};
use crate::scalar::Scalar;

/// Binary phase grating: phase `dphi` over `[0, a]` of every period `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec<S> {
    pub period_d: S,
    pub groove_width_a: S,
    pub phase_shift_dphi: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groove_depth_delta: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refractive_index_n_g: Option<S>,
}

impl<S: Scalar> GratingSpec<S> {
    pub fn new(period_d: S, groove_width_a: S, phase_shift_dphi: S) -> Result<Self> {
        let g = Self {
            period_d,
            groove_width_a,
            phase_shift_dphi,
            groove_depth_delta: None,
            refractive_index_n_g: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grating whose phase step comes from an etched groove of depth `delta`.
    pub fn from_groove(period_d: S, groove_width_a: S, n_g: S, delta: S, lambda: S) -> Result<Self> {
        let mut g = Self::new(period_d, groove_width_a, phase_from_groove(n_g, delta, lambda))?;
        g.groove_depth_delta = Some(delta);
        g.refractive_index_n_g = Some(n_g);
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_d > S::zero() && self.period_d.is_finite()) {
            return Err(invalid("period_d", "must be positive"));
        }
        if !(self.groove_width_a > S::zero() && self.groove_width_a < self.period_d) {
            return Err(invalid(
                "groove_width_a",
                format!("must lie in (0, d = {})", self.period_d),
            ));
        }
        if !self.phase_shift_dphi.is_finite() {
            return Err(invalid("phase_shift_dphi", "must be finite"));
        }
        Ok(())
    }

    /// Checks that a stored groove depth reproduces `dphi` at `lambda`.
    pub fn check_groove(&self, lambda: S) -> Result<()> {
        if let (Some(delta), Some(n_g)) = (self.groove_depth_delta, self.refractive_index_n_g) {
            let want = phase_from_groove(n_g, delta, lambda);
            let tol = S::of(1e-12) * want.abs().max(S::one());
            if (want - self.phase_shift_dphi).abs() > tol {
                return Err(invalid(
                    "phase_shift_dphi",
                    format!("{} disagrees with groove depth ({want})", self.phase_shift_dphi),
                ));
            }
        }
        Ok(())
    }

    pub fn to_object(&self) -> Result<TransmissionObject<S>> {
        TransmissionObject::square_phase_grating(self.period_d, self.groove_width_a, self.phase_shift_dphi)
    }

    /// The grating as sampled on `axis`: the groove width becomes the
    /// number of samples inside `[0, a]` of one period times the pitch.
    pub fn sampled_on(&self, axis: &GridAxis<S>) -> Self {
        let d = self.period_d;
        let per_period = (d / axis.pitch()).round().to_usize().unwrap_or(0);
        if per_period == 0 || per_period > axis.n_points() {
            return *self;
        }
        let inside = axis
            .coordinates()
            .take(per_period)
            .filter(|&x| x - (x / d).floor() * d <= self.groove_width_a)
            .count();
        let mut g = *self;
        g.groove_width_a = S::of_usize(inside) * axis.pitch();
        if !(g.groove_width_a < d) {
            return *self;
        }
        g
    }
}

/// `(n_g - 1) 2 pi delta / lambda`.
pub fn phase_from_groove<S: Scalar>(n_g: S, delta: S, lambda: S) -> S {
    (n_g - S::one()) * S::TAU() * delta / lambda
}

fn sinc<S: Scalar>(x: S) -> S {
    if x.abs() < S::of(1e-8) {
        S::one() - x * x / S::of(6.0)
    } else {
        x.sin() / x
    }
}

/// Diffraction efficiency `|c_n|^2` of order `n`, closed form.
pub fn grating_efficiency<S: Scalar>(g: &GratingSpec<S>, n: i32) -> S {
    let s2 = (g.phase_shift_dphi / S::of(2.0)).sin().powi(2);
    let f = g.groove_width_a / g.period_d;
    if n == 0 {
        S::one() + s2 * S::of(4.0) * f * (f - S::one())
    } else {
        s2 * S::of(4.0) * f * f * sinc(S::PI() * S::of(n as f64) * f).powi(2)
    }
}

/// Complex Fourier coefficient `c_n = (1/d) int_0^d T(x) exp(-i 2 pi n x / d) dx`.
pub fn grating_coefficient<S: Scalar>(g: &GratingSpec<S>, n: i32) -> Complex<S> {
    let f = g.groove_width_a / g.period_d;
    let step = Complex::from_polar(S::one(), g.phase_shift_dphi) - Complex::new(S::one(), S::zero());
    if n == 0 {
        return Complex::new(S::one(), S::zero()) + step.scale(f);
    }
    let w = S::TAU() * S::of(n as f64);
    let tail = Complex::new(S::one(), S::zero()) - Complex::from_polar(S::one(), -w * f);
    step * tail / Complex::new(S::zero(), w)
}

/// `c_n` by composite Gauss-Legendre quadrature over `[0, a]` and `[a, d]`.
pub fn grating_coefficient_quadrature(g: &GratingSpec<f64>, n: i32) -> Complex<f64> {
    let rule = GaussLegendre::new(16).expect("degree 16 is valid");
    let d = g.period_d;
    let k = std::f64::consts::TAU * n as f64 / d;
    let t_in = Complex::from_polar(1.0, g.phase_shift_dphi);
    let panels = 2 + 2 * n.unsigned_abs() as usize;
    let mut total = Complex::new(0.0, 0.0);
    for (lo, hi, t) in [
        (0.0, g.groove_width_a, t_in),
        (g.groove_width_a, d, Complex::new(1.0, 0.0)),
    ] {
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let a = lo + h * p as f64;
            let b = a + h;
            let re = rule.integrate(a, b, |x| (t * Complex::from_polar(1.0, -k * x)).re);
            let im = rule.integrate(a, b, |x| (t * Complex::from_polar(1.0, -k * x)).im);
            total += Complex::new(re, im);
        }
    }
    total / d
}

/// Orders, strengths and focal-plane positions of a grating's spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionPrediction<S> {
    pub orders: Vec<i32>,
    pub eta: Vec<S>,
    /// Diffraction angles (rad).
    pub theta: Vec<S>,
    /// Focal-plane positions (mm).
    pub x: Vec<S>,
    /// Orders dropped because `|n| lambda / d >= 1`.
    #[serde(default)]
    pub evanescent: Vec<i32>,
}

impl<S: Scalar> DiffractionPrediction<S> {
    pub fn eta_of(&self, order: i32) -> Option<S> {
        self.orders.iter().position(|&o| o == order).map(|i| self.eta[i])
    }

    pub fn position_of(&self, order: i32) -> Option<S> {
        self.orders.iter().position(|&o| o == order).map(|i| self.x[i])
    }

    /// `eta_n / eta_0`.
    pub fn ratio_to_zero(&self, order: i32) -> Option<S> {
        Some(self.eta_of(order)? / self.eta_of(0)?)
    }
}

/// How order positions are mapped to the focal plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMapping {
    /// `x_n = n F lambda / d`.
    #[default]
    SmallAngle,
    /// `x_n = F tan(asin(n lambda / d))` for orders with `|n| lambda / d > 0.3`.
    ExactBeyond30Percent,
}

/// Focal-plane positions `x_n` (mm) for `orders`; evanescent orders are
/// returned separately.
pub fn peak_positions<S: Scalar>(
    cfg: &OpticalConfig<S>,
    d: S,
    orders: &[i32],
    mapping: AngleMapping,
) -> (Vec<(i32, S, S)>, Vec<i32>) {
    let mut kept = Vec::new();
    let mut evanescent = Vec::new();
    for &n in orders {
        let s = S::of(n as f64) * cfg.wavelength_lambda / d;
        if s.abs() >= S::one() {
            evanescent.push(n);
            continue;
        }
        let theta = s.asin();
        let x = match mapping {
            AngleMapping::ExactBeyond30Percent if s.abs() > S::of(0.3) => {
                cfg.focal_length_f * theta.tan()
            }
            _ => cfg.focal_length_f * s,
        };
        kept.push((n, theta, x));
    }
    (kept, evanescent)
}

/// Strengths for `|n| <= n_max` (closed form) with small-angle positions.
pub fn grating_coefficients<S: Scalar>(
    g: &GratingSpec<S>,
    cfg: &OpticalConfig<S>,
    n_max: u32,
) -> Result<DiffractionPrediction<S>> {
    g.validate()?;
    if n_max < 2 {
        return Err(invalid("n_max", "at least orders up to 2 are required"));
    }
    let orders: Vec<i32> = (-(n_max as i32)..=n_max as i32).collect();
    let (kept, evanescent) = peak_positions(cfg, g.period_d, &orders, AngleMapping::SmallAngle);
    Ok(DiffractionPrediction {
        orders: kept.iter().map(|k| k.0).collect(),
        eta: kept.iter().map(|k| grating_efficiency(g, k.0)).collect(),
        theta: kept.iter().map(|k| k.1).collect(),
        x: kept.iter().map(|k| k.2).collect(),
        evanescent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn transparent_plate_has_only_zero_order() {
        let g = GratingSpec::new(12.5, 4.4, 0.0).unwrap();
        assert_eq!(grating_efficiency(&g, 0), 1.0);
        for n in 1..6 {
            assert_eq!(grating_efficiency(&g, n), 0.0);
        }
    }

    #[test]
    fn closed_form_efficiency_matches_coefficient_modulus() {
        let g = GratingSpec::new(12.5, 4.2, 0.84 * PI).unwrap();
        for n in -6..=6 {
            assert_relative_eq!(
                grating_coefficient(&g, n).norm_sqr(),
                grating_efficiency(&g, n),
                max_relative = 1e-12,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let g = GratingSpec::new(12.5, 4.4, 0.71 * PI).unwrap();
        for n in -10..=10 {
            let q = grating_coefficient_quadrature(&g, n);
            assert!((q - grating_coefficient(&g, n)).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GratingSpec::new(12.5, 12.5, 1.0).is_err());
        assert!(GratingSpec::new(12.5, 0.0, 1.0).is_err());
        assert!(GratingSpec::new(-1.0, 0.5, 1.0).is_err());
        let cfg = OpticalConfig::new(0.532, 50.0).unwrap();
        let g = GratingSpec::new(12.5, 4.4, 1.0).unwrap();
        assert!(grating_coefficients(&g, &cfg, 1).is_err());
    }

    #[test]
    fn groove_depth_consistency() {
        let g = GratingSpec::from_groove(12.5, 4.4, 1.46, 0.5, 0.532).unwrap();
        assert!(g.check_groove(0.532).is_ok());
        assert!(g.check_groove(0.633).is_err());
        assert_eq!(phase_from_groove(1.0, 0.3, 0.5), 0.0);
        assert_eq!(phase_from_groove(1.5, 0.0, 0.5), 0.0);
    }

    #[test]
    fn evanescent_orders_are_excluded() {
        let cfg = OpticalConfig::new(0.532, 50.0).unwrap();
        let g = GratingSpec::new(1.0, 0.4, 1.0).unwrap();
        let p = grating_coefficients(&g, &cfg, 3).unwrap();
        assert_eq!(p.orders, vec![-1, 0, 1]);
        assert_eq!(p.evanescent, vec![-3, -2, 2, 3]);
        let (exact, _) = peak_positions(&cfg, 1.0, &[1], AngleMapping::ExactBeyond30Percent);
        let (small, _) = peak_positions(&cfg, 1.0, &[1], AngleMapping::SmallAngle);
        assert!(exact[0].2 > small[0].2);
    }

    #[test]
    fn sampled_groove_counts_samples() {
        let g = GratingSpec::new(12.5, 4.2, 1.0).unwrap();
        let axis = GridAxis::centered(1024, 12.5 / 32.0).unwrap();
        // Samples at 0, p, ..., 10p lie inside [0, 4.2]: 11 of 32.
        assert_relative_eq!(g.sampled_on(&axis).groove_width_a, 11.0 * 12.5 / 32.0);
    }
}
