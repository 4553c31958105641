use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Uniform one-dimensional sampling grid. Lengths are in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis<S> {
    n_points: usize,
    pitch: S,
    origin: S,
}

impl<S: Scalar> GridAxis<S> {
    pub fn new(n_points: usize, pitch: S, origin: S) -> Result<Self> {
        if n_points < 2 {
            return Err(invalid("n_points", format!("{n_points} < 2")));
        }
        if !(pitch > S::zero()) || !pitch.is_finite() {
            return Err(invalid("pitch", format!("{pitch} is not a positive length")));
        }
        if !origin.is_finite() {
            return Err(invalid("origin", "not finite"));
        }
        Ok(Self {
            n_points,
            pitch,
            origin,
        })
    }

    /// Grid whose coordinates run symmetrically about zero, with sample
    /// `n_points / 2` sitting exactly at the origin.
    pub fn centered(n_points: usize, pitch: S) -> Result<Self> {
        let origin = -pitch * S::of_usize(n_points) / S::of(2.0);
        Self::new(n_points, pitch, origin)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn pitch(&self) -> S {
        self.pitch
    }

    #[inline]
    pub fn origin(&self) -> S {
        self.origin
    }

    #[inline]
    pub fn coordinate(&self, i: usize) -> S {
        self.origin + S::of_usize(i) * self.pitch
    }

    pub fn coordinates(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.n_points).map(move |i| self.coordinate(i))
    }

    /// Total covered length, `n_points * pitch`.
    pub fn extent(&self) -> S {
        S::of_usize(self.n_points) * self.pitch
    }

    /// Index of the sample nearest to `x`, or `None` when `x` lies more
    /// than half a pitch outside the grid.
    pub fn index_of(&self, x: S) -> Option<usize> {
        let f = ((x - self.origin) / self.pitch).round();
        let i = f.to_i64()?;
        if i < 0 || i as usize >= self.n_points {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Index of the sample at zero for a centered grid.
    pub fn center_index(&self) -> usize {
        self.n_points / 2
    }

    /// `true` when both axes sample the same points up to rounding.
    pub fn matches(&self, other: &Self) -> bool {
        let tol = S::of(1e-9);
        self.n_points == other.n_points
            && ((self.pitch - other.pitch).abs() <= tol * self.pitch)
            && ((self.origin - other.origin).abs() <= tol * self.pitch)
    }

    pub fn ensure_matches(&self, other: &Self) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::AxisMismatch(format!(
                "({} pts, pitch {}, origin {}) vs ({} pts, pitch {}, origin {})",
                self.n_points, self.pitch, self.origin, other.n_points, other.pitch, other.origin
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_axis_is_symmetric() {
        let ax = GridAxis::<f64>::centered(1024, 12.5 / 32.0).unwrap();
        assert_eq!(ax.coordinate(512), 0.0);
        assert_eq!(ax.coordinate(0), -200.0);
        assert_eq!(ax.index_of(0.0), Some(512));
        assert_eq!(ax.index_of(-200.2), None);
        assert_eq!(ax.index_of(199.7), Some(1023));
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridAxis::<f64>::centered(1, 1.0).is_err());
        assert!(GridAxis::<f64>::centered(8, 0.0).is_err());
        assert!(GridAxis::<f64>::new(8, -1.0, 0.0).is_err());
        assert!(GridAxis::<f32>::centered(8, f32::NAN).is_err());
    }
}
