use crate::error::{Error, Result};

/// Uniform 1-D grid with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    min: f64,
    max: f64,
    count: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Parameter("grid endpoints must be finite".into()));
        }
        if min >= max {
            return Err(Error::Parameter(format!(
                "grid min {min} must be below max {max}"
            )));
        }
        if count < 2 {
            return Err(Error::Parameter(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        Ok(Self { min, max, count })
    }

    /// Grid on [−half_width, +half_width].
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        Self::new(-half_width, half_width, count)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Symmetric about 0 within rounding of the span.
    pub fn is_symmetric(&self) -> bool {
        (self.min + self.max).abs() <= 1e-12 * self.span()
    }

    /// Index of the grid point closest to `x`.
    pub fn index_near(&self, x: f64) -> usize {
        let raw = ((x - self.min) / self.spacing()).round();
        (raw.max(0.0) as usize).min(self.count - 1)
    }

    /// Index holding exactly 0 (used by kernel grids that must contain the
    /// origin), if one exists.
    pub fn index_of_zero(&self) -> Option<usize> {
        let i = self.index_near(0.0);
        (self.point(i).abs() <= 1e-12 * self.span()).then_some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_points() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(g.is_symmetric());
        assert_eq!(g.index_of_zero(), Some(2));
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid1D::new(1.0, 1.0, 4).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::symmetric(-2.0, 4).is_err());
    }

    #[test]
    fn even_count_has_no_zero_point() {
        let g = Grid1D::symmetric(1.0, 4).unwrap();
        assert_eq!(g.index_of_zero(), None);
    }
}
