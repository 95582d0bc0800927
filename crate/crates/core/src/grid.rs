use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell grid. Cell `(i, j)` covers `[x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]`
/// and is addressed linearly as `j * nx + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::BadParams(format!("cell size h = {h} must be positive")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::BadParams("grid needs at least one cell".into()));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::BadParams("grid origin must be finite".into()));
        }
        Ok(Self { origin, h, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    #[inline]
    pub fn center_ij(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.ij(c);
        self.center_ij(i, j)
    }

    /// Lower-left corner of cell `(i, j)`.
    #[inline]
    pub fn corner_ij(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Cell containing the point, with half-open cells `[a, a + h)`.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let fx = ((p[0] - self.origin[0]) / self.h + 1e-9).floor();
        let fy = ((p[1] - self.origin[1]) / self.h + 1e-9).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(self.index(fx as usize, fy as usize))
    }

    /// Cell whose center is nearest to the point.
    pub fn nearest(&self, p: [f64; 2]) -> usize {
        let fx = ((p[0] - self.origin[0]) / self.h - 0.5).round();
        let fy = ((p[1] - self.origin[1]) / self.h - 0.5).round();
        let i = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        self.index(i, j)
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.center(a), self.center(b));
        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_indices_round_trip() {
        let g = GridSpec::new([-1.0, 2.0], 0.25, 8, 5).unwrap();
        for c in 0..g.len() {
            let (i, j) = g.ij(c);
            assert_eq!(g.index(i, j), c);
            assert_eq!(g.locate(g.center(c)), Some(c));
            assert_eq!(g.nearest(g.center(c)), c);
        }
        assert_eq!(g.center_ij(0, 0), [-0.875, 2.125]);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(GridSpec::new([0.0, 0.0], 0.0, 1, 1).is_err());
        assert!(GridSpec::new([0.0, 0.0], 0.1, 0, 1).is_err());
    }
}
