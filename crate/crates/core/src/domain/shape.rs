//! Continuum descriptions of recipe domains and their rasterization.
//!
//! The outer region is open; a cell belongs to it when its closed square does (up to a
//! tolerance of `1e-9 h`, so cells flush with the boundary count as inside). Removed
//! sets are closed. A cell is walled off when its half-open square `[x, x+h) x [y, y+h)`
//! meets a removed set, so a segment lying on a grid line becomes exactly one cell thick.

use crate::grid::GridSpec;

#[derive(Clone, Debug)]
pub(crate) enum Outer {
    /// Open rectangle `(x0, x1) x (y0, y1)`.
    Rect([f64; 4]),
    /// Open disc.
    Disc { c: [f64; 2], r: f64 },
    /// `0 < x < 1, 0 < y < x^beta`.
    Cusp { beta: f64 },
}

/// A closed arc of points at distance `rho` from the square `q`, restricted to the half
/// plane `x >= q.x0` (`open_left`) or `x <= q.x1`, optionally thickened by `pad`.
#[derive(Clone, Debug)]
pub(crate) struct Arc {
    pub q: [f64; 4],
    pub rho: f64,
    pub open_left: bool,
    pub pad: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum Removed {
    /// Closed rectangle `[x0, x1] x [y0, y1]`; degenerate rectangles are segments.
    Rect([f64; 4]),
    Arc(Arc),
}

#[derive(Clone, Debug)]
pub(crate) struct Shape {
    pub outer: Outer,
    pub removed: Vec<Removed>,
}

fn rect_rect_dist(a: [f64; 4], b: [f64; 4]) -> f64 {
    let dx = (b[0] - a[1]).max(a[0] - b[1]).max(0.0);
    let dy = (b[2] - a[3]).max(a[2] - b[3]).max(0.0);
    dx.hypot(dy)
}

fn point_rect_dist(p: [f64; 2], q: [f64; 4]) -> f64 {
    let dx = (q[0] - p[0]).max(p[0] - q[1]).max(0.0);
    let dy = (q[2] - p[1]).max(p[1] - q[3]).max(0.0);
    dx.hypot(dy)
}

impl Outer {
    pub fn bbox(&self) -> [f64; 4] {
        match *self {
            Outer::Rect(r) => r,
            Outer::Disc { c, r } => [c[0] - r, c[0] + r, c[1] - r, c[1] + r],
            Outer::Cusp { .. } => [0.0, 1.0, 0.0, 1.0],
        }
    }

    fn contains_cell(&self, x0: f64, y0: f64, h: f64, eps: f64) -> bool {
        let (x1, y1) = (x0 + h, y0 + h);
        match *self {
            Outer::Rect(r) => x0 >= r[0] - eps && x1 <= r[1] + eps && y0 >= r[2] - eps && y1 <= r[3] + eps,
            Outer::Disc { c, r } => [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
                .iter()
                .all(|&(x, y)| (x - c[0]).hypot(y - c[1]) <= r + eps),
            Outer::Cusp { beta } => {
                x0 >= -eps && x1 <= 1.0 + eps && y0 >= -eps && y1 <= x0.max(0.0).powf(beta) + eps
            }
        }
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        match *self {
            Outer::Rect(r) => p[0] > r[0] && p[0] < r[1] && p[1] > r[2] && p[1] < r[3],
            Outer::Disc { c, r } => (p[0] - c[0]).hypot(p[1] - c[1]) < r,
            Outer::Cusp { beta } => p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < p[0].powf(beta),
        }
    }
}

impl Arc {
    fn bbox(&self) -> [f64; 4] {
        let e = self.rho + self.pad;
        [self.q[0] - e, self.q[1] + e, self.q[2] - e, self.q[3] + e]
    }

    /// Whether the closed rectangle meets the (thickened) arc.
    fn meets(&self, cell: [f64; 4], eps: f64) -> bool {
        let mut c = [cell[0] - self.pad, cell[1] + self.pad, cell[2] - self.pad, cell[3] + self.pad];
        if self.open_left {
            c[0] = c[0].max(self.q[0]);
        } else {
            c[1] = c[1].min(self.q[1]);
        }
        if c[0] > c[1] {
            return false;
        }
        let lo = rect_rect_dist(c, self.q);
        let hi = [(c[0], c[2]), (c[1], c[2]), (c[0], c[3]), (c[1], c[3])]
            .iter()
            .map(|&(x, y)| point_rect_dist([x, y], self.q))
            .fold(0.0, f64::max);
        lo <= self.rho + eps && hi >= self.rho - eps
    }

    fn dist_to_point(&self, p: [f64; 2]) -> Option<f64> {
        let inside = if self.open_left { p[0] >= self.q[0] } else { p[0] <= self.q[1] };
        inside.then(|| (point_rect_dist(p, self.q) - self.rho).abs())
    }
}

impl Removed {
    fn bbox(&self) -> [f64; 4] {
        match self {
            Removed::Rect(r) => *r,
            Removed::Arc(a) => a.bbox(),
        }
    }

    fn meets_cell(&self, x0: f64, y0: f64, h: f64, eps: f64) -> bool {
        match self {
            Removed::Rect(r) => x0 <= r[1] + eps && r[0] < x0 + h - eps && y0 <= r[3] + eps && r[2] < y0 + h - eps,
            Removed::Arc(a) => a.meets([x0, x0 + h, y0, y0 + h], eps),
        }
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        match self {
            Removed::Rect(r) => p[0] >= r[0] && p[0] <= r[1] && p[1] >= r[2] && p[1] <= r[3],
            Removed::Arc(a) => a.dist_to_point(p).is_some_and(|d| d <= a.pad),
        }
    }
}

impl Shape {
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.outer.contains_point(p) && !self.removed.iter().any(|r| r.contains_point(p))
    }

    /// Grid with one closed ring of padding around the outer bounding box.
    pub fn grid(&self, h: f64) -> GridSpec {
        let b = self.outer.bbox();
        let nx = ((b[1] - b[0]) / h - 1e-9).ceil() as usize + 2;
        let ny = ((b[3] - b[2]) / h - 1e-9).ceil() as usize + 2;
        GridSpec { origin: [b[0] - h, b[2] - h], h, nx, ny }
    }

    pub fn rasterize(&self, spec: &GridSpec) -> Vec<bool> {
        let h = spec.h;
        let eps = 1e-9 * h;
        let mut mask = vec![false; spec.len()];
        for j in 1..spec.ny - 1 {
            for i in 1..spec.nx - 1 {
                let p = spec.corner_ij(i, j);
                mask[spec.index(i, j)] = self.outer.contains_cell(p[0], p[1], h, eps);
            }
        }
        for r in &self.removed {
            let b = r.bbox();
            let lo_i = (((b[0] - spec.origin[0]) / h).floor() - 2.0).max(0.0) as usize;
            let lo_j = (((b[2] - spec.origin[1]) / h).floor() - 2.0).max(0.0) as usize;
            let hi_i = ((((b[1] - spec.origin[0]) / h).ceil() + 2.0).max(0.0) as usize).min(spec.nx - 1);
            let hi_j = ((((b[3] - spec.origin[1]) / h).ceil() + 2.0).max(0.0) as usize).min(spec.ny - 1);
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    let c = spec.index(i, j);
                    if mask[c] {
                        let p = spec.corner_ij(i, j);
                        if r.meets_cell(p[0], p[1], h, eps) {
                            mask[c] = false;
                        }
                    }
                }
            }
        }
        mask
    }
}
