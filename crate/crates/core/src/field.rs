//! Scalar fields on open cells, discrete upper gradients and Newtonian norms.

use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::error::{Error, Result};

/// Finite values indexed by open-cell slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

/// Nonnegative values indexed by open-cell slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    pub g: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParts {
    pub total: f64,
    pub lp_part: f64,
    pub energy_part: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub pass: bool,
    /// Smallest value of `Σ g ds - |u(start) - u(end)|` over the prefixes of the path.
    pub worst_slack: f64,
}

impl ScalarField {
    pub fn new(dom: &GridDomain, values: Vec<f64>) -> Result<Self> {
        let f = ScalarField { values };
        f.check(dom)?;
        Ok(f)
    }

    pub fn constant(dom: &GridDomain, v: f64) -> Self {
        ScalarField { values: vec![v; dom.n_open()] }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(dom: &GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        ScalarField { values: dom.open_cells().iter().map(|&c| f(dom.center(c))).collect() }
    }

    pub fn check(&self, dom: &GridDomain) -> Result<()> {
        if self.values.len() != dom.n_open() {
            return Err(Error::BadInput(format!(
                "field has {} values, domain has {} open cells",
                self.values.len(),
                dom.n_open()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("field values must be finite".into()));
        }
        Ok(())
    }

    /// Value at a grid cell, if it is open.
    pub fn at(&self, dom: &GridDomain, c: usize) -> Option<f64> {
        dom.slot(c).map(|s| self.values[s])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `g(c) = max |u(c) - u(n)| / dist(c, n)` over the open 8-neighbours of `c`.
pub fn upper_gradient(dom: &GridDomain, u: &ScalarField) -> Result<GradientField> {
    u.check(dom)?;
    let g = dom
        .open_cells()
        .iter()
        .zip(&u.values)
        .map(|(&c, &uc)| {
            dom.neighbors8(c)
                .map(|(n, d)| (uc - u.values[dom.slot(n).unwrap()]).abs() / d)
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(GradientField { g })
}

pub fn newtonian_norm(dom: &GridDomain, u: &ScalarField, p: f64) -> Result<NormParts> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::BadExponent(p));
    }
    let g = upper_gradient(dom, u)?;
    let w = dom.weights();
    let lp_part: f64 = u.values.iter().zip(w).map(|(v, w)| w * v.abs().powf(p)).sum();
    let energy_part: f64 = g.g.iter().zip(w).map(|(g, w)| w * g.powf(p)).sum();
    Ok(NormParts { total: (lp_part + energy_part).powf(1.0 / p), lp_part, energy_part })
}

/// Checks the upper-gradient inequality along an 8-connected path of open cells, using
/// the larger endpoint value of `g` on each step.
pub fn verify_upper_gradient_along_path(
    dom: &GridDomain,
    u: &ScalarField,
    g: &GradientField,
    path: &[usize],
) -> Result<PathCheck> {
    u.check(dom)?;
    if path.is_empty() {
        return Err(Error::BrokenPath(0));
    }
    let slot = |k: usize| dom.slot(path[k]).ok_or(Error::BrokenPath(k));
    let s0 = slot(0)?;
    let u0 = u.values[s0];
    let mut integral = 0.0;
    let mut worst = f64::INFINITY;
    let mut prev = s0;
    for k in 1..path.len() {
        let s = slot(k)?;
        let d = dom
            .neighbors8(path[k - 1])
            .find(|&(n, _)| n == path[k])
            .map(|(_, d)| d)
            .ok_or(Error::BrokenPath(k))?;
        integral += g.g[prev].max(g.g[s]) * d;
        worst = worst.min(integral - (u0 - u.values[s]).abs());
        prev = s;
    }
    if path.len() == 1 {
        worst = 0.0;
    }
    let scale = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(PathCheck { pass: worst >= -1e-12 * scale, worst_slack: worst })
}
