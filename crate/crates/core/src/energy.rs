//! Convex edge energies and their bound-constrained minimization.
//!
//! The energy of a vector `x` of free values is
//! `Σ κ |x_a - x_b|^p + Σ κ |x_a - v|^p + Σ m_i |x_i|^p + constant`
//! over couplings between free values, couplings to fixed values `v`, and mass terms.
//! Minimization is a projected Newton method: the Hessian (regularized where it
//! degenerates) is solved on the inactive set by multigrid-preconditioned CG and the
//! step is backtracked along the projection arc until it satisfies the Armijo test.

use crate::linalg::{pcg, Amg, Csr};

#[derive(Clone, Debug, Default)]
pub struct EnergyProblem {
    pub p: f64,
    pub n: usize,
    /// `(a, b, κ)` couplings between free values.
    pub ff: Vec<(u32, u32, f64)>,
    /// `(a, v, κ)` couplings to a fixed value `v`.
    pub fx: Vec<(u32, f64, f64)>,
    /// Mass coefficients; empty when there is no mass term.
    pub mass: Vec<f64>,
    pub constant: f64,
    /// Grid position of each free value, used to build multigrid aggregates.
    pub pos: Vec<[i32; 2]>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Typical size of values, sets the Hessian regularization and step tolerance.
    pub scale: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Relative energy decrement below which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest change in any value (relative to `scale`) still allowed at convergence.
    pub step_tol: f64,
    /// Hessian regularization relative to `scale`.
    pub eps: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-8, max_iter: 200, step_tol: 1e-9, eps: 1e-9 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct NewtonReport {
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rel_decrement: f64,
    pub cg_iterations: usize,
    /// Energy after each accepted step, starting with the initial energy.
    pub history: Vec<f64>,
}

#[inline]
fn powp(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.abs().powf(p)
    }
}

/// Derivative of `|t|^p`.
#[inline]
fn dpow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        2.0 * t
    } else if t == 0.0 {
        0.0
    } else {
        p * t.abs().powf(p - 1.0) * t.signum()
    }
}

/// Curvature of `|t|^p` in the Newton model, with `t^2` replaced by `t^2 + eps^2`.
/// With `secant` set and `p < 2` the secant weight `p |t|^(p-2)` is used instead: it
/// exceeds the second derivative, so the model majorizes the term. Plain Newton maps `t`
/// to `t (p-2)/(p-1)`, which for `p < 2` jumps across zero, so terms that just changed
/// sign are switched to the secant weight.
#[inline]
fn d2pow(t: f64, p: f64, eps: f64, secant: bool) -> f64 {
    if p == 2.0 {
        2.0
    } else {
        let c = if secant { (p - 1.0).max(1.0) } else { p - 1.0 };
        p * c * (t * t + eps * eps).powf(0.5 * (p - 2.0))
    }
}

impl EnergyProblem {
    pub fn energy(&self, x: &[f64]) -> f64 {
        let p = self.p;
        let mut e = self.constant;
        for &(a, b, k) in &self.ff {
            e += k * powp(x[a as usize] - x[b as usize], p);
        }
        for &(a, v, k) in &self.fx {
            e += k * powp(x[a as usize] - v, p);
        }
        for (m, xi) in self.mass.iter().zip(x) {
            e += m * powp(*xi, p);
        }
        e
    }

    pub fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let p = self.p;
        g.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, k) in &self.ff {
            let d = k * dpow(x[a as usize] - x[b as usize], p);
            g[a as usize] += d;
            g[b as usize] -= d;
        }
        for &(a, v, k) in &self.fx {
            g[a as usize] += k * dpow(x[a as usize] - v, p);
        }
        for (i, m) in self.mass.iter().enumerate() {
            g[i] += m * dpow(x[i], p);
        }
    }

    fn project(&self, x: &mut [f64]) {
        if let Some(l) = &self.lower {
            x.iter_mut().zip(l).for_each(|(v, l)| *v = v.max(*l));
        }
        if let Some(u) = &self.upper {
            x.iter_mut().zip(u).for_each(|(v, u)| *v = v.min(*u));
        }
    }

    /// Regularized Hessian restricted to the values with `map[i] != u32::MAX`.
    fn hessian(&self, x: &[f64], eps: f64, map: &[u32], nf: usize, secant: &[bool]) -> Csr {
        let p = self.p;
        let mut diag = vec![0.0; nf];
        let mut off = Vec::with_capacity(self.ff.len());
        let (sf, rest) = secant.split_at(self.ff.len());
        let (sx, sm) = rest.split_at(self.fx.len());
        for (e, &(a, b, k)) in self.ff.iter().enumerate() {
            let hv = k * d2pow(x[a as usize] - x[b as usize], p, eps, sf[e]);
            let (ia, ib) = (map[a as usize], map[b as usize]);
            if ia != u32::MAX {
                diag[ia as usize] += hv;
            }
            if ib != u32::MAX {
                diag[ib as usize] += hv;
            }
            if ia != u32::MAX && ib != u32::MAX {
                off.push((ia, ib, -hv));
            }
        }
        for (e, &(a, v, k)) in self.fx.iter().enumerate() {
            let ia = map[a as usize];
            if ia != u32::MAX {
                diag[ia as usize] += k * d2pow(x[a as usize] - v, p, eps, sx[e]);
            }
        }
        for (i, m) in self.mass.iter().enumerate() {
            let ia = map[i];
            if ia != u32::MAX {
                diag[ia as usize] += m * d2pow(x[i], p, eps, sm[i]);
            }
        }
        // Values coupled to nothing keep a unit diagonal so the system stays definite.
        for d in diag.iter_mut() {
            if *d <= 0.0 {
                *d = 1.0;
            }
        }
        Csr::from_couplings(&diag, &off)
    }

    fn mark_sign_changes(&self, x: &[f64], xn: &[f64], flags: &mut [bool]) {
        let flip = |a: f64, b: f64| a * b < 0.0;
        let mut k = 0;
        for &(a, b, _) in &self.ff {
            let (a, b) = (a as usize, b as usize);
            flags[k] = flip(x[a] - x[b], xn[a] - xn[b]);
            k += 1;
        }
        for &(a, v, _) in &self.fx {
            flags[k] = flip(x[a as usize] - v, xn[a as usize] - v);
            k += 1;
        }
        for i in 0..self.mass.len() {
            flags[k] = flip(x[i], xn[i]);
            k += 1;
        }
    }

    /// Minimizes the energy from `x`, keeping it inside the bounds.
    pub fn minimize(&self, x: &mut [f64], opts: &NewtonOptions) -> NewtonReport {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let scale = if self.scale > 0.0 { self.scale } else { 1.0 };
        let eps = opts.eps * scale;
        let step_tol = opts.step_tol * scale;
        self.project(x);
        let mut e = self.energy(x);
        let mut rep = NewtonReport { energy: e, history: vec![e], rel_decrement: f64::INFINITY, ..Default::default() };
        if n == 0 {
            rep.converged = true;
            rep.rel_decrement = 0.0;
            return rep;
        }
        let mut g = vec![0.0; n];
        let mut map = vec![u32::MAX; n];
        let mut xn = vec![0.0; n];
        let mut forcing: f64 = 1e-4;
        let mut secant = vec![false; self.ff.len() + self.fx.len() + self.mass.len()];
        for it in 0..opts.max_iter {
            self.gradient(x, &mut g);
            let mut free = Vec::with_capacity(n);
            for i in 0..n {
                let at_lo = self.lower.as_ref().is_some_and(|l| x[i] <= l[i] + 1e-14 * scale && g[i] > 0.0);
                let at_hi = self.upper.as_ref().is_some_and(|u| x[i] >= u[i] - 1e-14 * scale && g[i] < 0.0);
                if at_lo || at_hi {
                    map[i] = u32::MAX;
                } else {
                    map[i] = free.len() as u32;
                    free.push(i as u32);
                }
            }
            let mut d = vec![0.0; n];
            if !free.is_empty() {
                let h = self.hessian(x, eps, &map, free.len(), &secant);
                let pos: Vec<[i32; 2]> = free.iter().map(|&i| self.pos[i as usize]).collect();
                let rhs: Vec<f64> = free.iter().map(|&i| -g[i as usize]).collect();
                let mut amg = Amg::new(h.clone(), &pos);
                amg.omega_c = 1.7;
                let mut df = vec![0.0; free.len()];
                let rtol = if self.p == 2.0 { 1e-13 } else { forcing.clamp(1e-12, 1e-3) };
                let st = pcg(&h, &rhs, &mut df, &mut amg, rtol, 400);
                rep.cg_iterations += st.iterations;
                for (k, &i) in free.iter().enumerate() {
                    d[i as usize] = df[k];
                }
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut en = e;
            let mut max_step = 0.0f64;
            for _ in 0..60 {
                for i in 0..n {
                    xn[i] = x[i] + alpha * d[i];
                }
                self.project(&mut xn);
                en = self.energy(&xn);
                let pred: f64 = (0..n).map(|i| -g[i] * (xn[i] - x[i])).sum();
                if en <= e - 1e-4 * pred || (pred.abs() <= 1e-14 * e.abs() && en <= e) {
                    accepted = true;
                    max_step = (0..n).map(|i| (xn[i] - x[i]).abs()).fold(0.0, f64::max);
                    break;
                }
                if pred.abs() <= 1e-14 * e.abs() {
                    break;
                }
                alpha *= 0.5;
            }
            rep.iterations = it + 1;
            if !accepted {
                // No descent along the projected Newton arc: the iterate is stationary
                // up to round-off.
                rep.rel_decrement = 0.0;
                rep.converged = true;
                break;
            }
            let rel = (e - en).max(0.0) / e.abs().max(1e-300);
            if self.p < 2.0 {
                self.mark_sign_changes(x, &xn, &mut secant);
            }
            x.copy_from_slice(&xn);
            e = en;
            rep.history.push(e);
            rep.rel_decrement = rel;
            forcing = rel.sqrt() * 1e-2;
            if rel < opts.tol && max_step <= step_tol.max(1e-3 * scale * rel.sqrt()) {
                rep.converged = true;
                break;
            }
            if e == 0.0 {
                rep.rel_decrement = 0.0;
                rep.converged = true;
                break;
            }
        }
        rep.energy = e;
        rep
    }
}
