//! Discrete p-harmonic Dirichlet and obstacle problems, and randomized checks of the
//! superminimizer and superharmonic properties.
//!
//! The energy is `Σ κ_e |Δ_e u|^p` over the sides shared by two cells. A side between
//! open cells `a, b` carries `κ = (w_a + w_b) / (2 h^p)`; a side between an open cell
//! `a` and a boundary vertex carries `κ = w_a / h^p` and compares `u(a)` with the boundary
//! value attached to that side. For `u = x` this counts each horizontal difference once,
//! so the energy is `Σ w (|∂_x u|^p + |∂_y u|^p)` and equals `∫ |∇u|^2` when `p = 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::energy::{EnergyProblem, NewtonOptions, NewtonReport};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// The sides between open cells and boundary vertices, grouped by open-cell slot in the
/// order left, right, down, up.
#[derive(Clone, Debug)]
pub struct BoundaryEdges {
    /// `(slot, boundary vertex)` per side.
    pub edges: Vec<(u32, u32)>,
    offset: Vec<u32>,
}

impl BoundaryEdges {
    pub fn new(dom: &GridDomain) -> Self {
        let mut edges = Vec::new();
        let mut offset = Vec::with_capacity(dom.n_open() + 1);
        for (s, &c) in dom.open_cells().iter().enumerate() {
            offset.push(edges.len() as u32);
            for n in dom.neighbors4(c) {
                if !dom.is_open(n) {
                    edges.push((s as u32, n as u32));
                }
            }
        }
        offset.push(edges.len() as u32);
        BoundaryEdges { edges, offset }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Indices of the sides of the open cell with the given slot.
    pub fn of_slot(&self, slot: usize) -> std::ops::Range<usize> {
        self.offset[slot] as usize..self.offset[slot + 1] as usize
    }

    /// Index of the side between the open cell `slot` and the boundary vertex `v`.
    pub fn find(&self, slot: usize, v: usize) -> Option<usize> {
        self.of_slot(slot).find(|&e| self.edges[e].1 as usize == v)
    }
}

/// Boundary values, either one per boundary vertex (indexed by boundary slot) or one per
/// boundary side (indexed as in [`BoundaryEdges`]). Per-side values let the two sides of a
/// slit carry different data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryData {
    Vertex(Vec<f64>),
    Edge(Vec<f64>),
}

impl BoundaryData {
    /// Samples `f` at the centers of the boundary vertices.
    pub fn from_fn(dom: &GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        BoundaryData::Vertex(dom.boundary_vertices().iter().map(|&b| f(dom.center(b))).collect())
    }

    pub fn constant(dom: &GridDomain, v: f64) -> Self {
        BoundaryData::Vertex(vec![v; dom.boundary_vertices().len()])
    }

    pub fn edge_values(&self, dom: &GridDomain, be: &BoundaryEdges) -> Result<Vec<f64>> {
        let vals = match self {
            BoundaryData::Vertex(v) => {
                if v.len() != dom.boundary_vertices().len() {
                    return Err(Error::BadInput(format!(
                        "{} vertex values for {} boundary vertices",
                        v.len(),
                        dom.boundary_vertices().len()
                    )));
                }
                be.edges.iter().map(|&(_, b)| v[dom.boundary_slot(b as usize).unwrap()]).collect()
            }
            BoundaryData::Edge(v) => {
                if v.len() != be.len() {
                    return Err(Error::BadInput(format!("{} edge values for {} boundary sides", v.len(), be.len())));
                }
                v.clone()
            }
        };
        if vals.iter().any(|x: &f64| !x.is_finite()) {
            return Err(Error::BadInput("boundary data must be finite".into()));
        }
        Ok(vals)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-8, max_iter: 50000 }
    }
}

#[derive(Clone, Debug)]
pub struct DirichletProblem<'a> {
    pub dom: &'a GridDomain,
    pub p: f64,
    pub data: BoundaryData,
    pub opts: SolveOptions,
}

#[derive(Clone, Debug)]
pub struct ObstacleProblem<'a> {
    pub dirichlet: DirichletProblem<'a>,
    /// `None` stands for the obstacle `-∞`.
    pub psi: Option<ScalarField>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rel_decrement: f64,
    pub max_constraint_violation: f64,
    pub monotone_energy: bool,
    /// Largest `|∂E/∂u(c)| / w(c)` over cells not held by the obstacle.
    pub residual: f64,
    pub cg_iterations: usize,
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if (1.1..=16.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

fn cell_pos(dom: &GridDomain, c: usize) -> [i32; 2] {
    let (i, j) = dom.spec().ij(c);
    [i as i32, j as i32]
}

/// Energy over the open cells with the given per-side boundary values.
pub(crate) fn dirichlet_energy(dom: &GridDomain, p: f64, be: &BoundaryEdges, vals: &[f64]) -> EnergyProblem {
    let hp = dom.h().powf(p);
    let w = dom.weights();
    let nx = dom.spec().nx;
    let mut ff = Vec::with_capacity(2 * dom.n_open());
    for (s, &c) in dom.open_cells().iter().enumerate() {
        for n in [c + 1, c + nx] {
            if let Some(t) = dom.slot(n) {
                ff.push((s as u32, t as u32, 0.5 * (w[s] + w[t]) / hp));
            }
        }
    }
    let fx = be.edges.iter().zip(vals).map(|(&(s, _), &v)| (s, v, w[s as usize] / hp)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    EnergyProblem {
        p,
        n: dom.n_open(),
        ff,
        fx,
        pos: dom.open_cells().iter().map(|&c| cell_pos(dom, c)).collect(),
        scale: if scale > 0.0 { scale } else { 1.0 },
        ..Default::default()
    }
}

/// Minimizes `prob` from `x`, warm-starting from the quadratic problem when `p != 2`.
pub(crate) fn minimize_with_warm_start(prob: &mut EnergyProblem, x: &mut [f64], opts: &SolveOptions) -> NewtonReport {
    let newton = NewtonOptions { tol: opts.tol, max_iter: opts.max_iter, ..Default::default() };
    if prob.p != 2.0 {
        let p = prob.p;
        prob.p = 2.0;
        prob.minimize(x, &NewtonOptions { tol: 1e-12, max_iter: 50, ..newton });
        prob.p = p;
    }
    prob.minimize(x, &newton)
}

fn solve_impl(prob: &DirichletProblem, psi: Option<&ScalarField>) -> Result<(ScalarField, SolveReport)> {
    let dom = prob.dom;
    check_p(prob.p)?;
    let be = BoundaryEdges::new(dom);
    if be.is_empty() {
        return Err(Error::NoBoundary);
    }
    let vals = prob.data.edge_values(dom, &be)?;
    let mut ep = dirichlet_energy(dom, prob.p, &be, &vals);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lower = vec![lo; dom.n_open()];
    if let Some(psi) = psi {
        psi.check(dom)?;
        for (l, &q) in lower.iter_mut().zip(&psi.values) {
            *l = l.max(q);
            hi = hi.max(q);
        }
    }
    // The minimizer lies between the data bounds (truncation lowers the energy), so the
    // bounds only guard against round-off.
    ep.upper = Some(vec![hi; dom.n_open()]);
    ep.lower = Some(lower.clone());
    let mut x = lower.clone();
    let rep = minimize_with_warm_start(&mut ep, &mut x, &prob.opts);
    let mut g = vec![0.0; x.len()];
    ep.gradient(&x, &mut g);
    let w = dom.weights();
    let tol = 1e-9 * ep.scale;
    let residual = (0..x.len())
        .filter(|&i| psi.is_none_or(|q| x[i] > q.values[i] + tol))
        .map(|i| g[i].abs() / w[i])
        .fold(0.0, f64::max);
    let violation = psi.map_or(0.0, |q| q.values.iter().zip(&x).map(|(q, u)| (q - u).max(0.0)).fold(0.0, f64::max));
    let report = SolveReport {
        energy: rep.energy,
        iterations: rep.iterations,
        converged: rep.converged,
        rel_decrement: rep.rel_decrement,
        max_constraint_violation: violation,
        monotone_energy: rep.history.windows(2).all(|w| w[1] <= w[0]),
        residual,
        cg_iterations: rep.cg_iterations,
    };
    Ok((ScalarField { values: x }, report))
}

/// The discrete energy minimized by [`solve_dirichlet`], as a function of the values on
/// the open cells in slot order.
pub fn energy_problem(prob: &DirichletProblem) -> Result<EnergyProblem> {
    check_p(prob.p)?;
    let be = BoundaryEdges::new(prob.dom);
    let vals = prob.data.edge_values(prob.dom, &be)?;
    Ok(dirichlet_energy(prob.dom, prob.p, &be, &vals))
}

pub fn solve_dirichlet(prob: &DirichletProblem) -> Result<(ScalarField, SolveReport)> {
    solve_impl(prob, None)
}

/// Minimizes the Dirichlet energy over `u >= ψ`. The class is empty when the obstacle
/// exceeds the boundary data at every boundary side.
pub fn solve_obstacle(prob: &ObstacleProblem) -> Result<(ScalarField, SolveReport)> {
    let Some(psi) = &prob.psi else {
        return solve_dirichlet(&prob.dirichlet);
    };
    let dom = prob.dirichlet.dom;
    check_p(prob.dirichlet.p)?;
    psi.check(dom)?;
    let be = BoundaryEdges::new(dom);
    if be.is_empty() {
        return Err(Error::NoBoundary);
    }
    let vals = prob.dirichlet.data.edge_values(dom, &be)?;
    let scale = vals.iter().chain(&psi.values).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if be.edges.iter().zip(&vals).all(|(&(s, _), &f)| psi.values[s as usize] > f + 1e-9 * scale) {
        return Err(Error::KEmpty);
    }
    solve_impl(&prob.dirichlet, Some(psi))
}

/// Energy of `u` over the sides between open cells only.
pub fn interior_energy(dom: &GridDomain, u: &ScalarField, p: f64) -> f64 {
    let be = BoundaryEdges { edges: vec![], offset: vec![0; dom.n_open() + 1] };
    dirichlet_energy(dom, p, &be, &[]).energy(&u.values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperminimizerReport {
    pub pass: bool,
    pub trials: usize,
    /// Smallest `energy(u + φ) - energy(u)` observed.
    pub worst_margin: f64,
    pub seed: u64,
}

/// Random nonnegative bump supported on open cells away from the boundary.
fn random_bump(dom: &GridDomain, rng: &mut ChaCha8Rng, scale: f64, interior: &[bool]) -> Vec<f64> {
    let cells = dom.open_cells();
    let h = dom.h();
    let spec = dom.spec();
    let diam = ((spec.nx as f64) * h).max((spec.ny as f64) * h);
    let center = dom.center(cells[rng.random_range(0..cells.len())]);
    let r = rng.random_range(2.0 * h..(0.15 * diam).max(3.0 * h));
    let height = scale * 10f64.powf(rng.random_range(-4.0..-2.0));
    let mut phi = vec![0.0; cells.len()];
    for c in dom.cells_in_disc(center, r) {
        let s = dom.slot(c).unwrap();
        if interior[s] {
            let q = dom.center(c);
            let t = 1.0 - ((q[0] - center[0]).powi(2) + (q[1] - center[1]).powi(2)).sqrt() / r;
            phi[s] = height * t.max(0.0).powi(2);
        }
    }
    phi
}

/// Compares `energy(u)` with `energy(u + φ)` for random bumps `φ >= 0`, and also with
/// `energy(u - φ)` when `both_signs` is set (the minimizer test).
pub fn check_superminimizer(
    dom: &GridDomain,
    u: &ScalarField,
    p: f64,
    trials: usize,
    seed: u64,
    both_signs: bool,
) -> Result<SuperminimizerReport> {
    u.check(dom)?;
    if !(p > 1.0) {
        return Err(Error::BadExponent(p));
    }
    let interior: Vec<bool> = dom
        .open_cells()
        .iter()
        .map(|&c| dom.neighbors4(c).iter().all(|&n| dom.is_open(n)))
        .collect();
    let scale = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let base = interior_energy(dom, u, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut v = u.clone();
    for _ in 0..trials {
        let phi = random_bump(dom, &mut rng, scale, &interior);
        let signs: &[f64] = if both_signs { &[1.0, -1.0] } else { &[1.0] };
        for &sg in signs {
            for (k, x) in v.values.iter_mut().enumerate() {
                *x = u.values[k] + sg * phi[k];
            }
            worst = worst.min(interior_energy(dom, &v, p) - base);
        }
    }
    Ok(SuperminimizerReport { pass: trials == 0 || worst >= -1e-10, trials, worst_margin: worst, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperharmonicReport {
    pub pass: bool,
    /// `max (H_V u - u)` per box.
    pub excess: Vec<f64>,
}

/// Open cells with centers in the box `[x0, x1] x [y0, y1]`, provided every cell next to
/// them is open.
pub(crate) fn box_cells(dom: &GridDomain, b: [f64; 4]) -> Result<Vec<usize>> {
    let spec = dom.spec();
    let mut inside = vec![false; spec.len()];
    let mut cells = Vec::new();
    for &c in dom.open_cells() {
        let q = dom.center(c);
        if q[0] >= b[0] && q[0] <= b[1] && q[1] >= b[2] && q[1] <= b[3] {
            inside[c] = true;
            cells.push(c);
        }
    }
    if cells.is_empty() {
        return Err(Error::BoxNotInterior);
    }
    for &c in &cells {
        for n in dom.neighbors4(c) {
            if !inside[n] && !dom.is_open(n) {
                return Err(Error::BoxNotInterior);
            }
        }
    }
    Ok(cells)
}

/// Solves the Dirichlet problem on each box with data `u` and checks that the solution
/// stays below `u`.
pub fn check_superharmonic(dom: &GridDomain, u: &ScalarField, p: f64, boxes: &[[f64; 4]]) -> Result<SuperharmonicReport> {
    u.check(dom)?;
    check_p(p)?;
    let spec = dom.spec().clone();
    let mut excess = Vec::new();
    for b in boxes {
        let cells = box_cells(dom, *b)?;
        let mut mask = vec![false; spec.len()];
        for &c in &cells {
            mask[c] = true;
        }
        let sub = GridDomain::from_mask(spec.clone(), mask, dom.weight_mode())?;
        // Grid indices agree because the box never reaches the domain's padding ring.
        let data = BoundaryData::Vertex(
            sub.boundary_vertices().iter().map(|&v| u.at(dom, v).unwrap()).collect(),
        );
        let (h, _) = solve_dirichlet(&DirichletProblem { dom: &sub, p, data, opts: SolveOptions { tol: 1e-12, max_iter: 200 } })?;
        let ex = sub
            .open_cells()
            .iter()
            .zip(&h.values)
            .map(|(&c, &hv)| hv - u.at(dom, c).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        excess.push(ex);
    }
    Ok(SuperharmonicReport { pass: excess.iter().all(|&e| e <= 1e-6), excess })
}
