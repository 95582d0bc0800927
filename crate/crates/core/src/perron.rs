//! Perron solutions with respect to the Mazurkiewicz boundary and the generalized
//! boundary of an ambient domain, and the experiments built on them.
//!
//! Resolutive data has a Perron solution equal to its Sobolev solution, so every solve
//! here imposes the value of each boundary point on the sides between its anchor and the
//! open cells of its local component, then calls the Dirichlet solver.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{gen_domain, DomainRecipe, GridDomain};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metric::{build_maz_boundary, default_schedule, MazBoundary};
use crate::solver::{
    check_superharmonic, solve_dirichlet, BoundaryData, BoundaryEdges, DirichletProblem, SolveOptions, SolveReport,
    SuperharmonicReport,
};

/// One finite value per Mazurkiewicz boundary point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MazBoundaryData {
    pub values: Vec<f64>,
}

impl MazBoundaryData {
    /// Evaluates `f(anchor center, representative center)` at every point, so data can
    /// tell the two sides of a slit apart.
    pub fn from_fn(dom: &GridDomain, maz: &MazBoundary, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> Self {
        let values = maz.points.iter().map(|q| f(dom.center(q.anchor), dom.center(q.representative))).collect();
        MazBoundaryData { values }
    }

    pub fn constant(maz: &MazBoundary, v: f64) -> Self {
        MazBoundaryData { values: vec![v; maz.points.len()] }
    }

    pub fn check(&self, maz: &MazBoundary) -> Result<()> {
        if self.values.len() != maz.points.len() {
            return Err(Error::BadInput(format!(
                "{} values for {} boundary points",
                self.values.len(),
                maz.points.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("boundary data must be finite".into()));
        }
        Ok(())
    }

    /// Value on every boundary side, read from the point whose component holds the side's
    /// open cell.
    pub fn side_values(&self, dom: &GridDomain, maz: &MazBoundary, be: &BoundaryEdges) -> Result<Vec<f64>> {
        self.check(maz)?;
        let sides = side_points(dom, maz, be)?;
        Ok(sides.iter().map(|&k| self.values[k]).collect())
    }

    pub fn sup_diff(&self, other: &MazBoundaryData) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The boundary point owning each boundary side.
pub fn side_points(dom: &GridDomain, maz: &MazBoundary, be: &BoundaryEdges) -> Result<Vec<usize>> {
    be.edges
        .iter()
        .map(|&(s, v)| {
            let cell = dom.open_cells()[s as usize];
            maz.point_for_side(v as usize, cell)
                .ok_or_else(|| Error::BadInput(format!("boundary side at vertex {v} has no boundary point")))
        })
        .collect()
}

/// Interior approach to one boundary point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachSample {
    pub point: usize,
    pub anchor: usize,
    pub approach: f64,
    pub data: f64,
    pub gap: f64,
    /// Number of distances that entered the fit.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronResult {
    pub solution: ScalarField,
    pub method: String,
    pub report: SolveReport,
    pub diagnostics: Vec<ApproachSample>,
}

/// Limit of `u` at the side between `anchor` and its neighbour `rep`, extrapolated by a
/// least-squares line through the values at 2, 4 and 8 cells along the ray from the
/// anchor through `rep`. Distances whose ray leaves the domain are dropped.
pub fn approach_value(dom: &GridDomain, u: &ScalarField, anchor: usize, rep: usize) -> Option<(f64, usize)> {
    let spec = dom.spec();
    let (ai, aj) = spec.ij(anchor);
    let (ri, rj) = spec.ij(rep);
    let (di, dj) = (ri as i64 - ai as i64, rj as i64 - aj as i64);
    if di.abs() + dj.abs() != 1 {
        return None;
    }
    let mut pts = Vec::new();
    let mut k = 1i64;
    while k <= 8 {
        let (i, j) = (ai as i64 + k * di, aj as i64 + k * dj);
        if i < 0 || j < 0 || i >= spec.nx as i64 || j >= spec.ny as i64 {
            break;
        }
        let c = spec.index(i as usize, j as usize);
        let Some(v) = u.at(dom, c) else { break };
        if k == 2 || k == 4 || k == 8 {
            pts.push((k as f64, v));
        }
        k += 1;
    }
    match pts.len() {
        0 => Some((u.at(dom, rep)?, 0)),
        1 => Some((pts[0].1, 1)),
        n => {
            let nf = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some((my + sxy / sxx * (0.5 - mx), n))
        }
    }
}

fn diagnostics(dom: &GridDomain, maz: &MazBoundary, u: &ScalarField, data: &MazBoundaryData) -> Vec<ApproachSample> {
    maz.points
        .iter()
        .enumerate()
        .filter_map(|(k, q)| {
            let (approach, samples) = approach_value(dom, u, q.anchor, q.representative)?;
            let d = data.values[k];
            Some(ApproachSample { point: k, anchor: q.anchor, approach, data: d, gap: (approach - d).abs(), samples })
        })
        .collect()
}

/// Perron solution of Mazurkiewicz boundary data.
pub fn perron_solve(
    dom: &GridDomain,
    maz: &MazBoundary,
    data: &MazBoundaryData,
    p: f64,
    opts: &SolveOptions,
) -> Result<PerronResult> {
    let be = BoundaryEdges::new(dom);
    let vals = data.side_values(dom, maz, &be)?;
    let (solution, report) =
        solve_dirichlet(&DirichletProblem { dom, p, data: BoundaryData::Edge(vals), opts: *opts })?;
    let diagnostics = diagnostics(dom, maz, &solution, data);
    Ok(PerronResult { solution, method: "Sobolev solution of resolutive data".into(), report, diagnostics })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub sample: ApproachSample,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimitReport {
    pub eps: f64,
    pub tested: usize,
    pub pass_fraction: f64,
    pub rows: Vec<LimitRow>,
}

/// Compares approach values with the data at every sampled point outside `exceptional`.
pub fn boundary_limit_report(result: &PerronResult, exceptional: &[usize], eps: f64) -> BoundaryLimitReport {
    let rows: Vec<LimitRow> = result
        .diagnostics
        .iter()
        .filter(|s| !exceptional.contains(&s.point))
        .map(|s| LimitRow { sample: s.clone(), pass: s.gap <= eps })
        .collect();
    let passed = rows.iter().filter(|r| r.pass).count();
    let pass_fraction = if rows.is_empty() { 1.0 } else { passed as f64 / rows.len() as f64 };
    BoundaryLimitReport { eps, tested: rows.len(), pass_fraction, rows }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComparisonStage {
    Boundary,
    Interior,
    Passed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pass: bool,
    pub stage: ComparisonStage,
    pub super_certificate: SuperharmonicReport,
    pub sub_certificate: SuperharmonicReport,
    /// Largest `approach(v) - approach(u)` over the boundary points.
    pub boundary_excess: f64,
    /// Largest `v - u` over the open cells.
    pub interior_excess: f64,
}

/// Checks that a subharmonic `v` stays below a superharmonic `u` whose boundary approach
/// values dominate those of `v` within `margin`. The certificates are the box tests of
/// [`check_superharmonic`] applied to `u` and `-v`.
pub fn comparison_check(
    dom: &GridDomain,
    maz: &MazBoundary,
    u: &ScalarField,
    v: &ScalarField,
    p: f64,
    boxes: &[[f64; 4]],
    margin: f64,
) -> Result<ComparisonReport> {
    let sup = check_superharmonic(dom, u, p, boxes)?;
    if !sup.pass {
        return Err(Error::CertificateMissing("upper function fails the superharmonic test".into()));
    }
    let sub = check_superharmonic(dom, &v.map(|x| -x), p, boxes)?;
    if !sub.pass {
        return Err(Error::CertificateMissing("lower function fails the subharmonic test".into()));
    }
    let mut boundary_excess = f64::NEG_INFINITY;
    for q in &maz.points {
        if let (Some((a, _)), Some((b, _))) =
            (approach_value(dom, v, q.anchor, q.representative), approach_value(dom, u, q.anchor, q.representative))
        {
            boundary_excess = boundary_excess.max(a - b);
        }
    }
    let interior_excess = v.values.iter().zip(&u.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let stage = if boundary_excess > margin {
        ComparisonStage::Boundary
    } else if interior_excess > 1e-6 {
        ComparisonStage::Interior
    } else {
        ComparisonStage::Passed
    };
    Ok(ComparisonReport {
        pass: stage == ComparisonStage::Passed,
        stage,
        super_certificate: sup,
        sub_certificate: sub,
        boundary_excess,
        interior_excess,
    })
}

/// A resolution-independent set of boundary anchors: those whose centers lie within half
/// a cell of one of the segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbSet {
    pub segments: Vec<[[f64; 2]; 2]>,
}

impl PerturbSet {
    pub fn empty() -> Self {
        PerturbSet::default()
    }

    pub fn segment(a: [f64; 2], b: [f64; 2]) -> Self {
        PerturbSet { segments: vec![[a, b]] }
    }

    pub fn anchors(&self, dom: &GridDomain) -> Vec<usize> {
        let tol = 0.5 * dom.h() * (1.0 + 1e-6);
        dom.boundary_vertices()
            .iter()
            .copied()
            .filter(|&b| self.segments.iter().any(|s| seg_dist(dom.center(b), s) <= tol))
            .collect()
    }
}

fn seg_dist(q: [f64; 2], s: &[[f64; 2]; 2]) -> f64 {
    let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((q[0] - s[0][0]) * d[0] + (q[1] - s[0][1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((q[0] - s[0][0] - t * d[0]).powi(2) + (q[1] - s[0][1] - t * d[1]).powi(2)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Decreasing,
    NotDecreasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub resolutions: Vec<f64>,
    pub perturbed_points: Vec<usize>,
    /// Sup of the solution difference over cells at distance at least 0.1 from the
    /// perturbed anchors.
    pub sup_diffs: Vec<f64>,
    pub probe: Option<[f64; 2]>,
    pub probe_diffs: Vec<f64>,
    pub verdict: Verdict,
}

/// Solves with `f` and with `f + value` on the points over the perturbed anchors, at every
/// resolution, and reports how far the difference reaches into the domain.
#[allow(clippy::too_many_arguments)]
pub fn invariance_experiment(
    recipe: &DomainRecipe,
    f: impl Fn([f64; 2]) -> f64,
    perturb: &PerturbSet,
    value: f64,
    p: f64,
    resolutions: &[f64],
    probe: Option<[f64; 2]>,
    opts: &SolveOptions,
) -> Result<InvarianceReport> {
    if resolutions.is_empty() || resolutions.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParams("resolutions must be strictly decreasing".into()));
    }
    let mut rep = InvarianceReport {
        resolutions: resolutions.to_vec(),
        perturbed_points: vec![],
        sup_diffs: vec![],
        probe,
        probe_diffs: vec![],
        verdict: Verdict::Decreasing,
    };
    for &h in resolutions {
        let dom = gen_domain(recipe, h)?;
        let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
        let base = MazBoundaryData::from_fn(&dom, &maz, |a, _| f(a));
        let anchors = perturb.anchors(&dom);
        let mut hit = vec![false; dom.spec().len()];
        for &a in &anchors {
            hit[a] = true;
        }
        let mut pert = base.clone();
        let mut n_pert = 0;
        for (k, q) in maz.points.iter().enumerate() {
            if hit[q.anchor] {
                pert.values[k] += value;
                n_pert += 1;
            }
        }
        let u0 = perron_solve(&dom, &maz, &base, p, opts)?.solution;
        let u1 = if n_pert == 0 { u0.clone() } else { perron_solve(&dom, &maz, &pert, p, opts)?.solution };
        let mut near = vec![false; dom.spec().len()];
        for &a in &anchors {
            for c in dom.cells_in_disc(dom.center(a), 0.1) {
                near[c] = true;
            }
        }
        let sup = dom
            .open_cells()
            .iter()
            .enumerate()
            .filter(|&(_, &c)| !near[c])
            .map(|(s, _)| (u1.values[s] - u0.values[s]).abs())
            .fold(0.0, f64::max);
        rep.sup_diffs.push(sup);
        rep.perturbed_points.push(n_pert);
        if let Some(q) = probe {
            let c = dom.open_cell_at(q).ok_or_else(|| Error::BadParams(format!("probe {q:?} is not in the domain")))?;
            let s = dom.slot(c).unwrap();
            rep.probe_diffs.push((u1.values[s] - u0.values[s]).abs());
        }
    }
    if rep.sup_diffs.windows(2).any(|w| w[1] >= w[0]) {
        rep.verdict = Verdict::NotDecreasing;
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub data_diffs: Vec<f64>,
    pub solution_diffs: Vec<f64>,
    pub pass: bool,
}

/// Checks `sup |H f_j - H f| <= sup |f_j - f| + 1e-6` for every `j`.
pub fn uniform_stability_check(
    dom: &GridDomain,
    maz: &MazBoundary,
    f_seq: &[MazBoundaryData],
    f_limit: &MazBoundaryData,
    p: f64,
    opts: &SolveOptions,
) -> Result<StabilityReport> {
    let lim = perron_solve(dom, maz, f_limit, p, opts)?.solution;
    let mut rep = StabilityReport { data_diffs: vec![], solution_diffs: vec![], pass: true };
    for f in f_seq {
        let u = perron_solve(dom, maz, f, p, opts)?.solution;
        let dd = f.sup_diff(f_limit);
        let sd = u.max_abs_diff(&lim);
        rep.pass &= sd <= dd + 1e-6;
        rep.data_diffs.push(dd);
        rep.solution_diffs.push(sd);
    }
    Ok(rep)
}

/// A point of the boundary of `Ω` as seen from inside an ambient domain `G`: an anchor
/// that is open in `G`, or a point of `G`'s Mazurkiewicz boundary over a closed anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPoint {
    pub anchor: usize,
    pub ambient_point: Option<usize>,
    /// Open cell of `Ω` on the first side that maps to this point.
    pub representative: usize,
}

#[derive(Clone, Debug)]
pub struct GeneralizedBoundary {
    pub points: Vec<GeneralizedPoint>,
    /// Point of every boundary side of `Ω`, indexed as in [`BoundaryEdges`].
    pub side_point: Vec<usize>,
    pub ambient_maz: MazBoundary,
}

impl GeneralizedBoundary {
    /// Rasterizes `G` at the cell size of `dom` and splits the boundary of `dom` along the
    /// fibers of `G`'s Mazurkiewicz boundary.
    pub fn build(dom: &GridDomain, ambient: &DomainRecipe) -> Result<Self> {
        let g = gen_domain(ambient, dom.h())?;
        let map = |c: usize| g.spec().locate(dom.center(c));
        for &c in dom.open_cells() {
            if !map(c).is_some_and(|gc| g.is_open(gc)) {
                return Err(Error::NotNested);
            }
        }
        let ambient_maz = build_maz_boundary(&g, &default_schedule(&g))?;
        let unstable = ambient_maz.unstable_anchors().len();
        if unstable > 0 {
            return Err(Error::UnstableAmbient(unstable));
        }
        let be = BoundaryEdges::new(dom);
        let mut ids: HashMap<(usize, Option<usize>), usize> = HashMap::new();
        let mut points = Vec::new();
        let mut side_point = Vec::with_capacity(be.len());
        for &(s, v) in &be.edges {
            let (s, v) = (s as usize, v as usize);
            let cell = dom.open_cells()[s];
            let ambient_point = match map(v) {
                Some(gv) if !g.is_open(gv) => {
                    let gc = map(cell).unwrap();
                    Some(ambient_maz.point_for_side(gv, gc).ok_or_else(|| {
                        Error::BadInput(format!("ambient boundary has no point at vertex {gv} facing cell {gc}"))
                    })?)
                }
                _ => None,
            };
            let id = *ids.entry((v, ambient_point)).or_insert_with(|| {
                points.push(GeneralizedPoint { anchor: v, ambient_point, representative: cell });
                points.len() - 1
            });
            side_point.push(id);
        }
        Ok(GeneralizedBoundary { points, side_point, ambient_maz })
    }

    /// Evaluates `f(anchor center, representative center)` at every point.
    pub fn data_from_fn(&self, dom: &GridDomain, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> Vec<f64> {
        self.points.iter().map(|q| f(dom.center(q.anchor), dom.center(q.representative))).collect()
    }
}

/// Perron solution with respect to the generalized boundary.
pub fn generalized_perron_solve(
    dom: &GridDomain,
    gb: &GeneralizedBoundary,
    data: &[f64],
    p: f64,
    opts: &SolveOptions,
) -> Result<PerronResult> {
    if data.len() != gb.points.len() {
        return Err(Error::BadInput(format!("{} values for {} boundary points", data.len(), gb.points.len())));
    }
    let vals: Vec<f64> = gb.side_point.iter().map(|&k| data[k]).collect();
    let (solution, report) =
        solve_dirichlet(&DirichletProblem { dom, p, data: BoundaryData::Edge(vals), opts: *opts })?;
    let diagnostics = gb
        .points
        .iter()
        .enumerate()
        .filter_map(|(k, q)| {
            let (approach, samples) = approach_value(dom, &solution, q.anchor, q.representative)?;
            Some(ApproachSample {
                point: k,
                anchor: q.anchor,
                approach,
                data: data[k],
                gap: (approach - data[k]).abs(),
                samples,
            })
        })
        .collect();
    Ok(PerronResult { solution, method: "Sobolev solution on the generalized boundary".into(), report, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(recipe: DomainRecipe, h: f64) -> (GridDomain, MazBoundary) {
        let dom = gen_domain(&recipe, h).unwrap();
        let maz = build_maz_boundary(&dom, &default_schedule(&dom)).unwrap();
        (dom, maz)
    }

    #[test]
    fn square_matches_dirichlet() {
        let (dom, maz) = setup(DomainRecipe::square(1.0), 1.0 / 32.0);
        let f = |q: [f64; 2]| q[0] * q[0] - q[1];
        let data = MazBoundaryData::from_fn(&dom, &maz, |a, _| f(a));
        let opts = SolveOptions::default();
        let r = perron_solve(&dom, &maz, &data, 2.0, &opts).unwrap();
        let (u, _) = solve_dirichlet(&DirichletProblem { dom: &dom, p: 2.0, data: BoundaryData::from_fn(&dom, f), opts })
            .unwrap();
        assert!(r.solution.max_abs_diff(&u) <= 1e-10);
    }

    #[test]
    fn constant_data_passes_every_limit() {
        let (dom, maz) = setup(DomainRecipe::square(1.0), 1.0 / 16.0);
        let r = perron_solve(&dom, &maz, &MazBoundaryData::constant(&maz, 0.3), 3.0, &SolveOptions::default()).unwrap();
        let rep = boundary_limit_report(&r, &[], 1e-6);
        assert_eq!(rep.pass_fraction, 1.0);
    }

    #[test]
    fn empty_perturbation_changes_nothing() {
        let rep = invariance_experiment(
            &DomainRecipe::square(1.0),
            |q| q[0],
            &PerturbSet::empty(),
            5.0,
            2.0,
            &[1.0 / 8.0, 1.0 / 16.0],
            Some([0.5, 0.5]),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.sup_diffs, vec![0.0, 0.0]);
        assert_eq!(rep.probe_diffs, vec![0.0, 0.0]);
    }

    #[test]
    fn comparison_flags_boundary_violation() {
        let (dom, maz) = setup(DomainRecipe::square(1.0), 1.0 / 16.0);
        let data = MazBoundaryData::from_fn(&dom, &maz, |a, _| a[0]);
        let u = perron_solve(&dom, &maz, &data, 2.0, &SolveOptions::default()).unwrap().solution;
        let boxes = [[0.25, 0.75, 0.25, 0.75]];
        let ok = comparison_check(&dom, &maz, &u.map(|x| x + 0.1), &u.map(|x| x - 0.1), 2.0, &boxes, 1e-6).unwrap();
        assert!(ok.pass);
        let bad = comparison_check(&dom, &maz, &u, &u.map(|x| x + 0.2), 2.0, &boxes, 1e-6).unwrap();
        assert_eq!(bad.stage, ComparisonStage::Boundary);
    }

    #[test]
    fn generalized_with_same_domain_matches() {
        let recipe = DomainRecipe::slit_disc();
        let (dom, maz) = setup(recipe.clone(), 1.0 / 128.0);
        let f = |a: [f64; 2], r: [f64; 2]| {
            if a[0] > 0.0 && a[0] < 0.9 && a[1].abs() < 1.0 / 32.0 && r[1] > a[1] { 1.0 + a[0] } else { a[0] }
        };
        let data = MazBoundaryData::from_fn(&dom, &maz, f);
        let opts = SolveOptions::default();
        let u = perron_solve(&dom, &maz, &data, 2.0, &opts).unwrap().solution;
        let gb = GeneralizedBoundary::build(&dom, &recipe).unwrap();
        let v = generalized_perron_solve(&dom, &gb, &gb.data_from_fn(&dom, f), 2.0, &opts).unwrap().solution;
        assert!(u.max_abs_diff(&v) <= 1e-10);
    }
}
