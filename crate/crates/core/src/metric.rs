//! Inner and Mazurkiewicz distances, local connectedness at boundary vertices, and the
//! Mazurkiewicz boundary with its projection onto boundary vertices.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::domain::{CellSet, GridDomain};
use crate::error::{Error, Result};

/// Certified bracket for the Mazurkiewicz distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistInterval {
    pub lo: f64,
    pub hi: f64,
}

fn check_open(dom: &GridDomain, c: usize) -> Result<()> {
    if c < dom.spec().len() && dom.is_open(c) {
        Ok(())
    } else {
        Err(Error::InvalidCell(c))
    }
}

fn euclid(dom: &GridDomain, a: usize, b: usize) -> f64 {
    dom.spec().dist(a, b)
}

/// Shortest 8-neighbour paths from `a` over the allowed open cells, stopping at `target`.
/// Returns the path to `target` with its length, if reachable.
fn shortest_path(dom: &GridDomain, a: usize, target: usize, allowed: impl Fn(usize) -> bool) -> Option<(f64, Vec<usize>)> {
    let mut dist: HashMap<usize, (f64, usize)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(a, (0.0, usize::MAX));
    heap.push(Reverse((0u64, a)));
    while let Some(Reverse((bits, c))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[&c].0 {
            continue;
        }
        if c == target {
            let mut path = vec![c];
            let mut cur = c;
            while let Some(&(_, p)) = dist.get(&cur) {
                if p == usize::MAX {
                    break;
                }
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some((d, path));
        }
        for (n, w) in dom.neighbors8(c) {
            if !allowed(n) {
                continue;
            }
            let nd = d + w;
            if dist.get(&n).is_none_or(|&(old, _)| nd < old) {
                dist.insert(n, (nd, c));
                heap.push(Reverse((nd.to_bits(), n)));
            }
        }
    }
    None
}

/// Length of the shortest 8-neighbour path between two open cells.
pub fn inner_distance(dom: &GridDomain, a: usize, b: usize) -> Result<f64> {
    check_open(dom, a)?;
    check_open(dom, b)?;
    shortest_path(dom, a, b, |_| true).map(|(d, _)| d).ok_or(Error::Disconnected)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Largest distance between two cell centers of the set.
pub fn set_diameter(dom: &GridDomain, cells: &CellSet) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(points_diameter(cells.cells.iter().map(|&c| dom.center(c)).collect()))
}

fn points_diameter(mut pts: Vec<[f64; 2]>) -> f64 {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return if pts.len() == 2 { (pts[0][0] - pts[1][0]).hypot(pts[0][1] - pts[1][1]) } else { 0.0 };
    }
    // Monotone chain hull, then all hull pairs.
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max((hull[i][0] - hull[j][0]).hypot(hull[i][1] - hull[j][1]));
        }
    }
    best
}

/// Brackets the Mazurkiewicz distance by bisection on the radius `r` of the ball
/// `B̄(a, r)`: if `b` is unreachable inside the ball then every connected set holding both
/// cells has diameter above `r`, and a connecting path inside the ball has diameter at
/// least the distance. Stops when `hi - lo <= max(tol, 4h)`.
pub fn mazurkiewicz_distance(dom: &GridDomain, a: usize, b: usize, tol: f64) -> Result<DistInterval> {
    check_open(dom, a)?;
    check_open(dom, b)?;
    let h = dom.h();
    let e = euclid(dom, a, b);
    if a == b {
        return Ok(DistInterval { lo: 0.0, hi: 0.0 });
    }
    let pa = dom.center(a);
    let probe = |r: f64| {
        shortest_path(dom, a, b, |c| {
            let q = dom.center(c);
            (q[0] - pa[0]).powi(2) + (q[1] - pa[1]).powi(2) <= r * r
        })
        .map(|(_, path)| points_diameter(path.iter().map(|&c| dom.center(c)).collect()))
    };
    let mut lo = e;
    let mut r_hi = e + 1e-9 * h;
    let spec = dom.spec();
    let max_r = (spec.nx as f64).hypot(spec.ny as f64) * h;
    let mut hi = loop {
        if let Some(d) = probe(r_hi) {
            break d;
        }
        lo = lo.max(r_hi);
        if r_hi > max_r {
            return Err(Error::Disconnected);
        }
        r_hi = (2.0 * r_hi).max(r_hi + h);
    };
    let target = tol.max(4.0 * h);
    for _ in 0..60 {
        if hi - lo <= target || r_hi - lo <= 0.125 * h {
            break;
        }
        let mid = 0.5 * (lo + r_hi);
        match probe(mid) {
            Some(d) => {
                r_hi = mid;
                hi = hi.min(d);
            }
            None => lo = mid,
        }
    }
    Ok(DistInterval { lo, hi: hi.max(lo) })
}

/// Reusable scratch space for repeated local component searches.
struct Scanner {
    stamp: Vec<u32>,
    label: Vec<u32>,
    gen: u32,
}

impl Scanner {
    fn new(n: usize) -> Self {
        Scanner { stamp: vec![0; n], label: vec![0; n], gen: 0 }
    }

    /// Components of the open cells with centers in the open ball `B(p, r)` that have a
    /// cell within `r/2` of `p`, in order of their distance to `p`.
    fn components(&mut self, dom: &GridDomain, p: [f64; 2], r: f64) -> Vec<Vec<usize>> {
        self.gen += 1;
        let g = self.gen;
        let cells = dom.cells_in_disc(p, r);
        let inside = |q: [f64; 2]| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < r * r;
        for &c in &cells {
            if inside(dom.center(c)) {
                self.stamp[c] = g;
                self.label[c] = u32::MAX;
            }
        }
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut queue = VecDeque::new();
        for &start in &cells {
            if self.stamp[start] != g || self.label[start] != u32::MAX {
                continue;
            }
            let id = out.len() as u32;
            self.label[start] = id;
            queue.push_back(start);
            let mut comp = Vec::new();
            let mut near = f64::INFINITY;
            while let Some(c) = queue.pop_front() {
                comp.push(c);
                let q = dom.center(c);
                near = near.min((q[0] - p[0]).hypot(q[1] - p[1]));
                for n in dom.neighbors4(c) {
                    if self.stamp[n] == g && self.label[n] == u32::MAX {
                        self.label[n] = id;
                        queue.push_back(n);
                    }
                }
            }
            out.push((near, comp));
        }
        let mut kept: Vec<(f64, Vec<usize>)> = out.into_iter().filter(|(d, _)| *d <= 0.5 * r).collect();
        kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        kept.into_iter().map(|(_, c)| c).collect()
    }
}

fn check_anchor(dom: &GridDomain, anchor: usize) -> Result<()> {
    if anchor < dom.spec().len() && dom.is_boundary_vertex(anchor) {
        Ok(())
    } else {
        Err(Error::InvalidCell(anchor))
    }
}

/// Components of `Ω ∩ B(anchor, r)` that come within `r/2` of the anchor. Pieces that only
/// enter the ball near its rim are cut off by the ball rather than by the boundary near
/// the anchor, and are not counted.
pub fn local_boundary_components(dom: &GridDomain, anchor: usize, r: f64) -> Result<(usize, Vec<CellSet>)> {
    check_anchor(dom, anchor)?;
    let floor = 2.0 * dom.h();
    if r < floor * (1.0 - 1e-12) {
        return Err(Error::RadiusTooSmall { r, floor });
    }
    let mut sc = Scanner::new(dom.spec().len());
    let comps: Vec<CellSet> = sc.components(dom, dom.center(anchor), r).into_iter().map(CellSet::new).collect();
    Ok((comps.len(), comps))
}

/// A point of the Mazurkiewicz boundary: a local component at a boundary vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MazBoundaryPoint {
    pub anchor: usize,
    /// Index of the component within its anchor's fiber.
    pub component_id: usize,
    /// Open cell of the component nearest to the anchor; side-adjacent to it whenever
    /// the component touches the anchor.
    pub representative: usize,
    /// Open cells of the component sharing a side with the anchor.
    pub adjacent: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorFiber {
    pub anchor: usize,
    /// Component counts at the probe radii, smallest radius first.
    pub counts: Vec<usize>,
    pub stable: bool,
    /// Radius at which the fiber was read off.
    pub radius: f64,
    pub points: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MazBoundary {
    pub points: Vec<MazBoundaryPoint>,
    pub fibers: Vec<AnchorFiber>,
    /// Probe radii, decreasing.
    pub probe_radii: Vec<f64>,
    #[serde(skip)]
    index: HashMap<usize, usize>,
}

impl MazBoundary {
    /// The projection `Φ`.
    pub fn phi(&self, point: usize) -> usize {
        self.points[point].anchor
    }

    pub fn fiber(&self, anchor: usize) -> Option<&AnchorFiber> {
        self.index.get(&anchor).map(|&k| &self.fibers[k])
    }

    /// The point over `anchor` whose component holds the open cell `cell`.
    pub fn point_for_side(&self, anchor: usize, cell: usize) -> Option<usize> {
        self.fiber(anchor)?.points.iter().copied().find(|&p| self.points[p].adjacent.contains(&cell))
    }

    pub fn unstable_anchors(&self) -> Vec<usize> {
        self.fibers.iter().filter(|f| !f.stable).map(|f| f.anchor).collect()
    }

    pub fn to_json(&self, dom: &GridDomain) -> serde_json::Value {
        let pts: Vec<_> = self
            .points
            .iter()
            .map(|p| {
                serde_json::json!({
                    "anchor": p.anchor,
                    "anchor_xy": dom.center(p.anchor),
                    "component_id": p.component_id,
                    "representative": p.representative,
                    "representative_xy": dom.center(p.representative),
                })
            })
            .collect();
        let fibers: Vec<_> = self
            .fibers
            .iter()
            .map(|f| {
                serde_json::json!({
                    "anchor": f.anchor,
                    "anchor_xy": dom.center(f.anchor),
                    "counts": f.counts,
                    "stable": f.stable,
                    "radius": f.radius,
                    "points": f.points,
                })
            })
            .collect();
        serde_json::json!({ "probe_radii": self.probe_radii, "points": pts, "fibers": fibers })
    }
}

/// Radii `64h, 32h, 16h, 8h`, dropping those above a quarter of the shorter grid side.
pub fn default_schedule(dom: &GridDomain) -> Vec<f64> {
    let h = dom.h();
    let spec = dom.spec();
    let cap = 0.25 * (spec.nx.min(spec.ny) as f64) * h;
    let mut r: Vec<f64> = [64.0, 32.0, 16.0, 8.0].iter().map(|k| k * h).filter(|&r| r <= cap).collect();
    if r.len() < 2 {
        r = vec![4.0 * h, 2.0 * h];
    }
    r
}

/// Builds the fibers over every boundary vertex. Counts are taken at each schedule
/// radius; the fiber is read off at the smallest radius whose count agrees with the next
/// larger one, and anchors where no two consecutive counts agree are flagged unstable
/// and read off at the radius with the most components.
pub fn build_maz_boundary(dom: &GridDomain, schedule: &[f64]) -> Result<MazBoundary> {
    let mut radii: Vec<f64> = schedule.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor = 2.0 * dom.h();
    if radii.is_empty() {
        return Err(Error::BadInput("empty radius schedule".into()));
    }
    if radii[0] < floor * (1.0 - 1e-12) {
        return Err(Error::RadiusTooSmall { r: radii[0], floor });
    }
    let mut sc = Scanner::new(dom.spec().len());
    let mut points = Vec::new();
    let mut fibers = Vec::new();
    let mut index = HashMap::new();
    for &anchor in dom.boundary_vertices() {
        let p = dom.center(anchor);
        let per_radius: Vec<Vec<Vec<usize>>> = radii.iter().map(|&r| sc.components(dom, p, r)).collect();
        let counts: Vec<usize> = per_radius.iter().map(|c| c.len()).collect();
        let pick = (0..counts.len().saturating_sub(1)).find(|&i| counts[i] == counts[i + 1]);
        let stable = pick.is_some();
        let k = pick.unwrap_or_else(|| {
            let m = *counts.iter().max().unwrap();
            counts.iter().position(|&c| c == m).unwrap()
        });
        let adj: Vec<usize> = dom.grid_neighbors4(anchor).filter(|&n| dom.is_open(n)).collect();
        let mut ids = Vec::new();
        for (cid, comp) in per_radius[k].iter().enumerate() {
            let adjacent: Vec<usize> = adj.iter().copied().filter(|c| comp.contains(c)).collect();
            let representative = adjacent.first().copied().unwrap_or_else(|| {
                *comp
                    .iter()
                    .min_by(|&&x, &&y| euclid(dom, x, anchor).partial_cmp(&euclid(dom, y, anchor)).unwrap())
                    .unwrap()
            });
            ids.push(points.len());
            points.push(MazBoundaryPoint { anchor, component_id: cid, representative, adjacent });
        }
        // Adjacent cells missing from every component (possible only at tiny radii) get
        // their own point so that every side of the anchor belongs to some point.
        for &c in &adj {
            if !ids.iter().any(|&i| points[i].adjacent.contains(&c)) {
                ids.push(points.len());
                points.push(MazBoundaryPoint { anchor, component_id: ids.len() - 1, representative: c, adjacent: vec![c] });
            }
        }
        index.insert(anchor, fibers.len());
        fibers.push(AnchorFiber { anchor, counts, stable, radius: radii[k], points: ids });
    }
    radii.reverse();
    Ok(MazBoundary { points, fibers, probe_radii: radii, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{gen_domain, DomainRecipe};

    #[test]
    fn square_distances() {
        let h = 1.0 / 64.0;
        let dom = gen_domain(&DomainRecipe::square(1.0), h).unwrap();
        let a = dom.open_cell_at([0.1, 0.1]).unwrap();
        let b = dom.open_cell_at([0.9, 0.9]).unwrap();
        let d = inner_distance(&dom, a, b).unwrap();
        let e = euclid(&dom, a, b);
        assert!((d - e).abs() < 2.0 * h);
        let m = mazurkiewicz_distance(&dom, a, b, 0.0).unwrap();
        assert!(m.lo <= m.hi && (m.hi - e).abs() <= 4.0 * h, "{m:?} {e}");
    }

    #[test]
    fn diameter_of_two_cells() {
        let dom = gen_domain(&DomainRecipe::square(1.0), 0.05).unwrap();
        let a = dom.open_cell_at([0.125, 0.125]).unwrap();
        let b = dom.open_cell_at([0.825, 0.125]).unwrap();
        let d = set_diameter(&dom, &CellSet::new(vec![a, b])).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
        assert_eq!(set_diameter(&dom, &CellSet::new(vec![])), Err(Error::EmptySet));
    }

    #[test]
    fn slit_disc_local_counts() {
        let h = 1.0 / 128.0;
        let dom = gen_domain(&DomainRecipe::slit_disc(), h).unwrap();
        let anchor = dom.spec().locate([0.5, 0.5 * h]).unwrap();
        assert_eq!(local_boundary_components(&dom, anchor, 0.1).unwrap().0, 2);
        assert!(matches!(local_boundary_components(&dom, anchor, h), Err(Error::RadiusTooSmall { .. })));
        let sq = gen_domain(&DomainRecipe::square(1.0), h).unwrap();
        let left = sq.spec().locate([-0.5 * h, 0.5]).unwrap();
        assert_eq!(local_boundary_components(&sq, left, 0.1).unwrap().0, 1);
    }
}
