//! Grid discretizations of bounded planar open sets.
//!
//! Cells are closed squares on a uniform grid. Open cells form Ω; the closed cells that
//! touch Ω through a side are its boundary vertices. The outermost ring of every grid is
//! closed, so the four side neighbours of an open cell always exist.

mod recipe;
mod shape;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use recipe::{gen_domain, DomainRecipe, ParamValue, RecipeKind};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub(crate) const NONE: u32 = u32::MAX;

/// How the measure of an open cell is assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `h^2` per cell.
    #[default]
    Uniform,
    /// `h^2 / |center|`, the cellwise form of the measure `|x|^{-1} dx`.
    Radial,
}

impl WeightMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "radial" => Ok(Self::Radial),
            other => Err(Error::BadParams(format!("unknown weight mode `{other}`"))),
        }
    }

    /// Weight of a cell of area `area` centered at `p`.
    pub fn cell_weight(self, p: [f64; 2], area: f64) -> f64 {
        match self {
            Self::Uniform => area,
            Self::Radial => area / (p[0] * p[0] + p[1] * p[1]).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Radial => "radial",
        }
    }
}

/// Open cells (sorted grid indices) plus optional boundary vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSet {
    pub cells: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl CellSet {
    pub fn new(mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self { cells, boundary: Vec::new() }
    }

    pub fn with_boundary(cells: Vec<usize>, mut boundary: Vec<usize>) -> Self {
        boundary.sort_unstable();
        boundary.dedup();
        Self { boundary, ..Self::new(cells) }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.boundary.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        let mut boundary = self.boundary.clone();
        boundary.extend_from_slice(&other.boundary);
        CellSet::with_boundary(cells, boundary)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.cells.iter().all(|c| other.cells.binary_search(c).is_ok())
            && self.boundary.iter().all(|b| other.boundary.binary_search(b).is_ok())
    }
}

#[derive(Clone, Debug)]
pub struct GridDomain {
    spec: GridSpec,
    open: Vec<bool>,
    slot: Vec<u32>,
    cells: Vec<usize>,
    weights: Vec<f64>,
    bverts: Vec<usize>,
    bslot: Vec<u32>,
    weight_mode: WeightMode,
    recipe: Option<DomainRecipe>,
    resolved: Option<DomainRecipe>,
}

impl GridDomain {
    /// Builds a domain from a mask. A closed ring is added when the mask has open border cells.
    pub fn from_mask(spec: GridSpec, mask: Vec<bool>, mode: WeightMode) -> Result<Self> {
        if mask.len() != spec.len() {
            return Err(Error::InvalidDomain(format!(
                "mask has {} entries, grid has {}",
                mask.len(),
                spec.len()
            )));
        }
        let touches_border = (0..spec.nx).any(|i| mask[spec.index(i, 0)] || mask[spec.index(i, spec.ny - 1)])
            || (0..spec.ny).any(|j| mask[spec.index(0, j)] || mask[spec.index(spec.nx - 1, j)]);
        let (spec, mask) = if touches_border {
            let padded = GridSpec::new(
                [spec.origin[0] - spec.h, spec.origin[1] - spec.h],
                spec.h,
                spec.nx + 2,
                spec.ny + 2,
            )?;
            let mut m = vec![false; padded.len()];
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    m[padded.index(i + 1, j + 1)] = mask[spec.index(i, j)];
                }
            }
            (padded, m)
        } else {
            (spec, mask)
        };
        let mut dom = Self::assemble(spec, mask, mode)?;
        dom.recipe = Some(DomainRecipe::new(RecipeKind::CustomMask));
        dom.resolved = dom.recipe.clone();
        Ok(dom)
    }

    pub(crate) fn assemble(spec: GridSpec, open: Vec<bool>, mode: WeightMode) -> Result<Self> {
        let mut slot = vec![NONE; spec.len()];
        let mut cells = Vec::new();
        for (c, &o) in open.iter().enumerate() {
            if o {
                slot[c] = cells.len() as u32;
                cells.push(c);
            }
        }
        if cells.is_empty() {
            return Err(Error::InvalidDomain("no open cells".into()));
        }
        let h2 = spec.h * spec.h;
        let weights: Vec<f64> = cells.iter().map(|&c| mode.cell_weight(spec.center(c), h2)).collect();
        if let Some(bad) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDomain(format!(
                "weight of cell {} is not finite and positive",
                cells[bad]
            )));
        }
        let mut bslot = vec![NONE; spec.len()];
        let mut bverts = Vec::new();
        for c in 0..spec.len() {
            if open[c] {
                continue;
            }
            let (i, j) = spec.ij(c);
            let adj = (i > 0 && open[c - 1])
                || (i + 1 < spec.nx && open[c + 1])
                || (j > 0 && open[c - spec.nx])
                || (j + 1 < spec.ny && open[c + spec.nx]);
            if adj {
                bslot[c] = bverts.len() as u32;
                bverts.push(c);
            }
        }
        Ok(Self {
            spec,
            open,
            slot,
            cells,
            weights,
            bverts,
            bslot,
            weight_mode: mode,
            recipe: None,
            resolved: None,
        })
    }

    pub(crate) fn set_recipes(&mut self, recipe: DomainRecipe, resolved: DomainRecipe) {
        self.recipe = Some(recipe);
        self.resolved = Some(resolved);
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weight_mode
    }

    /// Recipe as requested by the caller.
    pub fn recipe(&self) -> Option<&DomainRecipe> {
        self.recipe.as_ref()
    }

    /// Recipe with every defaulted parameter (truncation depths included) filled in.
    pub fn resolved_recipe(&self) -> Option<&DomainRecipe> {
        self.resolved.as_ref()
    }

    pub fn mask(&self) -> &[bool] {
        &self.open
    }

    #[inline]
    pub fn is_open(&self, c: usize) -> bool {
        self.open[c]
    }

    /// Open cells in grid order; position in this slice is the cell's slot.
    pub fn open_cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn n_open(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn slot(&self, c: usize) -> Option<usize> {
        let s = self.slot[c];
        (s != NONE).then_some(s as usize)
    }

    /// Per-slot weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, c: usize) -> Option<f64> {
        self.slot(c).map(|s| self.weights[s])
    }

    /// Closed cells sharing a side with an open cell, in grid order.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.bverts
    }

    pub fn boundary_slot(&self, c: usize) -> Option<usize> {
        let s = self.bslot[c];
        (s != NONE).then_some(s as usize)
    }

    pub fn is_boundary_vertex(&self, c: usize) -> bool {
        self.bslot[c] != NONE
    }

    /// Side neighbours (left, right, down, up); only valid for cells off the grid border.
    #[inline]
    pub fn neighbors4(&self, c: usize) -> [usize; 4] {
        let nx = self.spec.nx;
        [c - 1, c + 1, c - nx, c + nx]
    }

    /// Side neighbours that exist on the grid.
    pub fn grid_neighbors4(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.spec.ij(c);
        let nx = self.spec.nx;
        let ny = self.spec.ny;
        [
            (i > 0).then(|| c - 1),
            (i + 1 < nx).then(|| c + 1),
            (j > 0).then(|| c - nx),
            (j + 1 < ny).then(|| c + nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Open side neighbours of a cell.
    pub fn open_neighbors4(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.grid_neighbors4(c).filter(move |&n| self.open[n])
    }

    /// Open 8-neighbours of an open cell with their center distance. Diagonal steps are
    /// allowed only when both side cells of the corner are open, so paths never squeeze
    /// between two closed cells that meet at a corner.
    pub fn neighbors8(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let nx = self.spec.nx as isize;
        let h = self.spec.h;
        let d = h * std::f64::consts::SQRT_2;
        let ci = c as isize;
        const STEPS: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];
        STEPS.iter().filter_map(move |&(dx, dy)| {
            let n = (ci + dx + dy * nx) as usize;
            if !self.open[n] {
                return None;
            }
            if dx != 0 && dy != 0 {
                let a = (ci + dx) as usize;
                let b = (ci + dy * nx) as usize;
                if !(self.open[a] && self.open[b]) {
                    return None;
                }
                Some((n, d))
            } else {
                Some((n, h))
            }
        })
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        self.spec.center(c)
    }

    /// Open cell containing the point, if any.
    pub fn open_cell_at(&self, p: [f64; 2]) -> Option<usize> {
        self.spec.locate(p).filter(|&c| self.open[c])
    }

    /// Open cell whose center is nearest to the point.
    pub fn nearest_open(&self, p: [f64; 2]) -> usize {
        if let Some(c) = self.open_cell_at(p) {
            return c;
        }
        let mut best = (f64::INFINITY, self.cells[0]);
        for &c in &self.cells {
            let q = self.center(c);
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }

    /// Boundary vertex whose center is nearest to the point.
    pub fn nearest_boundary_vertex(&self, p: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, self.bverts[0]);
        for &c in &self.bverts {
            let q = self.center(c);
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }

    fn check_open(&self, cells: &[usize]) -> Result<()> {
        match cells.iter().find(|&&c| c >= self.open.len() || !self.open[c]) {
            Some(&c) => Err(Error::InvalidCell(c)),
            None => Ok(()),
        }
    }

    /// Total weight of the given open cells.
    pub fn measure(&self, set: &CellSet) -> Result<f64> {
        self.check_open(&set.cells)?;
        Ok(set.cells.iter().map(|&c| self.weights[self.slot[c] as usize]).sum())
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// 4-connected components of the open cells (or of the restricted open cells),
    /// largest first.
    pub fn components(&self, restrict: Option<&CellSet>) -> Result<Vec<CellSet>> {
        let mut allowed = vec![false; self.spec.len()];
        match restrict {
            Some(set) => {
                self.check_open(&set.cells)?;
                for &c in &set.cells {
                    allowed[c] = true;
                }
            }
            None => {
                for &c in &self.cells {
                    allowed[c] = true;
                }
            }
        }
        let mut seen = vec![false; self.spec.len()];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.spec.len() {
            if !allowed[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(c) = queue.pop_front() {
                comp.push(c);
                for n in self.neighbors4(c) {
                    if allowed[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
            out.push(CellSet::new(comp));
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cells[0].cmp(&b.cells[0])));
        Ok(out)
    }

    /// Regenerates the domain from its recipe at half the cell size.
    pub fn refine(&self) -> Result<GridDomain> {
        match &self.recipe {
            Some(r) if r.kind != RecipeKind::CustomMask => gen_domain(r, self.spec.h / 2.0),
            _ => Err(Error::NotRefinable),
        }
    }

    /// Open cells in the closed disc of radius `r` around `p`.
    pub fn cells_in_disc(&self, p: [f64; 2], r: f64) -> Vec<usize> {
        let s = &self.spec;
        let h = s.h;
        let i0 = (((p[0] - r - s.origin[0]) / h).floor().max(0.0)) as usize;
        let j0 = (((p[1] - r - s.origin[1]) / h).floor().max(0.0)) as usize;
        let i1 = ((((p[0] + r - s.origin[0]) / h).ceil()) as usize).min(s.nx - 1);
        let j1 = ((((p[1] + r - s.origin[1]) / h).ceil()) as usize).min(s.ny - 1);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = s.index(i, j);
                if self.open[c] {
                    let q = s.center_ij(i, j);
                    if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) <= r * r {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}
