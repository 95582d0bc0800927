//! Named boundary data and target sets.

use mazcap_core::perron::PerturbSet;
use mazcap_core::{BoundaryData, GridDomain, MazBoundary, MazBoundaryData, TargetSet};

use crate::config::{parse_num, usage};

pub const DATA_NAMES: [&str; 9] = ["zero", "one", "x", "y", "xy", "x2-y2", "comb_jump", "double_comb_jump", "upper_slit"];

/// `y` on the strips `2^-2j < x < 2^(1-2j)`, `j >= 1`, for `0 <= y <= 1`; zero elsewhere.
pub fn comb_jump(q: [f64; 2]) -> f64 {
    let [x, y] = q;
    if !(0.0..=1.0).contains(&y) || x <= 0.0 || x >= 0.5 {
        return 0.0;
    }
    // x lies in (2^-2j, 2^(1-2j)) exactly when floor(-log2 x) is odd.
    let k = (-x.log2()).floor() as i64;
    let on_edge = x == (-(k as f64)).exp2();
    if k % 2 == 1 && !on_edge {
        y
    } else {
        0.0
    }
}

/// `y` for `0 <= x <= 1`, `0 < y <= 1`; zero elsewhere.
pub fn double_comb_jump(q: [f64; 2]) -> f64 {
    if (0.0..=1.0).contains(&q[0]) && q[1] > 0.0 && q[1] <= 1.0 {
        q[1]
    } else {
        0.0
    }
}

/// A named function of a boundary point. For Mazurkiewicz data it is evaluated halfway
/// between the anchor and the representative open cell, which tells the two sides of a
/// slit apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NamedData(&'static str);

impl NamedData {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        DATA_NAMES
            .iter()
            .find(|&&n| n == s)
            .map(|&n| NamedData(n))
            .ok_or_else(|| usage(format!("unknown data `{s}` (known: {})", DATA_NAMES.join(", "))))
    }

    pub fn name(self) -> &'static str {
        self.0
    }

    pub fn eval(self, q: [f64; 2]) -> f64 {
        let [x, y] = q;
        match self.0 {
            "zero" => 0.0,
            "one" => 1.0,
            "x" => x,
            "y" => y,
            "xy" => x * y,
            "x2-y2" => x * x - y * y,
            "comb_jump" => comb_jump(q),
            "double_comb_jump" => double_comb_jump(q),
            // Side data only; a single value per boundary cell cannot tell the sides apart.
            "upper_slit" => 0.0,
            _ => unreachable!(),
        }
    }

    /// Value for a side: `anchor` is the boundary cell, `rep` the open cell beside it.
    pub fn eval_side(self, anchor: [f64; 2], rep: [f64; 2], h: f64) -> f64 {
        match self.0 {
            // One on the upper side of the slit (0, 1) x {0}.
            "upper_slit" => {
                let on_slit = anchor[0] > 0.0 && anchor[0] < 1.0 && anchor[1].abs() < h;
                (on_slit && rep[1] > anchor[1]) as u8 as f64
            }
            _ => self.eval([0.5 * (anchor[0] + rep[0]), 0.5 * (anchor[1] + rep[1])]),
        }
    }

    pub fn boundary(self, dom: &GridDomain) -> BoundaryData {
        BoundaryData::from_fn(dom, |q| self.eval(q))
    }

    pub fn maz(self, dom: &GridDomain, maz: &MazBoundary) -> MazBoundaryData {
        let h = dom.h();
        MazBoundaryData::from_fn(dom, maz, |a, r| self.eval_side(a, r, h))
    }
}

/// Parses `disc:cx,cy,r`, `segment:x0,y0,x1,y1` or `point:x,y`.
pub fn parse_target(dom: &GridDomain, s: &str) -> anyhow::Result<TargetSet> {
    let bad = || usage(format!("bad target `{s}`: use disc:cx,cy,r, segment:x0,y0,x1,y1 or point:x,y"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = rest.split(',').map(parse_num).collect::<Option<_>>().ok_or_else(bad)?;
    let t = match (kind, nums.as_slice()) {
        ("disc", &[cx, cy, r]) if r > 0.0 => {
            TargetSet::from_region(dom, |q| (q[0] - cx).hypot(q[1] - cy) <= r)
        }
        ("segment", &[x0, y0, x1, y1]) => TargetSet::new(vec![], PerturbSet::segment([x0, y0], [x1, y1]).anchors(dom)),
        ("point", &[x, y]) => TargetSet::new(vec![], vec![dom.nearest_boundary_vertex([x, y])]),
        _ => return Err(bad()),
    };
    if t.is_empty() {
        return Err(usage(format!("target `{s}` selects no cells at h = {}", dom.h())));
    }
    Ok(t)
}

/// Parses `cx,cy,r;cx,cy,r` into discs.
pub fn parse_discs(s: &str) -> anyhow::Result<Vec<[f64; 3]>> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(';')
        .map(|d| {
            let v: Option<Vec<f64>> = d.split(',').map(parse_num).collect();
            match v.as_deref() {
                Some(&[x, y, r]) => Ok([x, y, r]),
                _ => Err(usage(format!("bad disc `{d}`: use cx,cy,r"))),
            }
        })
        .collect()
}
