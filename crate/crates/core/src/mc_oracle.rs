//! Random-walk oracle for `p = 2`. A simple symmetric walk on the open cells is absorbed
//! at the first attempted step into a closed cell and scores the value on that side. With
//! uniform weights this is exactly the harmonic measure of the discrete `p = 2` problem.
//!
//! Walks run in batches of [`BATCH`]; batch `b` draws from stream `b` of the ChaCha8
//! generator keyed by `seed`, and batch sums are merged in batch order, so results do not
//! depend on the thread count.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metric::MazBoundary;
use crate::perron::{side_points, MazBoundaryData};
use crate::solver::{BoundaryData, BoundaryEdges};

pub const BATCH: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub n_walks: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub threads: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { n_walks: 100_000, seed: 0, max_steps: 10_000_000, threads: 1 }
    }
}

/// Boundary values the walk scores on absorption.
#[derive(Clone, Copy, Debug)]
pub enum WalkData<'a> {
    Boundary(&'a BoundaryData),
    Maz(&'a MazBoundary, &'a MazBoundaryData),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_walks: usize,
    pub n_absorbed: usize,
    pub n_timeout: usize,
    /// Absorptions per boundary vertex.
    pub anchor_hits: BTreeMap<usize, u64>,
    /// Absorptions per Mazurkiewicz boundary point, for Maz data.
    pub point_hits: BTreeMap<usize, u64>,
}

struct Walker {
    /// Per slot and direction: an open slot `>= 0`, or `-(side + 1)`.
    next: Vec<[i64; 4]>,
    values: Vec<f64>,
    side_anchor: Vec<usize>,
    side_point: Option<Vec<usize>>,
    reference: f64,
}

#[derive(Default)]
struct Tally {
    sum: f64,
    sumsq: f64,
    absorbed: usize,
    timeout: usize,
    sides: BTreeMap<usize, u64>,
}

impl Walker {
    fn new(dom: &GridDomain, data: WalkData) -> Result<Self> {
        let be = BoundaryEdges::new(dom);
        if be.is_empty() {
            return Err(Error::NoBoundary);
        }
        let (values, side_point) = match data {
            WalkData::Boundary(b) => (b.edge_values(dom, &be)?, None),
            WalkData::Maz(maz, d) => (d.side_values(dom, maz, &be)?, Some(side_points(dom, maz, &be)?)),
        };
        let next = dom
            .open_cells()
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                let mut row = [0i64; 4];
                for (k, n) in dom.neighbors4(c).into_iter().enumerate() {
                    row[k] = match dom.slot(n) {
                        Some(t) => t as i64,
                        None => -(be.find(s, n).unwrap() as i64 + 1),
                    };
                }
                row
            })
            .collect();
        let side_anchor = be.edges.iter().map(|&(_, v)| v as usize).collect();
        Ok(Walker { next, reference: values[0], values, side_anchor, side_point })
    }

    fn batch(&self, start: usize, n: usize, seed: u64, stream: u64, max_steps: u64) -> Tally {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut t = Tally::default();
        for _ in 0..n {
            let mut s = start;
            let mut steps = 0u64;
            let mut bits = 0u64;
            let mut left = 0;
            let side = loop {
                if steps == max_steps {
                    break None;
                }
                if left == 0 {
                    bits = rng.next_u64();
                    left = 32;
                }
                let n = self.next[s][(bits & 3) as usize];
                bits >>= 2;
                left -= 1;
                steps += 1;
                if n < 0 {
                    break Some((-n - 1) as usize);
                }
                s = n as usize;
            };
            match side {
                Some(e) => {
                    let d = self.values[e] - self.reference;
                    t.sum += d;
                    t.sumsq += d * d;
                    t.absorbed += 1;
                    *t.sides.entry(e).or_default() += 1;
                }
                None => t.timeout += 1,
            }
        }
        t
    }
}

/// Estimates the harmonic measure integral of the data from the open cell `start`.
pub fn harmonic_measure_mc(dom: &GridDomain, start: usize, data: WalkData, cfg: &WalkConfig) -> Result<McEstimate> {
    if cfg.n_walks == 0 || cfg.max_steps == 0 {
        return Err(Error::BadParams("walk counts must be positive".into()));
    }
    let slot = dom.slot(start).ok_or(Error::InvalidCell(start))?;
    let walker = Walker::new(dom, data)?;
    let n_batches = cfg.n_walks.div_ceil(BATCH);
    let size = |b: usize| BATCH.min(cfg.n_walks - b * BATCH);
    let threads = cfg.threads.max(1).min(n_batches);
    let tallies: Vec<Tally> = if threads == 1 {
        (0..n_batches).map(|b| walker.batch(slot, size(b), cfg.seed, b as u64, cfg.max_steps)).collect()
    } else {
        let mut out: Vec<Option<Tally>> = (0..n_batches).map(|_| None).collect();
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let walker = &walker;
                    sc.spawn(move || {
                        (w..n_batches)
                            .step_by(threads)
                            .map(|b| (b, walker.batch(slot, size(b), cfg.seed, b as u64, cfg.max_steps)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for hd in handles {
                for (b, t) in hd.join().expect("walk worker panicked") {
                    out[b] = Some(t);
                }
            }
        });
        out.into_iter().map(Option::unwrap).collect()
    };
    let mut total = Tally::default();
    for t in tallies {
        total.sum += t.sum;
        total.sumsq += t.sumsq;
        total.absorbed += t.absorbed;
        total.timeout += t.timeout;
        for (e, k) in t.sides {
            *total.sides.entry(e).or_default() += k;
        }
    }
    let n = total.absorbed as f64;
    let (mean, stderr) = if total.absorbed == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let m = total.sum / n;
        let var = if total.absorbed > 1 { ((total.sumsq - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
        (walker.reference + m, (var / n).sqrt())
    };
    let mut anchor_hits = BTreeMap::new();
    let mut point_hits = BTreeMap::new();
    for (&e, &k) in &total.sides {
        *anchor_hits.entry(walker.side_anchor[e]).or_default() += k;
        if let Some(sp) = &walker.side_point {
            *point_hits.entry(sp[e]).or_default() += k;
        }
    }
    Ok(McEstimate {
        mean,
        stderr,
        n_walks: cfg.n_walks,
        n_absorbed: total.absorbed,
        n_timeout: total.timeout,
        anchor_hits,
        point_hits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub probe: [f64; 2],
    pub cell: usize,
    pub solver: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub gap: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub rows: Vec<CrosscheckRow>,
    pub pass: bool,
}

/// Compares a `p = 2` solution with walk estimates at the open cells holding the probes;
/// a probe passes when `|solution - mean| <= 3 stderr + 0.02`. Probe `k` uses the seed
/// `seed + k`.
pub fn mc_crosscheck(
    dom: &GridDomain,
    data: WalkData,
    solution: &ScalarField,
    probes: &[[f64; 2]],
    cfg: &WalkConfig,
) -> Result<CrosscheckReport> {
    solution.check(dom)?;
    let mut rows = Vec::new();
    for (k, &q) in probes.iter().enumerate() {
        let cell = dom.open_cell_at(q).ok_or_else(|| Error::BadParams(format!("probe {q:?} is not in the domain")))?;
        let c = WalkConfig { seed: cfg.seed.wrapping_add(k as u64), ..*cfg };
        let est = harmonic_measure_mc(dom, cell, data, &c)?;
        let solver = solution.at(dom, cell).unwrap();
        let gap = (solver - est.mean).abs();
        let allowed = 3.0 * est.stderr + 0.02;
        rows.push(CrosscheckRow {
            probe: q,
            cell,
            solver,
            mc_mean: est.mean,
            mc_stderr: est.stderr,
            gap,
            allowed,
            pass: gap <= allowed,
        });
    }
    Ok(CrosscheckReport { pass: rows.iter().all(|r| r.pass), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{gen_domain, DomainRecipe};

    #[test]
    fn constant_data_is_exact() {
        let dom = gen_domain(&DomainRecipe::square(1.0), 1.0 / 16.0).unwrap();
        let data = BoundaryData::constant(&dom, 0.7);
        let cfg = WalkConfig { n_walks: 3000, ..Default::default() };
        let e = harmonic_measure_mc(&dom, dom.open_cell_at([0.5, 0.5]).unwrap(), WalkData::Boundary(&data), &cfg).unwrap();
        assert_eq!(e.mean, 0.7);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.n_absorbed + e.n_timeout, 3000);
    }

    #[test]
    fn threads_do_not_change_the_estimate() {
        let dom = gen_domain(&DomainRecipe::square(1.0), 1.0 / 16.0).unwrap();
        let data = BoundaryData::from_fn(&dom, |q| q[0]);
        let start = dom.open_cell_at([0.3, 0.6]).unwrap();
        let cfg = WalkConfig { n_walks: 5000, seed: 9, ..Default::default() };
        let a = harmonic_measure_mc(&dom, start, WalkData::Boundary(&data), &cfg).unwrap();
        let b = harmonic_measure_mc(&dom, start, WalkData::Boundary(&data), &WalkConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn timeouts_are_counted() {
        let dom = gen_domain(&DomainRecipe::square(1.0), 1.0 / 32.0).unwrap();
        let data = BoundaryData::constant(&dom, 1.0);
        let cfg = WalkConfig { n_walks: 200, max_steps: 3, ..Default::default() };
        let e = harmonic_measure_mc(&dom, dom.open_cell_at([0.5, 0.5]).unwrap(), WalkData::Boundary(&data), &cfg).unwrap();
        assert_eq!(e.n_timeout, 200);
        assert!(e.mean.is_nan());
    }
}
