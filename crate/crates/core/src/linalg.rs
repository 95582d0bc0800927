//! Sparse symmetric positive definite systems: CSR storage, an aggregation multigrid
//! preconditioner and preconditioned conjugate gradients.
//!
//! Aggregates are the connected pieces of 2x2 blocks of grid positions, so coarse levels
//! never merge cells across a wall. The coarse operators are Galerkin products with
//! piecewise-constant prolongation, and the cycle is a symmetric V-cycle with
//! Gauss-Seidel smoothing, hence a valid preconditioner for CG.

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Assembles a symmetric matrix from its diagonal and off-diagonal couplings
    /// `(i, j, a_ij)` with `i != j`; each pair is given once.
    pub fn from_couplings(diag: &[f64], off: &[(u32, u32, f64)]) -> Self {
        let n = diag.len();
        let mut count = vec![1usize; n];
        for &(i, j, _) in off {
            count[i as usize] += 1;
            count[j as usize] += 1;
        }
        let mut indptr = vec![0usize; n + 1];
        for i in 0..n {
            indptr[i + 1] = indptr[i] + count[i];
        }
        let nnz = indptr[n];
        let mut indices = vec![0u32; nnz];
        let mut data = vec![0.0; nnz];
        let mut fill: Vec<usize> = indptr[..n].to_vec();
        for i in 0..n {
            indices[fill[i]] = i as u32;
            data[fill[i]] = diag[i];
            fill[i] += 1;
        }
        for &(i, j, v) in off {
            let (iu, ju) = (i as usize, j as usize);
            indices[fill[iu]] = j;
            data[fill[iu]] = v;
            fill[iu] += 1;
            indices[fill[ju]] = i;
            data[fill[ju]] = v;
            fill[ju] += 1;
        }
        let mut m = Csr { n, indptr, indices, data };
        m.sort_rows();
        m
    }

    fn sort_rows(&mut self) {
        let mut buf: Vec<(u32, f64)> = Vec::new();
        for i in 0..self.n {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            buf.clear();
            buf.extend((a..b).map(|k| (self.indices[k], self.data[k])));
            buf.sort_unstable_by_key(|e| e.0);
            for (k, &(c, v)) in (a..b).zip(buf.iter()) {
                self.indices[k] = c;
                self.data[k] = v;
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k] as usize];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.indptr[i]..self.indptr[i + 1])
                    .find(|&k| self.indices[k] as usize == i)
                    .map_or(0.0, |k| self.data[k])
            })
            .collect()
    }
}

struct Level {
    a: Csr,
    diag: Vec<f64>,
    /// Fine index to aggregate index on the next level.
    agg: Vec<u32>,
    nc: usize,
}

/// Multigrid hierarchy used as a CG preconditioner.
pub struct Amg {
    levels: Vec<Level>,
    coarse: Csr,
    chol: Vec<f64>,
    /// Multiplier on the coarse correction; unsmoothed aggregation under-corrects.
    pub omega_c: f64,
    pub sweeps: usize,
    work: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

const COARSE_MAX: usize = 400;
/// Strength threshold for joining two unknowns into one aggregate.
const STRENGTH: f64 = 0.25;

fn dense_cholesky(a: &Csr) -> Vec<f64> {
    let n = a.n;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for k in a.indptr[i]..a.indptr[i + 1] {
            m[i * n + a.indices[k] as usize] = a.data[k];
        }
    }
    let scale = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        let d = if d > 1e-14 * scale { d.sqrt() } else { (1e-14 * scale).sqrt() };
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    m
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Aggregates nodes sharing a 2x2 block of positions and connected inside it through
/// strong couplings, `|a_ij| >= theta * max_k |a_ik|` in either row.
fn aggregate(a: &Csr, pos: &[[i32; 2]], theta: f64) -> (Vec<u32>, Vec<[i32; 2]>) {
    let n = a.n;
    let key = |i: usize| [pos[i][0].div_euclid(2), pos[i][1].div_euclid(2)];
    let row_max: Vec<f64> = (0..n)
        .map(|i| {
            (a.indptr[i]..a.indptr[i + 1])
                .filter(|&k| a.indices[k] as usize != i)
                .map(|k| a.data[k].abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    for i in 0..n {
        let ki = key(i);
        for k in a.indptr[i]..a.indptr[i + 1] {
            let j = a.indices[k] as usize;
            let v = a.data[k].abs();
            let strong = v > 0.0 && (v >= theta * row_max[i] || v >= theta * row_max[j]);
            if j > i && strong && key(j) == ki {
                let (ri, rj) = (find(&mut parent, i as u32), find(&mut parent, j as u32));
                if ri != rj {
                    parent[ri.max(rj) as usize] = ri.min(rj);
                }
            }
        }
    }
    let mut agg = vec![u32::MAX; n];
    let mut cpos = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i as u32) as usize;
        if agg[r] == u32::MAX {
            agg[r] = cpos.len() as u32;
            cpos.push(key(r));
        }
        agg[i] = agg[r];
    }
    (agg, cpos)
}

/// Galerkin product `P^T A P` for piecewise-constant `P`.
fn galerkin(a: &Csr, agg: &[u32], nc: usize) -> Csr {
    let mut order: Vec<u32> = (0..a.n as u32).collect();
    order.sort_unstable_by_key(|&i| agg[i as usize]);
    let mut indptr = vec![0usize; nc + 1];
    let mut indices = Vec::with_capacity(a.nnz() / 2);
    let mut data = Vec::with_capacity(a.nnz() / 2);
    let mut marker = vec![usize::MAX; nc];
    let mut pos = 0;
    for ci in 0..nc {
        let row_start = indices.len();
        while pos < order.len() && agg[order[pos] as usize] as usize == ci {
            let i = order[pos] as usize;
            for k in a.indptr[i]..a.indptr[i + 1] {
                let cj = agg[a.indices[k] as usize] as usize;
                if marker[cj] == usize::MAX || marker[cj] < row_start {
                    marker[cj] = indices.len();
                    indices.push(cj as u32);
                    data.push(a.data[k]);
                } else {
                    data[marker[cj]] += a.data[k];
                }
            }
            pos += 1;
        }
        indptr[ci + 1] = indices.len();
    }
    let mut m = Csr { n: nc, indptr, indices, data };
    m.sort_rows();
    m
}

impl Amg {
    pub fn new(a: Csr, pos: &[[i32; 2]]) -> Self {
        assert_eq!(a.n, pos.len());
        let mut levels = Vec::new();
        let mut cur = a;
        let mut cur_pos = pos.to_vec();
        while cur.n > COARSE_MAX {
            let (agg, cpos) = aggregate(&cur, &cur_pos, STRENGTH);
            let nc = cpos.len();
            if nc as f64 > 0.85 * cur.n as f64 {
                break;
            }
            let next = galerkin(&cur, &agg, nc);
            let diag = cur.diagonal();
            levels.push(Level { a: cur, diag, agg, nc });
            cur = next;
            cur_pos = cpos;
        }
        let (coarse, chol) = if cur.n <= 4 * COARSE_MAX {
            let l = dense_cholesky(&cur);
            (cur, l)
        } else {
            // Coarsening stalled; the last level is smoothed instead of solved.
            let diag = cur.diagonal();
            let n = cur.n;
            levels.push(Level { a: cur, diag, agg: vec![0; n], nc: 0 });
            (Csr { n: 0, indptr: vec![0], indices: vec![], data: vec![] }, vec![])
        };
        let work = levels.iter().map(|l| (vec![0.0; l.a.n], vec![0.0; l.a.n], vec![0.0; l.a.n])).collect();
        Amg { levels, coarse, chol, omega_c: 1.0, sweeps: 1, work }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    fn gs_forward(l: &Level, x: &mut [f64], b: &[f64]) {
        let a = &l.a;
        for i in 0..a.n {
            let mut s = b[i];
            for k in a.indptr[i]..a.indptr[i + 1] {
                let j = a.indices[k] as usize;
                if j != i {
                    s -= a.data[k] * x[j];
                }
            }
            x[i] = s / l.diag[i];
        }
    }

    fn gs_backward(l: &Level, x: &mut [f64], b: &[f64]) {
        let a = &l.a;
        for i in (0..a.n).rev() {
            let mut s = b[i];
            for k in a.indptr[i]..a.indptr[i + 1] {
                let j = a.indices[k] as usize;
                if j != i {
                    s -= a.data[k] * x[j];
                }
            }
            x[i] = s / l.diag[i];
        }
    }

    fn cycle(&mut self, lvl: usize, b: &[f64], x: &mut [f64]) {
        if lvl == self.levels.len() {
            x.copy_from_slice(b);
            cholesky_solve(&self.chol, self.coarse.n, x);
            return;
        }
        let sweeps = self.sweeps;
        let omega = self.omega_c;
        x.iter_mut().for_each(|v| *v = 0.0);
        let (mut r, mut bc, mut xc) = std::mem::take(&mut self.work[lvl]);
        {
            let l = &self.levels[lvl];
            for _ in 0..sweeps {
                Self::gs_forward(l, x, b);
            }
            if l.nc == 0 {
                for _ in 0..sweeps {
                    Self::gs_backward(l, x, b);
                }
                self.work[lvl] = (r, bc, xc);
                return;
            }
            l.a.matvec(x, &mut r);
            bc.clear();
            bc.resize(l.nc, 0.0);
            for i in 0..l.a.n {
                bc[l.agg[i] as usize] += b[i] - r[i];
            }
            xc.clear();
            xc.resize(l.nc, 0.0);
        }
        self.cycle(lvl + 1, &bc, &mut xc);
        let l = &self.levels[lvl];
        for i in 0..l.a.n {
            x[i] += omega * xc[l.agg[i] as usize];
        }
        for _ in 0..sweeps {
            Self::gs_backward(l, x, b);
        }
        self.work[lvl] = (r, bc, xc);
    }

    pub fn apply(&mut self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG on `A x = b`, starting from the given `x`. Stops when
/// `|r| <= rtol |b|` or after `max_iter` iterations.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], amg: &mut Amg, rtol: f64, max_iter: usize) -> CgStats {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats { iterations: 0, rel_residual: 0.0 };
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    amg.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while it < max_iter && rel > rtol {
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= rtol {
            break;
        }
        amg.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgStats { iterations: it, rel_residual: rel }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(n: usize) -> (Csr, Vec<[i32; 2]>) {
        let idx = |i: usize, j: usize| (j * n + i) as u32;
        let mut off = Vec::new();
        let mut diag = vec![0.0; n * n];
        let mut pos = Vec::new();
        for j in 0..n {
            for i in 0..n {
                pos.push([i as i32, j as i32]);
                diag[idx(i, j) as usize] = 4.0;
                if i + 1 < n {
                    off.push((idx(i, j), idx(i + 1, j), -1.0));
                }
                if j + 1 < n {
                    off.push((idx(i, j), idx(i, j + 1), -1.0));
                }
            }
        }
        (Csr::from_couplings(&diag, &off), pos)
    }

    #[test]
    fn pcg_solves_poisson() {
        let (a, pos) = poisson(100);
        let xs: Vec<f64> = (0..a.n).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let mut b = vec![0.0; a.n];
        a.matvec(&xs, &mut b);
        let mut amg = Amg::new(a.clone(), &pos);
        let mut x = vec![0.0; a.n];
        let st = pcg(&a, &b, &mut x, &mut amg, 1e-12, 500);
        assert!(st.rel_residual <= 1e-12, "{st:?}");
        let err = x.iter().zip(&xs).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(st.iterations < 60, "{st:?}");
    }

    #[test]
    fn galerkin_preserves_row_sums() {
        let (a, pos) = poisson(10);
        let (agg, cpos) = aggregate(&a, &pos, 0.0);
        assert_eq!(cpos.len(), 25);
        let c = galerkin(&a, &agg, cpos.len());
        let fine: f64 = a.data.iter().sum();
        let coarse: f64 = c.data.iter().sum();
        assert!((fine - coarse).abs() < 1e-12);
    }
}
