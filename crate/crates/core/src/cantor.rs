//! Cantor constructions shared by the Cantor recipes and witnesses.
//!
//! Generation `n` of the one-dimensional set consists of `2^n` closed intervals of length
//! `alpha_n = 2^-n (1 + c_n)`, obtained by removing open middle intervals from the
//! previous generation, starting from `[0, 1 + c_0]`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The sequence `c_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSeq {
    /// `c_n = 2^-n`.
    Pow2,
    /// `c_n = 2^(-n^2)`.
    Pow2Sq,
    /// `c_n = c0 * ratio^n`.
    Geometric { c0: f64, ratio: f64 },
}

impl CSeq {
    pub fn c(&self, n: u32) -> f64 {
        match *self {
            CSeq::Pow2 => (-(n as f64)).exp2(),
            CSeq::Pow2Sq => (-((n * n) as f64)).exp2(),
            CSeq::Geometric { c0, ratio } => c0 * ratio.powi(n as i32),
        }
    }

    /// `c_n` must be positive and strictly decreasing; `c_0 <= 1` keeps `[0, 1 + c_0]`
    /// inside the recipes' outer square.
    pub fn validate(&self) -> Result<()> {
        if let CSeq::Geometric { c0, ratio } = *self {
            if !(c0 > 0.0 && ratio > 0.0 && ratio < 1.0) {
                return Err(Error::BadParams("geometric c_n needs c0 > 0 and 0 < ratio < 1".into()));
            }
        }
        let c0 = self.c(0);
        if c0 > 1.0 {
            return Err(Error::BadParams(format!("c_0 = {c0} exceeds 1")));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            CSeq::Pow2 => "pow2",
            CSeq::Pow2Sq => "pow2sq",
            CSeq::Geometric { .. } => "geometric",
        }
    }

    pub fn alpha(&self, n: u32) -> f64 {
        (-(n as f64)).exp2() * (1.0 + self.c(n))
    }

    /// Length of the middle gap removed when passing from generation `n - 1` to `n`.
    pub fn gap(&self, n: u32) -> f64 {
        self.alpha(n - 1) - 2.0 * self.alpha(n)
    }

    /// Left endpoints of the `2^n` intervals of generation `n`.
    pub fn interval_starts(&self, n: u32) -> Vec<f64> {
        let mut starts = vec![0.0];
        for g in 1..=n {
            let shift = self.alpha(g - 1) - self.alpha(g);
            starts = starts.iter().flat_map(|&a| [a, a + shift]).collect();
        }
        starts
    }

    /// The `4^n` squares `[x0, x1, y0, y1]` of generation `n`.
    pub fn squares(&self, n: u32) -> Vec<[f64; 4]> {
        let a = self.alpha(n);
        let starts = self.interval_starts(n);
        let mut out = Vec::with_capacity(starts.len() * starts.len());
        for &y in &starts {
            for &x in &starts {
                out.push([x, x + a, y, y + a]);
            }
        }
        out
    }

    /// Side of the concentric square `Q*` around a generation-`n` square.
    pub fn beta(&self, n: u32) -> f64 {
        self.alpha(n) - 2.0 * self.alpha(n + 1) + 2.0 * self.alpha(n + 2)
    }
}

/// Area of `K ∩ (K*_m \ ∪_{k<=n<m} K*_n)` as a fraction of the area of `K`, exactly:
/// `(3/4)^(m-k) / 4`.
pub fn lambda2_layer(k: u32, m: u32) -> BigRational {
    assert!(m >= k);
    let three_quarters = BigRational::new(BigInt::from(3), BigInt::from(4));
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    num_traits::pow(three_quarters, (m - k) as usize) * quarter
}

/// `Σ_{n=k}^{m} lambda2_layer(k, n)`.
pub fn lambda2_partial_sum(k: u32, m: u32) -> BigRational {
    (k..=m).fold(BigRational::zero(), |acc, n| acc + lambda2_layer(k, n))
}

/// Bound `16 * 2^n * c_n^(1/p)` on the norm of `u_n`.
pub fn un_bound(seq: &CSeq, n: u32, p: f64) -> f64 {
    16.0 * (n as f64).exp2() * seq.c(n).powf(1.0 / p)
}

/// Bound `16 * Σ_{n>=k} 2^n c_n^(1/p)` on the norm of `v_k`, summed until terms drop
/// below `1e-18` of the running total.
pub fn vk_bound(seq: &CSeq, k: u32, p: f64) -> f64 {
    let mut total = 0.0;
    for n in k..k + 4000 {
        let t = un_bound(seq, n, p);
        total += t;
        if n > k + 2 && t <= 1e-18 * total {
            break;
        }
    }
    total
}
