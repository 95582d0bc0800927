//! Fixtures shared by the benchmark targets.

use mazcap_core::solver::energy_problem;
use mazcap_core::energy::EnergyProblem;
use mazcap_core::*;

pub fn slit_disc(h: f64) -> GridDomain {
    gen_domain(&DomainRecipe::slit_disc(), h).expect("slit disc")
}

pub fn comb(h: f64) -> GridDomain {
    gen_domain(&DomainRecipe::comb(), h).expect("comb")
}

/// Dirichlet problem for `x y` on the slit disc, with a deterministic trial point.
pub fn energy_fixture(h: f64, p: f64) -> (EnergyProblem, Vec<f64>) {
    let dom = slit_disc(h);
    let data = BoundaryData::from_fn(&dom, |q| q[0] * q[1]);
    let ep = energy_problem(&DirichletProblem { dom: &dom, p, data, opts: SolveOptions::default() }).expect("energy");
    let x = (0..dom.n_open()).map(|k| ((k * 37 % 101) as f64 / 50.0) - 1.0).collect();
    (ep, x)
}
