use criterion::{criterion_group, criterion_main, Criterion};
use mazcap_bench::{comb, energy_fixture, slit_disc};
use mazcap_core::*;
use std::hint::black_box;

fn energy_gradient(c: &mut Criterion) {
    let (ep, x) = energy_fixture(2f64.powi(-7), 3.0);
    let mut g = vec![0.0; x.len()];
    c.bench_function("energy gradient, slit disc 2^-7, p = 3", |b| {
        b.iter(|| {
            ep.gradient(black_box(&x), &mut g);
            black_box(g[0])
        })
    });
}

fn dirichlet_p2(c: &mut Criterion) {
    let dom = slit_disc(2f64.powi(-6));
    let data = BoundaryData::from_fn(&dom, |q| q[0]);
    c.bench_function("p = 2 Dirichlet solve, slit disc 2^-6", |b| {
        b.iter(|| solve_dirichlet(&DirichletProblem { dom: &dom, p: 2.0, data: data.clone(), opts: SolveOptions::default() }).unwrap())
    });
}

fn maz_boundary(c: &mut Criterion) {
    let dom = comb(2f64.powi(-7));
    let schedule = default_schedule(&dom);
    c.bench_function("Mazurkiewicz boundary, comb 2^-7", |b| b.iter(|| build_maz_boundary(&dom, &schedule).unwrap()));
}

fn mc_batch(c: &mut Criterion) {
    let dom = slit_disc(2f64.powi(-5));
    let data = BoundaryData::from_fn(&dom, |q| q[1]);
    let start = dom.nearest_open([0.5, 0.25]);
    let cfg = WalkConfig { n_walks: mazcap_core::mc_oracle::BATCH, seed: 1, ..Default::default() };
    c.bench_function("random-walk batch, slit disc 2^-5", |b| {
        b.iter(|| harmonic_measure_mc(&dom, start, WalkData::Boundary(&data), &cfg).unwrap().mean)
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = energy_gradient, dirichlet_p2, maz_boundary, mc_batch
}
criterion_main!(kernels);
