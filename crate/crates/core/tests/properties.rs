//! Property tests for the invariants of each module.

use mazcap_core::capacity::CapacityOptions;
use mazcap_core::field::{newtonian_norm, upper_gradient, verify_upper_gradient_along_path};
use mazcap_core::metric::{inner_distance, mazurkiewicz_distance};
use mazcap_core::perron::GeneralizedBoundary;
use mazcap_core::*;
use proptest::prelude::*;

fn pow2(k: i32) -> f64 {
    2f64.powi(-k)
}

fn square(k: i32) -> GridDomain {
    gen_domain(&DomainRecipe::square(1.0), pow2(k)).unwrap()
}

fn slit_disc(k: i32) -> GridDomain {
    gen_domain(&DomainRecipe::slit_disc(), pow2(k)).unwrap()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn pick(v: &[usize], t: f64) -> usize {
    v[((t * v.len() as f64) as usize).min(v.len() - 1)]
}

fn field(dom: &GridDomain, vals: &[f64]) -> ScalarField {
    ScalarField::new(dom, (0..dom.n_open()).map(|k| vals[k % vals.len()]).collect()).unwrap()
}

fn vertex_data(dom: &GridDomain, vals: &[f64]) -> Vec<f64> {
    (0..dom.boundary_vertices().len()).map(|k| vals[k % vals.len()]).collect()
}

fn solve(dom: &GridDomain, p: f64, data: BoundaryData) -> ScalarField {
    solve_dirichlet(&DirichletProblem { dom, p, data, opts: SolveOptions::default() }).unwrap().0
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, f64::max)
}

mod domain {
    use super::*;

    #[test]
    fn named_recipes_are_connected() {
        for r in [
            DomainRecipe::square(1.0),
            DomainRecipe::slit_disc(),
            DomainRecipe::comb(),
            DomainRecipe::thick_comb(),
            DomainRecipe::double_comb(),
            DomainRecipe::countable_comb(),
            DomainRecipe::cantor_arcs(),
            DomainRecipe::cantor_thick(),
        ] {
            let k = if matches!(r.kind, RecipeKind::CantorArcs | RecipeKind::CantorThick) { 9 } else { 7 };
            let dom = gen_domain(&r, pow2(k)).unwrap();
            assert_eq!(dom.components(None).unwrap().len(), 1, "{:?}", r.kind);
        }
    }

    #[test]
    fn coarse_region_lies_in_dilated_fine_region() {
        for r in [DomainRecipe::comb(), DomainRecipe::double_comb(), DomainRecipe::slit_disc(), DomainRecipe::cusp(2.0)] {
            let coarse = gen_domain(&r, pow2(6)).unwrap();
            let fine = coarse.refine().unwrap();
            let h = coarse.h();
            for &c in coarse.open_cells() {
                assert!(!fine.cells_in_disc(coarse.center(c), 1.5 * h).is_empty(), "{:?}", r.kind);
            }
        }
    }

    proptest! {
        #![proptest_config(cases(48))]

        #[test]
        fn measure_adds_over_components(bits in prop::collection::vec(prop::bool::weighted(0.6), 12 * 12)) {
            prop_assume!(bits.iter().any(|&b| b));
            let spec = GridSpec::new([0.0, 0.0], 0.125, 12, 12).unwrap();
            let dom = GridDomain::from_mask(spec, bits, WeightMode::Uniform).unwrap();
            let comps = dom.components(None).unwrap();
            let sum: f64 = comps.iter().map(|c| dom.measure(c).unwrap()).sum();
            prop_assert!((sum - dom.total_measure()).abs() <= 1e-12);
            prop_assert_eq!(comps.iter().map(|c| c.len()).sum::<usize>(), dom.n_open());
        }
    }
}

mod metric {
    use super::*;

    proptest! {
        #![proptest_config(cases(24))]

        #[test]
        fn distances_are_ordered(s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let dom = slit_disc(5);
            let h = dom.h();
            let (a, b) = (pick(dom.open_cells(), s), pick(dom.open_cells(), t));
            let e = dom.spec().dist(a, b);
            let d = mazurkiewicz_distance(&dom, a, b, 0.0).unwrap();
            let inner = inner_distance(&dom, a, b).unwrap();
            prop_assert!(d.lo <= d.hi);
            prop_assert!(e <= d.hi + 2.0 * h);
            prop_assert!(d.lo <= inner + 2.0 * h);
            prop_assert!(e <= inner + 2.0 * h);
        }

        #[test]
        fn tighter_tolerance_only_narrows(s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let dom = slit_disc(5);
            let (a, b) = (pick(dom.open_cells(), s), pick(dom.open_cells(), t));
            let loose = mazurkiewicz_distance(&dom, a, b, 0.5).unwrap();
            let tight = mazurkiewicz_distance(&dom, a, b, 0.0).unwrap();
            prop_assert!(tight.hi <= loose.hi + 1e-12);
            prop_assert!(tight.lo >= loose.lo - 1e-12);
        }

        #[test]
        fn square_distance_is_euclidean(s in 0.0..1.0f64, t in 0.0..1.0f64) {
            let dom = square(5);
            let (a, b) = (pick(dom.open_cells(), s), pick(dom.open_cells(), t));
            let d = mazurkiewicz_distance(&dom, a, b, 0.0).unwrap();
            prop_assert!((d.hi - dom.spec().dist(a, b)).abs() <= 4.0 * dom.h());
        }
    }

    #[test]
    fn fibers_partition_the_points() {
        for r in [DomainRecipe::slit_disc(), DomainRecipe::comb(), DomainRecipe::double_comb()] {
            let dom = gen_domain(&r, pow2(6)).unwrap();
            let maz = build_maz_boundary(&dom, &default_schedule(&dom)).unwrap();
            assert_eq!(maz.fibers.iter().map(|f| f.points.len()).sum::<usize>(), maz.points.len());
            for (k, q) in maz.points.iter().enumerate() {
                assert_eq!(maz.phi(k), q.anchor);
                assert!(maz.fiber(q.anchor).unwrap().points.contains(&k));
            }
            for f in &maz.fibers {
                assert!(!f.points.is_empty());
            }
        }
    }

    #[test]
    fn fibers_at_the_comb_limit_grow_under_refinement() {
        for r in [DomainRecipe::comb(), DomainRecipe::double_comb()] {
            let mut last = 0;
            for k in [6, 7] {
                let dom = gen_domain(&r, pow2(k)).unwrap();
                let maz = build_maz_boundary(&dom, &default_schedule(&dom)).unwrap();
                let a = dom.nearest_boundary_vertex([0.0, 0.5]);
                let n = maz.fiber(a).map_or(0, |f| f.points.len());
                assert!(n >= last, "{:?}: {n} after {last}", r.kind);
                last = n;
            }
        }
    }
}

mod field {
    use super::*;

    fn random_path(dom: &GridDomain, start: usize, steps: &[usize]) -> Vec<usize> {
        let mut path = vec![start];
        for &s in steps {
            let c = *path.last().unwrap();
            let nbrs: Vec<usize> = dom.neighbors8(c).map(|(n, _)| n).collect();
            path.push(nbrs[s % nbrs.len()]);
        }
        path
    }

    proptest! {
        #![proptest_config(cases(48))]

        #[test]
        fn upper_gradient_holds_on_paths(
            vals in prop::collection::vec(-1.0..1.0f64, 1..40),
            s in 0.0..1.0f64,
            steps in prop::collection::vec(0usize..8, 1..60),
        ) {
            let dom = slit_disc(4);
            let u = field(&dom, &vals);
            let g = upper_gradient(&dom, &u).unwrap();
            prop_assert!(g.g.iter().all(|v| v.is_finite() && *v >= 0.0));
            let path = random_path(&dom, pick(dom.open_cells(), s), &steps);
            prop_assert!(verify_upper_gradient_along_path(&dom, &u, &g, &path).unwrap().pass);
        }

        #[test]
        fn truncation_kills_the_gradient_above_the_level(
            vals in prop::collection::vec(-1.0..1.0f64, 1..40),
            c in -0.5..0.5f64,
        ) {
            let dom = square(4);
            let u = field(&dom, &vals);
            let m = u.map(|v| v.min(c));
            let (gu, gm) = (upper_gradient(&dom, &u).unwrap(), upper_gradient(&dom, &m).unwrap());
            for (k, &cell) in dom.open_cells().iter().enumerate() {
                let stencil: Vec<f64> = std::iter::once(cell)
                    .chain(dom.neighbors8(cell).map(|(n, _)| n))
                    .map(|n| u.values[dom.slot(n).unwrap()])
                    .collect();
                if stencil.iter().all(|&v| v >= c) {
                    prop_assert_eq!(gm.g[k], 0.0);
                }
                if stencil.iter().all(|&v| v < c) {
                    prop_assert!(gm.g[k] <= gu.g[k] + 1e-15);
                }
            }
        }

        #[test]
        fn norm_is_homogeneous(
            vals in prop::collection::vec(-1.0..1.0f64, 1..40),
            lambda in -4.0..4.0f64,
            p in 1.1..4.0f64,
        ) {
            let dom = square(4);
            let u = field(&dom, &vals);
            let n = newtonian_norm(&dom, &u, p).unwrap().total;
            let nl = newtonian_norm(&dom, &u.map(|v| lambda * v), p).unwrap().total;
            prop_assert!((nl - lambda.abs() * n).abs() <= 1e-9 * (1.0 + n * lambda.abs()));
        }

        #[test]
        fn energy_is_convex(
            a in prop::collection::vec(-1.0..1.0f64, 1..40),
            b in prop::collection::vec(-1.0..1.0f64, 1..40),
            t in 0.0..1.0f64,
            p in 1.1..4.0f64,
        ) {
            let dom = square(4);
            let (u, v) = (field(&dom, &a), field(&dom, &b));
            let mix = ScalarField::new(&dom, u.values.iter().zip(&v.values).map(|(x, y)| t * x + (1.0 - t) * y).collect()).unwrap();
            let e = |w: &ScalarField| newtonian_norm(&dom, w, p).unwrap().energy_part;
            prop_assert!(e(&mix) <= t * e(&u) + (1.0 - t) * e(&v) + 1e-12);
        }
    }
}

mod capacity {
    use super::*;

    fn disc(dom: &GridDomain, c: [f64; 2], r: f64) -> TargetSet {
        TargetSet::from_region(dom, |q| (q[0] - c[0]).hypot(q[1] - c[1]) <= r)
    }

    fn cap(dom: &GridDomain, e: &TargetSet) -> f64 {
        estimate_capacity(dom, e, 2.0, VariantTag::Bar, &CapacityOptions::default()).unwrap().value
    }

    proptest! {
        #![proptest_config(cases(12))]

        #[test]
        fn bar_capacity_axioms(
            cx in -0.6..0.6f64, cy in -0.6..0.6f64, r in 0.05..0.3f64, grow in 0.0..0.2f64,
            dx in -0.6..0.6f64, dy in -0.6..0.6f64, s in 0.05..0.3f64,
        ) {
            let dom = square(4);
            let (e1, e2, f) = (disc(&dom, [cx, cy], r), disc(&dom, [cx, cy], r + grow), disc(&dom, [dx, dy], s));
            prop_assume!(!e1.is_empty() && !f.is_empty());
            let (c1, c2, cf, cu) = (cap(&dom, &e1), cap(&dom, &e2), cap(&dom, &f), cap(&dom, &e1.union(&f)));
            prop_assert!(c1 <= c2 + 1e-6, "monotone: {c1} > {c2}");
            prop_assert!(cu <= c1 + cf + 1e-6, "subadditive: {cu} > {c1} + {cf}");
            let mu = dom.measure(&CellSet::new(e1.interior.clone())).unwrap();
            prop_assert!(mu <= c1 + 1e-6, "measure: {mu} > {c1}");
            prop_assert!((cap(&dom, &e1) - c1).abs() <= 1e-6);
        }
    }
}

mod solver {
    use super::*;

    proptest! {
        #![proptest_config(cases(16))]

        #[test]
        fn max_principle_comparison_contraction(
            f in prop::collection::vec(-1.0..1.0f64, 1..30),
            bump in prop::collection::vec(0.0..0.5f64, 1..30),
            g in prop::collection::vec(-1.0..1.0f64, 1..30),
            p in prop::sample::select(vec![1.5, 2.0, 3.0]),
        ) {
            let dom = slit_disc(4);
            let f = vertex_data(&dom, &f);
            let up: Vec<f64> = f.iter().zip(vertex_data(&dom, &bump)).map(|(a, b)| a + b).collect();
            let g = vertex_data(&dom, &g);
            let uf = solve(&dom, p, BoundaryData::Vertex(f.clone()));
            let uu = solve(&dom, p, BoundaryData::Vertex(up));
            let ug = solve(&dom, p, BoundaryData::Vertex(g.clone()));
            let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = sup(f.iter().cloned());
            prop_assert!(uf.values.iter().all(|&v| v >= lo - 1e-8 && v <= hi + 1e-8));
            prop_assert!(sup(uf.values.iter().zip(&uu.values).map(|(a, b)| a - b)) <= 1e-6);
            let dfg = sup(f.iter().zip(&g).map(|(a, b)| (a - b).abs()));
            prop_assert!(uf.max_abs_diff(&ug) <= dfg + 1e-6);
        }
    }
}

mod perron {
    use super::*;

    fn maz_of(dom: &GridDomain) -> MazBoundary {
        build_maz_boundary(dom, &default_schedule(dom)).unwrap()
    }

    fn maz_data(maz: &MazBoundary, vals: &[f64]) -> MazBoundaryData {
        MazBoundaryData { values: (0..maz.points.len()).map(|k| vals[k % vals.len()]).collect() }
    }

    proptest! {
        #![proptest_config(cases(12))]

        #[test]
        fn ordered_and_contractive(
            f in prop::collection::vec(-1.0..1.0f64, 1..30),
            bump in prop::collection::vec(0.0..0.5f64, 1..30),
            g in prop::collection::vec(-1.0..1.0f64, 1..30),
        ) {
            let dom = slit_disc(5);
            let maz = maz_of(&dom);
            let o = SolveOptions::default();
            let f = maz_data(&maz, &f);
            let up = MazBoundaryData { values: f.values.iter().zip(&maz_data(&maz, &bump).values).map(|(a, b)| a + b).collect() };
            let g = maz_data(&maz, &g);
            let uf = perron_solve(&dom, &maz, &f, 2.0, &o).unwrap().solution;
            let uu = perron_solve(&dom, &maz, &up, 2.0, &o).unwrap().solution;
            let ug = perron_solve(&dom, &maz, &g, 2.0, &o).unwrap().solution;
            prop_assert!(sup(uf.values.iter().zip(&uu.values).map(|(a, b)| a - b)) <= 1e-6);
            prop_assert!(uf.max_abs_diff(&ug) <= f.sup_diff(&g) + 1e-6);
        }

        #[test]
        fn single_point_fibers_reduce_to_dirichlet(vals in prop::collection::vec(-1.0..1.0f64, 1..30)) {
            let dom = square(4);
            let maz = maz_of(&dom);
            prop_assert_eq!(maz.points.len(), dom.boundary_vertices().len());
            let data = MazBoundaryData::from_fn(&dom, &maz, |a, _| {
                let k = dom.boundary_slot(dom.spec().locate(a).unwrap()).unwrap();
                vals[k % vals.len()]
            });
            let u = perron_solve(&dom, &maz, &data, 2.0, &SolveOptions::default()).unwrap().solution;
            let v = solve(&dom, 2.0, BoundaryData::Vertex(vertex_data(&dom, &vals)));
            prop_assert!(u.max_abs_diff(&v) <= 1e-6);
        }
    }

    #[test]
    fn generalized_boundary_of_omega_itself_is_the_maz_boundary() {
        let dom = slit_disc(7);
        let maz = maz_of(&dom);
        let gb = GeneralizedBoundary::build(&dom, dom.recipe().unwrap()).unwrap();
        let f = |a: [f64; 2], r: [f64; 2]| a[0] + if r[1] > a[1] { 1.0 } else { -1.0 } * a[1].abs().max(0.25);
        let o = SolveOptions::default();
        let u = perron_solve(&dom, &maz, &MazBoundaryData::from_fn(&dom, &maz, f), 2.0, &o).unwrap().solution;
        let v = mazcap_core::perron::generalized_perron_solve(&dom, &gb, &gb.data_from_fn(&dom, f), 2.0, &o).unwrap().solution;
        assert!(u.max_abs_diff(&v) <= 1e-6, "{}", u.max_abs_diff(&v));
    }
}

mod mc {
    use super::*;

    fn cfg(seed: u64) -> WalkConfig {
        WalkConfig { n_walks: 3000, seed, ..Default::default() }
    }

    proptest! {
        #![proptest_config(cases(16))]

        #[test]
        fn shift_determinism_and_hit_counts(
            vals in prop::collection::vec(-1.0..1.0f64, 1..30),
            c in -5.0..5.0f64,
            s in 0.0..1.0f64,
            seed in any::<u64>(),
        ) {
            let dom = slit_disc(4);
            let start = pick(dom.open_cells(), s);
            let f = vertex_data(&dom, &vals);
            let fc: Vec<f64> = f.iter().map(|v| v + c).collect();
            let (df, dfc) = (BoundaryData::Vertex(f), BoundaryData::Vertex(fc));
            let a = harmonic_measure_mc(&dom, start, WalkData::Boundary(&df), &cfg(seed)).unwrap();
            let b = harmonic_measure_mc(&dom, start, WalkData::Boundary(&df), &cfg(seed)).unwrap();
            let shifted = harmonic_measure_mc(&dom, start, WalkData::Boundary(&dfc), &cfg(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!((shifted.mean - a.mean - c).abs() <= 1e-12 * (1.0 + c.abs()));
            prop_assert_eq!(a.n_absorbed + a.n_timeout, a.n_walks);
            prop_assert_eq!(a.anchor_hits.values().sum::<u64>() as usize, a.n_absorbed);
        }
    }

    #[test]
    fn side_hits_sum_to_anchor_hits() {
        let dom = slit_disc(5);
        let maz = build_maz_boundary(&dom, &default_schedule(&dom)).unwrap();
        let data = MazBoundaryData::from_fn(&dom, &maz, |_, r| r[1]);
        let start = dom.nearest_open([0.5, 0.05]);
        let e = harmonic_measure_mc(&dom, start, WalkData::Maz(&maz, &data), &cfg(5)).unwrap();
        for (&anchor, &n) in &e.anchor_hits {
            let sides: u64 = maz.fiber(anchor).unwrap().points.iter().map(|p| e.point_hits.get(p).copied().unwrap_or(0)).sum();
            assert_eq!(sides, n);
        }
    }

    #[test]
    fn doubling_walks_shrinks_stderr() {
        let dom = square(4);
        let data = BoundaryData::from_fn(&dom, |q| q[0] * q[1]);
        let start = dom.nearest_open([0.3, 0.2]);
        let run = |n, seed| harmonic_measure_mc(&dom, start, WalkData::Boundary(&data), &WalkConfig { n_walks: n, seed, ..Default::default() }).unwrap();
        let ratio = run(80_000, 2).stderr / run(40_000, 1).stderr;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() <= 0.1, "{ratio}");
    }
}
