//! Scripted example pipelines. Each one embeds its own assertions.

use mazcap_core::cantor::{lambda2_partial_sum, vk_bound, CSeq};
use mazcap_core::capacity::{compare_capacities, evaluate_witness};
use mazcap_core::mc_oracle::mc_crosscheck;
use mazcap_core::metric::{inner_distance, mazurkiewicz_distance};
use mazcap_core::perron::{generalized_perron_solve, invariance_experiment, GeneralizedBoundary, PerturbSet, Verdict};
use mazcap_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::commands::{cap_opts, exceptional_points, fiber_step, limit_step, mc_rows, solve_opts, solve_step, walk_cfg, Artifacts};
use crate::config::{usage, Config, Schema};
use crate::data::{comb_jump, double_comb_jump, NamedData};
use crate::report::{claim, Prov, Report, Step};

pub const NAMES: [&str; 13] = [
    "cusp-capacity",
    "comb-capacity",
    "comb-invariance",
    "thick-comb-jump",
    "double-comb-jump",
    "countable-comb",
    "cantor-arcs",
    "cantor-thick",
    "cantor-deep",
    "generalized-double-comb",
    "metric-chain",
    "capacity-chain",
    "mc-check",
];

pub fn schema(name: &str) -> Option<Schema> {
    let s = match name {
        "cusp-capacity" => Schema::new(&[
            ("beta", "3"),
            ("p", "2"),
            ("radii", "0.2;0.1;0.05"),
            ("witness_h", "2^-9"),
            ("resolutions", "2^-8;2^-9;2^-10"),
        ]),
        "comb-capacity" => Schema::new(&[("p", "2"), ("h", "2^-9"), ("k_max", "6"), ("witness_h", "2^-10")]),
        "comb-invariance" => Schema::new(&[("p", "2"), ("resolutions", "2^-7;2^-8;2^-9"), ("probe", "1.25,0.5")]),
        "thick-comb-jump" | "double-comb-jump" | "countable-comb" => {
            Schema::new(&[("p", "2"), ("h", "2^-8"), ("eps", "0.05"), ("min_pass", "0.95"), ("exclude_width", "0.1")])
        }
        "cantor-arcs" | "cantor-thick" => Schema::new(&[("h", "2^-9"), ("start", "-0.5,-0.5")]),
        "cantor-deep" => Schema::new(&[("h", "2^-9"), ("ps", "1.5;2;3"), ("k_max", "6"), ("m_max", "12")]),
        "generalized-double-comb" => Schema::new(&[("p", "2"), ("h", "2^-8"), ("J", "1"), ("tol_agree", "0.1"), ("eps", "0.05")]),
        "metric-chain" => Schema::new(&[("h", "2^-6"), ("pairs", "200")]).with_recipe("slit_disc"),
        "capacity-chain" => Schema::new(&[("h", "2^-7"), ("p", "2"), ("sets", "5")]).with_recipe("slit_disc"),
        "mc-check" => Schema::new(&[("h", "2^-6"), ("n_walks", "100000"), ("max_steps", "10000000")]),
        _ => return None,
    };
    Some(s)
}

pub fn run(name: &str, cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    match name {
        "cusp-capacity" => cusp_capacity(cfg, report),
        "comb-capacity" => comb_capacity(cfg, report, art),
        "comb-invariance" => comb_invariance(cfg, report),
        "thick-comb-jump" => jump(cfg, report, art, DomainRecipe::thick_comb(), comb_jump, false),
        "double-comb-jump" => jump(cfg, report, art, DomainRecipe::double_comb(), double_comb_jump, false),
        "countable-comb" => jump(cfg, report, art, DomainRecipe::countable_comb(), comb_jump, true),
        "cantor-arcs" => cantor_arcs(cfg, report, art, false),
        "cantor-thick" => cantor_arcs(cfg, report, art, true),
        "cantor-deep" => cantor_deep(cfg, report, art),
        "generalized-double-comb" => generalized(cfg, report, art),
        "metric-chain" => metric_chain(cfg, report),
        "capacity-chain" => capacity_chain(cfg, report),
        "mc-check" => mc_check(cfg, report),
        _ => Err(usage(format!("unknown example `{name}`"))),
    }
}

fn check_decreasing(st: &mut Step, what: &str, v: &[f64], prov: Prov) {
    for (i, w) in v.windows(2).enumerate() {
        st.check_le(&format!("{what}[{}] < {what}[{i}]", i + 1), w[1], w[0], 0.0, prov);
    }
}

fn claims(v: &[f64], tol: f64, prov: Prov) -> serde_json::Value {
    json!(v.iter().map(|&x| claim(x, tol, prov)).collect::<Vec<_>>())
}

fn cusp_capacity(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let (beta, p) = (cfg.num("beta")?, cfg.num("p")?);
    let wh = cfg.num("witness_h")?;
    let mut st = Step::new("witness u_R");
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    for r in cfg.num_list("radii")? {
        let w = evaluate_witness(&Witness::CuspUR { beta, r, h: wh }, p)?;
        let quad = w.quadrature.unwrap_or(f64::NAN);
        st.check_le(&format!("|closed/quadrature - 1| at R = {r}"), (w.closed_form / quad - 1.0).abs(), 0.0, 0.02, Prov::Estimate);
        let bound = w.closed_form + w.grid_norm.lp_part;
        bounds.push(bound);
        rows.push(json!({
            "R": claim(r, 0.0, Prov::Input),
            "energy_closed_form": claim(w.closed_form, 0.0, Prov::ClosedForm),
            "energy_quadrature": claim(quad, 1e-6 * quad, Prov::Estimate),
            "energy_grid": claim(w.grid_value, 0.0, Prov::Estimate),
            "norm_bound": claim(bound, 0.0, Prov::Estimate),
        }));
    }
    st.put("table", json!(rows));
    check_decreasing(&mut st, "norm_bound", &bounds, Prov::Estimate);
    report.steps.push(st);

    let mut st = Step::new("BAR capacity of the tip");
    let opts = cap_opts(cfg)?;
    let res = cfg.num_list("resolutions")?;
    let mut bar = Vec::new();
    for &h in &res {
        let dom = gen_domain(&DomainRecipe::cusp(beta), h)?;
        let a = dom.nearest_boundary_vertex([0.0, 0.0]);
        bar.push(estimate_capacity(&dom, &TargetSet::new(vec![], vec![a]), p, VariantTag::Bar, &opts)?.value);
    }
    st.put("resolutions", claims(&res, 0.0, Prov::Input));
    st.put("bar", claims(&bar, opts.tol, Prov::Estimate));
    check_decreasing(&mut st, "bar", &bar, Prov::Estimate);
    report.steps.push(st);
    Ok(())
}

/// Boundary vertices on the segment `{0} x (0, 1]` of the comb.
fn comb_tip(dom: &GridDomain) -> TargetSet {
    let anchors = dom
        .boundary_vertices()
        .iter()
        .copied()
        .filter(|&c| {
            let q = dom.center(c);
            q[0] < 0.0 && q[1] > 0.0 && q[1] <= 1.0
        })
        .collect();
    TargetSet::new(vec![], anchors)
}

fn comb_capacity(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let (p, h) = (cfg.num("p")?, cfg.num("h")?);
    let wh = cfg.num("witness_h")?;
    let mut st = Step::new("witness h_k");
    let mut rows = Vec::new();
    for k in 1..=cfg.uint("k_max")? as u32 {
        let w = evaluate_witness(&Witness::CombHk { k, h: wh, depth: None }, p)?;
        let series = 3.0 * (2.0f64 / 3.0).powi(k as i32);
        st.check_eq(&format!("closed form = 3 (2/3)^{k}"), w.closed_form, series, 1e-12, Prov::ClosedForm);
        st.check_le(&format!("|grid/closed - 1| at k = {k}"), (w.grid_value / w.closed_form - 1.0).abs(), 0.0, 0.05, Prov::Estimate);
        rows.push(json!({
            "k": k,
            "closed_form": claim(w.closed_form, 1e-12, Prov::ClosedForm),
            "grid_energy": claim(w.grid_value, 0.0, Prov::Estimate),
        }));
    }
    st.put("table", json!(rows));
    report.steps.push(st);

    let dom = gen_domain(&DomainRecipe::comb(), h)?;
    let a = comb_tip(&dom);
    let opts = cap_opts(cfg)?;
    let bar = estimate_capacity(&dom, &a, p, VariantTag::Bar, &opts)?;
    let mu = estimate_capacity(&dom, &a, p, VariantTag::ClosureMu, &opts)?;
    let mut st = Step::new("capacity of A = {0} x (0, 1]");
    st.claim("h", h, 0.0, Prov::Input);
    st.claim("anchors", a.anchors.len() as f64, 0.0, Prov::Exact);
    st.claim("BAR", bar.value, opts.tol, Prov::Estimate);
    st.claim("CLOSURE_MU", mu.value, opts.tol, Prov::Estimate);
    st.check_le("BAR estimate", bar.value, 0.4, 0.0, Prov::Estimate);
    st.check_ge("CLOSURE_MU estimate", mu.value, 0.2, 0.0, Prov::Estimate);
    report.steps.push(st);
    art.mask(&dom);
    art.field("bar_minimizer", &dom, &bar.minimizer)
}

fn comb_invariance(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let p = cfg.num("p")?;
    let res = cfg.num_list("resolutions")?;
    let opts = solve_opts(cfg)?;
    let y = |q: [f64; 2]| q[1];
    let tip = invariance_experiment(&DomainRecipe::comb(), y, &PerturbSet::segment([0.0, 0.0], [0.0, 1.0]), 5.0, p, &res, None, &opts)?;
    let mut st = Step::new("perturb f = y by +5 on A");
    st.put("resolutions", claims(&res, 0.0, Prov::Input));
    st.put("sup_diff_away_from_A", claims(&tip.sup_diffs, opts.tol, Prov::Estimate));
    st.put("perturbed_points", json!(tip.perturbed_points));
    check_decreasing(&mut st, "sup_diff", &tip.sup_diffs, Prov::Estimate);
    st.check_eq("verdict decreasing", (tip.verdict == Verdict::Decreasing) as u8 as f64, 1.0, 0.0, Prov::Exact);
    report.steps.push(st);

    let probe = cfg.point("probe")?;
    let slit = invariance_experiment(&DomainRecipe::comb(), y, &PerturbSet::segment([1.0, 0.0], [1.0, 1.0]), 1.0, p, &res, Some(probe), &opts)?;
    let mut st = Step::new("perturb f = y by +1 on the slit x = 1");
    st.put("probe", json!(probe));
    st.put("probe_diff", claims(&slit.probe_diffs, opts.tol, Prov::Estimate));
    for (h, d) in res.iter().zip(&slit.probe_diffs) {
        st.check_ge(&format!("probe difference at h = {h}"), *d, 0.05, 0.0, Prov::Estimate);
    }
    report.steps.push(st);
    Ok(())
}

/// Perron solution of a jump function and its boundary limits away from `x = 0`.
fn jump(
    cfg: &Config,
    report: &mut Report,
    art: &mut Artifacts,
    recipe: DomainRecipe,
    f: fn([f64; 2]) -> f64,
    main_slits: bool,
) -> anyhow::Result<()> {
    let (p, h) = (cfg.num("p")?, cfg.num("h")?);
    let dom = gen_domain(&recipe, h)?;
    let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
    let mut st = fiber_step(&maz);
    if main_slits {
        let a = dom.nearest_boundary_vertex([0.5, 0.5]);
        // Secondary slits accumulate at every main slit, so the continuum fiber is infinite;
        // the grid sees a resolution-dependent count of at least 3.
        let (n, stable) = maz.fiber(a).map_or((0, true), |f| (f.points.len(), f.stable));
        st.put("main_slit_fiber_stable", serde_json::json!(stable));
        st.check_ge("points over the main slit x = 1/2", n as f64, 3.0, 0.0, Prov::Exact);
    }
    report.steps.push(st);
    let data = MazBoundaryData::from_fn(&dom, &maz, |a, r| f([0.5 * (a[0] + r[0]), 0.5 * (a[1] + r[1])]));
    let res = perron_solve(&dom, &maz, &data, p, &solve_opts(cfg)?)?;
    let mut st = Step::new("perron");
    solve_step(&mut st, &res.report);
    let w = cfg.num("exclude_width")?;
    let exc = exceptional_points(&dom, &maz, &[], |c| c[0].abs() < w);
    limit_step(&mut st, &res, &exc, cfg.num("eps")?, cfg.num("min_pass")?);
    report.steps.push(st);
    art.mask(&dom);
    art.field("field", &dom, &res.solution)
}

fn cantor_arcs(cfg: &Config, report: &mut Report, art: &mut Artifacts, thick: bool) -> anyhow::Result<()> {
    let h = cfg.num("h")?;
    let recipe = if thick { DomainRecipe::cantor_thick() } else { DomainRecipe::cantor_arcs() };
    let dom = gen_domain(&recipe, h)?;
    let m = dom.resolved_recipe().and_then(|r| r.num("m").ok().flatten()).unwrap_or(1.0) as u32;
    let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
    let mut st = fiber_step(&maz);
    let sizes: Vec<usize> = maz.fibers.iter().map(|f| f.points.len()).collect();
    let max = sizes.iter().copied().max().unwrap_or(0);
    if thick {
        st.check_le("largest fiber (locally connected)", max as f64, 1.0, 0.0, Prov::Exact);
    } else {
        st.check_le("largest fiber (at most 2-connected)", max as f64, 2.0, 0.0, Prov::Exact);
        st.check_ge("smallest fiber", sizes.iter().copied().min().unwrap_or(0) as f64, 1.0, 0.0, Prov::Exact);
    }
    report.steps.push(st);

    // Curves from outside every arc into a generation-n square have length >= 2^n alpha_n.
    let seq = CSeq::Pow2;
    let mut st = Step::new("curve length into the squares");
    st.claim("generation", m as f64, 0.0, Prov::Exact);
    let start = dom.open_cell_at(cfg.point("start")?).ok_or_else(|| usage("`start` is not an open cell"))?;
    let mut rows = Vec::new();
    for n in 1..=m {
        let q = seq.squares(n)[0];
        let mid = 0.5 * (q[2] + q[3]);
        let end = dom.nearest_open([q[0] - 0.5 * h, mid]);
        let d = inner_distance(&dom, start, end)?;
        let bound = (n as f64).exp2() * seq.alpha(n);
        // The end cell sits within 1.5h of the square.
        st.check_ge(&format!("inner distance to Q_{n},1"), d, bound, 2.0 * h, Prov::Estimate);
        rows.push(json!({
            "n": n,
            "inner_distance": claim(d, 0.0, Prov::Estimate),
            "bound": claim(bound, 0.0, Prov::ClosedForm),
        }));
    }
    st.put("rows", json!(rows));
    report.steps.push(st);
    art.mask(&dom);
    Ok(())
}

/// `(4^j - 3^j) / 4^j` in lowest terms, as printed by the rational type.
fn one_minus_three_quarters_pow(j: u32) -> String {
    let (num, den) = (4u128.pow(j) - 3u128.pow(j), 4u128.pow(j));
    if num == 0 {
        "0".into()
    } else {
        format!("{num}/{den}")
    }
}

fn cantor_deep(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let seq = CSeq::Pow2Sq;
    let mut st = Step::new("area of K* layers");
    let m_max = cfg.uint("m_max")? as u32;
    let mut rows = Vec::new();
    for k in 0..=2u32 {
        for m in k..=m_max {
            let s = lambda2_partial_sum(k, m).to_string();
            let expect = one_minus_three_quarters_pow(m - k + 1);
            st.check_eq(&format!("partial sum k = {k}, m = {m} is 1 - (3/4)^{}", m - k + 1), (s == expect) as u8 as f64, 1.0, 0.0, Prov::Exact);
            if m == m_max {
                rows.push(json!({ "k": k, "m": m, "partial_sum": s, "provenance": "exact" }));
            }
        }
    }
    st.put("final_sums", json!(rows));
    report.steps.push(st);

    let mut st = Step::new("norm bounds of v_k, c_n = 2^(-n^2)");
    let k_max = cfg.uint("k_max")? as u32;
    let mut table = Vec::new();
    for p in cfg.num_list("ps")? {
        let b: Vec<f64> = (0..=k_max).map(|k| vk_bound(&seq, k, p)).collect();
        check_decreasing(&mut st, &format!("vk(p = {p})"), &b, Prov::ClosedForm);
        table.push(json!({ "p": p, "bounds": claims(&b, 1e-12, Prov::ClosedForm) }));
    }
    st.put("table", json!(table));
    report.steps.push(st);

    let h = cfg.num("h")?;
    let dom = gen_domain(&DomainRecipe::cantor_square(seq), h)?;
    let m = dom.resolved_recipe().and_then(|r| r.num("m").ok().flatten()).unwrap_or(0.0) as i32;
    let mut st = Step::new("truncated domain");
    st.claim("generation", m as f64, 0.0, Prov::Exact);
    let comps = dom.components(None)?.len();
    st.check_eq("one component", comps as f64, 1.0, 0.0, Prov::Exact);
    let side = seq.alpha(m as u32);
    let n_sq = 4f64.powi(m);
    let exact = n_sq * side * side;
    let span = 1.0 + seq.c(0);
    let spec = dom.spec();
    let closed = (0..spec.len())
        .filter(|&c| {
            let q = dom.center(c);
            !dom.is_open(c) && (0.0..=span).contains(&q[0]) && (0.0..=span).contains(&q[1])
        })
        .count() as f64
        * h
        * h;
    let perimeter = n_sq * 4.0 * side;
    st.claim("area_of_K_m", exact, 0.0, Prov::ClosedForm);
    st.claim("closed_cell_area", closed, perimeter * h, Prov::Estimate);
    st.check_le("|closed cell area - area of K_m|", (closed - exact).abs(), 0.0, perimeter * h, Prov::Estimate);
    report.steps.push(st);
    art.mask(&dom);
    Ok(())
}

fn generalized(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let (p, h) = (cfg.num("p")?, cfg.num("h")?);
    let dom = gen_domain(&DomainRecipe::double_comb(), h)?;
    let ambient = DomainRecipe::double_comb().with("J", cfg.uint("J")? as u32);
    let gb = GeneralizedBoundary::build(&dom, &ambient)?;
    let opts = solve_opts(cfg)?;
    let mut st = Step::new("generalized boundary");
    st.claim("points", gb.points.len() as f64, 0.0, Prov::Exact);
    st.claim("split_points", gb.points.iter().filter(|q| q.ambient_point.is_some()).count() as f64, 0.0, Prov::Exact);
    report.steps.push(st);

    let mid = |a: [f64; 2], r: [f64; 2]| [0.5 * (a[0] + r[0]), 0.5 * (a[1] + r[1])];
    let f = gb.data_from_fn(&dom, |a, r| double_comb_jump(mid(a, r)));
    // f~ vanishes on the left copy of A.
    let ft = gb.data_from_fn(&dom, |a, r| if a[0].abs() < h && r[0] < a[0] { 0.0 } else { double_comb_jump(mid(a, r)) });
    let u = generalized_perron_solve(&dom, &gb, &f, p, &opts)?;
    let ut = generalized_perron_solve(&dom, &gb, &ft, p, &opts)?;
    let mut st = Step::new("f versus f~");
    solve_step(&mut st, &u.report);
    let tol = cfg.num("tol_agree")?;
    let mut rows = Vec::new();
    for q in [[-0.5, -0.5], [0.5, -0.5], [0.75, 0.5], [-0.75, 0.5], [0.3, 0.6], [-0.3, 0.6]] {
        let c = dom.open_cell_at(q).ok_or_else(|| usage(format!("probe {q:?} is closed")))?;
        let (a, b) = (u.solution.at(&dom, c).unwrap(), ut.solution.at(&dom, c).unwrap());
        st.check_le(&format!("|H f - H f~| at {q:?}"), (a - b).abs(), tol, 0.0, Prov::Estimate);
        rows.push(json!({ "probe": q, "H_f": claim(a, opts.tol, Prov::Estimate), "H_ft": claim(b, opts.tol, Prov::Estimate) }));
    }
    st.put("probes", json!(rows));
    report.steps.push(st);

    // Different values on the two sides of the slit x = 1/2.
    let on_s1 = |a: [f64; 2]| (a[0] - 0.5).abs() < h && a[1] > 0.0 && a[1] < 1.0;
    let g = gb.data_from_fn(&dom, |a, r| if on_s1(a) && r[0] > a[0] { 1.0 } else { 0.0 });
    let ug = generalized_perron_solve(&dom, &gb, &g, p, &opts)?;
    let mut st = Step::new("two-sided data on S_1");
    solve_step(&mut st, &ug.report);
    let rows: Vec<_> = ug.diagnostics.iter().filter(|s| on_s1(dom.center(s.anchor)) && dom.center(s.anchor)[1] > 0.1 && dom.center(s.anchor)[1] < 0.9).collect();
    let pass = rows.iter().filter(|s| s.gap <= cfg.num("eps").unwrap_or(0.05)).count();
    let sides: std::collections::BTreeSet<u64> = rows.iter().map(|s| s.data.to_bits()).collect();
    st.claim("points_on_S1", rows.len() as f64, 0.0, Prov::Exact);
    st.check_eq("both side values present", sides.len() as f64, 2.0, 0.0, Prov::Exact);
    st.check_ge("fraction of S_1 limits within eps", pass as f64 / rows.len().max(1) as f64, 0.95, 0.0, Prov::Estimate);
    report.steps.push(st);
    art.mask(&dom);
    art.field("field_f", &dom, &u.solution)?;
    art.field("field_two_sided", &dom, &ug.solution)
}

fn metric_chain(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let recipe = cfg.recipe()?;
    let h = cfg.num("h")?;
    let dom = gen_domain(&recipe, h)?;
    let cells = dom.open_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.uint("seed")?);
    let pairs = cfg.uint("pairs")?;
    let (mut ok1, mut ok2, mut ok3) = (0u64, 0u64, 0u64);
    let (mut e1, mut e2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..pairs {
        let a = cells[rng.random_range(0..cells.len())];
        let b = cells[rng.random_range(0..cells.len())];
        let (pa, pb) = (dom.center(a), dom.center(b));
        let eu = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        let dm = mazurkiewicz_distance(&dom, a, b, cfg.num("tol")?)?;
        let din = inner_distance(&dom, a, b)?;
        e1 = e1.max(eu - dm.hi);
        e2 = e2.max(dm.lo - din);
        ok1 += (eu <= dm.hi + 2.0 * h) as u64;
        ok2 += (dm.lo <= din + 2.0 * h) as u64;
        ok3 += (eu <= din + 2.0 * h) as u64;
    }
    let mut st = Step::new("ordering euclid <= d_M <= d_in");
    st.claim("pairs", pairs as f64, 0.0, Prov::Input);
    st.claim("max(euclid - hi)", e1, 2.0 * h, Prov::Estimate);
    st.claim("max(lo - inner)", e2, 2.0 * h, Prov::Estimate);
    let n = pairs as f64;
    st.check_eq("pairs with euclid <= hi + 2h", ok1 as f64, n, 0.0, Prov::Exact);
    st.check_eq("pairs with lo <= inner + 2h", ok2 as f64, n, 0.0, Prov::Exact);
    st.check_eq("pairs with euclid <= inner + 2h", ok3 as f64, n, 0.0, Prov::Exact);
    report.steps.push(st);
    Ok(())
}

fn capacity_chain(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let recipe = cfg.recipe()?;
    let (h, p) = (cfg.num("h")?, cfg.num("p")?);
    let dom = gen_domain(&recipe, h)?;
    let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
    let opts = cap_opts(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.uint("seed")?);
    let bv = dom.boundary_vertices();
    let mut st = Step::new("capacity chain");
    let mut rows = Vec::new();
    for s in 0..cfg.uint("sets")? {
        let c = dom.center(bv[rng.random_range(0..bv.len())]);
        let r = rng.random_range(0.05..0.2);
        let e = TargetSet::from_region(&dom, |q| (q[0] - c[0]).hypot(q[1] - c[1]) <= r);
        let rep = compare_capacities(&dom, &maz, &e, p, &opts)?;
        for chk in &rep.checks {
            st.check_le(&format!("set {s}: {}", chk.relation), chk.lhs, chk.rhs, 1e-3 * chk.rhs.abs(), Prov::Estimate);
        }
        st.check_le(&format!("set {s}: |BAR_MAZ - BAR| / BAR"), rep.maz_equality_rel, 0.0, 0.02, Prov::Estimate);
        let vals: serde_json::Map<String, serde_json::Value> =
            rep.values.iter().map(|(t, v)| (t.name().to_string(), claim(*v, opts.tol, Prov::Estimate))).collect();
        rows.push(json!({ "center": c, "radius": claim(r, 0.0, Prov::Input), "values": vals }));
    }
    st.put("sets", json!(rows));
    report.steps.push(st);
    Ok(())
}

fn mc_check(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let h = cfg.num("h")?;
    let wc = walk_cfg(cfg)?;
    let opts = solve_opts(cfg)?;
    let disc = gen_domain(&DomainRecipe::slit_disc(), h)?;
    let maz = build_maz_boundary(&disc, &default_schedule(&disc))?;
    let data = NamedData::parse("upper_slit")?.maz(&disc, &maz);
    let u = perron_solve(&disc, &maz, &data, 2.0, &opts)?.solution;
    let rep = mc_crosscheck(&disc, WalkData::Maz(&maz, &data), &u, &[[0.5, 0.1], [-0.5, 0.0], [0.5, -0.1]], &wc)?;
    let mut st = Step::new("slit disc, one on the upper side of the slit");
    let rows = mc_rows(&rep, &mut st);
    st.put("rows", json!(rows));
    report.steps.push(st);

    let sq = gen_domain(&DomainRecipe::square(1.0), h)?;
    let f = BoundaryData::from_fn(&sq, |q| q[0]);
    let u = solve_dirichlet(&DirichletProblem { dom: &sq, p: 2.0, data: f.clone(), opts })?.0;
    let rep = mc_crosscheck(&sq, WalkData::Boundary(&f), &u, &[[0.25, 0.5], [0.5, 0.5], [0.75, 0.5]], &wc)?;
    let mut st = Step::new("square, f = x");
    let rows = mc_rows(&rep, &mut st);
    st.put("rows", json!(rows));
    report.steps.push(st);
    Ok(())
}
