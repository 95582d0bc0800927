//! The single-purpose commands: gen, metric, capacity, solve, perron, mc, render.

use std::path::{Path, PathBuf};

use anyhow::Context;
use mazcap_core::capacity::{compare_capacities, evaluate_witness, CapacityOptions};
use mazcap_core::io::{field_to_csv, mask_pgm, render, CsvField, Palette};
use mazcap_core::mc_oracle::mc_crosscheck;
use mazcap_core::metric::{inner_distance, mazurkiewicz_distance};
use mazcap_core::perron::boundary_limit_report;
use mazcap_core::solver::{solve_obstacle, ObstacleProblem};
use mazcap_core::*;
use serde_json::json;

use crate::config::{usage, Config, Schema};
use crate::data::{parse_discs, parse_target, NamedData};
use crate::report::{Prov, Report, Step};

pub fn solve_opts(cfg: &Config) -> anyhow::Result<SolveOptions> {
    Ok(SolveOptions { tol: cfg.num("tol")?, max_iter: cfg.uint("max_iter")? as usize })
}

pub fn cap_opts(cfg: &Config) -> anyhow::Result<CapacityOptions> {
    Ok(CapacityOptions { tol: cfg.num("tol")?, max_iter: cfg.uint("max_iter")? as usize })
}

/// Files produced by a run, written only once the run has finished computing.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn mask(&mut self, dom: &GridDomain) {
        self.add("mask.pgm", mask_pgm(dom));
    }

    /// CSV plus a gray rendering.
    pub fn field(&mut self, stem: &str, dom: &GridDomain, u: &ScalarField) -> anyhow::Result<()> {
        let csv = field_to_csv(dom, u)?;
        let img = render(&CsvField::parse(&csv)?, Palette::Gray, None)?;
        self.add(&format!("{stem}.csv"), csv.into_bytes());
        self.add(&format!("{stem}.pgm"), img);
        Ok(())
    }

    pub fn write(self, dir: &Path, report: &mut Report) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in self.files {
            std::fs::write(dir.join(&name), bytes).with_context(|| format!("writing {name}"))?;
            report.artifacts.push(name);
        }
        report.write(dir)
    }
}

pub fn schema(command: &str) -> Option<Schema> {
    Some(match command {
        "gen" => Schema::new(&[("h", "2^-6")]).with_recipe("square"),
        "metric" => Schema::new(&[("h", "2^-6"), ("a", ""), ("b", ""), ("fibers", "false")]).with_recipe("slit_disc"),
        "capacity" => Schema::new(&[
            ("h", "2^-6"),
            ("p", "2"),
            ("variant", "bar"),
            ("target", ""),
            ("witness", ""),
            ("k", ""),
            ("n", ""),
            ("R", ""),
        ])
        .with_recipe("square"),
        "solve" => Schema::new(&[("h", "2^-6"), ("p", "2"), ("data", "x"), ("obstacle", "")]).with_recipe("square"),
        "perron" => Schema::new(&[
            ("h", "2^-6"),
            ("p", "2"),
            ("data", "upper_slit"),
            ("eps", "0.05"),
            ("min_pass", "0.95"),
            ("exclude", "0,0,0.1;1,0,0.1"),
        ])
        .with_recipe("slit_disc"),
        "mc" => Schema::new(&[
            ("h", "2^-5"),
            ("data", "x"),
            ("probes", "0.5,0.5"),
            ("n_walks", "100000"),
            ("max_steps", "10000000"),
            ("check", "true"),
        ])
        .with_recipe("square"),
        "render" => Schema::new(&[("input", ""), ("output", ""), ("palette", "gray"), ("range", "")]),
        _ => return None,
    })
}

fn domain(cfg: &Config) -> anyhow::Result<(DomainRecipe, GridDomain, f64)> {
    let recipe = cfg.recipe()?;
    let h = cfg.num("h")?;
    let dom = gen_domain(&recipe, h)?;
    Ok((recipe, dom, h))
}

fn domain_step(dom: &GridDomain) -> anyhow::Result<Step> {
    let mut st = Step::new("domain");
    let spec = dom.spec();
    let resolved = dom.resolved_recipe().map(|r| r.to_kv()).unwrap_or_default();
    st.put("recipe", json!(resolved.trim_end().lines().collect::<Vec<_>>()));
    st.claim("h", dom.h(), 0.0, Prov::Input);
    st.claim("nx", spec.nx as f64, 0.0, Prov::Exact);
    st.claim("ny", spec.ny as f64, 0.0, Prov::Exact);
    st.claim("open_cells", dom.n_open() as f64, 0.0, Prov::Exact);
    st.claim("boundary_vertices", dom.boundary_vertices().len() as f64, 0.0, Prov::Exact);
    st.claim("measure", dom.total_measure(), 0.0, Prov::Exact);
    let comps = dom.components(None)?.len();
    st.claim("components", comps as f64, 0.0, Prov::Exact);
    st.check_eq("one component", comps as f64, 1.0, 0.0, Prov::Exact);
    Ok(st)
}

pub fn run(command: &str, cfg: &Config, report: &mut Report) -> anyhow::Result<Option<PathBuf>> {
    let dir = cfg.out_dir().join(command);
    let mut art = Artifacts::default();
    match command {
        "gen" => {
            let (_, dom, _) = domain(cfg)?;
            report.steps.push(domain_step(&dom)?);
            art.mask(&dom);
            art.add("domain.kv", dom.resolved_recipe().map(|r| r.to_kv()).unwrap_or_default().into_bytes());
        }
        "metric" => metric(cfg, report, &mut art)?,
        "capacity" => capacity(cfg, report, &mut art)?,
        "solve" => solve(cfg, report, &mut art)?,
        "perron" => perron(cfg, report, &mut art)?,
        "mc" => mc(cfg, report)?,
        "render" => return render_cmd(cfg).map(Some),
        _ => return Err(usage(format!("unknown command `{command}`"))),
    }
    art.write(&dir, report)?;
    Ok(Some(dir))
}

fn open_cell(dom: &GridDomain, q: [f64; 2], key: &str) -> anyhow::Result<usize> {
    dom.open_cell_at(q).ok_or_else(|| usage(format!("`{key}` = {q:?} is not an open cell of the domain")))
}

fn metric(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let (_, dom, h) = domain(cfg)?;
    let fibers = cfg.flag("fibers")?;
    if !(cfg.is_set("a") && cfg.is_set("b")) && !fibers {
        return Err(usage("metric needs `a` and `b`, or `fibers=true`"));
    }
    if cfg.is_set("a") || cfg.is_set("b") {
        let (pa, pb) = (cfg.point("a")?, cfg.point("b")?);
        let (a, b) = (open_cell(&dom, pa, "a")?, open_cell(&dom, pb, "b")?);
        let tol = cfg.num("tol")?;
        let dm = mazurkiewicz_distance(&dom, a, b, tol)?;
        let din = inner_distance(&dom, a, b)?;
        let (qa, qb) = (dom.center(a), dom.center(b));
        let eu = (qa[0] - qb[0]).hypot(qa[1] - qb[1]);
        let mut st = Step::new("distances");
        st.claim("euclid", eu, 0.0, Prov::Exact);
        st.claim("inner", din, 0.0, Prov::Estimate);
        st.claim("maz_lo", dm.lo, tol.max(4.0 * h), Prov::Estimate);
        st.claim("maz_hi", dm.hi, tol.max(4.0 * h), Prov::Estimate);
        st.check_le("euclid <= maz_hi + 2h", eu, dm.hi, 2.0 * h, Prov::Estimate);
        st.check_le("maz_lo <= inner + 2h", dm.lo, din, 2.0 * h, Prov::Estimate);
        st.check_le("maz_lo <= maz_hi", dm.lo, dm.hi, 0.0, Prov::Estimate);
        report.steps.push(st);
    }
    if fibers {
        let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
        let mut st = fiber_step(&maz);
        let total: usize = maz.fibers.iter().map(|f| f.points.len()).sum();
        st.check_eq("fiber sizes sum to the point count", total as f64, maz.points.len() as f64, 0.0, Prov::Exact);
        report.steps.push(st);
        art.add("maz.json", serde_json::to_vec_pretty(&maz.to_json(&dom))?);
    }
    Ok(())
}

/// Histogram of fiber sizes and the unstable count.
pub fn fiber_step(maz: &MazBoundary) -> Step {
    let mut st = Step::new("fibers");
    let mut hist = std::collections::BTreeMap::new();
    for f in &maz.fibers {
        *hist.entry(f.points.len()).or_insert(0usize) += 1;
    }
    st.claim("anchors", maz.fibers.len() as f64, 0.0, Prov::Exact);
    st.claim("points", maz.points.len() as f64, 0.0, Prov::Exact);
    st.claim("unstable_anchors", maz.unstable_anchors().len() as f64, 0.0, Prov::Exact);
    let rows: Vec<_> = hist
        .iter()
        .map(|(&size, &count)| json!({ "size": size, "anchors": crate::report::claim(count as f64, 0.0, Prov::Exact) }))
        .collect();
    st.put("size_histogram", json!(rows));
    st
}

fn capacity(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let p = cfg.num("p")?;
    if !cfg.is_set("target") && !cfg.is_set("witness") {
        return Err(usage("capacity needs `target` or `witness`"));
    }
    if cfg.is_set("witness") {
        let mut params = vec![("h".to_string(), cfg.num("h")?)];
        for k in ["k", "n", "R", "beta", "J"] {
            if let Some(v) = cfg.opt_num(k)? {
                params.push((k.to_string(), v));
            }
        }
        let w = Witness::parse(&cfg.text("witness")?, &params).map_err(|e| usage(e.to_string()))?;
        let r = evaluate_witness(&w, p)?;
        let mut st = Step::new("witness");
        st.put("witness", serde_json::to_value(&r.witness)?);
        st.claim("closed_form", r.closed_form, 0.0, Prov::ClosedForm);
        st.claim("grid_value", r.grid_value, 0.0, Prov::Estimate);
        st.claim("grid_energy_part", r.grid_norm.energy_part, 0.0, Prov::Estimate);
        st.claim("grid_lp_part", r.grid_norm.lp_part, 0.0, Prov::Estimate);
        if let Some(q) = r.quadrature {
            st.claim("quadrature", q, 0.0, Prov::Estimate);
            st.check_le("|closed_form / quadrature - 1|", (r.closed_form / q - 1.0).abs(), 0.0, 0.02, Prov::Estimate);
        }
        report.steps.push(st);
    }
    if cfg.is_set("target") {
        let (_, dom, _) = domain(cfg)?;
        let e = parse_target(&dom, &cfg.text("target")?)?;
        let opts = cap_opts(cfg)?;
        let variant = cfg.text("variant")?;
        let mut st = Step::new("capacity");
        st.claim("interior_cells", e.interior.len() as f64, 0.0, Prov::Exact);
        st.claim("anchors", e.anchors.len() as f64, 0.0, Prov::Exact);
        if variant == "chain" {
            let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
            let rep = compare_capacities(&dom, &maz, &e, p, &opts)?;
            for (tag, v) in &rep.values {
                st.claim(tag.name(), *v, opts.tol, Prov::Estimate);
            }
            for c in &rep.checks {
                st.check_le(&c.relation, c.lhs, c.rhs, 1e-3 * c.rhs.abs(), Prov::Estimate);
            }
            st.check_le("|BAR_MAZ - BAR| / BAR", rep.maz_equality_rel, 0.0, 0.02, Prov::Estimate);
        } else {
            let tag = VariantTag::parse(&variant).map_err(|e| usage(e.to_string()))?;
            let c = estimate_capacity(&dom, &e, p, tag, &opts)?;
            st.put("variant", json!(tag.name()));
            st.claim("value", c.value, opts.tol, Prov::Estimate);
            st.claim("newtonian_value", c.newtonian_value, opts.tol, Prov::Estimate);
            st.claim("iterations", c.iterations as f64, 0.0, Prov::Exact);
            st.check_eq("converged", c.converged as u8 as f64, 1.0, 0.0, Prov::Exact);
            let mu = dom.measure(&CellSet::new(e.interior.clone()))?;
            st.check_ge("value >= measure of the interior part", c.value, mu, 1e-9 * mu.max(1.0), Prov::Estimate);
            art.field("minimizer", &dom, &c.minimizer)?;
        }
        report.steps.push(st);
    }
    Ok(())
}

pub fn solve_step(st: &mut Step, rep: &SolveReport) {
    st.claim("energy", rep.energy, rep.rel_decrement, Prov::Estimate);
    st.claim("iterations", rep.iterations as f64, 0.0, Prov::Exact);
    st.claim("residual", rep.residual, 0.0, Prov::Estimate);
    st.check_eq("converged", rep.converged as u8 as f64, 1.0, 0.0, Prov::Exact);
}

fn solve(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let (_, dom, _) = domain(cfg)?;
    let p = cfg.num("p")?;
    let data = NamedData::parse(&cfg.text("data")?)?;
    let psi = if cfg.is_set("obstacle") {
        let o = NamedData::parse(&cfg.text("obstacle")?)?;
        Some(ScalarField::from_fn(&dom, |q| o.eval(q)))
    } else {
        None
    };
    let bd = data.boundary(&dom);
    let prob = DirichletProblem { dom: &dom, p, data: bd.clone(), opts: solve_opts(cfg)? };
    let (u, rep) = solve_obstacle(&ObstacleProblem { dirichlet: prob, psi: psi.clone() })?;
    let mut st = Step::new("solve");
    st.put("data", json!(data.name()));
    solve_step(&mut st, &rep);
    let be = solver::BoundaryEdges::new(&dom);
    let f = bd.edge_values(&dom, &be)?;
    let (fmin, fmax) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (umin, umax) = u.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    st.claim("u_min", umin, 0.0, Prov::Estimate);
    st.claim("u_max", umax, 0.0, Prov::Estimate);
    match &psi {
        None => {
            st.check_ge("min u >= min f", umin, fmin, 1e-9, Prov::Estimate);
            st.check_le("max u <= max f", umax, fmax, 1e-9, Prov::Estimate);
        }
        Some(psi) => {
            let gap = u.values.iter().zip(&psi.values).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
            st.check_ge("min (u - psi)", gap, 0.0, 0.0, Prov::Estimate);
        }
    }
    report.steps.push(st);
    art.mask(&dom);
    art.field("field", &dom, &u)
}

/// Points of the boundary whose anchors are unstable or lie in one of the discs.
pub fn exceptional_points(dom: &GridDomain, maz: &MazBoundary, discs: &[[f64; 3]], skip: impl Fn([f64; 2]) -> bool) -> Vec<usize> {
    let unstable: std::collections::BTreeSet<usize> = maz.unstable_anchors().into_iter().collect();
    maz.points
        .iter()
        .enumerate()
        .filter(|(_, q)| {
            let c = dom.center(q.anchor);
            unstable.contains(&q.anchor) || skip(c) || discs.iter().any(|d| (c[0] - d[0]).hypot(c[1] - d[1]) <= d[2])
        })
        .map(|(k, _)| k)
        .collect()
}

pub fn limit_step(st: &mut Step, res: &perron::PerronResult, exceptional: &[usize], eps: f64, min_pass: f64) {
    let lim = boundary_limit_report(res, exceptional, eps);
    st.claim("limit_points_tested", lim.tested as f64, 0.0, Prov::Exact);
    st.claim("limit_points_excluded", exceptional.len() as f64, 0.0, Prov::Exact);
    st.claim("eps", eps, 0.0, Prov::Input);
    let worst = lim.rows.iter().map(|r| r.sample.gap).fold(0.0, f64::max);
    st.claim("worst_gap", worst, 0.0, Prov::Estimate);
    st.check_ge("boundary-limit pass fraction", lim.pass_fraction, min_pass, 0.0, Prov::Estimate);
}

fn perron(cfg: &Config, report: &mut Report, art: &mut Artifacts) -> anyhow::Result<()> {
    let (_, dom, _) = domain(cfg)?;
    let p = cfg.num("p")?;
    let named = NamedData::parse(&cfg.text("data")?)?;
    let discs = parse_discs(cfg.raw("exclude"))?;
    let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
    report.steps.push(fiber_step(&maz));
    let data = named.maz(&dom, &maz);
    let res = perron_solve(&dom, &maz, &data, p, &solve_opts(cfg)?)?;
    let mut st = Step::new("perron");
    solve_step(&mut st, &res.report);
    let exc = exceptional_points(&dom, &maz, &discs, |_| false);
    limit_step(&mut st, &res, &exc, cfg.num("eps")?, cfg.num("min_pass")?);
    report.steps.push(st);
    art.mask(&dom);
    art.field("field", &dom, &res.solution)?;
    art.add("maz.json", serde_json::to_vec_pretty(&maz.to_json(&dom))?);
    Ok(())
}

pub fn walk_cfg(cfg: &Config) -> anyhow::Result<WalkConfig> {
    Ok(WalkConfig {
        n_walks: cfg.uint("n_walks")? as usize,
        seed: cfg.uint("seed")?,
        max_steps: cfg.uint("max_steps")?,
        threads: (cfg.uint("threads")? as usize).max(1),
    })
}

fn mc(cfg: &Config, report: &mut Report) -> anyhow::Result<()> {
    let (_, dom, _) = domain(cfg)?;
    let named = NamedData::parse(&cfg.text("data")?)?;
    let probes = cfg.points("probes")?;
    if probes.is_empty() {
        return Err(usage("`probes` is empty"));
    }
    for &q in &probes {
        open_cell(&dom, q, "probes")?;
    }
    let wc = walk_cfg(cfg)?;
    let maz = build_maz_boundary(&dom, &default_schedule(&dom))?;
    let data = named.maz(&dom, &maz);
    let mut st = Step::new("monte_carlo");
    if cfg.flag("check")? {
        let u = perron_solve(&dom, &maz, &data, 2.0, &solve_opts(cfg)?)?.solution;
        let rep = mc_crosscheck(&dom, WalkData::Maz(&maz, &data), &u, &probes, &wc)?;
        let rows = mc_rows(&rep, &mut st);
        st.put("rows", json!(rows));
    } else {
        let mut rows = Vec::new();
        for (k, &q) in probes.iter().enumerate() {
            let c = WalkConfig { seed: wc.seed.wrapping_add(k as u64), ..wc };
            let e = harmonic_measure_mc(&dom, open_cell(&dom, q, "probes")?, WalkData::Maz(&maz, &data), &c)?;
            rows.push(json!({
                "probe": q,
                "mean": crate::report::claim(e.mean, 3.0 * e.stderr, Prov::Estimate),
                "stderr": crate::report::claim(e.stderr, 0.0, Prov::Estimate),
                "absorbed": crate::report::claim(e.n_absorbed as f64, 0.0, Prov::Exact),
                "timeouts": crate::report::claim(e.n_timeout as f64, 0.0, Prov::Exact),
            }));
        }
        st.put("rows", json!(rows));
    }
    report.steps.push(st);
    Ok(())
}

/// Crosscheck rows as JSON, with one assertion per probe.
pub fn mc_rows(rep: &mc_oracle::CrosscheckReport, st: &mut Step) -> Vec<serde_json::Value> {
    rep.rows
        .iter()
        .map(|r| {
            st.check_le(&format!("|solver - walk| at {:?}", r.probe), r.gap, r.allowed, 0.0, Prov::Estimate);
            json!({
                "probe": r.probe,
                "solver": crate::report::claim(r.solver, 0.0, Prov::Estimate),
                "walk_mean": crate::report::claim(r.mc_mean, 3.0 * r.mc_stderr, Prov::Estimate),
                "walk_stderr": crate::report::claim(r.mc_stderr, 0.0, Prov::Estimate),
            })
        })
        .collect()
}

fn render_cmd(cfg: &Config) -> anyhow::Result<PathBuf> {
    let input = PathBuf::from(cfg.text("input")?);
    let palette = Palette::parse(cfg.raw("palette")).map_err(|e| usage(e.to_string()))?;
    let range = if cfg.is_set("range") { Some(cfg.point("range").map(|r| (r[0], r[1]))?) } else { None };
    let text = std::fs::read_to_string(&input).map_err(|e| usage(format!("reading {}: {e}", input.display())))?;
    let img = render(&CsvField::parse(&text)?, palette, range)?;
    let ext = if palette == Palette::Gray { "pgm" } else { "ppm" };
    let output = if cfg.is_set("output") {
        PathBuf::from(cfg.raw("output"))
    } else {
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
        cfg.out_dir().join("render").join(format!("{stem}.{ext}"))
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&output, img).with_context(|| format!("writing {}", output.display()))?;
    Ok(output)
}
