//! `mazcap`: batch front end for the grid potential-theory toolkit.
//!
//! Exit status: 0 when every assertion passes, 1 when one fails (the report is still
//! written) or a computation errors, 2 for usage errors (nothing is written).

mod commands;
mod config;
mod data;
mod examples;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_kv_text, split_kv, usage, Config, Usage};
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "mazcap", version, about = "Capacities, Mazurkiewicz boundaries and Perron solutions on grid domains")]
struct Cli {
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver and optimizer tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap for solvers and optimizers.
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<u64>,
    /// Worker threads for the random-walk oracle.
    #[arg(long, global = true)]
    threads: Option<u64>,
    /// Output directory (default: $MAZCAP_OUT, else ./mazcap-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` configuration file; command-line settings override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize a domain recipe and write its mask.
    Gen(Settings),
    /// Distances between two cells, or the Mazurkiewicz boundary fibers.
    Metric(Settings),
    /// Capacity of a target set, a capacity chain, or a witness evaluation.
    Capacity(Settings),
    /// p-harmonic Dirichlet or obstacle problem with named data.
    Solve(Settings),
    /// Perron solution for data on the Mazurkiewicz boundary.
    Perron(Settings),
    /// Random-walk estimates of the p = 2 solution.
    Mc(Settings),
    /// Run a named example pipeline.
    RunExample {
        /// Example name; `list` prints the catalog.
        name: String,
        #[command(flatten)]
        settings: Settings,
    },
    /// Render a field CSV as PGM (gray) or PPM (heat).
    Render(Settings),
}

#[derive(clap::Args, Debug)]
struct Settings {
    /// Settings as `key=value`.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Settings) {
        match self {
            Command::Gen(s) => ("gen", s),
            Command::Metric(s) => ("metric", s),
            Command::Capacity(s) => ("capacity", s),
            Command::Solve(s) => ("solve", s),
            Command::Perron(s) => ("perron", s),
            Command::Mc(s) => ("mc", s),
            Command::RunExample { settings, .. } => ("run-example", settings),
            Command::Render(s) => ("render", s),
        }
    }
}

fn layers(cli: &Cli, settings: &Settings) -> anyhow::Result<Vec<Vec<(String, String)>>> {
    let mut out = Vec::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
        out.push(parse_kv_text(&text)?);
    }
    let args = settings
        .set
        .iter()
        .map(|s| split_kv(s).ok_or_else(|| usage(format!("expected KEY=VALUE, got `{s}`"))))
        .collect::<anyhow::Result<Vec<_>>>()?;
    out.push(args);
    let mut flags = Vec::new();
    let mut flag = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            flags.push((k.to_string(), v));
        }
    };
    flag("seed", cli.seed.map(|v| v.to_string()));
    flag("tol", cli.tol.map(|v| v.to_string()));
    flag("max_iter", cli.max_iter.map(|v| v.to_string()));
    flag("threads", cli.threads.map(|v| v.to_string()));
    flag("out", cli.out.as_ref().map(|p| p.display().to_string()));
    out.push(flags);
    Ok(out)
}

/// Returns whether every assertion passed.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let (command, settings) = cli.command.parts();
    if let Command::RunExample { name, .. } = &cli.command {
        if name == "list" {
            for n in examples::NAMES {
                println!("{n}");
            }
            return Ok(true);
        }
        let schema = examples::schema(name)
            .ok_or_else(|| usage(format!("unknown example `{name}` (known: {})", examples::NAMES.join(", "))))?;
        let cfg = Config::build(&schema, &layers(cli, settings)?)?;
        let mut report = Report::new(&format!("run-example {name}"), argv, cfg.values());
        let mut art = commands::Artifacts::default();
        examples::run(name, &cfg, &mut report, &mut art)?;
        let dir = cfg.out_dir().join(name);
        art.write(&dir, &mut report)?;
        print!("{}", report.summary());
        println!("report: {}", dir.join("report.json").display());
        return Ok(report.pass());
    }
    let schema = commands::schema(command).expect("every command has a schema");
    let cfg = Config::build(&schema, &layers(cli, settings)?)?;
    let mut report = Report::new(command, argv, cfg.values());
    let written = commands::run(command, &cfg, &mut report)?;
    if command == "render" {
        if let Some(p) = written {
            println!("wrote {}", p.display());
        }
        return Ok(true);
    }
    print!("{}", report.summary());
    if let Some(dir) = written {
        println!("report: {}", dir.join("report.json").display());
    }
    Ok(report.pass())
}

fn is_usage(e: &anyhow::Error) -> bool {
    if e.downcast_ref::<Usage>().is_some() {
        return true;
    }
    use mazcap_core::Error as E;
    matches!(
        e.downcast_ref::<E>(),
        Some(E::BadParams(_) | E::BadExponent(_) | E::ResolutionTooCoarse(_) | E::BadInput(_))
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
