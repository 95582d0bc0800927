//! Run reports. Every number in a step result carries its tolerance and provenance.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prov {
    /// Grid or Monte Carlo estimate.
    Estimate,
    /// Closed-form value evaluated in floating point.
    ClosedForm,
    /// Exact arithmetic or an exact count.
    Exact,
    /// Echo of a configured parameter.
    Input,
}

impl Prov {
    pub fn name(self) -> &'static str {
        match self {
            Prov::Estimate => "estimate",
            Prov::ClosedForm => "closed_form",
            Prov::Exact => "exact",
            Prov::Input => "input",
        }
    }
}

pub fn claim(value: f64, tolerance: f64, prov: Prov) -> Value {
    json!({ "value": finite(value), "tolerance": tolerance, "provenance": prov.name() })
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub tolerance: f64,
    pub provenance: Prov,
    pub pass: bool,
}

impl Assertion {
    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": finite(self.value),
            "relation": self.relation,
            "bound": finite(self.bound),
            "tolerance": self.tolerance,
            "provenance": self.provenance.name(),
            "pass": self.pass,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub name: String,
    pub results: Map<String, Value>,
    pub assertions: Vec<Assertion>,
}

impl Step {
    pub fn new(name: &str) -> Self {
        Step { name: name.into(), results: Map::new(), assertions: vec![] }
    }

    pub fn put(&mut self, key: &str, v: Value) -> &mut Self {
        self.results.insert(key.into(), v);
        self
    }

    pub fn claim(&mut self, key: &str, value: f64, tolerance: f64, prov: Prov) -> &mut Self {
        self.put(key, claim(value, tolerance, prov))
    }

    /// Asserts `value <= bound + tolerance`.
    pub fn check_le(&mut self, name: &str, value: f64, bound: f64, tolerance: f64, prov: Prov) -> bool {
        let pass = value <= bound + tolerance;
        self.push(name, value, "<=", bound, tolerance, prov, pass)
    }

    /// Asserts `value >= bound - tolerance`.
    pub fn check_ge(&mut self, name: &str, value: f64, bound: f64, tolerance: f64, prov: Prov) -> bool {
        let pass = value >= bound - tolerance;
        self.push(name, value, ">=", bound, tolerance, prov, pass)
    }

    /// Asserts `|value - bound| <= tolerance`.
    pub fn check_eq(&mut self, name: &str, value: f64, bound: f64, tolerance: f64, prov: Prov) -> bool {
        let pass = (value - bound).abs() <= tolerance;
        self.push(name, value, "==", bound, tolerance, prov, pass)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, name: &str, value: f64, relation: &'static str, bound: f64, tolerance: f64, prov: Prov, pass: bool) -> bool {
        self.assertions.push(Assertion { name: name.into(), value, relation, bound, tolerance, provenance: prov, pass });
        pass
    }

    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "results": self.results,
            "assertions": self.assertions.iter().map(Assertion::to_json).collect::<Vec<_>>(),
            "pass": self.pass(),
        })
    }
}

pub struct Report {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Map<String, Value>,
    pub steps: Vec<Step>,
    pub artifacts: Vec<String>,
    started: Instant,
}

impl Report {
    pub fn new(command: &str, argv: Vec<String>, config: &std::collections::BTreeMap<String, String>) -> Self {
        Report {
            command: command.into(),
            argv,
            config: config.iter().map(|(k, v)| (k.clone(), json!(v))).collect(),
            steps: vec![],
            artifacts: vec![],
            started: Instant::now(),
        }
    }

    pub fn pass(&self) -> bool {
        self.steps.iter().all(Step::pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": { "name": self.command, "argv": self.argv, "config": self.config },
            "version": version(),
            "steps": self.steps.iter().map(Step::to_json).collect::<Vec<_>>(),
            "artifacts": self.artifacts,
            "pass": self.pass(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        })
    }

    /// Writes `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }

    /// One line per assertion plus a verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            for a in &st.assertions {
                s.push_str(&format!(
                    "[{}] {}: {}: {:.6e} {} {:.6e} (tol {:.1e}, {})\n",
                    if a.pass { "PASS" } else { "FAIL" },
                    st.name,
                    a.name,
                    a.value,
                    a.relation,
                    a.bound,
                    a.tolerance,
                    a.provenance.name()
                ));
            }
        }
        let n: usize = self.steps.iter().map(|s| s.assertions.len()).sum();
        let failed: usize = self.steps.iter().map(|s| s.assertions.iter().filter(|a| !a.pass).count()).sum();
        s.push_str(&format!("{}: {} of {n} assertions passed\n", self.command, n - failed));
        s
    }
}

pub fn version() -> String {
    format!("mazcap {}", env!("CARGO_PKG_VERSION"))
}
