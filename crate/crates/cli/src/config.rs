//! Flat `key = value` run configuration.
//!
//! Values are layered: built-in defaults, then the config file, then `key=value`
//! arguments, then explicit flags. Later layers win. Every key must appear in the
//! schema of the command being run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use mazcap_core::DomainRecipe;

/// A command-line or configuration mistake; maps to exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub const OUT_ENV: &str = "MAZCAP_OUT";
pub const DEFAULT_OUT: &str = "mazcap-out";

/// Keys every command accepts.
pub const GLOBAL_KEYS: [(&str, &str); 5] =
    [("seed", "1"), ("tol", "1e-8"), ("max_iter", "50000"), ("threads", "1"), ("out", "")];

/// Recipe parameters; empty means "use the recipe default".
pub const RECIPE_KEYS: [&str; 11] = ["side", "width", "height", "beta", "J", "K", "m", "c_rule", "c0", "ratio", "weight"];

#[derive(Clone, Debug, Default)]
pub struct Schema {
    pub defaults: Vec<(String, String)>,
}

impl Schema {
    pub fn new(keys: &[(&str, &str)]) -> Self {
        let mut s = Schema::default();
        for (k, v) in GLOBAL_KEYS.iter().chain(keys) {
            s.set(k, v);
        }
        s
    }

    /// Adds `recipe` plus the recipe parameters.
    pub fn with_recipe(mut self, recipe: &str) -> Self {
        self.set("recipe", recipe);
        for k in RECIPE_KEYS {
            self.set(k, "");
        }
        self
    }

    pub fn set(&mut self, k: &str, v: &str) {
        match self.defaults.iter_mut().find(|(key, _)| key == k) {
            Some(e) => e.1 = v.to_string(),
            None => self.defaults.push((k.to_string(), v.to_string())),
        }
    }

    fn has(&self, k: &str) -> bool {
        self.defaults.iter().any(|(key, _)| key == k)
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_kv_text(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(split_kv(line).ok_or_else(|| usage(format!("config line {}: expected `key = value`, got `{line}`", n + 1)))?);
    }
    Ok(out)
}

pub fn split_kv(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

#[derive(Clone, Debug)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Applies the layers in order; any key outside the schema is rejected.
    pub fn build(schema: &Schema, layers: &[Vec<(String, String)>]) -> anyhow::Result<Self> {
        let mut values: BTreeMap<String, String> = schema.defaults.iter().cloned().collect();
        for layer in layers {
            for (k, v) in layer {
                if !schema.has(k) {
                    let mut known: Vec<&str> = schema.defaults.iter().map(|(k, _)| k.as_str()).collect();
                    known.sort_unstable();
                    return Err(usage(format!("unknown key `{k}` (accepted: {})", known.join(", "))));
                }
                values.insert(k.clone(), v.clone());
            }
        }
        Ok(Config { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, k: &str) -> &str {
        self.values.get(k).map(String::as_str).unwrap_or("")
    }

    pub fn is_set(&self, k: &str) -> bool {
        !self.raw(k).is_empty()
    }

    pub fn text(&self, k: &str) -> anyhow::Result<String> {
        let v = self.raw(k);
        if v.is_empty() {
            return Err(usage(format!("`{k}` is required")));
        }
        Ok(v.to_string())
    }

    pub fn num(&self, k: &str) -> anyhow::Result<f64> {
        parse_num(self.raw(k)).ok_or_else(|| usage(format!("`{k}` must be a number, got `{}`", self.raw(k))))
    }

    pub fn opt_num(&self, k: &str) -> anyhow::Result<Option<f64>> {
        if self.is_set(k) {
            self.num(k).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn uint(&self, k: &str) -> anyhow::Result<u64> {
        let v = self.num(k)?;
        if v < 0.0 || v.fract() != 0.0 || v > 9.0e15 {
            return Err(usage(format!("`{k}` must be a nonnegative integer, got `{}`", self.raw(k))));
        }
        Ok(v as u64)
    }

    pub fn flag(&self, k: &str) -> anyhow::Result<bool> {
        match self.raw(k) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" | "" => Ok(false),
            v => Err(usage(format!("`{k}` must be true or false, got `{v}`"))),
        }
    }

    /// Semicolon-separated list of numbers, e.g. `2^-7;2^-8`.
    pub fn num_list(&self, k: &str) -> anyhow::Result<Vec<f64>> {
        let raw = self.raw(k);
        if raw.is_empty() {
            return Ok(vec![]);
        }
        raw.split(';')
            .map(|s| parse_num(s).ok_or_else(|| usage(format!("`{k}`: bad number `{s}`"))))
            .collect()
    }

    /// A point `x,y`.
    pub fn point(&self, k: &str) -> anyhow::Result<[f64; 2]> {
        parse_point(self.raw(k)).ok_or_else(|| usage(format!("`{k}` must be a point `x,y`, got `{}`", self.raw(k))))
    }

    /// Semicolon-separated points `x,y;x,y`.
    pub fn points(&self, k: &str) -> anyhow::Result<Vec<[f64; 2]>> {
        let raw = self.raw(k);
        if raw.is_empty() {
            return Ok(vec![]);
        }
        raw.split(';')
            .map(|s| parse_point(s).ok_or_else(|| usage(format!("`{k}`: bad point `{s}`"))))
            .collect()
    }

    pub fn recipe(&self) -> anyhow::Result<DomainRecipe> {
        let mut pairs = vec![("recipe", self.raw("recipe"))];
        for k in RECIPE_KEYS {
            if self.is_set(k) {
                pairs.push((k, self.raw(k)));
            }
        }
        DomainRecipe::from_kv(pairs).map_err(|e| usage(e.to_string()))
    }

    pub fn out_dir(&self) -> PathBuf {
        out_dir(self.raw("out"))
    }
}

pub fn out_dir(configured: &str) -> PathBuf {
    if !configured.is_empty() {
        return PathBuf::from(configured);
    }
    match std::env::var(OUT_ENV) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => Path::new(DEFAULT_OUT).to_path_buf(),
    }
}

/// Accepts plain floats and powers of two written `2^k`, e.g. `2^-9`.
pub fn parse_num(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(e) = s.strip_prefix("2^") {
        return e.parse::<i32>().ok().map(|k| 2f64.powi(k));
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_point(s: &str) -> Option<[f64; 2]> {
    let (a, b) = s.split_once(',')?;
    Some([parse_num(a)?, parse_num(b)?])
}
