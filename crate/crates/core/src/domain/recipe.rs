use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::shape::{Arc, Outer, Removed, Shape};
use super::{GridDomain, WeightMode};
use crate::cantor::CSeq;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    Square,
    Rectangle,
    SlitDisc,
    Cusp,
    Comb,
    ThickComb,
    DoubleComb,
    CountableComb,
    CantorArcs,
    CantorThick,
    CantorSquare,
    CustomMask,
}

impl RecipeKind {
    pub const ALL: [RecipeKind; 12] = [
        RecipeKind::Square,
        RecipeKind::Rectangle,
        RecipeKind::SlitDisc,
        RecipeKind::Cusp,
        RecipeKind::Comb,
        RecipeKind::ThickComb,
        RecipeKind::DoubleComb,
        RecipeKind::CountableComb,
        RecipeKind::CantorArcs,
        RecipeKind::CantorThick,
        RecipeKind::CantorSquare,
        RecipeKind::CustomMask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RecipeKind::Square => "square",
            RecipeKind::Rectangle => "rectangle",
            RecipeKind::SlitDisc => "slit_disc",
            RecipeKind::Cusp => "cusp",
            RecipeKind::Comb => "comb",
            RecipeKind::ThickComb => "thick_comb",
            RecipeKind::DoubleComb => "double_comb",
            RecipeKind::CountableComb => "countable_comb",
            RecipeKind::CantorArcs => "cantor_arcs",
            RecipeKind::CantorThick => "cantor_thick",
            RecipeKind::CantorSquare => "cantor_square",
            RecipeKind::CustomMask => "custom_mask",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            RecipeKind::Square => &["side"],
            RecipeKind::Rectangle => &["width", "height"],
            RecipeKind::SlitDisc | RecipeKind::CustomMask => &[],
            RecipeKind::Cusp => &["beta"],
            RecipeKind::Comb | RecipeKind::ThickComb | RecipeKind::DoubleComb => &["J"],
            RecipeKind::CountableComb => &["J", "K"],
            RecipeKind::CantorArcs | RecipeKind::CantorThick => &["m"],
            RecipeKind::CantorSquare => &["m", "c_rule", "c0", "ratio"],
        }
    }
}

impl fmt::Display for RecipeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecipeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RecipeKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown recipe `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Num(v)
    }
}

impl From<u32> for ParamValue {
    fn from(v: u32) -> Self {
        ParamValue::Num(v as f64)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// A named example domain with its parameters. Serializes to flat `key = value` lines:
/// `recipe = comb`, `J = 6`, `weight = radial`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainRecipe {
    pub kind: RecipeKind,
    pub params: BTreeMap<String, ParamValue>,
}

impl DomainRecipe {
    pub fn new(kind: RecipeKind) -> Self {
        Self { kind, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<ParamValue>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn square(side: f64) -> Self {
        Self::new(RecipeKind::Square).with("side", side)
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        Self::new(RecipeKind::Rectangle).with("width", width).with("height", height)
    }

    pub fn slit_disc() -> Self {
        Self::new(RecipeKind::SlitDisc)
    }

    pub fn cusp(beta: f64) -> Self {
        Self::new(RecipeKind::Cusp).with("beta", beta)
    }

    pub fn comb() -> Self {
        Self::new(RecipeKind::Comb)
    }

    pub fn thick_comb() -> Self {
        Self::new(RecipeKind::ThickComb)
    }

    pub fn double_comb() -> Self {
        Self::new(RecipeKind::DoubleComb)
    }

    pub fn countable_comb() -> Self {
        Self::new(RecipeKind::CountableComb)
    }

    pub fn cantor_arcs() -> Self {
        Self::new(RecipeKind::CantorArcs)
    }

    pub fn cantor_thick() -> Self {
        Self::new(RecipeKind::CantorThick)
    }

    pub fn cantor_square(seq: CSeq) -> Self {
        let r = Self::new(RecipeKind::CantorSquare).with("c_rule", seq.name());
        match seq {
            CSeq::Geometric { c0, ratio } => r.with("c0", c0).with("ratio", ratio),
            _ => r,
        }
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Num(v)) if v.is_finite() => Ok(Some(*v)),
            Some(v) => Err(Error::BadParams(format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    fn int(&self, key: &str) -> Result<Option<u32>> {
        match self.num(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 64.0 => Ok(Some(v as u32)),
            Some(v) => Err(Error::BadParams(format!("`{key}` must be a small nonnegative integer, got {v}"))),
        }
    }

    pub fn text(&self, key: &str) -> Option<String> {
        self.params.get(key).map(|v| v.to_string())
    }

    pub fn weight_mode(&self) -> Result<WeightMode> {
        match self.params.get("weight") {
            None => Ok(WeightMode::Uniform),
            Some(v) => WeightMode::parse(&v.to_string()),
        }
    }

    fn check_keys(&self) -> Result<()> {
        let allowed = self.kind.keys();
        for k in self.params.keys() {
            if k != "weight" && !allowed.contains(&k.as_str()) {
                return Err(Error::BadParams(format!("recipe {} has no parameter `{k}`", self.kind)));
            }
        }
        Ok(())
    }

    pub fn cseq(&self) -> Result<CSeq> {
        let rule = self.text("c_rule").unwrap_or_else(|| "pow2sq".into());
        let seq = match rule.as_str() {
            "pow2" => CSeq::Pow2,
            "pow2sq" => CSeq::Pow2Sq,
            "geometric" => CSeq::Geometric {
                c0: self.num("c0")?.unwrap_or(1.0 / 3.0),
                ratio: self.num("ratio")?.unwrap_or(0.5),
            },
            other => return Err(Error::BadParams(format!("unknown c_rule `{other}`"))),
        };
        seq.validate()?;
        Ok(seq)
    }

    /// Parses `key = value` pairs; `recipe` names the kind, every other key is a parameter.
    pub fn from_kv<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut kind = None;
        let mut params = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.trim(), v.trim());
            if k == "recipe" {
                kind = Some(v.parse::<RecipeKind>()?);
            } else {
                let val = v.parse::<f64>().map(ParamValue::Num).unwrap_or_else(|_| ParamValue::Text(v.to_string()));
                params.insert(k.to_string(), val);
            }
        }
        let kind = kind.ok_or_else(|| Error::BadParams("missing `recipe` key".into()))?;
        let r = Self { kind, params };
        r.check_keys()?;
        Ok(r)
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!("recipe = {}\n", self.kind);
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Builds the continuum shape and the recipe with defaulted parameters filled in.
    fn resolve(&self, h: f64) -> Result<(Shape, DomainRecipe)> {
        self.check_keys()?;
        self.weight_mode()?;
        let coarse = |what: String| Error::ResolutionTooCoarse(what);
        let mut res = self.clone();
        let levels = (1.0 / h).log2().floor() as i64;
        let shape = match self.kind {
            RecipeKind::Square => {
                let s = self.num("side")?.unwrap_or(1.0);
                if s <= 0.0 {
                    return Err(Error::BadParams("side must be positive".into()));
                }
                if s < 2.0 * h {
                    return Err(coarse(format!("square of side {s} is under 2 cells")));
                }
                res = res.with("side", s);
                Shape { outer: Outer::Rect([0.0, s, 0.0, s]), removed: vec![] }
            }
            RecipeKind::Rectangle => {
                let w = self.num("width")?.unwrap_or(2.0);
                let ht = self.num("height")?.unwrap_or(1.0);
                if w <= 0.0 || ht <= 0.0 {
                    return Err(Error::BadParams("rectangle sides must be positive".into()));
                }
                if w.min(ht) < 2.0 * h {
                    return Err(coarse("rectangle side under 2 cells".into()));
                }
                res = res.with("width", w).with("height", ht);
                Shape { outer: Outer::Rect([0.0, w, 0.0, ht]), removed: vec![] }
            }
            RecipeKind::SlitDisc => {
                if h > 0.125 {
                    return Err(coarse("slit disc needs h <= 1/8".into()));
                }
                Shape {
                    outer: Outer::Disc { c: [0.0, 0.0], r: 1.0 },
                    removed: vec![Removed::Rect([0.0, 1.0, 0.0, 0.0])],
                }
            }
            RecipeKind::Cusp => {
                let beta = self.num("beta")?.unwrap_or(3.0);
                if beta <= 0.0 {
                    return Err(Error::BadParams(format!("cusp exponent beta = {beta} must be positive")));
                }
                if h > 0.25 {
                    return Err(coarse("cusp needs h <= 1/4".into()));
                }
                res = res.with("beta", beta);
                Shape { outer: Outer::Cusp { beta }, removed: vec![] }
            }
            RecipeKind::Comb | RecipeKind::DoubleComb => {
                let j_max = match self.int("J")? {
                    Some(j) => j as i64,
                    None => levels - 2,
                };
                if j_max < 1 || (-(j_max as f64)).exp2() < 3.0 * h * (1.0 - 1e-9) {
                    return Err(coarse(format!("slit gap 2^-{j_max} spans under 2 open cells at h = {h}")));
                }
                res = res.with("J", j_max as u32);
                let seg = |x: f64| Removed::Rect([x, x, 0.0, 1.0]);
                if self.kind == RecipeKind::Comb {
                    Shape {
                        outer: Outer::Rect([0.0, 2.0, -1.0, 1.0]),
                        removed: (0..=j_max).map(|j| seg((-(j as f64)).exp2())).collect(),
                    }
                } else {
                    let mut removed = vec![seg(0.0)];
                    for j in 1..=j_max {
                        let x = (-(j as f64)).exp2();
                        removed.push(seg(x));
                        removed.push(seg(-x));
                    }
                    Shape { outer: Outer::Rect([-1.0, 1.0, -1.0, 1.0]), removed }
                }
            }
            RecipeKind::ThickComb => {
                let j_max = match self.int("J")? {
                    Some(j) => j as i64,
                    None => levels - 5,
                };
                if j_max < 0 || (-(j_max as f64) - 3.0).exp2() < 3.0 * h * (1.0 - 1e-9) {
                    return Err(coarse(format!("thick comb gaps at depth {j_max} span under 2 open cells")));
                }
                res = res.with("J", j_max as u32);
                let removed = (0..=j_max)
                    .map(|j| {
                        let x = (-(j as f64)).exp2();
                        let w = x / 4.0;
                        Removed::Rect([x - w, x + w, 0.0, 1.0])
                    })
                    .collect();
                Shape { outer: Outer::Rect([0.0, 2.0, -1.0, 1.0]), removed }
            }
            RecipeKind::CountableComb => {
                let j_max = match self.int("J")? {
                    Some(j) => j as i64,
                    None => levels - 2,
                };
                if j_max < 1 || (-(j_max as f64)).exp2() < 3.0 * h * (1.0 - 1e-9) {
                    return Err(coarse(format!("slit gap 2^-{j_max} spans under 2 open cells at h = {h}")));
                }
                // Secondary slits 2^-j (1 ± 2^-k) need 2^-(j+k) >= 3h.
                let k_auto = |j: i64| ((1.0 / (3.0 * h)).log2() + 1e-9).floor() as i64 - j;
                let k_cap = self.int("K")?.map(|k| k as i64);
                if let Some(k) = k_cap {
                    if k < 3 || k > k_auto(0) {
                        return Err(coarse(format!("secondary depth K = {k} is not resolvable at h = {h}")));
                    }
                }
                res = res.with("J", j_max as u32);
                if let Some(k) = k_cap {
                    res = res.with("K", k as u32);
                }
                let mut removed = Vec::new();
                for j in 0..=j_max {
                    let x = (-(j as f64)).exp2();
                    removed.push(Removed::Rect([x, x, 0.0, 1.0]));
                    let kj = k_cap.map_or(k_auto(j), |k| k.min(k_auto(j)));
                    for k in 3..=kj {
                        let d = x * (-(k as f64)).exp2();
                        removed.push(Removed::Rect([x + d, x + d, 0.0, 1.0]));
                        removed.push(Removed::Rect([x - d, x - d, 0.0, 1.0]));
                    }
                }
                Shape { outer: Outer::Rect([0.0, 2.0, -1.0, 1.0]), removed }
            }
            RecipeKind::CantorArcs | RecipeKind::CantorThick => {
                let thick = self.kind == RecipeKind::CantorThick;
                let seq = CSeq::Pow2;
                let spacing = |n: u32| (-(n as f64)).exp2() * seq.gap(n) / 6.0;
                // Neighbouring arcs must stay outside the inner half of the default probe balls.
                let need = 16.0;
                let ok = |n: u32| spacing(n) >= need * h * (1.0 - 1e-9) && seq.alpha(n) >= 8.0 * h;
                let m = match self.int("m")? {
                    Some(m) => m,
                    None => (1..30).take_while(|&n| ok(n)).last().unwrap_or(0),
                };
                if m < 1 || !ok(m) {
                    return Err(coarse(format!("Cantor arcs of generation {m} are not resolvable at h = {h}")));
                }
                res = res.with("m", m);
                let mut removed: Vec<Removed> = seq.squares(m).into_iter().map(Removed::Rect).collect();
                for n in 1..=m {
                    let theta = seq.gap(n);
                    let pad = if thick { (-(n as f64)).exp2() * theta / 24.0 } else { 0.0 };
                    for q in seq.squares(n) {
                        for k in 0..=(1u32 << n) {
                            let rho = theta / 6.0 * (1.0 + (-(n as f64)).exp2() * k as f64);
                            removed.push(Removed::Arc(Arc { q, rho, open_left: k % 2 == 0, pad }));
                        }
                    }
                }
                Shape { outer: Outer::Rect([-1.0, 3.0, -1.0, 3.0]), removed }
            }
            RecipeKind::CantorSquare => {
                let seq = self.cseq()?;
                let ok = |n: u32| seq.alpha(n) >= 8.0 * h && (n == 0 || seq.gap(n) >= 3.0 * h * (1.0 - 1e-9));
                let m = match self.int("m")? {
                    Some(m) => m,
                    None => (0..30).take_while(|&n| ok(n)).last().ok_or_else(|| coarse("Cantor square generation 0 unresolvable".into()))?,
                };
                if !(0..=m).all(ok) {
                    return Err(coarse(format!("Cantor squares of generation {m} are not resolvable at h = {h}")));
                }
                res = res.with("m", m).with("c_rule", seq.name());
                let removed = seq.squares(m).into_iter().map(Removed::Rect).collect();
                Shape { outer: Outer::Rect([-1.0, 3.0, -1.0, 3.0]), removed }
            }
            RecipeKind::CustomMask => return Err(Error::NotRefinable),
        };
        Ok((shape, res))
    }

    /// Continuum membership test of the (truncated) recipe set at the depths used for `h`.
    pub fn contains_point(&self, h: f64, p: [f64; 2]) -> Result<bool> {
        Ok(self.resolve(h)?.0.contains_point(p))
    }
}

/// Rasterizes a recipe at cell size `h`.
pub fn gen_domain(recipe: &DomainRecipe, h: f64) -> Result<GridDomain> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::BadParams(format!("cell size h = {h} must be positive")));
    }
    let (shape, resolved) = recipe.resolve(h)?;
    let spec = shape.grid(h);
    let mask = shape.rasterize(&spec);
    let mut dom = GridDomain::assemble(spec, mask, recipe.weight_mode()?)?;
    dom.set_recipes(recipe.clone(), resolved);
    Ok(dom)
}
