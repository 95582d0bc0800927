//! Field and mask files: CSV with header `i,j,x,y,value`, binary PGM (P5) and PPM (P6).

use std::fmt::Write as _;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const CSV_HEADER: &str = "i,j,x,y,value";

/// One row per open cell, in slot order.
pub fn field_to_csv(dom: &GridDomain, u: &ScalarField) -> Result<String> {
    u.check(dom)?;
    let spec = dom.spec();
    let mut out = String::with_capacity(40 * dom.n_open());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (&c, v) in dom.open_cells().iter().zip(&u.values) {
        let (i, j) = spec.ij(c);
        let q = spec.center(c);
        writeln!(out, "{i},{j},{},{},{v:e}", q[0], q[1]).unwrap();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvField {
    pub rows: Vec<(usize, usize, f64)>,
}

impl CsvField {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::BadInput(format!("expected header `{CSV_HEADER}`, found {other:?}"))),
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let bad = || Error::BadInput(format!("malformed CSV row {}: `{line}`", n + 2));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(bad());
            }
            let i = cols[0].parse().map_err(|_| bad())?;
            let j = cols[1].parse().map_err(|_| bad())?;
            let v: f64 = cols[4].parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            rows.push((i, j, v));
        }
        Ok(CsvField { rows })
    }

    pub fn extent(&self) -> (usize, usize) {
        self.rows.iter().fold((0, 0), |(a, b), &(i, j, _)| (a.max(i + 1), b.max(j + 1)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Palette {
    Gray,
    Heat,
}

impl Palette {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gray" | "grey" => Ok(Palette::Gray),
            "heat" => Ok(Palette::Heat),
            _ => Err(Error::BadInput(format!("unknown palette `{s}`"))),
        }
    }
}

fn heat(t: f64) -> [u8; 3] {
    let c = |x: f64| (255.0 * x.clamp(0.0, 1.0)).round() as u8;
    [c(1.5 - (4.0 * t - 3.0).abs()), c(1.5 - (4.0 * t - 2.0).abs()), c(1.5 - (4.0 * t - 1.0).abs())]
}

/// Renders a field with the top grid row first. Cells without a value are black; values
/// map linearly from `range` (or the data range) onto gray levels 1..=255 or a heat ramp.
pub fn render(field: &CsvField, palette: Palette, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    if field.rows.is_empty() {
        return Err(Error::BadInput("field has no rows".into()));
    }
    let (nx, ny) = field.extent();
    let (lo, hi) = range.unwrap_or_else(|| {
        field.rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.2), b.max(r.2)))
    });
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::BadInput(format!("bad value range [{lo}, {hi}]")));
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let depth = if palette == Palette::Gray { 1 } else { 3 };
    let mut px = vec![0u8; nx * ny * depth];
    for &(i, j, v) in &field.rows {
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        let at = ((ny - 1 - j) * nx + i) * depth;
        match palette {
            Palette::Gray => px[at] = 1 + (254.0 * t).round() as u8,
            Palette::Heat => px[at..at + 3].copy_from_slice(&heat(t)),
        }
    }
    let magic = if palette == Palette::Gray { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{nx} {ny}\n255\n").into_bytes();
    out.extend(px);
    Ok(out)
}

/// The open set as a PGM: open cells white, closed cells black.
pub fn mask_pgm(dom: &GridDomain) -> Vec<u8> {
    let spec = dom.spec();
    let mut out = format!("P5\n{} {}\n255\n", spec.nx, spec.ny).into_bytes();
    for j in (0..spec.ny).rev() {
        for i in 0..spec.nx {
            out.push(if dom.is_open(spec.index(i, j)) { 255 } else { 0 });
        }
    }
    out
}
