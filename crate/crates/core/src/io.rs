//! CSV emitters and atomic file output.
//!
//! Every file starts with a `#` provenance line. Floats are written with
//! `{:e}`, the shortest representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifurcation::ScanRow;
use crate::continuation::{Branch, CurveRow};
use crate::error::Result;
use crate::reduction::{ModelRow, SurfaceGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Digest of the canonical run configuration.
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: &str) -> Self {
        Provenance { version: VERSION.to_string(), config_hash: config_hash.to_string() }
    }

    pub fn header(&self) -> String {
        format!("# eightfold {} config {}\n", self.version, self.config_hash)
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Empty for values that are unknown (NaN).
fn finite(x: f64) -> String {
    opt(x.is_finite().then_some(x))
}

pub const SCAN_HEADER: &str = "parameter,kappa,degeneracy";
pub const BRANCH_HEADER: &str = "parameter,kappa_ref,S,S_ref,dS,side,is_fold";
pub const FOLD_HEADER: &str = "family,parameter,bifurcation,kappa0,dS0,A3_fit,A3_integral,A4,r0";
pub const CURVE_HEADER: &str = "parameter,kappa_ref,kappa_linear,dS,side,dS_model";
pub const MODEL_HEADER: &str = "kappa,dS_minus,dS_plus";
pub const SURFACE_HEADER: &str = "r1,r2,dS";

pub fn scan_csv(p: &Provenance, rows: &[ScanRow]) -> String {
    let mut s = p.header();
    s.push_str(SCAN_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{}", num(r.parameter), num(r.kappa), r.degeneracy);
    }
    s
}

pub fn branch_csv(p: &Provenance, b: &Branch) -> String {
    let mut s = p.header();
    s.push_str(BRANCH_HEADER);
    s.push('\n');
    for (i, q) in b.points.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(q.parameter),
            num(q.kappa_ref),
            num(q.action),
            num(q.action_ref),
            num(q.delta_s()),
            q.side.label(),
            u8::from(b.fold_index == Some(i))
        );
    }
    s
}

/// One reduced-model summary of a traced fold. `bifurcation` and
/// `a3_integral` are NaN when unknown and written as empty cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldRow {
    pub family: String,
    pub parameter: f64,
    pub bifurcation: f64,
    pub kappa0: f64,
    pub delta_s0: f64,
    pub a3_fit: f64,
    pub a3_integral: f64,
    pub a4: f64,
    pub r0: f64,
}

pub fn fold_csv(p: &Provenance, rows: &[FoldRow]) -> String {
    let mut s = p.header();
    s.push_str(FOLD_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.family,
            num(r.parameter),
            finite(r.bifurcation),
            num(r.kappa0),
            num(r.delta_s0),
            num(r.a3_fit),
            finite(r.a3_integral),
            num(r.a4),
            num(r.r0)
        );
    }
    s
}

pub fn curve_csv(p: &Provenance, rows: &[CurveRow]) -> String {
    let mut s = p.header();
    s.push_str(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.parameter),
            num(r.kappa_ref),
            num(r.kappa_linear),
            num(r.delta_s),
            r.side.label(),
            opt(r.model)
        );
    }
    s
}

pub fn model_csv(p: &Provenance, rows: &[ModelRow]) -> String {
    let mut s = p.header();
    s.push_str(MODEL_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{}", num(r.kappa), opt(r.ds_minus), opt(r.ds_plus));
    }
    s
}

/// Parameter block `A3,A4,kappa`, then one `r1,r2,dS` row per grid node,
/// then the critical points as comment lines.
pub fn surface_csv(p: &Provenance, g: &SurfaceGrid) -> String {
    let mut s = p.header();
    let _ = writeln!(s, "A3,A4,kappa\n{},{},{}", num(g.a3), num(g.a4), num(g.kappa));
    s.push_str(SURFACE_HEADER);
    s.push('\n');
    for (i, r1) in g.axis.iter().enumerate() {
        for (j, r2) in g.axis.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", num(*r1), num(*r2), num(g.values[i][j]));
        }
    }
    for c in &g.critical {
        let _ = writeln!(
            s,
            "# critical {},{},{},{:?},{:?}",
            num(c.r1),
            num(c.r2),
            num(c.value),
            c.family,
            c.morse
        );
    }
    s
}

/// Write through a temporary file in the same directory and rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}
