use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eightfold::bifurcation::{locate_bifurcation, scan_eigenvalue, scan_rows, LocateOptions, ScanOptions, Target};
use eightfold::continuation::a3_at;
use eightfold::io::{self, num, FoldRow, Provenance};
use eightfold::pipeline::{build_family, lj_merge, run_study};
use eightfold::reduction::{fit_a3a4, fold_condition, fold_prediction, model_curve, surface_grid};
use eightfold::seeds::{choreography_seed_with, SeedKind};
use eightfold::{solve_orbit, Error, Potential};
use serde::Serialize;

use crate::config::RunConfig;

pub struct Ctx {
    pub config: RunConfig,
    pub prov: Provenance,
}

impl Ctx {
    pub fn new(config: RunConfig) -> Self {
        let prov = Provenance::new(&config.hash());
        Ctx { config, prov }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.output.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        io::write_atomic(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
        Ok(p)
    }

    /// JSON object whose first field is the provenance block.
    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Stamped<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            value: &'a T,
        }
        let text = serde_json::to_string_pretty(&Stamped { provenance: &self.prov, value })? + "\n";
        self.write(name, &text)
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::Usage(msg.into()).into()
}

pub fn find(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let period = c.find.period.ok_or_else(|| usage("find needs a period (--period or find.period)"))?;
    if !(period > 0.0) {
        return Err(usage(format!("period must be positive, got {period}")));
    }
    let seed = match c.family.as_str() {
        "lj-high" => SeedKind::FigureEightLJHigh,
        "lj-low" => SeedKind::FigureEightLJLow,
        "newtonian-eight" => SeedKind::FigureEightNewtonian,
        other => return Err(usage(format!("find supports lj-high, lj-low, newtonian-eight; got '{other}'"))),
    };
    let mut guess = choreography_seed_with(seed, period, c.modes, c.samples)?;
    if seed == SeedKind::FigureEightNewtonian && c.find.exponent != 1.0 {
        guess = guess.with_potential(Potential::homogeneous(c.find.exponent)?)?;
    }
    let report = solve_orbit(&guess, &c.solve)?;
    if !report.converged {
        return Err(Error::NoConvergence(format!(
            "no solution at period {period} (residual {:.3e} after {} iterations)",
            report.residual_norm, report.iterations
        ))
        .into());
    }
    let o = &report.orbit;
    let action = o.action()?;
    let mut summary = ctx.prov.header();
    let _ = writeln!(summary, "family {}", c.family);
    let _ = writeln!(summary, "period {}", num(o.period));
    let _ = writeln!(summary, "action {}", num(action));
    let _ = writeln!(summary, "residual {}", num(report.residual_norm));
    let _ = writeln!(summary, "iterations {}", report.iterations);
    let _ = writeln!(summary, "min_distance {}", num(o.min_distance()));
    ctx.write_json(&format!("{}.orbit.json", c.family), &o.to_file())?;
    ctx.write(&format!("{}.summary.txt", c.family), &summary)?;
    print!("{}", summary.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

pub fn scan(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let opts = c.study_options()?;
    let from = c.scan.from.unwrap_or(opts.bracket.0);
    let to = c.scan.to.unwrap_or(opts.bracket.1);
    let (family, _) = build_family(c.kind()?, c.modes, c.samples)?;
    let pts = scan_eigenvalue(&family, from, to, c.scan.steps, &Target::three_fold(), None, &ScanOptions::default())?;
    ctx.write(&format!("{}.scan.csv", c.family), &io::scan_csv(&ctx.prov, &scan_rows(&pts)))?;
    Ok(())
}

#[derive(Serialize)]
struct LocateReport {
    family: String,
    parameter_kind: eightfold::bifurcation::Parameter,
    parameter: f64,
    kappa: f64,
    kappas: Vec<f64>,
    degeneracy: usize,
    tag: eightfold::symmetry::SymmetryTag,
    a3_integral: f64,
    action: f64,
    origin: Option<f64>,
}

pub fn locate(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let opts = c.study_options()?;
    let (family, origin) = build_family(c.kind()?, opts.modes, opts.samples)?;
    let (lo, hi) = opts.bracket;
    let bp = locate_bifurcation(&family, lo, hi, &Target::three_fold(), &LocateOptions::default())?;
    let report = LocateReport {
        family: c.family.clone(),
        parameter_kind: bp.parameter_kind,
        parameter: bp.parameter,
        kappa: bp.kappa,
        kappas: bp.kappas.clone(),
        degeneracy: bp.degeneracy,
        tag: bp.tag,
        a3_integral: a3_at(&bp)?,
        action: bp.orbit.action()?,
        origin: origin.map(|o| o.parameter),
    };
    println!("bifurcation {} d={} tag={:?} A3={}", num(report.parameter), report.degeneracy, report.tag, num(report.a3_integral));
    ctx.write_json(&format!("{}.bifurcation.json", c.family), &report)?;
    ctx.write_json(&format!("{}.bifurcation.orbit.json", c.family), &bp.orbit.to_file())?;
    Ok(())
}

fn fold_row(family: &str, parameter: f64, bifurcation: f64, kappa0: f64, delta_s0: f64, a3_integral: f64) -> Result<FoldRow> {
    let (a3, a4) = fit_a3a4(kappa0, delta_s0)?;
    let (r0, _) = fold_condition(a3, a4, 0.5)?;
    Ok(FoldRow { family: family.into(), parameter, bifurcation, kappa0, delta_s0, a3_fit: a3, a3_integral, a4, r0 })
}

/// Full pipeline for one family: branch, fold row, eigenvalue fit and
/// model-vs-exact curves.
pub fn branch(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let kind = c.kind()?;
    let opts = c.study_options()?;
    let s = run_study(kind, &opts)?;
    let name = kind.label();
    ctx.write(&format!("{name}.branch.csv"), &io::branch_csv(&ctx.prov, &s.branch))?;
    let row = fold_row(name, s.fold.parameter, s.bifurcation.parameter, s.fold.kappa0, s.fold.delta_s0, s.a3_integral)?;
    ctx.write(&format!("{name}.fold.csv"), &io::fold_csv(&ctx.prov, &[row]))?;
    ctx.write(&format!("{name}.curve.csv"), &io::curve_csv(&ctx.prov, &s.curve))?;
    let k0 = s.fold.kappa0;
    let (lo, hi) = if k0 < 0.0 { (1.5 * k0, -1.5 * k0) } else { (-1.5 * k0, 1.5 * k0) };
    ctx.write(&format!("{name}.model.csv"), &io::model_csv(&ctx.prov, &model_curve(s.fit.0, s.fit.1, lo, hi, 201)))?;
    let mut kap = ctx.prov.header();
    let _ = writeln!(kap, "# kappa = {} + {} * parameter", num(s.kappa_line.0), num(s.kappa_line.1));
    kap.push_str("parameter,kappa\n");
    for (p, k) in &s.kappa_rows {
        let _ = writeln!(kap, "{},{}", num(*p), num(*k));
    }
    ctx.write(&format!("{name}.kappa.csv"), &kap)?;
    println!(
        "{name}: bifurcation {} fold {} kappa0 {} dS0 {} A3 fit {} integral {} A4 {} slope {}",
        num(s.bifurcation.parameter),
        num(s.fold.parameter),
        num(s.fold.kappa0),
        num(s.fold.delta_s0),
        num(s.fit.0),
        num(s.a3_integral),
        num(s.fit.1),
        num(s.kappa_line.1)
    );
    Ok(())
}

/// Fold row from a branch CSV written by `branch`: the turning point is the
/// row flagged `is_fold`.
pub fn fold(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let Some(path) = &c.fold.branch else {
        return Err(usage("fold needs a branch CSV (--branch or fold.branch)"));
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("reading {}: {e}", path.display())))?;
    let (p, k, ds) = fold_from_csv(&text)?;
    let stem = family_stem(path);
    let row = fold_row(&stem, p, f64::NAN, k, ds, c.fold.a3_integral.unwrap_or(f64::NAN))?;
    println!(
        "kappa0 {} dS0 {} A3 {} A4 {} r0 {}",
        num(row.kappa0),
        num(row.delta_s0),
        num(row.a3_fit),
        num(row.a4),
        num(row.r0)
    );
    ctx.write(&format!("{stem}.fold.csv"), &io::fold_csv(&ctx.prov, &[row]))?;
    Ok(())
}

fn family_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().filter(|s| !s.is_empty()).unwrap_or("branch").to_string()
}

/// `(parameter, kappa_ref, dS)` of the fold row.
pub fn fold_from_csv(text: &str) -> Result<(f64, f64, f64)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(io::BRANCH_HEADER) {
        return Err(usage(format!("branch CSV must start with the header '{}'", io::BRANCH_HEADER)));
    }
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 7 {
            return Err(usage(format!("malformed branch row '{l}'")));
        }
        if f[6] == "1" {
            let parse = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("bad number '{s}'")));
            return Ok((parse(f[0])?, parse(f[1])?, parse(f[4])?));
        }
    }
    bail!(Error::NoTurningPoint)
}

pub fn surface(ctx: &Ctx) -> Result<()> {
    let s = &ctx.config.surface;
    let (Some(a3), Some(a4)) = (s.a3, s.a4) else {
        return Err(usage("surface needs --a3 and --a4"));
    };
    let pred = fold_prediction(a3, a4)?;
    let kappa = match (s.kappa, s.kappa_rel) {
        (Some(k), None) => k,
        (None, Some(r)) => r * pred.kappa0,
        (None, None) => return Err(usage("surface needs --kappa or --kappa-rel")),
        (Some(_), Some(_)) => return Err(usage("give only one of --kappa and --kappa-rel")),
    };
    let extent = s.extent.unwrap_or(1.5 * (3.0 * a3 / a4).abs());
    let g = surface_grid(a3, a4, kappa, extent, s.resolution)?;
    println!("kappa {} critical points {}", num(kappa), g.critical.len());
    for c in &g.critical {
        println!("  ({}, {}) {:?} {:?} dS {}", num(c.r1), num(c.r2), c.family, c.morse, num(c.value));
    }
    ctx.write("surface.csv", &io::surface_csv(&ctx.prov, &g))?;
    Ok(())
}

pub fn merge(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let m = lj_merge(c.merge.period, c.modes, c.samples)?;
    println!(
        "S(high) {} S(low) {} merge at T {}",
        num(m.action_high),
        num(m.action_low),
        num(m.merge_period)
    );
    ctx.write_json("merge.json", &m)?;
    Ok(())
}
