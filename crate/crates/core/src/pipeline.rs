//! End-to-end runs for the four studied families: locate the three-fold
//! bifurcation, trace its branch through the fold, and fit the quartic
//! reduced action.

use serde::{Deserialize, Serialize};

use crate::bifurcation::{
    locate_bifurcation, scan_eigenvalue, switch_choreographic_branch, BifurcationPoint, Family, LocateOptions,
    Parameter, ScanOptions, Target,
};
use crate::continuation::{
    a3_at, fit_kappa_linear, guided_family, locate_fold, relative_action_curve, trace_branch, turning_point,
    ArcOptions, Branch, BranchOptions, CurveRow, Fold, Reference,
};
use crate::error::{Error, Result};
use crate::reduction::fit_a3a4;
use crate::seeds::{SeedKind, DEFAULT_MODES, DEFAULT_SAMPLES};
use crate::solver::Space;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Lennard-Jones figure-eight, higher action.
    LjHigh,
    /// Lennard-Jones figure-eight, lower action.
    LjLow,
    /// Choreography branching off the higher-action eight near T = 17.13.
    Cy,
    /// Figure-eight of `u = -1/(a r^a)` at T = 2 pi, varying `a`.
    Homogeneous,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [FamilyKind::LjHigh, FamilyKind::LjLow, FamilyKind::Cy, FamilyKind::Homogeneous];

    pub fn label(self) -> &'static str {
        match self {
            FamilyKind::LjHigh => "lj-high",
            FamilyKind::LjLow => "lj-low",
            FamilyKind::Cy => "cy",
            FamilyKind::Homogeneous => "homogeneous",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Usage(format!("unknown family '{s}' (expected lj-high, lj-low, cy, homogeneous)")))
    }
}

/// Where to look and how far to go for one family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyOptions {
    pub modes: usize,
    pub samples: usize,
    /// Bracket searched for the three-fold crossing.
    pub bracket: (f64, f64),
    /// Half-width and points per side of the initial reference scan.
    pub reference_span: f64,
    pub reference_steps: usize,
    pub branch: BranchOptions,
    /// The linear eigenvalue map is fitted on `|p - p*| <= fraction |p_fold - p*|`.
    pub kappa_fit_fraction: f64,
    pub kappa_fit_steps: usize,
}

impl StudyOptions {
    pub fn for_family(kind: FamilyKind) -> Self {
        let mut branch = BranchOptions::default();
        let (bracket, span) = match kind {
            FamilyKind::LjHigh => ((16.8, 16.95), 0.004),
            FamilyKind::LjLow => ((14.7, 15.0), 0.02),
            FamilyKind::Cy => ((17.2, 17.27), 0.01),
            FamilyKind::Homogeneous => {
                // the fold-side segment is long in loop space
                branch.arc.max_step = 0.1;
                branch.arc.max_points = 1500;
                ((0.98, 1.01), 0.01)
            }
        };
        StudyOptions {
            modes: DEFAULT_MODES,
            samples: DEFAULT_SAMPLES,
            bracket,
            reference_span: span,
            reference_steps: 2,
            branch,
            kappa_fit_fraction: 0.5,
            kappa_fit_steps: 4,
        }
    }
}

/// Point where the C_y choreography leaves the higher-action eight.
#[derive(Clone, Debug)]
pub struct Origin {
    pub parameter: f64,
    pub degeneracy: usize,
}

/// Unbifurcated family of `kind` at resolution `(modes, samples)`. For C_y
/// this also returns the branching point off the higher-action eight.
pub fn build_family(kind: FamilyKind, modes: usize, samples: usize) -> Result<(Family, Option<Origin>)> {
    match kind {
        FamilyKind::LjHigh => Ok((Family::lennard_jones(SeedKind::FigureEightLJHigh, 16.8, modes, samples)?, None)),
        FamilyKind::LjLow => Ok((Family::lennard_jones(SeedKind::FigureEightLJLow, 14.7, modes, samples)?, None)),
        FamilyKind::Homogeneous => Ok((Family::homogeneous_eight(modes, samples)?, None)),
        FamilyKind::Cy => {
            let parent = Family::lennard_jones(SeedKind::FigureEightLJHigh, 17.0, modes, samples)?;
            let cb = locate_bifurcation(&parent, 17.0, 17.3, &Target::choreographic_simple(), &LocateOptions::default())?;
            let switched = switch_choreographic_branch(&parent, &cb, 0.02, 0.05, "cy")?;
            let arc = ArcOptions { step: 0.005, ..ArcOptions::default() };
            let guided = guided_family(&switched, switched.anchor(), 17.14, 17.32, &arc)?;
            Ok((guided, Some(Origin { parameter: cb.parameter, degeneracy: cb.degeneracy })))
        }
    }
}

#[derive(Clone, Debug)]
pub struct Study {
    pub kind: FamilyKind,
    pub origin: Option<Origin>,
    pub bifurcation: BifurcationPoint,
    pub a3_integral: f64,
    pub reference: Reference,
    pub branch: Branch,
    pub fold: Fold,
    /// `(A3, A4)` from the fold's `(kappa0, dS0)`.
    pub fit: (f64, f64),
    /// `kappa = intercept + slope * parameter` near the bifurcation point.
    pub kappa_line: (f64, f64),
    pub kappa_rows: Vec<(f64, f64)>,
    pub curve: Vec<CurveRow>,
}

impl Study {
    /// Reduced-space radius at the fold, `|3 A3 / (2 A4)|`.
    pub fn r0(&self) -> f64 {
        (1.5 * self.fit.0 / self.fit.1).abs()
    }
}

pub fn run_study(kind: FamilyKind, opts: &StudyOptions) -> Result<Study> {
    let (family, origin) = build_family(kind, opts.modes, opts.samples)?;
    let (lo, hi) = opts.bracket;
    let bp = locate_bifurcation(&family, lo, hi, &Target::three_fold(), &LocateOptions::default())?;
    let a3_integral = a3_at(&bp)?;
    let scan = ScanOptions::default();
    let mut reference = Reference::new(&family, &bp, opts.reference_span, opts.reference_steps, &scan)?;
    let branch = trace_branch(&mut reference, &bp, &opts.branch)?;
    let fold = locate_fold(&branch)?;
    let fit = fit_a3a4(fold.kappa0, fold.delta_s0)?;
    let kappa_rows = local_kappa(&family, &bp, opts.kappa_fit_fraction * (fold.parameter - bp.parameter).abs(), opts.kappa_fit_steps, &scan)?;
    let kappa_line = fit_kappa_linear(&kappa_rows)?;
    let curve = relative_action_curve(&branch, fit.0, fit.1, kappa_line);
    Ok(Study { kind, origin, bifurcation: bp, a3_integral, reference, branch, fold, fit, kappa_line, kappa_rows, curve })
}

/// Tracked crossing eigenvalue on `bp.parameter +- half_width`, ascending.
pub fn local_kappa(family: &Family, bp: &BifurcationPoint, half_width: f64, steps: usize, opts: &ScanOptions) -> Result<Vec<(f64, f64)>> {
    if !(half_width > 0.0) || steps == 0 {
        return Err(Error::Usage("eigenvalue fit window must be positive".into()));
    }
    let target = Target { degeneracy: bp.degeneracy, choreographic: None, cubic: false };
    let p = bp.parameter;
    let up = scan_eigenvalue(family, p, p + half_width, steps, &target, Some(&bp.phi), opts)?;
    let down = scan_eigenvalue(family, p, p - half_width, steps, &target, Some(&bp.phi), opts)?;
    let mut rows: Vec<(f64, f64)> = down.iter().rev().map(|s| (s.parameter, s.tracked.value)).collect();
    rows.extend(up.iter().skip(1).map(|s| (s.parameter, s.tracked.value)));
    Ok(rows)
}

/// The two Lennard-Jones eights at one period and the turning point where
/// they join.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Merge {
    pub period: f64,
    pub action_high: f64,
    pub action_low: f64,
    /// Period of the turning point joining the two families.
    pub merge_period: f64,
    /// Distance from the continued path past the turning point to the
    /// higher-action solution at the same period.
    pub rejoin_distance: f64,
}

pub fn lj_merge(period: f64, modes: usize, samples: usize) -> Result<Merge> {
    let high = Family::lennard_jones(SeedKind::FigureEightLJHigh, period, modes, samples)?;
    let low = Family::lennard_jones(SeedKind::FigureEightLJLow, period, modes, samples)?;
    let arc = ArcOptions { step: 0.01, max_step: 0.1, ..ArcOptions::default() };
    // shorter periods lead from the low-action eight toward the junction
    let (fold, path) = turning_point(low.anchor(), Parameter::Period, Space::Choreographic, -1.0, &arc)?;
    let end = path.points.last().expect("nonempty path");
    let twin = high.member_at(end.parameter, None)?;
    Ok(Merge {
        period,
        action_high: high.anchor().action()?,
        action_low: low.anchor().action()?,
        merge_period: fold.parameter,
        rejoin_distance: crate::bifurcation::orbit_distance(&end.orbit, &twin),
    })
}
