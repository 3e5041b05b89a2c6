//! One-parameter families of choreographies, eigenvalue scans along them and
//! location of the parameter where a tracked Hessian eigenvalue crosses zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::Orbit;
use crate::reduction::a3_integrals;
use crate::seeds::{choreography_seed_with, SeedKind};
use crate::solver::{norm, solve_orbit, SolveOptions, Space};
use crate::spectrum::{
    eigen_spectrum_with, track, SpectrumOptions, SpectrumReport, Tracked,
};
use crate::symmetry::{find_symmetries, invariant_directions, symmetry_score, tag_from, SymmetryTag};

/// Quantity varied along a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    Period,
    /// Exponent `a` of the homogeneous potential, period held fixed.
    Exponent,
}

/// A family of periodic orbits solved in a fixed space, represented by one
/// converged member.
#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    pub parameter: Parameter,
    pub solve: SolveOptions,
    /// Largest parameter increment between consecutive solves.
    pub max_step: f64,
    anchor: Orbit,
    /// Members along a precomputed path, ordered by arclength. When present,
    /// members are interpolated from the path instead of stepped from the
    /// anchor, which keeps the family off nearby solution branches.
    guide: Vec<Orbit>,
}

impl Family {
    pub fn from_orbit(name: &str, parameter: Parameter, anchor: Orbit, space: Space, max_step: f64) -> Result<Self> {
        if parameter == Parameter::Exponent && anchor.potential.exponent().is_none() {
            return Err(Error::Usage("an exponent family needs a homogeneous potential".into()));
        }
        Ok(Family { name: name.to_string(), parameter, solve: SolveOptions::in_space(space), max_step, anchor, guide: Vec::new() })
    }

    /// Family defined by a path of converged members (at least two).
    pub fn along(name: &str, parameter: Parameter, space: Space, path: Vec<Orbit>, max_step: f64) -> Result<Self> {
        if path.len() < 2 {
            return Err(Error::Usage("a guided family needs at least two members".into()));
        }
        let mut f = Family::from_orbit(name, parameter, path[0].clone(), space, max_step)?;
        f.guide = path;
        Ok(f)
    }

    pub fn is_guided(&self) -> bool {
        !self.guide.is_empty()
    }

    /// Parameter range covered by the guide path.
    pub fn guide_range(&self) -> Option<(f64, f64)> {
        let ps = self.guide.iter().map(|o| self.parameter_of(o));
        let (lo, hi) = ps.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p), b.max(p)));
        self.is_guided().then_some((lo, hi))
    }

    /// Linear interpolation of the guide at `p` on the nearest segment.
    fn guide_guess(&self, p: f64) -> Result<Orbit> {
        let ps: Vec<f64> = self.guide.iter().map(|o| self.parameter_of(o)).collect();
        let mut best: Option<(f64, usize)> = None;
        for k in 0..ps.len() - 1 {
            let (a, b) = (ps[k], ps[k + 1]);
            let gap = if (p - a) * (p - b) <= 0.0 { 0.0 } else { (p - a).abs().min((p - b).abs()) };
            if best.map_or(true, |(g, _)| gap < g) {
                best = Some((gap, k));
            }
        }
        let k = best.unwrap().1;
        let (a, b) = (&self.guide[k], &self.guide[k + 1]);
        let f = if ps[k + 1] != ps[k] { (p - ps[k]) / (ps[k + 1] - ps[k]) } else { 0.0 };
        let c: Vec<f64> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + f * (y - x)).collect();
        self.reparametrize(&a.with_coeffs(c)?, p)
    }

    /// Lennard-Jones figure-eight family through the solution of `kind` at `period`.
    pub fn lennard_jones(kind: SeedKind, period: f64, modes: usize, samples: usize) -> Result<Self> {
        let seed = choreography_seed_with(kind, period, modes, samples)?;
        let name = match kind {
            SeedKind::FigureEightLJHigh => "lj-high",
            SeedKind::FigureEightLJLow => "lj-low",
            SeedKind::FigureEightNewtonian => {
                return Err(Error::Usage("the Newtonian seed belongs to the exponent family".into()))
            }
        };
        let anchor = solve_converged(&seed, &SolveOptions::default())?;
        Family::from_orbit(name, Parameter::Period, anchor, Space::Choreographic, 0.25)
    }

    /// Figure-eight under `u = -1/(a r^a)` at `T = 2 pi`, starting from `a = 1`.
    pub fn homogeneous_eight(modes: usize, samples: usize) -> Result<Self> {
        let seed = choreography_seed_with(SeedKind::FigureEightNewtonian, 2.0 * std::f64::consts::PI, modes, samples)?;
        let anchor = solve_converged(&seed, &SolveOptions::default())?;
        Family::from_orbit("homogeneous", Parameter::Exponent, anchor, Space::Choreographic, 0.02)
    }

    pub fn anchor(&self) -> &Orbit {
        &self.anchor
    }

    pub fn parameter_of(&self, o: &Orbit) -> f64 {
        parameter_value(self.parameter, o)
    }

    /// Same coefficients, parameter set to `p`.
    pub fn reparametrize(&self, o: &Orbit, p: f64) -> Result<Orbit> {
        set_parameter(self.parameter, o, p)
    }

    /// One solve at `p` starting from `guess`.
    pub fn solve_near(&self, guess: &Orbit, p: f64) -> Result<Orbit> {
        solve_converged(&self.reparametrize(guess, p)?, &self.solve)
    }

    /// Member at `p`, reached from `start` (default: the anchor) by steps no
    /// larger than `max_step` with secant prediction.
    ///
    /// A guided family ignores `start` and solves from its path.
    pub fn member_at(&self, p: f64, start: Option<&Orbit>) -> Result<Orbit> {
        if self.is_guided() {
            return solve_converged(&self.guide_guess(p)?, &self.solve);
        }
        let mut cur = start.unwrap_or(&self.anchor).clone();
        let mut prev: Option<Orbit> = None;
        let mut p0 = self.parameter_of(&cur);
        let mut step = self.max_step;
        while (p - p0).abs() > 0.0 {
            let dp = (p - p0).clamp(-step, step);
            let target = p0 + dp;
            let guess = match &prev {
                Some(pr) => {
                    let pp = self.parameter_of(pr);
                    let f = dp / (p0 - pp);
                    if f.is_finite() && f.abs() <= 2.0 {
                        let c: Vec<f64> =
                            cur.coeffs().iter().zip(pr.coeffs()).map(|(a, b)| a + f * (a - b)).collect();
                        cur.with_coeffs(c)?
                    } else {
                        cur.clone()
                    }
                }
                None => cur.clone(),
            };
            match self.solve_near(&guess, target) {
                Ok(o) => {
                    prev = Some(cur);
                    cur = o;
                    p0 = target;
                    step = (step * 1.5).min(self.max_step);
                }
                Err(e) => {
                    step *= 0.5;
                    if step < 1e-6 * self.max_step {
                        return Err(e);
                    }
                }
            }
        }
        Ok(cur)
    }
}

pub(crate) fn parameter_value(parameter: Parameter, o: &Orbit) -> f64 {
    match parameter {
        Parameter::Period => o.period,
        Parameter::Exponent => o.potential.exponent().unwrap_or(f64::NAN),
    }
}

pub(crate) fn set_parameter(parameter: Parameter, o: &Orbit, p: f64) -> Result<Orbit> {
    match parameter {
        Parameter::Period => o.with_period(p),
        Parameter::Exponent => o.with_potential(o.potential.with_exponent(p)?),
    }
}

pub(crate) fn solve_converged(seed: &Orbit, opts: &SolveOptions) -> Result<Orbit> {
    let r = solve_orbit(seed, opts)?;
    if r.converged {
        Ok(r.orbit)
    } else {
        Err(Error::NoConvergence(format!(
            "residual {:.3e} after {} iterations{}",
            r.residual_norm,
            r.iterations,
            r.message.map(|m| format!(" ({m})")).unwrap_or_default()
        )))
    }
}

/// Which eigenvalue to follow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Size of the eigenspace.
    pub degeneracy: usize,
    /// Require (true) or exclude (false) choreographic eigenvectors.
    pub choreographic: Option<bool>,
    /// Require a cubic form `int (phi d)^3 L dt` on the eigenspace that does
    /// not vanish identically (pairs only).
    pub cubic: bool,
}

impl Target {
    /// Doubly degenerate, symmetry-breaking eigenvalue.
    pub fn three_fold() -> Self {
        Target { degeneracy: 2, choreographic: Some(false), cubic: true }
    }

    /// Simple eigenvalue inside the choreographic subspace.
    pub fn choreographic_simple() -> Self {
        Target { degeneracy: 1, choreographic: Some(true), cubic: false }
    }
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// Eigenpairs computed per point.
    pub count: usize,
    pub spectrum: SpectrumOptions,
    /// Tracking is lost below this overlap.
    pub min_overlap: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { count: 40, spectrum: SpectrumOptions::default(), min_overlap: 0.5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanRow {
    pub parameter: f64,
    pub kappa: f64,
    pub degeneracy: usize,
    pub overlap: f64,
}

/// Candidate eigenspaces matching `target`, nearest to zero first.
pub fn candidates(report: &SpectrumReport, target: &Target) -> Vec<Tracked> {
    let mut out: Vec<Tracked> = Vec::new();
    for g in 0..report.groups.len() {
        let idx = &report.groups[g];
        if idx.len() != target.degeneracy {
            continue;
        }
        if let Some(ch) = target.choreographic {
            let c = idx.iter().map(|&i| report.pairs[i].choreographic).sum::<f64>() / idx.len() as f64;
            if (c > 0.5) != ch {
                continue;
            }
        }
        let values: Vec<f64> = idx.iter().map(|&i| report.pairs[i].value).collect();
        out.push(Tracked {
            value: report.group_value(g),
            values,
            vectors: report.group_vectors(g),
            overlap: 1.0,
            degeneracy: idx.len(),
        });
    }
    out.sort_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
    out
}

/// One point of a scan: member, spectrum and tracked eigenspace.
#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub parameter: f64,
    pub orbit: Orbit,
    pub tracked: Tracked,
}

fn spectrum(o: &Orbit, opts: &ScanOptions) -> Result<SpectrumReport> {
    eigen_spectrum_with(o, opts.count, &opts.spectrum)
}

/// Follow `previous` from the orbit at one parameter to a solved member.
fn track_at(orbit: &Orbit, previous: &[Vec<f64>], opts: &ScanOptions) -> Result<Tracked> {
    let rep = spectrum(orbit, opts)?;
    Ok(track(&rep, previous, opts.spectrum.degeneracy_tol))
}

/// Tracked eigenvalue at `steps + 1` evenly spaced parameters from `from`
/// to `to`. The followed eigenspace starts as the `target` candidate
/// nearest to zero at `from`, or `initial` when given.
pub fn scan_eigenvalue(
    family: &Family,
    from: f64,
    to: f64,
    steps: usize,
    target: &Target,
    initial: Option<&[Vec<f64>]>,
    opts: &ScanOptions,
) -> Result<Vec<ScanPoint>> {
    if steps == 0 {
        return Err(Error::Usage("a scan needs at least one step".into()));
    }
    let mut orbit = family.member_at(from, None)?;
    let rep = spectrum(&orbit, opts)?;
    let first = match initial {
        Some(v) => track(&rep, v, opts.spectrum.degeneracy_tol),
        None => candidates(&rep, target)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Eigen(format!("no eigenvalue of degeneracy {} at {from}", target.degeneracy)))?,
    };
    let mut out = vec![ScanPoint { parameter: from, orbit: orbit.clone(), tracked: first }];
    for i in 1..=steps {
        let p = from + (to - from) * i as f64 / steps as f64;
        orbit = family.member_at(p, Some(&orbit))?;
        let prev = &out.last().unwrap().tracked.vectors;
        let t = track_at(&orbit, prev, opts)?;
        if t.overlap < opts.min_overlap {
            return Err(Error::TrackingLost { step: i, parameter: p, overlap: t.overlap });
        }
        out.push(ScanPoint { parameter: p, orbit: orbit.clone(), tracked: t });
    }
    Ok(out)
}

pub fn scan_rows(points: &[ScanPoint]) -> Vec<ScanRow> {
    points
        .iter()
        .map(|p| ScanRow {
            parameter: p.parameter,
            kappa: p.tracked.value,
            degeneracy: p.tracked.degeneracy,
            overlap: p.tracked.overlap,
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BifurcationPoint {
    pub parameter_kind: Parameter,
    pub parameter: f64,
    pub orbit: Orbit,
    /// Mean of the crossing eigenvalues.
    pub kappa: f64,
    pub kappas: Vec<f64>,
    /// Orthonormal basis of the crossing eigenspace, orthonormal coefficients.
    pub phi: Vec<Vec<f64>>,
    pub degeneracy: usize,
    pub tag: SymmetryTag,
}

#[derive(Clone, Debug)]
pub struct LocateOptions {
    pub scan: ScanOptions,
    /// Stop when the tracked eigenvalue is this small.
    pub kappa_tol: f64,
    pub max_iterations: usize,
    /// Sub-steps used to follow each candidate across the bracket.
    pub bracket_steps: usize,
    /// Number of candidates followed across the bracket.
    pub max_candidates: usize,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions { scan: ScanOptions::default(), kappa_tol: 1e-8, max_iterations: 40, bracket_steps: 4, max_candidates: 3 }
    }
}

/// Parameter in `[lo, hi]` where a `target` eigenvalue crosses zero.
pub fn locate_bifurcation(
    family: &Family,
    lo: f64,
    hi: f64,
    target: &Target,
    opts: &LocateOptions,
) -> Result<BifurcationPoint> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let start = family.member_at(lo, None)?;
    let rep = spectrum(&start, &opts.scan)?;
    let cands = candidates(&rep, target);
    // follow each candidate across the bracket and keep one that changes sign
    let mut chosen: Option<Vec<ScanPoint>> = None;
    let mut tried = 0;
    for c in cands {
        if tried == opts.max_candidates {
            break;
        }
        if target.cubic && c.vectors.len() == 2 && cubic_norm(&start, &c.vectors)? < 1e-6 {
            continue;
        }
        tried += 1;
        let mut pts = vec![ScanPoint { parameter: lo, orbit: start.clone(), tracked: c }];
        let mut ok = true;
        for i in 1..=opts.bracket_steps {
            let p = lo + (hi - lo) * i as f64 / opts.bracket_steps as f64;
            let o = match family.member_at(p, Some(&pts.last().unwrap().orbit)) {
                Ok(o) => o,
                Err(e) => return Err(e),
            };
            let t = track_at(&o, &pts.last().unwrap().tracked.vectors, &opts.scan)?;
            if t.overlap < opts.scan.min_overlap {
                ok = false;
                break;
            }
            pts.push(ScanPoint { parameter: p, orbit: o, tracked: t });
        }
        if ok && pts.windows(2).any(|w| w[0].tracked.value * w[1].tracked.value <= 0.0) {
            chosen = Some(pts);
            break;
        }
    }
    let pts = chosen.ok_or(Error::NoSignChange { lo, hi })?;
    let k = pts.windows(2).position(|w| w[0].tracked.value * w[1].tracked.value <= 0.0).unwrap();
    let (mut a, mut b) = (pts[k].clone(), pts[k + 1].clone());
    let mut best = if a.tracked.value.abs() < b.tracked.value.abs() { a.clone() } else { b.clone() };
    // Illinois-modified regula falsi
    let (mut fa_w, mut fb_w) = (a.tracked.value, b.tracked.value);
    let mut side = 0i32;
    for _ in 0..opts.max_iterations {
        if best.tracked.value.abs() < opts.kappa_tol || (b.parameter - a.parameter).abs() < 1e-13 {
            break;
        }
        let mut p = (a.parameter * fb_w - b.parameter * fa_w) / (fb_w - fa_w);
        let width = b.parameter - a.parameter;
        if !p.is_finite() || (p - a.parameter) / width < 1e-3 || (b.parameter - p) / width < 1e-3 {
            p = 0.5 * (a.parameter + b.parameter);
        }
        let near = if (p - a.parameter).abs() < (b.parameter - p).abs() { &a } else { &b };
        let o = family.member_at(p, Some(&near.orbit))?;
        let t = track_at(&o, &near.tracked.vectors, &opts.scan)?;
        if t.overlap < opts.scan.min_overlap {
            return Err(Error::TrackingLost { step: 0, parameter: p, overlap: t.overlap });
        }
        let pt = ScanPoint { parameter: p, orbit: o, tracked: t };
        if pt.tracked.value.abs() < best.tracked.value.abs() {
            best = pt.clone();
        }
        if pt.tracked.value * a.tracked.value > 0.0 {
            a = pt;
            fa_w = a.tracked.value;
            if side == -1 {
                fb_w *= 0.5;
            }
            side = -1;
        } else {
            b = pt;
            fb_w = b.tracked.value;
            if side == 1 {
                fa_w *= 0.5;
            }
            side = 1;
        }
    }
    let tag = tag_from(&find_symmetries(&best.orbit, 1e-6));
    let phi = orthonormalize(&best.tracked.vectors);
    Ok(BifurcationPoint {
        parameter_kind: family.parameter,
        parameter: best.parameter,
        orbit: best.orbit,
        kappa: best.tracked.value,
        kappas: best.tracked.values,
        phi,
        degeneracy: best.tracked.degeneracy,
        tag,
    })
}

/// Size of the cubic form on a pair: all four coefficients
/// `int (phi_a d)(phi_b d)(phi_c d) L dt`.
pub fn cubic_norm(o: &Orbit, pair: &[Vec<f64>]) -> Result<f64> {
    let (f222, f122x3) = a3_integrals(o, &pair[0], &pair[1])?;
    let (f111, f211x3) = a3_integrals(o, &pair[1], &pair[0])?;
    Ok((f111 * f111 + f222 * f222 + (f122x3 / 3.0).powi(2) + (f211x3 / 3.0).powi(2)).sqrt())
}

fn orthonormalize(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut u = v.clone();
        for _ in 0..2 {
            for o in &out {
                let d: f64 = u.iter().zip(o).map(|(a, b)| a * b).sum();
                u.iter_mut().zip(o).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = norm(&u);
        u.iter_mut().for_each(|x| *x /= n);
        out.push(u);
    }
    out
}

#[derive(Clone, Debug)]
pub struct Phi2Selection {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub tag: SymmetryTag,
    /// No symmetry singles out a direction; any orthonormal pair is valid.
    pub gauge_free: bool,
    pub score1: f64,
    pub score2: f64,
}

/// Rotate the degenerate pair so that `phi2` is the most symmetric
/// direction: invariant under a reflection-type symmetry of the orbit.
/// Among several such directions the one with the largest cubic coefficient
/// is taken, and its sign is fixed so that `int (phi2 d)^3 L dt <= 0`
/// (`phi1` then lies on a zero of the cubic form).
pub fn select_phi2(bp: &BifurcationPoint) -> Result<Phi2Selection> {
    if bp.phi.len() != 2 {
        return Err(Error::Usage(format!("phi2 selection needs a pair, got {} vectors", bp.phi.len())));
    }
    let o = &bp.orbit;
    let m = o.modes();
    let elements = find_symmetries(o, 1e-6);
    let pair = [bp.phi[0].clone(), bp.phi[1].clone()];
    let combine = |c: f64, s: f64| -> Vec<f64> { pair[0].iter().zip(&pair[1]).map(|(a, b)| c * a + s * b).collect() };
    let dirs = if bp.tag == SymmetryTag::D3 { invariant_directions(&elements, &pair, m) } else { Vec::new() };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for d in dirs {
        let phi2 = combine(d[0], d[1]);
        let phi1 = combine(d[1], -d[0]);
        let (f, _) = a3_integrals(o, &phi1, &phi2)?;
        if best.as_ref().map_or(true, |b| f.abs() > b.0.abs() + 1e-12) {
            let (phi1, phi2) =
                if f > 0.0 { (phi1.iter().map(|v| -v).collect(), phi2.iter().map(|v| -v).collect()) } else { (phi1, phi2) };
            best = Some((f, phi1, phi2));
        }
    }
    let (phi1, phi2, gauge_free) = match best {
        Some((_, p1, p2)) => (p1, p2, false),
        None => (pair[0].clone(), pair[1].clone(), true),
    };
    let score1 = symmetry_score(&phi1, &elements, m);
    let score2 = symmetry_score(&phi2, &elements, m);
    Ok(Phi2Selection { phi1, phi2, tag: bp.tag, gauge_free, score1, score2 })
}

/// Switch from `family` to the choreographic branch born where a simple
/// choreographic eigenvalue crosses zero at `bp`. Tries both parameter
/// sides and both signs of the eigenvector, rejecting solutions that fall
/// back onto the parent family.
pub fn switch_choreographic_branch(family: &Family, bp: &BifurcationPoint, offset: f64, h: f64, name: &str) -> Result<Family> {
    let phi = bp.phi.first().ok_or_else(|| Error::Usage("bifurcation point without eigenvector".into()))?;
    let o = &bp.orbit;
    let plain = crate::hessian::to_plain(phi, o.period, o.modes());
    let mut last_err = None;
    for dp in [offset, -offset] {
        let p = bp.parameter + dp;
        let parent = family.member_at(p, Some(o))?;
        for sign in [1.0, -1.0] {
            let c: Vec<f64> = o.coeffs().iter().zip(&plain).map(|(a, b)| a + sign * h * b).collect();
            let seed = family.reparametrize(&o.with_coeffs(c)?, p)?;
            match solve_converged(&seed, &family.solve) {
                Ok(sol) => {
                    let dist = orbit_distance(&sol, &parent);
                    if dist > 0.1 * h {
                        return Family::from_orbit(name, family.parameter, sol, family.solve.space, family.max_step);
                    }
                    last_err = Some(Error::NoConvergence(format!("seed at {p} collapsed onto the parent (distance {dist:.2e})")));
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("branch switch failed".into())))
}

/// L2 distance `sqrt(int |q_a - q_b|^2 dt)` between orbits of equal layout.
pub fn orbit_distance(a: &Orbit, b: &Orbit) -> f64 {
    let d: Vec<f64> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
    norm(&crate::hessian::to_orthonormal(&d, a.period, a.modes()))
}

/// Rotate an orthonormal pair by `angle` inside its span.
pub fn rotate_pair(pair: &[Vec<f64>], angle: f64) -> [Vec<f64>; 2] {
    let (s, c) = angle.sin_cos();
    let a: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(x, y)| c * x + s * y).collect();
    let b: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(x, y)| -s * x + c * y).collect();
    [a, b]
}
