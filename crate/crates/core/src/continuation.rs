//! Pseudo-arclength continuation in (orbit coefficients, parameter), fold
//! localization, and branches of bifurcated solutions measured against the
//! unbifurcated family.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::bifurcation::{
    orbit_distance, parameter_value, scan_eigenvalue, select_phi2, set_parameter, solve_converged, BifurcationPoint,
    Family, Parameter, ScanOptions, ScanPoint, Target,
};
use crate::error::{Error, Result};
use crate::hessian::{action_hessian, orthonormal_scale, to_plain};
use crate::orbit::{Grid, Orbit};
use crate::reduction::{a3_coefficient, a3_integrals};
use crate::solver::{dot, evaluate, Reduction, SolveOptions, Space};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcOptions {
    /// Initial arclength step.
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    /// Arclength after which stepping stops.
    pub budget: f64,
    /// Weight of the parameter against the orbit L2 norm in the metric.
    pub parameter_weight: f64,
    pub tolerance: f64,
    pub max_corrector: usize,
    pub min_separation: f64,
}

impl Default for ArcOptions {
    fn default() -> Self {
        ArcOptions {
            step: 1e-3,
            min_step: 1e-8,
            max_step: 0.02,
            max_points: 400,
            budget: 1e3,
            parameter_weight: 1.0,
            tolerance: 1e-10,
            max_corrector: 15,
            min_separation: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ArcPoint {
    pub parameter: f64,
    pub orbit: Orbit,
    /// Arclength from the start.
    pub s: f64,
    /// Parameter component of the unit tangent.
    pub dp_ds: f64,
    tangent: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stop {
    Budget,
    MaxPoints,
    /// The caller's stop predicate fired.
    Requested,
    StepUnderflow(String),
}

#[derive(Clone, Debug)]
pub struct Arc {
    pub points: Vec<ArcPoint>,
    /// Indices of refined turning points (`dp_ds` = 0).
    pub folds: Vec<usize>,
    pub stop: Stop,
}

struct Ctx<'a> {
    red: Reduction,
    parameter: Parameter,
    grid: Grid,
    opts: &'a ArcOptions,
    template: Orbit,
}

struct State {
    u: Vec<f64>,
    p: f64,
    orbit: Orbit,
    f: Vec<f64>,
    residual: f64,
}

impl Ctx<'_> {
    fn state(&self, u: Vec<f64>, p: f64) -> Result<State> {
        let t = set_parameter(self.parameter, &self.template, p)?;
        let e = evaluate(&t, self.red.expand(&u), &self.grid, self.opts.min_separation)?;
        let f = self.red.restrict(&e.grad);
        Ok(State { u, p, orbit: e.orbit, f, residual: e.residual })
    }

    /// Diagonal of the L2 metric on reduced unknowns.
    fn metric(&self, period: f64) -> Vec<f64> {
        let s = orthonormal_scale(period, self.red.modes);
        let w = s.len();
        let mut m = vec![0.0; self.red.n];
        for &(r, k, v) in &self.red.entries {
            m[k] += v * v * s[r % w] * s[r % w];
        }
        m
    }

    fn inner(&self, wm: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let n = self.red.n;
        let pw = self.opts.parameter_weight;
        (0..n).map(|i| wm[i] * a[i] * b[i]).sum::<f64>() + pw * pw * a[n] * b[n]
    }

    fn f_p(&self, st: &State) -> Result<Vec<f64>> {
        let h = 1e-6 * st.p.abs().max(1.0);
        let a = self.state(st.u.clone(), st.p + h)?;
        let b = self.state(st.u.clone(), st.p - h)?;
        Ok(a.f.iter().zip(&b.f).map(|(x, y)| (x - y) / (2.0 * h)).collect())
    }

    fn jacobian(&self, st: &State) -> Result<DMatrix<f64>> {
        Ok(self.red.reduce_matrix(&action_hessian(&st.orbit, &self.red.coords, &self.grid)?))
    }

    /// Bordered matrix `[[J, Fp, G], [a^T, 0], [G^T, 0, 0]]` where `a` is a
    /// weighted row over (u, p).
    fn bordered(&self, j: &DMatrix<f64>, fp: &[f64], gauge: &[Vec<f64>], row: &[f64]) -> LU<f64, Dyn, Dyn> {
        let n = self.red.n;
        let g = gauge.len();
        let dim = n + 1 + g;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        m.view_mut((0, 0), (n, n)).copy_from(j);
        for i in 0..n {
            m[(i, n)] = fp[i];
        }
        for (c, v) in row.iter().enumerate() {
            m[(n, c)] = *v;
        }
        for (k, v) in gauge.iter().enumerate() {
            for i in 0..n {
                m[(i, n + 1 + k)] = v[i];
                m[(n + 1 + k, i)] = v[i];
            }
        }
        m.lu()
    }

    /// Solve against [`Ctx::bordered`] for right-hand side `[r; rs; rg]`,
    /// returning the (u, p) part.
    fn solve(&self, lu: &LU<f64, Dyn, Dyn>, r: &[f64], rs: f64, rg: &[f64]) -> Option<Vec<f64>> {
        let n = self.red.n;
        let mut b = DVector::<f64>::zeros(n + 1 + rg.len());
        b.rows_mut(0, n).copy_from_slice(r);
        b[n] = rs;
        b.rows_mut(n + 1, rg.len()).copy_from_slice(rg);
        let x = lu.solve(&b)?;
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(x.rows(0, n + 1).iter().copied().collect())
    }

    fn weighted_row(&self, wm: &[f64], t: &[f64]) -> Vec<f64> {
        let n = self.red.n;
        let pw = self.opts.parameter_weight;
        let mut row: Vec<f64> = (0..n).map(|i| wm[i] * t[i]).collect();
        row.push(pw * pw * t[n]);
        row
    }

    /// Unit tangent at `st`, oriented along `prev`.
    fn tangent(&self, st: &State, prev: &[f64]) -> Result<Vec<f64>> {
        let n = self.red.n;
        let j = self.jacobian(st)?;
        let fp = self.f_p(st)?;
        let gauge = self.red.gauge(&st.orbit);
        let wm = self.metric(st.orbit.period);
        let row = self.weighted_row(&wm, prev);
        let lu = self.bordered(&j, &fp, &gauge, &row);
        let mut t = self
            .solve(&lu, &vec![0.0; n], 1.0, &vec![0.0; gauge.len()])
            .ok_or_else(|| Error::Eigen("singular tangent system".into()))?;
        let nrm = self.inner(&wm, &t, &t).sqrt();
        t.iter_mut().for_each(|v| *v /= nrm);
        Ok(t)
    }

    /// Chord-Newton corrector on the hyperplane `<t, x - base> = ds`, with
    /// the Jacobian frozen at the predicted point.
    fn correct(&self, base: &State, t: &[f64], ds: f64) -> Result<(State, usize)> {
        let n = self.red.n;
        let wm = self.metric(base.orbit.period);
        let gauge = self.red.gauge(&base.orbit);
        let row = self.weighted_row(&wm, t);
        let x0: Vec<f64> = base.u.iter().copied().chain(std::iter::once(base.p)).collect();
        let mut x: Vec<f64> = x0.iter().zip(t).map(|(a, b)| a + ds * b).collect();
        let pred_u = x[..n].to_vec();
        let mut st = self.state(x[..n].to_vec(), x[n])?;
        let lu = self.bordered(&self.jacobian(&st)?, &self.f_p(&st)?, &gauge, &row);
        let mut prev = f64::INFINITY;
        for it in 0..self.opts.max_corrector {
            let diff: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
            let arc = self.inner(&wm, t, &diff) - ds;
            if st.residual < self.opts.tolerance && it > 0 {
                return Ok((st, it));
            }
            if it > 1 && !(st.residual < 0.5 * prev) {
                // roundoff floor just above the tolerance
                if st.residual < 10.0 * self.opts.tolerance {
                    return Ok((st, it));
                }
                return Err(Error::NoConvergence(format!("corrector stalled at residual {:.2e}", st.residual)));
            }
            prev = st.residual;
            let r: Vec<f64> = st.f.iter().map(|v| -v).collect();
            let du: Vec<f64> = st.u.iter().zip(&pred_u).map(|(a, b)| a - b).collect();
            let rg: Vec<f64> = gauge.iter().map(|g| -dot(g, &du)).collect();
            let d = self.solve(&lu, &r, -arc, &rg).ok_or_else(|| Error::NoConvergence("singular corrector system".into()))?;
            x.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
            st = self.state(x[..n].to_vec(), x[n])?;
        }
        if st.residual < self.opts.tolerance {
            Ok((st, self.opts.max_corrector))
        } else {
            Err(Error::NoConvergence(format!("corrector residual {:.2e}", st.residual)))
        }
    }
}

fn full(t: &[f64]) -> f64 {
    *t.last().unwrap()
}

fn point(st: &State, s: f64, tangent: Vec<f64>) -> ArcPoint {
    ArcPoint { parameter: st.p, orbit: st.orbit.clone(), s, dp_ds: full(&tangent), tangent }
}

/// Follow the solution curve through the converged orbit `start` in
/// `space`, initially moving the parameter in the direction of
/// `direction`'s sign. Turning points are refined and inserted as points
/// with `dp_ds = 0`. `stop` is asked after every accepted point.
pub fn arclength(
    start: &Orbit,
    parameter: Parameter,
    space: Space,
    direction: f64,
    opts: &ArcOptions,
    stop: impl FnMut(&ArcPoint) -> bool,
) -> Result<Arc> {
    arclength_from(start, None, parameter, space, direction, opts, stop)
}

/// [`arclength`] with an optional initial tangent orientation.
fn arclength_from(
    start: &Orbit,
    initial: Option<&[f64]>,
    parameter: Parameter,
    space: Space,
    direction: f64,
    opts: &ArcOptions,
    mut stop: impl FnMut(&ArcPoint) -> bool,
) -> Result<Arc> {
    if !(opts.step > 0.0 && opts.min_step > 0.0 && opts.max_step >= opts.step) {
        return Err(Error::Usage("arclength steps must satisfy 0 < min_step, 0 < step <= max_step".into()));
    }
    let red = Reduction::new(space, start.modes());
    let ctx = Ctx { grid: start.grid(), red, parameter, opts, template: start.clone() };
    let n = ctx.red.n;
    let u0 = ctx.red.project(start.coeffs());
    let mut cur = ctx.state(u0, parameter_value(parameter, start))?;
    if !(cur.residual < 10.0 * opts.tolerance) {
        return Err(Error::Usage(format!("continuation start is not converged (residual {:.2e})", cur.residual)));
    }
    let mut e = vec![0.0; n + 1];
    e[n] = direction.signum();
    let mut t = ctx.tangent(&cur, initial.filter(|v| v.len() == n + 1).unwrap_or(&e))?;
    let mut points = vec![point(&cur, 0.0, t.clone())];
    let mut folds = Vec::new();
    let mut ds = opts.step;
    let mut s = 0.0;
    let stop_reason = loop {
        if points.len() >= opts.max_points {
            break Stop::MaxPoints;
        }
        if s >= opts.budget {
            break Stop::Budget;
        }
        let attempt = ctx.correct(&cur, &t, ds).and_then(|(st, its)| {
            let tn = ctx.tangent(&st, &t)?;
            Ok((st, its, tn))
        });
        let accepted = match attempt {
            Ok((st, its, tn)) => {
                let wm = ctx.metric(cur.orbit.period);
                let cos = ctx.inner(&wm, &t, &tn);
                let jump = orbit_distance(&st.orbit, &cur.orbit);
                if cos > 0.8 && jump <= 2.0 * ds {
                    Some((st, its, tn))
                } else {
                    None
                }
            }
            Err(_) => None,
        };
        let Some((st, its, tn)) = accepted else {
            ds *= 0.5;
            if ds < opts.min_step {
                break Stop::StepUnderflow(format!("step below {:.1e} at parameter {:.10}", opts.min_step, cur.p));
            }
            continue;
        };
        let turned = full(&t) * full(&tn) < 0.0;
        if turned {
            if let Ok((fst, ft, fs)) = refine_fold(&ctx, &cur, &t, &tn, ds) {
                folds.push(points.len());
                points.push(point(&fst, s + fs, ft));
            }
        }
        s += ds;
        points.push(point(&st, s, tn.clone()));
        cur = st;
        t = tn;
        if its <= 2 {
            ds = (ds * 1.5).min(opts.max_step);
        } else if its >= 5 {
            ds *= 0.6;
        }
        if stop(points.last().unwrap()) {
            break Stop::Requested;
        }
    };
    Ok(Arc { points, folds, stop: stop_reason })
}

/// First turning point of the family through `start` in the given
/// direction: returns the refined fold point and the path up to one step
/// beyond it.
pub fn turning_point(start: &Orbit, parameter: Parameter, space: Space, direction: f64, opts: &ArcOptions) -> Result<(ArcPoint, Arc)> {
    let mut turned = false;
    let arc = arclength(start, parameter, space, direction, opts, |pt| {
        turned |= pt.dp_ds * direction < 0.0;
        turned
    })?;
    match arc.folds.first() {
        Some(&i) => Ok((arc.points[i].clone(), arc)),
        None => Err(Error::NoTurningPoint),
    }
}

/// Secant iteration on `dp_ds` between two points bracketing a turning point.
fn refine_fold(ctx: &Ctx, a: &State, ta: &[f64], tb: &[f64], ds: f64) -> Result<(State, Vec<f64>, f64)> {
    let (mut sa, mut fa) = (0.0, full(ta));
    let (mut sb, mut fb) = (ds, full(tb));
    let mut best: Option<(State, Vec<f64>, f64)> = None;
    for _ in 0..30 {
        let sm = sa - fa * (sb - sa) / (fb - fa);
        let sm = if sm.is_finite() && sm > sa && sm < sb { sm } else { 0.5 * (sa + sb) };
        let (st, _) = ctx.correct(a, ta, sm)?;
        let tm = ctx.tangent(&st, ta)?;
        let fm = full(&tm);
        let done = fm.abs() < 1e-9 || (sb - sa) < 1e-12;
        if fm * fa > 0.0 {
            sa = sm;
            fa = fm;
        } else {
            sb = sm;
            fb = fm;
        }
        if best.as_ref().map_or(true, |x| fm.abs() < full(&x.1).abs()) {
            best = Some((st, tm, sm));
        }
        if done {
            break;
        }
    }
    best.ok_or_else(|| Error::NoTurningPoint)
}

/// Family through `start` whose members are interpolated from a
/// pseudo-arclength path covering `[lo, hi]`.
pub fn guided_family(family: &Family, start: &Orbit, lo: f64, hi: f64, opts: &ArcOptions) -> Result<Family> {
    let inside = |p: f64| p >= lo && p <= hi;
    let run = |dir: f64| {
        arclength(start, family.parameter, family.solve.space, dir, opts, |pt| !inside(pt.parameter))
    };
    let up = run(1.0)?;
    let down = run(-1.0)?;
    let mut path: Vec<Orbit> = down.points.iter().rev().map(|p| p.orbit.clone()).collect();
    path.extend(up.points.iter().skip(1).map(|p| p.orbit.clone()));
    let ps: Vec<f64> = path.iter().map(|o| family.parameter_of(o)).collect();
    let (a, b) = ps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(x, y), &p| (x.min(p), y.max(p)));
    if a > lo || b < hi {
        return Err(Error::StepUnderflow { parameter: if a > lo { a } else { b } });
    }
    let mut f = Family::along(&family.name, family.parameter, family.solve.space, path, family.max_step)?;
    f.solve = family.solve.clone();
    Ok(f)
}

/// Segment of a bifurcated branch: `FoldSide` carries `dS_+` and ends at
/// the fold, `TowardQ` carries `dS_-` and runs back into the unbifurcated
/// orbit at the bifurcation parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    TowardQ,
    FoldSide,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::TowardQ => "toward_q",
            Side::FoldSide => "fold_side",
        }
    }
}

/// The unbifurcated family near a bifurcation point, with the crossing
/// eigenvalue tracked along it.
#[derive(Clone, Debug)]
pub struct Reference {
    pub family: Family,
    pub bifurcation: f64,
    scan: Vec<ScanPoint>,
    opts: ScanOptions,
}

impl Reference {
    /// Track the crossing eigenspace of `bp` over `bp.parameter +- span`
    /// with `steps` points per side.
    pub fn new(family: &Family, bp: &BifurcationPoint, span: f64, steps: usize, opts: &ScanOptions) -> Result<Self> {
        if !(span > 0.0) || steps == 0 {
            return Err(Error::Usage("reference scan needs a positive span and at least one step".into()));
        }
        let p = bp.parameter;
        let target = Target { degeneracy: bp.degeneracy, choreographic: None, cubic: false };
        let up = scan_eigenvalue(family, p, p + span, steps, &target, Some(&bp.phi), opts)?;
        let down = scan_eigenvalue(family, p, p - span, steps, &target, Some(&bp.phi), opts)?;
        let mut scan: Vec<ScanPoint> = down.into_iter().rev().collect();
        scan.extend(up.into_iter().skip(1));
        Ok(Reference { family: family.clone(), bifurcation: p, scan, opts: opts.clone() })
    }

    /// Extend the tracked scan so it covers `[lo, hi]`, stepping by at most
    /// the current end spacing.
    pub fn cover(&mut self, lo: f64, hi: f64) -> Result<()> {
        let target = Target { degeneracy: self.scan[0].tracked.degeneracy, choreographic: None, cubic: false };
        let n = self.scan.len();
        let spacing = (self.scan[n - 1].parameter - self.scan[0].parameter) / (n - 1) as f64;
        let last = &self.scan[n - 1];
        if hi > last.parameter {
            let steps = ((hi - last.parameter) / spacing).ceil().max(1.0) as usize;
            let to = last.parameter + steps as f64 * spacing;
            let ext = scan_eigenvalue(&self.family, last.parameter, to, steps, &target, Some(&last.tracked.vectors), &self.opts)?;
            self.scan.extend(ext.into_iter().skip(1));
        }
        let first = &self.scan[0];
        if lo < first.parameter {
            let steps = ((first.parameter - lo) / spacing).ceil().max(1.0) as usize;
            let to = first.parameter - steps as f64 * spacing;
            let ext = scan_eigenvalue(&self.family, first.parameter, to, steps, &target, Some(&first.tracked.vectors), &self.opts)?;
            let mut head: Vec<ScanPoint> = ext.into_iter().skip(1).rev().collect();
            head.append(&mut self.scan);
            self.scan = head;
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.scan[0].parameter, self.scan[self.scan.len() - 1].parameter)
    }

    /// (parameter, kappa) rows of the tracked scan, ascending.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.scan.iter().map(|s| (s.parameter, s.tracked.value)).collect()
    }

    /// Crossing eigenvalue at `p`: cubic interpolation on the four nearest
    /// scan points.
    pub fn kappa_at(&self, p: f64) -> f64 {
        let n = self.scan.len();
        let k = self.scan.partition_point(|s| s.parameter < p);
        let lo = k.saturating_sub(2).min(n.saturating_sub(4));
        let idx: Vec<usize> = (lo..(lo + 4).min(n)).collect();
        idx.iter()
            .map(|&i| {
                let w: f64 = idx
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (p - self.scan[j].parameter) / (self.scan[i].parameter - self.scan[j].parameter))
                    .product();
                w * self.scan[i].tracked.value
            })
            .sum()
    }

    /// dkappa/dparameter at the bifurcation point.
    pub fn slope(&self) -> f64 {
        let h = 1e-3 * (self.range().1 - self.range().0);
        (self.kappa_at(self.bifurcation + h) - self.kappa_at(self.bifurcation - h)) / (2.0 * h)
    }

    /// Member of the unbifurcated family at `p`, solved from the nearest
    /// scan orbit.
    pub fn member(&self, p: f64) -> Result<Orbit> {
        let near = self
            .scan
            .iter()
            .min_by(|a, b| (a.parameter - p).abs().total_cmp(&(b.parameter - p).abs()))
            .expect("nonempty scan");
        self.family.member_at(p, Some(&near.orbit))
    }
}

/// Least-squares line `kappa = intercept + slope * parameter`.
pub fn fit_kappa_linear(rows: &[(f64, f64)]) -> Result<(f64, f64)> {
    if rows.len() < 3 {
        return Err(Error::Usage(format!("a linear fit needs at least 3 points, got {}", rows.len())));
    }
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum();
    if !(sxx > 1e-300) || !sxx.is_finite() {
        return Err(Error::Domain("degenerate abscissae in linear fit".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchOptions {
    /// Seed amplitude along the eigenspace; `None` uses 1e-2 of the orbit norm.
    pub h: Option<f64>,
    /// Number of halvings of `h` tried when a seed falls back onto the
    /// unbifurcated orbit or lands far away.
    pub retries: usize,
    pub space: Space,
    pub arc: ArcOptions,
    /// Farthest parameter distance from the bifurcation point searched for
    /// a fold, as a multiple of the seed's parameter offset.
    pub search_factor: f64,
    /// Extent of the traced window beyond the bifurcation point, as a
    /// multiple of the fold's distance from it.
    pub overshoot: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions { h: None, retries: 8, space: Space::Planar, arc: ArcOptions::default(), search_factor: 60.0, overshoot: 1.2 }
    }
}

/// Converged orbit on a bifurcated branch near the bifurcation point.
#[derive(Clone, Debug)]
pub struct Seed {
    pub orbit: Orbit,
    pub parameter: f64,
    /// Direction angle in the crossing eigenspace (basis `bp.phi`).
    pub theta: f64,
    pub h: f64,
    /// `int (phi_theta d)^3 L dt` along the seed direction.
    pub cubic: f64,
}

/// Cubic form `f(theta) = int (phi_theta d)^3 L dt` on the crossing pair.
fn cubic_along(o: &Orbit, pair: &[Vec<f64>], theta: f64) -> Result<f64> {
    let (s, c) = theta.sin_cos();
    let dir: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| c * a + s * b).collect();
    Ok(a3_integrals(o, &pair[0], &dir)?.0)
}

/// Directions of extremal `|f(theta)|`, largest first.
fn seed_directions(o: &Orbit, pair: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = 72;
    let fs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            cubic_along(o, pair, th).map(|f| (th, f))
        })
        .collect::<Result<_>>()?;
    let mut peaks: Vec<(f64, f64)> = (0..n)
        .filter(|&i| {
            let a = fs[(i + n - 1) % n].1.abs();
            let b = fs[(i + 1) % n].1.abs();
            fs[i].1.abs() >= a && fs[i].1.abs() > b
        })
        .map(|i| fs[i])
        .collect();
    peaks.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(peaks)
}

/// Solve for a bifurcated orbit from `q + h phi(theta)` at the parameter
/// where the small-amplitude branch has radius `h`, `kappa = -h f(theta)/2`.
/// Seeds that fall back onto the unbifurcated orbit (distance < h/10) or
/// land beyond 10 h are retried with `h/2`.
pub fn branch_seed(reference: &Reference, bp: &BifurcationPoint, opts: &BranchOptions) -> Result<Seed> {
    if bp.phi.len() != 2 {
        return Err(Error::Usage(format!("branch seeding needs a crossing pair, got {} vectors", bp.phi.len())));
    }
    let o = &bp.orbit;
    let mut h = opts.h.unwrap_or(1e-2 * crate::solver::norm(&crate::hessian::to_orthonormal(o.coeffs(), o.period, o.modes())));
    let slope = reference.slope();
    if !(slope.abs() > 0.0) {
        return Err(Error::Domain("crossing eigenvalue has zero slope".into()));
    }
    let dirs = seed_directions(o, &bp.phi)?;
    let solve = SolveOptions { space: opts.space, ..SolveOptions::default() };
    let mut last = Error::NoConvergence("no seed direction".into());
    for _ in 0..=opts.retries {
        for &(theta, f) in dirs.iter().take(3) {
            let kappa = -0.5 * h * f;
            let p = bp.parameter + kappa / slope;
            let q = match reference.member(p) {
                Ok(q) => q,
                Err(e) => {
                    last = e;
                    continue;
                }
            };
            let (s, c) = theta.sin_cos();
            let dir: Vec<f64> = bp.phi[0].iter().zip(&bp.phi[1]).map(|(a, b)| c * a + s * b).collect();
            let plain = to_plain(&dir, q.period, q.modes());
            let guess = q.with_coeffs(q.coeffs().iter().zip(&plain).map(|(a, b)| a + h * b).collect())?;
            match solve_converged(&guess, &solve) {
                Ok(sol) => {
                    let d = orbit_distance(&sol, &q);
                    if d > 0.1 * h && d < 10.0 * h {
                        return Ok(Seed { orbit: sol, parameter: p, theta, h, cubic: f });
                    }
                    last = Error::NoConvergence(format!(
                        "seed h={h:.3e} at {p:.8} converged at distance {d:.3e}; try a larger h or the other side"
                    ));
                }
                Err(e) => last = e,
            }
        }
        h *= 0.5;
    }
    Err(last)
}

#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub parameter: f64,
    pub orbit: Orbit,
    pub action: f64,
    /// Action of the unbifurcated family at the same parameter.
    pub action_ref: f64,
    /// Crossing eigenvalue of the unbifurcated family at the same parameter.
    pub kappa_ref: f64,
    /// Arclength along the branch.
    pub s: f64,
    pub side: Side,
    /// L2 distance to the unbifurcated orbit.
    pub distance_ref: f64,
}

impl BranchPoint {
    pub fn delta_s(&self) -> f64 {
        self.action - self.action_ref
    }
}

/// Bifurcated branch ordered from the far end of the fold side, through the
/// fold, back through the unbifurcated orbit.
#[derive(Clone, Debug)]
pub struct Branch {
    pub parameter_kind: Parameter,
    pub bifurcation: f64,
    pub points: Vec<BranchPoint>,
    pub fold_index: Option<usize>,
    /// Segment the seed lies on.
    pub side: Side,
    pub stop: Stop,
}

/// One direction of travel from the seed.
struct Leg {
    points: Vec<ArcPoint>,
    folds: Vec<usize>,
    stop: Stop,
    dir: f64,
}

impl Leg {
    /// Continue from the last point until `done(parameter)` or a new turning
    /// point.
    fn extend(&mut self, kind: Parameter, opts: &BranchOptions, done: impl Fn(f64) -> bool) -> Result<()> {
        let last = self.points.last().unwrap();
        let dir = if self.points.len() == 1 { self.dir } else { last.dp_ds.signum() };
        let mut prev = last.dp_ds;
        let had_fold = !self.folds.is_empty();
        let init = (!last.tangent.is_empty()).then_some(last.tangent.as_slice());
        let arc = arclength_from(&last.orbit, init, kind, opts.space, dir, &opts.arc, |pt| {
            let turned = !had_fold && prev * pt.dp_ds < 0.0;
            prev = pt.dp_ds;
            turned || done(pt.parameter)
        })?;
        let (s0, base) = (last.s, self.points.len() - 1);
        self.folds.extend(arc.folds.iter().map(|&i| base + i));
        self.points.extend(arc.points.into_iter().skip(1).map(|mut p| {
            p.s += s0;
            p
        }));
        self.stop = arc.stop;
        Ok(())
    }

    fn fold(&self) -> Option<f64> {
        self.folds.first().map(|&i| self.points[i].parameter)
    }

    fn stalled(&self) -> bool {
        matches!(self.stop, Stop::StepUnderflow(_) | Stop::MaxPoints)
    }
}

/// Trace the bifurcated branch born at `bp` from a seed on its
/// small-amplitude segment. Both directions are followed with a growing
/// parameter radius until a turning point appears; the branch is then
/// completed to the window `bp.parameter -+ overshoot |p_fold - bp.parameter|`
/// on each segment.
pub fn trace_branch(reference: &mut Reference, bp: &BifurcationPoint, opts: &BranchOptions) -> Result<Branch> {
    let seed = branch_seed(reference, bp, opts)?;
    let ps = bp.parameter;
    let kind = bp.parameter_kind;
    let offset = (seed.parameter - ps).abs().max(1e-9);
    let start = ArcPoint { parameter: seed.parameter, orbit: seed.orbit.clone(), s: 0.0, dp_ds: 0.0, tangent: Vec::new() };
    let away = (seed.parameter - ps).signum();
    let mut legs = [
        Leg { points: vec![start.clone()], folds: Vec::new(), stop: Stop::Requested, dir: away },
        Leg { points: vec![start], folds: Vec::new(), stop: Stop::Requested, dir: -away },
    ];
    let mut radius = 2.0 * offset;
    let fold = loop {
        for leg in legs.iter_mut() {
            if !leg.stalled() && (leg.points.last().unwrap().parameter - ps).abs() <= radius {
                leg.extend(kind, opts, |p| (p - ps).abs() > radius)?;
            }
        }
        if let Some(f) = legs.iter().find_map(Leg::fold) {
            break Some(f);
        }
        if legs.iter().all(Leg::stalled) || radius >= opts.search_factor * offset {
            break None;
        }
        radius *= 2.0;
    };
    let window = fold.map(|pf| (pf, opts.overshoot * (pf - ps).abs()));
    if let Some((pf, w)) = window {
        let beyond = move |p: f64| (p - ps) * (pf - ps) < 0.0 && (p - ps).abs() >= w;
        for leg in legs.iter_mut() {
            if !leg.stalled() && !beyond(leg.points.last().unwrap().parameter) {
                leg.extend(kind, opts, beyond)?;
                // a leg that met the turning point stops there; finish it
                if !leg.folds.is_empty() && !leg.stalled() && !beyond(leg.points.last().unwrap().parameter) {
                    leg.extend(kind, opts, beyond)?;
                }
            }
        }
    }
    // merged path: reverse(legs[1]) + legs[0]
    let [a, b] = legs;
    let stop = if a.stalled() { a.stop.clone() } else { b.stop.clone() };
    let (fa, fb) = (a.folds.first().copied(), b.folds.first().copied());
    let nb = b.points.len();
    let s_b = b.points.last().map_or(0.0, |p| p.s);
    let mut pts: Vec<ArcPoint> = b.points.into_iter().rev().collect();
    pts.iter_mut().for_each(|p| p.s = s_b - p.s);
    pts.extend(a.points.into_iter().skip(1).map(|mut p| {
        p.s += s_b;
        p
    }));
    let seed_idx = nb - 1;
    let mut fold_idx = fa.map(|i| nb - 1 + i).or_else(|| fb.map(|i| nb - 1 - i));
    if let Some(fi) = fold_idx {
        if fi > seed_idx {
            pts.reverse();
            let total = pts[0].s;
            pts.iter_mut().for_each(|p| p.s = total - p.s);
            fold_idx = Some(pts.len() - 1 - fi);
        }
    }
    // keep the window (one point beyond each end)
    if let Some((_, w)) = window {
        let inside: Vec<bool> = pts.iter().map(|p| (p.parameter - ps).abs() <= w).collect();
        let first = inside.iter().position(|&x| x).unwrap_or(0).saturating_sub(1);
        let last = (inside.iter().rposition(|&x| x).unwrap_or(pts.len() - 1) + 1).min(pts.len() - 1);
        pts = pts[first..=last].to_vec();
        fold_idx = fold_idx.map(|f| f - first);
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.parameter), h.max(p.parameter)));
    reference.cover(lo, hi)?;
    let mut points = Vec::with_capacity(pts.len());
    for (i, p) in pts.into_iter().enumerate() {
        let q = reference.member(p.parameter)?;
        let side = match fold_idx {
            Some(f) if i <= f => Side::FoldSide,
            _ => Side::TowardQ,
        };
        points.push(BranchPoint {
            parameter: p.parameter,
            action: p.orbit.action()?,
            action_ref: q.action()?,
            kappa_ref: reference.kappa_at(p.parameter),
            s: p.s,
            side,
            distance_ref: orbit_distance(&p.orbit, &q),
            orbit: p.orbit,
        });
    }
    Ok(Branch { parameter_kind: kind, bifurcation: ps, points, fold_index: fold_idx, side: Side::TowardQ, stop })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Fold {
    pub parameter: f64,
    pub kappa0: f64,
    pub delta_s0: f64,
    pub index: usize,
}

/// Quadratic through three (x, y) points evaluated at its own vertex in x,
/// returning (x*, [coefficients]) for `y = c0 + c1 x + c2 x^2`.
fn quadratic(xs: [f64; 3], ys: [f64; 3]) -> [f64; 3] {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c2 = (d12 - d01) / (x2 - x0);
    let c1 = d01 - c2 * (x0 + x1);
    let c0 = y0 - c1 * x0 - c2 * x0 * x0;
    [c0, c1, c2]
}

fn eval_quadratic(c: [f64; 3], x: f64) -> f64 {
    c[0] + c[1] * x + c[2] * x * x
}

/// Turning point of the branch: vertex of the quadratic fit of parameter
/// against arclength through the fold point and its neighbours; `kappa0`
/// and `dS0` interpolated the same way.
pub fn locate_fold(b: &Branch) -> Result<Fold> {
    let f = b.fold_index.ok_or(Error::NoTurningPoint)?;
    if f == 0 || f + 1 >= b.points.len() {
        return Err(Error::NoTurningPoint);
    }
    // the refined fold can sit within roundoff of its neighbour in s
    let near = |i: usize| (b.points[i].s - b.points[f].s).abs() < 1e-9 * b.points[f].s.abs().max(1e-3);
    let lo = (0..f).rev().find(|&i| !near(i));
    let hi = (f + 1..b.points.len()).find(|&i| !near(i));
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(Error::NoTurningPoint);
    };
    let tri = [&b.points[lo], &b.points[f], &b.points[hi]];
    let s0 = tri[1].s;
    let xs = [tri[0].s - s0, 0.0, tri[2].s - s0];
    let cp = quadratic(xs, [tri[0].parameter, tri[1].parameter, tri[2].parameter]);
    let x = if cp[2] != 0.0 { -cp[1] / (2.0 * cp[2]) } else { 0.0 };
    let x = if x >= xs[0] && x <= xs[2] { x } else { 0.0 };
    let ck = quadratic(xs, [tri[0].kappa_ref, tri[1].kappa_ref, tri[2].kappa_ref]);
    let cd = quadratic(xs, [tri[0].delta_s(), tri[1].delta_s(), tri[2].delta_s()]);
    Ok(Fold { parameter: eval_quadratic(cp, x), kappa0: eval_quadratic(ck, x), delta_s0: eval_quadratic(cd, x), index: f })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurveRow {
    pub parameter: f64,
    pub kappa_ref: f64,
    /// Linear map `intercept + slope * parameter`.
    pub kappa_linear: f64,
    pub delta_s: f64,
    pub side: Side,
    /// Reduced-model value on the matching segment at `kappa_linear`;
    /// `None` past the model's fold.
    pub model: Option<f64>,
}

/// Exact relative actions along `b` next to the reduced model with
/// coefficients `(a3, a4)` and the linear eigenvalue map `kappa_line`.
pub fn relative_action_curve(b: &Branch, a3: f64, a4: f64, kappa_line: (f64, f64)) -> Vec<CurveRow> {
    b.points
        .iter()
        .map(|p| {
            let kl = kappa_line.0 + kappa_line.1 * p.parameter;
            let model = crate::reduction::delta_s_pm(kl, a3, a4).ok().map(|(m, pl)| match p.side {
                Side::FoldSide => pl,
                Side::TowardQ => m,
            });
            CurveRow { parameter: p.parameter, kappa_ref: p.kappa_ref, kappa_linear: kl, delta_s: p.delta_s(), side: p.side, model }
        })
        .collect()
}

/// Integral `A3` at a bifurcation point, using the symmetry-adapted pair.
pub fn a3_at(bp: &BifurcationPoint) -> Result<f64> {
    let sel = select_phi2(bp)?;
    let (a30, a31) = a3_integrals(&bp.orbit, &sel.phi1, &sel.phi2)?;
    Ok(a3_coefficient(a30, a31, sel.tag))
}
