//! Newton iteration on the stationarity of the discretized action.
//!
//! Unknowns live in a reduced space mapped linearly onto the full plain
//! coefficient vector (`c = P u`). The trivial kernel (translations, rotations,
//! time shift) is removed by bordering the Newton matrix with the kernel
//! directions of the seed and pinning the iterate to the seed's slice.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::DIM;
use crate::error::{Error, Result};
use crate::hessian::{action_hessian, orthonormal_scale};
use crate::orbit::{derivative_coeffs, Grid, Orbit};

/// Subspace in which an orbit is sought.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// Planar choreography: one curve generates the three bodies, shifted by T/3.
    Choreographic,
    /// Any planar orbit (z = 0).
    Planar,
    /// All nine coordinates.
    Spatial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub space: Space,
    /// Converged when the L2 norm of the Euler-Lagrange residual drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Bodies closer than this on the grid count as a collision.
    pub min_separation: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { space: Space::Choreographic, tolerance: 1e-10, max_iterations: 40, min_separation: 1e-3 }
    }
}

impl SolveOptions {
    pub fn in_space(space: Space) -> Self {
        SolveOptions { space, ..Default::default() }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub orbit: Orbit,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Why the iteration stopped early, if it did.
    pub message: Option<String>,
}

/// Sparse linear map from reduced unknowns to full plain coefficients.
#[derive(Clone, Debug)]
pub(crate) struct Reduction {
    pub space: Space,
    pub modes: usize,
    pub n_full: usize,
    pub n: usize,
    /// (full row, reduced column, value)
    pub entries: Vec<(usize, usize, f64)>,
    /// `P^T P = scale I`
    pub scale: f64,
    /// Full coordinates touched by the map.
    pub coords: Vec<usize>,
}

impl Reduction {
    pub fn new(space: Space, modes: usize) -> Self {
        let w = 2 * modes + 1;
        let n_full = DIM * w;
        let mut entries = Vec::new();
        match space {
            Space::Spatial | Space::Planar => {
                let coords: Vec<usize> =
                    if space == Space::Spatial { (0..DIM).collect() } else { vec![0, 1, 3, 4, 6, 7] };
                let mut col = 0;
                for &a in &coords {
                    for b in 0..w {
                        entries.push((a * w + b, col, 1.0));
                        col += 1;
                    }
                }
                Reduction { space, modes, n_full, n: col, entries, scale: 1.0, coords }
            }
            Space::Choreographic => {
                let mut col = 0;
                for axis in 0..2 {
                    for k in (1..=modes).filter(|k| k % 3 != 0) {
                        let (ca, cb) = (col, col + 1);
                        for body in 0..3 {
                            let phi = 2.0 * PI * (k * body) as f64 / 3.0;
                            let (s, c) = phi.sin_cos();
                            let row = 3 * body + axis;
                            let rc = row * w + k;
                            let rs = row * w + modes + k;
                            entries.push((rc, ca, c));
                            entries.push((rc, cb, s));
                            entries.push((rs, ca, -s));
                            entries.push((rs, cb, c));
                        }
                        col += 2;
                    }
                }
                Reduction { space, modes, n_full, n: col, entries, scale: 3.0, coords: vec![0, 1, 3, 4, 6, 7] }
            }
        }
    }

    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_full];
        for &(r, k, v) in &self.entries {
            c[r] += v * u[k];
        }
        c
    }

    /// `P^T c`
    pub fn restrict(&self, c: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for &(r, k, v) in &self.entries {
            u[k] += v * c[r];
        }
        u
    }

    /// Least-squares preimage `(P^T P)^-1 P^T c`.
    pub fn project(&self, c: &[f64]) -> Vec<f64> {
        let mut u = self.restrict(c);
        u.iter_mut().for_each(|v| *v /= self.scale);
        u
    }

    /// Position of full coordinate `a` in the local Hessian block.
    fn local(&self, a: usize) -> usize {
        self.coords.iter().position(|&x| x == a).expect("coordinate outside reduction")
    }

    /// `P^T H P` given the action Hessian over `self.coords`.
    pub fn reduce_matrix(&self, hc: &DMatrix<f64>) -> DMatrix<f64> {
        let w = 2 * self.modes + 1;
        if self.space != Space::Choreographic {
            return hc.clone();
        }
        let to_local = |r: usize| self.local(r / w) * w + r % w;
        // (H P): dense nloc x n
        let nloc = hc.nrows();
        let mut hp = DMatrix::<f64>::zeros(nloc, self.n);
        for &(r, k, v) in &self.entries {
            let lr = to_local(r);
            for i in 0..nloc {
                hp[(i, k)] += hc[(i, lr)] * v;
            }
        }
        let mut out = DMatrix::<f64>::zeros(self.n, self.n);
        for &(r, k, v) in &self.entries {
            let lr = to_local(r);
            for j in 0..self.n {
                out[(k, j)] += v * hp[(lr, j)];
            }
        }
        out
    }

    /// Full-space generators of the trivial symmetries at `orbit`, in plain
    /// coefficients: translations, rotations about x, y, z, time shift.
    pub fn kernel_generators(orbit: &Orbit) -> Vec<Vec<f64>> {
        kernel_generators(orbit).into_iter().map(|(_, v)| v).collect()
    }

    /// Reduced-space gauge directions: generators that survive the reduction,
    /// orthonormalized.
    pub fn gauge(&self, orbit: &Orbit) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for g in Self::kernel_generators(orbit) {
            let mut u = self.project(&g);
            let raw = norm(&u);
            // the generator must lie (almost) inside the reduced space
            let back = self.expand(&u);
            let resid = norm(&back.iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>());
            if raw == 0.0 || resid > 1e-6 * norm(&g) {
                continue;
            }
            for o in &out {
                let d = dot(&u, o);
                u.iter_mut().zip(o).for_each(|(x, y)| *x -= d * y);
            }
            let nrm = norm(&u);
            if nrm > 1e-8 * raw {
                u.iter_mut().for_each(|x| *x /= nrm);
                out.push(u);
            }
        }
        out
    }
}

/// Symmetry class of a trivial kernel direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Generator {
    Translation,
    Rotation,
    TimeShift,
}

pub(crate) fn kernel_generators(orbit: &Orbit) -> Vec<(Generator, Vec<f64>)> {
    let w = orbit.width();
    let c = orbit.coeffs();
    let mut out = Vec::new();
    for axis in 0..3 {
        let mut v = vec![0.0; DIM * w];
        for body in 0..3 {
            v[(3 * body + axis) * w] = 1.0;
        }
        out.push((Generator::Translation, v));
    }
    for axis in 0..3 {
        // e_axis x q
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut v = vec![0.0; DIM * w];
        for body in 0..3 {
            for b in 0..w {
                v[(3 * body + p) * w + b] = -c[(3 * body + q) * w + b];
                v[(3 * body + q) * w + b] = c[(3 * body + p) * w + b];
            }
        }
        out.push((Generator::Rotation, v));
    }
    out.push((Generator::TimeShift, derivative_coeffs(c, orbit.modes(), orbit.omega())));
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// L2 norm of the Euler-Lagrange residual in the orthonormal basis, with the component along the time-shift generator
/// removed. Quadrature aliasing breaks time-shift invariance of the discrete
/// action slightly, leaving a gradient component along `q'` that the gauge
/// constraint keeps Newton from removing.
pub(crate) fn slice_residual(grad: &[f64], orbit: &Orbit) -> f64 {
    let s = orthonormal_scale(orbit.period, orbit.modes());
    let w = s.len();
    let mut g: Vec<f64> = grad.iter().enumerate().map(|(i, v)| v / s[i % w]).collect();
    let v: Vec<f64> = derivative_coeffs(orbit.coeffs(), orbit.modes(), orbit.omega())
        .iter()
        .enumerate()
        .map(|(i, x)| x * s[i % w])
        .collect();
    let vv = dot(&v, &v);
    if vv > 0.0 {
        let c = dot(&g, &v) / vv;
        g.iter_mut().zip(&v).for_each(|(a, b)| *a -= c * b);
    }
    norm(&g)
}

/// Evaluate an orbit state; `None` on collision or non-finite values.
pub(crate) struct Eval {
    pub orbit: Orbit,
    pub grad: Vec<f64>,
    pub residual: f64,
}

pub(crate) fn evaluate(template: &Orbit, coeffs: Vec<f64>, grid: &Grid, min_sep: f64) -> Result<Eval> {
    let orbit = template.with_coeffs(coeffs)?;
    let q = orbit.positions_on(grid);
    for c in &q {
        let d = c.min_distance();
        if !(d >= min_sep) {
            return Err(Error::Collision { i: 0, j: 0, distance: d });
        }
    }
    let grad = orbit.action_gradient_on(grid)?;
    let residual = slice_residual(&grad, &orbit);
    if !residual.is_finite() {
        return Err(Error::Domain("non-finite residual".into()));
    }
    Ok(Eval { orbit, grad, residual })
}

/// Solve the bordered system `[[A, G], [G^T, 0]] [x; mu] = [rhs; cons]`.
pub(crate) fn bordered_solve(
    a: &DMatrix<f64>,
    gauge: &[Vec<f64>],
    rhs: &[f64],
    cons: &[f64],
) -> Option<Vec<f64>> {
    let n = a.nrows();
    let g = gauge.len();
    let mut m = DMatrix::<f64>::zeros(n + g, n + g);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    for (j, v) in gauge.iter().enumerate() {
        for i in 0..n {
            m[(i, n + j)] = v[i];
            m[(n + j, i)] = v[i];
        }
    }
    let mut b = DVector::<f64>::zeros(n + g);
    b.rows_mut(0, n).copy_from_slice(rhs);
    b.rows_mut(n, g).copy_from_slice(cons);
    let x = m.lu().solve(&b)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x.rows(0, n).iter().copied().collect())
}

/// Newton-Raphson on `dS = 0` with backtracking, falling back to
/// Levenberg-Marquardt damping on `|dS|^2` when the Newton direction stalls.
pub fn solve_orbit(seed: &Orbit, opts: &SolveOptions) -> Result<SolveReport> {
    let red = Reduction::new(opts.space, seed.modes());
    let grid = seed.grid();
    // start from the projection onto the space; keeps the seed's gauge slice
    let mut u = red.project(seed.coeffs());
    let anchor = u.clone();
    let gauge = red.gauge(seed);
    let mut cur = match evaluate(seed, red.expand(&u), &grid, opts.min_separation) {
        Ok(e) => e,
        Err(e) => {
            return Ok(SolveReport {
                orbit: seed.clone(),
                residual_norm: f64::INFINITY,
                iterations: 0,
                converged: false,
                message: Some(e.to_string()),
            })
        }
    };
    let mut lambda = 1e-6;
    for it in 0..opts.max_iterations {
        if cur.residual < opts.tolerance {
            return Ok(SolveReport {
                orbit: cur.orbit,
                residual_norm: cur.residual,
                iterations: it,
                converged: true,
                message: None,
            });
        }
        let hc = action_hessian(&cur.orbit, &red.coords, &grid)?;
        let hr = red.reduce_matrix(&hc);
        let gr = red.restrict(&cur.grad);
        let rhs: Vec<f64> = gr.iter().map(|v| -v).collect();
        let cons: Vec<f64> =
            gauge.iter().map(|g| -dot(g, &u.iter().zip(&anchor).map(|(a, b)| a - b).collect::<Vec<_>>())).collect();
        let mut accepted = false;
        if let Some(step) = bordered_solve(&hr, &gauge, &rhs, &cons) {
            let mut alpha = 1.0;
            for _ in 0..12 {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
                if let Ok(e) = evaluate(&cur.orbit, red.expand(&trial), &grid, opts.min_separation) {
                    if e.residual < (1.0 - 1e-4 * alpha) * cur.residual {
                        u = trial;
                        cur = e;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }
        if !accepted {
            // Levenberg-Marquardt on the residual: (H^2 + lambda I) d = -H g
            let h2 = &hr * &hr;
            let hg = &hr * DVector::from_column_slice(&gr);
            let scale = (0..h2.nrows()).map(|i| h2[(i, i)]).fold(0.0, f64::max).max(1.0);
            for _ in 0..12 {
                let mut a = h2.clone();
                for i in 0..a.nrows() {
                    a[(i, i)] += lambda * scale;
                }
                let rhs: Vec<f64> = hg.iter().map(|v| -v).collect();
                if let Some(step) = bordered_solve(&a, &gauge, &rhs, &cons) {
                    let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + d).collect();
                    if let Ok(e) = evaluate(&cur.orbit, red.expand(&trial), &grid, opts.min_separation) {
                        if e.residual < cur.residual {
                            u = trial;
                            cur = e;
                            accepted = true;
                            lambda = (lambda / 10.0).max(1e-12);
                            break;
                        }
                    }
                }
                lambda *= 10.0;
            }
        }
        if !accepted {
            return Ok(SolveReport {
                residual_norm: cur.residual,
                orbit: cur.orbit,
                iterations: it + 1,
                converged: false,
                message: Some("no descent direction".into()),
            });
        }
    }
    let converged = cur.residual < opts.tolerance;
    Ok(SolveReport {
        residual_norm: cur.residual,
        orbit: cur.orbit,
        iterations: opts.max_iterations,
        converged,
        message: if converged { None } else { Some("iteration limit".into()) },
    })
}
