//! T-periodic three-body trajectories as truncated Fourier series.
//!
//! Each of the nine coordinates is stored as plain real coefficients
//! `[cos_0, cos_1..cos_M, sin_1..sin_M]` of
//! `q(t) = cos_0 + sum_k cos_k cos(k w t) + sin_k sin(k w t)`, `w = 2 pi / T`.
//! Time integrals use the rectangle rule on `N` uniform samples, which is
//! exact for trigonometric polynomials of degree below `N`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{grad_u, lagrangian_density, potential_energy, Configuration, DIM, PAIRS};
use crate::error::{Error, Result};
use crate::potential::Potential;

pub const FORMAT_VERSION: u32 = 1;

/// Uniform sampling grid with trigonometric tables up to frequency `2M`.
pub(crate) struct Grid {
    pub m: usize,
    pub n: usize,
    /// `cos(2 pi k j / N)` at `[j * (2M + 1) + k]`, k = 0..=2M
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Grid {
    pub fn new(m: usize, n: usize) -> Self {
        let kmax = 2 * m + 1;
        let mut cos = Vec::with_capacity(n * kmax);
        let mut sin = Vec::with_capacity(n * kmax);
        for j in 0..n {
            for k in 0..kmax {
                // reduce the angle index first so tables are exact at quarter turns
                let idx = (k * j) % n;
                let theta = 2.0 * PI * idx as f64 / n as f64;
                cos.push(theta.cos());
                sin.push(theta.sin());
            }
        }
        Grid { m, n, cos, sin }
    }

    #[inline]
    pub fn cos(&self, j: usize, k: usize) -> f64 {
        self.cos[j * (2 * self.m + 1) + k]
    }

    #[inline]
    pub fn sin(&self, j: usize, k: usize) -> f64 {
        self.sin[j * (2 * self.m + 1) + k]
    }

    /// Evaluate one coefficient row at every sample.
    pub fn synth(&self, coeffs: &[f64], out: &mut [f64]) {
        let m = self.m;
        for (j, slot) in out.iter_mut().enumerate() {
            let mut v = coeffs[0];
            for k in 1..=m {
                v += coeffs[k] * self.cos(j, k) + coeffs[m + k] * self.sin(j, k);
            }
            *slot = v;
        }
    }

    /// `(1/N) sum_j f_j basis_b(t_j)` for every slot `b`.
    pub fn analyze(&self, samples: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &f) in samples.iter().enumerate() {
            out[0] += f;
            for k in 1..=m {
                out[k] += f * self.cos(j, k);
                out[m + k] += f * self.sin(j, k);
            }
        }
        let inv = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= inv);
    }
}

/// A T-periodic trajectory of the three bodies.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub potential: Potential,
    pub period: f64,
    modes: usize,
    samples: usize,
    coeffs: Vec<f64>,
}

impl Orbit {
    pub fn zeros(potential: Potential, period: f64, modes: usize, samples: usize) -> Result<Self> {
        Self::from_coeffs(potential, period, modes, samples, vec![0.0; DIM * (2 * modes + 1)])
    }

    pub fn from_coeffs(
        potential: Potential,
        period: f64,
        modes: usize,
        samples: usize,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        potential.validate()?;
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        if modes == 0 {
            return Err(Error::Usage("at least one Fourier mode is required".into()));
        }
        if samples < 4 * modes + 4 {
            return Err(Error::Usage(format!(
                "need at least 4M+4 = {} samples for M = {modes}, got {samples}",
                4 * modes + 4
            )));
        }
        if coeffs.len() != DIM * (2 * modes + 1) {
            return Err(Error::Usage(format!(
                "expected {} coefficients, got {}",
                DIM * (2 * modes + 1),
                coeffs.len()
            )));
        }
        Ok(Orbit { potential, period, modes, samples, coeffs })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Coefficients per coordinate.
    pub fn width(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coord(&self, a: usize) -> &[f64] {
        let w = self.width();
        &self.coeffs[a * w..(a + 1) * w]
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::from_coeffs(self.potential, period, self.modes, self.samples, self.coeffs.clone())
    }

    pub fn with_potential(&self, potential: Potential) -> Result<Self> {
        Self::from_coeffs(potential, self.period, self.modes, self.samples, self.coeffs.clone())
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_coeffs(self.potential, self.period, self.modes, self.samples, coeffs)
    }

    pub(crate) fn grid(&self) -> Grid {
        Grid::new(self.modes, self.samples)
    }

    /// Sample times `t_j = j T / N`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.period * j as f64 / self.samples as f64).collect()
    }

    pub fn positions(&self) -> Vec<Configuration> {
        let grid = self.grid();
        self.positions_on(&grid)
    }

    pub(crate) fn positions_on(&self, grid: &Grid) -> Vec<Configuration> {
        let mut out = vec![Configuration([0.0; DIM]); self.samples];
        let mut row = vec![0.0; self.samples];
        for a in 0..DIM {
            grid.synth(self.coord(a), &mut row);
            for (c, v) in out.iter_mut().zip(&row) {
                c.0[a] = *v;
            }
        }
        out
    }

    /// Coefficients of `dq/dt`.
    pub fn derivative_coeffs(&self) -> Vec<f64> {
        derivative_coeffs(&self.coeffs, self.modes, self.omega())
    }

    pub fn velocities(&self) -> Vec<[f64; DIM]> {
        let grid = self.grid();
        self.velocities_on(&grid)
    }

    pub(crate) fn velocities_on(&self, grid: &Grid) -> Vec<[f64; DIM]> {
        let d = self.derivative_coeffs();
        let w = self.width();
        let mut out = vec![[0.0; DIM]; self.samples];
        let mut row = vec![0.0; self.samples];
        for a in 0..DIM {
            grid.synth(&d[a * w..(a + 1) * w], &mut row);
            for (c, v) in out.iter_mut().zip(&row) {
                c[a] = *v;
            }
        }
        out
    }

    /// Evaluate at an arbitrary time.
    pub fn eval(&self, t: f64) -> Configuration {
        Configuration(eval_series(&self.coeffs, self.modes, self.omega() * t))
    }

    pub fn eval_velocity(&self, t: f64) -> [f64; DIM] {
        eval_series(&self.derivative_coeffs(), self.modes, self.omega() * t)
    }

    pub fn min_distance(&self) -> f64 {
        self.positions().iter().map(|c| c.min_distance()).fold(f64::INFINITY, f64::min)
    }

    /// Three-body sum of the coefficients of each axis (zero for an orbit
    /// with its center of mass at the origin).
    pub fn center_of_mass_coeffs(&self) -> [Vec<f64>; 3] {
        let w = self.width();
        std::array::from_fn(|axis| {
            (0..w).map(|b| (0..3).map(|i| self.coeffs[(3 * i + axis) * w + b]).sum()).collect()
        })
    }

    pub fn is_planar(&self) -> bool {
        [2, 5, 8].iter().all(|&a| self.coord(a).iter().all(|&v| v == 0.0))
    }

    /// Fraction of the squared coefficient mass carried by the top quarter of
    /// the retained modes.
    pub fn tail_mass(&self) -> f64 {
        let m = self.modes;
        let w = self.width();
        let cut = m - m / 4;
        let mut tail = 0.0;
        let mut total = 0.0;
        for a in 0..DIM {
            for k in 1..=m {
                let e = self.coeffs[a * w + k].powi(2) + self.coeffs[a * w + m + k].powi(2);
                total += e;
                if k > cut {
                    tail += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Orbit observed at `t + shift` (time translation of every coordinate).
    pub fn time_shifted(&self, shift: f64) -> Orbit {
        let mut out = self.clone();
        shift_series(&mut out.coeffs, self.modes, self.omega() * shift);
        out
    }

    /// Apply the same 3x3 orthogonal map to every body.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Orbit {
        let mut out = self.clone();
        let w = self.width();
        for i in 0..3 {
            for b in 0..w {
                for a in 0..3 {
                    let mut v = 0.0;
                    for c in 0..3 {
                        v += r[a][c] * self.coeffs[(3 * i + c) * w + b];
                    }
                    out.coeffs[(3 * i + a) * w + b] = v;
                }
            }
        }
        out
    }

    /// Truncate or zero-pad to `modes` and change the sample count.
    pub fn resample(&self, modes: usize, samples: usize) -> Result<Orbit> {
        let w_old = self.width();
        let w = 2 * modes + 1;
        let keep = modes.min(self.modes);
        let mut coeffs = vec![0.0; DIM * w];
        for a in 0..DIM {
            coeffs[a * w] = self.coeffs[a * w_old];
            for k in 1..=keep {
                coeffs[a * w + k] = self.coeffs[a * w_old + k];
                coeffs[a * w + modes + k] = self.coeffs[a * w_old + self.modes + k];
            }
        }
        Orbit::from_coeffs(self.potential, self.period, modes, samples, coeffs)
    }

    /// Discretized action `T/N sum_j L(q(t_j), qdot(t_j))`.
    pub fn action(&self) -> Result<f64> {
        let grid = self.grid();
        let q = self.positions_on(&grid);
        let v = self.velocities_on(&grid);
        let mut total = 0.0;
        for (c, qd) in q.iter().zip(&v) {
            total += lagrangian_density(&self.potential, c, qd)?;
        }
        Ok(total * self.period / self.samples as f64)
    }

    /// `|qdot|^2/2 + U` at every sample.
    pub fn energies(&self) -> Result<Vec<f64>> {
        let grid = self.grid();
        let q = self.positions_on(&grid);
        let v = self.velocities_on(&grid);
        q.iter()
            .zip(&v)
            .map(|(c, qd)| {
                let kin: f64 = qd.iter().map(|x| x * x).sum::<f64>() * 0.5;
                Ok(kin + potential_energy(&self.potential, c)?)
            })
            .collect()
    }

    /// Exact gradient of [`Orbit::action`] with respect to the plain
    /// coefficients, same layout as [`Orbit::coeffs`].
    pub fn action_gradient(&self) -> Result<Vec<f64>> {
        let grid = self.grid();
        self.action_gradient_on(&grid)
    }

    pub(crate) fn action_gradient_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        let q = self.positions_on(grid);
        let m = self.modes;
        let w = self.width();
        let t = self.period;
        let mut forces = vec![vec![0.0; self.samples]; DIM];
        for (j, c) in q.iter().enumerate() {
            let g = grad_u(&self.potential, c)?;
            for a in 0..DIM {
                forces[a][j] = g[a];
            }
        }
        let omega = self.omega();
        let mut grad = vec![0.0; DIM * w];
        let mut proj = vec![0.0; w];
        for a in 0..DIM {
            grid.analyze(&forces[a], &mut proj);
            let row = &mut grad[a * w..(a + 1) * w];
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = -t * proj[b];
            }
            let coef = &self.coeffs[a * w..(a + 1) * w];
            for k in 1..=m {
                let kin = 0.5 * t * (k as f64 * omega).powi(2);
                row[k] += kin * coef[k];
                row[m + k] += kin * coef[m + k];
            }
        }
        Ok(grad)
    }

    /// Fail if two bodies come within `min` of each other on the grid.
    pub fn check_separation(&self, min: f64) -> Result<()> {
        for c in self.positions() {
            for &(i, j) in &PAIRS {
                let d = c.distance(i, j);
                if !(d >= min) {
                    return Err(Error::Collision { i, j, distance: d });
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> OrbitFile {
        let w = self.width();
        OrbitFile {
            format_version: FORMAT_VERSION,
            potential: self.potential,
            period: self.period,
            modes: self.modes,
            samples: self.samples,
            coefficients: (0..DIM).map(|a| self.coeffs[a * w..(a + 1) * w].to_vec()).collect(),
        }
    }

    pub fn from_file(f: OrbitFile) -> Result<Orbit> {
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Usage(format!("unsupported orbit format version {}", f.format_version)));
        }
        if f.coefficients.len() != DIM {
            return Err(Error::Usage(format!("expected {DIM} coefficient arrays, got {}", f.coefficients.len())));
        }
        let coeffs: Vec<f64> = f.coefficients.into_iter().flatten().collect();
        Orbit::from_coeffs(f.potential, f.period, f.modes, f.samples, coeffs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Orbit> {
        Orbit::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Orbit> {
        Orbit::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk orbit layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitFile {
    pub format_version: u32,
    pub potential: Potential,
    pub period: f64,
    pub modes: usize,
    pub samples: usize,
    /// nine arrays `[cos_0..cos_M, sin_1..sin_M]`
    pub coefficients: Vec<Vec<f64>>,
}

pub(crate) fn derivative_coeffs(c: &[f64], m: usize, omega: f64) -> Vec<f64> {
    let w = 2 * m + 1;
    let mut d = vec![0.0; c.len()];
    for a in 0..c.len() / w {
        for k in 1..=m {
            let kw = k as f64 * omega;
            d[a * w + k] = kw * c[a * w + m + k];
            d[a * w + m + k] = -kw * c[a * w + k];
        }
    }
    d
}

pub(crate) fn eval_series(c: &[f64], m: usize, theta: f64) -> [f64; DIM] {
    let w = 2 * m + 1;
    let mut out = [0.0; DIM];
    for (a, slot) in out.iter_mut().enumerate() {
        let mut v = c[a * w];
        for k in 1..=m {
            let (s, co) = (k as f64 * theta).sin_cos();
            v += c[a * w + k] * co + c[a * w + m + k] * s;
        }
        *slot = v;
    }
    out
}

/// Re-express a series in place so that it describes `q(t + theta / w)`.
pub(crate) fn shift_series(c: &mut [f64], m: usize, theta: f64) {
    let w = 2 * m + 1;
    for a in 0..c.len() / w {
        for k in 1..=m {
            let (s, co) = (k as f64 * theta).sin_cos();
            let (ca, sb) = (c[a * w + k], c[a * w + m + k]);
            c[a * w + k] = ca * co + sb * s;
            c[a * w + m + k] = sb * co - ca * s;
        }
    }
}
