//! Discrete space-time symmetries of a periodic orbit.
//!
//! An element acts on a trajectory as `(g q)_i(t) = R q_{pi(i)}(eps t + s)`
//! with `R` a reflection or point inversion about the orbit's in-plane
//! principal axes, `eps = +-1` and `pi` a relabeling of the bodies. The same
//! linear action applies to variations `phi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hessian::to_orthonormal;
use crate::orbit::{shift_series, Orbit};
use crate::solver::{dot, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryTag {
    D3,
    C3,
}

/// Linear part in the principal frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linear {
    Identity,
    /// `y -> -y` along the major axis.
    ReflectX,
    /// `x -> -x`.
    ReflectY,
    /// `(x, y) -> (-x, -y)`.
    Inversion,
}

impl Linear {
    fn diag(&self) -> [f64; 2] {
        match self {
            Linear::Identity => [1.0, 1.0],
            Linear::ReflectX => [1.0, -1.0],
            Linear::ReflectY => [-1.0, 1.0],
            Linear::Inversion => [-1.0, -1.0],
        }
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];

#[derive(Clone, Debug)]
pub struct SymmetryElement {
    pub linear: Linear,
    pub rotation: [[f64; 3]; 3],
    pub reversed: bool,
    /// Time shift as a fraction of the period.
    pub shift: f64,
    pub permutation: [usize; 3],
    /// `|g q - q| / |q|`.
    pub residual: f64,
}

impl SymmetryElement {
    pub fn is_identity(&self) -> bool {
        self.linear == Linear::Identity
            && !self.reversed
            && self.permutation == [0, 1, 2]
            && (self.shift.min(1.0 - self.shift)).abs() < 1e-9
    }

    /// Act on nine-coordinate coefficients (plain or orthonormal alike).
    pub fn apply(&self, c: &[f64], modes: usize) -> Vec<f64> {
        let mut out = permute_rotate(c, modes, &self.rotation, &self.permutation);
        shift_series(&mut out, modes, 2.0 * PI * self.shift);
        if self.reversed {
            reverse(&mut out, modes);
        }
        out
    }
}

fn permute_rotate(c: &[f64], modes: usize, r: &[[f64; 3]; 3], perm: &[usize; 3]) -> Vec<f64> {
    let w = 2 * modes + 1;
    let mut out = vec![0.0; c.len()];
    for i in 0..3 {
        let src = perm[i];
        for a in 0..3 {
            let row = &mut out[(3 * i + a) * w..(3 * i + a + 1) * w];
            for b in 0..3 {
                if r[a][b] != 0.0 {
                    let s = &c[(3 * src + b) * w..(3 * src + b + 1) * w];
                    row.iter_mut().zip(s).for_each(|(x, y)| *x += r[a][b] * y);
                }
            }
        }
    }
    out
}

fn reverse(c: &mut [f64], modes: usize) {
    let w = 2 * modes + 1;
    for a in 0..c.len() / w {
        for k in 1..=modes {
            c[a * w + modes + k] = -c[a * w + modes + k];
        }
    }
}

/// Angle of the major in-plane principal axis of `sum_i int q_i q_i^T dt`.
pub fn principal_angle(o: &Orbit) -> f64 {
    let x = to_orthonormal(o.coeffs(), o.period, o.modes());
    let w = o.width();
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for body in 0..3 {
        let xs = &x[(3 * body) * w..(3 * body + 1) * w];
        let ys = &x[(3 * body + 1) * w..(3 * body + 2) * w];
        sxx += dot(xs, xs);
        syy += dot(ys, ys);
        sxy += dot(xs, ys);
    }
    0.5 * (2.0 * sxy).atan2(sxx - syy)
}

/// Every element (other than the identity) that maps the orbit to itself to
/// relative accuracy `tol`.
pub fn find_symmetries(o: &Orbit, tol: f64) -> Vec<SymmetryElement> {
    let m = o.modes();
    let q = to_orthonormal(o.coeffs(), o.period, m);
    let qn = norm(&q);
    if qn == 0.0 {
        return Vec::new();
    }
    let beta = principal_angle(o);
    let (sb, cb) = beta.sin_cos();
    let mut out = Vec::new();
    for linear in [Linear::Identity, Linear::ReflectX, Linear::ReflectY, Linear::Inversion] {
        let d = linear.diag();
        // R = Q diag(d) Q^T in the plane, z untouched
        let r = [
            [d[0] * cb * cb + d[1] * sb * sb, (d[0] - d[1]) * cb * sb, 0.0],
            [(d[0] - d[1]) * cb * sb, d[0] * sb * sb + d[1] * cb * cb, 0.0],
            [0.0, 0.0, 1.0],
        ];
        for reversed in [false, true] {
            let mut target = q.clone();
            if reversed {
                reverse(&mut target, m);
            }
            for perm in PERMUTATIONS {
                let base = permute_rotate(&q, m, &r, &perm);
                let (shift, res) = best_shift(&base, &target, m);
                let rel = res.max(0.0).sqrt() / qn;
                let el = SymmetryElement { linear, rotation: r, reversed, shift, permutation: perm, residual: rel };
                if rel < tol && !el.is_identity() {
                    out.push(el);
                }
            }
        }
    }
    out
}

/// Minimize `|shift(base, s) - target|^2` over `s` in `[0, 1)` periods.
fn best_shift(base: &[f64], target: &[f64], m: usize) -> (f64, f64) {
    let w = 2 * m + 1;
    let rows = base.len() / w;
    // <shift(base, theta), target> = c0 + sum_k a_k cos(k theta) + b_k sin(k theta)
    let mut c0 = 0.0;
    let mut a = vec![0.0; m + 1];
    let mut b = vec![0.0; m + 1];
    for r in 0..rows {
        c0 += base[r * w] * target[r * w];
        for k in 1..=m {
            let (ca, sb) = (base[r * w + k], base[r * w + m + k]);
            let (qc, qs) = (target[r * w + k], target[r * w + m + k]);
            a[k] += ca * qc + sb * qs;
            b[k] += sb * qc - ca * qs;
        }
    }
    let const_part = dot(base, base) + dot(target, target);
    let resid = |theta: f64| -> f64 {
        let mut ip = c0;
        for k in 1..=m {
            let (s, c) = (k as f64 * theta).sin_cos();
            ip += a[k] * c + b[k] * s;
        }
        const_part - 2.0 * ip
    };
    let samples = 16 * m.max(4);
    let h = 2.0 * PI / samples as f64;
    let (mut best, mut best_v) = (0.0, f64::INFINITY);
    for j in 0..samples {
        let th = j as f64 * h;
        let v = resid(th);
        if v < best_v {
            best = th;
            best_v = v;
        }
    }
    // Newton on the derivative of the inner product; the residual itself
    // loses half the digits to cancellation near its minimum
    let mut th = best;
    for _ in 0..20 {
        let (mut d1, mut d2) = (0.0, 0.0);
        for k in 1..=m {
            let kf = k as f64;
            let (s, c) = (kf * th).sin_cos();
            d1 += kf * (b[k] * c - a[k] * s);
            d2 -= kf * kf * (a[k] * c + b[k] * s);
        }
        if d2 >= 0.0 {
            break;
        }
        let step = (-d1 / d2).clamp(-h, h);
        th += step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let v = resid(th);
    let (th, v) = if v <= best_v { (th, v) } else { (best, best_v) };
    ((th / (2.0 * PI)).rem_euclid(1.0), v)
}

/// D3 when the orbit is invariant under reflections about both principal
/// axes (each possibly combined with a time operation and relabeling),
/// C3 otherwise.
pub fn symmetry_tag(o: &Orbit) -> SymmetryTag {
    tag_from(&find_symmetries(o, 1e-6))
}

pub fn tag_from(elements: &[SymmetryElement]) -> SymmetryTag {
    let has = |l: Linear| elements.iter().any(|e| e.linear == l);
    if has(Linear::ReflectX) && has(Linear::ReflectY) {
        SymmetryTag::D3
    } else {
        SymmetryTag::C3
    }
}

/// 2x2 matrix `<phi_a, g phi_b>` of an element on a pair of orthonormal
/// variations, plus the invariance defect of the pair.
pub fn representation(el: &SymmetryElement, pair: &[Vec<f64>; 2], modes: usize) -> ([[f64; 2]; 2], f64) {
    let images = [el.apply(&pair[0], modes), el.apply(&pair[1], modes)];
    let mut d = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            d[a][b] = dot(&pair[a], &images[b]);
        }
    }
    // fraction of the images leaving the span
    let mut defect: f64 = 0.0;
    for b in 0..2 {
        let inside = d[0][b].powi(2) + d[1][b].powi(2);
        defect = defect.max((dot(&images[b], &images[b]) - inside).abs());
    }
    (d, defect)
}

/// Symmetry score of a variation: the largest `<phi, g phi> / |phi|^2`
/// over the orbit's non-identity symmetries.
pub fn symmetry_score(phi: &[f64], elements: &[SymmetryElement], modes: usize) -> f64 {
    let n2 = dot(phi, phi);
    elements
        .iter()
        .map(|e| dot(phi, &e.apply(phi, modes)) / n2)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Unit vectors `(cos a, sin a)` in the pair's coordinates left invariant by
/// some element acting on the pair as a reflection.
pub fn invariant_directions(elements: &[SymmetryElement], pair: &[Vec<f64>; 2], modes: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    for el in elements {
        let (d, defect) = representation(el, pair, modes);
        if defect > 1e-6 {
            continue;
        }
        // symmetric part; a reflection has eigenvalues +1 and -1
        let (a, b, c) = (d[0][0], 0.5 * (d[0][1] + d[1][0]), d[1][1]);
        let tr = 0.5 * (a + c);
        let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
        let top = tr + disc;
        if (top - 1.0).abs() > 1e-6 || (tr - disc + 1.0).abs() > 1e-6 {
            continue;
        }
        let ang = 0.5 * (2.0 * b).atan2(a - c);
        let v = [ang.cos(), ang.sin()];
        if !out.iter().any(|u| (u[0] * v[1] - u[1] * v[0]).abs() < 1e-6) {
            out.push(v);
        }
    }
    out
}
