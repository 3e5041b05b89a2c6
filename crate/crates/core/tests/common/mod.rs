//! Finite-difference oracles shared by the derivative tests and the
//! acceptance run. Every function returns the worst relative error it saw.
#![allow(dead_code)]

use eightfold::dynamics::{directional_derivative, grad_u, hess_u, potential_energy, Configuration, DIM};
use eightfold::seeds::{choreography_seed_with, SeedKind};
use eightfold::{Orbit, Potential};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SAMPLES: usize = 100;

pub fn potentials() -> [Potential; 3] {
    [Potential::LennardJones, Potential::Homogeneous { a: 1.0 }, Potential::Homogeneous { a: 0.7 }]
}

/// Bodies in a box, kept at pair distances in [0.9, 2.2] so that neither
/// the LJ wall nor round-off dominates.
pub fn random_configuration(rng: &mut ChaCha8Rng) -> Configuration {
    loop {
        let mut q = [0.0; DIM];
        q.iter_mut().for_each(|x| *x = rng.gen_range(-1.2..1.2));
        let c = Configuration(q);
        let ok = [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| (0.9..2.2).contains(&c.distance(i, j)));
        if ok {
            return c;
        }
    }
}

pub fn random_direction(rng: &mut ChaCha8Rng, length: f64) -> [f64; DIM] {
    let mut w = [0.0; DIM];
    w.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x *= length / n);
    w
}

fn shifted(c: &Configuration, w: &[f64; DIM], t: f64) -> Configuration {
    let mut q = c.0;
    q.iter_mut().zip(w).for_each(|(x, d)| *x += t * d);
    Configuration(q)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

/// Central difference of the potential, step 1e-5.
pub fn grad_error(p: &Potential, c: &Configuration) -> f64 {
    let h = 1e-5;
    let g = grad_u(p, c).unwrap();
    let mut fd = [0.0; DIM];
    for (a, slot) in fd.iter_mut().enumerate() {
        let mut e = [0.0; DIM];
        e[a] = 1.0;
        let up = potential_energy(p, &shifted(c, &e, h)).unwrap();
        let dn = potential_energy(p, &shifted(c, &e, -h)).unwrap();
        *slot = (up - dn) / (2.0 * h);
    }
    rel_vec(&g, &fd)
}

/// Central difference of the gradient, step 1e-5, Frobenius norm.
pub fn hess_error(p: &Potential, c: &Configuration) -> f64 {
    let h = 1e-5;
    let m = hess_u(p, c).unwrap();
    let mut exact = Vec::new();
    let mut fd = Vec::new();
    for a in 0..DIM {
        let mut e = [0.0; DIM];
        e[a] = 1.0;
        let up = grad_u(p, &shifted(c, &e, h)).unwrap();
        let dn = grad_u(p, &shifted(c, &e, -h)).unwrap();
        for b in 0..DIM {
            fd.push((up[b] - dn[b]) / (2.0 * h));
            exact.push(m[a][b]);
        }
    }
    rel_vec(&exact, &fd)
}

/// n-th derivative of `t -> -U(c + t w)` at 0 for n = 3 or 4: central
/// stencils at h, h/2, h/4 with two Richardson steps (error O(h^6)).
pub fn univariate_fd(p: &Potential, c: &Configuration, w: &[f64; DIM], n: usize, h: f64) -> f64 {
    let f = |t: f64| -potential_energy(p, &shifted(c, w, t)).unwrap();
    let d = |h: f64| match n {
        3 => (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h.powi(3)),
        4 => (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / h.powi(4),
        _ => unreachable!(),
    };
    let (d0, d1, d2) = (d(h), d(h / 2.0), d(h / 4.0));
    let (r0, r1) = ((4.0 * d1 - d0) / 3.0, (4.0 * d2 - d1) / 3.0);
    (16.0 * r1 - r0) / 15.0
}

/// Third derivative along one direction against [`univariate_fd`].
pub fn jet3_error(p: &Potential, c: &Configuration, w: &[f64; DIM]) -> f64 {
    let exact = directional_derivative(p, c, &[*w, *w, *w], 3).unwrap();
    rel(exact, univariate_fd(p, c, w, 3, 0.02))
}

/// Fourth derivative of `-U` along `v` by nested differencing: second
/// differences in `t` of the quadratic form `v . (-hess U(c + t v)) v`,
/// steps h and h/2 with one Richardson step.
pub fn quartic_along(p: &Potential, c: &Configuration, v: &[f64; DIM], h: f64) -> f64 {
    let g = |t: f64| {
        let m = hess_u(p, &shifted(c, v, t)).unwrap();
        -(0..DIM).map(|a| v[a] * (0..DIM).map(|b| m[a][b] * v[b]).sum::<f64>()).sum::<f64>()
    };
    let g0 = g(0.0);
    let d = |h: f64| (g(h) - 2.0 * g0 + g(-h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Mixed fourth derivative against the polarization identity
/// `F(w1..w4) = sum_eps eps1..eps4 Q(sum eps_i w_i) / (4! 2^4)`, with `Q`
/// from [`quartic_along`].
pub fn jet4_error(p: &Potential, c: &Configuration, ws: &[[f64; DIM]; 4]) -> f64 {
    let exact = directional_derivative(p, c, ws, 4).unwrap();
    let mut total = 0.0;
    for mask in 0..16u32 {
        let eps: Vec<f64> = (0..4).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let mut v = [0.0; DIM];
        for (e, w) in eps.iter().zip(ws) {
            v.iter_mut().zip(w).for_each(|(x, y)| *x += e * y);
        }
        total += eps.iter().product::<f64>() * quartic_along(p, c, &v, 0.0025);
    }
    rel(exact, total / 384.0)
}

/// A small LJ eight with every coefficient perturbed, so that the orbit is
/// neither stationary nor planar.
pub fn random_orbit(rng: &mut ChaCha8Rng) -> Orbit {
    let o = choreography_seed_with(SeedKind::FigureEightLJHigh, 16.8, 6, 32).unwrap();
    let c: Vec<f64> = o.coeffs().iter().map(|x| x + rng.gen_range(-0.02..0.02)).collect();
    o.with_coeffs(c).unwrap()
}

/// Coefficient-wise five-point difference of the action, step 1e-4. Errors
/// are relative to each component, floored at 1e-3 of the largest one.
pub fn action_gradient_error(o: &Orbit) -> f64 {
    let h = 1e-4;
    let g = o.action_gradient().unwrap();
    let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    for (i, gi) in g.iter().enumerate() {
        let s = |t: f64| {
            let mut c = o.coeffs().to_vec();
            c[i] += t;
            o.with_coeffs(c).unwrap().action().unwrap()
        };
        let fd = (8.0 * (s(h) - s(-h)) - (s(2.0 * h) - s(-2.0 * h))) / (12.0 * h);
        worst = worst.max((gi - fd).abs() / gi.abs().max(fd.abs()).max(1e-3 * scale));
    }
    worst
}

/// Worst errors of each oracle over [`SAMPLES`] seeded draws:
/// `[grad, hess, jet3, jet4, action_gradient]`.
pub fn oracle_sweep(seed: u64) -> [f64; 5] {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pots = potentials();
    let mut worst = [0.0f64; 5];
    for i in 0..SAMPLES {
        let p = pots[i % pots.len()];
        let c = random_configuration(&mut rng);
        let w = random_direction(&mut rng, 1.0);
        let ws = [0; 4].map(|_| random_direction(&mut rng, 0.5));
        let o = random_orbit(&mut rng);
        let errs = [grad_error(&p, &c), hess_error(&p, &c), jet3_error(&p, &c, &w), jet4_error(&p, &c, &ws), action_gradient_error(&o)];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    worst
}

/// Worst relative errors of the closed-form fold identities at `(A3, A4)`:
/// `[8 A4 kappa0 = 3 A3^2, 128 A4^3 dS0 = 9 A3^4, r_pm(kappa0) = r0, fit round trip]`.
pub fn identity_errors(a3: f64, a4: f64) -> [f64; 4] {
    use eightfold::reduction::{branch_radii, fit_a3a4, fold_prediction};
    let f = fold_prediction(a3, a4).unwrap();
    let e0 = rel(f.kappa0 * 8.0 * a4, 3.0 * a3 * a3);
    let e1 = rel(f.delta_s0 * 128.0 * a4.powi(3), 9.0 * a3.powi(4));
    let (rm, rp) = branch_radii(f.kappa0, a3, a4).unwrap();
    let e2 = rel(rm, f.r0).max(rel(rp, f.r0));
    let (b3, b4) = fit_a3a4(f.kappa0, f.delta_s0).unwrap();
    let e3 = rel(b3, a3.abs()).max(rel(b4, a4));
    [e0, e1, e2, e3]
}

/// Least-squares slope of `log |dS_- - dS_+|` against `log k` for
/// `k = 24 (kappa0 - kappa) / A4` from 1e-2 to 1e-6 of `(3 A3 / A4)^2`.
pub fn cusp_slope(a3: f64, a4: f64) -> f64 {
    use eightfold::reduction::{delta_s_pm, fold_prediction};
    let kappa0 = fold_prediction(a3, a4).unwrap().kappa0;
    let scale = (3.0 * a3 / a4).powi(2);
    let pts: Vec<(f64, f64)> = (0..=16)
        .map(|i| {
            let k = scale * 10f64.powf(-2.0 - 0.25 * i as f64);
            let (m, p) = delta_s_pm(kappa0 - k * a4 / 24.0, a3, a4).unwrap();
            (k.ln(), (m - p).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Number of critical points reported at `kappa = -kappa0/2`, `0`,
/// `+kappa0/2` (inside, at and past the bifurcation).
pub fn census(a3: f64, a4: f64) -> [usize; 3] {
    use eightfold::reduction::{fold_prediction, surface_grid};
    let kappa0 = fold_prediction(a3, a4).unwrap().kappa0;
    let extent = 2.0 * (3.0 * a3 / a4).abs();
    [0.5 * kappa0, 0.0, -0.5 * kappa0].map(|k| surface_grid(a3, a4, k, extent, 16).unwrap().critical.len())
}

/// Largest relative spread of the C3 cubic coefficient over `n` random
/// rotations of a degenerate pair.
pub fn c3_gauge_spread(o: &Orbit, pair: &[Vec<f64>], n: usize, seed: u64) -> f64 {
    use eightfold::bifurcation::rotate_pair;
    use eightfold::reduction::{a3_coefficient, a3_integrals};
    use eightfold::symmetry::SymmetryTag;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a3 = |p: &[Vec<f64>]| {
        let (x, y) = a3_integrals(o, &p[0], &p[1]).unwrap();
        a3_coefficient(x, y, SymmetryTag::C3)
    };
    let base = a3(pair);
    (0..n)
        .map(|_| rel(a3(&rotate_pair(pair, rng.gen_range(0.0..std::f64::consts::TAU))), base))
        .fold(0.0, f64::max)
}
