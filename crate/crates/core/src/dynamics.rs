//! Three-body potential energy, Lagrangian density and exact derivatives.
//!
//! Coordinates are ordered `(x1, y1, z1, x2, y2, z2, x3, y3, z3)`; masses are
//! one. For a pair `(i, j)` with separation `d = q_i - q_j` the pair term is
//! `f(|d|^2)` with `f(s) = u(sqrt(s))`, so every directional derivative
//! follows from Faa di Bruno with a quadratic inner function: only blocks of
//! size one (`2 d.e`) and two (`2 e.e'`) contribute.

use crate::error::{Error, Result};
use crate::potential::{pair_jet, squared_distance_jet, Potential};

pub const BODIES: usize = 3;
pub const DIM: usize = 9;

/// Body pairs in summation order.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Positions of the three bodies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Configuration(pub [f64; DIM]);

impl Configuration {
    pub fn body(&self, i: usize) -> [f64; 3] {
        [self.0[3 * i], self.0[3 * i + 1], self.0[3 * i + 2]]
    }

    pub fn separation(&self, i: usize, j: usize) -> [f64; 3] {
        let (a, b) = (self.body(i), self.body(j));
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        norm3(&self.separation(i, j))
    }

    pub fn min_distance(&self) -> f64 {
        PAIRS.iter().map(|&(i, j)| self.distance(i, j)).fold(f64::INFINITY, f64::min)
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Separation and squared-distance jet for one pair.
struct PairTerm {
    d: [f64; 3],
    f: [f64; 5],
}

fn pair_terms(p: &Potential, c: &Configuration) -> Result<[PairTerm; 3]> {
    let term = |(i, j): (usize, usize)| -> Result<PairTerm> {
        let d = c.separation(i, j);
        let r = norm3(&d);
        if !(r > 0.0) {
            return Err(Error::Collision { i, j, distance: r });
        }
        let jet = pair_jet(p, r)?;
        Ok(PairTerm { d, f: squared_distance_jet(&jet, r) })
    };
    Ok([term(PAIRS[0])?, term(PAIRS[1])?, term(PAIRS[2])?])
}

pub fn potential_energy(p: &Potential, c: &Configuration) -> Result<f64> {
    let mut total = 0.0;
    for &(i, j) in &PAIRS {
        let r = c.distance(i, j);
        if !(r > 0.0) {
            return Err(Error::Collision { i, j, distance: r });
        }
        total += pair_jet(p, r)?.value;
    }
    Ok(total)
}

/// `|qdot|^2 / 2 - U(q)`
pub fn lagrangian_density(p: &Potential, q: &Configuration, qdot: &[f64; DIM]) -> Result<f64> {
    let kinetic: f64 = qdot.iter().map(|v| v * v).sum::<f64>() * 0.5;
    Ok(kinetic - potential_energy(p, q)?)
}

pub fn grad_u(p: &Potential, c: &Configuration) -> Result<[f64; DIM]> {
    let terms = pair_terms(p, c)?;
    let mut g = [0.0; DIM];
    for (t, &(i, j)) in terms.iter().zip(PAIRS.iter()) {
        for a in 0..3 {
            let v = t.f[1] * (2.0 * t.d[a]);
            g[3 * i + a] += v;
            g[3 * j + a] -= v;
        }
    }
    Ok(g)
}

/// 3x3 block `d^2 f(|d|^2) / dd^2 = 4 f'' d d^T + 2 f' I` of one pair.
fn pair_block(t: &PairTerm) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let delta = if a == b { 2.0 } else { 0.0 };
            k[a][b] = t.f[2] * (2.0 * t.d[a]) * (2.0 * t.d[b]) + t.f[1] * delta;
            // mirrored, not recomputed: the product rounds differently
            k[b][a] = k[a][b];
        }
    }
    k
}

/// Pair blocks for the hot loops that assemble the Hessian operator.
pub(crate) fn pair_blocks(p: &Potential, c: &Configuration) -> Result<[[[f64; 3]; 3]; 3]> {
    let terms = pair_terms(p, c)?;
    Ok([pair_block(&terms[0]), pair_block(&terms[1]), pair_block(&terms[2])])
}

/// Symmetric 9x9 matrix of second derivatives of `U`.
pub fn hess_u(p: &Potential, c: &Configuration) -> Result<[[f64; DIM]; DIM]> {
    let blocks = pair_blocks(p, c)?;
    Ok(hess_from_blocks(&blocks))
}

pub(crate) fn hess_from_blocks(blocks: &[[[f64; 3]; 3]; 3]) -> [[f64; DIM]; DIM] {
    let mut h = [[0.0; DIM]; DIM];
    for (k, &(i, j)) in blocks.iter().zip(PAIRS.iter()) {
        for a in 0..3 {
            for b in 0..3 {
                h[3 * i + a][3 * i + b] += k[a][b];
                h[3 * j + a][3 * j + b] += k[a][b];
                h[3 * i + a][3 * j + b] -= k[a][b];
                h[3 * j + a][3 * i + b] -= k[a][b];
            }
        }
    }
    h
}

/// Set partitions of `{0..n}` into blocks of size one or two.
fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(rest: &[usize], acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(acc.clone());
            return;
        };
        acc.push(vec![first]);
        rec(tail, acc, out);
        acc.pop();
        for (k, &other) in tail.iter().enumerate() {
            let mut remaining = tail.to_vec();
            remaining.remove(k);
            acc.push(vec![first, other]);
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    rec(&idx, &mut Vec::new(), &mut out);
    out
}

/// Mixed `n`-th derivative of `-U` at `c` along `dirs` (the potential part of
/// `(phi d/dq)^n L`).
pub fn directional_derivative(
    p: &Potential,
    c: &Configuration,
    dirs: &[[f64; DIM]],
    order: usize,
) -> Result<f64> {
    if !(2..=4).contains(&order) {
        return Err(Error::Usage(format!("derivative order must be 2, 3 or 4, got {order}")));
    }
    if dirs.len() != order {
        return Err(Error::Usage(format!(
            "order {order} derivative needs {order} directions, got {}",
            dirs.len()
        )));
    }
    let terms = pair_terms(p, c)?;
    Ok(-multilinear(&terms, dirs))
}

/// Batched variant used by quadratures: precomputed partitions, no checks on
/// `dirs` length.
pub(crate) struct Multilinear {
    parts: Vec<Vec<Vec<usize>>>,
}

impl Multilinear {
    pub(crate) fn new(order: usize) -> Self {
        Multilinear { parts: partitions(order) }
    }

    /// `n`-th derivative of `-U`.
    pub(crate) fn eval(&self, p: &Potential, c: &Configuration, dirs: &[&[f64; DIM]]) -> Result<f64> {
        let terms = pair_terms(p, c)?;
        let mut total = 0.0;
        for (t, &(i, j)) in terms.iter().zip(PAIRS.iter()) {
            let e: Vec<[f64; 3]> = dirs.iter().map(|w| rel(w, i, j)).collect();
            total += pair_sum(t, &e, &self.parts);
        }
        Ok(-total)
    }
}

fn rel(w: &[f64; DIM], i: usize, j: usize) -> [f64; 3] {
    [w[3 * i] - w[3 * j], w[3 * i + 1] - w[3 * j + 1], w[3 * i + 2] - w[3 * j + 2]]
}

fn pair_sum(t: &PairTerm, e: &[[f64; 3]], parts: &[Vec<Vec<usize>>]) -> f64 {
    let mut total = 0.0;
    for part in parts {
        let mut prod = t.f[part.len()];
        for block in part {
            prod *= match block.as_slice() {
                [k] => 2.0 * dot3(&t.d, &e[*k]),
                [k, l] => 2.0 * dot3(&e[*k], &e[*l]),
                _ => unreachable!(),
            };
        }
        total += prod;
    }
    total
}

fn multilinear(terms: &[PairTerm; 3], dirs: &[[f64; DIM]]) -> f64 {
    let parts = partitions(dirs.len());
    let mut total = 0.0;
    for (t, &(i, j)) in terms.iter().zip(PAIRS.iter()) {
        let e: Vec<[f64; 3]> = dirs.iter().map(|w| rel(w, i, j)).collect();
        total += pair_sum(t, &e, &parts);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral(side: f64) -> Configuration {
        let h = side * 3f64.sqrt() / 2.0;
        Configuration([0.0, 0.0, 0.0, side, 0.0, 0.0, side / 2.0, h, 0.0])
    }

    #[test]
    fn partition_counts() {
        // telephone numbers
        assert_eq!(partitions(2).len(), 2);
        assert_eq!(partitions(3).len(), 4);
        assert_eq!(partitions(4).len(), 10);
    }

    #[test]
    fn energies() {
        let lj = Potential::LennardJones;
        // side lengths carry rounding from sqrt(3) / 2
        assert!(potential_energy(&lj, &equilateral(1.0)).unwrap().abs() < 1e-14);
        let newton = Potential::homogeneous(1.0).unwrap();
        assert!((potential_energy(&newton, &equilateral(1.0)).unwrap() + 3.0).abs() < 1e-15);
        let line = Configuration([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let expect = 2f64.powi(-12) - 2f64.powi(-6);
        assert!((potential_energy(&lj, &line).unwrap() - expect).abs() < 1e-16);
        assert!((expect + 0.015381).abs() < 1e-6);
    }

    #[test]
    fn lagrangian_examples() {
        let lj = Potential::LennardJones;
        assert!(lagrangian_density(&lj, &equilateral(1.0), &[0.0; DIM]).unwrap().abs() < 1e-14);
        let mut v = [0.0; DIM];
        v[0] = 1.0;
        v[4] = 1.0;
        let c = Configuration([0.3, 0.1, 0.0, 2.0, 0.5, 0.0, -1.0, 4.0, 1.0]);
        assert_eq!(lagrangian_density(&Potential::ZeroTest, &c, &v).unwrap(), 1.0);
        let u = potential_energy(&lj, &c).unwrap();
        assert_eq!(lagrangian_density(&lj, &c, &[0.0; DIM]).unwrap(), -u);
    }

    #[test]
    fn collisions_are_domain_errors() {
        let c = Configuration([0.0; DIM]);
        assert!(matches!(potential_energy(&Potential::LennardJones, &c), Err(Error::Collision { .. })));
        assert!(grad_u(&Potential::LennardJones, &c).is_err());
        assert!(hess_u(&Potential::LennardJones, &c).is_err());
    }

    #[test]
    fn gradient_vanishes_at_pair_minimum() {
        let c = equilateral(2f64.powf(1.0 / 6.0));
        for g in grad_u(&Potential::LennardJones, &c).unwrap() {
            assert!(g.abs() < 1e-13);
        }
    }

    #[test]
    fn usage_errors() {
        let c = equilateral(1.0);
        let w = [[1.0; DIM]; 3];
        assert!(matches!(
            directional_derivative(&Potential::LennardJones, &c, &w, 2),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            directional_derivative(&Potential::LennardJones, &c, &w[..1], 1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn second_order_reproduces_hessian() {
        let c = Configuration([0.3, 0.1, -0.2, 1.4, 0.5, 0.1, -0.6, 1.2, 0.3]);
        let p = Potential::LennardJones;
        let h = hess_u(&p, &c).unwrap();
        for a in 0..DIM {
            for b in 0..DIM {
                let mut ea = [0.0; DIM];
                let mut eb = [0.0; DIM];
                ea[a] = 1.0;
                eb[b] = 1.0;
                let d2 = directional_derivative(&p, &c, &[ea, eb], 2).unwrap();
                assert!((d2 + h[a][b]).abs() <= 1e-14 * h[a][b].abs().max(1.0), "entry ({a},{b})");
            }
        }
    }
}
