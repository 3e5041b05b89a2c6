//! Low-lying spectrum of the Hessian operator of a periodic orbit.
//!
//! Eigenvectors are kept as orthonormal Fourier coefficients over all nine
//! coordinates (see [`crate::hessian::to_orthonormal`]), so that the
//! Euclidean dot product is `int_0^T phi . psi dt`. For planar orbits the
//! in-plane and out-of-plane blocks decouple exactly and are diagonalized
//! separately.
//!
//! Near-zero eigenpairs are post-processed: the analytic kernel generators
//! (translations, rotations, time shift) are projected onto the near-zero
//! eigenspace and split off; the remainder is re-diagonalized. Within a
//! degenerate eigenspace any orthonormal basis is an eigenbasis, so this only
//! fixes which basis is reported.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Multilinear, DIM};
use crate::error::{Error, Result};
use crate::hessian::{operator_matrix, to_orthonormal, to_plain};
use crate::orbit::{derivative_coeffs, shift_series, Orbit};
use crate::solver::{dot, kernel_generators, norm, Generator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeTag {
    Translation,
    Rotation,
    TimeShift,
    Nontrivial,
}

impl ModeTag {
    pub fn is_trivial(&self) -> bool {
        *self != ModeTag::Nontrivial
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Orthonormal coefficients, nine coordinates of `2M+1` slots.
    pub vector: Vec<f64>,
    pub tag: ModeTag,
    /// Squared norm of the projection onto choreographic variations.
    pub choreographic: f64,
    /// Lies in the in-plane block.
    pub planar: bool,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub period: f64,
    pub modes: usize,
    /// Ascending in value.
    pub pairs: Vec<EigenPair>,
    /// Indices into `pairs` of nontrivial eigenvalues grouped by degeneracy.
    pub groups: Vec<Vec<usize>>,
}

impl SpectrumReport {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn eigenfunctions(&self) -> Vec<&[f64]> {
        self.pairs.iter().map(|p| p.vector.as_slice()).collect()
    }

    pub fn trivial_tags(&self) -> Vec<ModeTag> {
        self.pairs.iter().map(|p| p.tag).collect()
    }

    pub fn trivial_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.tag.is_trivial()).count()
    }

    /// Mean eigenvalue of a group.
    pub fn group_value(&self, g: usize) -> f64 {
        let idx = &self.groups[g];
        idx.iter().map(|&i| self.pairs[i].value).sum::<f64>() / idx.len() as f64
    }

    pub fn group_vectors(&self, g: usize) -> Vec<Vec<f64>> {
        self.groups[g].iter().map(|&i| self.pairs[i].vector.clone()).collect()
    }
}

/// Spectral thresholds.
#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    /// Trivial modes need `|value| < trivial_scale * max(1, (2 pi / T)^2)`.
    pub trivial_scale: f64,
    /// Minimum squared overlap with the analytic kernel.
    pub trivial_overlap: f64,
    /// Eigenvalues closer than this are grouped as degenerate.
    pub degeneracy_tol: f64,
    /// For planar orbits, skip the out-of-plane block.
    pub in_plane_only: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { trivial_scale: 1e-6, trivial_overlap: 0.99, degeneracy_tol: 1e-6, in_plane_only: false }
    }
}

pub fn eigen_spectrum(o: &Orbit, count: usize) -> Result<SpectrumReport> {
    eigen_spectrum_with(o, count, &SpectrumOptions::default())
}

pub fn eigen_spectrum_with(o: &Orbit, count: usize, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    if count < 10 {
        return Err(Error::Usage(format!("spectrum count must be at least 10, got {count}")));
    }
    let blocks: Vec<(Vec<usize>, bool)> = if o.is_planar() {
        let mut b = vec![(vec![0, 1, 3, 4, 6, 7], true), (vec![2, 5, 8], false)];
        if opts.in_plane_only {
            b.truncate(1);
        }
        b
    } else {
        vec![((0..DIM).collect(), true)]
    };
    let threshold = opts.trivial_scale * o.omega().powi(2).max(1.0);
    let gens: Vec<(Generator, Vec<f64>)> = kernel_generators(o)
        .into_iter()
        .map(|(g, v)| (g, to_orthonormal(&v, o.period, o.modes())))
        .collect();
    let mut pairs = Vec::new();
    for (coords, planar) in &blocks {
        pairs.extend(block_spectrum(o, coords, *planar, &gens, threshold, opts)?);
    }
    // keep the `count` smallest in magnitude
    pairs.sort_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
    pairs.truncate(count);
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    for p in pairs.iter_mut() {
        p.choreographic = choreographic_overlap(&p.vector, o.period, o.modes());
    }
    let groups = group_degenerate(&pairs, opts.degeneracy_tol);
    Ok(SpectrumReport { period: o.period, modes: o.modes(), pairs, groups })
}

fn group_degenerate(pairs: &[EigenPair], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.tag.is_trivial() {
            continue;
        }
        if let Some(last) = groups.last_mut() {
            let j = *last.last().unwrap();
            if (pairs[j].value - p.value).abs() < tol {
                last.push(i);
                continue;
            }
        }
        groups.push(vec![i]);
    }
    groups
}

fn block_spectrum(
    o: &Orbit,
    coords: &[usize],
    planar: bool,
    gens: &[(Generator, Vec<f64>)],
    threshold: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<EigenPair>> {
    let w = o.width();
    let h = operator_matrix(o, coords)?;
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen(format!("non-finite eigenvalues in a block of size {n}")));
    }
    let gather = |full: &[f64]| -> Vec<f64> {
        coords.iter().flat_map(|&a| full[a * w..(a + 1) * w].iter().copied()).collect()
    };
    let scatter = |local: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; DIM * w];
        for (ia, &a) in coords.iter().enumerate() {
            full[a * w..(a + 1) * w].copy_from_slice(&local[ia * w..(ia + 1) * w]);
        }
        full
    };
    let mut out = Vec::new();
    let mut cluster: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let v = eig.eigenvectors.column(i).into_owned();
        if eig.eigenvalues[i].abs() < threshold {
            cluster.push(v);
        } else {
            out.push(EigenPair {
                value: eig.eigenvalues[i],
                vector: scatter(v.as_slice()),
                tag: ModeTag::Nontrivial,
                choreographic: 0.0,
                planar,
            });
        }
    }
    if cluster.is_empty() {
        return Ok(out);
    }
    // analytic generators inside this block, orthonormalized in order
    let mut basis: Vec<(Generator, Vec<f64>)> = Vec::new();
    for (g, v) in gens {
        let mut local = gather(v);
        let full_norm = norm(v);
        if full_norm == 0.0 || norm(&local) < 1e-9 * full_norm {
            continue;
        }
        for (_, b) in &basis {
            let d = dot(&local, b);
            local.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nrm = norm(&local);
        if nrm > 1e-9 * full_norm {
            local.iter_mut().for_each(|x| *x /= nrm);
            basis.push((*g, local));
        }
    }
    // project onto the cluster, keep those that live in it
    let project = |v: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; n];
        for c in &cluster {
            let d = dot(c.as_slice(), v);
            p.iter_mut().zip(c.iter()).for_each(|(x, y)| *x += d * y);
        }
        p
    };
    let mut trivial: Vec<(Generator, Vec<f64>)> = Vec::new();
    for (g, b) in &basis {
        let mut p = project(b);
        if dot(&p, &p) < opts.trivial_overlap {
            continue;
        }
        for (_, t) in &trivial {
            let d = dot(&p, t);
            p.iter_mut().zip(t).for_each(|(x, y)| *x -= d * y);
        }
        let nrm = norm(&p);
        if nrm < 1e-6 {
            continue;
        }
        p.iter_mut().for_each(|x| *x /= nrm);
        trivial.push((*g, p));
    }
    let rayleigh = |v: &[f64]| -> f64 {
        let hv = &h * DVector::from_column_slice(v);
        dot(v, hv.as_slice())
    };
    for (g, t) in &trivial {
        out.push(EigenPair {
            value: rayleigh(t),
            vector: scatter(t),
            tag: match g {
                Generator::Translation => ModeTag::Translation,
                Generator::Rotation => ModeTag::Rotation,
                Generator::TimeShift => ModeTag::TimeShift,
            },
            choreographic: 0.0,
            planar,
        });
    }
    // orthogonal complement of the trivial vectors inside the cluster
    let mut rest: Vec<Vec<f64>> = Vec::new();
    for c in &cluster {
        let mut v = c.as_slice().to_vec();
        for _ in 0..2 {
            for t in trivial.iter().map(|(_, t)| t).chain(rest.iter()) {
                let d = dot(&v, t);
                v.iter_mut().zip(t).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = norm(&v);
        if nrm > 1e-3 {
            v.iter_mut().for_each(|x| *x /= nrm);
            rest.push(v);
        }
        if rest.len() + trivial.len() == cluster.len() {
            break;
        }
    }
    if !rest.is_empty() {
        let k = rest.len();
        let hv: Vec<DVector<f64>> = rest.iter().map(|v| &h * DVector::from_column_slice(v)).collect();
        let small = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&rest[i], hv[j].as_slice()) + dot(&rest[j], hv[i].as_slice())));
        let se = small.symmetric_eigen();
        for i in 0..k {
            let mut v = vec![0.0; n];
            for (j, r) in rest.iter().enumerate() {
                let c = se.eigenvectors[(j, i)];
                v.iter_mut().zip(r).for_each(|(x, y)| *x += c * y);
            }
            out.push(EigenPair {
                value: se.eigenvalues[i],
                vector: scatter(&v),
                tag: ModeTag::Nontrivial,
                choreographic: 0.0,
                planar,
            });
        }
    }
    Ok(out)
}

/// Cyclic relabeling combined with a T/3 time shift: `(s phi)_i(t) = phi_{i+1}(t - T/3)`.
/// Choreographic orbits and variations are exactly its fixed points.
pub fn cyclic_shift(x: &[f64], modes: usize) -> Vec<f64> {
    let w = 2 * modes + 1;
    let mut out = vec![0.0; x.len()];
    for body in 0..3 {
        let src = (body + 1) % 3;
        for axis in 0..3 {
            let (r, s) = (3 * body + axis, 3 * src + axis);
            out[r * w..(r + 1) * w].copy_from_slice(&x[s * w..(s + 1) * w]);
        }
    }
    shift_series(&mut out, modes, -2.0 * std::f64::consts::PI / 3.0);
    out
}

/// `|P v|^2 / |v|^2` with `P = (1 + s + s^2) / 3`.
pub fn choreographic_overlap(x: &[f64], _period: f64, modes: usize) -> f64 {
    let s1 = cyclic_shift(x, modes);
    let s2 = cyclic_shift(&s1, modes);
    let p: Vec<f64> = x.iter().zip(&s1).zip(&s2).map(|((a, b), c)| (a + b + c) / 3.0).collect();
    let n = dot(x, x);
    if n == 0.0 {
        0.0
    } else {
        dot(&p, &p) / n
    }
}

/// Samples of an orthonormal-coefficient variation and its time derivative.
pub(crate) fn sample_variation(o: &Orbit, x: &[f64]) -> (Vec<[f64; DIM]>, Vec<[f64; DIM]>) {
    let plain = to_plain(x, o.period, o.modes());
    let tmp = o.with_coeffs(plain).expect("variation has orbit layout");
    (tmp.positions().into_iter().map(|c| c.0).collect(), tmp.velocities())
}

/// `int_0^T [ phidot . phidot + (phi d/dq)^2 (-U) ] dt` on the orbit's grid.
pub fn kappa_check(o: &Orbit, phi: &[f64]) -> Result<f64> {
    let (p, pd) = sample_variation(o, phi);
    let q = o.positions();
    let ml = Multilinear::new(2);
    let mut total = 0.0;
    for ((c, v), vd) in q.iter().zip(&p).zip(&pd) {
        let kin: f64 = vd.iter().map(|x| x * x).sum();
        total += kin + ml.eval(&o.potential, c, &[v, v])?;
    }
    Ok(total * o.period / o.samples() as f64)
}

/// Orthonormal coefficients of `dq/dt`, normalized.
pub fn time_shift_mode(o: &Orbit) -> Vec<f64> {
    let d = derivative_coeffs(o.coeffs(), o.modes(), o.omega());
    let mut x = to_orthonormal(&d, o.period, o.modes());
    let n = norm(&x);
    x.iter_mut().for_each(|v| *v /= n);
    x
}

/// A group of nontrivial eigenpairs followed by continuity of the eigenspace.
#[derive(Clone, Debug)]
pub struct Tracked {
    /// Mean of `values`.
    pub value: f64,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Subspace overlap with the previous eigenspace.
    pub overlap: f64,
    /// Number of eigenvalues within the degeneracy tolerance of `value`.
    pub degeneracy: usize,
}

/// The `previous.len()` nontrivial eigenpairs that overlap most with
/// `previous`.
pub fn track(report: &SpectrumReport, previous: &[Vec<f64>], degeneracy_tol: f64) -> Tracked {
    let mut scored: Vec<(f64, usize)> = report
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.tag.is_trivial())
        .map(|(i, p)| (previous.iter().map(|v| dot(v, &p.vector).powi(2)).sum::<f64>(), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(previous.len());
    scored.sort_by_key(|s| s.1);
    let values: Vec<f64> = scored.iter().map(|s| report.pairs[s.1].value).collect();
    let vectors: Vec<Vec<f64>> = scored.iter().map(|s| report.pairs[s.1].vector.clone()).collect();
    let value = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let overlap = subspace_overlap(previous, &vectors);
    let degeneracy = report
        .pairs
        .iter()
        .filter(|p| !p.tag.is_trivial() && (p.value - value).abs() < degeneracy_tol)
        .count()
        .max(1);
    Tracked { value, values, vectors, overlap, degeneracy }
}

/// Mean squared overlap `(1/|a|) sum_ij <a_i, b_j>^2` of two orthonormal sets.
pub fn subspace_overlap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += dot(x, y).powi(2);
        }
    }
    s / a.len() as f64
}
