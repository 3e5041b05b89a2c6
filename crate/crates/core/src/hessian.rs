//! Second variation of the discretized action in the Fourier basis.
//!
//! The kinetic part is diagonal. The potential part couples modes through the
//! sampled 9x9 blocks `hess U(q(t_j))`: with `C_m, S_m` the (T/N)-weighted
//! cosine and sine sums of one block entry, products of basis functions reduce
//! to `(C_{k-l} +- C_{k+l}) / 2` and `(S_{l+k} + S_{l-k}) / 2`, which equals
//! the rectangle-rule quadrature exactly.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{hess_from_blocks, pair_blocks, DIM};
use crate::error::Result;
use crate::orbit::{Grid, Orbit};

/// Scale from plain to orthonormal coefficients: `x = scale * c`, so that
/// `int_0^T phi . psi dt` is the Euclidean dot product of `x` vectors.
pub fn orthonormal_scale(period: f64, modes: usize) -> Vec<f64> {
    let w = 2 * modes + 1;
    (0..w).map(|b| if b == 0 { period.sqrt() } else { (period / 2.0).sqrt() }).collect()
}

/// Map a full 9-coordinate plain coefficient vector to orthonormal form.
pub fn to_orthonormal(c: &[f64], period: f64, modes: usize) -> Vec<f64> {
    let s = orthonormal_scale(period, modes);
    let w = s.len();
    c.iter().enumerate().map(|(i, v)| v * s[i % w]).collect()
}

pub fn to_plain(x: &[f64], period: f64, modes: usize) -> Vec<f64> {
    let s = orthonormal_scale(period, modes);
    let w = s.len();
    x.iter().enumerate().map(|(i, v)| v / s[i % w]).collect()
}

/// Sampled `hess U` at every grid point.
fn sampled_hessians(o: &Orbit, grid: &Grid) -> Result<Vec<[[f64; DIM]; DIM]>> {
    o.positions_on(grid)
        .iter()
        .map(|c| Ok(hess_from_blocks(&pair_blocks(&o.potential, c)?)))
        .collect()
}

/// Hessian of [`Orbit::action`] with respect to the plain coefficients of the
/// listed coordinates (rows ordered coordinate-major).
pub(crate) fn action_hessian(o: &Orbit, coords: &[usize], grid: &Grid) -> Result<DMatrix<f64>> {
    let hs = sampled_hessians(o, grid)?;
    let m = o.modes();
    let w = o.width();
    let n = o.samples();
    let t = o.period;
    let omega = o.omega();
    let nc = coords.len();
    let mut h = DMatrix::<f64>::zeros(nc * w, nc * w);
    let kmax = 2 * m;
    let mut cs = vec![0.0; kmax + 1];
    let mut ss = vec![0.0; kmax + 1];
    let weight = t / n as f64;
    for (ia, &a) in coords.iter().enumerate() {
        for (ib, &b) in coords.iter().enumerate().skip(ia) {
            if hs.iter().all(|h| h[a][b] == 0.0) {
                continue;
            }
            cs.iter_mut().for_each(|v| *v = 0.0);
            ss.iter_mut().for_each(|v| *v = 0.0);
            for (j, hj) in hs.iter().enumerate() {
                let v = hj[a][b] * weight;
                for k in 0..=kmax {
                    cs[k] += v * grid.cos(j, k);
                    ss[k] += v * grid.sin(j, k);
                }
            }
            let sgn_s = |d: isize| -> f64 {
                if d >= 0 {
                    ss[d as usize]
                } else {
                    -ss[(-d) as usize]
                }
            };
            for k in 0..=m {
                for l in 0..=m {
                    // cos k . cos l
                    let cc = 0.5 * (cs[k.abs_diff(l)] + cs[k + l]);
                    set_sym(&mut h, ia * w + k, ib * w + l, -cc);
                }
            }
            for k in 1..=m {
                for l in 1..=m {
                    let sv = 0.5 * (cs[k.abs_diff(l)] - cs[k + l]);
                    set_sym(&mut h, ia * w + m + k, ib * w + m + l, -sv);
                }
            }
            for k in 0..=m {
                for l in 1..=m {
                    // cos k (coordinate a) . sin l (coordinate b)
                    let cv = 0.5 * (ss[l + k] + sgn_s(l as isize - k as isize));
                    set_sym(&mut h, ia * w + k, ib * w + m + l, -cv);
                }
            }
            if ia != ib {
                for k in 1..=m {
                    for l in 0..=m {
                        // sin k (a) . cos l (b)
                        let cv = 0.5 * (ss[k + l] + sgn_s(k as isize - l as isize));
                        set_sym(&mut h, ia * w + m + k, ib * w + l, -cv);
                    }
                }
            }
        }
        for k in 1..=m {
            let kin = 0.5 * t * (k as f64 * omega).powi(2);
            h[(ia * w + k, ia * w + k)] += kin;
            h[(ia * w + m + k, ia * w + m + k)] += kin;
        }
    }
    Ok(h)
}

#[inline]
fn set_sym(h: &mut DMatrix<f64>, r: usize, c: usize, v: f64) {
    h[(r, c)] = v;
    h[(c, r)] = v;
}

/// Matrix of the Hessian operator `H = -d^2/dt^2 - hess U(q(t))` in the
/// orthonormal Fourier basis of the listed coordinates. Symmetric by
/// construction; its eigenvectors are normalized so that
/// `int_0^T phi_i . phi_j dt = delta_ij`.
pub fn operator_matrix(o: &Orbit, coords: &[usize]) -> Result<DMatrix<f64>> {
    let grid = o.grid();
    let mut h = action_hessian(o, coords, &grid)?;
    let s = orthonormal_scale(o.period, o.modes());
    let w = s.len();
    let n = h.nrows();
    for r in 0..n {
        for c in 0..n {
            h[(r, c)] /= s[r % w] * s[c % w];
        }
    }
    Ok(h)
}

/// Full 9-coordinate operator matrix.
pub fn assemble_hessian(o: &Orbit) -> Result<DMatrix<f64>> {
    let coords: Vec<usize> = (0..DIM).collect();
    operator_matrix(o, &coords)
}

/// Apply the full operator to an orthonormal coefficient vector.
pub fn apply_hessian(o: &Orbit, x: &[f64]) -> Result<Vec<f64>> {
    let h = assemble_hessian(o)?;
    let v = &h * DVector::from_column_slice(x);
    Ok(v.as_slice().to_vec())
}
