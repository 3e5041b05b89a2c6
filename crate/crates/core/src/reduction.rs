//! Quartic reduced action on the two-dimensional degenerate eigenspace,
//!
//! `S(r, theta) - S(q) = kappa/2 r^2 + A3/3! r^3 sin(3 theta) + A4/4! r^4`,
//!
//! with `(r1, r2) = r (cos theta, sin theta)` the amplitudes along the
//! orthonormal pair `(phi1, phi2)`. Closed forms for its critical points, the
//! fold, the relative-action branches and the cusp, plus the cubic coefficient
//! by quadrature over a computed orbit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::Multilinear;
use crate::error::{Error, Result};
use crate::orbit::Orbit;
use crate::spectrum::sample_variation;
use crate::symmetry::SymmetryTag;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedModel {
    pub kappa: f64,
    pub a3: f64,
    pub a4: f64,
    pub a3_0: f64,
    pub a3_1: f64,
    pub tag: SymmetryTag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPrediction {
    pub kappa0: f64,
    pub delta_s0: f64,
    pub r0: f64,
    /// Angles of the three branch directions in `[0, 2 pi)`, ascending.
    pub theta_set: [f64; 3],
}

/// `(A3_0, A3_1) = (int (phi2 d)^3 L dt, 3 int (phi1 d)(phi2 d)^2 L dt)`.
/// The kinetic term is quadratic and drops out at third order.
pub fn a3_integrals(o: &Orbit, phi1: &[f64], phi2: &[f64]) -> Result<(f64, f64)> {
    let (p1, _) = sample_variation(o, phi1);
    let (p2, _) = sample_variation(o, phi2);
    let q = o.positions();
    let ml = Multilinear::new(3);
    let (mut s0, mut s1) = (0.0, 0.0);
    for ((c, a), b) in q.iter().zip(&p1).zip(&p2) {
        s0 += ml.eval(&o.potential, c, &[b, b, b])?;
        s1 += ml.eval(&o.potential, c, &[a, b, b])?;
    }
    let w = o.period / o.samples() as f64;
    Ok((s0 * w, 3.0 * s1 * w))
}

/// Leading term `int (phi d)^4 L dt` of the fourth-order coefficient. The
/// full coefficient also needs a sum over every non-degenerate eigenpair,
/// so this value is a partial diagnostic only.
pub fn a4_leading_term(o: &Orbit, phi: &[f64]) -> Result<f64> {
    let (p, _) = sample_variation(o, phi);
    let q = o.positions();
    let ml = Multilinear::new(4);
    let mut s = 0.0;
    for (c, v) in q.iter().zip(&p) {
        s += ml.eval(&o.potential, c, &[v, v, v, v])?;
    }
    Ok(s * o.period / o.samples() as f64)
}

/// Magnitude of the cubic coefficient. For D3 the pair is assumed adapted
/// (phi1 a zero of the cubic form); the C3 combination is invariant under
/// rotations of the pair.
pub fn a3_coefficient(a3_0: f64, a3_1: f64, tag: SymmetryTag) -> f64 {
    match tag {
        SymmetryTag::D3 => a3_0.abs(),
        SymmetryTag::C3 => (a3_1 * a3_1 + 9.0 * a3_0 * a3_0).sqrt() / 3.0,
    }
}

/// Invert `kappa0 = 3 A3^2 / (8 A4)`, `dS0 = 9 A3^4 / (128 A4^3)`:
/// `kappa0^2 = 9 A3^4 / (64 A4^2) = 2 A4 dS0`, so `A4 = kappa0^2 / (2 dS0)`
/// and `A3 = sqrt(8 A4 kappa0 / 3)`.
pub fn fit_a3a4(kappa0: f64, delta_s0: f64) -> Result<(f64, f64)> {
    if !(kappa0.is_finite() && delta_s0.is_finite()) || kappa0 == 0.0 || delta_s0 == 0.0 {
        return Err(Error::Domain(format!("fold data must be finite and nonzero: kappa0={kappa0}, dS0={delta_s0}")));
    }
    let a4 = kappa0 * kappa0 / (2.0 * delta_s0);
    let a3sq = 8.0 * a4 * kappa0 / 3.0;
    if !(a3sq > 0.0) || !a4.is_finite() {
        return Err(Error::Domain(format!(
            "kappa0={kappa0} and dS0={delta_s0} must share a sign for a real A3"
        )));
    }
    Ok((a3sq.sqrt(), a4))
}

pub fn fold_prediction(a3: f64, a4: f64) -> Result<FoldPrediction> {
    if a3 == 0.0 || a4 == 0.0 || !a3.is_finite() || !a4.is_finite() {
        return Err(Error::Domain(format!("A3 and A4 must be finite and nonzero: A3={a3}, A4={a4}")));
    }
    Ok(FoldPrediction {
        kappa0: 3.0 * a3 * a3 / (8.0 * a4),
        delta_s0: 9.0 * a3.powi(4) / (128.0 * a4.powi(3)),
        r0: (3.0 * a3 / (2.0 * a4)).abs(),
        theta_set: theta_set(a3, a4),
    })
}

/// Directions with `sin(3 theta) = -sgn(A3 A4)`, where the radial roots are
/// `r_-` and `r_+` of [`branch_radii`].
pub fn theta_set(a3: f64, a4: f64) -> [f64; 3] {
    let odd = if a3 * a4 < 0.0 { 0.0 } else { 1.0 };
    let mut t = [0.0; 3];
    for (i, n) in (1..=3).enumerate() {
        t[i] = (PI / 6.0 + (2.0 * n as f64 + odd) * PI / 3.0).rem_euclid(2.0 * PI);
    }
    t.sort_by(f64::total_cmp);
    t
}

/// Radial roots along the branch directions, `r_- <= r_+`. `r_-` is
/// negative (the opposite directions) when `kappa / A4 < 0`. `None` past
/// the fold.
pub fn branch_radii(kappa: f64, a3: f64, a4: f64) -> Option<(f64, f64)> {
    let x = (3.0 * a3 / a4).abs();
    let mut disc = x * x - 24.0 * kappa / a4;
    // at the fold the two terms cancel; rounding must not split or drop the root
    if disc.abs() <= 16.0 * f64::EPSILON * x * x {
        disc = 0.0;
    }
    if !(disc >= 0.0) {
        return None;
    }
    let s = disc.sqrt();
    Some((0.5 * (x - s), 0.5 * (x + s)))
}

/// Reduced action along the branch directions at signed radius `r`.
pub fn branch_action(kappa: f64, a3: f64, a4: f64, r: f64) -> f64 {
    let r2 = r * r;
    0.5 * kappa * r2 - a3.abs() / 6.0 * a4.signum() * r2 * r + a4 / 24.0 * r2 * r2
}

/// `(dS_-, dS_+)` at `kappa`.
pub fn delta_s_pm(kappa: f64, a3: f64, a4: f64) -> Result<(f64, f64)> {
    let (rm, rp) = branch_radii(kappa, a3, a4)
        .ok_or_else(|| Error::Domain(format!("kappa={kappa} lies beyond the fold of the reduced model")))?;
    Ok((branch_action(kappa, a3, a4, rm), branch_action(kappa, a3, a4, rp)))
}

/// Expansion about the fold in `k = 24 (kappa0 - kappa) / A4 >= 0`:
/// `dS_pm = -+ |A3|/48 sgn(A4) k^(3/2) + A4/64 (9 A3^4/(2 A4^4) - 3 A3^2 k / A4^2 - k^2/6)`.
pub fn cusp_expansion(kappa: f64, a3: f64, a4: f64) -> Result<(f64, f64)> {
    if a4 == 0.0 {
        return Err(Error::Domain("A4 must be nonzero".into()));
    }
    let kappa0 = 3.0 * a3 * a3 / (8.0 * a4);
    let k = 24.0 * (kappa0 - kappa) / a4;
    if k < 0.0 {
        return Err(Error::Domain(format!("kappa={kappa} lies beyond the fold (k={k})")));
    }
    let singular = a3.abs() / 48.0 * a4.signum() * k.powf(1.5);
    let smooth =
        a4 / 64.0 * (9.0 * a3.powi(4) / (2.0 * a4.powi(4)) - 3.0 * a3 * a3 / (a4 * a4) * k - k * k / 6.0);
    Ok((smooth + singular, smooth - singular))
}

/// `dS(r1, r2)` of the quartic model.
pub fn reduced_action(kappa: f64, a3: f64, a4: f64, r1: f64, r2: f64) -> f64 {
    let rr = r1 * r1 + r2 * r2;
    // r^3 sin(3 theta) = 3 r1^2 r2 - r2^3
    0.5 * kappa * rr + a3 / 6.0 * (3.0 * r1 * r1 * r2 - r2 * r2 * r2) + a4 / 24.0 * rr * rr
}

pub fn reduced_gradient(kappa: f64, a3: f64, a4: f64, r1: f64, r2: f64) -> [f64; 2] {
    let rr = r1 * r1 + r2 * r2;
    [
        kappa * r1 + a3 * r1 * r2 + a4 / 6.0 * rr * r1,
        kappa * r2 + a3 / 2.0 * (r1 * r1 - r2 * r2) + a4 / 6.0 * rr * r2,
    ]
}

pub fn reduced_hessian(kappa: f64, a3: f64, a4: f64, r1: f64, r2: f64) -> [[f64; 2]; 2] {
    let rr = r1 * r1 + r2 * r2;
    let h11 = kappa + a3 * r2 + a4 / 6.0 * (rr + 2.0 * r1 * r1);
    let h22 = kappa - a3 * r2 + a4 / 6.0 * (rr + 2.0 * r2 * r2);
    let h12 = a3 * r1 + a4 / 3.0 * r1 * r2;
    [[h11, h12], [h12, h22]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalFamily {
    /// The unbifurcated solution at the origin.
    Center,
    /// On the `r_-` roots: reaches the origin as kappa -> 0.
    Bifurcation,
    /// On the `r_+` roots.
    Fold,
    /// The three `r_-` roots collapsed onto the origin at kappa = 0.
    MergedBifurcation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Morse {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub r1: f64,
    pub r2: f64,
    /// Signed radius along `theta`.
    pub radius: f64,
    pub theta: f64,
    pub family: CriticalFamily,
    pub morse: Morse,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    pub a3: f64,
    pub a4: f64,
    pub kappa: f64,
    /// Sample coordinates along each axis.
    pub axis: Vec<f64>,
    /// `values[i][j] = dS(axis[i], axis[j])`.
    pub values: Vec<Vec<f64>>,
    pub critical: Vec<CriticalPoint>,
}

fn classify(h: [[f64; 2]; 2], scale: f64) -> Morse {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let tol = 1e-12 * scale * scale;
    if det.abs() <= tol {
        Morse::Degenerate
    } else if det < 0.0 {
        Morse::Saddle
    } else if tr > 0.0 {
        Morse::Minimum
    } else {
        Morse::Maximum
    }
}

/// Critical points of the quartic model at `kappa`. At `kappa = 0` the
/// three bifurcation roots coincide with the center and are reported once,
/// as a single merged entry next to the center.
pub fn critical_points(kappa: f64, a3: f64, a4: f64) -> Vec<CriticalPoint> {
    let scale = kappa.abs().max(a3.abs()).max(a4.abs()).max(1e-300);
    let point = |r: f64, theta: f64, family: CriticalFamily| {
        let (s, c) = theta.sin_cos();
        let (r1, r2) = (r * c, r * s);
        CriticalPoint {
            r1,
            r2,
            radius: r,
            theta,
            family,
            morse: classify(reduced_hessian(kappa, a3, a4, r1, r2), scale),
            value: reduced_action(kappa, a3, a4, r1, r2),
        }
    };
    let mut out = vec![point(0.0, 0.0, CriticalFamily::Center)];
    if a3 == 0.0 || a4 == 0.0 {
        return out;
    }
    let Some((rm, rp)) = branch_radii(kappa, a3, a4) else {
        return out;
    };
    let thetas = theta_set(a3, a4);
    if rm == 0.0 {
        out.push(point(0.0, 0.0, CriticalFamily::MergedBifurcation));
    } else {
        for &t in &thetas {
            out.push(point(rm, t, CriticalFamily::Bifurcation));
        }
    }
    if rp != rm {
        for &t in &thetas {
            out.push(point(rp, t, CriticalFamily::Fold));
        }
    }
    out
}

pub fn surface_grid(a3: f64, a4: f64, kappa: f64, extent: f64, resolution: usize) -> Result<SurfaceGrid> {
    if resolution < 16 {
        return Err(Error::Usage(format!("surface resolution must be at least 16, got {resolution}")));
    }
    if !(extent > 0.0) {
        return Err(Error::Usage(format!("surface extent must be positive, got {extent}")));
    }
    let axis: Vec<f64> =
        (0..resolution).map(|i| -extent + 2.0 * extent * i as f64 / (resolution - 1) as f64).collect();
    let values = axis
        .iter()
        .map(|&r1| axis.iter().map(|&r2| reduced_action(kappa, a3, a4, r1, r2)).collect())
        .collect();
    Ok(SurfaceGrid { a3, a4, kappa, axis, values, critical: critical_points(kappa, a3, a4) })
}

/// `r0 = |3 A3 / (2 A4)|` and whether it lies below `threshold`.
pub fn fold_condition(a3: f64, a4: f64, threshold: f64) -> Result<(f64, bool)> {
    if a4 == 0.0 {
        return Err(Error::Domain("A4 must be nonzero".into()));
    }
    let r0 = (3.0 * a3 / (2.0 * a4)).abs();
    Ok((r0, r0 < threshold))
}

/// One row of a model relative-action table.
#[derive(Clone, Copy, Debug)]
pub struct ModelRow {
    pub kappa: f64,
    pub ds_minus: Option<f64>,
    pub ds_plus: Option<f64>,
}

/// `dS_pm` sampled at `n` evenly spaced kappa values.
pub fn model_curve(a3: f64, a4: f64, kappa_lo: f64, kappa_hi: f64, n: usize) -> Vec<ModelRow> {
    (0..n)
        .map(|i| {
            let kappa = if n == 1 { kappa_lo } else { kappa_lo + (kappa_hi - kappa_lo) * i as f64 / (n - 1) as f64 };
            match delta_s_pm(kappa, a3, a4) {
                Ok((m, p)) => ModelRow { kappa, ds_minus: Some(m), ds_plus: Some(p) },
                Err(_) => ModelRow { kappa, ds_minus: None, ds_plus: None },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_reproduces_rounded_table_inputs() {
        let (a3, a4) = fit_a3a4(6.6e-5, 3.0e-9).unwrap();
        assert!((a3 - 0.0113).abs() < 1e-4);
        assert!((a4 - 0.726).abs() < 1e-3);
        let (a3, a4) = fit_a3a4(-1.2e-2, -8.5e-6).unwrap();
        assert!((a3 - 0.52).abs() < 0.01);
        assert!((a4 + 8.47).abs() < 0.01);
    }

    #[test]
    fn fit_rejects_mixed_signs() {
        assert!(matches!(fit_a3a4(1e-3, -1e-6), Err(Error::Domain(_))));
        assert!(matches!(fit_a3a4(0.0, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_sets() {
        let t = theta_set(0.518, -8.40);
        let expect = [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI];
        for (a, b) in t.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = theta_set(0.5, 2.0);
        for th in t {
            assert!(((3.0 * th).sin() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radii_at_special_kappas() {
        let (a3, a4) = (0.011, 0.736);
        let (rm, rp) = branch_radii(0.0, a3, a4).unwrap();
        assert_eq!(rm, 0.0);
        assert!((rp - (3.0 * a3 / a4).abs()).abs() < 1e-15);
        let f = fold_prediction(a3, a4).unwrap();
        let (rm, rp) = branch_radii(f.kappa0, a3, a4).unwrap();
        assert!((rm - f.r0).abs() < 1e-9 && (rp - f.r0).abs() < 1e-9);
        assert!(branch_radii(2.0 * f.kappa0, a3, a4).is_none());
    }

    #[test]
    fn r0_examples() {
        assert!((fold_prediction(0.011, 0.736).unwrap().r0 - 0.0224).abs() < 1e-4);
        assert!((fold_prediction(0.544, -8.97).unwrap().r0 - 0.0910).abs() < 1e-4);
    }

    #[test]
    fn relative_actions_at_zero_and_fold() {
        let (a3, a4) = (0.518, -8.40);
        let (m, p) = delta_s_pm(0.0, a3, a4).unwrap();
        assert_eq!(m, 0.0);
        assert!((p + 9.0 * a3.powi(4) / (8.0 * a4.powi(3))).abs() < 1e-14);
        let f = fold_prediction(a3, a4).unwrap();
        let (m, p) = delta_s_pm(f.kappa0, a3, a4).unwrap();
        assert!((m - f.delta_s0).abs() < 1e-12 * f.delta_s0.abs());
        assert!((p - f.delta_s0).abs() < 1e-12 * f.delta_s0.abs());
    }

    #[test]
    fn cusp_tip_and_domain() {
        let (a3, a4) = (0.518, -8.40);
        let f = fold_prediction(a3, a4).unwrap();
        let (m, p) = cusp_expansion(f.kappa0, a3, a4).unwrap();
        assert_eq!(m, p);
        assert!((m - f.delta_s0).abs() < 1e-15);
        // past the fold: kappa below kappa0 < 0
        assert!(cusp_expansion(2.0 * f.kappa0, a3, a4).is_err());
    }

    #[test]
    fn census_on_both_sides() {
        let (a3, a4) = (0.518, -8.40);
        let k0 = fold_prediction(a3, a4).unwrap().kappa0;
        let pts = critical_points(0.9 * k0, a3, a4);
        assert_eq!(pts.len(), 7);
        assert_eq!(pts.iter().filter(|p| p.morse == Morse::Saddle).count(), 3);
        assert_eq!(pts.iter().filter(|p| p.morse == Morse::Maximum).count(), 4);
        assert_eq!(critical_points(0.0, a3, a4).len(), 5);
        assert_eq!(critical_points(-0.5 * k0, a3, a4).len(), 7);
        assert_eq!(critical_points(1.5 * k0, a3, a4).len(), 1);
        for p in critical_points(-0.5 * k0, a3, a4) {
            let g = reduced_gradient(-0.5 * k0, a3, a4, p.r1, p.r2);
            assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }

    #[test]
    fn fold_condition_examples() {
        assert!(fold_condition(0.011, 0.736, 0.5).unwrap().1);
        assert!(!fold_condition(0.036, 0.031, 0.5).unwrap().1);
        assert_eq!(fold_condition(0.0, 1.0, 0.5).unwrap(), (0.0, true));
        assert!(fold_condition(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn small_surface_rejected() {
        assert!(matches!(surface_grid(0.5, -8.0, 0.0, 0.1, 8), Err(Error::Usage(_))));
    }
}
