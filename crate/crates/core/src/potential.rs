//! Pair potentials and their radial jets.
//!
//! Every potential used here is a finite sum of power laws `c * r^(-p)`, so
//! the radial derivatives are evaluated in closed form. Mixed derivatives of
//! the three-body potential go through the squared-distance jet returned by
//! [`squared_distance_jet`], which re-expands `u(r)` in `s = r^2` by truncated
//! Taylor composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair interaction `u(r)` between two unit masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// `u(r) = r^-12 - r^-6`
    LennardJones,
    /// `u(r) = -1 / (a r^a)`
    Homogeneous { a: f64 },
    /// `u(r) = 0`; free motion.
    ZeroTest,
}

/// `u(r)` and its first four radial derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl PairJet {
    fn as_array(&self) -> [f64; 5] {
        [self.value, self.d1, self.d2, self.d3, self.d4]
    }
}

impl Potential {
    pub fn homogeneous(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("homogeneous exponent must be positive, got {a}")));
        }
        Ok(Potential::Homogeneous { a })
    }

    /// Exponent of the homogeneous family, if any.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Potential::Homogeneous { a } => Some(*a),
            _ => None,
        }
    }

    pub fn with_exponent(&self, a: f64) -> Result<Self> {
        match self {
            Potential::Homogeneous { .. } => Potential::homogeneous(a),
            _ => Err(Error::Usage(format!("{self:?} has no exponent parameter"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Potential::Homogeneous { a } = self {
            Potential::homogeneous(*a)?;
        }
        Ok(())
    }

    /// Power-law terms `(c, p)` of `u(r) = sum c r^-p`.
    fn terms(&self) -> ([(f64, f64); 2], usize) {
        match *self {
            Potential::LennardJones => ([(1.0, 12.0), (-1.0, 6.0)], 2),
            Potential::Homogeneous { a } => ([(-1.0 / a, a), (0.0, 0.0)], 1),
            Potential::ZeroTest => ([(0.0, 0.0), (0.0, 0.0)], 0),
        }
    }
}

/// Radial jet of `u` at `r`.
pub fn pair_jet(p: &Potential, r: f64) -> Result<PairJet> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("pair distance must be positive and finite, got {r}")));
    }
    let (terms, n) = p.terms();
    let mut out = [0.0; 5];
    for &(c, power) in &terms[..n] {
        let base = c * r.powf(-power);
        // d^k/dr^k r^-p = (-p)(-p-1)...(-p-k+1) r^(-p-k)
        let mut factor = 1.0;
        let mut rk = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += base * factor / rk;
            factor *= -power - k as f64;
            rk *= r;
        }
    }
    Ok(PairJet { value: out[0], d1: out[1], d2: out[2], d3: out[3], d4: out[4] })
}

/// Truncated Taylor series `sum c_k e^k`, k = 0..=4.
#[derive(Clone, Copy, Debug, Default)]
struct Taylor4([f64; 5]);

impl Taylor4 {
    fn mul(&self, other: &Taylor4) -> Taylor4 {
        let mut out = [0.0; 5];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0[..5 - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Taylor4(out)
    }
}

/// Derivatives `f^(k)(s)`, k = 0..=4, of `f(s) = u(sqrt(s))` at `s = r^2`.
///
/// Composes the radial jet with `r(s0 + e) = r0 sqrt(1 + e / s0)` as truncated
/// power series.
pub fn squared_distance_jet(jet: &PairJet, r: f64) -> [f64; 5] {
    let s0 = r * r;
    // binom(1/2, k)
    const HALF_BINOM: [f64; 5] = [1.0, 0.5, -0.125, 0.0625, -0.0390625];
    let mut delta = Taylor4::default();
    let mut scale = r;
    for k in 1..5 {
        scale /= s0;
        delta.0[k] = HALF_BINOM[k] * scale;
    }
    let radial = jet.as_array();
    let mut acc = Taylor4([radial[0], 0.0, 0.0, 0.0, 0.0]);
    let mut power = Taylor4([1.0, 0.0, 0.0, 0.0, 0.0]);
    let mut fact = 1.0;
    for (m, &dm) in radial.iter().enumerate().skip(1) {
        power = power.mul(&delta);
        fact *= m as f64;
        for k in 0..5 {
            acc.0[k] += dm / fact * power.0[k];
        }
    }
    let mut out = acc.0;
    let mut fact = 1.0;
    for (k, v) in out.iter_mut().enumerate().skip(1) {
        fact *= k as f64;
        *v *= fact;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn lennard_jones_at_unit_distance() {
        let j = pair_jet(&Potential::LennardJones, 1.0).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.d1, -6.0);
        assert_eq!(j.d2, 114.0);
        assert_eq!(j.d3, -12.0 * 13.0 * 14.0 + 6.0 * 7.0 * 8.0);
    }

    #[test]
    fn lennard_jones_minimum() {
        let r = 2f64.powf(1.0 / 6.0);
        let j = pair_jet(&Potential::LennardJones, r).unwrap();
        assert!(close(j.value, -0.25, 1e-15));
        assert!(j.d1.abs() < 1e-14);
    }

    #[test]
    fn newtonian() {
        let j = pair_jet(&Potential::homogeneous(1.0).unwrap(), 2.0).unwrap();
        assert_eq!(j.value, -0.5);
        assert_eq!(j.d1, 0.25);
        assert_eq!(j.d2, -0.25);
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(pair_jet(&Potential::LennardJones, 0.0).is_err());
        assert!(pair_jet(&Potential::LennardJones, -1.0).is_err());
        assert!(pair_jet(&Potential::LennardJones, f64::NAN).is_err());
        assert!(Potential::homogeneous(0.0).is_err());
    }

    #[test]
    fn squared_jet_matches_power_rule() {
        // u = c r^-p  =>  f(s) = c s^(-p/2)
        for (pot, r) in [
            (Potential::homogeneous(0.7).unwrap(), 1.3),
            (Potential::LennardJones, 0.95),
            (Potential::LennardJones, 1.7),
        ] {
            let f = squared_distance_jet(&pair_jet(&pot, r).unwrap(), r);
            let (terms, n) = pot.terms();
            let s = r * r;
            let mut expect = [0.0; 5];
            for &(c, p) in &terms[..n] {
                let e = -p / 2.0;
                let mut factor = 1.0;
                for (k, slot) in expect.iter_mut().enumerate() {
                    *slot += c * factor * s.powf(e - k as f64);
                    factor *= e - k as f64;
                }
            }
            for k in 0..5 {
                assert!(close(f[k], expect[k], 1e-12), "k={k}: {} vs {}", f[k], expect[k]);
            }
        }
    }

    #[test]
    fn zero_test_is_flat() {
        let j = pair_jet(&Potential::ZeroTest, 0.3).unwrap();
        assert_eq!(j, PairJet::default());
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&Potential::Homogeneous { a: 1.0 }).unwrap();
        assert_eq!(s, r#"{"kind":"homogeneous","a":1.0}"#);
        let lj: Potential = serde_json::from_str(r#"{"kind":"lennard-jones"}"#).unwrap();
        assert_eq!(lj, Potential::LennardJones);
    }
}
