//! Initial guesses for figure-eight choreographies.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::orbit::Orbit;
use crate::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    /// Figure-eight under `u = -1/r`.
    FigureEightNewtonian,
    /// Lennard-Jones figure-eight with the higher action.
    FigureEightLJHigh,
    /// Lennard-Jones figure-eight with the lower action.
    FigureEightLJLow,
}

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_SAMPLES: usize = 512;

/// Lissajous figure-eight `x = A sin(wt), y = B sin(2wt)` traversed by three
/// bodies a third of a period apart.
pub fn lissajous_eight(
    potential: Potential,
    period: f64,
    width: f64,
    height: f64,
    modes: usize,
    samples: usize,
) -> Result<Orbit> {
    let mut o = Orbit::zeros(potential, period, modes, samples)?;
    let w = o.width();
    let c = o.coeffs_mut();
    for body in 0..3 {
        // q_body(t) = q_0(t + body T / 3)
        for (k, amp, axis) in [(1usize, width, 0usize), (2, height, 1)] {
            let phi = 2.0 * std::f64::consts::PI * (k * body) as f64 / 3.0;
            let row = 3 * body + axis;
            c[row * w + k] = amp * phi.sin();
            c[row * w + modes + k] = amp * phi.cos();
        }
    }
    Ok(o)
}

pub fn choreography_seed(kind: SeedKind, period: f64) -> Result<Orbit> {
    choreography_seed_with(kind, period, DEFAULT_MODES, DEFAULT_SAMPLES)
}

pub fn choreography_seed_with(kind: SeedKind, period: f64, modes: usize, samples: usize) -> Result<Orbit> {
    match kind {
        SeedKind::FigureEightNewtonian => {
            // size ~ T^(2/3) under the Newtonian scaling
            let s = (period / (2.0 * std::f64::consts::PI)).powf(2.0 / 3.0);
            lissajous_eight(Potential::homogeneous(1.0)?, period, 1.08 * s, 0.34 * s, modes, samples)
        }
        SeedKind::FigureEightLJHigh => {
            let (a, b) = lj_seed_shape(period, true);
            lissajous_eight(Potential::LennardJones, period, a, b, modes, samples)
        }
        SeedKind::FigureEightLJLow => {
            let (a, b) = lj_seed_shape(period, false);
            lissajous_eight(Potential::LennardJones, period, a, b, modes, samples)
        }
    }
}

/// Lissajous amplitudes that land on each Lennard-Jones branch for
/// `14.6 <= T <= 18`. The high-action orbit is narrower and passes closer to
/// the collision core.
fn lj_seed_shape(_period: f64, high: bool) -> (f64, f64) {
    if high {
        (2.0, 0.66)
    } else {
        (2.4, 0.8)
    }
}
