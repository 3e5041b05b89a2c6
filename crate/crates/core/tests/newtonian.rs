use std::f64::consts::TAU;

use eightfold::dynamics::{grad_u, potential_energy, Configuration, DIM};
use eightfold::seeds::{choreography_seed_with, SeedKind};
use eightfold::spectrum::time_shift_mode;
use eightfold::{solve_orbit, Orbit, Potential, SolveOptions};
use ode_solvers::dop853::Dop853;
use ode_solvers::{SVector, System};

type State = SVector<f64, 18>;

/// Newtonian three-body equations, `u = -1/r`.
struct Bodies;

impl System<f64, State> for Bodies {
    fn system(&self, _t: f64, y: &State, dy: &mut State) {
        let mut q = [0.0; DIM];
        q.copy_from_slice(&y.as_slice()[..DIM]);
        let g = grad_u(&Potential::Homogeneous { a: 1.0 }, &Configuration(q)).unwrap();
        for a in 0..DIM {
            dy[a] = y[DIM + a];
            dy[DIM + a] = -g[a];
        }
    }
}

/// States at `t = k * step`, `k = 0..=n`. The dense sample that lands on
/// the end of the interval is unreliable, so the run goes half a step past.
fn integrate(y0: State, step: f64, n: usize) -> Vec<State> {
    let mut s = Dop853::new(Bodies, 0.0, step * (n as f64 + 0.5), step, y0, 1e-14, 1e-14);
    s.integrate().unwrap();
    let (_, ys) = s.results().get();
    ys[..=n].to_vec()
}

fn state(q: &[f64; DIM], v: &[f64; DIM]) -> State {
    State::from_iterator(q.iter().chain(v).copied())
}

fn eight() -> Orbit {
    let seed = choreography_seed_with(SeedKind::FigureEightNewtonian, TAU, 48, 384).unwrap();
    let r = solve_orbit(&seed, &SolveOptions::default()).unwrap();
    assert!(r.converged && r.residual_norm < 1e-10);
    r.orbit
}

#[test]
fn solved_eight_matches_direct_integration() {
    let o = eight();
    let n = 64;
    let step = o.period / n as f64;
    let traj = integrate(state(&o.eval(0.0).0, &o.eval_velocity(0.0)), step, n);
    assert_eq!(traj.len(), n + 1);
    let size = o.positions().iter().flat_map(|c| c.0).fold(0.0f64, |m, x| m.max(x.abs()));
    for (k, y) in traj.iter().enumerate() {
        let q = o.eval(k as f64 * step).0;
        let err = q.iter().zip(y.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8 * size, "t = {}: {err:e}", k as f64 * step);
    }
}

/// Published initial conditions of the Newtonian figure-eight (G = m = 1).
fn published() -> (State, f64) {
    let (x, y) = (0.97000436, -0.24308753);
    let (vx, vy) = (-0.93240737, -0.86473146);
    let q = [x, y, 0.0, -x, -y, 0.0, 0.0, 0.0, 0.0];
    let v = [-vx / 2.0, -vy / 2.0, 0.0, -vx / 2.0, -vy / 2.0, 0.0, vx, vy, 0.0];
    (state(&q, &v), 6.32591398)
}

#[test]
fn published_conditions_close_after_one_period() {
    let (y0, t) = published();
    let traj = integrate(y0, t / 8.0, 8);
    let err = (traj.last().unwrap() - y0).amax();
    // eight significant digits in the data
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn energy_agrees_with_the_published_eight_after_rescaling() {
    let (y0, t) = published();
    let mut q = [0.0; DIM];
    q.copy_from_slice(&y0.as_slice()[..DIM]);
    let kinetic = 0.5 * y0.as_slice()[DIM..].iter().map(|v| v * v).sum::<f64>();
    let e_pub = kinetic + potential_energy(&Potential::Homogeneous { a: 1.0 }, &Configuration(q)).unwrap();
    // q -> lam q, t -> lam^(3/2) t maps solutions to solutions; E scales as 1/lam
    let lam = (TAU / t).powf(2.0 / 3.0);
    let e = eight().energies().unwrap();
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    assert!((mean - e_pub / lam).abs() < 1e-7 * mean.abs(), "{mean} vs {}", e_pub / lam);
    for x in &e {
        assert!((x - mean).abs() < 1e-10 * mean.abs());
    }
}

#[test]
fn converged_eight_is_resolution_independent() {
    let o = eight();
    let s = o.action().unwrap();
    let fine = o.resample(o.modes(), 2 * o.samples()).unwrap();
    assert!((fine.action().unwrap() - s).abs() < 1e-10 * s.abs());
    let up = o.resample(2 * o.modes(), 4 * o.samples()).unwrap();
    let r = solve_orbit(&up, &SolveOptions::default()).unwrap();
    assert!((r.orbit.action().unwrap() - s).abs() < 1e-10 * s.abs());
}

#[test]
fn solution_is_a_fixed_point_of_the_solver() {
    let o = eight();
    let r = solve_orbit(&o, &SolveOptions::default()).unwrap();
    assert!(r.iterations <= 2);
    let diff = r.orbit.coeffs().iter().zip(o.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-10, "{diff:e}");
}

#[test]
fn action_gradient_is_blind_to_time_shifts() {
    let o = eight();
    let g = o.action_gradient().unwrap();
    // pair the plain gradient with the plain coefficients of dq/dt
    let d = eightfold::hessian::to_plain(&time_shift_mode(&o), o.period, o.modes());
    let along: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(along.abs() < 1e-12 * gn.max(1.0) * dn, "{along:e}");
}
