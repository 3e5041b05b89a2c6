use eightfold::hessian::{apply_hessian, assemble_hessian};
use eightfold::seeds::{choreography_seed_with, SeedKind};
use eightfold::spectrum::time_shift_mode;
use eightfold::{eigen_spectrum, kappa_check, solve_orbit, ModeTag, Orbit, SolveOptions};

fn lj_eight() -> Orbit {
    let seed = choreography_seed_with(SeedKind::FigureEightLJHigh, 16.8, 32, 256).unwrap();
    let r = solve_orbit(&seed, &SolveOptions::default()).unwrap();
    assert!(r.converged);
    r.orbit
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn planar_eight_has_seven_tagged_zero_modes() {
    let o = lj_eight();
    let rep = eigen_spectrum(&o, 24).unwrap();
    let count = |t: ModeTag| rep.pairs.iter().filter(|p| p.tag == t).count();
    assert_eq!(rep.trivial_count(), 7);
    assert_eq!((count(ModeTag::Translation), count(ModeTag::Rotation), count(ModeTag::TimeShift)), (3, 3, 1));
    for p in rep.pairs.iter().filter(|p| p.tag.is_trivial()) {
        assert!(p.value.abs() < 1e-6, "{:?} {}", p.tag, p.value);
    }
}

#[test]
fn eigenfunctions_are_orthonormal_and_reproduce_their_eigenvalues() {
    let o = lj_eight();
    let rep = eigen_spectrum(&o, 24).unwrap();
    for (i, a) in rep.pairs.iter().enumerate() {
        for (j, b) in rep.pairs.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((dot(&a.vector, &b.vector) - expect).abs() < 1e-10, "({i},{j})");
        }
        let k = kappa_check(&o, &a.vector).unwrap();
        if a.tag.is_trivial() {
            assert!(k.abs() < 1e-6, "{:?} {k:e}", a.tag);
        } else {
            assert!((k - a.value).abs() < 1e-7 * a.value.abs(), "{} vs {k}", a.value);
            // quadratic in the mode
            let twice: Vec<f64> = a.vector.iter().map(|x| 2.0 * x).collect();
            assert!((kappa_check(&o, &twice).unwrap() - 4.0 * k).abs() < 1e-12 * k.abs().max(1.0));
        }
    }
}

#[test]
fn time_shift_is_an_exact_zero_mode() {
    let o = lj_eight();
    let hx = apply_hessian(&o, &time_shift_mode(&o)).unwrap();
    assert!(dot(&hx, &hx).sqrt() < 1e-7);
}

#[test]
fn assembled_operator_is_symmetric() {
    let o = lj_eight();
    let h = assemble_hessian(&o).unwrap();
    let asym = (&h - h.transpose()).amax();
    assert!(asym < 1e-12, "{asym:e}");
}
