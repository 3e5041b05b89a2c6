mod common;

use eightfold::bifurcation::{locate_bifurcation, rotate_pair, select_phi2, BifurcationPoint, LocateOptions, Target};
use eightfold::pipeline::{build_family, FamilyKind, StudyOptions};
use eightfold::reduction::a3_integrals;
use eightfold::symmetry::SymmetryTag;

fn crossing(kind: FamilyKind) -> BifurcationPoint {
    let (lo, hi) = StudyOptions::for_family(kind).bracket;
    let (family, _) = build_family(kind, 32, 256).unwrap();
    locate_bifurcation(&family, lo, hi, &Target::three_fold(), &LocateOptions::default()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn c3_cubic_coefficient_ignores_the_basis() {
    let bp = crossing(FamilyKind::Cy);
    assert_eq!(bp.tag, SymmetryTag::C3);
    let spread = common::c3_gauge_spread(&bp.orbit, &bp.phi, 20, 11);
    assert!(spread < 1e-6, "{spread:e}");
}

#[test]
fn d3_selection_prefers_the_symmetric_direction() {
    let bp = crossing(FamilyKind::LjHigh);
    assert_eq!(bp.tag, SymmetryTag::D3);
    let sel = select_phi2(&bp).unwrap();
    assert!(!sel.gauge_free);
    assert!(sel.score2 >= sel.score1, "{} < {}", sel.score2, sel.score1);
    let (f, _) = a3_integrals(&bp.orbit, &sel.phi1, &sel.phi2).unwrap();
    assert!(f <= 0.0);
    // odd order: flipping phi2 flips the cubic integral
    let neg: Vec<f64> = sel.phi2.iter().map(|x| -x).collect();
    let (g, _) = a3_integrals(&bp.orbit, &sel.phi1, &neg).unwrap();
    assert!((f + g).abs() < 1e-12 * f.abs());
}

#[test]
fn rotation_keeps_the_pair_orthonormal() {
    let bp = crossing(FamilyKind::LjHigh);
    for angle in [0.1, 1.0, 2.9, -4.2] {
        let [a, b] = rotate_pair(&bp.phi, angle);
        assert!((dot(&a, &a) - 1.0).abs() < 1e-12);
        assert!((dot(&b, &b) - 1.0).abs() < 1e-12);
        assert!(dot(&a, &b).abs() < 1e-12);
    }
}
