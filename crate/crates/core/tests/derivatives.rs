mod common;

use eightfold::dynamics::{directional_derivative, grad_u, hess_u, potential_energy, Configuration, DIM};
use eightfold::Potential;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn finite_difference_oracles_on_random_configurations() {
    let [g, h, j3, j4, ag] = oracle_sweep(7);
    assert!(g < 1e-7, "grad_U {g:e}");
    assert!(h < 1e-6, "hess_U {h:e}");
    assert!(j3 < 1e-5, "order 3 {j3:e}");
    assert!(j4 < 1e-4, "order 4 {j4:e}");
    assert!(ag < 1e-6, "action gradient {ag:e}");
}

#[test]
fn equilateral_triangle_at_pair_minimum_is_force_free() {
    let s = 2f64.powf(1.0 / 6.0);
    let h = s * 3f64.sqrt() / 2.0;
    let c = Configuration([0.0, 0.0, 0.0, s, 0.0, 0.0, s / 2.0, h, 0.0]);
    for g in grad_u(&Potential::LennardJones, &c).unwrap() {
        assert!(g.abs() < 1e-14, "{g}");
    }
    assert!((potential_energy(&Potential::LennardJones, &c).unwrap() + 0.75).abs() < 1e-15);
}

#[test]
fn translations_are_flat_to_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_configuration(&mut rng);
    let mut tx = [0.0; DIM];
    let mut ty = [0.0; DIM];
    for b in 0..3 {
        tx[3 * b] = 1.0;
        ty[3 * b + 1] = 1.0;
    }
    let d = directional_derivative(&Potential::LennardJones, &c, &[tx, ty], 2).unwrap();
    assert!(d.abs() < 1e-12, "{d}");
    let w = random_direction(&mut rng, 1.0);
    let d = directional_derivative(&Potential::LennardJones, &c, &[tx, w, w], 3).unwrap();
    assert!(d.abs() < 1e-9, "{d}");
}

fn configuration() -> impl Strategy<Value = Configuration> {
    (any::<u64>()).prop_map(|s| random_configuration(&mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_sums_to_zero_per_axis(c in configuration(), a in 0.3f64..3.0) {
        for p in [Potential::LennardJones, Potential::Homogeneous { a }] {
            let g = grad_u(&p, &c).unwrap();
            let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for axis in 0..3 {
                let s = g[axis] + g[3 + axis] + g[6 + axis];
                prop_assert!(s.abs() <= 1e-13 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_with_translation_kernel(c in configuration(), a in 0.3f64..3.0) {
        for p in [Potential::LennardJones, Potential::Homogeneous { a }] {
            let h = hess_u(&p, &c).unwrap();
            let scale = h.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            for i in 0..DIM {
                for j in 0..DIM {
                    prop_assert_eq!(h[i][j], h[j][i]);
                }
                for axis in 0..3 {
                    let s = h[i][axis] + h[i][3 + axis] + h[i][6 + axis];
                    prop_assert!(s.abs() <= 1e-12 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn mixed_derivatives_are_symmetric_in_their_directions(s in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let c = random_configuration(&mut rng);
        let ws = [0; 4].map(|_| random_direction(&mut rng, 1.0));
        let p = Potential::LennardJones;
        let a = directional_derivative(&p, &c, &ws, 4).unwrap();
        let b = directional_derivative(&p, &c, &[ws[2], ws[0], ws[3], ws[1]], 4).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }
}
