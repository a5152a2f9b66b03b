use std::f64::consts::PI;

use mflab_core::radial::{
    critical_radius, kstar, lambda_for_mass, mass_ball, psi_scaled, total_mass, u_lambda_alpha, Radius,
};
use proptest::prelude::*;

/// Radial Laplacian `U'' + U'/r` by central differences.
fn radial_laplacian(f: impl Fn(f64) -> f64, r: f64, d: f64) -> f64 {
    let (fm, f0, fp) = (f(r - d), f(r), f(r + d));
    (fp - 2.0 * f0 + fm) / (d * d) + (fp - fm) / (2.0 * d * r)
}

proptest! {
    #[test]
    fn mass_ball_is_increasing_and_bounded(
        lambda in 0.05..10.0f64,
        alpha in 0.0..0.95f64,
        r in 0.05..5.0f64,
        grow in 1.01..3.0f64,
    ) {
        let m = mass_ball(lambda, alpha, r);
        prop_assert!(mass_ball(lambda, alpha, r * grow) > m);
        prop_assert!(mass_ball(lambda * grow, alpha, r) > m);
        prop_assert!(m < total_mass(alpha));
    }

    #[test]
    fn lambda_for_mass_inverts_mass_ball(lambda in 0.01..50.0f64, alpha in 0.0..0.95f64) {
        let back = lambda_for_mass(mass_ball(lambda, alpha, 1.0), alpha).unwrap();
        prop_assert!((back - lambda).abs() <= 1e-12 * lambda, "{back} vs {lambda}");
    }

    #[test]
    fn u_solves_the_radial_liouville_equation(lambda in 0.2..4.0f64, alpha in 0.0..0.9f64, r in 0.2..3.0f64) {
        let u = |s: f64| u_lambda_alpha(lambda, alpha, s);
        let lap = radial_laplacian(u, r, 1e-4);
        let source = r.powf(-2.0 * alpha) * u(r).exp();
        prop_assert!((lap + source).abs() <= 1e-6 * source.max(1.0), "{lap} + {source}");
    }

    #[test]
    fn psi_is_a_zero_mode(lambda in 0.2..4.0f64, alpha in 0.0..0.9f64, r in 0.2..3.0f64) {
        let psi = |s: f64| psi_scaled(lambda, alpha, s);
        let lap = radial_laplacian(psi, r, 1e-4);
        let potential = r.powf(-2.0 * alpha) * u_lambda_alpha(lambda, alpha, r).exp();
        prop_assert!((lap + potential * psi(r)).abs() <= 1e-6 * potential.max(1.0));
    }
}

#[test]
fn anchor_mass_is_four_pi() {
    assert!((mass_ball(1.0, 0.0, 8f64.sqrt()) - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn kstar_decreases_along_a_radius_ladder() {
    for alpha in [0.0, 0.3, 0.6] {
        let rc = critical_radius(alpha);
        let mut values: Vec<f64> = [1.2, 1.5, 2.0, 4.0, 8.0, 32.0]
            .iter()
            .map(|&f| kstar(alpha, Radius::Finite(f * rc), 2000).unwrap().kstar_value)
            .collect();
        values.push(kstar(alpha, Radius::Infinite, 2000).unwrap().kstar_value);
        assert!(values.windows(2).all(|p| p[1] <= p[0] + 1e-12), "alpha {alpha}: {values:?}");
        assert!((values.last().unwrap() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn minimizer_satisfies_constraints_with_one_sign_change() {
    for alpha in [0.0, 0.45] {
        for r0 in [Radius::Finite(2.0 * critical_radius(alpha)), Radius::Infinite] {
            let s = kstar(alpha, r0, 2000).unwrap();
            assert!(s.weighted_mean.abs() <= 1e-10, "{}", s.weighted_mean);
            assert!((s.weighted_norm_sq - 1.0).abs() <= 1e-10, "{}", s.weighted_norm_sq);
            assert_eq!(s.sign_changes, 1);
        }
    }
}
