use std::f64::consts::PI;

use mflab_core::bol::{self, BolOptions};
use mflab_core::geometry::{build_mesh, extract_level_set, PlanarDomain, Point, TriangleMesh};
use mflab_core::meanfield::{solve_mean_field, MeanFieldSolution};
use mflab_core::weights::{build_weight, Atom, AtomicMeasure, SingularWeight};
use proptest::prelude::*;

struct Case {
    mesh: TriangleMesh,
    weight: SingularWeight,
    sol: MeanFieldSolution,
}

fn case(domain: PlanarDomain, atoms: Vec<Atom>, h: f64, frac: f64) -> Case {
    let measure = AtomicMeasure::new(atoms, &domain).unwrap();
    let threshold = 8.0 * PI * (1.0 - measure.alpha_total());
    let mesh = build_mesh(&domain, h, &measure.grading_centers(domain.diameter())).unwrap();
    let weight = build_weight(&mesh, &domain, measure, None).unwrap();
    let sol = solve_mean_field(&mesh, &weight, frac * threshold, &vec![0.0; mesh.n_nodes()], 1e-11).unwrap();
    Case { mesh, weight, sol }
}

fn square() -> PlanarDomain {
    PlanarDomain::polygon(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)])
        .unwrap()
}

proptest! {
    // The Huber bound dominates the Bol bound whenever the mass is nonnegative,
    // so a passing Huber check already certifies the Bol inequality.
    #[test]
    fn huber_bound_dominates_bol_bound(mass in 0.0..200.0f64, alpha in -0.9..0.9f64) {
        let c = 4.0 * PI * (1.0 - alpha);
        let bol_rhs = 0.5 * mass * (2.0 * c - mass);
        prop_assert!(bol_rhs <= c * mass * (1.0 + 1e-15));
    }
}

#[test]
fn sweep_certificates_hold_and_huber_is_consistent() {
    let c = case(square(), vec![Atom::new(0.3, 0.4, -0.3), Atom::new(0.7, 0.6, -0.4)], 0.05, 0.7);
    let report = bol::level_set_sweep(&c.mesh, &c.weight, &c.sol, 12, BolOptions::default()).unwrap();
    assert!(report.pass, "min gap {}", report.min_gap);
    for cert in report.certificates.iter().filter(|c| c.indeterminate.is_none()) {
        assert!(cert.mass > 0.0 && cert.lhs > 0.0);
        assert!((cert.gap - (cert.lhs - cert.rhs)).abs() <= 1e-12 * cert.lhs);
        if let (Some(h), Some(pass)) = (cert.huber_rhs, cert.huber_pass) {
            assert!(pass, "huber {} vs {}", cert.lhs, h);
        }
    }
}

#[test]
fn sweep_is_deterministic() {
    let c = case(PlanarDomain::unit_disk(), vec![Atom::new(0.3, -0.2, -0.25)], 0.08, 0.5);
    let a = bol::level_set_sweep(&c.mesh, &c.weight, &c.sol, 8, BolOptions::default()).unwrap();
    let b = bol::level_set_sweep(&c.mesh, &c.weight, &c.sol, 8, BolOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rearrangement_is_equimeasurable_and_contracts_energy() {
    for c in [
        case(PlanarDomain::unit_disk(), vec![], 0.05, 0.6),
        case(square(), vec![Atom::new(0.4, 0.5, -0.3)], 0.05, 0.6),
    ] {
        let w = c.sol.to_unconstrained();
        let phi = &c.sol.u;
        assert!(phi.iter().all(|&v| v >= -1e-12));
        let r = bol::rearrange_field(&c.mesh, &c.weight, &w, phi, 40).unwrap();
        assert!(r.equimeasurability.max_defect <= 1e-6, "{}", r.equimeasurability.max_defect);
        assert!(r.equimeasurability.masses.windows(2).all(|p| p[1] <= p[0]));
        assert!(r.rearranged_energy <= r.energy * (1.0 + 1e-3), "{} vs {}", r.rearranged_energy, r.energy);
    }
}

#[test]
fn profile_starts_at_zero_and_is_monotone() {
    let c = case(square(), vec![Atom::new(0.5, 0.5, -0.2)], 0.05, 0.5);
    let w = c.sol.to_unconstrained();
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let whole = extract_level_set(&c.mesh, &w, lo);
    assert_eq!(whole.len(), 1);
    let lift = bol::harmonic_lift(&whole[0], &w).unwrap();
    let p = bol::rearrangement_profile(&c.weight, &whole[0], &lift, 30).unwrap();
    assert_eq!(p.f[0], 0.0);
    assert_eq!(p.p[0], 0.0);
    assert!(p.mu.windows(2).all(|s| s[1] >= s[0]));
    assert!(p.f.windows(2).all(|s| s[1] >= s[0]));
    let mass = bol::slice_mass(&whole[0], &c.weight, &w);
    assert!((p.total_mass - mass).abs() <= 1e-8 * mass);
    assert!(bol::monotonicity_checks(&p, 1e-3).pass);
}
