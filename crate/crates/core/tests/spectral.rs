use std::f64::consts::PI;

use mflab_core::eigen::EigenOptions;
use mflab_core::geometry::{build_mesh, PlanarDomain, Point, TriangleMesh};
use mflab_core::meanfield::solve_mean_field;
use mflab_core::spectral::{assemble_linearized, nodal_domains, solve_constrained_eigs, solve_dirichlet_eigs};
use mflab_core::weights::{build_weight, Atom, AtomicMeasure, SingularWeight};

fn weighted_dot(mesh: &TriangleMesh, weight: &SingularWeight, w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    weight.integrate(|t, q| mesh.interpolate(w, t, q).exp() * mesh.interpolate(a, t, q) * mesh.interpolate(b, t, q))
}

fn dirichlet_energy(mesh: &TriangleMesh, a: &[f64]) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let g = mesh.gradients(t);
            let [i, j, k] = mesh.triangles[t];
            let grad = g[0] * a[i] + g[1] * a[j] + g[2] * a[k];
            mesh.area(t) * grad.dot(grad)
        })
        .sum()
}

struct Model {
    mesh: TriangleMesh,
    weight: SingularWeight,
    w: Vec<f64>,
}

fn model(atoms: Vec<Atom>, domain: PlanarDomain, h: f64, rho: f64) -> Model {
    let measure = AtomicMeasure::new(atoms, &domain).unwrap();
    let mesh = build_mesh(&domain, h, &measure.grading_centers(domain.diameter())).unwrap();
    let weight = build_weight(&mesh, &domain, measure, None).unwrap();
    let sol = solve_mean_field(&mesh, &weight, rho, &vec![0.0; mesh.n_nodes()], 1e-11).unwrap();
    let w = sol.to_unconstrained();
    Model { mesh, weight, w }
}

fn unit_square() -> PlanarDomain {
    PlanarDomain::polygon(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)])
        .unwrap()
}

#[test]
fn eigenfunctions_are_weighted_orthogonal() {
    let m = model(vec![Atom::new(0.3, 0.4, -0.3), Atom::new(0.7, 0.6, -0.4)], unit_square(), 0.05, 5.0);
    let sys = assemble_linearized(&m.mesh, &m.weight, &m.w).unwrap();
    for report in [
        solve_dirichlet_eigs(&m.mesh, &sys, 4, EigenOptions::default()).unwrap(),
        solve_constrained_eigs(&m.mesh, &sys, 4, EigenOptions::default()).unwrap(),
    ] {
        let v = &report.vectors;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let cos = weighted_dot(&m.mesh, &m.weight, &m.w, &v[i], &v[j])
                    / (weighted_dot(&m.mesh, &m.weight, &m.w, &v[i], &v[i])
                        * weighted_dot(&m.mesh, &m.weight, &m.w, &v[j], &v[j]))
                    .sqrt();
                assert!(cos.abs() <= 1e-8, "{:?} pair ({i},{j}): {cos}", report.problem);
            }
        }
        assert!(report.eigs.windows(2).all(|p| p[0].nu <= p[1].nu));
    }
}

#[test]
fn shifted_eigenvalue_matches_rayleigh_quotient() {
    let m = model(vec![Atom::new(0.0, 0.0, -0.5)], PlanarDomain::unit_disk(), 0.06, 8.0);
    let sys = assemble_linearized(&m.mesh, &m.weight, &m.w).unwrap();
    let report = solve_dirichlet_eigs(&m.mesh, &sys, 3, EigenOptions::default()).unwrap();
    for (e, phi) in report.eigs.iter().zip(&report.vectors) {
        let weighted = weighted_dot(&m.mesh, &m.weight, &m.w, phi, phi);
        let quotient = (dirichlet_energy(&m.mesh, phi) - weighted) / weighted;
        assert!((quotient - e.nu_hat).abs() <= 1e-8 * e.nu.abs().max(1.0), "{quotient} vs {}", e.nu_hat);
    }
}

#[test]
fn constrained_eigenfunctions_have_zero_weighted_mean() {
    let m = model(vec![Atom::new(0.2, -0.1, -0.4)], PlanarDomain::unit_disk(), 0.06, 12.0);
    let sys = assemble_linearized(&m.mesh, &m.weight, &m.w).unwrap();
    let report = solve_constrained_eigs(&m.mesh, &sys, 2, EigenOptions::default()).unwrap();
    let ones = vec![1.0; m.mesh.n_nodes()];
    for (e, phi) in report.eigs.iter().zip(&report.vectors) {
        let mean = weighted_dot(&m.mesh, &m.weight, &m.w, phi, &ones);
        let scale = weighted_dot(&m.mesh, &m.weight, &m.w, phi, phi).sqrt() * sys.total_mass.sqrt();
        assert!(mean.abs() <= 1e-10 * scale, "{mean}");
        let c0 = e.c0.unwrap();
        assert!(m.mesh.boundary_nodes.iter().all(|&i| (phi[i] - c0).abs() <= 1e-12 * c0.abs().max(1.0)));
    }
}

#[test]
fn radial_model_second_eigenfunction_has_a_crossing_nodal_line() {
    let alpha = 0.5;
    let threshold = 8.0 * PI * (1.0 - alpha);
    let m = model(vec![Atom::new(0.0, 0.0, -alpha)], PlanarDomain::unit_disk(), 0.05, 0.3 * threshold);
    let sys = assemble_linearized(&m.mesh, &m.weight, &m.w).unwrap();
    let report = solve_dirichlet_eigs(&m.mesh, &sys, 2, EigenOptions::default()).unwrap();
    assert_eq!(report.eigs[0].nodal_domains, 1);
    let phi = &report.vectors[1];
    let domains = nodal_domains(&m.mesh, phi);
    assert_eq!((domains.count, domains.positive, domains.negative), (2, 1, 1));
    // Both domains reach the boundary.
    let mut touches = [false, false];
    for t in 0..m.mesh.n_triangles() {
        if let Some(sign) = domains.signs[t] {
            if m.mesh.triangles[t].iter().any(|&i| m.mesh.is_boundary(i)) {
                touches[sign as usize] = true;
            }
        }
    }
    assert_eq!(touches, [true, true]);
}

#[test]
fn eigenvalues_do_not_increase_under_nested_refinement() {
    // A linear w is reproduced exactly on every refinement, so the discrete
    // spaces are nested and the Rayleigh-Ritz values can only decrease.
    let sq = unit_square();
    let coarse = build_mesh(&sq, 0.1, &[]).unwrap();
    let fine = coarse.refine_uniform(Some(&sq)).unwrap();
    let finer = fine.refine_uniform(Some(&sq)).unwrap();
    let values: Vec<Vec<f64>> = [coarse, fine, finer]
        .iter()
        .map(|mesh| {
            let weight = build_weight(mesh, &sq, AtomicMeasure::empty(), None).unwrap();
            let w: Vec<f64> = mesh.nodes.iter().map(|p| 0.5 * p.x - 0.3 * p.y).collect();
            let sys = assemble_linearized(mesh, &weight, &w).unwrap();
            let r = solve_dirichlet_eigs(mesh, &sys, 3, EigenOptions::default()).unwrap();
            r.eigs.iter().map(|e| e.nu).collect()
        })
        .collect();
    for pair in values.windows(2) {
        for (fine, coarse) in pair[1].iter().zip(&pair[0]) {
            assert!(*fine <= coarse * (1.0 + 1e-9), "{values:?}");
        }
    }
}
