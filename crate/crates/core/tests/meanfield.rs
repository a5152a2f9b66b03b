use std::f64::consts::PI;

use mflab_core::geometry::{build_mesh, PlanarDomain, Point};
use mflab_core::meanfield::{continue_branch, solve_mean_field, MeanFieldProblem, NewtonOptions};
use mflab_core::radial::disk_solution_exact;
use mflab_core::weights::{build_weight, Atom, AtomicMeasure};
use mflab_core::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn solutions_are_normalized_and_vanish_on_the_boundary(
        x in 0.2..0.8f64,
        y in 0.2..0.8f64,
        alpha in -0.6..0.6f64,
        frac in 0.05..0.9f64,
    ) {
        let sq = PlanarDomain::polygon(vec![
            Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0),
        ]).unwrap();
        let measure = AtomicMeasure::new(vec![Atom::new(x, y, alpha)], &sq).unwrap();
        let threshold = 8.0 * PI * (1.0 - measure.alpha_total());
        let mesh = build_mesh(&sq, 0.08, &measure.grading_centers(sq.diameter())).unwrap();
        let weight = build_weight(&mesh, &sq, measure, None).unwrap();
        let rho = frac * threshold;
        let sol = solve_mean_field(&mesh, &weight, rho, &vec![0.0; mesh.n_nodes()], 1e-10).unwrap();
        let w = sol.to_unconstrained();
        let mass = weight.integrate(|t, b| mesh.interpolate(&w, t, b).exp());
        prop_assert!((mass - rho).abs() <= 1e-12 * rho, "mass {mass} rho {rho}");
        prop_assert!(mesh.boundary_nodes.iter().all(|&i| sol.u[i] == 0.0));
        prop_assert!(sol.residual_norm < sol.tol);
    }
}

#[test]
fn origin_atom_gives_radial_solution() {
    let disk = PlanarDomain::unit_disk();
    let measure = AtomicMeasure::new(vec![Atom::new(0.0, 0.0, -0.3)], &disk).unwrap();
    let mesh = build_mesh(&disk, 0.05, &measure.grading_centers(2.0)).unwrap();
    let weight = build_weight(&mesh, &disk, measure, None).unwrap();
    let rho = 10.0;
    let sol = solve_mean_field(&mesh, &weight, rho, &vec![0.0; mesh.n_nodes()], 1e-10).unwrap();
    let exact = disk_solution_exact(rho, 0.3).unwrap();
    let fem_error = mesh.nodes.iter().zip(&sol.u).map(|(x, u)| (u - exact.eval(x.norm())).abs()).fold(0.0, f64::max);
    // Pair nodes by distance to the boundary and compare values.
    let mut by_radius: Vec<(f64, f64)> = mesh.nodes.iter().zip(&sol.u).map(|(x, &u)| (x.norm(), u)).collect();
    by_radius.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut asym: f64 = 0.0;
    for pair in by_radius.windows(2) {
        if (pair[1].0 - pair[0].0).abs() < 1e-9 {
            asym = asym.max((pair[1].1 - pair[0].1).abs());
        }
    }
    assert!(asym <= 5.0 * fem_error, "asymmetry {asym}, fem error {fem_error}");
}

#[test]
fn disk_error_decays_under_halving() {
    let disk = PlanarDomain::unit_disk();
    let rho = 6.0;
    let exact = disk_solution_exact(rho, 0.0).unwrap();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let mesh = build_mesh(&disk, h, &[]).unwrap();
            let weight = build_weight(&mesh, &disk, AtomicMeasure::empty(), None).unwrap();
            let sol = solve_mean_field(&mesh, &weight, rho, &vec![0.0; mesh.n_nodes()], 1e-11).unwrap();
            mesh.nodes.iter().zip(&sol.u).map(|(x, u)| (u - exact.eval(x.norm())).abs()).fold(0.0, f64::max)
        })
        .collect();
    for pair in errors.windows(2) {
        assert!((pair[0] / pair[1]).log2() >= 1.5, "{errors:?}");
    }
}

#[test]
fn branch_max_is_increasing_on_the_disk_model() {
    let disk = PlanarDomain::unit_disk();
    let measure = AtomicMeasure::new(vec![Atom::new(0.0, 0.0, -0.5)], &disk).unwrap();
    let mesh = build_mesh(&disk, 0.08, &measure.grading_centers(2.0)).unwrap();
    let weight = build_weight(&mesh, &disk, measure, None).unwrap();
    let problem = MeanFieldProblem::new(&mesh, &weight).unwrap();
    let branch = continue_branch(&problem, 0.9 * 4.0 * PI, 10, NewtonOptions::default()).unwrap();
    assert!(branch.truncated.is_none());
    let max_w: Vec<f64> =
        branch.samples.iter().map(|s| s.solution.to_unconstrained().into_iter().fold(f64::MIN, f64::max)).collect();
    assert!(branch.samples.windows(2).all(|p| p[0].rho < p[1].rho));
    assert!(max_w.windows(2).all(|p| p[0] < p[1]), "{max_w:?}");
}

#[test]
fn branch_target_is_clamped_to_the_threshold() {
    let disk = PlanarDomain::unit_disk();
    let mesh = build_mesh(&disk, 0.15, &[]).unwrap();
    let weight = build_weight(&mesh, &disk, AtomicMeasure::empty(), None).unwrap();
    let problem = MeanFieldProblem::new(&mesh, &weight).unwrap();
    let branch = continue_branch(&problem, 10.0 * PI, 4, NewtonOptions::default()).unwrap();
    assert_eq!(branch.rho_max, 8.0 * PI);
    assert!(branch.samples.iter().all(|s| s.rho <= 8.0 * PI));
    assert!(!branch.warnings.is_empty());
}

#[test]
fn newton_reports_nonconvergence() {
    let disk = PlanarDomain::unit_disk();
    let mesh = build_mesh(&disk, 0.15, &[]).unwrap();
    let weight = build_weight(&mesh, &disk, AtomicMeasure::empty(), None).unwrap();
    let problem = MeanFieldProblem::new(&mesh, &weight).unwrap();
    let opts = NewtonOptions { max_iter: 1, tol: 1e-14, ..Default::default() };
    let start: Vec<f64> = mesh.nodes.iter().map(|p| 30.0 * (1.0 - p.dot(*p))).collect();
    match problem.solve(20.0, &start, opts) {
        Err(Error::NonConvergence { iterations, last_iterate, .. }) => {
            assert_eq!(iterations, 1);
            assert_eq!(last_iterate.len(), mesh.n_nodes());
        }
        other => panic!("expected nonconvergence, got {other:?}"),
    }
}
