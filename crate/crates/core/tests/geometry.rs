use std::f64::consts::PI;
use std::sync::OnceLock;

use mflab_core::geometry::{build_mesh, extract_level_set, fill_holes, PlanarDomain, Point, TriangleMesh};
use proptest::prelude::*;

fn square_mesh() -> &'static TriangleMesh {
    static MESH: OnceLock<TriangleMesh> = OnceLock::new();
    MESH.get_or_init(|| {
        let sq = PlanarDomain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        build_mesh(&sq, 0.06, &[]).unwrap()
    })
}

/// Sum of three random plane waves, a field with several components and holes.
fn wave_field(mesh: &TriangleMesh, params: &[(f64, f64, f64)]) -> Vec<f64> {
    mesh.nodes
        .iter()
        .map(|p| params.iter().map(|&(kx, ky, ph)| (kx * p.x + ky * p.y + ph).sin()).sum())
        .collect()
}

fn wave_params() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-12.0..12.0f64, -12.0..12.0f64, 0.0..6.3f64), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn superlevel_and_sublevel_areas_partition_the_domain(params in wave_params(), t in -1.5..1.5f64) {
        let mesh = square_mesh();
        let f = wave_field(mesh, &params);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let above: f64 = extract_level_set(mesh, &f, t).iter().map(|s| s.area()).sum();
        let below: f64 = extract_level_set(mesh, &neg, -t).iter().map(|s| s.area()).sum();
        let total = mesh.total_area();
        prop_assert!(((above + below) - total).abs() <= 1e-10 * total, "{} vs {}", above + below, total);
    }

    #[test]
    fn fill_holes_is_idempotent(params in wave_params(), t in -1.0..1.0f64) {
        let mesh = square_mesh();
        let f = wave_field(mesh, &params);
        for s in extract_level_set(mesh, &f, t) {
            let once = fill_holes(&s);
            let twice = fill_holes(&once);
            prop_assert_eq!(once.n_holes(), 0);
            prop_assert_eq!(once.pieces.len(), twice.pieces.len());
            prop_assert!((once.area() - twice.area()).abs() <= 1e-12 * once.area().max(1e-300));
        }
    }

    #[test]
    fn superlevel_components_are_nested(params in wave_params(), t1 in -1.0..0.5f64, dt in 0.05..1.0f64) {
        let mesh = square_mesh();
        let f = wave_field(mesh, &params);
        let outer = extract_level_set(mesh, &f, t1);
        let inner = extract_level_set(mesh, &f, t1 + dt);
        for c in &inner {
            let tris: Vec<usize> = c.pieces.iter().map(|p| p.tri).collect();
            let hosts = outer
                .iter()
                .filter(|o| tris.iter().all(|t| o.pieces.iter().any(|p| p.tri == *t)))
                .count();
            prop_assert_eq!(hosts, 1);
        }
    }
}

#[test]
fn meshes_are_positively_oriented() {
    let disk = PlanarDomain::unit_disk();
    let mesh = build_mesh(&disk, 0.05, &[]).unwrap();
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.vertices(t);
        assert!((b - a).cross(c - a) > 0.0, "triangle {t}");
    }
    assert!(mesh.boundary_nodes.iter().all(|&i| (mesh.nodes[i].norm() - 1.0).abs() < 1e-12));
}

#[test]
fn circle_perimeter_converges_under_halving() {
    let disk = PlanarDomain::unit_disk();
    let coarse = build_mesh(&disk, 0.1, &[]).unwrap();
    let medium = coarse.refine_uniform(Some(&disk)).unwrap();
    let fine = medium.refine_uniform(Some(&disk)).unwrap();
    let errors: Vec<f64> = [coarse, medium, fine]
        .iter()
        .map(|mesh| {
            let f: Vec<f64> = mesh.nodes.iter().map(|p| 1.0 - p.dot(*p)).collect();
            let s = extract_level_set(mesh, &f, 0.75);
            assert_eq!(s.len(), 1);
            (s[0].perimeter() - PI).abs()
        })
        .collect();
    for pair in errors.windows(2) {
        assert!(pair[0] / pair[1] >= 1.8, "{errors:?}");
    }
}
