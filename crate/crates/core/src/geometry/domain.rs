use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{point_in_polygon, segment_distance, signed_area, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    UnitDisk,
    SimplePolygon,
}

/// A simply-connected planar domain: the unit disk or a simple polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarDomain {
    kind: DomainKind,
    vertices: Vec<Point>,
    corner_angles: Vec<f64>,
}

impl PlanarDomain {
    pub fn unit_disk() -> Self {
        Self { kind: DomainKind::UnitDisk, vertices: Vec::new(), corner_angles: Vec::new() }
    }

    /// Validates a simple polygon; clockwise input is reoriented.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry("polygon vertex is not finite".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::Geometry(format!("repeated vertex at index {i}")));
            }
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(Error::Geometry(format!(
                        "polygon is self-intersecting: edges {i} and {j} cross"
                    )));
                }
            }
        }
        let corner_angles: Vec<f64> = (0..n)
            .map(|i| {
                let prev = vertices[(i + n - 1) % n];
                let next = vertices[(i + 1) % n];
                let e_in = vertices[i] - prev;
                let e_out = next - vertices[i];
                PI - e_in.cross(e_out).atan2(e_in.dot(e_out))
            })
            .collect();
        if let Some(i) = corner_angles.iter().position(|a| (a - PI).abs() < 1e-12) {
            return Err(Error::Geometry(format!(
                "vertex {i} has a straight angle; corners must satisfy theta != pi"
            )));
        }
        Ok(Self { kind: DomainKind::SimplePolygon, vertices, corner_angles })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn corner_angles(&self) -> &[f64] {
        &self.corner_angles
    }

    /// Closed-set membership.
    pub fn contains(&self, p: Point) -> bool {
        match self.kind {
            DomainKind::UnitDisk => p.norm() <= 1.0,
            DomainKind::SimplePolygon => {
                point_in_polygon(p, &self.vertices) || self.distance_to_boundary(p) == 0.0
            }
        }
    }

    /// Membership with a margin: points closer than `margin` to the boundary are rejected.
    pub fn contains_strictly(&self, p: Point, margin: f64) -> bool {
        self.contains(p) && self.distance_to_boundary(p) > margin
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => (1.0 - p.norm()).abs(),
            DomainKind::SimplePolygon => {
                let n = self.vertices.len();
                (0..n)
                    .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self.kind {
            DomainKind::UnitDisk => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            DomainKind::SimplePolygon => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in &self.vertices {
                    lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => 2.0,
            DomainKind::SimplePolygon => {
                let mut d: f64 = 0.0;
                for a in &self.vertices {
                    for b in &self.vertices {
                        d = d.max(a.dist(*b));
                    }
                }
                d
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::UnitDisk => PI,
            DomainKind::SimplePolygon => signed_area(&self.vertices),
        }
    }

    /// A reference point: the disk center or the vertex centroid of the polygon.
    pub fn center(&self) -> Point {
        match self.kind {
            DomainKind::UnitDisk => Point::default(),
            DomainKind::SimplePolygon => {
                let n = self.vertices.len() as f64;
                let s = self.vertices.iter().fold(Point::default(), |acc, &v| acc + v);
                s * (1.0 / n)
            }
        }
    }

    /// Length of the shortest polygon edge; infinite for the disk.
    pub fn shortest_edge(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn l_shape_has_reflex_corner() {
        let d = PlanarDomain::polygon(pts(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 0.5),
            (0.5, 0.5),
            (0.5, 1.0),
            (0.0, 1.0),
        ]))
        .unwrap();
        let reflex = d.corner_angles()[3];
        assert!((reflex - 1.5 * PI).abs() < 1e-12);
        let total: f64 = d.corner_angles().iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let d = PlanarDomain::polygon(pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]))
            .unwrap();
        assert!(signed_area(d.vertices()) > 0.0);
        assert!(d.corner_angles().iter().all(|a| (a - PI / 2.0).abs() < 1e-12));
    }

    #[test]
    fn bowtie_is_rejected() {
        let r = PlanarDomain::polygon(pts(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]));
        assert!(matches!(r, Err(Error::Geometry(_))));
    }

    #[test]
    fn straight_angle_is_rejected() {
        let r = PlanarDomain::polygon(pts(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (0.0, 1.0)]));
        assert!(r.is_err());
    }
}
