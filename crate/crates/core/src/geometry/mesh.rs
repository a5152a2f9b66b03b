use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{DomainKind, PlanarDomain, Point};
use crate::error::{Error, Result};

/// Node spacing as a fraction of the target element diameter.
const SPACING: f64 = 0.7;

/// Local refinement around a point: element size behaves like
/// `h_max * d^exponent` for `floor <= d <= 1`, so `exponent = 0` means no
/// grading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradingCenter {
    pub point: Point,
    pub exponent: f64,
    /// Radius below which the size stops shrinking.
    pub floor: f64,
}

impl GradingCenter {
    pub fn new(point: Point, exponent: f64, floor: f64) -> Self {
        Self { point, exponent, floor }
    }

    fn size(&self, h_max: f64, x: Point) -> f64 {
        let d = x.dist(self.point).max(self.floor).min(1.0);
        h_max * d.powf(self.exponent)
    }
}

/// Conforming triangulation with cached adjacency.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_nodes: Vec<usize>,
    pub grading_centers: Vec<GradingCenter>,
    pub h_max: f64,
    is_boundary: Vec<bool>,
    /// `neighbors[t][k]` is the triangle across the edge opposite local vertex `k`.
    neighbors: Vec<[Option<usize>; 3]>,
    /// Boundary edges oriented with the domain on their left.
    boundary_edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeshQuality {
    pub nodes: usize,
    pub triangles: usize,
    pub min_angle_deg: f64,
    pub max_diameter: f64,
    pub min_area: f64,
}

impl TriangleMesh {
    /// Builds the adjacency data and checks orientation and conformity.
    pub fn from_parts(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        grading_centers: Vec<GradingCenter>,
        h_max: f64,
    ) -> Result<Self> {
        let n = nodes.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::Geometry(format!("triangle {t} references a missing node")));
            }
            let a = (nodes[tri[1]] - nodes[tri[0]]).cross(nodes[tri[2]] - nodes[tri[0]]);
            if !(a > 0.0) {
                return Err(Error::Geometry(format!(
                    "triangle {t} is not positively oriented (twice area {a:e})"
                )));
            }
        }
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut neighbors = vec![[None; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_owner.remove(&key) {
                    Some((s, l)) => {
                        if neighbors[s][l].is_some() {
                            return Err(Error::Geometry(format!("edge {key:?} is shared by more than two triangles")));
                        }
                        neighbors[s][l] = Some(t);
                        neighbors[t][k] = Some(s);
                    }
                    None => {
                        if neighbors[t][k].is_none() {
                            edge_owner.insert(key, (t, k));
                        }
                    }
                }
            }
        }
        let mut is_boundary = vec![false; n];
        let mut boundary_edges = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                if neighbors[t][k].is_none() {
                    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    is_boundary[a] = true;
                    is_boundary[b] = true;
                    boundary_edges.push([a, b]);
                }
            }
        }
        let boundary_nodes = (0..n).filter(|&i| is_boundary[i]).collect();
        Ok(Self {
            nodes,
            triangles,
            boundary_nodes,
            grading_centers,
            h_max,
            is_boundary,
            neighbors,
            boundary_edges,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.is_boundary
    }

    pub fn neighbor(&self, t: usize, k: usize) -> Option<usize> {
        self.neighbors[t][k]
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Gradients of the three barycentric coordinates.
    pub fn gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.vertices(t);
        let twice = (b - a).cross(c - a);
        let rot = |e: Point| Point::new(-e.y, e.x) * (1.0 / twice);
        [rot(c - b), rot(a - c), rot(b - a)]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices(t);
        (a + b + c) * (1.0 / 3.0)
    }

    pub fn point(&self, t: usize, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.vertices(t);
        a * bary[0] + b * bary[1] + c * bary[2]
    }

    /// Linear interpolation of a nodal field inside triangle `t`.
    pub fn interpolate(&self, field: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        let tri = self.triangles[t];
        field[tri[0]] * bary[0] + field[tri[1]] * bary[1] + field[tri[2]] * bary[2]
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_diam: f64 = 0.0;
        let mut min_area = f64::INFINITY;
        for t in 0..self.n_triangles() {
            let v = self.vertices(t);
            for k in 0..3 {
                let e1 = v[(k + 1) % 3] - v[k];
                let e2 = v[(k + 2) % 3] - v[k];
                let ang = e1.cross(e2).atan2(e1.dot(e2));
                min_angle = min_angle.min(ang);
            }
            max_diam = max_diam.max(self.diameter(t));
            min_area = min_area.min(self.area(t));
        }
        MeshQuality {
            nodes: self.n_nodes(),
            triangles: self.n_triangles(),
            min_angle_deg: min_angle.to_degrees(),
            max_diameter: max_diam,
            min_area,
        }
    }

    /// Splits every triangle into four through its edge midpoints. New
    /// boundary nodes are projected onto the unit circle when `domain` is the disk.
    pub fn refine_uniform(&self, domain: Option<&PlanarDomain>) -> Result<TriangleMesh> {
        let mut nodes = self.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        let project = matches!(domain.map(|d| d.kind()), Some(DomainKind::UnitDisk));
        for (t, tri) in self.triangles.iter().enumerate() {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let mut p = (nodes[a] + nodes[b]) * 0.5;
                    if project && self.neighbors[t][k].is_none() {
                        p = p * (1.0 / p.norm());
                    }
                    nodes.push(p);
                    nodes.len() - 1
                });
            }
            triangles.push([tri[0], m[2], m[1]]);
            triangles.push([m[2], tri[1], m[0]]);
            triangles.push([m[1], m[0], tri[2]]);
            triangles.push([m[0], m[1], m[2]]);
        }
        TriangleMesh::from_parts(nodes, triangles, self.grading_centers.clone(), 0.5 * self.h_max)
    }

    /// Writes the `MFLAB-MESH 1` text format.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "MFLAB-MESH 1")?;
        writeln!(w, "nodes {}", self.n_nodes())?;
        for p in &self.nodes {
            writeln!(w, "{:.16e} {:.16e}", p.x, p.y)?;
        }
        writeln!(w, "triangles {}", self.n_triangles())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary {}", self.boundary_nodes.len())?;
        for b in &self.boundary_nodes {
            writeln!(w, "{b}")?;
        }
        Ok(())
    }

    /// Reads the `MFLAB-MESH 1` text format, skipping blank and `#` lines.
    /// The boundary list is checked against the topological boundary.
    pub fn read_text<R: BufRead>(r: R) -> Result<TriangleMesh> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
            other => Some((i + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(s))) => Ok((i, s)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse { line: 0, what: format!("unexpected end of file, expected {what}") }),
            }
        };
        let (line, header) = next("header")?;
        if header.trim() != "MFLAB-MESH 1" {
            return Err(Error::Parse { line, what: format!("bad header {header:?}") });
        }
        let count = |line: usize, s: &str, key: &str| -> Result<usize> {
            let mut it = s.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse { line, what: format!("expected section {key}") });
            }
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse { line, what: format!("bad count for {key}") })
        };
        let (line, s) = next("nodes")?;
        let n = count(line, &s, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, s) = next("node")?;
            let v: Vec<f64> = s
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line, what: e.to_string() })?;
            if v.len() != 2 {
                return Err(Error::Parse { line, what: "node needs two coordinates".into() });
            }
            nodes.push(Point::new(v[0], v[1]));
        }
        let (line, s) = next("triangles")?;
        let m = count(line, &s, "triangles")?;
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, s) = next("triangle")?;
            let v: Vec<usize> = s
                .split_whitespace()
                .map(|x| x.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line, what: e.to_string() })?;
            if v.len() != 3 {
                return Err(Error::Parse { line, what: "triangle needs three indices".into() });
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let (line, s) = next("boundary")?;
        let b = count(line, &s, "boundary")?;
        let mut boundary = Vec::with_capacity(b);
        for _ in 0..b {
            let (line, s) = next("boundary index")?;
            boundary.push(
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse { line, what: e.to_string() })?,
            );
        }
        let h_max = (0..triangles.len())
            .map(|t| {
                let [a, b, c] = triangles[t];
                let (a, b, c) = (nodes[a], nodes[b], nodes[c]);
                a.dist(b).max(b.dist(c)).max(c.dist(a))
            })
            .fold(0.0, f64::max);
        let mesh = TriangleMesh::from_parts(nodes, triangles, Vec::new(), h_max)?;
        boundary.sort_unstable();
        if boundary != mesh.boundary_nodes {
            return Err(Error::Parse {
                line: 0,
                what: "boundary list does not match the triangulation".into(),
            });
        }
        Ok(mesh)
    }
}

struct SizeField<'a> {
    h_max: f64,
    centers: &'a [GradingCenter],
}

impl SizeField<'_> {
    fn at(&self, x: Point) -> f64 {
        self.centers
            .iter()
            .map(|c| c.size(self.h_max, x))
            .fold(self.h_max, f64::min)
    }

    fn spacing(&self, x: Point) -> f64 {
        SPACING * self.at(x)
    }

    /// Index of the center with the smallest local size; ties go to the lowest index.
    fn owner(&self, x: Point) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            let s = c.size(self.h_max, x);
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
        best.map(|b| b.0)
    }
}

/// Places points along a parametrized curve so that consecutive gaps follow the size field.
fn sample_curve(
    field: &SizeField,
    curve: impl Fn(f64) -> Point,
    length: f64,
    include_end: bool,
) -> Vec<Point> {
    let mut taus = vec![0.0];
    let mut cum = vec![0.0];
    let mut tau = 0.0;
    while tau < length {
        let step = (0.1 * field.spacing(curve(tau))).min(length - tau).max(1e-12 * length);
        let next = (tau + step).min(length);
        let mid = curve(0.5 * (tau + next));
        let inc = (next - tau) / field.spacing(mid);
        taus.push(next);
        cum.push(cum.last().unwrap() + inc);
        tau = next;
    }
    let total = *cum.last().unwrap();
    let n = (total.round() as usize).max(1);
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    let last = if include_end { n } else { n - 1 };
    for k in 0..=last {
        let target = total * k as f64 / n as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let span = cum[j + 1] - cum[j];
        let f = if span > 0.0 { ((target - cum[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(curve(taus[j] + f * (taus[j + 1] - taus[j])));
    }
    out
}

fn ring_radii(center: &GradingCenter, h_max: f64, reach: f64) -> Vec<f64> {
    let size = |r: f64| SPACING * h_max * r.max(center.floor).min(1.0).powf(center.exponent);
    let mut radii = vec![0.0];
    let mut r = 0.0;
    while r < reach {
        let guess = r + size(r);
        r += size(0.5 * (r + guess));
        radii.push(r);
    }
    radii
}

struct PointGrid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl PointGrid {
    fn new(cell: f64) -> Self {
        Self { cell, cells: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn near(&self, p: Point, radius: f64) -> bool {
        let (i, j) = self.key(p);
        let reach = (radius / self.cell).ceil() as i64;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                if let Some(list) = self.cells.get(&(i + di, j + dj)) {
                    if list.iter().any(|&k| self.points[k].dist(p) < radius) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn push(&mut self, p: Point) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(self.points.len());
        self.points.push(p);
    }
}

/// Builds a graded conforming triangulation by placing nodes on concentric
/// rings around each grading center, sampling the boundary with the same
/// size field, and running a constrained Delaunay triangulation.
pub fn build_mesh(
    domain: &PlanarDomain,
    h_max: f64,
    grading_centers: &[GradingCenter],
) -> Result<TriangleMesh> {
    if !(h_max > 0.0) || !h_max.is_finite() {
        return Err(Error::Input(format!("h_max must be positive, got {h_max}")));
    }
    let diam = domain.diameter();
    match domain.kind() {
        DomainKind::UnitDisk if h_max > 0.5 => {
            return Err(Error::Refinement(format!("h_max = {h_max} cannot resolve the unit circle")));
        }
        DomainKind::SimplePolygon if h_max > 0.5 * domain.shortest_edge() => {
            return Err(Error::Refinement(format!(
                "h_max = {h_max} exceeds half the shortest polygon edge ({})",
                domain.shortest_edge()
            )));
        }
        _ => {}
    }
    for c in grading_centers {
        if !domain.contains(c.point) {
            return Err(Error::Input(format!(
                "grading center ({}, {}) lies outside the domain",
                c.point.x, c.point.y
            )));
        }
        if !(0.0..=1.0).contains(&c.exponent) || !(c.floor > 0.0) {
            return Err(Error::Input(format!(
                "grading exponent must lie in [0, 1] and floor must be positive, got {} and {}",
                c.exponent, c.floor
            )));
        }
    }
    let mut centers = grading_centers.to_vec();
    if centers.is_empty() {
        centers.push(GradingCenter::new(domain.center(), 0.0, 1e-4 * diam));
    }
    let field = SizeField { h_max, centers: &centers };

    // Boundary chain.
    let boundary: Vec<Point> = match domain.kind() {
        DomainKind::UnitDisk => {
            sample_curve(&field, |t| Point::new(t.cos(), t.sin()), 2.0 * PI, false)
        }
        DomainKind::SimplePolygon => {
            let v = domain.vertices();
            let n = v.len();
            let mut out = Vec::new();
            for i in 0..n {
                let (a, b) = (v[i], v[(i + 1) % n]);
                let len = a.dist(b);
                let dir = (b - a) * (1.0 / len);
                out.extend(sample_curve(&field, |t| a + dir * t, len, false));
            }
            out
        }
    };
    if boundary.len() < 3 {
        return Err(Error::Refinement("boundary sampling produced fewer than 3 points".into()));
    }

    let mut grid = PointGrid::new(SPACING * h_max);
    for &p in &boundary {
        grid.push(p);
    }
    let n_boundary = boundary.len();
    for c in &centers {
        if !grid.near(c.point, 1e-12) && domain.distance_to_boundary(c.point) > 0.0 {
            grid.push(c.point);
        }
    }

    let (lo, hi) = domain.bounding_box();
    let corners = [lo, hi, Point::new(lo.x, hi.y), Point::new(hi.x, lo.y)];
    for (ci, c) in centers.iter().enumerate() {
        let reach = corners.iter().map(|q| q.dist(c.point)).fold(0.0, f64::max);
        let mut radii = ring_radii(c, h_max, reach);
        let disk_centered = domain.kind() == DomainKind::UnitDisk && c.point.norm() < 1e-14;
        if disk_centered {
            // Align one ring with the unit circle so the interior rings match the boundary.
            let k = (1..radii.len())
                .min_by(|&a, &b| (radii[a] - 1.0).abs().total_cmp(&(radii[b] - 1.0).abs()))
                .unwrap_or(1);
            let scale = 1.0 / radii[k];
            radii.truncate(k);
            radii.iter_mut().for_each(|r| *r *= scale);
        }
        for (k, &r) in radii.iter().enumerate().skip(1) {
            let s = SPACING * c.size(h_max, c.point + Point::new(r, 0.0));
            let count = ((2.0 * PI * r / s).round() as usize).max(6);
            let phase = if k % 2 == 1 { 0.5 } else { 0.0 };
            for j in 0..count {
                let theta = 2.0 * PI * (j as f64 + phase) / count as f64;
                let p = c.point + Point::new(r * theta.cos(), r * theta.sin());
                if !domain.contains(p) {
                    continue;
                }
                let sp = field.spacing(p);
                if domain.distance_to_boundary(p) < 0.5 * sp {
                    continue;
                }
                if field.owner(p) != Some(ci) {
                    continue;
                }
                if grid.near(p, 0.6 * sp) {
                    continue;
                }
                grid.push(p);
            }
        }
    }

    let points = grid.points;
    let vertices: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = (0..n_boundary).map(|i| [i, (i + 1) % n_boundary]).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(vertices, edges)
        .map_err(|e| Error::Refinement(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::Refinement("duplicate mesh points".into()));
    }
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let v = face.vertices();
        let tri = [v[0].fix().index(), v[1].fix().index(), v[2].fix().index()];
        let (a, b, c) = (points[tri[0]], points[tri[1]], points[tri[2]]);
        let twice = (b - a).cross(c - a);
        if twice <= 1e-14 * h_max * h_max {
            continue;
        }
        if domain.kind() == DomainKind::SimplePolygon
            && !super::point_in_polygon((a + b + c) * (1.0 / 3.0), domain.vertices())
        {
            continue;
        }
        triangles.push(tri);
    }
    // Drop nodes not referenced by any kept triangle.
    let mut used = vec![false; points.len()];
    triangles.iter().flatten().for_each(|&i| used[i] = true);
    let mut remap = vec![usize::MAX; points.len()];
    let mut nodes = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if used[i] {
            remap[i] = nodes.len();
            nodes.push(*p);
        }
    }
    for tri in &mut triangles {
        tri.iter_mut().for_each(|i| *i = remap[*i]);
    }
    let mesh = TriangleMesh::from_parts(nodes, triangles, grading_centers.to_vec(), h_max)?;
    if mesh.boundary_nodes.len() != n_boundary {
        return Err(Error::Refinement(format!(
            "boundary has {} nodes after triangulation, expected {n_boundary}",
            mesh.boundary_nodes.len()
        )));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_boundary_on_circle() {
        let m = build_mesh(&PlanarDomain::unit_disk(), 0.1, &[]).unwrap();
        for &b in &m.boundary_nodes {
            assert!((m.nodes[b].norm() - 1.0).abs() < 1e-12);
        }
        assert!(m.nodes.iter().all(|p| p.norm() <= 1.0 + 1e-12));
        assert!((m.total_area() - PI).abs() < 0.02);
        let q = m.quality();
        assert!(q.min_angle_deg > 15.0, "{q:?}");
        assert!(q.max_diameter <= 0.1 * 1.05, "{q:?}");
    }

    #[test]
    fn graded_square_resolves_center() {
        let sq = PlanarDomain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let c = Point::new(0.5, 0.5);
        let m = build_mesh(&sq, 0.2, &[GradingCenter::new(c, 0.5, 1e-4)]).unwrap();
        assert!(m.nodes.contains(&c));
        for t in 0..m.n_triangles() {
            let d = m.centroid(t).dist(c);
            if (0.02..0.3).contains(&d) {
                assert!(m.diameter(t) < 0.2 * d.sqrt(), "t {t} d {d} diam {}", m.diameter(t));
            }
        }
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_meshes() {
        let l = PlanarDomain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let m = build_mesh(&l, 0.1, &[]).unwrap();
        assert!((m.total_area() - 0.75).abs() < 1e-12);
        assert!((l.corner_angles()[3] - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn too_coarse_is_rejected() {
        let sq = PlanarDomain::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(0.1, 0.1),
            Point::new(0.0, 0.1),
        ])
        .unwrap();
        assert!(matches!(build_mesh(&sq, 0.2, &[]), Err(Error::Refinement(_))));
    }

    #[test]
    fn text_round_trip() {
        let m = build_mesh(&PlanarDomain::unit_disk(), 0.25, &[]).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let r = TriangleMesh::read_text(buf.as_slice()).unwrap();
        assert_eq!(r.nodes, m.nodes);
        assert_eq!(r.triangles, m.triangles);
        assert_eq!(r.boundary_nodes, m.boundary_nodes);
    }

    #[test]
    fn refinement_quarters_areas() {
        let m = build_mesh(&PlanarDomain::unit_disk(), 0.25, &[]).unwrap();
        let r = m.refine_uniform(None).unwrap();
        assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        assert!((r.total_area() - m.total_area()).abs() < 1e-12);
    }
}
