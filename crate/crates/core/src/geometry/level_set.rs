//! Superlevel sets `{field > t}` of piecewise-linear fields.
//!
//! A node is inside when its value is strictly greater than `t`; nodes at
//! exactly `t` count as outside, which is the symbolic perturbation `t + 0`.

use std::collections::{HashMap, VecDeque};

use super::{signed_area, Point, TriangleMesh};
use crate::error::{Error, Result};
use crate::quadrature::SEGMENT_GAUSS2;

/// Identity of a polygon vertex: a mesh node or the cut point on a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKey {
    Node(usize),
    /// Cut point on the edge between two nodes, smaller index first.
    Cut(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceVertex {
    pub key: VertexKey,
    /// Barycentric coordinates in the containing triangle.
    pub bary: [f64; 3],
    pub point: Point,
}

/// Convex part of one triangle, counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub tri: usize,
    /// `true` for parts of `{field > t}`, `false` for complement parts added by hole filling.
    pub inside: bool,
    pub vertices: Vec<PieceVertex>,
}

impl Piece {
    pub fn area(&self) -> f64 {
        let pts: Vec<Point> = self.vertices.iter().map(|v| v.point).collect();
        signed_area(&pts)
    }

    /// Fan triangulation in barycentric coordinates of the parent triangle,
    /// choosing the quadrilateral diagonal with the larger minimum area.
    pub fn sub_triangles(&self) -> Vec<[usize; 3]> {
        let n = self.vertices.len();
        match n {
            3 => vec![[0, 1, 2]],
            4 => {
                let p: Vec<Point> = self.vertices.iter().map(|v| v.point).collect();
                let tri_area = |a: usize, b: usize, c: usize| (p[b] - p[a]).cross(p[c] - p[a]);
                let d02 = tri_area(0, 1, 2).min(tri_area(0, 2, 3));
                let d13 = tri_area(1, 2, 3).min(tri_area(1, 3, 0));
                if d02 >= d13 {
                    vec![[0, 1, 2], [0, 2, 3]]
                } else {
                    vec![[1, 2, 3], [1, 3, 0]]
                }
            }
            _ => (1..n - 1).map(|k| [0, k, k + 1]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Part of the level curve `{field = t}`.
    Level,
    /// Part of the domain boundary.
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub tri: usize,
    pub a: PieceVertex,
    pub b: PieceVertex,
    pub kind: SegmentKind,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        self.a.point.dist(self.b.point)
    }
}

/// Closed boundary curve; counterclockwise for outer boundaries, clockwise for holes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub segments: Vec<BoundarySegment>,
    pub signed_area: f64,
}

impl BoundaryLoop {
    pub fn is_outer(&self) -> bool {
        self.signed_area > 0.0
    }

    pub fn polygon(&self) -> Vec<Point> {
        self.segments.iter().map(|s| s.a.point).collect()
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }
}

/// A point on a slice boundary handed to boundary integrands.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub tri: usize,
    pub bary: [f64; 3],
    pub point: Point,
    pub kind: SegmentKind,
}

/// One connected component of `{field > t}`, optionally with its holes filled.
#[derive(Debug, Clone)]
pub struct SubdomainSlice<'a> {
    pub parent: &'a TriangleMesh,
    pub field: &'a [f64],
    pub level: f64,
    pub pieces: Vec<Piece>,
    pub loops: Vec<BoundaryLoop>,
    /// Index (in the list returned together with this slice) of the component
    /// whose hole contains this one.
    pub container: Option<usize>,
    pub filled: bool,
}

impl<'a> SubdomainSlice<'a> {
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| p.area()).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.loops.iter().map(|l| l.length()).sum()
    }

    pub fn n_holes(&self) -> usize {
        self.loops.iter().filter(|l| !l.is_outer()).count()
    }

    /// Fraction of each parent triangle covered by the slice.
    pub fn fractions(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.parent.n_triangles()];
        for p in &self.pieces {
            f[p.tri] += p.area() / self.parent.area(p.tri);
        }
        f
    }

    /// Triangles covering the slice, as parent triangle plus barycentric vertex coordinates.
    pub fn sub_triangles(&self) -> Vec<(usize, [[f64; 3]; 3])> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for [a, b, c] in p.sub_triangles() {
                out.push((p.tri, [p.vertices[a].bary, p.vertices[b].bary, p.vertices[c].bary]));
            }
        }
        out
    }

    /// Whether a parent node lies in the closure of the slice.
    pub fn contains_node(&self, node: usize) -> bool {
        let at = self.parent.nodes[node];
        self.pieces.iter().any(|p| {
            self.parent.triangles[p.tri].contains(&node)
                && p.vertices.iter().any(|v| v.key == VertexKey::Node(node) || v.point == at)
        })
    }

    /// Maximum of the parent field over the closure of the slice.
    pub fn max_field(&self, field: &[f64]) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.vertices.iter().map(move |v| self.parent.interpolate(field, p.tri, v.bary)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// An interior point of the slice: the centroid of its largest piece.
    pub fn interior_point(&self) -> Point {
        let p = self
            .pieces
            .iter()
            .max_by(|a, b| a.area().total_cmp(&b.area()))
            .expect("nonempty slice");
        let n = p.vertices.len() as f64;
        p.vertices.iter().fold(Point::default(), |acc, v| acc + v.point) * (1.0 / n)
    }

    /// Conforming triangulation of the slice.
    pub fn mesh(&self) -> Result<SliceMesh> {
        SliceMesh::new(self)
    }
}

/// Polygons of a triangle above and below a level; `None` when empty.
type ClipParts = (Option<Vec<PieceVertex>>, Option<Vec<PieceVertex>>);

fn clip_triangle(mesh: &TriangleMesh, field: &[f64], t: f64, tri: usize) -> ClipParts {
    let nodes = mesh.triangles[tri];
    let inside = nodes.map(|i| field[i] > t);
    let unit = |k: usize| {
        let mut b = [0.0; 3];
        b[k] = 1.0;
        b
    };
    let mut pin = Vec::with_capacity(4);
    let mut pout = Vec::with_capacity(4);
    for k in 0..3 {
        let v = PieceVertex { key: VertexKey::Node(nodes[k]), bary: unit(k), point: mesh.nodes[nodes[k]] };
        if inside[k] {
            pin.push(v);
        } else {
            pout.push(v);
        }
        let j = (k + 1) % 3;
        if inside[k] != inside[j] {
            // Parametrize from the smaller global index so both neighbours agree bitwise.
            let (lo, hi) = if nodes[k] < nodes[j] { (k, j) } else { (j, k) };
            let (flo, fhi) = (field[nodes[lo]], field[nodes[hi]]);
            let lambda = (flo - t) / (flo - fhi);
            let mut bary = [0.0; 3];
            bary[lo] = 1.0 - lambda;
            bary[hi] = lambda;
            let (plo, phi) = (mesh.nodes[nodes[lo]], mesh.nodes[nodes[hi]]);
            let point = plo + (phi - plo) * lambda;
            let cut = PieceVertex { key: VertexKey::Cut(nodes[lo], nodes[hi]), bary, point };
            pin.push(cut);
            pout.push(cut);
        }
    }
    let keep = |p: Vec<PieceVertex>| if p.len() >= 3 { Some(p) } else { None };
    (keep(pin), keep(pout))
}

/// Local edge (opposite vertex index) shared by two piece vertices, if any.
fn common_edge(a: &PieceVertex, b: &PieceVertex) -> Option<usize> {
    if matches!(a.key, VertexKey::Cut(..)) && matches!(b.key, VertexKey::Cut(..)) {
        return None;
    }
    (0..3).find(|&m| a.bary[m] == 0.0 && b.bary[m] == 0.0)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn boundary_segments(mesh: &TriangleMesh, tri: usize, poly: &[PieceVertex]) -> Vec<BoundarySegment> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        match common_edge(&a, &b) {
            None => out.push(BoundarySegment { tri, a, b, kind: SegmentKind::Level }),
            Some(m) => {
                if mesh.neighbor(tri, m).is_none() {
                    out.push(BoundarySegment { tri, a, b, kind: SegmentKind::Domain });
                }
            }
        }
    }
    out
}

fn chain_loops(segments: Vec<BoundarySegment>) -> Vec<BoundaryLoop> {
    let mut by_start: HashMap<VertexKey, usize> = HashMap::with_capacity(segments.len());
    for (i, s) in segments.iter().enumerate() {
        by_start.insert(s.a.key, i);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        while !used[cur] {
            used[cur] = true;
            chain.push(segments[cur]);
            match by_start.get(&segments[cur].b.key) {
                Some(&next) => cur = next,
                None => break,
            }
        }
        let poly: Vec<Point> = chain.iter().map(|s| s.a.point).collect();
        loops.push(BoundaryLoop { signed_area: signed_area(&poly), segments: chain });
    }
    loops
}

/// Connected components of `{field > t}`, ordered by their smallest triangle index.
pub fn extract_level_set<'a>(
    mesh: &'a TriangleMesh,
    field: &'a [f64],
    t: f64,
) -> Vec<SubdomainSlice<'a>> {
    let nt = mesh.n_triangles();
    let mut pieces: Vec<Option<Vec<PieceVertex>>> = Vec::with_capacity(nt);
    for tri in 0..nt {
        pieces.push(clip_triangle(mesh, field, t, tri).0);
    }
    let mut uf = UnionFind((0..nt).collect());
    for (tri, piece) in pieces.iter().enumerate() {
        if piece.is_none() {
            continue;
        }
        let nodes = mesh.triangles[tri];
        for k in 0..3 {
            let (a, b) = (nodes[(k + 1) % 3], nodes[(k + 2) % 3]);
            if field[a] > t || field[b] > t {
                if let Some(nb) = mesh.neighbor(tri, k) {
                    uf.union(tri, nb);
                }
            }
        }
    }
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut comp_tris: Vec<Vec<usize>> = Vec::new();
    for (tri, piece) in pieces.iter().enumerate() {
        if piece.is_some() {
            let root = uf.find(tri);
            let c = *comp_of_root.entry(root).or_insert_with(|| {
                comp_tris.push(Vec::new());
                comp_tris.len() - 1
            });
            comp_tris[c].push(tri);
        }
    }
    let mut slices: Vec<SubdomainSlice> = comp_tris
        .into_iter()
        .map(|tris| {
            let mut segs = Vec::new();
            let mut ps = Vec::with_capacity(tris.len());
            for tri in tris {
                let poly = pieces[tri].take().expect("piece present");
                segs.extend(boundary_segments(mesh, tri, &poly));
                ps.push(Piece { tri, inside: true, vertices: poly });
            }
            SubdomainSlice {
                parent: mesh,
                field,
                level: t,
                pieces: ps,
                loops: chain_loops(segs),
                container: None,
                filled: false,
            }
        })
        .collect();
    assign_containers(&mut slices);
    slices
}

/// For each component, the component owning the smallest hole that contains it.
fn assign_containers(slices: &mut [SubdomainSlice]) {
    let probes: Vec<Point> = slices.iter().map(|s| s.interior_point()).collect();
    let mut containers = vec![None; slices.len()];
    for (i, probe) in probes.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, other) in slices.iter().enumerate() {
            if i == j {
                continue;
            }
            for l in other.loops.iter().filter(|l| !l.is_outer()) {
                let area = -l.signed_area;
                if best.is_some_and(|(_, a)| a <= area) {
                    continue;
                }
                if super::point_in_polygon(*probe, &l.polygon()) {
                    best = Some((j, area));
                }
            }
        }
        containers[i] = best.map(|b| b.0);
    }
    for (s, c) in slices.iter_mut().zip(containers) {
        s.container = c;
    }
}

/// The slice together with every bounded component of its complement.
pub fn fill_holes<'a>(slice: &SubdomainSlice<'a>) -> SubdomainSlice<'a> {
    if slice.n_holes() == 0 {
        let mut s = slice.clone();
        s.filled = true;
        return s;
    }
    let mesh = slice.parent;
    let field = slice.field;
    let t = slice.level;
    let nt = mesh.n_triangles();
    // Cells are (triangle, inside?) pairs; the slice's own cells are walls.
    let mut own = vec![false; nt];
    for p in &slice.pieces {
        if p.inside {
            own[p.tri] = true;
        }
    }
    let mut seen_in = vec![false; nt];
    let mut seen_out = vec![false; nt];
    let mut queue = VecDeque::new();
    for l in slice.loops.iter().filter(|l| !l.is_outer()) {
        for s in &l.segments {
            if !seen_out[s.tri] {
                seen_out[s.tri] = true;
                queue.push_back((s.tri, false));
            }
        }
    }
    let mut clipped: HashMap<usize, ClipParts> = HashMap::new();
    while let Some((tri, inside)) = queue.pop_front() {
        let parts = clipped.entry(tri).or_insert_with(|| clip_triangle(mesh, field, t, tri));
        let has_in = parts.0.is_some();
        let has_out = parts.1.is_some();
        let mut visit = |tri: usize, inside: bool, q: &mut VecDeque<(usize, bool)>| {
            if inside {
                if !own[tri] && !seen_in[tri] {
                    seen_in[tri] = true;
                    q.push_back((tri, true));
                }
            } else if !seen_out[tri] {
                seen_out[tri] = true;
                q.push_back((tri, false));
            }
        };
        if inside && has_out {
            visit(tri, false, &mut queue);
        }
        if !inside && has_in {
            visit(tri, true, &mut queue);
        }
        let nodes = mesh.triangles[tri];
        for k in 0..3 {
            let (a, b) = (nodes[(k + 1) % 3], nodes[(k + 2) % 3]);
            let shares = if inside {
                field[a] > t || field[b] > t
            } else {
                field[a] <= t || field[b] <= t
            };
            if shares {
                if let Some(nb) = mesh.neighbor(tri, k) {
                    visit(nb, inside, &mut queue);
                }
            }
        }
    }
    let mut pieces = slice.pieces.clone();
    for tri in 0..nt {
        if !(seen_in[tri] || seen_out[tri]) {
            continue;
        }
        let parts = clipped.entry(tri).or_insert_with(|| clip_triangle(mesh, field, t, tri));
        if seen_in[tri] {
            if let Some(p) = &parts.0 {
                pieces.push(Piece { tri, inside: true, vertices: p.clone() });
            }
        }
        if seen_out[tri] {
            if let Some(p) = &parts.1 {
                pieces.push(Piece { tri, inside: false, vertices: p.clone() });
            }
        }
    }
    pieces.sort_by_key(|p| (p.tri, !p.inside));
    SubdomainSlice {
        parent: mesh,
        field,
        level: t,
        pieces,
        loops: slice.loops.iter().filter(|l| l.is_outer()).cloned().collect(),
        container: slice.container,
        filled: true,
    }
}

/// Composite two-point Gauss quadrature of `integrand` along every boundary loop.
pub fn boundary_integral(
    slice: &SubdomainSlice,
    mut integrand: impl FnMut(&BoundaryPoint) -> f64,
) -> Result<f64> {
    let mut total = 0.0;
    for l in &slice.loops {
        for s in &l.segments {
            let len = s.length();
            if len == 0.0 {
                continue;
            }
            for &(x, w) in &SEGMENT_GAUSS2 {
                let bary = [0, 1, 2].map(|k| (1.0 - x) * s.a.bary[k] + x * s.b.bary[k]);
                let bp = BoundaryPoint {
                    tri: s.tri,
                    bary,
                    point: s.a.point + (s.b.point - s.a.point) * x,
                    kind: s.kind,
                };
                let v = integrand(&bp);
                if !v.is_finite() {
                    return Err(Error::Quadrature {
                        x: bp.point.x,
                        y: bp.point.y,
                        what: format!("boundary integrand evaluated to {v}"),
                    });
                }
                total += w * len * v;
            }
        }
    }
    Ok(total)
}

/// Conforming triangulation of a slice with links back to the parent mesh.
#[derive(Debug, Clone)]
pub struct SliceMesh {
    pub mesh: TriangleMesh,
    /// Parent triangle of each slice triangle.
    pub parent_tri: Vec<usize>,
    /// Barycentric coordinates, in the parent triangle, of each slice triangle's vertices.
    pub parent_bary: Vec<[[f64; 3]; 3]>,
    /// For each slice node: a parent triangle containing it and its barycentric coordinates.
    pub node_origin: Vec<(usize, [f64; 3])>,
}

impl SliceMesh {
    fn new(slice: &SubdomainSlice) -> Result<Self> {
        let parent = slice.parent;
        let mut index: HashMap<VertexKey, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut node_origin = Vec::new();
        let mut triangles = Vec::new();
        let mut parent_tri = Vec::new();
        let mut parent_bary = Vec::new();
        for p in &slice.pieces {
            let ids: Vec<usize> = p
                .vertices
                .iter()
                .map(|v| {
                    *index.entry(v.key).or_insert_with(|| {
                        nodes.push(v.point);
                        node_origin.push((p.tri, v.bary));
                        nodes.len() - 1
                    })
                })
                .collect();
            for [a, b, c] in p.sub_triangles() {
                let (pa, pb, pc) = (p.vertices[a].point, p.vertices[b].point, p.vertices[c].point);
                if (pb - pa).cross(pc - pa) <= 1e-13 * parent.area(p.tri) {
                    continue;
                }
                triangles.push([ids[a], ids[b], ids[c]]);
                parent_tri.push(p.tri);
                parent_bary.push([p.vertices[a].bary, p.vertices[b].bary, p.vertices[c].bary]);
            }
        }
        // Compact away nodes that only belonged to degenerate triangles.
        let mut used = vec![false; nodes.len()];
        triangles.iter().flatten().for_each(|&i| used[i] = true);
        let mut remap = vec![usize::MAX; nodes.len()];
        let mut kept_nodes = Vec::new();
        let mut kept_origin = Vec::new();
        for i in 0..nodes.len() {
            if used[i] {
                remap[i] = kept_nodes.len();
                kept_nodes.push(nodes[i]);
                kept_origin.push(node_origin[i]);
            }
        }
        for tri in &mut triangles {
            tri.iter_mut().for_each(|i| *i = remap[*i]);
        }
        let mesh = TriangleMesh::from_parts(kept_nodes, triangles, Vec::new(), parent.h_max)?;
        Ok(Self { mesh, parent_tri, parent_bary, node_origin: kept_origin })
    }

    /// Interpolates a parent nodal field onto the slice nodes.
    pub fn restrict(&self, parent: &TriangleMesh, field: &[f64]) -> Vec<f64> {
        self.node_origin
            .iter()
            .map(|&(t, b)| parent.interpolate(field, t, b))
            .collect()
    }

    /// Parent barycentric coordinates of a point given in slice-triangle coordinates.
    pub fn to_parent(&self, t: usize, bary: [f64; 3]) -> [f64; 3] {
        let pb = &self.parent_bary[t];
        [0, 1, 2].map(|k| bary[0] * pb[0][k] + bary[1] * pb[1][k] + bary[2] * pb[2][k])
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_mesh, PlanarDomain};

    fn disk(h: f64) -> TriangleMesh {
        build_mesh(&PlanarDomain::unit_disk(), h, &[]).unwrap()
    }

    #[test]
    fn paraboloid_level_is_circle() {
        let m = disk(0.05);
        let f: Vec<f64> = m.nodes.iter().map(|p| 1.0 - p.dot(*p)).collect();
        let s = extract_level_set(&m, &f, 0.75);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].loops.len(), 1);
        assert!((s[0].perimeter() - PI).abs() < 5e-3, "{}", s[0].perimeter());
        assert!((s[0].area() - PI / 4.0).abs() < 5e-3);
    }

    #[test]
    fn above_max_is_empty_and_below_min_is_full() {
        let m = disk(0.2);
        let f: Vec<f64> = m.nodes.iter().map(|p| p.x).collect();
        assert!(extract_level_set(&m, &f, 2.0).is_empty());
        let full = extract_level_set(&m, &f, -2.0);
        assert_eq!(full.len(), 1);
        assert!((full[0].area() - m.total_area()).abs() < 1e-12);
        assert!(full[0].loops.iter().all(|l| l.segments.iter().all(|s| s.kind == SegmentKind::Domain)));
    }

    #[test]
    fn annulus_fills_to_disk() {
        let m = disk(0.04);
        // Superlevel set {f > 0} is the annulus 0.3 < |x| < 0.7.
        let f: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| {
                let r = p.norm();
                (r - 0.3) * (0.7 - r)
            })
            .collect();
        let s = extract_level_set(&m, &f, 0.0);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].n_holes(), 1);
        let filled = fill_holes(&s[0]);
        assert_eq!(filled.n_holes(), 0);
        assert!((filled.area() - PI * 0.49).abs() < 1e-2, "{}", filled.area());
        let again = fill_holes(&filled);
        assert_eq!(again.pieces, filled.pieces);
    }

    #[test]
    fn nested_components_get_containers() {
        let m = disk(0.03);
        // ring 0.5 < r < 0.8 plus a central bump r < 0.2
        let f: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| {
                let r = p.norm();
                if r < 0.35 {
                    0.2 - r
                } else {
                    (r - 0.5) * (0.8 - r)
                }
            })
            .collect();
        let s = extract_level_set(&m, &f, 0.0);
        assert_eq!(s.len(), 2);
        let ring = s.iter().position(|c| c.n_holes() == 1).unwrap();
        let bump = 1 - ring;
        assert_eq!(s[bump].container, Some(ring));
        let filled = fill_holes(&s[ring]);
        assert!((filled.area() - PI * 0.64).abs() < 2e-2);
    }

    #[test]
    fn slice_mesh_is_conforming() {
        let m = disk(0.1);
        let f: Vec<f64> = m.nodes.iter().map(|p| 1.0 - p.dot(*p)).collect();
        let s = extract_level_set(&m, &f, 0.5);
        let sm = s[0].mesh().unwrap();
        assert!((sm.mesh.total_area() - s[0].area()).abs() < 1e-12);
        let vals = sm.restrict(&m, &f);
        for &b in &sm.mesh.boundary_nodes {
            assert!((vals[b] - 0.5).abs() < 1e-12);
        }
    }
}
