//! Triangle mesh with validated edge topology and per-edge geometric frames.
//!
//! Meshes are closed and consistently oriented: every edge has exactly two
//! adjacent triangles that traverse it in opposite directions. Edge
//! orientation (which side is "plus", the direction of the edge tangent) is a
//! pure function of vertex indices and therefore stable under vertex movement.

use crate::error::{Error, Result};
use crate::math::{circumcenter, triangle_area, triangle_normal_area, V3};
use std::collections::HashMap;

/// Relative area threshold below which triangles are rejected as degenerate.
/// The reference scale is the mesh's mean squared edge length.
pub const DEGENERACY_REL_THRESHOLD: f64 = 1e-14;

/// An interior edge: endpoint vertices, the two adjacent triangles and the
/// opposite vertex on each side.
///
/// `verts[0] < verts[1]`, the edge tangent runs from `verts[0]` to
/// `verts[1]`, and `tris[0]` is the triangle whose oriented boundary
/// traverses the edge in that direction (the "plus" side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub verts: [usize; 2],
    pub tris: [usize; 2],
    /// Vertex of `tris[i]` opposite this edge.
    pub opposite: [usize; 2],
}

/// One edge of a triangle, as seen from that triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleEdge {
    /// Global edge index.
    pub edge: usize,
    /// Global index of this triangle's vertex opposite the edge.
    pub opposite: usize,
    /// Edge tangent endpoints (global vertex indices, tangent = head - tail).
    pub tail: usize,
    pub head: usize,
    /// Whether this triangle is the edge's plus side.
    pub plus_side: bool,
    /// Whether this triangle's oriented boundary traverses the edge from
    /// `tail` to `head`. Equal to `plus_side` under the default orientation
    /// rule; they differ only on meshes produced by
    /// [`TriMesh::flip_edge_sides`]. The away-pointing co-normal of this
    /// triangle is determined by the traversal, not by the plus/minus role.
    pub forward: bool,
}

/// Immutable oriented triangle mesh with full edge adjacency.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<V3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    tri_edges: Vec<[TriangleEdge; 3]>,
    /// Mean squared edge length at build time; degeneracy reference scale.
    scale_sq: f64,
}

impl TriMesh {
    /// Builds edge topology and adjacency from raw vertices and oriented
    /// triangles, validating the closed-manifold and orientation invariants.
    pub fn build(vertices: Vec<V3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        assert!(!triangles.is_empty(), "triangle list must be nonempty");
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::IndexOutOfRange { tri: t, vertex: v });
                }
            }
        }

        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for tri in &triangles {
            for k in 0..3 {
                let d = vertices[tri[(k + 1) % 3]] - vertices[tri[k]];
                sum_sq += d.norm_sq();
                count += 1;
            }
        }
        // Each interior edge is visited twice; the mean is unaffected.
        let scale_sq = sum_sq / count as f64;

        for (t, tri) in triangles.iter().enumerate() {
            let area = triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > DEGENERACY_REL_THRESHOLD * scale_sq) {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        // First pass: adjacency per undirected vertex pair, in deterministic
        // first-encounter order.
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut adjacency: Vec<((usize, usize), Vec<(usize, bool)>)> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let forward = u < v; // traverses low -> high
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    adjacency.push((key, Vec::new()));
                    adjacency.len() - 1
                });
                adjacency[id].1.push((t, forward));
            }
        }

        let mut edges = Vec::with_capacity(adjacency.len());
        for ((a, b), sides) in &adjacency {
            if sides.len() != 2 {
                return Err(Error::NonManifoldEdge(*a, *b, sides.len()));
            }
            let (t0, f0) = sides[0];
            let (t1, f1) = sides[1];
            if f0 == f1 {
                return Err(Error::InconsistentOrientation(*a, *b));
            }
            let (plus, minus) = if f0 { (t0, t1) } else { (t1, t0) };
            let opposite = [
                third_vertex(&triangles[plus], *a, *b),
                third_vertex(&triangles[minus], *a, *b),
            ];
            edges.push(Edge {
                verts: [*a, *b],
                tris: [plus, minus],
                opposite,
            });
        }

        let tri_edges = build_tri_edges(&triangles, &edges);

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_edges,
            scale_sq,
        })
    }

    pub fn vertices(&self) -> &[V3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Per-triangle view of its three edges.
    pub fn triangle_edges(&self, tri: usize) -> &[TriangleEdge; 3] {
        &self.tri_edges[tri]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Degeneracy reference scale (mean squared edge length at build time).
    pub fn scale_sq(&self) -> f64 {
        self.scale_sq
    }

    pub fn mean_edge_length(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|e| (self.vertices[e.verts[1]] - self.vertices[e.verts[0]]).norm())
            .sum();
        total / self.edges.len() as f64
    }

    /// Same topology with replaced vertex coordinates. Orientation and edge
    /// identities are preserved by construction; triangle degeneracy is
    /// re-checked against the original scale.
    pub fn with_vertices(&self, vertices: Vec<V3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::SizeMismatch(format!(
                "vertex count {} != {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let area = triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > DEGENERACY_REL_THRESHOLD * self.scale_sq) {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
            tri_edges: self.tri_edges.clone(),
            scale_sq: self.scale_sq,
        })
    }

    /// Vertex positions of triangle `t`.
    #[inline]
    pub fn triangle_points(&self, t: usize) -> [V3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unit normal and area of triangle `t`.
    #[inline]
    pub fn triangle_normal_area(&self, t: usize) -> (V3, f64) {
        let [a, b, c] = self.triangle_points(t);
        triangle_normal_area(a, b, c)
    }

    /// All per-triangle unit normals (right-hand rule).
    pub fn normals(&self) -> Vec<V3> {
        (0..self.num_triangles())
            .map(|t| self.triangle_normal_area(t).0)
            .collect()
    }

    /// All triangle areas.
    pub fn areas(&self) -> Vec<f64> {
        (0..self.num_triangles())
            .map(|t| self.triangle_normal_area(t).1)
            .collect()
    }

    /// Inverse-area barrier `tau * sum_T 1 / |T|` that penalizes degenerately
    /// small triangles.
    pub fn barrier(&self, tau: f64) -> f64 {
        assert!(tau >= 0.0, "barrier weight must be nonnegative");
        if tau == 0.0 {
            return 0.0;
        }
        tau * (0..self.num_triangles())
            .map(|t| 1.0 / self.triangle_normal_area(t).1)
            .sum::<f64>()
    }

    /// Geometric frame of edge `e`; see [`EdgeFrame`].
    pub fn edge_frame(&self, e: usize) -> EdgeFrame {
        let edge = &self.edges[e];
        let x1 = self.vertices[edge.verts[0]];
        let x2 = self.vertices[edge.verts[1]];
        let (tangent, length) = (x2 - x1).normalized();
        let midpoint = (x1 + x2).scale(0.5);

        // Normals come from the actual triangle windings, co-normals from
        // each side's own traversal direction of the edge; this stays correct
        // on side-flipped meshes where the plus triangle may traverse the
        // edge against the tangent.
        let plus_forward = self.tri_edges[edge.tris[0]]
            .iter()
            .find(|te| te.edge == e)
            .map(|te| te.forward)
            .unwrap_or(true);
        let (normal_plus, _) = self.triangle_normal_area(edge.tris[0]);
        let (normal_minus, _) = self.triangle_normal_area(edge.tris[1]);
        let dir_plus = if plus_forward { tangent } else { -tangent };
        let conormal_plus = dir_plus.cross(normal_plus);
        let conormal_minus = (-dir_plus).cross(normal_minus);

        let [a0, b0, c0] = self.triangle_points(edge.tris[0]);
        let circumcenter_plus = circumcenter(a0, b0, c0);
        let [a1, b1, c1] = self.triangle_points(edge.tris[1]);
        let circumcenter_minus = circumcenter(a1, b1, c1);
        let circumcenter_distance = conormal_plus.dot(midpoint - circumcenter_plus)
            + conormal_minus.dot(midpoint - circumcenter_minus);
        if circumcenter_distance <= 0.0 {
            log::warn!(
                "edge {e}: nonpositive intrinsic circumcenter distance {circumcenter_distance:.3e}"
            );
        }

        EdgeFrame {
            normal_plus,
            normal_minus,
            conormal_plus,
            conormal_minus,
            tangent,
            length,
            circumcenter_distance,
            midpoint,
            circumcenter_plus,
            circumcenter_minus,
            endpoints: [x1, x2],
        }
    }

    /// Swaps the plus/minus roles of every edge while keeping the edge
    /// tangents. Verification helper for the orientation-independence of the
    /// regularizer; the result intentionally violates the deterministic
    /// orientation rule.
    pub fn flip_edge_sides(&self) -> Self {
        let mut edges = self.edges.clone();
        for e in &mut edges {
            e.tris.swap(0, 1);
            e.opposite.swap(0, 1);
        }
        let mut tri_edges = self.tri_edges.clone();
        for tes in &mut tri_edges {
            for te in tes.iter_mut() {
                te.plus_side = !te.plus_side;
            }
        }
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            edges,
            tri_edges,
            scale_sq: self.scale_sq,
        }
    }
}

fn third_vertex(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).expect("edge vertices in triangle")
}

fn build_tri_edges(triangles: &[[usize; 3]], edges: &[Edge]) -> Vec<[TriangleEdge; 3]> {
    let mut by_pair: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        by_pair.insert((e.verts[0], e.verts[1]), i);
    }
    triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            std::array::from_fn(|k| {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let id = by_pair[&key];
                let e = &edges[id];
                TriangleEdge {
                    edge: id,
                    opposite: if e.tris[0] == t { e.opposite[0] } else { e.opposite[1] },
                    tail: e.verts[0],
                    head: e.verts[1],
                    plus_side: e.tris[0] == t,
                    forward: u < v,
                }
            })
        })
        .collect()
}

/// Full geometric frame of one interior edge: adjacent normals, away-pointing
/// co-normals, unit tangent, circumcenters and the signed intrinsic distance
/// between them.
///
/// `{normal_plus, conormal_plus, tangent}` is a right-handed orthonormal
/// triple; `{normal_minus, conormal_minus, -tangent}` is right-handed as well
/// (the minus side traverses the edge against the tangent).
#[derive(Debug, Clone, Copy)]
pub struct EdgeFrame {
    pub normal_plus: V3,
    pub normal_minus: V3,
    pub conormal_plus: V3,
    pub conormal_minus: V3,
    pub tangent: V3,
    pub length: f64,
    /// Signed intrinsic distance between the adjacent circumcenters, unfolded
    /// across the edge. May be negative for obtuse triangle pairs.
    pub circumcenter_distance: f64,
    pub midpoint: V3,
    pub circumcenter_plus: V3,
    pub circumcenter_minus: V3,
    pub endpoints: [V3; 2],
}

impl EdgeFrame {
    /// Frame of the edge `x1 -> x2` shared by the plus triangle
    /// `(x1, x2, opposite_plus)` and the minus triangle
    /// `(x2, x1, opposite_minus)`.
    pub fn from_two_triangles(x1: V3, x2: V3, opposite_plus: V3, opposite_minus: V3) -> Self {
        let (tangent, length) = (x2 - x1).normalized();
        let midpoint = (x1 + x2).scale(0.5);

        let (normal_plus, _) = triangle_normal_area(x1, x2, opposite_plus);
        let (normal_minus, _) = triangle_normal_area(x2, x1, opposite_minus);
        // Co-normals point away from their triangle; each side's triple
        // {n, mu, d} with the side's own traversal direction d = +-tangent is
        // right-handed and orthonormal.
        let conormal_plus = tangent.cross(normal_plus);
        let conormal_minus = normal_minus.cross(tangent);

        let circumcenter_plus = circumcenter(x1, x2, opposite_plus);
        let circumcenter_minus = circumcenter(x2, x1, opposite_minus);
        let circumcenter_distance = conormal_plus.dot(midpoint - circumcenter_plus)
            + conormal_minus.dot(midpoint - circumcenter_minus);
        if circumcenter_distance <= 0.0 {
            log::warn!(
                "edge: nonpositive intrinsic circumcenter distance {circumcenter_distance:.3e}"
            );
        }

        EdgeFrame {
            normal_plus,
            normal_minus,
            conormal_plus,
            conormal_minus,
            tangent,
            length,
            circumcenter_distance,
            midpoint,
            circumcenter_plus,
            circumcenter_minus,
            endpoints: [x1, x2],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use approx::assert_relative_eq;

    fn two_triangle_fold(dihedral: f64) -> EdgeFrame {
        // Shared edge from (0,0,0) to (1,0,0); the "plus" triangle lies in the
        // xy-plane, the other is rotated about the edge by `dihedral`
        // (0 = coplanar).
        EdgeFrame::from_two_triangles(
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(0.5, 1.0, 0.0),
            V3::new(0.5, -(dihedral.cos()), dihedral.sin()),
        )
    }

    #[test]
    fn tetrahedron_topology() {
        let mesh = primitives::tetrahedron();
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.num_triangles(), 4);
        assert_eq!(mesh.num_edges(), 6);
        for e in mesh.edges() {
            assert_ne!(e.tris[0], e.tris[1]);
        }
        // Euler characteristic of a sphere.
        assert_eq!(
            mesh.num_vertices() + mesh.num_triangles() - mesh.num_edges(),
            2
        );
    }

    #[test]
    fn icosahedron_has_thirty_edges() {
        let mesh = primitives::icosahedron();
        assert_eq!(mesh.num_edges(), 30);
        assert_eq!(
            mesh.num_vertices() + mesh.num_triangles() - mesh.num_edges(),
            2
        );
    }

    #[test]
    fn boundary_edge_is_rejected() {
        let verts = vec![
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(0.5, 1.0, 0.0),
            V3::new(0.5, -1.0, 0.0),
        ];
        let err = TriMesh::build(verts, vec![[0, 1, 2], [1, 0, 3]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge(_, _, 1)));
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        let mesh = primitives::tetrahedron();
        let mut tris = mesh.triangles().to_vec();
        tris[0].swap(0, 1);
        let err = TriMesh::build(mesh.vertices().to_vec(), tris).unwrap_err();
        assert!(matches!(
            err,
            Error::InconsistentOrientation(_, _) | Error::NonManifoldEdge(_, _, _)
        ));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let verts = vec![
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(2.0, 0.0, 0.0),
            V3::new(0.5, 1.0, 0.0),
        ];
        let err = TriMesh::build(verts, vec![[0, 1, 2], [0, 2, 3], [1, 0, 3], [2, 1, 3]])
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle(0)));
    }

    #[test]
    fn normals_follow_orientation() {
        let verts = vec![
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(0.0, 1.0, 0.0),
        ];
        let (n, _) = triangle_normal_area(verts[0], verts[1], verts[2]);
        assert_relative_eq!(n.z, 1.0, epsilon = 1e-15);
        let (n_rev, _) = triangle_normal_area(verts[0], verts[2], verts[1]);
        assert_relative_eq!(n_rev.z, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn convex_mesh_normals_point_outward() {
        let mesh = primitives::icosahedron();
        let center = mesh
            .vertices()
            .iter()
            .fold(V3::zero(), |acc, &v| acc + v)
            .scale(1.0 / mesh.num_vertices() as f64);
        for t in 0..mesh.num_triangles() {
            let (n, _) = mesh.triangle_normal_area(t);
            let [a, b, c] = mesh.triangle_points(t);
            let centroid = (a + b + c).scale(1.0 / 3.0);
            assert!(n.dot(centroid - center) > 0.0, "triangle {t} points inward");
        }
    }

    #[test]
    fn edge_frame_orthonormal_and_away_pointing() {
        let mesh = primitives::icosphere(1);
        for e in 0..mesh.num_edges() {
            let f = mesh.edge_frame(e);
            let edge = &mesh.edges()[e];
            for (n, mu) in [
                (f.normal_plus, f.conormal_plus),
                (f.normal_minus, f.conormal_minus),
            ] {
                assert!(n.dot(mu).abs() < 1e-12);
                assert!(mu.dot(f.tangent).abs() < 1e-12);
                assert_relative_eq!(mu.norm(), 1.0, epsilon = 1e-12);
                assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
            }
            assert_relative_eq!(f.tangent.norm(), 1.0, epsilon = 1e-12);
            // Triple handedness: plus side right-handed, minus side traverses
            // the edge backwards.
            let det_plus = f.normal_plus.cross(f.conormal_plus).dot(f.tangent);
            let det_minus = f.normal_minus.cross(f.conormal_minus).dot(f.tangent);
            assert_relative_eq!(det_plus, 1.0, epsilon = 1e-12);
            assert_relative_eq!(det_minus, -1.0, epsilon = 1e-12);
            // Away-pointing: negative inner product with midpoint-to-opposite.
            for (side, mu) in [(0usize, f.conormal_plus), (1usize, f.conormal_minus)] {
                let p = mesh.vertices()[edge.opposite[side]];
                assert!(mu.dot(p - f.midpoint) < 0.0);
            }
        }
    }

    #[test]
    fn coplanar_frame_has_opposite_conormals() {
        let f = two_triangle_fold(0.0);
        assert!((f.normal_plus - f.normal_minus).norm() < 1e-12);
        assert!((f.conormal_plus + f.conormal_minus).norm() < 1e-12);
    }

    #[test]
    fn right_angle_fold_has_orthogonal_normals() {
        let f = two_triangle_fold(std::f64::consts::FRAC_PI_2);
        let angle = f.normal_plus.dot(f.normal_minus).clamp(-1.0, 1.0).acos();
        assert_relative_eq!(angle, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn equilateral_pair_circumcenter_distance() {
        // Two coplanar unit equilateral triangles sharing a unit edge.
        let h = 3f64.sqrt() / 2.0;
        let f = EdgeFrame::from_two_triangles(
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(0.5, h, 0.0),
            V3::new(0.5, -h, 0.0),
        );
        assert_relative_eq!(f.circumcenter_distance, 3f64.sqrt() / 3.0, epsilon = 1e-12);
        // Planar case: equals the Euclidean circumcenter distance.
        assert_relative_eq!(
            f.circumcenter_distance,
            (f.circumcenter_plus - f.circumcenter_minus).norm(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn barrier_values() {
        let mesh = primitives::tetrahedron();
        let area = mesh.areas()[0];
        let tau = 1e-12;
        assert_relative_eq!(mesh.barrier(tau), 4.0 * tau / area, max_relative = 1e-12);
        assert_eq!(mesh.barrier(0.0), 0.0);
        // Halving areas (scaling coordinates by 1/sqrt(2)) doubles the barrier.
        let shrunk = mesh
            .with_vertices(
                mesh.vertices()
                    .iter()
                    .map(|&v| v.scale(1.0 / 2f64.sqrt()))
                    .collect(),
            )
            .unwrap();
        assert_relative_eq!(
            shrunk.barrier(tau),
            2.0 * mesh.barrier(tau),
            max_relative = 1e-12
        );
    }

    #[test]
    fn orientation_is_index_deterministic() {
        let mesh = primitives::icosphere(1);
        // Perturb coordinates; the edge list and plus/minus assignment must
        // not change.
        let moved: Vec<V3> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + V3::new(0.01 * (i as f64).sin(), -0.02, 0.015 * (i as f64).cos()))
            .collect();
        let rebuilt = TriMesh::build(moved, mesh.triangles().to_vec()).unwrap();
        assert_eq!(mesh.num_edges(), rebuilt.num_edges());
        for (a, b) in mesh.edges().iter().zip(rebuilt.edges()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn euler_characteristic_on_subdivided_spheres() {
        for n in 0..3 {
            let mesh = primitives::icosphere(n);
            assert_eq!(
                mesh.num_vertices() + mesh.num_triangles() - mesh.num_edges(),
                2
            );
        }
    }
}
