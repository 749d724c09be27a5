//! Closed primitive meshes used by tests, benchmarks and the synthetic
//! geometry generators.

use crate::error::Result;
use crate::math::V3;
use crate::mesh::TriMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::HashMap;

/// Regular tetrahedron inscribed in the unit sphere, outward-oriented.
pub fn tetrahedron() -> TriMesh {
    let s = 1.0 / 3f64.sqrt();
    let vertices = vec![
        V3::new(s, s, s),
        V3::new(s, -s, -s),
        V3::new(-s, s, -s),
        V3::new(-s, -s, s),
    ];
    let triangles = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::build(vertices, triangles).expect("valid tetrahedron")
}

/// Axis-aligned unit cube, each face split into two triangles, outward.
pub fn cube() -> TriMesh {
    let vertices = vec![
        V3::new(0.0, 0.0, 0.0),
        V3::new(1.0, 0.0, 0.0),
        V3::new(1.0, 1.0, 0.0),
        V3::new(0.0, 1.0, 0.0),
        V3::new(0.0, 0.0, 1.0),
        V3::new(1.0, 0.0, 1.0),
        V3::new(1.0, 1.0, 1.0),
        V3::new(0.0, 1.0, 1.0),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::build(vertices, triangles).expect("valid cube")
}

/// Regular icosahedron on the unit sphere.
pub fn icosahedron() -> TriMesh {
    let (vertices, triangles) = icosahedron_raw();
    TriMesh::build(vertices, triangles).expect("valid icosahedron")
}

fn icosahedron_raw() -> (Vec<V3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let vertices = raw
        .iter()
        .map(|&[x, y, z]| V3::new(x, y, z).normalized().0)
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, triangles)
}

/// Unit sphere approximated by `subdivisions` rounds of midpoint subdivision
/// of the icosahedron (20 * 4^n triangles), vertices projected to the sphere.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let (mut vertices, mut triangles) = icosahedron_raw();
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mid = std::array::from_fn::<usize, 3, _>(|k| {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = ((vertices[u] + vertices[v]).scale(0.5)).normalized().0;
                    vertices.push(m);
                    vertices.len() - 1
                })
            });
            next.push([tri[0], mid[0], mid[2]]);
            next.push([tri[1], mid[1], mid[0]]);
            next.push([tri[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        triangles = next;
    }
    TriMesh::build(vertices, triangles).expect("valid icosphere")
}

/// Icosphere with deterministic radial bumps: each vertex is scaled by
/// `1 + amplitude * u` with `u` uniform in [-1, 1]. Star-shaped for
/// `amplitude < 1`, so the mesh stays closed and non-degenerate. Handy as a
/// source of random yet valid closed test meshes.
pub fn bumpy_icosphere(subdivisions: u32, amplitude: f64, seed: u64) -> TriMesh {
    let base = icosphere(subdivisions);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let vertices: Vec<V3> = base
        .vertices()
        .iter()
        .map(|&v| v.scale(1.0 + amplitude * rng.gen_range(-1.0..1.0)))
        .collect();
    base.with_vertices(vertices).expect("bumpy icosphere stays valid")
}

/// Random rigid rotation of a mesh (deterministic in the seed); useful to
/// decorrelate axis-aligned structure in randomized tests.
pub fn rotated(mesh: &TriMesh, seed: u64) -> Result<TriMesh> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    // Rodrigues rotation about a random axis.
    let axis = loop {
        let v = V3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 {
            break v.scale(1.0 / n);
        }
    };
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (s, c) = angle.sin_cos();
    let rotate = |p: V3| p.scale(c) + axis.cross(p).scale(s) + axis.scale(axis.dot(p) * (1.0 - c));
    mesh.with_vertices(mesh.vertices().iter().map(|&v| rotate(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        let m = icosphere(2);
        assert_eq!(m.num_triangles(), 20 * 16);
        assert_eq!(m.num_vertices() + m.num_triangles() - m.num_edges(), 2);
    }

    #[test]
    fn bumpy_icosphere_is_deterministic() {
        let a = bumpy_icosphere(1, 0.3, 42);
        let b = bumpy_icosphere(1, 0.3, 42);
        assert_eq!(a.vertices(), b.vertices());
        let c = bumpy_icosphere(1, 0.3, 43);
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn rotation_preserves_edge_lengths() {
        let m = icosphere(0);
        let r = rotated(&m, 7).unwrap();
        for e in m.edges() {
            let d0 = (m.vertices()[e.verts[1]] - m.vertices()[e.verts[0]]).norm();
            let d1 = (r.vertices()[e.verts[1]] - r.vertices()[e.verts[0]]).norm();
            assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
