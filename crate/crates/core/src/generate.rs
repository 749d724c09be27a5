//! Synthetic test geometry (hemispheres and half-cylinders on flat bases)
//! and reproducible Gaussian vertex noise.
//!
//! Grid generators place one closed body per cell: the curved shell plus the
//! planar base closing it, so every mesh satisfies the closed-manifold
//! requirement. Radii vary per row, angular resolutions per column, matching
//! a radius/resolution sweep layout.

use crate::error::Result;
use crate::math::V3;
use crate::mesh::TriMesh;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Grid of closed hemisphere-on-disk bodies. `radii` has one entry per row,
/// `resolutions` (points around the equator) one per column.
pub fn generate_hemisphere_grid(
    rows: usize,
    cols: usize,
    radii: &[f64],
    resolutions: &[usize],
) -> TriMesh {
    assert!(rows > 0 && cols > 0);
    assert_eq!(radii.len(), rows, "one radius per row");
    assert_eq!(resolutions.len(), cols, "one resolution per column");
    let spacing = 2.6 * radii.iter().cloned().fold(0.0, f64::max);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let center = V3::new(spacing * j as f64, spacing * i as f64, 0.0);
            hemisphere_body(radii[i], resolutions[j], center, &mut vertices, &mut triangles);
        }
    }
    TriMesh::build(vertices, triangles).expect("generated hemisphere grid is valid")
}

/// Grid of closed solid half-cylinders lying on their rectangular base.
pub fn generate_halfcylinder_grid(
    rows: usize,
    cols: usize,
    radii: &[f64],
    resolutions: &[usize],
) -> TriMesh {
    assert!(rows > 0 && cols > 0);
    assert_eq!(radii.len(), rows, "one radius per row");
    assert_eq!(resolutions.len(), cols, "one resolution per column");
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let spacing_x = 2.6 * r_max;
    let spacing_y = 3.2 * r_max;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let center = V3::new(spacing_x * j as f64, spacing_y * i as f64, 0.0);
            halfcylinder_body(radii[i], resolutions[j], center, &mut vertices, &mut triangles);
        }
    }
    TriMesh::build(vertices, triangles).expect("generated half-cylinder grid is valid")
}

/// Perturbs every vertex coordinate by independent Gaussian noise with
/// standard deviation `sigma_factor` times the mean edge length.
/// Deterministic in the seed.
pub fn add_noise(mesh: &TriMesh, sigma_factor: f64, seed: u64) -> Result<TriMesh> {
    assert!(sigma_factor >= 0.0);
    if sigma_factor == 0.0 {
        return Ok(mesh.clone());
    }
    let sigma = sigma_factor * mesh.mean_edge_length();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let vertices = mesh
        .vertices()
        .iter()
        .map(|&v| {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            let dz: f64 = StandardNormal.sample(&mut rng);
            v + V3::new(dx, dy, dz).scale(sigma)
        })
        .collect();
    mesh.with_vertices(vertices)
}

/// Appends one hemisphere of radius `r` closed by a flat disk, centered at
/// `c` (equator plane z = 0), with `slices` points around the equator.
fn hemisphere_body(
    r: f64,
    slices: usize,
    c: V3,
    vertices: &mut Vec<V3>,
    triangles: &mut Vec<[usize; 3]>,
) {
    assert!(slices >= 8, "resolution too coarse");
    let stacks = (slices / 4).max(2);
    let disk_rings = stacks;
    let base = vertices.len();
    let tri_base = triangles.len();

    let apex = vertices.len();
    vertices.push(c + V3::new(0.0, 0.0, r));
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for k in 1..=stacks {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / stacks as f64;
        rings.push(push_ring(vertices, c, r * phi.sin(), r * phi.cos(), slices));
    }
    for l in 1..disk_rings {
        let rho = r * (1.0 - l as f64 / disk_rings as f64);
        rings.push(push_ring(vertices, c, rho, 0.0, slices));
    }
    let center = vertices.len();
    vertices.push(c);

    fan(triangles, apex, &rings[0], false);
    for pair in rings.windows(2) {
        stitch(triangles, &pair[0], &pair[1]);
    }
    fan(triangles, center, rings.last().unwrap(), true);

    orient_outward(vertices, &mut triangles[tri_base..], base);
}

/// Appends one solid half-cylinder: barrel of radius `r` along the y-axis
/// (length `2 r`), two half-disk caps, and the rectangular base at z = 0.
fn halfcylinder_body(
    r: f64,
    arc_segments: usize,
    c: V3,
    vertices: &mut Vec<V3>,
    triangles: &mut Vec<[usize; 3]>,
) {
    assert!(arc_segments >= 8, "resolution too coarse");
    let s = arc_segments;
    let n_r = (s / 3).max(2);
    let length = 2.0 * r;
    let n_l = ((length / (std::f64::consts::PI * r / s as f64)).round() as usize).max(2);
    let base = vertices.len();
    let tri_base = triangles.len();

    // Profile points in the xz-plane: (l, m) with radius index l = 1..=n_r
    // and angle index m = 0..=s, plus the center. Profile id layout:
    // center = 0, then (l, m) -> 1 + (l - 1) * (s + 1) + m.
    let pid = |l: usize, m: usize| -> usize { 1 + (l - 1) * (s + 1) + m };
    let profile_len = 1 + n_r * (s + 1);
    let point = |l: usize, m: usize, y: f64| -> V3 {
        if l == 0 {
            return c + V3::new(0.0, y, 0.0);
        }
        let rho = r * l as f64 / n_r as f64;
        let theta = std::f64::consts::PI * m as f64 / s as f64;
        c + V3::new(rho * theta.cos(), y, rho * theta.sin())
    };
    let profile_point = |p: usize, y: f64| -> V3 {
        if p == 0 {
            point(0, 0, y)
        } else {
            point((p - 1) / (s + 1) + 1, (p - 1) % (s + 1), y)
        }
    };

    // Boundary loop of the profile, in order: outer arc, then down the
    // negative-x half of the diameter, through the center, back up the
    // positive-x half.
    let mut boundary = Vec::with_capacity(s + 2 * n_r);
    for m in 0..=s {
        boundary.push(pid(n_r, m));
    }
    for l in (1..n_r).rev() {
        boundary.push(pid(l, s));
    }
    boundary.push(0);
    for l in 1..n_r {
        boundary.push(pid(l, 0));
    }
    // Cap vertices at both ends.
    let cap0: Vec<usize> = (0..profile_len)
        .map(|p| {
            vertices.push(profile_point(p, 0.0));
            vertices.len() - 1
        })
        .collect();
    let cap1: Vec<usize> = (0..profile_len)
        .map(|p| {
            vertices.push(profile_point(p, length));
            vertices.len() - 1
        })
        .collect();
    // Interior extrusion stations of each boundary vertex.
    let mut lines: Vec<Vec<usize>> = Vec::with_capacity(boundary.len());
    for &p in &boundary {
        let mut line = Vec::with_capacity(n_l + 1);
        line.push(cap0[p]);
        for q in 1..n_l {
            let y = length * q as f64 / n_l as f64;
            vertices.push(profile_point(p, y));
            line.push(vertices.len() - 1);
        }
        line.push(cap1[p]);
        lines.push(line);
    }

    // Caps: center fan plus ring-to-ring strips; rows are open (not wrapped).
    for (cap, flip) in [(&cap0, false), (&cap1, true)] {
        for m in 0..s {
            push_tri(triangles, cap[0], cap[pid(1, m)], cap[pid(1, m + 1)], flip);
        }
        for l in 1..n_r {
            for m in 0..s {
                let (a, b2) = (cap[pid(l, m)], cap[pid(l, m + 1)]);
                let (d, e) = (cap[pid(l + 1, m)], cap[pid(l + 1, m + 1)]);
                push_tri(triangles, a, d, e, flip);
                push_tri(triangles, a, e, b2, flip);
            }
        }
    }
    // Side surface: quads between consecutive boundary lines and stations.
    let nb = boundary.len();
    for b in 0..nb {
        let la = &lines[b];
        let lb = &lines[(b + 1) % nb];
        for q in 0..n_l {
            push_tri(triangles, la[q], lb[q], lb[q + 1], true);
            push_tri(triangles, la[q], lb[q + 1], la[q + 1], true);
        }
    }

    orient_outward(vertices, &mut triangles[tri_base..], base);
}

fn push_ring(vertices: &mut Vec<V3>, c: V3, radius: f64, z: f64, slices: usize) -> Vec<usize> {
    let start = vertices.len();
    for m in 0..slices {
        let theta = std::f64::consts::TAU * m as f64 / slices as f64;
        vertices.push(c + V3::new(radius * theta.cos(), radius * theta.sin(), z));
    }
    (start..start + slices).collect()
}

fn fan(triangles: &mut Vec<[usize; 3]>, hub: usize, ring: &[usize], flip: bool) {
    let n = ring.len();
    for m in 0..n {
        push_tri(triangles, hub, ring[m], ring[(m + 1) % n], flip);
    }
}

fn stitch(triangles: &mut Vec<[usize; 3]>, a: &[usize], b: &[usize]) {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    for m in 0..n {
        let m1 = (m + 1) % n;
        push_tri(triangles, a[m], b[m], b[m1], false);
        push_tri(triangles, a[m], b[m1], a[m1], false);
    }
}

fn push_tri(triangles: &mut Vec<[usize; 3]>, a: usize, b: usize, c: usize, flip: bool) {
    if flip {
        triangles.push([a, c, b]);
    } else {
        triangles.push([a, b, c]);
    }
}

/// Flips the winding of a closed body if its signed volume is negative, so
/// normals point outward.
fn orient_outward(vertices: &[V3], triangles: &mut [[usize; 3]], _base: usize) {
    let volume: f64 = triangles
        .iter()
        .map(|&[a, b, c]| vertices[a].dot(vertices[b].cross(vertices[c])) / 6.0)
        .sum();
    if volume < 0.0 {
        for t in triangles.iter_mut() {
            t.swap(1, 2);
        }
    }
}
