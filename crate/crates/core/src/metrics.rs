//! Error metrics between a denoised mesh and its clean reference, and the
//! JSON report written by the command line tool.

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::parallel;
use crate::regularizer::{self, TgvBreakdown};
use crate::sphere::geodesic_distance;
use serde::{Deserialize, Serialize};

/// Quantitative comparison of two meshes with identical topology.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Per-triangle geodesic angle between unit normals, averaged, degrees.
    pub mean_angular_normal_error_deg: f64,
    pub rms_vertex_distance: f64,
    pub max_vertex_distance: f64,
    /// Total variation of the normal of the result mesh.
    pub tv_normal: f64,
    /// TGV breakdown of the result (filled by callers that hold the final
    /// auxiliary field; zero otherwise).
    pub tgv: TgvBreakdown,
    pub runtime_seconds: f64,
    pub iterations: usize,
}

/// Geometric error metrics of `result` against `reference`.
pub fn compute_metrics(result: &TriMesh, reference: &TriMesh) -> Result<MetricsReport> {
    if result.num_vertices() != reference.num_vertices()
        || result.num_triangles() != reference.num_triangles()
    {
        return Err(Error::SizeMismatch(
            "metrics require identical topology".into(),
        ));
    }
    let angles = parallel::map_indexed(result.num_triangles(), |t| {
        let (n_res, _) = result.triangle_normal_area(t);
        let (n_ref, _) = reference.triangle_normal_area(t);
        geodesic_distance(n_res, n_ref).to_degrees()
    });
    let mean_angular = angles.iter().sum::<f64>() / angles.len() as f64;

    let mut sum_sq = 0.0;
    let mut max_d = 0.0_f64;
    for (a, b) in result.vertices().iter().zip(reference.vertices()) {
        let d = (*a - *b).norm();
        sum_sq += d * d;
        max_d = max_d.max(d);
    }

    Ok(MetricsReport {
        mean_angular_normal_error_deg: mean_angular,
        rms_vertex_distance: (sum_sq / result.num_vertices() as f64).sqrt(),
        max_vertex_distance: max_d,
        tv_normal: regularizer::tv_normal(result)?,
        tgv: TgvBreakdown::default(),
        runtime_seconds: 0.0,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::V3;
    use crate::primitives;
    use approx::assert_relative_eq;

    #[test]
    fn identical_meshes_have_zero_error() {
        let mesh = primitives::icosphere(1);
        let report = compute_metrics(&mesh, &mesh).unwrap();
        assert_eq!(report.mean_angular_normal_error_deg, 0.0);
        assert_eq!(report.rms_vertex_distance, 0.0);
        assert_eq!(report.max_vertex_distance, 0.0);
    }

    #[test]
    fn translation_moves_vertices_but_not_normals() {
        let mesh = primitives::icosphere(1);
        let d = V3::new(0.3, -0.4, 1.2);
        let moved = mesh
            .with_vertices(mesh.vertices().iter().map(|&v| v + d).collect())
            .unwrap();
        let report = compute_metrics(&moved, &mesh).unwrap();
        assert_relative_eq!(report.rms_vertex_distance, d.norm(), max_relative = 1e-12);
        assert_relative_eq!(report.max_vertex_distance, d.norm(), max_relative = 1e-12);
        assert!(report.mean_angular_normal_error_deg < 1e-10);
        // Symmetric in its arguments for the distance fields.
        let swapped = compute_metrics(&mesh, &moved).unwrap();
        assert_relative_eq!(
            swapped.rms_vertex_distance,
            report.rms_vertex_distance,
            max_relative = 1e-12
        );
    }

    #[test]
    fn noise_produces_positive_angular_error() {
        let mesh = crate::generate::generate_hemisphere_grid(1, 1, &[1.0], &[24]);
        let noisy = crate::generate::add_noise(&mesh, 0.2, 42).unwrap();
        let report = compute_metrics(&noisy, &mesh).unwrap();
        assert!(report.mean_angular_normal_error_deg > 1.0);
    }

    #[test]
    fn topology_mismatch_is_rejected() {
        let a = primitives::icosphere(0);
        let b = primitives::icosphere(1);
        assert!(matches!(
            compute_metrics(&a, &b),
            Err(Error::SizeMismatch(_))
        ));
    }
}
