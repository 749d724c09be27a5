//! Discrete total variation and second-order total generalized variation of
//! the unit-normal field, as evaluatable functionals of a mesh and an
//! auxiliary tangential Raviart-Thomas field.
//!
//! The TGV objective has three parts: an edge term coupling the signed
//! dihedral angle to the co-normal degree of freedom of the auxiliary field,
//! a per-triangle Frobenius norm of the field's Jacobian, and a per-edge norm
//! of the intrinsically transported jump (trapezoidal in the two endpoint
//! values). With the zero field the objective collapses exactly to
//! `alpha1 * tv_normal`.

use crate::error::{Error, Result};
use crate::math::{mat_vec, V3};
use crate::mesh::TriMesh;
use crate::parallel;
use crate::sphere::{self, signed_normal_angle, ANTIPODAL_GUARD};
use crate::trt::TrtField;
use serde::{Deserialize, Serialize};

/// Nonnegative regularization weights: `alpha0` on the derivative terms of
/// the auxiliary field, `alpha1` on the coupling term, `beta` for the
/// first-order TV baseline mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegularizerWeights {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta: f64,
}

impl RegularizerWeights {
    pub fn tgv(alpha0: f64, alpha1: f64) -> Self {
        assert!(alpha0 >= 0.0 && alpha1 >= 0.0);
        Self {
            alpha0,
            alpha1,
            beta: 0.0,
        }
    }
}

/// Value of the TGV objective split into its unweighted sums. The total is
/// `alpha1 * alpha1_term + alpha0 * (jacobian_term + jump_term)`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TgvBreakdown {
    pub alpha1_term: f64,
    pub jacobian_term: f64,
    pub jump_term: f64,
    pub total: f64,
}

/// Total variation of the normal: sum over edges of length times the
/// geodesic distance between the adjacent unit normals. Zero exactly for
/// planar meshes.
pub fn tv_normal(mesh: &TriMesh) -> Result<f64> {
    let per_edge = parallel::try_map_indexed(mesh.num_edges(), |e| {
        let f = mesh.edge_frame(e);
        if f.normal_plus.dot(f.normal_minus) < -1.0 + ANTIPODAL_GUARD {
            return Err(Error::AntipodalPoints);
        }
        Ok(f.length * sphere::geodesic_distance(f.normal_plus, f.normal_minus))
    })?;
    Ok(per_edge.into_iter().sum())
}

/// The coupling term of one edge: `|E| * |mu+^T (log(n+, n-) + h_E W|_+ mu+)|`.
/// The integrand is constant along the edge, so midpoint evaluation times
/// length is exact.
pub fn tgv_alpha1_edge(mesh: &TriMesh, field: &TrtField, edge: usize) -> Result<f64> {
    let f = mesh.edge_frame(edge);
    if f.normal_plus.dot(f.normal_minus) < -1.0 + ANTIPODAL_GUARD {
        return Err(Error::AntipodalPoints);
    }
    let theta = signed_normal_angle(f.normal_plus, f.normal_minus, f.conormal_plus);
    let plus_tri = mesh.edges()[edge].tris[0];
    let w = field.value(mesh, plus_tri, f.midpoint)?;
    let coupled = theta
        + f.circumcenter_distance * f.conormal_plus.dot(mat_vec(&w, f.conormal_plus));
    Ok(f.length * coupled.abs())
}

/// Discrete TGV of the normal for a fixed auxiliary field.
pub fn tgv_objective(
    mesh: &TriMesh,
    field: &TrtField,
    weights: &RegularizerWeights,
) -> Result<TgvBreakdown> {
    let edge_terms = parallel::try_map_indexed(mesh.num_edges(), |e| {
        let coupling = tgv_alpha1_edge(mesh, field, e)?;
        let jump = field.jump(mesh, e)?;
        let f = mesh.edge_frame(e);
        Ok::<_, Error>((coupling, 0.5 * f.length * (jump[0].norm() + jump[1].norm())))
    })?;
    let jacobian_term = parallel::try_map_indexed(mesh.num_triangles(), |t| {
        let (_, area) = mesh.triangle_normal_area(t);
        Ok::<_, Error>(area * field.jacobian(mesh, t)?.norm())
    })?
    .into_iter()
    .sum::<f64>();

    let alpha1_term: f64 = edge_terms.iter().map(|&(c, _)| c).sum();
    let jump_term: f64 = edge_terms.iter().map(|&(_, j)| j).sum();
    Ok(TgvBreakdown {
        alpha1_term,
        jacobian_term,
        jump_term,
        total: weights.alpha1 * alpha1_term + weights.alpha0 * (jacobian_term + jump_term),
    })
}

/// Squared l2 fidelity `(1/2) sum_V |x_V - x_V^data|^2`.
pub fn fidelity(mesh: &TriMesh, reference_vertices: &[V3]) -> Result<f64> {
    if reference_vertices.len() != mesh.num_vertices() {
        return Err(Error::SizeMismatch(format!(
            "reference has {} vertices, mesh has {}",
            reference_vertices.len(),
            mesh.num_vertices()
        )));
    }
    Ok(0.5
        * mesh
            .vertices()
            .iter()
            .zip(reference_vertices)
            .map(|(&x, &r)| (x - r).norm_sq())
            .sum::<f64>())
}
