//! Tangential Raviart-Thomas space: piecewise linear, matrix-valued fields
//! with two degrees of freedom per edge and intrinsic co-normal continuity.
//!
//! On each triangle a field value is a 3x3 matrix mapping in-plane vectors to
//! vectors tangent to the triangle normal (rows annihilate the normal,
//! columns are orthogonal to it). The two basis functions of an edge are
//! supported on its two adjacent triangles; the matching degree-of-freedom
//! functionals are edge integrals of the co-normal and tangential components,
//! which are biorthogonal to the basis.

use crate::error::{Error, Result};
use crate::math::{mat_vec, outer, tangent_projector, Mat3, Tensor3, V3};
use crate::mesh::TriMesh;
use crate::sphere;

/// Which of the two basis functions / degrees of freedom of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFn {
    /// Couples the co-normal component `mu+^T W mu+`.
    Conormal,
    /// Couples the tangential component `t^T W mu+`.
    Tangential,
}

impl BasisFn {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            BasisFn::Conormal => 0,
            BasisFn::Tangential => 1,
        }
    }
}

/// Coefficient vector of a tangential Raviart-Thomas field: two scalars per
/// edge, ordered `[edge 0 conormal, edge 0 tangential, edge 1 conormal, ...]`.
///
/// Coefficients are bound to a mesh topology (edge count); when the mesh
/// deforms, the same coefficients are reused with the deformed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrtField {
    coefficients: Vec<f64>,
}

impl TrtField {
    pub fn zeros(mesh: &TriMesh) -> Self {
        Self {
            coefficients: vec![0.0; 2 * mesh.num_edges()],
        }
    }

    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        assert!(coefficients.len() % 2 == 0, "two coefficients per edge");
        Self { coefficients }
    }

    /// Field with independent uniform coefficients in `[-amplitude,
    /// amplitude]`; testing and benchmarking helper.
    pub fn random(mesh: &TriMesh, rng: &mut impl rand::Rng, amplitude: f64) -> Self {
        Self {
            coefficients: (0..2 * mesh.num_edges())
                .map(|_| rng.gen_range(-amplitude..amplitude))
                .collect(),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    #[inline]
    pub fn coefficient(&self, edge: usize, which: BasisFn) -> f64 {
        self.coefficients[2 * edge + which.index()]
    }

    pub fn set_coefficient(&mut self, edge: usize, which: BasisFn, value: f64) {
        self.coefficients[2 * edge + which.index()] = value;
    }

    fn check_bound(&self, mesh: &TriMesh) -> Result<()> {
        if self.coefficients.len() != 2 * mesh.num_edges() {
            return Err(Error::SizeMismatch(format!(
                "field has {} coefficients, mesh has {} edges",
                self.coefficients.len(),
                mesh.num_edges()
            )));
        }
        Ok(())
    }

    /// Field value on triangle `tri` at the point `x` (must lie in the
    /// triangle). The result maps in-plane vectors to the tangent plane of
    /// the triangle normal.
    pub fn value(&self, mesh: &TriMesh, tri: usize, x: V3) -> Result<Mat3> {
        self.check_bound(mesh)?;
        check_point_in_triangle(mesh, tri, x)?;
        let (n, area) = mesh.triangle_normal_area(tri);
        let mut m = [[0.0; 3]; 3];
        for te in mesh.triangle_edges(tri) {
            let c1 = self.coefficients[2 * te.edge];
            let c2 = self.coefficients[2 * te.edge + 1];
            if c1 == 0.0 && c2 == 0.0 {
                continue;
            }
            let tau = if te.forward { 1.0 } else { -1.0 };
            let sigma = if te.plus_side { 1.0 } else { -1.0 };
            let (t, _) = (mesh.vertices()[te.head] - mesh.vertices()[te.tail]).normalized();
            // Both basis functions of this edge share the row factor
            // (x - p)^T / (2|T|); the column directions are the away-pointing
            // co-normal (traversal direction crossed with the normal) and the
            // role-signed edge tangent.
            let col = t.cross(n).scale(tau * c1) + t.scale(sigma * c2);
            let row = (x - mesh.vertices()[te.opposite]).scale(1.0 / (2.0 * area));
            let contribution = outer(col, row);
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += contribution[i][j];
                }
            }
        }
        Ok(m)
    }

    /// The pair of degree-of-freedom integrals of this field on `edge`:
    /// `(∫_E mu+^T W mu+ dS, ∫_E t^T W mu+ dS)`. Integrands are constant
    /// along the edge, so the midpoint value times the length is exact. By
    /// biorthogonality this returns exactly the stored coefficients.
    pub fn dof_values(&self, mesh: &TriMesh, edge: usize) -> Result<(f64, f64)> {
        let frame = mesh.edge_frame(edge);
        let plus_tri = mesh.edges()[edge].tris[0];
        let w = self.value(mesh, plus_tri, frame.midpoint)?;
        let w_mu = mat_vec(&w, frame.conormal_plus);
        Ok((
            frame.length * frame.conormal_plus.dot(w_mu),
            frame.length * frame.tangent.dot(w_mu),
        ))
    }

    /// Constant per-triangle Jacobian of the field as an order-3 tensor:
    /// first axis in the tangent plane of the triangle normal, remaining axes
    /// the in-plane projector.
    pub fn jacobian(&self, mesh: &TriMesh, tri: usize) -> Result<Tensor3> {
        self.check_bound(mesh)?;
        let (n, area) = mesh.triangle_normal_area(tri);
        let u = self.jacobian_direction(mesh, tri, n, area);
        Ok(Tensor3::outer(u, tangent_projector(n)))
    }

    /// The vector `u` with `jacobian = u ⊗ (id - n n^T)`.
    pub(crate) fn jacobian_direction(&self, mesh: &TriMesh, tri: usize, n: V3, area: f64) -> V3 {
        let mut u = V3::zero();
        for te in mesh.triangle_edges(tri) {
            let c1 = self.coefficients[2 * te.edge];
            let c2 = self.coefficients[2 * te.edge + 1];
            let tau = if te.forward { 1.0 } else { -1.0 };
            let sigma = if te.plus_side { 1.0 } else { -1.0 };
            let (t, _) = (mesh.vertices()[te.head] - mesh.vertices()[te.tail]).normalized();
            u += t.cross(n).scale(tau * c1) + t.scale(sigma * c2);
        }
        u.scale(1.0 / (2.0 * area))
    }

    /// Intrinsic jump of the field across `edge`, evaluated at the two edge
    /// endpoints (the jump is linear along the edge). Values are tangent to
    /// the plus normal: the minus-side trace is parallel-transported into the
    /// plus tangent plane before subtracting.
    pub fn jump(&self, mesh: &TriMesh, edge: usize) -> Result<[V3; 2]> {
        self.check_bound(mesh)?;
        let e = &mesh.edges()[edge];
        let frame = mesh.edge_frame(edge);
        let mut out = [V3::zero(); 2];
        for (i, &x) in frame.endpoints.iter().enumerate() {
            let w_plus = self.value(mesh, e.tris[0], x)?;
            let w_minus = self.value(mesh, e.tris[1], x)?;
            let minus_trace = mat_vec(&w_minus, frame.tangent);
            let transported =
                sphere::parallel_transport(frame.normal_minus, frame.normal_plus, minus_trace)?;
            out[i] = transported - mat_vec(&w_plus, frame.tangent);
        }
        Ok(out)
    }
}

/// Evaluates one basis function of `edge` on triangle `tri` at `x`. Returns
/// the zero matrix when the triangle is not adjacent to the edge.
pub fn basis_value(
    mesh: &TriMesh,
    edge: usize,
    which: BasisFn,
    tri: usize,
    x: V3,
) -> Result<Mat3> {
    check_point_in_triangle(mesh, tri, x)?;
    let Some(te) = mesh.triangle_edges(tri).iter().find(|te| te.edge == edge) else {
        return Ok([[0.0; 3]; 3]);
    };
    let (n, area) = mesh.triangle_normal_area(tri);
    let tau = if te.forward { 1.0 } else { -1.0 };
    let sigma = if te.plus_side { 1.0 } else { -1.0 };
    let (t, _) = (mesh.vertices()[te.head] - mesh.vertices()[te.tail]).normalized();
    let p = mesh.vertices()[te.opposite];
    let row = (x - p).scale(1.0 / (2.0 * area));
    let col = match which {
        BasisFn::Conormal => t.cross(n).scale(tau),
        BasisFn::Tangential => t.scale(sigma),
    };
    Ok(outer(col, row))
}

/// Rejects points that do not lie in the closed triangle (within a small
/// scale-relative tolerance, so edge and vertex evaluation points pass).
fn check_point_in_triangle(mesh: &TriMesh, tri: usize, x: V3) -> Result<()> {
    let [a, b, c] = mesh.triangle_points(tri);
    let u = b - a;
    let v = c - a;
    let w = x - a;
    let uu = u.norm_sq();
    let vv = v.norm_sq();
    let uv = u.dot(v);
    let det = uu * vv - uv * uv;
    let wu = w.dot(u);
    let wv = w.dot(v);
    let beta = (vv * wu - uv * wv) / det;
    let gamma = (uu * wv - uv * wu) / det;
    let alpha = 1.0 - beta - gamma;
    let tol = 1e-9;
    let in_plane = (w - u * beta - v * gamma).norm_sq() <= tol * (uu + vv);
    if alpha < -tol || beta < -tol || gamma < -tol || !in_plane {
        return Err(Error::PointOutsideTriangle(tri));
    }
    Ok(())
}
