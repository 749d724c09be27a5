//! Geodesic calculus on the unit sphere: distance, logarithmic map, parallel
//! transport of vectors and order-3 tensors, plus the co-normal shortcuts
//! available between the normals of two triangles sharing an edge.
//!
//! All functions expect unit vectors. Pairs closer to antipodal than
//! [`ANTIPODAL_GUARD`] are rejected: the shortest geodesic is not unique
//! there, and adjacent triangle normals that far apart indicate a broken
//! mesh.

use crate::error::{Error, Result};
use crate::math::{Scalar, Tensor3, Vec3, V3};
use crate::mesh::EdgeFrame;

/// Two unit vectors with inner product below `-1 + ANTIPODAL_GUARD` are
/// treated as antipodal.
pub const ANTIPODAL_GUARD: f64 = 1e-9;

/// Below this geodesic distance the exact coincident-point branch is taken,
/// avoiding 0/0 in the normalized difference.
pub const COINCIDENT_GUARD: f64 = 1e-9;

/// Geodesic distance `arccos(<n1, n2>)` in `[0, pi]`. The inner product is
/// clamped so rounding above 1 cannot produce NaN.
#[inline]
pub fn geodesic_distance(n1: V3, n2: V3) -> f64 {
    n1.dot(n2).clamp(-1.0, 1.0).acos()
}

fn antipodal_check(c: f64) -> Result<()> {
    if c < -1.0 + ANTIPODAL_GUARD {
        Err(Error::AntipodalPoints)
    } else {
        Ok(())
    }
}

/// Logarithmic map: the tangent vector at `n1` pointing toward `n2` along the
/// shortest geodesic, with norm equal to the geodesic distance.
pub fn log_map(n1: V3, n2: V3) -> Result<V3> {
    let c = n1.dot(n2).clamp(-1.0, 1.0);
    antipodal_check(c)?;
    let d = c.acos();
    if d < COINCIDENT_GUARD {
        return Ok(V3::zero());
    }
    let (dir, _) = (n2 - n1.scale(c)).normalized();
    Ok(dir.scale(d))
}

/// Parallel transport of a tangent vector `xi` at `n1` to the tangent plane
/// at `n2` along the shortest geodesic.
pub fn parallel_transport(n1: V3, n2: V3, xi: V3) -> Result<V3> {
    let c = n1.dot(n2).clamp(-1.0, 1.0);
    antipodal_check(c)?;
    Ok(transport_apply(n1, n2, xi))
}

/// Transport applied through the closed-form rank-one update
/// `(id - (n2 + n1) n2^T / (1 + <n1, n2>)) xi`; no antipodal guard. Generic so
/// the solver can differentiate through it.
#[inline]
pub fn transport_apply<S: Scalar>(n1: Vec3<S>, n2: Vec3<S>, xi: Vec3<S>) -> Vec3<S> {
    let denom = S::from_f64(1.0) + n1.dot(n2);
    xi - (n1 + n2) * (n2.dot(xi) / denom)
}

/// Transpose of the transport matrix applied to `v`.
#[inline]
pub fn transport_apply_transpose<S: Scalar>(n1: Vec3<S>, n2: Vec3<S>, v: Vec3<S>) -> Vec3<S> {
    let denom = S::from_f64(1.0) + n1.dot(n2);
    v - n2 * ((n1 + n2).dot(v) / denom)
}

/// The transport matrix as an explicit 3x3 array, formed per call.
pub fn transport_matrix(n1: V3, n2: V3) -> [[f64; 3]; 3] {
    let a = (n1 + n2).scale(1.0 / (1.0 + n1.dot(n2)));
    let a = a.as_array();
    let b = n2.as_array();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i == j { 1.0 } else { 0.0 } - a[i] * b[j];
        }
    }
    m
}

/// Parallel transport of an order-3 tensor: the transport matrix is applied
/// to each axis. Preserves the Frobenius norm of tensors tangent to `n_old`
/// in every axis, and the result is tangent to `n_new`.
pub fn transport_tensor(t: &Tensor3, n_old: V3, n_new: V3) -> Result<Tensor3> {
    antipodal_check(n_old.dot(n_new).clamp(-1.0, 1.0))?;
    Ok(t.apply_matrix_all_axes(&transport_matrix(n_old, n_new)))
}

/// Signed dihedral angle between the normals across an edge: positive when
/// the minus normal leans toward the plus co-normal. Its absolute value is
/// the geodesic distance, and the logarithmic map between the adjacent
/// normals is this angle times the plus co-normal.
#[inline]
pub fn signed_normal_angle<S: Scalar>(
    normal_plus: Vec3<S>,
    normal_minus: Vec3<S>,
    conormal_plus: Vec3<S>,
) -> S {
    normal_minus
        .dot(conormal_plus)
        .atan2(normal_minus.dot(normal_plus))
}

/// Logarithmic map between the adjacent normals of an edge, computed from the
/// co-normal shortcut: `sign(<n-, mu+>) * dist(n+, n-) * mu+`.
pub fn log_via_conormal(frame: &EdgeFrame) -> Result<V3> {
    antipodal_check(frame.normal_plus.dot(frame.normal_minus).clamp(-1.0, 1.0))?;
    let theta = signed_normal_angle(frame.normal_plus, frame.normal_minus, frame.conormal_plus);
    Ok(frame.conormal_plus.scale(theta))
}

/// Residuals of the co-normal transport identities on one edge frame:
/// transporting a co-normal across the edge yields the negated opposite
/// co-normal, the tangent is invariant, and the transport between the
/// adjacent tangent planes reduces to a rank-two update built from the two
/// co-normals.
#[derive(Debug, Clone, Copy)]
pub struct ConormalTransportCheck {
    /// `| P_{n- -> n+}(mu-) + mu+ |`
    pub conormal_minus_to_plus: f64,
    /// `| P_{n+ -> n-}(mu+) + mu- |`
    pub conormal_plus_to_minus: f64,
    /// `| P_{n- -> n+}(t) - t |`
    pub tangent_invariance: f64,
    /// Worst deviation of `(id - mu- mu-^T - mu+ mu-^T) xi` from the closed
    /// form transport over a basis of the tangent plane at `n-`.
    pub simplified_form: f64,
}

impl ConormalTransportCheck {
    pub fn worst(&self) -> f64 {
        self.conormal_minus_to_plus
            .max(self.conormal_plus_to_minus)
            .max(self.tangent_invariance)
            .max(self.simplified_form)
    }
}

/// Evaluates the identities of [`ConormalTransportCheck`] on a frame.
pub fn conormal_transport_check(frame: &EdgeFrame) -> Result<ConormalTransportCheck> {
    let np = frame.normal_plus;
    let nm = frame.normal_minus;
    let mp = frame.conormal_plus;
    let mm = frame.conormal_minus;
    let t = frame.tangent;

    let conormal_minus_to_plus = (parallel_transport(nm, np, mm)? + mp).norm();
    let conormal_plus_to_minus = (parallel_transport(np, nm, mp)? + mm).norm();
    let tangent_invariance = (parallel_transport(nm, np, t)? - t).norm();

    let simplified = |xi: V3| xi - (mm + mp).scale(mm.dot(xi));
    let mut worst = 0.0_f64;
    for xi in [t, mm, (t + mm).scale(1.0 / 2f64.sqrt())] {
        worst = worst.max((parallel_transport(nm, np, xi)? - simplified(xi)).norm());
    }

    Ok(ConormalTransportCheck {
        conormal_minus_to_plus,
        conormal_plus_to_minus,
        tangent_invariance,
        simplified_form: worst,
    })
}

/// Projection of `v` onto the tangent plane at the unit vector `n`.
#[inline]
pub fn project_tangent(n: V3, v: V3) -> V3 {
    v - n.scale(n.dot(v))
}
