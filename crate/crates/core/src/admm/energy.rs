//! Augmented Lagrangian of the denoising problem as a function of the vertex
//! positions, with the split variables, multipliers and field coefficients
//! held fixed.
//!
//! Every per-edge and per-triangle term is written once, generically over the
//! scalar type: plain `f64` evaluation drives the line search, and the same
//! code instantiated with second-order dual numbers yields the exact gradient
//! and Hessian for the truncated-Newton vertex update. Tangent-space
//! variables (jump splits, Jacobian splits, their multipliers) enter through
//! parallel transport from the normals of the iterate at which they were
//! defined onto the trial normals; norm-only terms of transported quantities
//! are transport-invariant and folded into constants.

use super::{AdmmState, MeshGeometry, SolverConfig};
use crate::dual::Dual2;
use crate::error::{Error, Result};
use crate::math::{circumcenter, Scalar, Tensor3, Vec3, V3};
use crate::mesh::{TriMesh, DEGENERACY_REL_THRESHOLD};
use crate::parallel;
use crate::regularizer;
use crate::sparse::CsrMatrix;
use crate::sphere::{transport_apply, transport_apply_transpose, ANTIPODAL_GUARD};
use serde::{Deserialize, Serialize};

/// One basis contribution of an edge within a triangle, with vertex indices
/// remapped into the term's stencil.
#[derive(Debug, Clone, Copy)]
struct LocalBasis {
    c1: f64,
    c2: f64,
    /// Traversal sign of the edge within this triangle (co-normal factor).
    tau: f64,
    /// Plus/minus role sign (tangential basis factor).
    sigma: f64,
    tail: usize,
    head: usize,
    opp: usize,
}

/// Constants of one edge term; the stencil is `[a, b, p_plus, p_minus]`.
#[derive(Debug, Clone)]
struct EdgeTermData {
    verts: [usize; 4],
    plus_tri: [usize; 3],
    minus_tri: [usize; 3],
    plus_edges: [LocalBasis; 3],
    minus_edges: [LocalBasis; 3],
    /// Sign of the plus triangle's traversal relative to the edge tangent.
    plus_dir: f64,
    /// Co-normal coefficient of this edge itself.
    own_c1: f64,
    split_edge: f64,
    mult_edge: f64,
    split_jump: [V3; 2],
    mult_jump: [V3; 2],
    normal_plus_old: V3,
    /// Per-unit-length constant from the split-variable absolute terms, the
    /// constant parts of the jump pairing and penalty, and the coupling
    /// absolute term.
    length_const: f64,
}

/// Constants of one triangle term; the stencil is the vertex triple.
#[derive(Debug, Clone)]
struct TriTermData {
    verts: [usize; 3],
    edges: [LocalBasis; 3],
    normal_old: V3,
    mult_jac: Tensor3,
    split_jac: Tensor3,
    /// Per-unit-area constant: `-Lambda:D + (rho1/2)|D|^2 + alpha0 |D|`.
    area_const: f64,
}

#[derive(Debug, Clone, Copy)]
struct TermParams {
    rho0: f64,
    rho1: f64,
    rho2: f64,
    tau: f64,
    tv_mode: bool,
    area_floor: f64,
}

/// Augmented Lagrangian restricted to the vertex positions, prepared from a
/// solver state. Mesh topology, field coefficients, splits and multipliers
/// are captured as constants.
pub struct NewtonProblem {
    edge_data: Vec<EdgeTermData>,
    tri_data: Vec<TriTermData>,
    data_vertices: Vec<V3>,
    params: TermParams,
    num_vertices: usize,
}

impl NewtonProblem {
    pub fn new(state: &AdmmState, config: &SolverConfig, data_vertices: &[V3]) -> Result<Self> {
        let mesh = &state.mesh;
        if data_vertices.len() != mesh.num_vertices() {
            return Err(Error::SizeMismatch(
                "fidelity data has wrong vertex count".into(),
            ));
        }
        let coupling_weight = config.regularization.coupling_weight();
        let alpha0 = config.regularization.alpha0();
        let tv_mode = config.regularization.is_tv();

        let coeffs = state.field.coefficients();
        let local = |te: &crate::mesh::TriangleEdge, stencil: &[usize]| LocalBasis {
            c1: coeffs[2 * te.edge],
            c2: coeffs[2 * te.edge + 1],
            tau: if te.forward { 1.0 } else { -1.0 },
            sigma: if te.plus_side { 1.0 } else { -1.0 },
            tail: slot(stencil, te.tail),
            head: slot(stencil, te.head),
            opp: slot(stencil, te.opposite),
        };

        let edge_data = (0..mesh.num_edges())
            .map(|e| {
                let edge = &mesh.edges()[e];
                let stencil = [
                    edge.verts[0],
                    edge.verts[1],
                    edge.opposite[0],
                    edge.opposite[1],
                ];
                let tri_plus = mesh.triangles()[edge.tris[0]];
                let tri_minus = mesh.triangles()[edge.tris[1]];
                let plus_forward = mesh.triangle_edges(edge.tris[0])
                    .iter()
                    .find(|te| te.edge == e)
                    .map(|te| te.forward)
                    .unwrap_or(true);
                let (np, _) = mesh.triangle_normal_area(edge.tris[0]);

                let d2 = state.split_jump[e];
                let l2 = state.mult_jump[e];
                let mut length_const = coupling_weight * state.split_edge[e].abs();
                if !tv_mode {
                    for i in 0..2 {
                        length_const += -0.5 * l2[i].dot(d2[i])
                            + 0.25 * config.rho2 * d2[i].norm_sq()
                            + 0.5 * alpha0 * d2[i].norm();
                    }
                }

                EdgeTermData {
                    verts: stencil,
                    plus_tri: tri_plus.map(|v| slot(&stencil, v)),
                    minus_tri: tri_minus.map(|v| slot(&stencil, v)),
                    plus_edges: mesh.triangle_edges(edge.tris[0]).map(|te| local(&te, &stencil)),
                    minus_edges: mesh.triangle_edges(edge.tris[1]).map(|te| local(&te, &stencil)),
                    plus_dir: if plus_forward { 1.0 } else { -1.0 },
                    own_c1: coeffs[2 * e],
                    split_edge: state.split_edge[e],
                    mult_edge: state.mult_edge[e],
                    split_jump: d2,
                    mult_jump: l2,
                    normal_plus_old: np,
                    length_const,
                }
            })
            .collect();

        let tri_data = (0..mesh.num_triangles())
            .map(|t| {
                let verts = mesh.triangles()[t];
                let d = &state.split_jac[t];
                let l = &state.mult_jac[t];
                let (n, _) = mesh.triangle_normal_area(t);
                TriTermData {
                    verts,
                    edges: mesh.triangle_edges(t).map(|te| local(&te, &verts)),
                    normal_old: n,
                    mult_jac: *l,
                    split_jac: *d,
                    area_const: if tv_mode {
                        0.0
                    } else {
                        -l.dot(d) + 0.5 * config.rho1 * d.dot(d) + alpha0 * d.norm()
                    },
                }
            })
            .collect();

        Ok(Self {
            edge_data,
            tri_data,
            data_vertices: data_vertices.to_vec(),
            params: TermParams {
                rho0: config.rho0,
                rho1: config.rho1,
                rho2: config.rho2,
                tau: config.tau,
                tv_mode,
                area_floor: DEGENERACY_REL_THRESHOLD * mesh.scale_sq(),
            },
            num_vertices: mesh.num_vertices(),
        })
    }

    /// Objective value at the trial vertex positions.
    pub fn value(&self, vertices: &[V3]) -> Result<f64> {
        debug_assert_eq!(vertices.len(), self.num_vertices);
        let edge_vals = parallel::try_map_indexed(self.edge_data.len(), |e| {
            let d = &self.edge_data[e];
            let pos = d.verts.map(|v| vertices[v]);
            edge_term::<f64>(d, &pos, &self.params)
        })?;
        let tri_vals = parallel::try_map_indexed(self.tri_data.len(), |t| {
            let d = &self.tri_data[t];
            let pos = d.verts.map(|v| vertices[v]);
            tri_term::<f64>(d, &pos, &self.params)
        })?;
        let mut total: f64 = edge_vals.into_iter().sum::<f64>() + tri_vals.into_iter().sum::<f64>();
        for (x, xd) in vertices.iter().zip(&self.data_vertices) {
            total += 0.5 * (*x - *xd).norm_sq();
        }
        Ok(total)
    }

    /// Objective value, gradient, and (optionally) Hessian at the trial
    /// positions. The Hessian matrix must have been built with
    /// [`build_hessian_pattern`] for the same topology.
    pub fn derivatives(
        &self,
        vertices: &[V3],
        gradient: &mut Vec<f64>,
        hessian: Option<&mut CsrMatrix>,
    ) -> Result<f64> {
        let n = 3 * self.num_vertices;
        gradient.clear();
        gradient.resize(n, 0.0);

        let edge_locals = parallel::try_map_indexed(self.edge_data.len(), |e| {
            let d = &self.edge_data[e];
            let pos = seeded::<12>(&d.verts.map(|v| vertices[v]));
            edge_term::<Dual2<12>>(d, &pos, &self.params)
        })?;
        let tri_locals = parallel::try_map_indexed(self.tri_data.len(), |t| {
            let d = &self.tri_data[t];
            let pos = seeded::<9>(&d.verts.map(|v| vertices[v]));
            tri_term::<Dual2<9>>(d, &pos, &self.params)
        })?;

        let mut total = 0.0;
        let mut hess = hessian;
        for (d, loc) in self.edge_data.iter().zip(&edge_locals) {
            total += loc.v;
            scatter(&d.verts, &loc.g, &loc.h, gradient, hess.as_deref_mut());
        }
        for (d, loc) in self.tri_data.iter().zip(&tri_locals) {
            total += loc.v;
            scatter(&d.verts, &loc.g, &loc.h, gradient, hess.as_deref_mut());
        }
        for (v, (x, xd)) in vertices.iter().zip(&self.data_vertices).enumerate() {
            total += 0.5 * (*x - *xd).norm_sq();
            let diff = *x - *xd;
            gradient[3 * v] += diff.x;
            gradient[3 * v + 1] += diff.y;
            gradient[3 * v + 2] += diff.z;
            if let Some(h) = hess.as_deref_mut() {
                for c in 0..3 {
                    h.add(3 * v + c, 3 * v + c, 1.0);
                }
            }
        }
        Ok(total)
    }
}

fn slot(stencil: &[usize], vertex: usize) -> usize {
    stencil
        .iter()
        .position(|&v| v == vertex)
        .expect("vertex in stencil")
}

/// Seeds each coordinate of the stencil as an independent dual variable.
fn seeded<const N: usize>(pos: &[V3]) -> Vec<Vec3<Dual2<N>>> {
    pos.iter()
        .enumerate()
        .map(|(i, p)| {
            Vec3::new(
                Dual2::variable(p.x, 3 * i),
                Dual2::variable(p.y, 3 * i + 1),
                Dual2::variable(p.z, 3 * i + 2),
            )
        })
        .collect()
}

fn scatter<const M: usize>(
    verts: &[usize],
    g: &[f64; M],
    h: &[[f64; M]; M],
    gradient: &mut [f64],
    hessian: Option<&mut CsrMatrix>,
) {
    let k = verts.len() * 3;
    for (s, &v) in verts.iter().enumerate() {
        for c in 0..3 {
            gradient[3 * v + c] += g[3 * s + c];
        }
    }
    if let Some(hess) = hessian {
        for (si, &vi) in verts.iter().enumerate() {
            for ci in 0..3 {
                let row = 3 * vi + ci;
                let li = 3 * si + ci;
                for (sj, &vj) in verts.iter().enumerate() {
                    for cj in 0..3 {
                        let lj = 3 * sj + cj;
                        if li < k && lj < k {
                            hess.add(row, 3 * vj + cj, h[li][lj]);
                        }
                    }
                }
            }
        }
    }
}

/// Hessian sparsity for the vertex problem: all coordinate pairs within each
/// edge stencil (the two adjacent triangles' four vertices).
pub(crate) fn build_hessian_pattern(mesh: &TriMesh) -> CsrMatrix {
    let stencils: Vec<[usize; 12]> = mesh
        .edges()
        .iter()
        .map(|e| {
            let verts = [e.verts[0], e.verts[1], e.opposite[0], e.opposite[1]];
            let mut coords = [0usize; 12];
            for (i, &v) in verts.iter().enumerate() {
                for c in 0..3 {
                    coords[3 * i + c] = 3 * v + c;
                }
            }
            coords
        })
        .collect();
    CsrMatrix::from_stencils(3 * mesh.num_vertices(), stencils)
}

fn stencil_normal_area<S: Scalar>(pos: &[Vec3<S>], tri: [usize; 3]) -> (Vec3<S>, S) {
    let w = (pos[tri[1]] - pos[tri[0]]).cross(pos[tri[2]] - pos[tri[0]]);
    let (n, twice) = w.normalized();
    (n, twice.scale(0.5))
}

/// Trace `W_T(x) t` of the field on one triangle against the edge tangent.
fn field_trace<S: Scalar>(
    pos: &[Vec3<S>],
    edges: &[LocalBasis; 3],
    x: Vec3<S>,
    t: Vec3<S>,
    n: Vec3<S>,
    area: S,
) -> Vec3<S> {
    let mut acc = Vec3::<S>::zero();
    for lb in edges {
        if lb.c1 == 0.0 && lb.c2 == 0.0 {
            continue;
        }
        let (te, _) = (pos[lb.head] - pos[lb.tail]).normalized();
        let col = te.cross(n).scale(lb.tau * lb.c1) + te.scale(lb.sigma * lb.c2);
        acc += col * (x - pos[lb.opp]).dot(t);
    }
    acc / area.scale(2.0)
}

#[inline]
fn dot_const<S: Scalar>(v: Vec3<S>, k: V3) -> S {
    v.x.scale(k.x) + v.y.scale(k.y) + v.z.scale(k.z)
}

fn edge_term<S: Scalar>(d: &EdgeTermData, pos: &[Vec3<S>], p: &TermParams) -> Result<S> {
    let evec = pos[1] - pos[0];
    let len = evec.norm();
    let t = evec / len;

    let (n_plus, area_plus) = stencil_normal_area(pos, d.plus_tri);
    let (n_minus, area_minus) = stencil_normal_area(pos, d.minus_tri);
    if !(area_plus.value() > p.area_floor) || !(area_minus.value() > p.area_floor) {
        return Err(Error::DegenerateTriangle(usize::MAX));
    }
    let cos_nn = n_plus.dot(n_minus);
    if cos_nn.value() < -1.0 + ANTIPODAL_GUARD {
        return Err(Error::AntipodalPoints);
    }

    let dir = t.scale(d.plus_dir);
    let mu_plus = dir.cross(n_plus);
    let mu_minus = (-dir).cross(n_minus);
    let theta = n_minus.dot(mu_plus).atan2(cos_nn);

    let cc_plus = circumcenter(pos[d.plus_tri[0]], pos[d.plus_tri[1]], pos[d.plus_tri[2]]);
    let cc_minus = circumcenter(pos[d.minus_tri[0]], pos[d.minus_tri[1]], pos[d.minus_tri[2]]);
    let mid = (pos[0] + pos[1]).scale(0.5);
    let h = mu_plus.dot(mid - cc_plus) + mu_minus.dot(mid - cc_minus);

    // Coupling residual: theta + h c1 / |E| - d0. The co-normal component of
    // the field trace on the edge reduces to its own degree of freedom.
    let residual = theta + (h / len).scale(d.own_c1) + S::from_f64(-d.split_edge);
    let mut per_len = residual.scale(d.mult_edge)
        + (residual * residual).scale(0.5 * p.rho0)
        + S::from_f64(d.length_const);

    if !p.tv_mode {
        let n_old = Vec3::<S>::from_f64s(d.normal_plus_old.as_array());
        if n_old.dot(n_plus).value() < -1.0 + ANTIPODAL_GUARD {
            return Err(Error::AntipodalPoints);
        }
        for i in 0..2 {
            let x = pos[i];
            let w_minus = field_trace(pos, &d.minus_edges, x, t, n_minus, area_minus);
            let w_plus = field_trace(pos, &d.plus_edges, x, t, n_plus, area_plus);
            let jump = transport_apply(n_minus, n_plus, w_minus) - w_plus;
            // Transported constants enter through the pulled-back jump.
            let pulled = transport_apply_transpose(n_old, n_plus, jump);
            per_len += (dot_const(pulled, d.mult_jump[i])
                + jump.norm_sq().scale(0.5 * p.rho2)
                - dot_const(pulled, d.split_jump[i]).scale(p.rho2))
            .scale(0.5);
        }
    }

    Ok(len * per_len)
}

fn tri_term<S: Scalar>(d: &TriTermData, pos: &[Vec3<S>], p: &TermParams) -> Result<S> {
    let (n, area) = stencil_normal_area(pos, [0, 1, 2]);
    if !(area.value() > p.area_floor) {
        return Err(Error::DegenerateTriangle(usize::MAX));
    }
    let mut total = (S::from_f64(1.0) / area).scale(p.tau);
    if p.tv_mode {
        return Ok(total);
    }

    let n_old = Vec3::<S>::from_f64s(d.normal_old.as_array());
    let cos_nn = n_old.dot(n);
    if cos_nn.value() < -1.0 + ANTIPODAL_GUARD {
        return Err(Error::AntipodalPoints);
    }

    // Jacobian direction: the field Jacobian on this triangle is u ⊗ P.
    let mut u = Vec3::<S>::zero();
    for lb in &d.edges {
        if lb.c1 == 0.0 && lb.c2 == 0.0 {
            continue;
        }
        let (te, _) = (pos[lb.head] - pos[lb.tail]).normalized();
        u += te.cross(n).scale(lb.tau * lb.c1) + te.scale(lb.sigma * lb.c2);
    }
    u = u / area.scale(2.0);

    // Transported pairings against the constant tensors via the pulled-back
    // direction w = M^T u and the Gram matrix K = M^T M of the transport.
    let q = n;
    let pvec = (n + n_old) / (S::from_f64(1.0) + cos_nn);
    let w = u - q * pvec.dot(u);
    let pp = pvec.norm_sq();
    let qa = [q.x, q.y, q.z];
    let pa = [pvec.x, pvec.y, pvec.z];
    let mut k = [[S::zero(); 3]; 3];
    for b in 0..3 {
        for c in 0..3 {
            let mut v = -(pa[b] * qa[c]) - qa[b] * pa[c] + pp * (qa[b] * qa[c]);
            if b == c {
                v += S::from_f64(1.0);
            }
            k[b][c] = v;
        }
    }

    let q_mult = q_form(&d.mult_jac, w, &k);
    let q_split = q_form(&d.split_jac, w, &k);
    total += area
        * (q_mult + u.norm_sq().scale(p.rho1) - q_split.scale(p.rho1)
            + S::from_f64(d.area_const));
    Ok(total)
}

/// `sum_abc B[a][b][c] w_a K[b][c]` for a constant tensor `B`.
fn q_form<S: Scalar>(b: &Tensor3, w: Vec3<S>, k: &[[S; 3]; 3]) -> S {
    let ws = [w.x, w.y, w.z];
    let mut total = S::zero();
    for a in 0..3 {
        let mut inner = S::zero();
        for bb in 0..3 {
            for cc in 0..3 {
                let coeff = b.0[a][bb][cc];
                if coeff != 0.0 {
                    inner += k[bb][cc].scale(coeff);
                }
            }
        }
        total += inner * ws[a];
    }
    total
}

/// Wait-free pull of `M^T u` specialized above; kept here for reference in
/// the transposed-transport form.
#[allow(dead_code)]
fn pulled_back<S: Scalar>(n_old: Vec3<S>, n_new: Vec3<S>, u: Vec3<S>) -> Vec3<S> {
    transport_apply_transpose(n_old, n_new, u)
}

/// Term breakdown of the augmented Lagrangian evaluated directly on a state
/// (all transports are identities). Computed from the state variables by the
/// textbook formulas, independently of the generic term assembly, so the two
/// paths cross-check each other in tests.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AlBreakdown {
    pub total: f64,
    pub fidelity: f64,
    pub barrier: f64,
    /// Weighted absolute split terms.
    pub coupling_abs: f64,
    pub jacobian_abs: f64,
    pub jump_abs: f64,
    /// Multiplier pairings with the three constraint residuals.
    pub lagrange: f64,
    /// Quadratic penalty terms.
    pub penalty: f64,
}

/// Evaluates the augmented Lagrangian of `state` against the fidelity data.
pub fn augmented_lagrangian(
    state: &AdmmState,
    config: &SolverConfig,
    reference_vertices: &[V3],
) -> Result<AlBreakdown> {
    config.validate()?;
    let mesh = &state.mesh;
    let geom = MeshGeometry::compute(mesh)?;
    let coupling_weight = config.regularization.coupling_weight();
    let alpha0 = config.regularization.alpha0();
    let tv_mode = config.regularization.is_tv();

    let fidelity = regularizer::fidelity(mesh, reference_vertices)?;
    let barrier = mesh.barrier(config.tau);

    let mut coupling_abs = 0.0;
    let mut lagrange = 0.0;
    let mut penalty = 0.0;
    for e in 0..mesh.num_edges() {
        let len = geom.frames[e].length;
        let g0 = geom.coupling_value(e, &state.field);
        let r = g0 - state.split_edge[e];
        coupling_abs += coupling_weight * len * state.split_edge[e].abs();
        lagrange += len * state.mult_edge[e] * r;
        penalty += 0.5 * config.rho0 * len * r * r;
    }

    let mut jacobian_abs = 0.0;
    let mut jump_abs = 0.0;
    if !tv_mode {
        for t in 0..mesh.num_triangles() {
            let area = geom.tri_areas[t];
            let jac = state.field.jacobian(mesh, t)?;
            let r = jac.sub(&state.split_jac[t]);
            jacobian_abs += alpha0 * area * state.split_jac[t].norm();
            lagrange += area * state.mult_jac[t].dot(&r);
            penalty += 0.5 * config.rho1 * area * r.dot(&r);
        }
        for e in 0..mesh.num_edges() {
            let len = geom.frames[e].length;
            let jump = state.field.jump(mesh, e)?;
            for i in 0..2 {
                let r = jump[i] - state.split_jump[e][i];
                jump_abs += alpha0 * 0.5 * len * state.split_jump[e][i].norm();
                lagrange += 0.5 * len * state.mult_jump[e][i].dot(r);
                penalty += 0.5 * config.rho2 * 0.5 * len * r.norm_sq();
            }
        }
    }

    Ok(AlBreakdown {
        total: fidelity + barrier + coupling_abs + jacobian_abs + jump_abs + lagrange + penalty,
        fidelity,
        barrier,
        coupling_abs,
        jacobian_abs,
        jump_abs,
        lagrange,
        penalty,
    })
}
