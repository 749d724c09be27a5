//! Closed-form shrinkage updates of the split variables and the
//! conjugate-gradient solve for the auxiliary field coefficients.

use super::{AdmmState, MeshGeometry, SolverConfig};
use crate::error::Result;
use crate::math::{tangent_projector, Tensor3, V3};
use crate::mesh::TriMesh;
use crate::parallel;
use crate::sparse::{pcg, CsrMatrix};
use crate::sphere;
use crate::trt::TrtField;

/// Soft-thresholding: `(x/|x|) max(|x| - kappa, 0)`, and `0` at `x = 0`.
pub fn shrink(x: f64, kappa: f64) -> f64 {
    debug_assert!(kappa >= 0.0);
    x.signum() * (x.abs() - kappa).max(0.0)
}

/// Vector-valued soft-thresholding in the Euclidean norm.
pub fn shrink_vec3(x: V3, kappa: f64) -> V3 {
    let n = x.norm();
    if n == 0.0 {
        return V3::zero();
    }
    x.scale((n - kappa).max(0.0) / n)
}

/// Tensor-valued soft-thresholding in the Frobenius norm.
pub fn shrink_tensor(x: &Tensor3, kappa: f64) -> Tensor3 {
    let n = x.norm();
    if n == 0.0 {
        return Tensor3::zero();
    }
    x.scale((n - kappa).max(0.0) / n)
}

/// Updates the three split variables to the exact minimizers of their
/// decoupled convex subproblems: per-edge coupling scalars, per-triangle
/// Jacobian tensors, per-endpoint jump vectors.
pub fn solve_d_subproblems(
    state: &mut AdmmState,
    config: &SolverConfig,
    geom: &MeshGeometry,
) -> Result<()> {
    let kappa0 = config.regularization.coupling_weight() / config.rho0;
    let field = &state.field;
    let targets = parallel::map_indexed(state.mesh.num_edges(), |e| {
        geom.coupling_value(e, field) + state.mult_edge[e] / config.rho0
    });
    for (d, target) in state.split_edge.iter_mut().zip(targets) {
        *d = shrink(target, kappa0);
    }

    if config.regularization.is_tv() {
        return Ok(());
    }
    let alpha0 = config.regularization.alpha0();

    let jac_targets = parallel::try_map_indexed(state.mesh.num_triangles(), |t| {
        let jac = state.field.jacobian(&state.mesh, t)?;
        Ok::<_, crate::Error>(jac.combine(&state.mult_jac[t], 1.0 / config.rho1))
    })?;
    for (d, target) in state.split_jac.iter_mut().zip(&jac_targets) {
        *d = shrink_tensor(target, alpha0 / config.rho1);
    }

    let jump_targets = parallel::try_map_indexed(state.mesh.num_edges(), |e| {
        let jump = state.field.jump(&state.mesh, e)?;
        Ok::<_, crate::Error>([
            jump[0] + state.mult_jump[e][0].scale(1.0 / config.rho2),
            jump[1] + state.mult_jump[e][1].scale(1.0 / config.rho2),
        ])
    })?;
    for (d, target) in state.split_jump.iter_mut().zip(&jump_targets) {
        d[0] = shrink_vec3(target[0], alpha0 / config.rho2);
        d[1] = shrink_vec3(target[1], alpha0 / config.rho2);
    }
    Ok(())
}

/// Sparsity pattern and local index maps for the field subproblem, built once
/// per topology.
pub struct FieldSolveWorkspace {
    matrix: CsrMatrix,
    /// Per triangle: the six coefficient indices of its edges.
    tri_dofs: Vec<[usize; 6]>,
    /// Per edge: the distinct coefficient indices of the two adjacent
    /// triangles' edges.
    edge_dofs: Vec<Vec<usize>>,
}

impl FieldSolveWorkspace {
    pub fn new(mesh: &TriMesh) -> Self {
        let tri_dofs: Vec<[usize; 6]> = (0..mesh.num_triangles())
            .map(|t| {
                let tes = mesh.triangle_edges(t);
                std::array::from_fn(|i| 2 * tes[i / 2].edge + (i % 2))
            })
            .collect();
        let edge_dofs: Vec<Vec<usize>> = (0..mesh.num_edges())
            .map(|e| {
                let mut dofs = Vec::with_capacity(10);
                for tri in mesh.edges()[e].tris {
                    for te in mesh.triangle_edges(tri) {
                        for k in 0..2 {
                            let dof = 2 * te.edge + k;
                            if !dofs.contains(&dof) {
                                dofs.push(dof);
                            }
                        }
                    }
                }
                dofs
            })
            .collect();
        let n = 2 * mesh.num_edges();
        let matrix = CsrMatrix::from_stencils(
            n,
            tri_dofs
                .iter()
                .map(|d| d.to_vec())
                .chain(edge_dofs.iter().cloned()),
        );
        Self {
            matrix,
            tri_dofs,
            edge_dofs,
        }
    }
}

/// Minimizes the augmented Lagrangian over the field coefficients: an
/// unconstrained positive (semi)definite quadratic, solved by conjugate
/// gradients to the configured relative residual.
pub fn solve_w_subproblem(
    state: &mut AdmmState,
    config: &SolverConfig,
    geom: &MeshGeometry,
    ws: &mut FieldSolveWorkspace,
) -> Result<()> {
    let mesh = &state.mesh;
    let n = 2 * mesh.num_edges();
    let a = &mut ws.matrix;
    a.clear();
    let mut b = vec![0.0; n];

    // Coupling terms touch only the co-normal coefficient of each edge.
    for e in 0..mesh.num_edges() {
        let f = &geom.frames[e];
        let h = f.circumcenter_distance;
        let len = f.length;
        a.add(2 * e, 2 * e, config.rho0 * h * h / len);
        b[2 * e] -= state.mult_edge[e] * h
            + config.rho0 * h * (geom.theta[e] - state.split_edge[e]);
    }

    // Jacobian terms: dense 6x6 blocks per triangle.
    for t in 0..mesh.num_triangles() {
        let area = geom.tri_areas[t];
        let normal = geom.tri_normals[t];
        let proj = tangent_projector(normal);
        let mut dirs = [V3::zero(); 6];
        for (i, te) in mesh.triangle_edges(t).iter().enumerate() {
            let tau = if te.forward { 1.0 } else { -1.0 };
            let sigma = if te.plus_side { 1.0 } else { -1.0 };
            let (tv, _) = (mesh.vertices()[te.head] - mesh.vertices()[te.tail]).normalized();
            dirs[2 * i] = tv.cross(normal).scale(tau / (2.0 * area));
            dirs[2 * i + 1] = tv.scale(sigma / (2.0 * area));
        }
        let q_mult = state.mult_jac[t].contract_last_two(&proj);
        let q_split = state.split_jac[t].contract_last_two(&proj);
        let dofs = &ws.tri_dofs[t];
        for j in 0..6 {
            for k in 0..6 {
                a.add(dofs[j], dofs[k], 2.0 * config.rho1 * area * dirs[j].dot(dirs[k]));
            }
            b[dofs[j]] +=
                area * (config.rho1 * dirs[j].dot(q_split) - dirs[j].dot(q_mult));
        }
    }

    // Jump terms: per edge and endpoint, the linear map from the local
    // coefficients to the jump value.
    for e in 0..mesh.num_edges() {
        let frame = &geom.frames[e];
        let edge = &mesh.edges()[e];
        let dofs = &ws.edge_dofs[e];
        let mut maps = vec![[V3::zero(); 2]; dofs.len()];
        for (side, &tri) in edge.tris.iter().enumerate() {
            let area = geom.tri_areas[tri];
            let normal = geom.tri_normals[tri];
            for te in mesh.triangle_edges(tri) {
                let tau = if te.forward { 1.0 } else { -1.0 };
                let sigma = if te.plus_side { 1.0 } else { -1.0 };
                let (tv, _) =
                    (mesh.vertices()[te.head] - mesh.vertices()[te.tail]).normalized();
                let p = mesh.vertices()[te.opposite];
                for (k, col) in [
                    tv.cross(normal).scale(tau / (2.0 * area)),
                    tv.scale(sigma / (2.0 * area)),
                ]
                .into_iter()
                .enumerate()
                {
                    let dof = 2 * te.edge + k;
                    let j = dofs.iter().position(|&d| d == dof).unwrap();
                    for (i, &x) in frame.endpoints.iter().enumerate() {
                        let v = col.scale((x - p).dot(frame.tangent));
                        maps[j][i] += if side == 1 {
                            sphere::parallel_transport(
                                frame.normal_minus,
                                frame.normal_plus,
                                v,
                            )?
                        } else {
                            -v
                        };
                    }
                }
            }
        }
        let w = 0.5 * frame.length;
        for j in 0..dofs.len() {
            for k in 0..dofs.len() {
                let gram: f64 = (0..2).map(|i| maps[j][i].dot(maps[k][i])).sum();
                a.add(dofs[j], dofs[k], config.rho2 * w * gram);
            }
            for i in 0..2 {
                b[dofs[j]] += w
                    * maps[j][i].dot(
                        state.split_jump[e][i].scale(config.rho2)
                            - state.mult_jump[e][i],
                    );
            }
        }
    }

    let max_iters = config.cg_max_iters.unwrap_or(10 * n);
    let (z, outcome) = pcg(a, &b, config.cg_tol, max_iters, false)?;
    log::trace!(
        "field solve: {} CG iterations, relative residual {:.3e}",
        outcome.iterations,
        outcome.relative_residual
    );
    state.field = TrtField::from_coefficients(z);
    Ok(())
}
