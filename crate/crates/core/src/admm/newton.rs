//! Truncated-Newton update of the vertex positions with Armijo backtracking.
//!
//! The Newton system is solved inexactly by Jacobi-preconditioned conjugate
//! gradients on the assembled sparse Hessian; when a direction of nonpositive
//! curvature is detected, a scaled identity is added to the diagonal and the
//! solve restarts. Trial meshes that degenerate a triangle or drive adjacent
//! normals antipodal are rejected as failed line-search steps.

use super::energy::{build_hessian_pattern, NewtonProblem};
use super::{AdmmState, SolverConfig};
use crate::error::{Error, Result};
use crate::math::V3;
use crate::mesh::TriMesh;
use crate::sparse::{pcg, CsrMatrix};

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
const NEWTON_CG_TOL: f64 = 1e-3;
const NEWTON_CG_MAX: usize = 500;
const MAX_PD_SHIFTS: usize = 16;

/// Outcome of one Newton phase.
#[derive(Debug, Clone, Copy)]
pub struct NewtonStats {
    pub accepted_steps: usize,
    pub line_search_failures: usize,
    pub final_value: f64,
}

/// Reusable Hessian storage tied to a mesh topology.
pub struct NewtonWorkspace {
    hess: CsrMatrix,
    grad: Vec<f64>,
}

impl NewtonWorkspace {
    pub fn new(mesh: &TriMesh) -> Self {
        Self {
            hess: build_hessian_pattern(mesh),
            grad: Vec::new(),
        }
    }

    /// The assembled Hessian (pattern-allocated, values from the last step).
    pub fn hess_mut(&mut self) -> &mut CsrMatrix {
        &mut self.hess
    }
}

/// Runs up to `newton_steps_per_outer` damped Newton steps on the vertex
/// positions of `state.mesh`, minimizing `problem`. The mesh is replaced by
/// the final accepted iterate; the objective never increases.
pub fn newton_mesh_step(
    problem: &NewtonProblem,
    state: &mut AdmmState,
    config: &SolverConfig,
    ws: &mut NewtonWorkspace,
) -> Result<NewtonStats> {
    let mut verts = state.mesh.vertices().to_vec();
    let mut stats = NewtonStats {
        accepted_steps: 0,
        line_search_failures: 0,
        final_value: problem.value(&verts)?,
    };

    for _ in 0..config.newton_steps_per_outer {
        ws.hess.clear();
        let value = problem.derivatives(&verts, &mut ws.grad, Some(&mut ws.hess))?;
        stats.final_value = value;
        let gnorm = ws.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= 1e-14 * (1.0 + value.abs()) {
            break;
        }

        let direction = match descent_direction(&mut ws.hess, &ws.grad) {
            Some(p) => p,
            None => break,
        };
        let slope: f64 = ws.grad.iter().zip(&direction).map(|(g, p)| g * p).sum();
        debug_assert!(slope < 0.0);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<V3> = verts
                .iter()
                .enumerate()
                .map(|(v, &x)| {
                    x + V3::new(
                        step * direction[3 * v],
                        step * direction[3 * v + 1],
                        step * direction[3 * v + 2],
                    )
                })
                .collect();
            match problem.value(&trial) {
                Ok(ft) if ft <= value + ARMIJO_C * step * slope => {
                    verts = trial;
                    stats.final_value = ft;
                    stats.accepted_steps += 1;
                    accepted = true;
                    break;
                }
                Ok(_) => {}
                Err(Error::DegenerateTriangle(_)) => {}
                Err(Error::AntipodalPoints) if config.reject_antipodal_steps => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        if !accepted {
            log::warn!("newton line search failed; keeping current vertices");
            stats.line_search_failures += 1;
            break;
        }
    }

    state.mesh = state.mesh.with_vertices(verts)?;
    Ok(stats)
}

/// Solves the Newton system inexactly, adding multiples of the identity until
/// the conjugate gradient iteration sees only positive curvature. Returns a
/// strict descent direction, or `None` when the gradient is numerically zero.
fn descent_direction(hess: &mut CsrMatrix, grad: &[f64]) -> Option<Vec<f64>> {
    let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
    let diag_scale = hess
        .diagonal()
        .iter()
        .map(|d| d.abs())
        .sum::<f64>()
        .max(1e-30)
        / hess.n() as f64;
    let mut shift = 0.0;
    for _ in 0..MAX_PD_SHIFTS {
        let (p, out) = pcg(hess, &rhs, NEWTON_CG_TOL, NEWTON_CG_MAX, true).ok()?;
        if !out.indefinite {
            let slope: f64 = grad.iter().zip(&p).map(|(g, pi)| g * pi).sum();
            if slope < 0.0 {
                return Some(p);
            }
        }
        let next = if shift == 0.0 {
            1e-6 * diag_scale
        } else {
            shift * 10.0
        };
        hess.shift_diagonal(next - shift);
        shift = next;
    }
    // Heavily shifted system behaves like scaled steepest descent; one more
    // attempt with the final shift.
    let (p, _) = pcg(hess, &rhs, NEWTON_CG_TOL, NEWTON_CG_MAX, true).ok()?;
    let slope: f64 = grad.iter().zip(&p).map(|(g, pi)| g * pi).sum();
    (slope < 0.0).then_some(p)
}
