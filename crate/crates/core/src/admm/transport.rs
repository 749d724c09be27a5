//! Tangent-space bookkeeping between outer iterations: transporting the
//! split variables and multipliers onto the updated mesh normals, and the
//! multiplier ascent updates.

use super::{AdmmState, MeshGeometry, SolverConfig};
use crate::error::Result;
use crate::parallel;
use crate::sphere;

/// Re-expresses the tensor- and vector-valued state variables in the tangent
/// spaces of the new mesh normals. Norms are preserved; tangency follows the
/// new normals.
pub fn transport_state(
    state: &mut AdmmState,
    old_geom: &MeshGeometry,
    new_geom: &MeshGeometry,
) -> Result<()> {
    let nt = state.mesh.num_triangles();
    let moved_tensors = parallel::try_map_indexed(nt, |t| {
        let n_old = old_geom.tri_normals[t];
        let n_new = new_geom.tri_normals[t];
        let jac = sphere::transport_tensor(&state.split_jac[t], n_old, n_new)?;
        let mult = sphere::transport_tensor(&state.mult_jac[t], n_old, n_new)?;
        Ok::<_, crate::Error>((jac, mult))
    })?;
    for (t, (jac, mult)) in moved_tensors.into_iter().enumerate() {
        state.split_jac[t] = jac;
        state.mult_jac[t] = mult;
    }

    let ne = state.mesh.num_edges();
    let moved_vectors = parallel::try_map_indexed(ne, |e| {
        let n_old = old_geom.frames[e].normal_plus;
        let n_new = new_geom.frames[e].normal_plus;
        let mut jump = state.split_jump[e];
        let mut mult = state.mult_jump[e];
        for i in 0..2 {
            jump[i] = sphere::parallel_transport(n_old, n_new, jump[i])?;
            mult[i] = sphere::parallel_transport(n_old, n_new, mult[i])?;
        }
        Ok::<_, crate::Error>((jump, mult))
    })?;
    for (e, (jump, mult)) in moved_vectors.into_iter().enumerate() {
        state.split_jump[e] = jump;
        state.mult_jump[e] = mult;
    }
    Ok(())
}

/// Standard ADMM multiplier ascent, evaluated with the geometry of the new
/// mesh iterate. Returns the weighted norms of the three primal residuals.
pub fn update_multipliers(
    state: &mut AdmmState,
    config: &SolverConfig,
    geom: &MeshGeometry,
) -> Result<[f64; 3]> {
    let mesh = &state.mesh;
    let mut r0_sq = 0.0;
    for e in 0..mesh.num_edges() {
        let r = geom.coupling_value(e, &state.field) - state.split_edge[e];
        state.mult_edge[e] += config.rho0 * r;
        r0_sq += geom.frames[e].length * r * r;
    }
    if config.regularization.is_tv() {
        return Ok([r0_sq.sqrt(), 0.0, 0.0]);
    }

    let jacs = parallel::try_map_indexed(mesh.num_triangles(), |t| {
        state.field.jacobian(mesh, t)
    })?;
    let mut r1_sq = 0.0;
    for (t, jac) in jacs.iter().enumerate() {
        let r = jac.sub(&state.split_jac[t]);
        state.mult_jac[t] = state.mult_jac[t].combine(&r, config.rho1);
        r1_sq += geom.tri_areas[t] * r.dot(&r);
    }

    let jumps = parallel::try_map_indexed(mesh.num_edges(), |e| state.field.jump(mesh, e))?;
    let mut r2_sq = 0.0;
    for (e, jump) in jumps.iter().enumerate() {
        for i in 0..2 {
            let r = jump[i] - state.split_jump[e][i];
            state.mult_jump[e][i] += r.scale(config.rho2);
            r2_sq += 0.5 * geom.frames[e].length * r.norm_sq();
        }
    }
    Ok([r0_sq.sqrt(), r1_sq.sqrt(), r2_sq.sqrt()])
}

/// Weighted norms of the three primal constraint residuals without touching
/// the multipliers.
pub fn primal_residuals(state: &AdmmState, geom: &MeshGeometry) -> Result<[f64; 3]> {
    let mesh = &state.mesh;
    let mut r0_sq = 0.0;
    for e in 0..mesh.num_edges() {
        let r = geom.coupling_value(e, &state.field) - state.split_edge[e];
        r0_sq += geom.frames[e].length * r * r;
    }
    let mut r1_sq = 0.0;
    for t in 0..mesh.num_triangles() {
        let r = state.field.jacobian(mesh, t)?.sub(&state.split_jac[t]);
        r1_sq += geom.tri_areas[t] * r.dot(&r);
    }
    let mut r2_sq = 0.0;
    for e in 0..mesh.num_edges() {
        let jump = state.field.jump(mesh, e)?;
        for i in 0..2 {
            r2_sq += 0.5 * geom.frames[e].length * (jump[i] - state.split_jump[e][i]).norm_sq();
        }
    }
    Ok([r0_sq.sqrt(), r1_sq.sqrt(), r2_sq.sqrt()])
}
