//! ADMM mesh denoiser regularized by the TGV of the normal (or first-order
//! TV in the baseline mode).
//!
//! Each outer iteration performs, in order: closed-form shrinkage updates of
//! the three split variables, a conjugate-gradient solve for the auxiliary
//! field coefficients, a few truncated-Newton steps on the vertex positions
//! (with the tangent-space variables parallel-transported onto the trial
//! normals inside the objective), transport of the state onto the accepted
//! mesh, and the multiplier ascent updates evaluated on the new geometry.

mod energy;
mod newton;
mod subproblems;
mod transport;

pub use energy::{augmented_lagrangian, AlBreakdown, NewtonProblem};
pub use newton::{newton_mesh_step, NewtonStats, NewtonWorkspace};
pub use subproblems::{
    shrink, shrink_tensor, shrink_vec3, solve_d_subproblems, solve_w_subproblem,
    FieldSolveWorkspace,
};
pub use transport::{primal_residuals, transport_state, update_multipliers};

use crate::error::{Error, Result};
use crate::math::{Tensor3, V3};
use crate::mesh::{EdgeFrame, TriMesh};
use crate::parallel;
use crate::regularizer::{self, RegularizerWeights, TgvBreakdown};
use crate::sphere::{signed_normal_angle, ANTIPODAL_GUARD};
use crate::trt::TrtField;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Regularizer selection: full second-order TGV of the normal, or the
/// first-order TV baseline (auxiliary field pinned to zero, single split).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Regularization {
    Tgv { alpha0: f64, alpha1: f64 },
    Tv { beta: f64 },
}

impl Regularization {
    /// Weight multiplying the edge-coupling split term (alpha1 or beta).
    pub fn coupling_weight(&self) -> f64 {
        match *self {
            Regularization::Tgv { alpha1, .. } => alpha1,
            Regularization::Tv { beta } => beta,
        }
    }

    pub fn alpha0(&self) -> f64 {
        match *self {
            Regularization::Tgv { alpha0, .. } => alpha0,
            Regularization::Tv { .. } => 0.0,
        }
    }

    pub fn is_tv(&self) -> bool {
        matches!(self, Regularization::Tv { .. })
    }

    pub fn weights(&self) -> RegularizerWeights {
        match *self {
            Regularization::Tgv { alpha0, alpha1 } => RegularizerWeights {
                alpha0,
                alpha1,
                beta: 0.0,
            },
            Regularization::Tv { beta } => RegularizerWeights {
                alpha0: 0.0,
                alpha1: beta,
                beta,
            },
        }
    }
}

/// Solver parameters; see the individual fields for defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub regularization: Regularization,
    /// Penalty parameters of the three splits, all positive.
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Barrier weight on inverse triangle areas.
    pub tau: f64,
    pub max_outer_iters: usize,
    pub newton_steps_per_outer: usize,
    /// Relative residual tolerance of the auxiliary-field CG solve.
    pub cg_tol: f64,
    /// CG iteration cap; defaults to ten times the number of unknowns.
    pub cg_max_iters: Option<usize>,
    /// Primal tolerance as a fraction of the mean edge length.
    pub primal_tol_rel: f64,
    /// Treat antipodal normals in a Newton trial step as a rejected step
    /// instead of a hard error.
    pub reject_antipodal_steps: bool,
    /// Random seed echoed into reports; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            regularization: Regularization::Tgv {
                alpha0: 3e-5,
                alpha1: 3.5e-3,
            },
            rho0: 1.0,
            rho1: 1.0,
            rho2: 1.0,
            tau: 1e-12,
            max_outer_iters: 300,
            newton_steps_per_outer: 3,
            cg_tol: 1e-10,
            cg_max_iters: None,
            primal_tol_rel: 1e-6,
            reject_antipodal_steps: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho0 > 0.0
            && self.rho1 > 0.0
            && self.rho2 > 0.0
            && self.tau >= 0.0
            && self.cg_tol > 0.0
            && self.regularization.coupling_weight() >= 0.0
            && self.regularization.alpha0() >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::SizeMismatch(
                "solver configuration violates positivity constraints".into(),
            ))
        }
    }
}

/// All solver variables: the mesh iterate, the auxiliary field, the three
/// split variables and their multipliers. Tensor- and vector-valued entries
/// live in the tangent spaces of the current mesh normals.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub mesh: TriMesh,
    pub field: TrtField,
    /// Per-edge scalar split of the coupling term.
    pub split_edge: Vec<f64>,
    /// Per-triangle tensor split of the field Jacobian.
    pub split_jac: Vec<Tensor3>,
    /// Per-edge jump split, stored at the two edge endpoints, tangent to the
    /// plus normal.
    pub split_jump: Vec<[V3; 2]>,
    pub mult_edge: Vec<f64>,
    pub mult_jac: Vec<Tensor3>,
    pub mult_jump: Vec<[V3; 2]>,
    pub iteration: usize,
}

impl AdmmState {
    /// Fresh state on `mesh`: zero field, zero splits, zero multipliers.
    pub fn new(mesh: TriMesh) -> Self {
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();
        Self {
            field: TrtField::zeros(&mesh),
            split_edge: vec![0.0; ne],
            split_jac: vec![Tensor3::zero(); nt],
            split_jump: vec![[V3::zero(); 2]; ne],
            mult_edge: vec![0.0; ne],
            mult_jac: vec![Tensor3::zero(); nt],
            mult_jump: vec![[V3::zero(); 2]; ne],
            iteration: 0,
            mesh,
        }
    }
}

/// Geometry snapshot of one mesh iterate, shared by the subproblem solvers
/// and the multiplier updates.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub frames: Vec<EdgeFrame>,
    /// Signed dihedral angle per edge.
    pub theta: Vec<f64>,
    pub tri_normals: Vec<V3>,
    pub tri_areas: Vec<f64>,
    pub mean_edge_length: f64,
}

impl MeshGeometry {
    pub fn compute(mesh: &TriMesh) -> Result<Self> {
        let frames = parallel::try_map_indexed(mesh.num_edges(), |e| {
            let f = mesh.edge_frame(e);
            if f.normal_plus.dot(f.normal_minus) < -1.0 + ANTIPODAL_GUARD {
                return Err(Error::AntipodalPoints);
            }
            Ok(f)
        })?;
        let theta = frames
            .iter()
            .map(|f| signed_normal_angle(f.normal_plus, f.normal_minus, f.conormal_plus))
            .collect();
        let per_tri = parallel::map_indexed(mesh.num_triangles(), |t| mesh.triangle_normal_area(t));
        let mean_edge_length =
            frames.iter().map(|f| f.length).sum::<f64>() / mesh.num_edges().max(1) as f64;
        Ok(Self {
            theta,
            tri_normals: per_tri.iter().map(|&(n, _)| n).collect(),
            tri_areas: per_tri.iter().map(|&(_, a)| a).collect(),
            frames,
            mean_edge_length,
        })
    }

    /// Coupling constraint value of edge `e` for the current field:
    /// `theta + h * c1 / |E|`.
    pub fn coupling_value(&self, e: usize, field: &TrtField) -> f64 {
        let f = &self.frames[e];
        self.theta[e] + f.circumcenter_distance * field.coefficients()[2 * e] / f.length
    }
}

/// One line of the per-iteration convergence log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    /// Augmented Lagrangian after the full iteration.
    pub augmented_lagrangian: f64,
    /// Objective values before and after the Newton phase, for monotonicity
    /// monitoring.
    pub al_before_newton: f64,
    pub al_after_newton: f64,
    pub fidelity: f64,
    pub tgv: TgvBreakdown,
    /// Weighted norms of the three primal residuals.
    pub primal_residuals: [f64; 3],
    pub newton_steps_accepted: usize,
    pub wall_time_s: f64,
}

/// Output of a denoising run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub mesh: TriMesh,
    pub log: Vec<ConvergenceRecord>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the full ADMM loop on `noisy`, using its vertex positions as the
/// fidelity data. Stops after `max_outer_iters` or once all three primal
/// residual norms fall below the relative tolerance.
pub fn run(noisy: &TriMesh, config: &SolverConfig) -> Result<RunResult> {
    config.validate()?;
    let data = noisy.vertices().to_vec();
    let mut state = AdmmState::new(noisy.clone());
    let mut log = Vec::with_capacity(config.max_outer_iters);
    let mut converged = false;
    let primal_tol = config.primal_tol_rel * noisy.mean_edge_length();
    let t0 = Instant::now();

    let mut newton = NewtonWorkspace::new(&state.mesh);
    let mut w_solver = (!config.regularization.is_tv())
        .then(|| FieldSolveWorkspace::new(&state.mesh));

    for k in 0..config.max_outer_iters {
        state.iteration = k;
        let geom = MeshGeometry::compute(&state.mesh)?;

        solve_d_subproblems(&mut state, config, &geom)?;
        if let Some(ws) = w_solver.as_mut() {
            solve_w_subproblem(&mut state, config, &geom, ws)?;
        }

        let problem = NewtonProblem::new(&state, config, &data)?;
        let al_before = problem.value(state.mesh.vertices())?;
        let stats = newton_mesh_step(&problem, &mut state, config, &mut newton)?;
        let al_after = stats.final_value;

        let geom_new = MeshGeometry::compute(&state.mesh)?;
        transport_state(&mut state, &geom, &geom_new)?;
        let residuals = update_multipliers(&mut state, config, &geom_new)?;

        let al = augmented_lagrangian(&state, config, &data)?;
        let record = ConvergenceRecord {
            iteration: k,
            augmented_lagrangian: al.total,
            al_before_newton: al_before,
            al_after_newton: al_after,
            fidelity: al.fidelity,
            tgv: regularizer::tgv_objective(
                &state.mesh,
                &state.field,
                &config.regularization.weights(),
            )?,
            primal_residuals: residuals,
            newton_steps_accepted: stats.accepted_steps,
            wall_time_s: t0.elapsed().as_secs_f64(),
        };
        log::debug!(
            "iter {k}: AL {:.6e}, residuals {:.3e} {:.3e} {:.3e}, newton {}",
            record.augmented_lagrangian,
            residuals[0],
            residuals[1],
            residuals[2],
            stats.accepted_steps
        );
        log.push(record);

        if residuals.iter().all(|&r| r < primal_tol) {
            converged = true;
            break;
        }
    }

    Ok(RunResult {
        mesh: state.mesh.clone(),
        iterations: log.len(),
        converged,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use crate::sphere::project_tangent;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_tangent_tensor(rng: &mut impl Rng, n: V3, amplitude: f64) -> Tensor3 {
        let mut rv = || {
            project_tangent(
                n,
                V3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
            )
            .scale(amplitude)
        };
        let mut t = Tensor3::zero();
        for _ in 0..2 {
            let (a, b, c) = (rv().as_array(), rv().as_array(), rv().as_array());
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        t.0[i][j][k] += a[i] * b[j] * c[k];
                    }
                }
            }
        }
        t
    }

    /// Random but tangency-consistent solver state on a bumpy sphere.
    fn random_state(seed: u64, amplitude: f64) -> AdmmState {
        let mesh = primitives::bumpy_icosphere(1, 0.2, seed);
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xabcd);
        let mut state = AdmmState::new(mesh);
        state.field = TrtField::random(&state.mesh, &mut rng, amplitude);
        for e in 0..state.mesh.num_edges() {
            state.split_edge[e] = rng.gen_range(-amplitude..amplitude);
            state.mult_edge[e] = rng.gen_range(-amplitude..amplitude);
            let f = state.mesh.edge_frame(e);
            for i in 0..2 {
                state.split_jump[e][i] = project_tangent(
                    f.normal_plus,
                    V3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                )
                .scale(amplitude);
                state.mult_jump[e][i] = project_tangent(
                    f.normal_plus,
                    V3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                )
                .scale(amplitude);
            }
        }
        for t in 0..state.mesh.num_triangles() {
            let (n, _) = state.mesh.triangle_normal_area(t);
            state.split_jac[t] = random_tangent_tensor(&mut rng, n, amplitude);
            state.mult_jac[t] = random_tangent_tensor(&mut rng, n, amplitude);
        }
        state
    }

    fn noisy_data(state: &AdmmState, seed: u64, sigma: f64) -> Vec<V3> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        state
            .mesh
            .vertices()
            .iter()
            .map(|&v| {
                v + V3::new(
                    rng.gen_range(-sigma..sigma),
                    rng.gen_range(-sigma..sigma),
                    rng.gen_range(-sigma..sigma),
                )
            })
            .collect()
    }

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(2.0, 0.5), 1.5);
        assert_eq!(shrink(0.3, 0.5), 0.0);
        assert_eq!(shrink(-2.0, 0.5), -1.5);
        assert_eq!(shrink(0.0, 0.5), 0.0);
        let v = shrink_vec3(V3::new(3.0, 4.0, 0.0), 2.5);
        assert!((v - V3::new(1.5, 2.0, 0.0)).norm() < 1e-15);
        assert_eq!(shrink_vec3(V3::zero(), 1.0), V3::zero());
    }

    #[test]
    fn breakdown_matches_generic_assembly() {
        let state = random_state(7, 0.6);
        let data = noisy_data(&state, 8, 0.05);
        let config = SolverConfig::default();
        let breakdown = augmented_lagrangian(&state, &config, &data).unwrap();
        let problem = NewtonProblem::new(&state, &config, &data).unwrap();
        let direct = problem.value(state.mesh.vertices()).unwrap();
        assert_relative_eq!(breakdown.total, direct, max_relative = 1e-10);

        // Same agreement in TV mode.
        let mut tv_state = random_state(9, 0.4);
        tv_state.field = TrtField::zeros(&tv_state.mesh);
        let tv_config = SolverConfig {
            regularization: Regularization::Tv { beta: 2e-2 },
            ..SolverConfig::default()
        };
        let b = augmented_lagrangian(&tv_state, &tv_config, &data).unwrap();
        let p = NewtonProblem::new(&tv_state, &tv_config, &data).unwrap();
        assert_relative_eq!(
            b.total,
            p.value(tv_state.mesh.vertices()).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn feasible_state_reduces_to_objective_terms() {
        // Splits matching their constraints and zero multipliers: the
        // augmented Lagrangian equals fidelity + barrier + weighted splits.
        let mut state = random_state(10, 0.5);
        let config = SolverConfig::default();
        let geom = MeshGeometry::compute(&state.mesh).unwrap();
        for e in 0..state.mesh.num_edges() {
            state.split_edge[e] = geom.coupling_value(e, &state.field);
            state.mult_edge[e] = 0.0;
            state.split_jump[e] = state.field.jump(&state.mesh, e).unwrap();
            state.mult_jump[e] = [V3::zero(); 2];
        }
        for t in 0..state.mesh.num_triangles() {
            state.split_jac[t] = state.field.jacobian(&state.mesh, t).unwrap();
            state.mult_jac[t] = Tensor3::zero();
        }
        let data = state.mesh.vertices().to_vec();
        let b = augmented_lagrangian(&state, &config, &data).unwrap();
        assert_eq!(b.fidelity, 0.0);
        assert!(b.lagrange.abs() < 1e-12);
        assert!(b.penalty.abs() < 1e-18);
        assert_relative_eq!(
            b.total,
            b.barrier + b.coupling_abs + b.jacobian_abs + b.jump_abs,
            max_relative = 1e-12
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let state = random_state(11, 0.5);
        let data = noisy_data(&state, 12, 0.03);
        let config = SolverConfig::default();
        let problem = NewtonProblem::new(&state, &config, &data).unwrap();
        let verts = state.mesh.vertices().to_vec();
        let mut grad = Vec::new();
        problem.derivatives(&verts, &mut grad, None).unwrap();

        let scale = state
            .mesh
            .vertices()
            .iter()
            .fold(0f64, |m, v| m.max(v.norm()));
        let step = 1e-6 * scale;
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let mut worst: f64 = 0.0;
        for _ in 0..40 {
            let v = rng.gen_range(0..state.mesh.num_vertices());
            let c = rng.gen_range(0..3);
            let mut plus = verts.clone();
            let mut minus = verts.clone();
            let bump = |p: &mut V3, s: f64| match c {
                0 => p.x += s,
                1 => p.y += s,
                _ => p.z += s,
            };
            bump(&mut plus[v], step);
            bump(&mut minus[v], -step);
            let fd =
                (problem.value(&plus).unwrap() - problem.value(&minus).unwrap()) / (2.0 * step);
            let an = grad[3 * v + c];
            worst = worst.max((fd - an).abs() / (1.0 + fd.abs()));
        }
        assert!(worst < 1e-5, "worst relative gradient error {worst:.3e}");
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let state = random_state(14, 0.4);
        let data = noisy_data(&state, 15, 0.02);
        let config = SolverConfig::default();
        let problem = NewtonProblem::new(&state, &config, &data).unwrap();
        let verts = state.mesh.vertices().to_vec();
        let mut ws = NewtonWorkspace::new(&state.mesh);
        let mut grad = Vec::new();
        ws.hess_mut().clear();
        problem
            .derivatives(&verts, &mut grad, Some(ws.hess_mut()))
            .unwrap();

        // Hessian-vector product vs central difference of the gradient.
        let n = 3 * state.mesh.num_vertices();
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let step = 1e-6;
        let perturbed = |sign: f64| -> Vec<V3> {
            verts
                .iter()
                .enumerate()
                .map(|(v, &x)| {
                    x + V3::new(
                        sign * step * dir[3 * v],
                        sign * step * dir[3 * v + 1],
                        sign * step * dir[3 * v + 2],
                    )
                })
                .collect()
        };
        let mut gp = Vec::new();
        let mut gm = Vec::new();
        problem.derivatives(&perturbed(1.0), &mut gp, None).unwrap();
        problem.derivatives(&perturbed(-1.0), &mut gm, None).unwrap();
        let mut hv = Vec::new();
        ws.hess_mut().mul_vec(&dir, &mut hv);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            worst = worst.max((hv[i] - fd).abs());
            scale = scale.max(fd.abs());
        }
        assert!(worst < 2e-4 * scale.max(1.0), "worst {worst:.3e} scale {scale:.3e}");
    }

    #[test]
    fn d_subproblems_are_pointwise_minimizers() {
        let mut state = random_state(17, 0.7);
        let config = SolverConfig::default();
        let geom = MeshGeometry::compute(&state.mesh).unwrap();
        solve_d_subproblems(&mut state, &config, &geom).unwrap();

        let alpha1 = config.regularization.coupling_weight();
        let alpha0 = config.regularization.alpha0();
        let mut rng = ChaCha12Rng::seed_from_u64(18);

        // Per-edge scalar objective.
        for e in (0..state.mesh.num_edges()).step_by(11) {
            let g0 = geom.coupling_value(e, &state.field);
            let obj = |d: f64| {
                alpha1 * d.abs() - state.mult_edge[e] * d
                    + 0.5 * config.rho0 * (d - g0) * (d - g0)
            };
            let best = obj(state.split_edge[e]);
            for _ in 0..100 {
                let trial = state.split_edge[e] + rng.gen_range(-1.0..1.0);
                assert!(obj(trial) >= best - 1e-12 * (1.0 + best.abs()));
            }
        }

        // Per-triangle tensor objective.
        for t in (0..state.mesh.num_triangles()).step_by(17) {
            let jac = state.field.jacobian(&state.mesh, t).unwrap();
            let obj = |d: &Tensor3| {
                alpha0 * d.norm() - state.mult_jac[t].dot(d)
                    + 0.5 * config.rho1 * d.sub(&jac).dot(&d.sub(&jac))
            };
            let best = obj(&state.split_jac[t]);
            let (n, _) = state.mesh.triangle_normal_area(t);
            for _ in 0..100 {
                let trial = state.split_jac[t]
                    .combine(&random_tangent_tensor(&mut rng, n, 0.3), 1.0);
                assert!(obj(&trial) >= best - 1e-12 * (1.0 + best.abs()));
            }
        }

        // Per-endpoint jump objective.
        for e in (0..state.mesh.num_edges()).step_by(13) {
            let jump = state.field.jump(&state.mesh, e).unwrap();
            let f = state.mesh.edge_frame(e);
            for i in 0..2 {
                let obj = |d: V3| {
                    alpha0 * d.norm() - state.mult_jump[e][i].dot(d)
                        + 0.5 * config.rho2 * (d - jump[i]).norm_sq()
                };
                let best = obj(state.split_jump[e][i]);
                for _ in 0..100 {
                    let trial = state.split_jump[e][i]
                        + project_tangent(
                            f.normal_plus,
                            V3::new(
                                rng.gen_range(-0.5..0.5),
                                rng.gen_range(-0.5..0.5),
                                rng.gen_range(-0.5..0.5),
                            ),
                        );
                    assert!(obj(trial) >= best - 1e-12 * (1.0 + best.abs()));
                }
            }
        }
    }

    #[test]
    fn w_solve_is_stationary_at_feasible_zero() {
        // Splits matching the zero-field constraints, zero multipliers: the
        // quadratic is already minimized at zero coefficients.
        let mesh = primitives::bumpy_icosphere(1, 0.15, 19);
        let mut state = AdmmState::new(mesh);
        let config = SolverConfig::default();
        let geom = MeshGeometry::compute(&state.mesh).unwrap();
        for e in 0..state.mesh.num_edges() {
            state.split_edge[e] = geom.theta[e];
        }
        let mut ws = FieldSolveWorkspace::new(&state.mesh);
        solve_w_subproblem(&mut state, &config, &geom, &mut ws).unwrap();
        assert!(state.field.coefficients().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn w_solve_minimizes_augmented_lagrangian() {
        let mut state = random_state(20, 0.5);
        let data = noisy_data(&state, 21, 0.02);
        let config = SolverConfig::default();
        let geom = MeshGeometry::compute(&state.mesh).unwrap();
        let before = augmented_lagrangian(&state, &config, &data).unwrap().total;
        let mut ws = FieldSolveWorkspace::new(&state.mesh);
        solve_w_subproblem(&mut state, &config, &geom, &mut ws).unwrap();
        let after = augmented_lagrangian(&state, &config, &data).unwrap().total;
        assert!(after <= before + 1e-10 * (1.0 + before.abs()), "{after} vs {before}");

        // Perturbing the solution in random coefficient directions does not
        // decrease the augmented Lagrangian.
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        for _ in 0..10 {
            let mut perturbed = state.clone();
            {
                let coeffs = perturbed.field.coefficients_mut();
                for c in coeffs.iter_mut() {
                    *c += rng.gen_range(-1e-3..1e-3);
                }
            }
            let v = augmented_lagrangian(&perturbed, &config, &data).unwrap().total;
            assert!(v >= after - 1e-10 * (1.0 + after.abs()));
        }
    }

    #[test]
    fn transport_preserves_norms_and_tangency() {
        let mut state = random_state(23, 0.5);
        let old_geom = MeshGeometry::compute(&state.mesh).unwrap();
        // Small random deformation.
        let mut rng = ChaCha12Rng::seed_from_u64(24);
        let moved: Vec<V3> = state
            .mesh
            .vertices()
            .iter()
            .map(|&v| {
                v + V3::new(
                    rng.gen_range(-0.02..0.02),
                    rng.gen_range(-0.02..0.02),
                    rng.gen_range(-0.02..0.02),
                )
            })
            .collect();
        let norms_jac: Vec<f64> = state.split_jac.iter().map(|t| t.norm()).collect();
        let norms_jump: Vec<f64> = state.split_jump.iter().map(|j| j[0].norm()).collect();

        state.mesh = state.mesh.with_vertices(moved).unwrap();
        let new_geom = MeshGeometry::compute(&state.mesh).unwrap();
        transport_state(&mut state, &old_geom, &new_geom).unwrap();

        for t in 0..state.mesh.num_triangles() {
            assert_relative_eq!(state.split_jac[t].norm(), norms_jac[t], max_relative = 1e-10);
            assert!(state.split_jac[t].tangency_defect(new_geom.tri_normals[t]) < 1e-10);
            assert!(state.mult_jac[t].tangency_defect(new_geom.tri_normals[t]) < 1e-10);
        }
        for e in 0..state.mesh.num_edges() {
            assert_relative_eq!(
                state.split_jump[e][0].norm(),
                norms_jump[e],
                max_relative = 1e-10
            );
            let n = new_geom.frames[e].normal_plus;
            assert!(state.split_jump[e][0].dot(n).abs() < 1e-10);
            assert!(state.mult_jump[e][1].dot(n).abs() < 1e-10);
        }

        // Identity when the mesh does not move.
        let mut same = random_state(25, 0.5);
        let geom = MeshGeometry::compute(&same.mesh).unwrap();
        let before = same.clone();
        transport_state(&mut same, &geom, &geom).unwrap();
        for t in 0..same.mesh.num_triangles() {
            assert!(same.split_jac[t].sub(&before.split_jac[t]).norm() < 1e-12);
        }
    }

    #[test]
    fn multiplier_update_is_linear_in_rho_and_zero_on_feasible() {
        let mut state = random_state(26, 0.4);
        let geom = MeshGeometry::compute(&state.mesh).unwrap();
        // Make the state feasible.
        for e in 0..state.mesh.num_edges() {
            state.split_edge[e] = geom.coupling_value(e, &state.field);
            state.split_jump[e] = state.field.jump(&state.mesh, e).unwrap();
        }
        for t in 0..state.mesh.num_triangles() {
            state.split_jac[t] = state.field.jacobian(&state.mesh, t).unwrap();
        }
        let config = SolverConfig::default();
        let before = state.clone();
        let residuals = update_multipliers(&mut state, &config, &geom).unwrap();
        assert!(residuals.iter().all(|&r| r < 1e-12));
        assert_eq!(state.mult_edge, before.mult_edge);

        // Doubling rho doubles the increment on an infeasible state.
        let mut s1 = random_state(27, 0.5);
        let mut s2 = s1.clone();
        let geom = MeshGeometry::compute(&s1.mesh).unwrap();
        let base = s1.mult_edge.clone();
        let c1 = SolverConfig::default();
        let c2 = SolverConfig {
            rho0: 2.0 * c1.rho0,
            ..c1.clone()
        };
        update_multipliers(&mut s1, &c1, &geom).unwrap();
        update_multipliers(&mut s2, &c2, &geom).unwrap();
        for e in 0..s1.mesh.num_edges() {
            let inc1 = s1.mult_edge[e] - base[e];
            let inc2 = s2.mult_edge[e] - base[e];
            assert_relative_eq!(inc2, 2.0 * inc1, max_relative = 1e-12);
        }
    }

    #[test]
    fn newton_step_decreases_objective() {
        let state = random_state(28, 0.3);
        let data = noisy_data(&state, 29, 0.05);
        let config = SolverConfig::default();
        let problem = NewtonProblem::new(&state, &config, &data).unwrap();
        let mut ws = NewtonWorkspace::new(&state.mesh);
        let mut working = state.clone();
        let before = problem.value(working.mesh.vertices()).unwrap();
        let stats = newton_mesh_step(&problem, &mut working, &config, &mut ws).unwrap();
        assert!(stats.final_value <= before);
        assert!(stats.accepted_steps > 0);
        assert_relative_eq!(
            problem.value(working.mesh.vertices()).unwrap(),
            stats.final_value,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pure_fidelity_run_converges_to_data() {
        // With both regularization weights zero the solver reduces to
        // barrier-regularized fidelity and must return to the data.
        let mesh = primitives::bumpy_icosphere(1, 0.1, 30);
        let config = SolverConfig {
            regularization: Regularization::Tgv {
                alpha0: 0.0,
                alpha1: 0.0,
            },
            max_outer_iters: 60,
            ..SolverConfig::default()
        };
        let result = run(&mesh, &config).unwrap();
        let worst = result
            .mesh
            .vertices()
            .iter()
            .zip(mesh.vertices())
            .map(|(a, b)| (*a - *b).norm())
            .fold(0f64, f64::max);
        assert!(worst < 1e-6, "worst displacement {worst:.3e}");
    }

    #[test]
    fn smoke_denoise_improves_and_log_is_monotone() {
        let clean = primitives::icosphere(2);
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let sigma = 0.15 * clean.mean_edge_length();
        let noisy = clean
            .with_vertices(
                clean
                    .vertices()
                    .iter()
                    .map(|&v| {
                        v + V3::new(
                            sigma * rng.gen_range(-1.0..1.0),
                            sigma * rng.gen_range(-1.0..1.0),
                            sigma * rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect(),
            )
            .unwrap();
        let config = SolverConfig {
            regularization: Regularization::Tgv {
                alpha0: 3e-5,
                alpha1: 3.5e-3,
            },
            max_outer_iters: 30,
            ..SolverConfig::default()
        };
        let result = run(&noisy, &config).unwrap();
        assert_eq!(result.iterations, result.log.len());
        for rec in &result.log {
            assert!(
                rec.al_after_newton <= rec.al_before_newton + 1e-9,
                "newton phase increased the objective at iteration {}",
                rec.iteration
            );
        }
        let err = |m: &TriMesh| -> f64 {
            m.vertices()
                .iter()
                .zip(clean.vertices())
                .map(|(a, b)| (*a - *b).norm_sq())
                .sum::<f64>()
                .sqrt()
        };
        assert!(err(&result.mesh) < err(&noisy), "denoising should reduce vertex error");
    }
}
