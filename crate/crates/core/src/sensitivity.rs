//! Adjoint and tangent-linear systems of the SIS model, plus the duality
//! (dot-product) diagnostic connecting them.
//!
//! The adjoint pair (p1, p2) carries the terminal misfit backward in
//! time. It is computed through the time-reversed variables
//! `w_i(x, tau) = p_i(x, T - tau)`, which satisfy a forward parabolic
//! system with the zeroth-order coupling
//!
//! ```text
//! (w1)_tau - lap w1 = -m beta S^(m-1) I^n (w1 - w2)
//! (w2)_tau - lap w2 = -(n beta S^m I^(n-1) - gamma) (w1 - w2)
//! ```
//!
//! with S, I read from the stored forward trajectory at the matching
//! physical time. Each step first applies the implicit diffusion solve
//! and then the explicit coupling, with the coupling coefficients taken
//! at the arrival grid time. Split this way, the backward march is the
//! exact transpose of the linearized forward step, so the gradient
//! assembled from it agrees with finite differences of the discrete cost
//! down to solver tolerance. The post-diffusion intermediates are kept
//! because they are the states the gradient quadrature pairs with the
//! reaction sources.
//!
//! The tangent pair (z1, z2) is the derivative of the forward march with
//! respect to a coefficient perturbation (dbeta, dgamma): same IMEX
//! scheme, linearized coupling, zero initial data and the antisymmetric
//! source `-+ (dbeta S^m I^n - dgamma I)`.

use crate::error::{Error, Result};
use crate::forward::{ModelConfig, Parameters, Trajectory};
use crate::grid::{inner_l2, Field};
use crate::linsolve::solve_implicit_diffusion;

/// Backward-in-time adjoint states on the same time grid as the forward
/// trajectory.
#[derive(Clone, Debug)]
pub struct AdjointTrajectory {
    dt: f64,
    p1: Vec<Field>,
    p2: Vec<Field>,
    // Post-diffusion intermediates of the backward march: entry k holds
    // the adjoint diffused from level k+1 back toward level k, the state
    // the reduced gradient pairs with level-k reaction sources.
    p1_diffused: Vec<Field>,
    p2_diffused: Vec<Field>,
}

impl AdjointTrajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.p1.len() - 1
    }

    pub fn p1_at(&self, k: usize) -> &Field {
        &self.p1[k]
    }

    pub fn p2_at(&self, k: usize) -> &Field {
        &self.p2[k]
    }

    /// Adjoint component diffused back from level `k + 1`, for `k` in
    /// `0..steps()`.
    pub fn p1_diffused(&self, k: usize) -> &Field {
        &self.p1_diffused[k]
    }

    pub fn p2_diffused(&self, k: usize) -> &Field {
        &self.p2_diffused[k]
    }

    /// Largest absolute value over both components and all time levels.
    pub fn sup_norm(&self) -> f64 {
        self.p1
            .iter()
            .chain(&self.p2)
            .flat_map(|f| f.values())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Tangent-linear states (z1, z2) with zero initial data.
#[derive(Clone, Debug)]
pub struct TangentTrajectory {
    dt: f64,
    z1: Vec<Field>,
    z2: Vec<Field>,
}

impl TangentTrajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.z1.len() - 1
    }

    pub fn z1_at(&self, k: usize) -> &Field {
        &self.z1[k]
    }

    pub fn z2_at(&self, k: usize) -> &Field {
        &self.z2[k]
    }

    pub fn final_z1(&self) -> &Field {
        self.z1
            .last()
            .expect("tangent holds at least the initial level")
    }

    pub fn final_z2(&self) -> &Field {
        self.z2
            .last()
            .expect("tangent holds at least the initial level")
    }
}

/// Zeroth-order coupling coefficients of the linearized reaction at one
/// stored state: `a = m beta S^(m-1) I^n` and
/// `bg = n beta S^m I^(n-1) - gamma`, bases clamped before the negative
/// exponents.
fn coupling_coefficients(
    s: &Field,
    i: &Field,
    params: &Parameters,
    cfg: &ModelConfig,
) -> (Field, Field) {
    let (m, n) = (cfg.m(), cfg.n());
    let mut a = Vec::with_capacity(s.len());
    let mut bg = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let sv = s.values()[k];
        let iv = i.values()[k];
        let beta = params.beta().values()[k];
        let gamma = params.gamma().values()[k];
        a.push(m * beta * cfg.pow_clamped(sv, m - 1.0) * cfg.pow_clamped(iv, n));
        bg.push(n * beta * cfg.pow_clamped(sv, m) * cfg.pow_clamped(iv, n - 1.0) - gamma);
    }
    let grid = *s.grid();
    (
        Field::from_values(grid, a).expect("coefficient field has grid length"),
        Field::from_values(grid, bg).expect("coefficient field has grid length"),
    )
}

/// Linearized reaction source `dbeta S^m I^n - dgamma I` at one stored state.
fn coupling_source(
    s: &Field,
    i: &Field,
    dbeta: &Field,
    dgamma: &Field,
    cfg: &ModelConfig,
) -> Field {
    let (m, n) = (cfg.m(), cfg.n());
    let vals = (0..s.len())
        .map(|k| {
            let infect = cfg.pow_clamped(s.values()[k], m) * cfg.pow_clamped(i.values()[k], n);
            dbeta.values()[k] * infect - dgamma.values()[k] * i.values()[k]
        })
        .collect();
    Field::from_values(*s.grid(), vals).expect("source field has grid length")
}

fn check_run_consistency(traj: &Trajectory, cfg: &ModelConfig) -> Result<()> {
    if traj.steps() == 0 {
        return Err(Error::TrajectoryIncomplete {
            expected: cfg.steps() + 1,
            found: 1,
        });
    }
    if traj.steps() != cfg.steps() {
        return Err(Error::TimeGridMismatch {
            left: traj.steps() + 1,
            right: cfg.steps() + 1,
        });
    }
    Ok(())
}

/// Solve the adjoint system backward from the terminal misfit.
///
/// `p1(T) = S(T) - Sobs` and `p2(T) = I(T) - Iobs` hold exactly; interior
/// levels come from the diffuse-then-couple march described in the module
/// docs.
pub fn solve_adjoint(
    traj: &Trajectory,
    sobs: &Field,
    iobs: &Field,
    params: &Parameters,
    cfg: &ModelConfig,
) -> Result<AdjointTrajectory> {
    check_run_consistency(traj, cfg)?;
    if sobs.grid() != traj.grid() || iobs.grid() != traj.grid() || params.grid() != traj.grid() {
        return Err(Error::GridMismatch);
    }
    let steps = traj.steps();
    let dt = traj.dt();

    let mut p1 = vec![Field::zeros(*traj.grid()); steps + 1];
    let mut p2 = vec![Field::zeros(*traj.grid()); steps + 1];
    let mut p1_diffused = vec![Field::zeros(*traj.grid()); steps];
    let mut p2_diffused = vec![Field::zeros(*traj.grid()); steps];

    p1[steps] = traj.final_s().add_scaled(-1.0, sobs)?;
    p2[steps] = traj.final_i().add_scaled(-1.0, iobs)?;

    for k in (0..steps).rev() {
        let q1 = solve_implicit_diffusion(dt, &p1[k + 1]).map_err(|e| Error::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        let q2 = solve_implicit_diffusion(dt, &p2[k + 1]).map_err(|e| Error::StepFailed {
            step: k,
            source: Box::new(e),
        })?;
        let (a, bg) = coupling_coefficients(traj.s_at(k), traj.i_at(k), params, cfg);
        let w = q1.add_scaled(-1.0, &q2)?;
        p1[k] = q1.zip_with(&a.zip_with(&w, |c, d| c * d)?, |q, aw| q - dt * aw)?;
        p2[k] = q2.zip_with(&bg.zip_with(&w, |c, d| c * d)?, |q, bw| q - dt * bw)?;
        p1_diffused[k] = q1;
        p2_diffused[k] = q2;
    }

    for f in p1.iter().chain(&p2) {
        f.check_finite()?;
    }
    Ok(AdjointTrajectory {
        dt,
        p1,
        p2,
        p1_diffused,
        p2_diffused,
    })
}

/// Solve the tangent-linear system for a coefficient perturbation
/// `(dbeta, dgamma)` from zero initial data.
pub fn solve_tangent(
    traj: &Trajectory,
    dbeta: &Field,
    dgamma: &Field,
    params: &Parameters,
    cfg: &ModelConfig,
) -> Result<TangentTrajectory> {
    check_run_consistency(traj, cfg)?;
    if dbeta.grid() != traj.grid() || dgamma.grid() != traj.grid() || params.grid() != traj.grid() {
        return Err(Error::GridMismatch);
    }
    let steps = traj.steps();
    let dt = traj.dt();

    let mut z1 = Vec::with_capacity(steps + 1);
    let mut z2 = Vec::with_capacity(steps + 1);
    z1.push(Field::zeros(*traj.grid()));
    z2.push(Field::zeros(*traj.grid()));

    for k in 0..steps {
        let (a, bg) = coupling_coefficients(traj.s_at(k), traj.i_at(k), params, cfg);
        let f = coupling_source(traj.s_at(k), traj.i_at(k), dbeta, dgamma, cfg);
        // Shared linearized reaction, entering the two equations with
        // opposite signs so that z1 + z2 stays mass-free exactly.
        let mut shared = Vec::with_capacity(f.len());
        for c in 0..f.len() {
            shared.push(
                a.values()[c] * z1[k].values()[c]
                    + bg.values()[c] * z2[k].values()[c]
                    + f.values()[c],
            );
        }
        let shared = Field::from_values(*traj.grid(), shared)?;
        let rhs1 = z1[k].add_scaled(-dt, &shared)?;
        let rhs2 = z2[k].add_scaled(dt, &shared)?;
        z1.push(
            solve_implicit_diffusion(dt, &rhs1).map_err(|e| Error::StepFailed {
                step: k,
                source: Box::new(e),
            })?,
        );
        z2.push(
            solve_implicit_diffusion(dt, &rhs2).map_err(|e| Error::StepFailed {
                step: k,
                source: Box::new(e),
            })?,
        );
    }
    Ok(TangentTrajectory { dt, z1, z2 })
}

/// Relative mismatch between the adjoint and tangent expressions of the
/// same directional derivative of the misfit.
///
/// The left side integrates `<dbeta S^m I^n - dgamma I, p2 - p1>` with the
/// trapezoid rule on the stored levels; the right side is
/// `<S(T) - Sobs, z1(T)> + <I(T) - Iobs, z2(T)>`. The return value is
/// `|lhs - rhs| / (|lhs| + |rhs| + 1e-30)`, which both discretize the same
/// continuous identity, so the gap shrinks at first order in dt under
/// refinement.
#[allow(clippy::too_many_arguments)]
pub fn duality_gap(
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    tan: &TangentTrajectory,
    dbeta: &Field,
    dgamma: &Field,
    sobs: &Field,
    iobs: &Field,
    cfg: &ModelConfig,
) -> Result<f64> {
    let steps = traj.steps();
    if adj.steps() != steps || tan.steps() != steps {
        return Err(Error::TimeGridMismatch {
            left: steps + 1,
            right: adj.steps().min(tan.steps()) + 1,
        });
    }
    let dt = traj.dt();

    let mut lhs = 0.0;
    for k in 0..=steps {
        let f = coupling_source(traj.s_at(k), traj.i_at(k), dbeta, dgamma, cfg);
        let pdiff = adj.p2_at(k).add_scaled(-1.0, adj.p1_at(k))?;
        let weight = if k == 0 || k == steps { 0.5 } else { 1.0 };
        lhs += weight * dt * inner_l2(&f, &pdiff)?;
    }

    let misfit_s = traj.final_s().add_scaled(-1.0, sobs)?;
    let misfit_i = traj.final_i().add_scaled(-1.0, iobs)?;
    let rhs = inner_l2(&misfit_s, tan.final_z1())? + inner_l2(&misfit_i, tan.final_z2())?;

    Ok((lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1e-30))
}
