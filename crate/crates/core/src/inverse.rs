//! Cost evaluation, reduced gradient and the projected-gradient descent
//! loop for the coefficient identification problem.
//!
//! The cost is the terminal misfit plus a Tikhonov penalty on the H1
//! seminorms of the rate fields,
//!
//! ```text
//! J = 1/2 |S(T) - Sobs|^2 + 1/2 |I(T) - Iobs|^2
//!     + delta/2 (|beta|_H1^2 + |gamma|_H1^2).
//! ```
//!
//! The reduced gradient accumulates the adjoint difference `p2 - p1`
//! against the reaction sources over time and adds `-delta * lap` of each
//! rate. The time sum pairs the level-k sources with the adjoint states
//! the backward march produced by diffusing level k+1 back; with that
//! pairing the inner product `<g, d>` reproduces the directional
//! derivative of the discrete cost to solver tolerance, which is what the
//! finite-difference gradient checks assert.
//!
//! Descent iterates `project(theta - s * g)` with Armijo backtracking on
//! the projected points, so every iterate is admissible and the accepted
//! cost sequence is strictly decreasing.

use crate::error::{Error, Result};
use crate::forward::{solve_forward, ModelConfig, Parameters, Trajectory};
use crate::grid::{inner_l2, laplacian_neumann, seminorm_h1, Field};
use crate::linsolve::solve_implicit_diffusion;
use crate::sensitivity::{solve_adjoint, AdjointTrajectory};

/// Steps smaller than this abort the line search.
const STEP_UNDERFLOW: f64 = 1e-14;

/// Hyperparameters of the descent loop.
#[derive(Clone, Copy, Debug)]
pub struct InverseConfig {
    /// Tikhonov weight, >= 0.
    pub delta: f64,
    /// Maximum number of accepted gradient steps.
    pub max_iters: usize,
    /// Stop when the projected-gradient norm falls below this.
    pub grad_tol: f64,
    /// Step length tried first.
    pub step0: f64,
    /// Sufficient-decrease constant in (0, 1).
    pub armijo_c: f64,
    /// Backtracking shrink factor in (0, 1).
    pub backtrack: f64,
    /// Precondition the gradient by `(Id - mu lap)^-1` before stepping.
    pub sobolev_smoothing: bool,
    /// Smoothing length scale used when `sobolev_smoothing` is on.
    pub sobolev_mu: f64,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            max_iters: 500,
            grad_tol: 1e-8,
            step0: 1.0,
            armijo_c: 1e-4,
            backtrack: 0.5,
            sobolev_smoothing: false,
            sobolev_mu: 1e-2,
        }
    }
}

impl InverseConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            (
                "inverse.delta",
                self.delta,
                self.delta >= 0.0,
                "must be nonnegative",
            ),
            (
                "inverse.grad_tol",
                self.grad_tol,
                self.grad_tol > 0.0,
                "must be positive",
            ),
            (
                "inverse.step0",
                self.step0,
                self.step0 > 0.0,
                "must be positive",
            ),
            (
                "inverse.armijo_c",
                self.armijo_c,
                self.armijo_c > 0.0 && self.armijo_c < 1.0,
                "must lie in (0,1)",
            ),
            (
                "inverse.backtrack",
                self.backtrack,
                self.backtrack > 0.0 && self.backtrack < 1.0,
                "must lie in (0,1)",
            ),
            (
                "inverse.sobolev_mu",
                self.sobolev_mu,
                self.sobolev_mu > 0.0,
                "must be positive",
            ),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidModelConstant {
                    name,
                    value,
                    constraint,
                });
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidModelConstant {
                name: "inverse.max_iters",
                value: 0.0,
                constraint: "must be positive",
            });
        }
        Ok(())
    }
}

/// Gradient of the cost with respect to the two rate fields.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub gbeta: Field,
    pub ggamma: Field,
}

/// One row of the iteration log: cost pieces after the accepted step,
/// the projected-gradient norm that produced the step, and its length.
#[derive(Clone, Copy, Debug)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub misfit: f64,
    pub penalty: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Why the descent loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Projected-gradient norm fell below `grad_tol`.
    Converged,
    /// Backtracking shrank the step below the underflow threshold.
    LineSearchFailed,
    /// The iteration budget ran out.
    MaxIterations,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::LineSearchFailed => "line_search_failed",
            Termination::MaxIterations => "max_iterations",
        }
    }
}

/// Outcome of an inversion run.
#[derive(Clone, Debug)]
pub struct InversionReport {
    pub records: Vec<IterationRecord>,
    pub final_params: Parameters,
    pub termination: Termination,
    /// Projected-gradient norm at the final iterate.
    pub final_grad_norm: f64,
}

impl InversionReport {
    pub fn final_cost(&self) -> f64 {
        self.records.last().map(|r| r.cost).unwrap_or(f64::NAN)
    }

    pub fn final_misfit(&self) -> f64 {
        self.records.last().map(|r| r.misfit).unwrap_or(f64::NAN)
    }

    pub fn final_penalty(&self) -> f64 {
        self.records.last().map(|r| r.penalty).unwrap_or(f64::NAN)
    }

    /// Number of accepted gradient steps (the log also holds the start).
    pub fn accepted_steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Evaluate `(J, misfit, penalty)` at the parameters that produced `traj`.
pub fn evaluate_cost(
    traj: &Trajectory,
    sobs: &Field,
    iobs: &Field,
    params: &Parameters,
    delta: f64,
) -> Result<(f64, f64, f64)> {
    let ds = traj.final_s().add_scaled(-1.0, sobs)?;
    let di = traj.final_i().add_scaled(-1.0, iobs)?;
    let misfit = 0.5 * (inner_l2(&ds, &ds)? + inner_l2(&di, &di)?);
    let penalty = 0.5 * delta * (seminorm_h1(params.beta()) + seminorm_h1(params.gamma()));
    Ok((misfit + penalty, misfit, penalty))
}

/// Assemble the reduced gradient from a forward trajectory and its adjoint.
pub fn reduced_gradient(
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    params: &Parameters,
    delta: f64,
    cfg: &ModelConfig,
) -> Result<Gradient> {
    if adj.steps() != traj.steps() {
        return Err(Error::TimeGridMismatch {
            left: traj.steps() + 1,
            right: adj.steps() + 1,
        });
    }
    let grid = *traj.grid();
    let dt = traj.dt();
    let (m, n) = (cfg.m(), cfg.n());

    let mut gbeta = vec![0.0; grid.cells()];
    let mut ggamma = vec![0.0; grid.cells()];
    for k in 0..traj.steps() {
        let s = traj.s_at(k);
        let i = traj.i_at(k);
        let q1 = adj.p1_diffused(k);
        let q2 = adj.p2_diffused(k);
        for c in 0..grid.cells() {
            let pdiff = q2.values()[c] - q1.values()[c];
            let infect = cfg.pow_clamped(s.values()[c], m) * cfg.pow_clamped(i.values()[c], n);
            gbeta[c] += dt * infect * pdiff;
            ggamma[c] -= dt * i.values()[c] * pdiff;
        }
    }
    let mut gbeta = Field::from_values(grid, gbeta)?;
    let mut ggamma = Field::from_values(grid, ggamma)?;
    if delta != 0.0 {
        gbeta = gbeta.add_scaled(-delta, &laplacian_neumann(params.beta()))?;
        ggamma = ggamma.add_scaled(-delta, &laplacian_neumann(params.gamma()))?;
    }
    Ok(Gradient { gbeta, ggamma })
}

/// Clip both rate fields into their boxes. Idempotent.
pub fn project_box(params: &Parameters) -> Parameters {
    Parameters::from_projected(params.beta(), params.gamma(), params.bounds())
        .expect("parameters share one grid")
}

/// Precondition a gradient by solving `(Id - mu lap) g_smooth = g` per
/// component. Preserves the mass of each component.
pub fn sobolev_smooth(g: &Gradient, mu: f64) -> Result<Gradient> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidModelConstant {
            name: "inverse.sobolev_mu",
            value: mu,
            constraint: "must be positive",
        });
    }
    Ok(Gradient {
        gbeta: solve_implicit_diffusion(mu, &g.gbeta)?,
        ggamma: solve_implicit_diffusion(mu, &g.ggamma)?,
    })
}

/// Norm of the projected gradient `theta - project(theta - g)` over both
/// components.
fn projected_gradient_norm(params: &Parameters, g: &Gradient) -> Result<f64> {
    let trial = Parameters::from_projected(
        &params.beta().add_scaled(-1.0, &g.gbeta)?,
        &params.gamma().add_scaled(-1.0, &g.ggamma)?,
        params.bounds(),
    )?;
    let pgb = params.beta().add_scaled(-1.0, trial.beta())?;
    let pgg = params.gamma().add_scaled(-1.0, trial.gamma())?;
    Ok((inner_l2(&pgb, &pgb)? + inner_l2(&pgg, &pgg)?).sqrt())
}

/// Projected gradient descent with Armijo backtracking on projected trial
/// points.
///
/// Stops when the projected-gradient norm reaches `grad_tol`, the
/// backtracking step underflows, or the iteration budget is exhausted.
/// Every iterate is admissible and the logged cost sequence is
/// nonincreasing by construction.
pub fn invert(
    s0: &Field,
    i0: &Field,
    sobs: &Field,
    iobs: &Field,
    params0: &Parameters,
    cfg: &ModelConfig,
    icfg: &InverseConfig,
) -> Result<InversionReport> {
    icfg.validate()?;
    let mut params = project_box(params0);
    let mut traj = solve_forward(s0, i0, &params, cfg)?;
    let (mut cost, mut misfit, mut penalty) =
        evaluate_cost(&traj, sobs, iobs, &params, icfg.delta)?;

    let mut records = Vec::with_capacity(icfg.max_iters + 1);
    let mut last_step = 0.0f64;
    let mut termination = Termination::MaxIterations;
    let mut final_grad_norm = f64::NAN;

    for iter in 0..=icfg.max_iters {
        let adj = solve_adjoint(&traj, sobs, iobs, &params, cfg)?;
        let mut g = reduced_gradient(&traj, &adj, &params, icfg.delta, cfg)?;
        if icfg.sobolev_smoothing {
            g = sobolev_smooth(&g, icfg.sobolev_mu)?;
        }
        let grad_norm = projected_gradient_norm(&params, &g)?;
        if iter == 0 {
            records.push(IterationRecord {
                iter: 0,
                cost,
                misfit,
                penalty,
                grad_norm,
                step: 0.0,
            });
        }
        final_grad_norm = grad_norm;
        if grad_norm <= icfg.grad_tol {
            termination = Termination::Converged;
            break;
        }
        if iter == icfg.max_iters {
            termination = Termination::MaxIterations;
            break;
        }

        // Armijo backtracking from twice the last accepted step.
        let mut step = if last_step > 0.0 {
            2.0 * last_step
        } else {
            icfg.step0
        };
        let mut accepted = false;
        while step >= STEP_UNDERFLOW {
            let trial = Parameters::from_projected(
                &params.beta().add_scaled(-step, &g.gbeta)?,
                &params.gamma().add_scaled(-step, &g.ggamma)?,
                params.bounds(),
            )?;
            let decrease = inner_l2(&g.gbeta, &params.beta().add_scaled(-1.0, trial.beta())?)?
                + inner_l2(&g.ggamma, &params.gamma().add_scaled(-1.0, trial.gamma())?)?;
            let trial_traj = solve_forward(s0, i0, &trial, cfg)?;
            let (tc, tm, tp) = evaluate_cost(&trial_traj, sobs, iobs, &trial, icfg.delta)?;
            if tc <= cost - icfg.armijo_c * decrease {
                params = trial;
                traj = trial_traj;
                cost = tc;
                misfit = tm;
                penalty = tp;
                last_step = step;
                records.push(IterationRecord {
                    iter: iter + 1,
                    cost,
                    misfit,
                    penalty,
                    grad_norm,
                    step,
                });
                accepted = true;
                break;
            }
            step *= icfg.backtrack;
        }
        if !accepted {
            termination = Termination::LineSearchFailed;
            break;
        }
    }

    Ok(InversionReport {
        records,
        final_params: params,
        termination,
        final_grad_norm,
    })
}
