//! Orchestration of the four run verbs: `forward`, `adjoint-check`,
//! `invert` and `sweep`.
//!
//! Each verb reads a [`RunConfig`], produces its artifacts under the
//! output directory and prints a short summary. Every report file starts
//! with the fully resolved configuration as `# key = value` comment
//! lines, so a run can be reproduced from its artifacts alone. Exit
//! status: 0 on success, 1 on validation failures (bad config, missing
//! inputs, inadmissible data), 2 on solver failures.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ObservationFiles, RunConfig};
use crate::error::Error;
use crate::forward::{
    dt_max_heuristic, mass, solve_forward, validate_initial, Bounds, ModelConfig, Parameters,
};
use crate::grid::{inner_l2, write_field_csv, Field, Grid};
use crate::inverse::{evaluate_cost, invert, reduced_gradient, InversionReport};
use crate::sensitivity::{duality_gap, solve_adjoint, solve_tangent};
use crate::twin::{make_truth, observe, score, TwinSpec};

/// The four run verbs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Forward,
    AdjointCheck,
    Invert,
    Sweep,
}

impl std::str::FromStr for Verb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Verb::Forward),
            "adjoint-check" => Ok(Verb::AdjointCheck),
            "invert" => Ok(Verb::Invert),
            "sweep" => Ok(Verb::Sweep),
            other => Err(format!(
                "unknown verb {other:?}; expected forward, adjoint-check, invert or sweep"
            )),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output directory override (`--out`).
    pub out: Option<String>,
    /// Twin seed override (`--seed`).
    pub seed: Option<u64>,
    /// Trajectory slice stride for the forward verb (`--slices`);
    /// 0 exports only the final slice.
    pub slices: usize,
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Bad configuration or inadmissible input data; exit code 1.
    Validation(String),
    /// A solver failed mid-run; exit code 2.
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Validation(m) | RunError::Solver(m) => m,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::NegativeInitialData { .. }
            | Error::ZeroInfectedMass
            | Error::ZeroPopulationCell { .. }
            | Error::InvalidBounds { .. }
            | Error::ParameterOutOfBounds { .. }
            | Error::InvalidModelConstant { .. }
            | Error::ProfileOutOfBounds { .. }
            | Error::GridMismatch
            | Error::DimensionMismatch { .. }
            | Error::FieldCsv(_) => RunError::Validation(e.to_string()),
            Error::StepFailed { .. }
            | Error::LinearSolveDiverged { .. }
            | Error::NonFiniteField { .. }
            | Error::TrajectoryIncomplete { .. }
            | Error::TimeGridMismatch { .. }
            | Error::Io(_) => RunError::Solver(e.to_string()),
        }
    }
}

fn io_err(e: std::io::Error) -> RunError {
    RunError::Solver(format!("i/o: {e}"))
}

/// Execute one verb against a parsed configuration.
pub fn run(verb: Verb, config: &RunConfig, opts: &RunOptions) -> Result<(), RunError> {
    let mut config = config.clone();
    if let (Some(seed), Some(twin)) = (opts.seed, config.twin.as_mut()) {
        twin.seed = seed;
    }
    let out_dir = PathBuf::from(
        opts.out
            .clone()
            .unwrap_or_else(|| config.output_dir.clone()),
    );
    fs::create_dir_all(&out_dir).map_err(io_err)?;

    match verb {
        Verb::Forward => run_forward(&config, &out_dir, opts),
        Verb::AdjointCheck => run_adjoint_check(&config, &out_dir),
        Verb::Invert => run_invert(&config, &out_dir).map(|_| ()),
        Verb::Sweep => run_sweep(&config, &out_dir),
    }
}

fn header_lines(config: &RunConfig) -> String {
    let mut s = String::new();
    for (k, v) in config.resolved_entries() {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

fn initial_fields(config: &RunConfig) -> (Field, Field) {
    (
        config.s0.evaluate(config.grid),
        config.i0.evaluate(config.grid),
    )
}

fn require_twin<'a>(config: &'a RunConfig, verb: &str) -> Result<&'a TwinSpec, RunError> {
    config.twin.as_ref().ok_or_else(|| {
        RunError::Validation(format!(
            "the {verb} verb needs a twin block (twin.beta and twin.gamma) to \
             define the rate fields"
        ))
    })
}

fn write_field_file(path: &Path, field: &Field) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(io_err)?;
    let mut buf = std::io::BufWriter::new(file);
    write_field_csv(field, &mut buf).map_err(RunError::from)?;
    buf.flush().map_err(io_err)
}

// ---------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------

fn run_forward(config: &RunConfig, out_dir: &Path, opts: &RunOptions) -> Result<(), RunError> {
    let twin = require_twin(config, "forward")?;
    let params = make_truth(twin, config.grid, config.bounds)?;
    let (s0, i0) = initial_fields(config);
    let phi0 = validate_initial(&s0, &i0)?;
    let dt_max = dt_max_heuristic(&s0, &i0, &params, &config.model);
    let traj = solve_forward(&s0, &i0, &params, &config.model)?;

    // Conservation and positivity diagnostics per stored level.
    let header = header_lines(config);
    let mut csv = String::new();
    csv.push_str(&header);
    csv.push_str("step,time,mass_s,mass_i,mass_total,rel_drift,min_population\n");
    let m0 = mass(traj.s_at(0)) + mass(traj.i_at(0));
    let mut max_drift = 0.0f64;
    let mut min_pop = f64::INFINITY;
    for k in 0..=traj.steps() {
        let ms = mass(traj.s_at(k));
        let mi = mass(traj.i_at(k));
        let drift = ((ms + mi - m0) / m0).abs();
        let pop = traj
            .s_at(k)
            .values()
            .iter()
            .zip(traj.i_at(k).values())
            .map(|(s, i)| s + i)
            .fold(f64::INFINITY, f64::min);
        max_drift = max_drift.max(drift);
        min_pop = min_pop.min(pop);
        let _ = writeln!(
            csv,
            "{k},{},{ms},{mi},{},{drift},{pop}",
            traj.time(k),
            ms + mi
        );
    }
    fs::write(out_dir.join("conservation.csv"), csv).map_err(io_err)?;

    // Trajectory slices and their manifest.
    let stride = opts.slices;
    let mut manifest = String::new();
    manifest.push_str(&header);
    manifest.push_str("index,time,s_file,i_file\n");
    let export = |k: usize, manifest: &mut String| -> Result<(), RunError> {
        let s_name = format!("s_{k:05}.csv");
        let i_name = format!("i_{k:05}.csv");
        write_field_file(&out_dir.join(&s_name), traj.s_at(k))?;
        write_field_file(&out_dir.join(&i_name), traj.i_at(k))?;
        let _ = writeln!(manifest, "{k},{},{s_name},{i_name}", traj.time(k));
        Ok(())
    };
    if stride > 0 {
        let mut k = 0;
        while k < traj.steps() {
            export(k, &mut manifest)?;
            k += stride;
        }
    }
    export(traj.steps(), &mut manifest)?;
    fs::write(out_dir.join("slices.csv"), manifest).map_err(io_err)?;

    let mut report = header;
    let _ = writeln!(report, "phi0 = {phi0}");
    let _ = writeln!(report, "initial_mass = {m0}");
    let _ = writeln!(report, "max_rel_mass_drift = {max_drift:e}");
    let _ = writeln!(report, "min_population = {min_pop}");
    let _ = writeln!(report, "population_floor_ok = {}", min_pop >= phi0 - 1e-8);
    let _ = writeln!(report, "clamp_activations = {}", traj.clamped_cells());
    let _ = writeln!(report, "dt = {}", traj.dt());
    let _ = writeln!(report, "dt_max_heuristic = {dt_max}");
    let _ = writeln!(report, "dt_within_heuristic = {}", traj.dt() <= dt_max);
    fs::write(out_dir.join("forward_report.txt"), &report).map_err(io_err)?;

    println!(
        "forward: steps={} max_rel_mass_drift={max_drift:.3e} min_population={min_pop:.6} \
         clamp_activations={} dt={:.6} dt_max={dt_max:.6}",
        traj.steps(),
        traj.clamped_cells(),
        traj.dt(),
    );
    Ok(())
}

// ---------------------------------------------------------------------
// adjoint-check
// ---------------------------------------------------------------------

/// A smooth pseudo-random field: cellwise white noise passed twice
/// through the Sobolev smoother and rescaled to the requested amplitude.
pub fn smooth_direction(grid: Grid, rng: &mut ChaCha8Rng, amplitude: f64) -> Field {
    let raw = Field::from_fn(grid, |_, _| StandardNormal.sample(rng));
    let h = grid.hx().max(if grid.dim() == 2 { grid.hy() } else { 0.0 });
    let mu = (3.0 * h) * (3.0 * h);
    let smooth = crate::linsolve::solve_implicit_diffusion(mu, &raw)
        .and_then(|f| crate::linsolve::solve_implicit_diffusion(mu, &f))
        .expect("smoothing solve on a well-posed operator");
    let sup = smooth.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup == 0.0 {
        return smooth;
    }
    smooth.map(|v| v * amplitude / sup)
}

/// Random admissible parameters drawn uniformly from the box shrunk by 5%
/// on each side. Used for multi-start runs.
pub fn random_start(grid: Grid, bounds: Bounds, seed: u64) -> Parameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| {
        let margin = 0.05 * (hi - lo);
        let (a, b) = (lo + margin, hi - margin);
        Field::from_fn(grid, |_, _| rng.random_range(a..b))
    };
    let beta = draw(bounds.beta_lo, bounds.beta_hi);
    let gamma = draw(bounds.gamma_lo, bounds.gamma_hi);
    Parameters::new(beta, gamma, bounds).expect("draws stay inside the box")
}

fn midpoint_start(config: &RunConfig) -> Result<Parameters, RunError> {
    let (bmid, gmid) = config.bounds.midpoints();
    let beta = config
        .beta0
        .as_ref()
        .map(|p| p.evaluate(config.grid))
        .unwrap_or_else(|| Field::constant(config.grid, bmid));
    let gamma = config
        .gamma0
        .as_ref()
        .map(|p| p.evaluate(config.grid))
        .unwrap_or_else(|| Field::constant(config.grid, gmid));
    Parameters::from_projected(&beta, &gamma, config.bounds).map_err(RunError::from)
}

/// Epsilon ladder used by the finite-difference tables.
pub const FD_EPSILONS: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

fn run_adjoint_check(config: &RunConfig, out_dir: &Path) -> Result<(), RunError> {
    let twin = require_twin(config, "adjoint-check")?;
    let truth = make_truth(twin, config.grid, config.bounds)?;
    let (s0, i0) = initial_fields(config);
    let cfg = &config.model;
    let truth_traj = solve_forward(&s0, &i0, &truth, cfg)?;
    let (sobs, iobs) = observe(&truth_traj, twin.noise, twin.seed);

    // Base point away from the truth so the adjoint carries signal.
    let params = midpoint_start(config)?;
    let traj = solve_forward(&s0, &i0, &params, cfg)?;
    let adj = solve_adjoint(&traj, &sobs, &iobs, &params, cfg)?;
    let grad = reduced_gradient(&traj, &adj, &params, config.inverse.delta, cfg)?;

    let mut rng = ChaCha8Rng::seed_from_u64(twin.seed.wrapping_add(1));
    let header = header_lines(config);

    // Finite-difference table over 10 random smooth admissible directions.
    let mut fd_csv = String::new();
    fd_csv.push_str(&header);
    fd_csv.push_str("direction,epsilon,adjoint_dd,fd_dd,rel_error\n");
    let mut worst_min = 0.0f64;
    let mut first_dir: Option<(Field, Field)> = None;
    for dir in 0..10 {
        let dbeta = smooth_direction(config.grid, &mut rng, 0.2);
        let dgamma = smooth_direction(config.grid, &mut rng, 0.2);
        let dd = inner_l2(&grad.gbeta, &dbeta).map_err(RunError::from)?
            + inner_l2(&grad.ggamma, &dgamma).map_err(RunError::from)?;
        let mut min_err = f64::INFINITY;
        for eps in FD_EPSILONS {
            let j = |sign: f64| -> Result<f64, RunError> {
                let p = Parameters::new(
                    params
                        .beta()
                        .add_scaled(sign * eps, &dbeta)
                        .map_err(RunError::from)?,
                    params
                        .gamma()
                        .add_scaled(sign * eps, &dgamma)
                        .map_err(RunError::from)?,
                    config.bounds,
                )
                .map_err(RunError::from)?;
                let t = solve_forward(&s0, &i0, &p, cfg)?;
                Ok(evaluate_cost(&t, &sobs, &iobs, &p, config.inverse.delta)
                    .map_err(RunError::from)?
                    .0)
            };
            let fd = (j(1.0)? - j(-1.0)?) / (2.0 * eps);
            let rel = ((dd - fd) / fd.abs().max(1e-300)).abs();
            min_err = min_err.min(rel);
            let _ = writeln!(fd_csv, "{dir},{eps:e},{dd},{fd},{rel:e}");
        }
        worst_min = worst_min.max(min_err);
        if first_dir.is_none() {
            first_dir = Some((dbeta, dgamma));
        }
    }
    fs::write(out_dir.join("fd_table.csv"), fd_csv).map_err(io_err)?;

    // Duality gap at the base resolution and after one (h, dt) refinement.
    // The direction is a fixed closed-form pair so that every level tests
    // the same continuous perturbation.
    let mut duality_csv = String::new();
    duality_csv.push_str(&header);
    duality_csv.push_str("level,nx,ny,steps,gap,adjoint_sup\n");
    let mut gaps = Vec::new();
    for level in 0..2u32 {
        let factor = 1usize << level;
        let grid = refine_grid(config.grid, factor)?;
        let cfg_fine = ModelConfig::new(cfg.m(), cfg.n(), cfg.t_final(), cfg.dt() / factor as f64)
            .and_then(|c| c.with_floor(cfg.floor()))
            .map_err(RunError::from)?;
        let params_f = midpoint_start(&RunConfig {
            grid,
            ..config.clone()
        })?;
        let truth_f = make_truth(twin, grid, config.bounds)?;
        let s0f = config.s0.evaluate(grid);
        let i0f = config.i0.evaluate(grid);
        let truth_traj_f = solve_forward(&s0f, &i0f, &truth_f, &cfg_fine)?;
        let (sobs_f, iobs_f) = observe(&truth_traj_f, twin.noise, twin.seed);
        let traj_f = solve_forward(&s0f, &i0f, &params_f, &cfg_fine)?;
        let adj_f = solve_adjoint(&traj_f, &sobs_f, &iobs_f, &params_f, &cfg_fine)?;
        let dbeta_f = duality_direction(grid, 0.2, 1);
        let dgamma_f = duality_direction(grid, 0.15, 1);
        let tan_f = solve_tangent(&traj_f, &dbeta_f, &dgamma_f, &params_f, &cfg_fine)?;
        let gap = duality_gap(
            &traj_f, &adj_f, &tan_f, &dbeta_f, &dgamma_f, &sobs_f, &iobs_f, &cfg_fine,
        )
        .map_err(RunError::from)?;
        let _ = writeln!(
            duality_csv,
            "{level},{},{},{},{gap:e},{:e}",
            grid.nx(),
            grid.ny(),
            cfg_fine.steps(),
            adj_f.sup_norm()
        );
        gaps.push(gap);
    }
    fs::write(out_dir.join("duality.csv"), duality_csv).map_err(io_err)?;

    // Tangent consistency against forward differences of the state.
    let (dbeta, dgamma) = first_dir.expect("ten directions were generated");
    let mut tangent_csv = String::new();
    tangent_csv.push_str(&header);
    tangent_csv.push_str("epsilon,abs_error,rel_error\n");
    let tan = solve_tangent(&traj, &dbeta, &dgamma, &params, cfg)?;

    // Representative sensitivity slices for inspection: the adjoint at the
    // initial time and the tangent response at the final time.
    write_field_file(&out_dir.join("adjoint_p1_t0.csv"), adj.p1_at(0))?;
    write_field_file(&out_dir.join("adjoint_p2_t0.csv"), adj.p2_at(0))?;
    write_field_file(&out_dir.join("tangent_z1_T.csv"), tan.final_z1())?;
    write_field_file(&out_dir.join("tangent_z2_T.csv"), tan.final_z2())?;
    let z_norm = crate::grid::norm_l2(tan.final_z1()).max(1e-300);
    for eps in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let p = Parameters::new(
            params
                .beta()
                .add_scaled(eps, &dbeta)
                .map_err(RunError::from)?,
            params
                .gamma()
                .add_scaled(eps, &dgamma)
                .map_err(RunError::from)?,
            config.bounds,
        )
        .map_err(RunError::from)?;
        let t = solve_forward(&s0, &i0, &p, cfg)?;
        let fd = t
            .final_s()
            .add_scaled(-1.0, traj.final_s())
            .map_err(RunError::from)?
            .map(|v| v / eps);
        let diff = fd
            .add_scaled(-1.0, tan.final_z1())
            .map_err(RunError::from)?;
        let abs = crate::grid::norm_l2(&diff);
        let _ = writeln!(tangent_csv, "{eps:e},{abs:e},{:e}", abs / z_norm);
    }
    fs::write(out_dir.join("tangent.csv"), tangent_csv).map_err(io_err)?;

    println!(
        "adjoint-check: worst min-over-eps FD error={worst_min:.3e} \
         duality gap base={:.3e} refined={:.3e} ratio={:.2}",
        gaps[0],
        gaps[1],
        gaps[0] / gaps[1].max(1e-300)
    );
    Ok(())
}

fn refine_grid(grid: Grid, factor: usize) -> Result<Grid, RunError> {
    let refined = match grid.dim() {
        1 => Grid::line(grid.nx() * factor, grid.lx()),
        _ => Grid::rectangle(grid.nx() * factor, grid.ny() * factor, grid.lx(), grid.ly()),
    };
    refined.map_err(RunError::from)
}

/// Closed-form cosine perturbation used by the duality table, exactly
/// representable at every refinement level.
pub fn duality_direction(grid: Grid, amplitude: f64, frequency: u32) -> Field {
    let kx = 2.0 * std::f64::consts::PI * frequency as f64 / grid.lx();
    Field::from_fn(grid, |x, y| {
        let mut v = (kx * x).cos();
        if grid.dim() == 2 {
            let ky = 2.0 * std::f64::consts::PI * frequency as f64 / grid.ly();
            v *= (ky * y).cos();
        }
        amplitude * (v + 0.25)
    })
}

// ---------------------------------------------------------------------
// invert
// ---------------------------------------------------------------------

struct InvertArtifacts {
    report: InversionReport,
    truth: Option<Parameters>,
}

/// Observations, and the truth when one exists, written next to the
/// recovery artifacts for post-hoc inspection.
fn write_problem_inputs(
    out_dir: &Path,
    sobs: &Field,
    iobs: &Field,
    truth: Option<&Parameters>,
) -> Result<(), RunError> {
    write_field_file(&out_dir.join("observations_s.csv"), sobs)?;
    write_field_file(&out_dir.join("observations_i.csv"), iobs)?;
    if let Some(truth) = truth {
        write_field_file(&out_dir.join("truth_beta.csv"), truth.beta())?;
        write_field_file(&out_dir.join("truth_gamma.csv"), truth.gamma())?;
    }
    Ok(())
}

fn resolve_observations(
    config: &RunConfig,
    s0: &Field,
    i0: &Field,
) -> Result<(Field, Field, Option<Parameters>), RunError> {
    if let Some(ObservationFiles { s_file, i_file }) = &config.observations {
        let read = |path: &str| -> Result<Field, RunError> {
            let file = fs::File::open(path).map_err(|e| {
                RunError::Validation(format!("cannot open observation file {path}: {e}"))
            })?;
            let field = crate::grid::read_field_csv(std::io::BufReader::new(file))
                .map_err(|e| RunError::Validation(format!("observation file {path}: {e}")))?;
            if field.grid() != &config.grid {
                return Err(RunError::Validation(format!(
                    "observation file {path} is on a different grid than the config"
                )));
            }
            Ok(field)
        };
        let sobs = read(s_file)?;
        let iobs = read(i_file)?;
        let truth = match &config.twin {
            Some(twin) => Some(make_truth(twin, config.grid, config.bounds)?),
            None => None,
        };
        return Ok((sobs, iobs, truth));
    }
    let twin = config.twin.as_ref().ok_or_else(|| {
        RunError::Validation(
            "invert needs either observation files (observations.s_file/i_file) or a twin \
             block to synthesize them"
                .to_string(),
        )
    })?;
    let truth = make_truth(twin, config.grid, config.bounds)?;
    let traj = solve_forward(s0, i0, &truth, &config.model)?;
    let (sobs, iobs) = observe(&traj, twin.noise, twin.seed);
    Ok((sobs, iobs, Some(truth)))
}

fn write_invert_artifacts(
    config: &RunConfig,
    out_dir: &Path,
    art: &InvertArtifacts,
) -> Result<(), RunError> {
    let header = header_lines(config);
    let mut csv = String::new();
    csv.push_str(&header);
    csv.push_str("iter,cost,misfit,penalty,grad_norm,step\n");
    for r in &art.report.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.iter, r.cost, r.misfit, r.penalty, r.grad_norm, r.step
        );
    }
    fs::write(out_dir.join("iterations.csv"), csv).map_err(io_err)?;

    write_field_file(&out_dir.join("beta.csv"), art.report.final_params.beta())?;
    write_field_file(&out_dir.join("gamma.csv"), art.report.final_params.gamma())?;

    let status = format!(
        "{} after {} accepted steps (final cost {:.6e}, projected gradient norm {:.6e})\n",
        art.report.termination.as_str(),
        art.report.accepted_steps(),
        art.report.final_cost(),
        art.report.final_grad_norm,
    );
    fs::write(out_dir.join("status.txt"), status).map_err(io_err)?;

    if let Some(truth) = &art.truth {
        let scores = score(&art.report.final_params, truth).map_err(RunError::from)?;
        let mut csv = String::new();
        csv.push_str(&header);
        csv.push_str("rel_beta,rel_gamma,shifted_rel_beta,shifted_rel_gamma\n");
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            scores.rel_beta, scores.rel_gamma, scores.shifted_rel_beta, scores.shifted_rel_gamma
        );
        fs::write(out_dir.join("scores.csv"), csv).map_err(io_err)?;
    }
    Ok(())
}

fn run_invert(config: &RunConfig, out_dir: &Path) -> Result<InvertArtifacts, RunError> {
    let (s0, i0) = initial_fields(config);
    let (sobs, iobs, truth) = resolve_observations(config, &s0, &i0)?;
    write_problem_inputs(out_dir, &sobs, &iobs, truth.as_ref())?;
    let start = midpoint_start(config)?;
    let report = invert(
        &s0,
        &i0,
        &sobs,
        &iobs,
        &start,
        &config.model,
        &config.inverse,
    )?;
    let art = InvertArtifacts { report, truth };
    write_invert_artifacts(config, out_dir, &art)?;

    println!(
        "invert: {} accepted_steps={} cost={:.6e} misfit={:.6e} grad_norm={:.3e}",
        art.report.termination.as_str(),
        art.report.accepted_steps(),
        art.report.final_cost(),
        art.report.final_misfit(),
        art.report.final_grad_norm,
    );
    Ok(art)
}

// ---------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------

fn run_sweep(config: &RunConfig, out_dir: &Path) -> Result<(), RunError> {
    let twin = require_twin(config, "sweep")?;
    let truth = make_truth(twin, config.grid, config.bounds)?;
    let (s0, i0) = initial_fields(config);
    let truth_traj = solve_forward(&s0, &i0, &truth, &config.model)?;
    let (sobs, iobs) = observe(&truth_traj, twin.noise, twin.seed);
    write_problem_inputs(out_dir, &sobs, &iobs, Some(&truth))?;

    let header = header_lines(config);
    let mut summary = String::new();
    summary.push_str(&header);
    summary.push_str(
        "delta,cost,misfit,penalty,seminorm,rel_beta,rel_gamma,shifted_rel_beta,\
         shifted_rel_gamma,multistart_raw,multistart_shifted\n",
    );

    for (idx, &delta) in config.sweep_deltas.iter().enumerate() {
        let job_dir = out_dir.join(format!("delta_{idx}_{delta:e}"));
        fs::create_dir_all(&job_dir).map_err(io_err)?;
        let mut icfg = config.inverse;
        icfg.delta = delta;
        let sub_config = RunConfig {
            inverse: icfg,
            ..config.clone()
        };

        // Base run from the configured (midpoint) start.
        let start = midpoint_start(config)?;
        let report = invert(&s0, &i0, &sobs, &iobs, &start, &config.model, &icfg)?;
        let art = InvertArtifacts {
            report,
            truth: Some(truth.clone()),
        };
        write_invert_artifacts(&sub_config, &job_dir, &art)?;
        let scores = score(&art.report.final_params, &truth).map_err(RunError::from)?;
        let seminorm = crate::grid::seminorm_h1(art.report.final_params.beta())
            + crate::grid::seminorm_h1(art.report.final_params.gamma());

        // Multi-start agreement: independent random starts per seed.
        let mut finals = Vec::new();
        for &seed in &config.sweep_seeds {
            let start_dir = job_dir.join(format!("start_{seed}"));
            fs::create_dir_all(&start_dir).map_err(io_err)?;
            let start = random_start(config.grid, config.bounds, seed);
            let report = invert(&s0, &i0, &sobs, &iobs, &start, &config.model, &icfg)?;
            let art = InvertArtifacts {
                report,
                truth: Some(truth.clone()),
            };
            write_invert_artifacts(&sub_config, &start_dir, &art)?;
            finals.push(art.report.final_params);
        }
        let (ms_raw, ms_shifted) = if finals.len() >= 2 {
            let s = score(&finals[0], &finals[1]).map_err(RunError::from)?;
            (
                s.rel_beta + s.rel_gamma,
                s.shifted_rel_beta + s.shifted_rel_gamma,
            )
        } else {
            (f64::NAN, f64::NAN)
        };

        let _ = writeln!(
            summary,
            "{delta:e},{},{},{},{seminorm},{},{},{},{},{ms_raw},{ms_shifted}",
            art.report.final_cost(),
            art.report.final_misfit(),
            art.report.final_penalty(),
            scores.rel_beta,
            scores.rel_gamma,
            scores.shifted_rel_beta,
            scores.shifted_rel_gamma,
        );
        println!(
            "sweep delta={delta:.1e}: cost={:.4e} seminorm={seminorm:.4e} \
             shifted=({:.4},{:.4}) multistart_shifted={ms_shifted:.4e}",
            art.report.final_cost(),
            scores.shifted_rel_beta,
            scores.shifted_rel_gamma,
        );
    }
    fs::write(out_dir.join("summary.csv"), summary).map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verbs_parse() {
        assert_eq!("forward".parse::<Verb>().unwrap(), Verb::Forward);
        assert_eq!("adjoint-check".parse::<Verb>().unwrap(), Verb::AdjointCheck);
        assert!("plot".parse::<Verb>().is_err());
    }

    #[test]
    fn error_classification_maps_exit_codes() {
        let v: RunError = Error::ZeroInfectedMass.into();
        assert_eq!(v.exit_code(), 1);
        let s: RunError = Error::LinearSolveDiverged {
            iterations: 10,
            cap: 10,
            residual: 1.0,
        }
        .into();
        assert_eq!(s.exit_code(), 2);
    }

    #[test]
    fn smooth_direction_is_deterministic_and_bounded() {
        let grid = Grid::line(16, 1.0).unwrap();
        let mut rng1 = ChaCha8Rng::seed_from_u64(5);
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        let d1 = smooth_direction(grid, &mut rng1, 0.2);
        let d2 = smooth_direction(grid, &mut rng2, 0.2);
        assert_eq!(d1, d2);
        let sup = d1.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((sup - 0.2).abs() <= 1e-12, "rescaled sup {sup}");
    }

    #[test]
    fn random_start_stays_inside_the_box() {
        let grid = Grid::line(32, 1.0).unwrap();
        let bounds = Bounds::new(0.1, 0.9, 0.2, 0.8).unwrap();
        let p = random_start(grid, bounds, 99);
        assert!(p.beta().min() > 0.1 && p.beta().max() < 0.9);
        assert!(p.gamma().min() > 0.2 && p.gamma().max() < 0.8);
        let q = random_start(grid, bounds, 99);
        assert_eq!(p.beta(), q.beta(), "same seed must reproduce the start");
    }
}
