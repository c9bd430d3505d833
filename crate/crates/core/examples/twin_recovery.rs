//! Twin experiment: generate observations from known rate fields, then
//! recover them by projected gradient descent from a box-midpoint start.
//!
//! ```sh
//! cargo run --release --example twin_recovery
//! ```

use sis_inverse::*;
use std::f64::consts::PI;

fn main() {
    let grid = Grid::line(16, 1.0).unwrap();
    let cfg = ModelConfig::new(0.2, 0.2, 0.25, 0.25 / 64.0).unwrap();
    let bounds = Bounds::new(0.1, 0.9, 0.1, 0.9).unwrap();

    let spec = TwinSpec {
        beta: Profile::Sinusoidal {
            base: 0.4,
            amplitude: 0.15,
            frequency: 1,
        },
        gamma: Profile::GaussianBump {
            base: 0.3,
            amplitude: 0.15,
            center: 0.5,
            width: 0.2,
        },
        noise: 0.0,
        seed: 0,
    };
    let truth = make_truth(&spec, grid, bounds).unwrap();

    // Initial densities with enough spatial structure to make both rate
    // fields visible in the terminal observations.
    let s0 = Field::from_fn(grid, |x, _| {
        0.55 + 0.25 * (PI * x).cos() + 0.12 * (3.0 * PI * x).cos()
    });
    let i0 = Field::from_fn(grid, |x, _| {
        0.35 - 0.15 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).sin()
    });

    let traj = solve_forward(&s0, &i0, &truth, &cfg).unwrap();
    let (sobs, iobs) = observe(&traj, spec.noise, spec.seed);

    let (bm, gm) = bounds.midpoints();
    let start =
        Parameters::new(Field::constant(grid, bm), Field::constant(grid, gm), bounds).unwrap();
    let icfg = InverseConfig {
        delta: 1e-6,
        max_iters: 500,
        grad_tol: 1e-12,
        step0: 10.0,
        ..Default::default()
    };

    let t0 = std::time::Instant::now();
    let report = invert(&s0, &i0, &sobs, &iobs, &start, &cfg, &icfg).unwrap();
    let elapsed = t0.elapsed();

    let last = report.records.last().filter(|r| r.iter % 50 != 0);
    println!("iter       cost        misfit      penalty     |pg|        step");
    for r in report.records.iter().step_by(50).chain(last) {
        println!(
            "{:4}  {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.3e}",
            r.iter, r.cost, r.misfit, r.penalty, r.grad_norm, r.step
        );
    }
    println!(
        "\nterminated: {} after {} accepted steps in {elapsed:.2?}",
        report.termination.as_str(),
        report.accepted_steps()
    );

    let scores = score(&report.final_params, &truth).unwrap();
    println!(
        "relative L2 error    beta = {:.4}, gamma = {:.4}",
        scores.rel_beta, scores.rel_gamma
    );
    println!(
        "mean-shifted error   beta = {:.4}, gamma = {:.4}",
        scores.shifted_rel_beta, scores.shifted_rel_gamma
    );

    println!("\n  x      beta*   beta^   gamma*  gamma^");
    for c in 0..grid.cells() {
        let (x, _) = grid.cell_center(c);
        println!(
            "{x:.4}  {:.4}  {:.4}  {:.4}  {:.4}",
            truth.beta().values()[c],
            report.final_params.beta().values()[c],
            truth.gamma().values()[c],
            report.final_params.gamma().values()[c],
        );
    }
}
