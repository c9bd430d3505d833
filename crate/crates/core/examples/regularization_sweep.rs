//! Sweep the Tikhonov weight over several decades on one twin experiment
//! and report how the recovered fields' smoothness and the multi-start
//! agreement respond.
//!
//! ```sh
//! cargo run --release --example regularization_sweep
//! ```

use sis_inverse::run::random_start;
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
    let s0 = Field::from_fn(grid, |x, _| {
        0.55 + 0.25 * (PI * x).cos() + 0.12 * (3.0 * PI * x).cos()
    });
    let i0 = Field::from_fn(grid, |x, _| {
        0.35 - 0.15 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).sin()
    });
    let traj = solve_forward(&s0, &i0, &truth, &cfg).unwrap();
    let (sobs, iobs) = observe(&traj, spec.noise, spec.seed);

    println!(
        "{:>8}  {:>11}  {:>11}  {:>11}  {:>11}  {:>11}",
        "delta", "misfit", "seminorm", "shifted_b", "shifted_g", "multistart"
    );
    for delta in [1e-6, 1e-4, 1e-2, 1.0] {
        let icfg = InverseConfig {
            delta,
            max_iters: 500,
            grad_tol: 1e-12,
            step0: 10.0,
            ..Default::default()
        };

        // Base run from the box midpoints.
        let (bm, gm) = bounds.midpoints();
        let start =
            Parameters::new(Field::constant(grid, bm), Field::constant(grid, gm), bounds).unwrap();
        let report = invert(&s0, &i0, &sobs, &iobs, &start, &cfg, &icfg).unwrap();
        let scores = score(&report.final_params, &truth).unwrap();
        let seminorm =
            seminorm_h1(report.final_params.beta()) + seminorm_h1(report.final_params.gamma());

        // Two independent random starts; their mean-shifted disagreement
        // probes how strongly the regularization pins down the minimizer.
        let mut finals = Vec::new();
        for seed in [1u64, 2] {
            let start = random_start(grid, bounds, seed);
            let r = invert(&s0, &i0, &sobs, &iobs, &start, &cfg, &icfg).unwrap();
            finals.push(r.final_params);
        }
        let ms = score(&finals[0], &finals[1]).unwrap();

        println!(
            "{delta:>8.0e}  {:>11.4e}  {seminorm:>11.4e}  {:>11.4e}  {:>11.4e}  {:>11.4e}",
            report.final_misfit(),
            scores.shifted_rel_beta,
            scores.shifted_rel_gamma,
            ms.shifted_rel_beta + ms.shifted_rel_gamma,
        );
    }
}
