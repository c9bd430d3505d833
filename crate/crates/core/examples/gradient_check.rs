//! Verification of the adjoint machinery: finite-difference check of the
//! reduced gradient, the duality (dot-product) identity under refinement,
//! and tangent-linear consistency.
//!
//! ```sh
//! cargo run --release --example gradient_check
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sis_inverse::run::{duality_direction, smooth_direction, FD_EPSILONS};
use sis_inverse::*;
use std::f64::consts::PI;

fn setup(nx: usize, steps: usize) -> (Field, Field, Parameters, Parameters, ModelConfig) {
    let grid = Grid::line(nx, 1.0).unwrap();
    let cfg = ModelConfig::new(0.5, 0.5, 0.5, 0.5 / steps as f64).unwrap();
    let bounds = Bounds::new(0.1, 0.9, 0.1, 0.9).unwrap();
    let truth = Parameters::new(
        Field::from_fn(grid, |x, _| 0.4 + 0.15 * (2.0 * PI * x).cos()),
        Field::from_fn(grid, |x, _| 0.35 - 0.1 * (PI * x).cos()),
        bounds,
    )
    .unwrap();
    let (bm, gm) = bounds.midpoints();
    let base =
        Parameters::new(Field::constant(grid, bm), Field::constant(grid, gm), bounds).unwrap();
    let s0 = Field::from_fn(grid, |x, _| 0.7 + 0.1 * (PI * x).cos());
    let i0 = Field::from_fn(grid, |x, _| 0.3 - 0.05 * (2.0 * PI * x).cos());
    (s0, i0, truth, base, cfg)
}

fn main() {
    let delta = 1e-6;

    // Gradient vs central finite differences of the cost.
    let (s0, i0, truth, base, cfg) = setup(32, 64);
    let truth_traj = solve_forward(&s0, &i0, &truth, &cfg).unwrap();
    let (sobs, iobs) = observe(&truth_traj, 0.0, 0);
    let traj = solve_forward(&s0, &i0, &base, &cfg).unwrap();
    let adj = solve_adjoint(&traj, &sobs, &iobs, &base, &cfg).unwrap();
    let g = reduced_gradient(&traj, &adj, &base, delta, &cfg).unwrap();

    println!("finite-difference check, 10 random smooth directions:");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for dir in 0..10 {
        let dbeta = smooth_direction(*s0.grid(), &mut rng, 0.2);
        let dgamma = smooth_direction(*s0.grid(), &mut rng, 0.2);
        let dd = inner_l2(&g.gbeta, &dbeta).unwrap() + inner_l2(&g.ggamma, &dgamma).unwrap();
        let j = |eps: f64| {
            let p = Parameters::new(
                base.beta().add_scaled(eps, &dbeta).unwrap(),
                base.gamma().add_scaled(eps, &dgamma).unwrap(),
                base.bounds(),
            )
            .unwrap();
            let t = solve_forward(&s0, &i0, &p, &cfg).unwrap();
            evaluate_cost(&t, &sobs, &iobs, &p, delta).unwrap().0
        };
        let mut best = f64::INFINITY;
        print!("  dir {dir}: ");
        for eps in FD_EPSILONS {
            let fd = (j(eps) - j(-eps)) / (2.0 * eps);
            let rel = ((dd - fd) / fd.abs().max(1e-300)).abs();
            best = best.min(rel);
            print!("{rel:.1e} ");
        }
        println!("(min {best:.2e})");
        worst = worst.max(best);
    }
    println!("worst min-over-epsilon relative error: {worst:.3e}\n");

    // Duality identity under simultaneous (h, dt) refinement.
    println!("duality gap under refinement:");
    let mut gaps = Vec::new();
    for level in 0..2u32 {
        let f = 1usize << level;
        let (s0, i0, truth, base, cfg) = setup(32 * f, 64 * f);
        let grid = *s0.grid();
        let truth_traj = solve_forward(&s0, &i0, &truth, &cfg).unwrap();
        let (sobs, iobs) = observe(&truth_traj, 0.0, 0);
        let traj = solve_forward(&s0, &i0, &base, &cfg).unwrap();
        let adj = solve_adjoint(&traj, &sobs, &iobs, &base, &cfg).unwrap();
        let dbeta = duality_direction(grid, 0.2, 1);
        let dgamma = duality_direction(grid, 0.15, 2);
        let tan = solve_tangent(&traj, &dbeta, &dgamma, &base, &cfg).unwrap();
        let gap = duality_gap(&traj, &adj, &tan, &dbeta, &dgamma, &sobs, &iobs, &cfg).unwrap();
        println!("  nx={:3} K={:3}: gap = {gap:.4e}", grid.nx(), cfg.steps());
        gaps.push(gap);
    }
    println!("  refinement ratio: {:.2}\n", gaps[0] / gaps[1]);

    // Tangent linearization vs forward differences of the state.
    println!("tangent consistency (forward differences):");
    let (s0, i0, _, base, cfg) = setup(32, 64);
    let traj = solve_forward(&s0, &i0, &base, &cfg).unwrap();
    let dbeta = duality_direction(*s0.grid(), 0.2, 1);
    let dgamma = duality_direction(*s0.grid(), 0.15, 2);
    let tan = solve_tangent(&traj, &dbeta, &dgamma, &base, &cfg).unwrap();
    for eps in [1e-2, 5e-3, 2.5e-3] {
        let p = Parameters::new(
            base.beta().add_scaled(eps, &dbeta).unwrap(),
            base.gamma().add_scaled(eps, &dgamma).unwrap(),
            base.bounds(),
        )
        .unwrap();
        let t = solve_forward(&s0, &i0, &p, &cfg).unwrap();
        let fd = t
            .final_s()
            .add_scaled(-1.0, traj.final_s())
            .unwrap()
            .map(|v| v / eps);
        let err = norm_l2(&fd.add_scaled(-1.0, tan.final_z1()).unwrap());
        println!("  eps={eps:.2e}: |z1(T) - fd| = {err:.4e}");
    }
}
