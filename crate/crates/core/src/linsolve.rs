//! Solvers for the implicit diffusion step `(Id - c * lap) x = b`.
//!
//! In 1D the system is tridiagonal and solved directly (Thomas algorithm).
//! In 2D it is symmetric positive definite and solved by conjugate
//! gradients. Both paths finish with a constant-mode correction that
//! restores `sum(x) = sum(b)` exactly: the operator has unit row and
//! column sums, so the true solution carries the mass of the right-hand
//! side, and distributing the leftover defect uniformly moves the iterate
//! toward the solution without perturbing the residual beyond its own
//! size. This keeps the total population drift of the marching schemes at
//! rounding level instead of solver-tolerance level.

use crate::error::{Error, Result};
use crate::grid::{laplacian_neumann, Field};

/// Target relative residual for the conjugate-gradient path. Tighter than
/// the 1e-10 contract of the time steppers so the post-correction residual
/// stays well inside it.
const CG_REL_TOL: f64 = 1e-12;

/// Solve `(Id - c * lap) x = b` with homogeneous Neumann closure.
///
/// `c` must be nonnegative (it is `dt` in the time steppers and the
/// smoothing length in the Sobolev preconditioner).
pub fn solve_implicit_diffusion(c: f64, b: &Field) -> Result<Field> {
    if c == 0.0 {
        return Ok(b.clone());
    }
    let mut x = match b.grid().dim() {
        1 => solve_tridiagonal(c, b),
        _ => solve_cg(c, b)?,
    };
    restore_mass(b, &mut x);
    x.check_finite()?;
    Ok(x)
}

/// Thomas algorithm for the 1D operator. Diagonal `1 + 2r` in the
/// interior, `1 + r` at the two mirror-closed boundary rows, off-diagonal
/// `-r`, with `r = c / hx^2`.
fn solve_tridiagonal(c: f64, b: &Field) -> Field {
    let g = *b.grid();
    let n = g.cells();
    let r = c / (g.hx() * g.hx());
    let rhs = b.values();

    let diag = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            1.0 + r
        } else {
            1.0 + 2.0 * r
        }
    };

    // Forward sweep.
    let mut cprime = vec![0.0; n];
    let mut dprime = vec![0.0; n];
    cprime[0] = -r / diag(0);
    dprime[0] = rhs[0] / diag(0);
    for i in 1..n {
        let m = diag(i) + r * cprime[i - 1];
        cprime[i] = -r / m;
        dprime[i] = (rhs[i] + r * dprime[i - 1]) / m;
    }

    // Back substitution.
    let mut x = vec![0.0; n];
    x[n - 1] = dprime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dprime[i] - cprime[i] * x[i + 1];
    }
    Field::from_values(g, x).expect("solution has grid length")
}

/// Conjugate gradients on `A = Id - c * lap`, warm-started at `b`.
fn solve_cg(c: f64, b: &Field) -> Result<Field> {
    let cap = 10 * b.grid().cells();
    let matvec = |u: &Field| -> Field {
        let lap = laplacian_neumann(u);
        u.add_scaled(-c, &lap).expect("same grid")
    };

    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok(Field::zeros(*b.grid()));
    }
    let tol = CG_REL_TOL * norm_b;

    let mut x = b.clone();
    let ax = matvec(&x);
    let mut res = b.add_scaled(-1.0, &ax).expect("same grid");
    let mut p = res.clone();
    let mut rr = dot(&res, &res);

    for iter in 0..cap {
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        let ap = matvec(&p);
        let alpha = rr / dot(&p, &ap);
        x = x.add_scaled(alpha, &p).expect("same grid");
        res = res.add_scaled(-alpha, &ap).expect("same grid");
        let rr_next = dot(&res, &res);
        let beta = rr_next / rr;
        rr = rr_next;
        p = res.add_scaled(beta, &p).expect("same grid");
        let _ = iter;
    }
    if rr.sqrt() <= tol {
        Ok(x)
    } else {
        Err(Error::LinearSolveDiverged {
            iterations: cap,
            cap,
            residual: rr.sqrt() / norm_b,
        })
    }
}

fn dot(u: &Field, v: &Field) -> f64 {
    u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum()
}

/// Shift by the constant that makes `sum(x)` equal `sum(b)`.
fn restore_mass(b: &Field, x: &mut Field) {
    let sb: f64 = b.values().iter().sum();
    let sx: f64 = x.values().iter().sum();
    let shift = (sb - sx) / x.len() as f64;
    for v in x.values_mut() {
        *v += shift;
    }
}
