//! Newton iteration for square nonlinear systems.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 25;

/// How the Jacobian is obtained.
pub enum Jacobian<'a> {
    /// Central differences with the given relative step.
    FiniteDifference { step: f64 },
    Supplied(&'a dyn Fn(&[f64]) -> Result<Matrix>),
}

impl Default for Jacobian<'_> {
    fn default() -> Self {
        Jacobian::FiniteDifference { step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: NEWTON_TOL, max_iter: NEWTON_MAX_ITER }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solves `residual(x) = 0` from `x0`.
///
/// Stops once `|residual(x)| <= tol`. A Jacobian whose smallest singular value is
/// below `1e-13` times its largest is reported as [`Error::SingularJacobian`].
pub fn newton_solve<F>(
    residual: F,
    jacobian: Jacobian<'_>,
    x0: &[f64],
    opts: NewtonOptions,
) -> Result<NewtonSolution>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x)?;
    if r.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "residual has {} components for {} unknowns",
            r.len(),
            m
        )));
    }
    let mut rnorm = norm(&r);
    let mut iter = 0;
    loop {
        if !rnorm.is_finite() {
            return Err(Error::NewtonDiverged { iterations: iter, residual: rnorm });
        }
        if rnorm <= opts.tol {
            return Ok(NewtonSolution { x, residual_norm: rnorm, iterations: iter });
        }
        if iter == opts.max_iter {
            return Err(Error::NewtonDiverged { iterations: iter, residual: rnorm });
        }
        let jac = match &jacobian {
            Jacobian::Supplied(f) => f(&x)?,
            Jacobian::FiniteDifference { step } => fd_jacobian(&residual, &x, *step)?,
        };
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smax > 0.0) || smin <= 1e-13 * smax {
            return Err(Error::SingularJacobian { iteration: iter, residual: rnorm });
        }
        let rhs = Vector::from_column_slice(&r);
        let dx = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
        r = residual(&x)?;
        rnorm = norm(&r);
        iter += 1;
    }
}

fn fd_jacobian<F>(residual: &F, x: &[f64], rel_step: f64) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = x.len();
    let mut jac = Matrix::zeros(m, m);
    let mut probe = x.to_vec();
    for j in 0..m {
        let h = rel_step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let rp = residual(&probe)?;
        probe[j] = x[j] - h;
        let rm = residual(&probe)?;
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_residual_solves_in_one_step() {
        let sol = newton_solve(|x| Ok(x.to_vec()), Jacobian::default(), &[0.1], NewtonOptions::default()).unwrap();
        assert!(sol.x[0].abs() <= 1e-12);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn square_root_of_two() {
        let sol = newton_solve(
            |x| Ok(vec![x[0] * x[0] - 2.0]),
            Jacobian::default(),
            &[1.0],
            NewtonOptions::default(),
        )
        .unwrap();
        assert!((sol.x[0] - std::f64::consts::SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn supplied_jacobian() {
        let jac = |x: &[f64]| Ok(Matrix::from_element(1, 1, 2.0 * x[0]));
        let sol = newton_solve(
            |x| Ok(vec![x[0] * x[0] - 2.0]),
            Jacobian::Supplied(&jac),
            &[1.0],
            NewtonOptions::default(),
        )
        .unwrap();
        assert!((sol.x[0] - std::f64::consts::SQRT_2).abs() <= 1e-12);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let r = newton_solve(
            |x| Ok(vec![x[0] * x[0] + 1.0]),
            Jacobian::default(),
            &[0.0],
            NewtonOptions::default(),
        );
        assert!(matches!(r, Err(Error::SingularJacobian { iteration: 0, .. })));
    }

    #[test]
    fn non_convergence_carries_last_residual() {
        // No real root: iterates wander without the Jacobian ever vanishing exactly.
        let r = newton_solve(
            |x| Ok(vec![x[0] * x[0] + 1.0]),
            Jacobian::default(),
            &[0.3],
            NewtonOptions::default(),
        );
        match r {
            Err(Error::NewtonDiverged { iterations, residual }) => {
                assert_eq!(iterations, NEWTON_MAX_ITER);
                assert!(residual >= 1.0);
            }
            Err(Error::SingularJacobian { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_unknowns_is_trivially_solved() {
        let sol = newton_solve(|_| Ok(vec![]), Jacobian::default(), &[], NewtonOptions::default()).unwrap();
        assert!(sol.x.is_empty());
    }
}
