//! ODE integration: adaptive Dormand-Prince 5(4) with domain-escape detection, and
//! a fixed-step classical Runge-Kutta scheme for smooth parameter dependence.

use std::cell::RefCell;

use nalgebra::DVector;
use ode_solvers::dop_shared::{OutputType, System};
use ode_solvers::Dopri5;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step; `f64::INFINITY` leaves it to the controller.
    pub max_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: DEFAULT_TOL, atol: DEFAULT_TOL, max_step: f64::INFINITY }
    }
}

impl IntegratorOptions {
    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.rtol = tol;
        self.atol = tol;
        self
    }
}

struct Adapter<'a, F, G> {
    rhs: &'a F,
    outside: &'a G,
    escape: &'a RefCell<Option<(Vec<f64>, f64)>>,
}

impl<F, G> System<f64, DVector<f64>> for Adapter<'_, F, G>
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: Fn(f64, &[f64]) -> Option<Vec<f64>>,
{
    fn system(&self, t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        (self.rhs)(t, y.as_slice(), dy.as_mut_slice());
    }

    fn solout(&mut self, t: f64, y: &DVector<f64>, _dy: &DVector<f64>) -> bool {
        let loc = if y.iter().all(|v| v.is_finite()) {
            (self.outside)(t, y.as_slice())
        } else {
            Some(y.as_slice().to_vec())
        };
        match loc {
            Some(l) => {
                *self.escape.borrow_mut() = Some((l, t));
                true
            }
            None => false,
        }
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// `outside(t, y)` returns the offending location when the state has left the domain;
/// it is checked at the start and after every accepted step.
pub fn integrate_adaptive<F, G>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: IntegratorOptions,
    outside: G,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: Fn(f64, &[f64]) -> Option<Vec<f64>>,
{
    if let Some(location) = outside(t0, y0) {
        return Err(Error::Escaped { location, time: t0 });
    }
    if t0 == t1 || y0.is_empty() {
        return Ok(y0.to_vec());
    }
    let span = (t1 - t0).abs();
    let escape = RefCell::new(None);
    let adapter = Adapter { rhs: &rhs, outside: &outside, escape: &escape };
    let mut solver = Dopri5::from_param(
        adapter,
        t0,
        t1,
        span,
        DVector::from_column_slice(y0),
        opts.rtol,
        opts.atol,
        0.9,
        0.04,
        0.2,
        10.0,
        opts.max_step.min(span),
        0.0,
        1_000_000,
        1000,
        OutputType::Sparse,
    );
    let outcome = solver.integrate();
    if let Some((location, time)) = escape.take() {
        return Err(Error::Escaped { location, time });
    }
    outcome.map_err(|e| Error::Integration(e.to_string()))?;
    let last = solver.y_out().last().ok_or_else(|| Error::Integration("no output".into()))?;
    Ok(last.as_slice().to_vec())
}

/// Classical fourth-order Runge-Kutta with `steps` equal steps from `t0` to `t1`.
/// The result is a smooth function of `y0`, which keeps Newton iterations on it quadratic.
pub fn rk4_fixed<F>(rhs: F, t0: f64, t1: f64, y0: &[f64], steps: usize) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for s in 0..steps {
        let t = t0 + h * s as f64;
        rhs(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}
