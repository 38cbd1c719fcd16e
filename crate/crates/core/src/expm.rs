//! Matrix exponential and principal logarithm by (inverse) scaling and squaring.

use crate::error::{Error, Result};
use crate::matrix::{ensure_finite, ensure_square, norm1, Matrix};

/// Scaled norm the Taylor core is evaluated at.
const EXP_SCALED_NORM: f64 = 0.5;
/// Distance from the identity below which the series core of `mlog` runs.
const LOG_CORE_RADIUS: f64 = 0.35;
const MAX_SQUARE_ROOTS: usize = 48;

/// Matrix exponential.
///
/// Scales `X` by `2^-s` until its 1-norm is below 0.5, sums the Taylor series to
/// machine precision, then squares `s` times.
pub fn mexp(x: &Matrix) -> Result<Matrix> {
    let n = ensure_square(x, "mexp")?;
    ensure_finite(x, "mexp input")?;
    let norm = norm1(x);
    let mut squarings = 0u32;
    if norm > EXP_SCALED_NORM {
        squarings = (norm / EXP_SCALED_NORM).log2().ceil().max(0.0) as u32;
        while norm / 2f64.powi(squarings as i32) >= EXP_SCALED_NORM {
            squarings += 1;
        }
    }
    let scaled = x / 2f64.powi(squarings as i32);

    let mut sum = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if norm1(&term) <= f64::EPSILON * 1e-2 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    ensure_finite(&sum, "mexp result")?;
    Ok(sum)
}

/// Principal matrix logarithm.
///
/// Takes square roots (product form of the Denman-Beavers iteration) until the
/// argument is within 0.35 of the identity, evaluates `2 atanh((A-I)(A+I)^-1)` by
/// its series, and scales back. Inputs with an eigenvalue on the closed negative
/// real axis have no principal logarithm and are rejected as a chart overflow.
pub fn mlog(g: &Matrix) -> Result<Matrix> {
    let n = ensure_square(g, "mlog")?;
    ensure_finite(g, "mlog input")?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let id = Matrix::identity(n, n);
    if norm1(&(g - &id)) > LOG_CORE_RADIUS {
        check_principal_domain(g)?;
    }

    let mut a = g.clone();
    let mut roots = 0usize;
    while norm1(&(&a - &id)) > LOG_CORE_RADIUS {
        if roots == MAX_SQUARE_ROOTS {
            return Err(Error::LogChartExceeded(
                "too many square roots needed".into(),
            ));
        }
        a = sqrtm(&a)?;
        roots += 1;
    }

    let denom = (&a + &id)
        .try_inverse()
        .ok_or_else(|| Error::LogChartExceeded("A + I is singular".into()))?;
    let z = (&a - &id) * denom;
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = z.clone();
    for j in 1..200 {
        power = &power * &z2;
        let term = &power / (2 * j + 1) as f64;
        sum += &term;
        if norm1(&term) <= f64::EPSILON * 1e-2 * norm1(&sum).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let log = sum * (2.0 * 2f64.powi(roots as i32));
    ensure_finite(&log, "mlog result")?;
    Ok(log)
}

fn check_principal_domain(g: &Matrix) -> Result<()> {
    let scale = norm1(g).max(1.0);
    for ev in g.clone().complex_eigenvalues().iter() {
        if ev.im.abs() <= 1e-12 * scale && ev.re <= 1e-14 * scale {
            return Err(Error::LogChartExceeded(format!(
                "eigenvalue {:.3e} on the closed negative real axis",
                ev.re
            )));
        }
    }
    Ok(())
}

/// Principal square root, product form of the Denman-Beavers iteration.
fn sqrtm(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let mut m = a.clone();
    let mut y = a.clone();
    for _ in 0..100 {
        let m_inv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::LogChartExceeded("singular square-root iterate".into()))?;
        y = &y * (&id + &m_inv) * 0.5;
        m = (&id + (&m + &m_inv) * 0.5) * 0.5;
        if norm1(&(&m - &id)) <= 1e-15 * n as f64 {
            return Ok(y);
        }
        ensure_finite(&m, "square-root iterate")?;
    }
    Err(Error::LogChartExceeded(
        "square-root iteration did not converge".into(),
    ))
}
