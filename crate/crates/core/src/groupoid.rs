//! The transformation groupoid `H x G => G` of the left action `(h, g) -> h g`,
//! its projection to `H`, and the right-invariance of leafwise holonomy.

use crate::error::{Error, Result};
use crate::expm::{mexp, mlog};
use crate::holonomy::{GroupElement, SliceChart};
use crate::matrix::{dist, inverse, max_abs_diff, Matrix};
use crate::newton::{newton_solve, Jacobian, NewtonOptions};

pub const COMPOSABLE_TOL: f64 = 1e-12;

/// An arrow `(h, g)` from `g` to `h g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGroupoidElement {
    pub h: GroupElement,
    pub g: GroupElement,
}

impl ActionGroupoidElement {
    pub fn new(h: GroupElement, g: GroupElement) -> Self {
        Self { h, g }
    }

    pub fn unit(g: GroupElement) -> Self {
        let n = g.matrix().nrows();
        Self { h: GroupElement::identity(n), g }
    }

    pub fn source(&self) -> &Matrix {
        self.g.matrix()
    }

    pub fn target(&self) -> Matrix {
        self.h.matrix() * self.g.matrix()
    }

    /// `(h^-1, h g)`.
    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { h: self.h.inverse()?, g: GroupElement::from_matrix(self.target())? })
    }
}

/// `(h2, h1 g) . (h1, g) = (h2 h1, g)`.
pub fn compose(e2: &ActionGroupoidElement, e1: &ActionGroupoidElement) -> Result<ActionGroupoidElement> {
    let t1 = e1.target();
    let distance = max_abs_diff(e2.source(), &t1);
    let scale = t1.amax().max(1.0);
    if distance > COMPOSABLE_TOL * scale {
        return Err(Error::NotComposable { distance });
    }
    Ok(ActionGroupoidElement { h: e2.h.mul(&e1.h), g: e1.g.clone() })
}

/// The projection `(h, g) -> h`.
pub fn project_pi(e: &ActionGroupoidElement) -> GroupElement {
    e.h.clone()
}

/// The morphism `H -> G`, the inclusion of matrix groups.
pub fn phi(h: &GroupElement) -> Matrix {
    h.matrix().clone()
}

#[derive(Debug, Clone)]
pub struct RightInvarianceReport {
    /// Largest grid discrepancy between the two sides.
    pub residual: f64,
    pub samples: usize,
}

/// Holonomy of the leafwise path from `base` to `h base`, on the slice
/// `S_base = S_e base`, read in the coordinates of `S_{h base} = S_e h base`.
///
/// The point `exp(c) base` is moved to `k exp(c) base` with `k` near `h` chosen so the
/// image lies on the target slice.
pub fn leaf_holonomy_at(chart: &SliceChart, h: &GroupElement, base: &Matrix, c: &[f64]) -> Result<Vec<f64>> {
    let pair = chart.pair();
    let x = chart.slice_point(c)? * base;
    let target_inv = inverse(&(h.matrix() * base))?;
    let image = |beta: &[f64]| -> Result<Matrix> {
        Ok(mexp(&pair.sub_element(beta))? * h.matrix() * &x * &target_inv)
    };
    let residual = |beta: &[f64]| -> Result<Vec<f64>> { Ok(pair.split_unchecked(&mlog(&image(beta)?)?).0) };
    let sol = newton_solve(residual, Jacobian::default(), &vec![0.0; pair.dim_sub()], NewtonOptions::default())
        .map_err(|e| Error::SlideFailed(e.to_string()))?;
    Ok(pair.split_unchecked(&mlog(&image(&sol.x)?)?).1)
}

/// Compares the holonomy at base point `e` with the right translate by `g` of the
/// holonomy at base point `g`, over the chart's default grid.
pub fn right_invariance_check(chart: &SliceChart, h: &GroupElement, g: &GroupElement) -> Result<RightInvarianceReport> {
    let n = chart.matrix_size();
    let id = Matrix::identity(n, n);
    let grid = chart.default_grid();
    let mut residual: f64 = 0.0;
    for c in &grid {
        let at_unit = leaf_holonomy_at(chart, h, &id, c)?;
        let at_g = leaf_holonomy_at(chart, h, g.matrix(), c)?;
        residual = residual.max(dist(&at_unit, &at_g));
    }
    Ok(RightInvarianceReport { residual, samples: grid.len() })
}
