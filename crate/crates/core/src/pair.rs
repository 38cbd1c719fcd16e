//! A Lie algebra with a subalgebra and a chosen complement, and the Bott
//! representation of the subalgebra on the quotient.
//!
//! The quotient `g/h` is represented on the complement `C`: an endomorphism of
//! the quotient is a matrix acting on `C`-coordinates, and the class of `a` is
//! the `C`-component of `a` in the splitting `g = h (+) C`.

use crate::algebra::{bracket, check_complement, complement, stack_columns, LieAlgebraBasis, Subspace, TOL_CLOSURE};
use crate::error::{Error, Result};
use crate::expm::mexp;
use crate::matrix::{op_norm, Matrix, Vector};

const MEMBERSHIP_TOL: f64 = 1e-9;

/// Linear endomorphism of the quotient, in the basis of the complement.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientEndo(pub Matrix);

impl QuotientEndo {
    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn compose(&self, rhs: &QuotientEndo) -> QuotientEndo {
        QuotientEndo(&self.0 * &rhs.0)
    }

    pub fn commutator(&self, rhs: &QuotientEndo) -> QuotientEndo {
        QuotientEndo(&self.0 * &rhs.0 - &rhs.0 * &self.0)
    }

    /// Operator-norm distance.
    pub fn distance(&self, rhs: &QuotientEndo) -> f64 {
        op_norm(&(&self.0 - &rhs.0))
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.0)
    }

    pub fn scale(&self, s: f64) -> QuotientEndo {
        QuotientEndo(&self.0 * s)
    }
}

/// Ideal test result. `residual` is the largest complement component of `[g_i, h_j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealReport {
    pub is_ideal: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LiePair {
    ambient: LieAlgebraBasis,
    sub: Subspace,
    sub_basis: LieAlgebraBasis,
    comp: Subspace,
    comp_basis: Vec<Matrix>,
    split_inv: Matrix,
}

impl LiePair {
    /// Pair with the Frobenius-orthogonal complement.
    pub fn new(ambient: LieAlgebraBasis, sub: Subspace) -> Result<Self> {
        let comp = complement(&ambient, &sub)?;
        Self::with_complement(ambient, sub, comp)
    }

    pub fn with_complement(ambient: LieAlgebraBasis, sub: Subspace, comp: Subspace) -> Result<Self> {
        check_complement(&ambient, &sub, &comp)?;
        let sub_basis = ambient.span_of(format!("{}:sub", ambient.name()), &sub)?;
        let comp_basis = comp
            .vectors()
            .iter()
            .map(|v| ambient.element(v))
            .collect();
        let split = stack_columns(sub.coeffs(), comp.coeffs());
        let split_inv = split
            .try_inverse()
            .ok_or(Error::NotTransverse { rank: 0, expected: ambient.dim() })?;
        Ok(Self { ambient, sub, sub_basis, comp, comp_basis, split_inv })
    }

    pub fn ambient(&self) -> &LieAlgebraBasis {
        &self.ambient
    }

    pub fn sub(&self) -> &Subspace {
        &self.sub
    }

    /// The subalgebra as matrices.
    pub fn sub_basis(&self) -> &LieAlgebraBasis {
        &self.sub_basis
    }

    pub fn comp(&self) -> &Subspace {
        &self.comp
    }

    pub fn comp_basis(&self) -> &[Matrix] {
        &self.comp_basis
    }

    pub fn dim_sub(&self) -> usize {
        self.sub.dim()
    }

    pub fn dim_comp(&self) -> usize {
        self.comp.dim()
    }

    pub fn matrix_size(&self) -> usize {
        self.ambient.matrix_size()
    }

    pub fn sub_element(&self, coords: &[f64]) -> Matrix {
        self.sub_basis.element(coords)
    }

    pub fn comp_element(&self, coords: &[f64]) -> Matrix {
        assert_eq!(coords.len(), self.dim_comp(), "complement coordinate count");
        let n = self.matrix_size();
        let mut out = Matrix::zeros(n, n);
        for (c, b) in coords.iter().zip(&self.comp_basis) {
            if *c != 0.0 {
                out += b * *c;
            }
        }
        out
    }

    /// Splits an element of the ambient algebra into `(h, C)` coordinates.
    pub fn split(&self, x: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let coords = self.ambient.coords(x, MEMBERSHIP_TOL)?;
        Ok(self.split_coords(&coords))
    }

    /// Same as [`LiePair::split`] without the span check.
    pub fn split_unchecked(&self, x: &Matrix) -> (Vec<f64>, Vec<f64>) {
        self.split_coords(&self.ambient.coords_unchecked(x))
    }

    fn split_coords(&self, coords: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = &self.split_inv * Vector::from_column_slice(coords);
        let m = self.dim_sub();
        (v.rows(0, m).iter().copied().collect(), v.rows(m, v.len() - m).iter().copied().collect())
    }

    pub fn proj_sub(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.sub_element(&self.split(x)?.0))
    }

    pub fn proj_comp(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.comp_element(&self.split(x)?.1))
    }

    /// Coordinates of `b` in the subalgebra basis, rejecting elements outside it.
    pub fn sub_coords(&self, b: &Matrix) -> Result<Vec<f64>> {
        let (h, c) = self.split(b)?;
        let off = self.comp_element(&c).norm();
        if off > MEMBERSHIP_TOL * b.norm().max(1.0) {
            return Err(Error::NotInSubalgebra { residual: off });
        }
        Ok(h)
    }

    fn induced(&self, f: impl Fn(&Matrix) -> Result<Matrix>) -> Result<QuotientEndo> {
        let d = self.dim_comp();
        let mut out = Matrix::zeros(d, d);
        for (j, c) in self.comp_basis.iter().enumerate() {
            let (_, cc) = self.split_unchecked(&f(c)?);
            for i in 0..d {
                out[(i, j)] = cc[i];
            }
        }
        Ok(QuotientEndo(out))
    }

    /// Bott connection `a mod h -> [b, a] mod h` for `b` in the subalgebra.
    pub fn bott(&self, b: &Matrix) -> Result<QuotientEndo> {
        self.sub_coords(b)?;
        self.induced(|c| bracket(b, c))
    }

    /// Flatness defect `|bott([b1,b2]) - [bott(b1), bott(b2)]|` in operator norm.
    pub fn bott_flatness_residual(&self, b1: &Matrix, b2: &Matrix) -> Result<f64> {
        let lhs = self.bott(&bracket(b1, b2)?)?;
        let rhs = self.bott(b1)?.commutator(&self.bott(b2)?);
        Ok(lhs.distance(&rhs))
    }

    /// Map induced on the quotient by `Ad(exp(eps b))`, computed by conjugation.
    pub fn exp_ad_rep(&self, b: &Matrix, eps: f64) -> Result<QuotientEndo> {
        self.sub_coords(b)?;
        let g = mexp(&(b * eps))?;
        let g_inv = mexp(&(b * -eps))?;
        self.induced(|c| Ok(&g * c * &g_inv))
    }

    /// Central difference of [`LiePair::exp_ad_rep`] at zero with step `eps`.
    pub fn differentiate_rep(&self, b: &Matrix, eps: f64) -> Result<QuotientEndo> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {eps}")));
        }
        let plus = self.exp_ad_rep(b, eps)?;
        let minus = self.exp_ad_rep(b, -eps)?;
        Ok(QuotientEndo((plus.0 - minus.0) / (2.0 * eps)))
    }

    /// Whether the subalgebra is an ideal: all `[g_i, h_j]` have no complement component.
    pub fn is_ideal(&self) -> IdealReport {
        let mut worst: f64 = 0.0;
        for g in self.ambient.basis() {
            for h in self.sub_basis.basis() {
                let br = g * h - h * g;
                let (_, c) = self.split_unchecked(&br);
                worst = worst.max(self.comp_element(&c).norm());
            }
        }
        IdealReport { is_ideal: worst <= TOL_CLOSURE, residual: worst }
    }
}
