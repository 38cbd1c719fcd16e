//! Matrix Lie algebras: commutators, bases, structure constants and subspaces.

use crate::error::{Error, Result};
use crate::matrix::{ensure_finite, ensure_square, null_space, pinv, rank, vectorize, Matrix, Vector};

/// Closure tolerance for bracket-closed bases (absolute, on unit-normalized bases).
pub const TOL_CLOSURE: f64 = 1e-9;
/// Jacobi identity tolerance on structure constants.
pub const TOL_JACOBI: f64 = 1e-9;
const TOL_RANK: f64 = 1e-10;

/// Matrix commutator `XY - YX`.
pub fn bracket(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    let n = ensure_square(x, "bracket")?;
    let m = ensure_square(y, "bracket")?;
    if n != m {
        return Err(Error::DimensionMismatch(format!(
            "bracket of {n}x{n} and {m}x{m} matrices"
        )));
    }
    Ok(x * y - y * x)
}

/// `[X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]]` in Frobenius norm.
pub fn jacobiator_norm(x: &Matrix, y: &Matrix, z: &Matrix) -> Result<f64> {
    let j = bracket(x, &bracket(y, z)?)? + bracket(y, &bracket(z, x)?)? + bracket(z, &bracket(x, y)?)?;
    Ok(j.norm())
}

/// Coordinates of the bracket in a basis: `[b_i, b_j] = sum_m c[i][j][m] b_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
    closure_residual: f64,
}

impl StructureConstants {
    /// Builds the tensor from raw data, imposing antisymmetry from the `i < j` entries.
    pub fn from_tensor(tensor: &[Vec<Vec<f64>>]) -> Result<Self> {
        let dim = tensor.len();
        let mut data = vec![0.0; dim * dim * dim];
        for (i, row) in tensor.iter().enumerate() {
            if row.len() != dim || row.iter().any(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch(
                    "structure constant tensor must be k x k x k".into(),
                ));
            }
            for (j, v) in row.iter().enumerate() {
                for (m, &c) in v.iter().enumerate() {
                    if !c.is_finite() {
                        return Err(Error::NonFinite("structure constants"));
                    }
                    if i < j {
                        data[(i * dim + j) * dim + m] = c;
                        data[(j * dim + i) * dim + m] = -c;
                    }
                }
            }
        }
        let sc = Self { dim, data, closure_residual: 0.0 };
        for i in 0..dim {
            for j in 0..dim {
                for m in 0..dim {
                    let given = tensor[i][j][m];
                    if (given - sc.get(i, j, m)).abs() > TOL_JACOBI {
                        return Err(Error::InvalidArgument(format!(
                            "structure constants are not antisymmetric at ({i},{j},{m})"
                        )));
                    }
                }
            }
        }
        let jac = sc.jacobi_residual();
        if jac > TOL_JACOBI {
            return Err(Error::InvalidArgument(format!(
                "structure constants violate the Jacobi identity (residual {jac:.3e})"
            )));
        }
        Ok(sc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, m: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + m]
    }

    /// Largest least-squares residual met while computing the coordinates.
    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    pub fn to_tensor(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| (0..self.dim).map(|m| self.get(i, j, m)).collect())
                    .collect()
            })
            .collect()
    }

    /// Bracket of two coordinate vectors.
    pub fn bracket_coords(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let k = self.dim;
        let mut out = vec![0.0; k];
        for i in 0..k {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..k {
                let w = a[i] * b[j];
                if w == 0.0 {
                    continue;
                }
                for (m, o) in out.iter_mut().enumerate() {
                    *o += w * self.get(i, j, m);
                }
            }
        }
        out
    }

    /// Matrix of `ad_{b_i}` acting on coordinates: column `j` holds `[b_i, b_j]`.
    pub fn ad_matrix(&self, i: usize) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |m, j| self.get(i, j, m))
    }

    /// Max over `i, j, k, l` of the coordinate Jacobiator.
    pub fn jacobi_residual(&self) -> f64 {
        let k = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    for out in 0..k {
                        let mut s = 0.0;
                        for m in 0..k {
                            s += self.get(j, l, m) * self.get(i, m, out)
                                + self.get(l, i, m) * self.get(j, m, out)
                                + self.get(i, j, m) * self.get(l, m, out);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|c[i][j][m] + c[j][i][m]|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let k = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for m in 0..k {
                    worst = worst.max((self.get(i, j, m) + self.get(j, i, m)).abs());
                }
            }
        }
        worst
    }
}

/// Least-squares structure constants of a list of square matrices.
///
/// Fails with [`Error::NotSubalgebra`] when some bracket leaves the span by more
/// than [`TOL_CLOSURE`], measured relative to `|b_i| |b_j|`.
pub fn structure_constants(basis: &[Matrix]) -> Result<StructureConstants> {
    let k = basis.len();
    if k == 0 {
        return Ok(StructureConstants { dim: 0, data: Vec::new(), closure_residual: 0.0 });
    }
    let vecs: Vec<Vector> = basis.iter().map(vectorize).collect();
    let v = Matrix::from_columns(&vecs);
    let coords = pinv(&v);
    let mut data = vec![0.0; k * k * k];
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let br = vectorize(&bracket(&basis[i], &basis[j])?);
            let c = &coords * &br;
            let resid = (&v * &c - &br).norm();
            let scale = (basis[i].norm() * basis[j].norm()).max(f64::MIN_POSITIVE);
            worst = worst.max(resid / scale);
            for m in 0..k {
                data[(i * k + j) * k + m] = c[m];
                data[(j * k + i) * k + m] = -c[m];
            }
        }
    }
    if worst > TOL_CLOSURE {
        return Err(Error::NotSubalgebra { residual: worst, tol: TOL_CLOSURE });
    }
    Ok(StructureConstants { dim: k, data, closure_residual: worst })
}

/// A bracket-closed, linearly independent list of `n x n` matrices.
#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    name: String,
    matrix_size: usize,
    basis: Vec<Matrix>,
    stacked: Matrix,
    coord_map: Matrix,
    constants: StructureConstants,
}

impl LieAlgebraBasis {
    pub fn new(name: impl Into<String>, matrix_size: usize, basis: Vec<Matrix>) -> Result<Self> {
        for b in &basis {
            let n = ensure_square(b, "basis element")?;
            if n != matrix_size {
                return Err(Error::DimensionMismatch(format!(
                    "basis element is {n}x{n}, expected {matrix_size}x{matrix_size}"
                )));
            }
            ensure_finite(b, "basis element")?;
        }
        let vecs: Vec<Vector> = basis.iter().map(vectorize).collect();
        let stacked = if vecs.is_empty() {
            Matrix::zeros(matrix_size * matrix_size, 0)
        } else {
            Matrix::from_columns(&vecs)
        };
        let r = rank(&stacked, TOL_RANK);
        if r < basis.len() {
            return Err(Error::LinearlyDependent { rank: r, expected: basis.len() });
        }
        let constants = structure_constants(&basis)?;
        let coord_map = pinv(&stacked);
        Ok(Self { name: name.into(), matrix_size, basis, stacked, coord_map, constants })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.matrix_size
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.constants
    }

    /// `sum_i coeffs[i] b_i`.
    pub fn element(&self, coeffs: &[f64]) -> Matrix {
        assert_eq!(coeffs.len(), self.dim(), "coefficient count");
        let mut out = Matrix::zeros(self.matrix_size, self.matrix_size);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            if *c != 0.0 {
                out += b * *c;
            }
        }
        out
    }

    /// Least-squares coordinates without a membership check.
    pub fn coords_unchecked(&self, x: &Matrix) -> Vec<f64> {
        (&self.coord_map * vectorize(x)).iter().copied().collect()
    }

    /// Coordinates of `x`; errors when `x` is off the span by more than `tol * max(1, |x|)`.
    pub fn coords(&self, x: &Matrix, tol: f64) -> Result<Vec<f64>> {
        if x.shape() != (self.matrix_size, self.matrix_size) {
            return Err(Error::DimensionMismatch(format!(
                "element is {}x{}, algebra acts on {}x{}",
                x.nrows(),
                x.ncols(),
                self.matrix_size,
                self.matrix_size
            )));
        }
        let v = vectorize(x);
        let c = &self.coord_map * &v;
        let resid = (&self.stacked * &c - &v).norm();
        if resid > tol * x.norm().max(1.0) {
            return Err(Error::NotInSpan { residual: resid });
        }
        Ok(c.iter().copied().collect())
    }

    /// Frobenius Gram matrix of the basis.
    pub fn gram(&self) -> Matrix {
        self.stacked.transpose() * &self.stacked
    }

    /// Sub-basis spanned by the columns of `sub`, as matrices.
    pub fn span_of(&self, name: impl Into<String>, sub: &Subspace) -> Result<LieAlgebraBasis> {
        if sub.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch("subspace ambient dimension".into()));
        }
        let mats = (0..sub.dim())
            .map(|j| {
                let col: Vec<f64> = sub.coeffs().column(j).iter().copied().collect();
                self.element(&col)
            })
            .collect();
        LieAlgebraBasis::new(name, self.matrix_size, mats)
    }
}

/// Subspace of an ambient algebra, columns are coordinates of spanning vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    coeffs: Matrix,
}

impl Subspace {
    pub fn new(coeffs: Matrix) -> Result<Self> {
        ensure_finite(&coeffs, "subspace coefficients")?;
        let r = rank(&coeffs, TOL_RANK);
        if r < coeffs.ncols() {
            return Err(Error::LinearlyDependent { rank: r, expected: coeffs.ncols() });
        }
        Ok(Self { coeffs })
    }

    /// Columns given as coordinate vectors.
    pub fn from_vectors(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!(
                "subspace vectors must have {ambient_dim} coordinates"
            )));
        }
        let m = Matrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
        Self::new(m)
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self { coeffs: Matrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { coeffs: Matrix::identity(ambient_dim, ambient_dim) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.coeffs.column(j).iter().copied().collect())
            .collect()
    }
}

/// Frobenius-orthogonal complement of `sub` inside the span of `ambient`.
///
/// The returned spanning vectors are orthonormal for the Frobenius inner product.
pub fn complement(ambient: &LieAlgebraBasis, sub: &Subspace) -> Result<Subspace> {
    let k = ambient.dim();
    if sub.ambient_dim() != k {
        return Err(Error::DimensionMismatch("subspace ambient dimension".into()));
    }
    let gram = ambient.gram();
    let raw = if sub.dim() == 0 {
        Matrix::identity(k, k)
    } else {
        null_space(&(sub.coeffs().transpose() * &gram), 1e-10)
    };
    // Gram-Schmidt in the Frobenius metric.
    let mut cols: Vec<Vector> = Vec::new();
    for j in 0..raw.ncols() {
        let mut v: Vector = raw.column(j).into();
        for u in &cols {
            let p = (u.transpose() * &gram * &v)[0];
            v -= u * p;
        }
        let nrm = (v.transpose() * &gram * &v)[0].sqrt();
        v /= nrm;
        cols.push(v);
    }
    let coeffs = if cols.is_empty() { Matrix::zeros(k, 0) } else { Matrix::from_columns(&cols) };
    let out = Subspace { coeffs };
    check_direct_sum(sub, &out)?;
    Ok(out)
}

/// Accepts a user-supplied complement when `sub + comp` is a direct sum spanning everything.
pub fn check_complement(ambient: &LieAlgebraBasis, sub: &Subspace, comp: &Subspace) -> Result<()> {
    if sub.ambient_dim() != ambient.dim() || comp.ambient_dim() != ambient.dim() {
        return Err(Error::DimensionMismatch("subspace ambient dimension".into()));
    }
    check_direct_sum(sub, comp)
}

fn check_direct_sum(sub: &Subspace, comp: &Subspace) -> Result<()> {
    let k = sub.ambient_dim();
    let stacked = stack_columns(sub.coeffs(), comp.coeffs());
    let r = rank(&stacked, TOL_RANK);
    if stacked.ncols() != k || r != k {
        return Err(Error::NotTransverse { rank: r, expected: k });
    }
    Ok(())
}

pub(crate) fn stack_columns(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}
