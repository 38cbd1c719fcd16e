//! Regular foliations on boxes in `R^n`: leafwise transport between transverse slices,
//! the variational (linearized) holonomy, and the pair-groupoid picture of the same map.
//!
//! Two model variants are supported. A *spanned* model is given by `k` vector fields
//! whose span is involutive; leaves are `k`-dimensional. An *ode graph* model is given by
//! `y' = f(x, y)`; leaves are graphs of solutions, and field `0` is `(1, f)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::germ::{stencil_inputs, HolonomyMap, Route, Sample};
use crate::matrix::{dist, euclid, inverse, null_space, op_norm, pinv, rank, Matrix, Vector};
use crate::newton::{newton_solve, Jacobian, NewtonOptions};
use crate::ode::{integrate_adaptive, rk4_fixed, IntegratorOptions, DEFAULT_TOL};
use crate::pair::QuotientEndo;

/// Involutivity gate for spanned models.
pub const TOL_INV: f64 = 1e-8;
/// Allowed distance between a path's endpoint and the target slice's base point.
pub const ENDPOINT_TOL: f64 = 1e-8;
/// Half-width of the axis stencil used for the 1-jet of a transport map.
pub const JET_STEP: f64 = 1e-4;
/// Fixed RK4 steps per plaque flow in the slide.
pub const PLAQUE_STEPS: usize = 64;

const RANK_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch(format!("box corners of length {} and {}", lo.len(), hi.len())));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box corner"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] >= hi[i]) {
            return Err(Error::InvalidFoliation(format!("empty box along axis {i}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn diameter(&self) -> f64 {
        let d: Vec<f64> = self.hi.iter().zip(&self.lo).map(|(h, l)| h - l).collect();
        euclid(&d)
    }

    /// Tensor grid with `per_axis` points along each axis, corners included.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let mut pts = vec![Vec::with_capacity(self.dim())];
        for i in 0..self.dim() {
            let ticks: Vec<f64> = (0..per_axis)
                .map(|t| self.lo[i] + (self.hi[i] - self.lo[i]) * t as f64 / (per_axis - 1) as f64)
                .collect();
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    ticks.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts
    }

    fn validation_grid(&self) -> Vec<Vec<f64>> {
        self.grid(if self.dim() <= 3 { 5 } else { 3 })
    }
}

/// A vector-valued expression over `dim` coordinates, with symbolic partials where
/// available.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<Expr>,
    partials: Vec<Vec<Option<Expr>>>,
    dim: usize,
}

impl VectorField {
    pub fn new(components: Vec<Expr>, dim: usize) -> Result<Self> {
        if let Some(v) = components.iter().filter_map(Expr::max_var).max() {
            if v >= dim {
                return Err(Error::DimensionMismatch(format!("variable index {v} in a {dim}-dimensional field")));
            }
        }
        let partials = components.iter().map(|c| (0..dim).map(|j| c.derivative(j)).collect()).collect();
        Ok(Self { components, partials, dim })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(p);
        }
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(p, &mut out);
        out
    }

    /// `d component_i / d p_j`; central differences where no symbolic partial exists.
    pub fn jacobian(&self, p: &[f64]) -> Matrix {
        let mut jac = Matrix::zeros(self.len(), self.dim);
        for (i, row) in self.partials.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                jac[(i, j)] = match d {
                    Some(e) => e.eval(p),
                    None => {
                        let h = FD_STEP * p[j].abs().max(1.0);
                        let mut pp = p.to_vec();
                        pp[j] += h;
                        let up = self.components[i].eval(&pp);
                        pp[j] = p[j] - h;
                        (up - self.components[i].eval(&pp)) / (2.0 * h)
                    }
                };
            }
        }
        jac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Spanned,
    OdeGraph,
}

#[derive(Debug, Clone)]
enum Kind {
    Spanned(Vec<VectorField>),
    OdeGraph(VectorField),
}

#[derive(Debug, Clone)]
pub struct FoliationModel {
    domain: DomainBox,
    kind: Kind,
    involutivity_residual: f64,
}

impl FoliationModel {
    /// Leaves spanned by `fields`, each a list of `n` component expressions.
    pub fn spanned(domain: DomainBox, fields: Vec<Vec<Expr>>) -> Result<Self> {
        Self::spanned_with_tol(domain, fields, TOL_INV)
    }

    pub fn spanned_with_tol(domain: DomainBox, fields: Vec<Vec<Expr>>, tol_inv: f64) -> Result<Self> {
        let n = domain.dim();
        if fields.is_empty() || fields.len() > n {
            return Err(Error::InvalidFoliation(format!("{} fields on a {n}-dimensional box", fields.len())));
        }
        let fields: Vec<VectorField> = fields
            .into_iter()
            .map(|c| {
                if c.len() != n {
                    return Err(Error::DimensionMismatch(format!("field with {} components on R^{n}", c.len())));
                }
                VectorField::new(c, n)
            })
            .collect::<Result<_>>()?;
        let k = fields.len();
        let mut worst: f64 = 0.0;
        for p in domain.validation_grid() {
            let values: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(&p)).collect();
            if values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidFoliation(format!("non-finite field value at {p:?}")));
            }
            let frame = Matrix::from_fn(n, k, |i, j| values[j][i]);
            let r = rank(&frame, RANK_TOL);
            if r < k {
                return Err(Error::InvalidFoliation(format!("fields have rank {r} < {k} at {p:?}")));
            }
            let jacs: Vec<Matrix> = fields.iter().map(|f| f.jacobian(&p)).collect();
            let proj = &frame * pinv(&frame);
            for i in 0..k {
                for j in i + 1..k {
                    let xi = Vector::from_column_slice(&values[i]);
                    let xj = Vector::from_column_slice(&values[j]);
                    let b = &jacs[j] * &xi - &jacs[i] * &xj;
                    let off = (&b - &proj * &b).norm();
                    worst = worst.max(off);
                }
            }
        }
        if !(worst <= tol_inv) {
            return Err(Error::InvalidFoliation(format!(
                "distribution is not involutive: bracket residual {worst:.3e} exceeds {tol_inv:.1e}"
            )));
        }
        Ok(Self { domain, kind: Kind::Spanned(fields), involutivity_residual: worst })
    }

    /// Leaves are graphs of solutions of `y' = f(x, y)`, `y` in `R^(n-1)`.
    pub fn ode_graph(domain: DomainBox, f: Vec<Expr>) -> Result<Self> {
        let n = domain.dim();
        if n < 2 || f.len() != n - 1 {
            return Err(Error::DimensionMismatch(format!("{} right-hand sides on a {n}-dimensional box", f.len())));
        }
        let rhs = VectorField::new(f, n)?;
        for p in domain.validation_grid() {
            let ok = rhs.eval(&p).iter().all(|v| v.is_finite()) && rhs.jacobian(&p).iter().all(|v| v.is_finite());
            if !ok {
                return Err(Error::InvalidFoliation(format!("right-hand side is not finite and smooth at {p:?}")));
            }
        }
        Ok(Self { domain, kind: Kind::OdeGraph(rhs), involutivity_residual: 0.0 })
    }

    pub fn variant(&self) -> Variant {
        match self.kind {
            Kind::Spanned(_) => Variant::Spanned,
            Kind::OdeGraph(_) => Variant::OdeGraph,
        }
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn leaf_dim(&self) -> usize {
        match &self.kind {
            Kind::Spanned(f) => f.len(),
            Kind::OdeGraph(_) => 1,
        }
    }

    pub fn codim(&self) -> usize {
        self.dim() - self.leaf_dim()
    }

    /// Largest bracket residual seen on the validation grid.
    pub fn involutivity_residual(&self) -> f64 {
        self.involutivity_residual
    }

    /// Right-hand side expressions of an ode graph model.
    pub fn graph_rhs(&self) -> Option<&VectorField> {
        match &self.kind {
            Kind::OdeGraph(f) => Some(f),
            Kind::Spanned(_) => None,
        }
    }

    pub fn field_into(&self, i: usize, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Spanned(f) => f[i].eval_into(p, out),
            Kind::OdeGraph(f) => {
                out[0] = 1.0;
                f.eval_into(p, &mut out[1..]);
            }
        }
    }

    pub fn field_jacobian(&self, i: usize, p: &[f64]) -> Matrix {
        match &self.kind {
            Kind::Spanned(f) => f[i].jacobian(p),
            Kind::OdeGraph(f) => {
                let mut jac = Matrix::zeros(self.dim(), self.dim());
                jac.view_mut((1, 0), (self.dim() - 1, self.dim())).copy_from(&f.jacobian(p));
                jac
            }
        }
    }

    /// Columns span the leaf tangent space at `p`.
    pub fn tangent_frame(&self, p: &[f64]) -> Matrix {
        let (n, k) = (self.dim(), self.leaf_dim());
        let mut frame = Matrix::zeros(n, k);
        let mut buf = vec![0.0; n];
        for j in 0..k {
            self.field_into(j, p, &mut buf);
            frame.column_mut(j).copy_from_slice(&buf);
        }
        frame
    }

    fn check_field(&self, i: usize) -> Result<()> {
        if i >= self.leaf_dim() {
            return Err(Error::InvalidArgument(format!("field index {i} out of range for {} fields", self.leaf_dim())));
        }
        Ok(())
    }

    fn outside(&self, chunked: &[f64]) -> Option<Vec<f64>> {
        chunked.chunks(self.dim()).find(|p| !self.domain.contains(p)).map(<[f64]>::to_vec)
    }

    fn graph_outside(&self, x: f64, ys: &[f64]) -> Option<Vec<f64>> {
        ys.chunks(self.dim() - 1).map(|y| graph_point(x, y)).find(|p| !self.domain.contains(p))
    }
}

fn graph_point(x: f64, y: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(y.len() + 1);
    p.push(x);
    p.extend_from_slice(y);
    p
}

/// A path inside a leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafwisePath {
    /// Along the base direction of an ode graph model.
    Interval { x0: f64, x1: f64 },
    /// Successive flows `(field index, time)`, applied left to right.
    FlowWord(Vec<(usize, f64)>),
}

impl LeafwisePath {
    pub fn reversed(&self) -> Self {
        match self {
            LeafwisePath::Interval { x0, x1 } => LeafwisePath::Interval { x0: *x1, x1: *x0 },
            LeafwisePath::FlowWord(w) => LeafwisePath::FlowWord(w.iter().rev().map(|&(i, t)| (i, -t)).collect()),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &LeafwisePath) -> Result<Self> {
        match (self, next) {
            (LeafwisePath::Interval { x0, x1 }, LeafwisePath::Interval { x0: y0, x1: y1 }) => {
                if (x1 - y0).abs() > ENDPOINT_TOL {
                    return Err(Error::EndpointMismatch { distance: (x1 - y0).abs() });
                }
                Ok(LeafwisePath::Interval { x0: *x0, x1: *y1 })
            }
            (LeafwisePath::FlowWord(a), LeafwisePath::FlowWord(b)) => {
                Ok(LeafwisePath::FlowWord(a.iter().chain(b).copied().collect()))
            }
            _ => Err(Error::InvalidArgument("cannot concatenate an interval with a flow word".into())),
        }
    }
}

/// An affine transversal `point + directions * s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseSlice {
    point: Vec<f64>,
    directions: Matrix,
}

impl TransverseSlice {
    pub fn new(point: Vec<f64>, directions: Matrix) -> Result<Self> {
        if directions.nrows() != point.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} x {} directions at a point of R^{}",
                directions.nrows(),
                directions.ncols(),
                point.len()
            )));
        }
        if point.iter().any(|v| !v.is_finite()) || directions.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("slice"));
        }
        let r = rank(&directions, RANK_TOL);
        if r < directions.ncols() {
            return Err(Error::InvalidSlice(format!("directions have rank {r} < {}", directions.ncols())));
        }
        Ok(Self { point, directions })
    }

    /// The slice `x = point[0]` spanned by the `y` axes.
    pub fn vertical(point: Vec<f64>) -> Result<Self> {
        let n = point.len();
        if n < 2 {
            return Err(Error::DimensionMismatch("vertical slice needs at least two coordinates".into()));
        }
        let mut d = Matrix::zeros(n, n - 1);
        for i in 1..n {
            d[(i, i - 1)] = 1.0;
        }
        Self::new(point, d)
    }

    /// The orthogonal complement of the leaf tangent space at `point`.
    pub fn orthogonal(model: &FoliationModel, point: Vec<f64>) -> Result<Self> {
        let frame = model.tangent_frame(&point);
        let d = null_space(&frame.transpose(), RANK_TOL);
        Self::new(point, d)
    }

    /// Same directions through another base point.
    pub fn translated(&self, point: Vec<f64>) -> Result<Self> {
        Self::new(point, self.directions.clone())
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn directions(&self) -> &Matrix {
        &self.directions
    }

    pub fn dim(&self) -> usize {
        self.directions.ncols()
    }

    pub fn at(&self, s: &[f64]) -> Vec<f64> {
        let v = Vector::from_column_slice(&self.point) + &self.directions * Vector::from_column_slice(s);
        v.as_slice().to_vec()
    }

    /// Coordinates of the orthogonal projection of `p` onto the slice.
    pub fn coords_of(&self, p: &[f64]) -> Vec<f64> {
        let diff = Vector::from_column_slice(p) - Vector::from_column_slice(&self.point);
        (pinv(&self.directions) * diff).as_slice().to_vec()
    }

    fn is_vertical(&self) -> bool {
        self.directions.row(0).iter().all(|&v| v == 0.0)
    }

    /// Dimension count, domain membership and the rank of `[tangents | directions]`.
    pub fn check_transverse(&self, model: &FoliationModel) -> Result<()> {
        let n = model.dim();
        if self.point.len() != n {
            return Err(Error::DimensionMismatch(format!("slice in R^{} for a model on R^{n}", self.point.len())));
        }
        if self.dim() != model.codim() {
            return Err(Error::InvalidSlice(format!("slice of dimension {} for codimension {}", self.dim(), model.codim())));
        }
        if !model.domain().contains(&self.point) {
            return Err(Error::InvalidSlice(format!("base point {:?} outside the domain", self.point)));
        }
        let frame = model.tangent_frame(&self.point);
        let mut both = Matrix::zeros(n, n);
        both.columns_mut(0, model.leaf_dim()).copy_from(&frame);
        both.columns_mut(model.leaf_dim(), self.dim()).copy_from(&self.directions);
        let r = rank(&both, RANK_TOL);
        if r < n {
            return Err(Error::NotTransverse { rank: r, expected: n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Absolute and relative tolerance of the adaptive integrator.
    pub tol: f64,
    pub jet_step: f64,
    /// Step cap of the adaptive integrator; `None` means a hundredth of the box diameter.
    pub max_step: Option<f64>,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, jet_step: JET_STEP, max_step: None }
    }
}

impl TransportOptions {
    fn integrator(&self, model: &FoliationModel) -> IntegratorOptions {
        IntegratorOptions::default()
            .with_tol(self.tol)
            .with_max_step(self.max_step.unwrap_or(model.domain().diameter() / 100.0))
    }
}

/// Flows every state through the word as one stacked system, so all of them share the
/// step sequence and the result depends smoothly on the initial point.
fn flow_word_stacked(
    model: &FoliationModel,
    word: &[(usize, f64)],
    states: &[Vec<f64>],
    opts: IntegratorOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = model.dim();
    let mut y: Vec<f64> = states.concat();
    for &(i, t) in word {
        model.check_field(i)?;
        y = integrate_adaptive(
            |_, y, dy| {
                for (p, d) in y.chunks(n).zip(dy.chunks_mut(n)) {
                    model.field_into(i, p, d);
                }
            },
            0.0,
            t,
            &y,
            opts,
            |_, y| model.outside(y),
        )?;
    }
    Ok(y.chunks(n).map(<[f64]>::to_vec).collect())
}

fn graph_stacked(model: &FoliationModel, x0: f64, x1: f64, ys: &[Vec<f64>], opts: IntegratorOptions) -> Result<Vec<Vec<f64>>> {
    let rhs = model.graph_rhs().expect("graph model");
    let m = model.dim() - 1;
    let y = integrate_adaptive(
        |x, y, dy| {
            let mut p = vec![x; m + 1];
            for (yc, dc) in y.chunks(m).zip(dy.chunks_mut(m)) {
                p[1..].copy_from_slice(yc);
                rhs.eval_into(&p, dc);
            }
        },
        x0,
        x1,
        &ys.concat(),
        opts,
        |x, y| model.graph_outside(x, y),
    )?;
    Ok(y.chunks(m).map(<[f64]>::to_vec).collect())
}

/// Runs `run` on all states at once; if some escape the domain, finds them one by one
/// and reruns the survivors together.
fn isolate_escapes<R>(states: &[Vec<f64>], run: R) -> Vec<Result<Vec<f64>>>
where
    R: Fn(&[Vec<f64>]) -> Result<Vec<Vec<f64>>> + Sync,
{
    match run(states) {
        Ok(out) => out.into_iter().map(Ok).collect(),
        Err(Error::Escaped { .. }) if states.len() > 1 => {
            let mut out: Vec<Result<Vec<f64>>> = states
                .par_iter()
                .map(|s| run(std::slice::from_ref(s)).map(|mut v| v.remove(0)))
                .collect();
            let good: Vec<usize> = (0..states.len()).filter(|&i| out[i].is_ok()).collect();
            if !good.is_empty() {
                let survivors: Vec<Vec<f64>> = good.iter().map(|&i| states[i].clone()).collect();
                match run(&survivors) {
                    Ok(joint) => {
                        for (&i, v) in good.iter().zip(joint) {
                            out[i] = Ok(v);
                        }
                    }
                    Err(e) => {
                        for &i in &good {
                            out[i] = Err(e.clone());
                        }
                    }
                }
            }
            out
        }
        Err(e) => states.iter().map(|_| Err(e.clone())).collect(),
    }
}

/// Endpoint of the path started at `p0`.
pub fn path_endpoint(model: &FoliationModel, path: &LeafwisePath, p0: &[f64], opts: TransportOptions) -> Result<Vec<f64>> {
    let iopts = opts.integrator(model);
    match path {
        LeafwisePath::Interval { x0, x1 } => {
            if model.variant() != Variant::OdeGraph {
                return Err(Error::InvalidArgument("interval paths need an ode_graph model".into()));
            }
            if (p0[0] - x0).abs() > ENDPOINT_TOL {
                return Err(Error::EndpointMismatch { distance: (p0[0] - x0).abs() });
            }
            let y = graph_stacked(model, *x0, *x1, &[p0[1..].to_vec()], iopts)?;
            Ok(graph_point(*x1, &y[0]))
        }
        LeafwisePath::FlowWord(w) => Ok(flow_word_stacked(model, w, &[p0.to_vec()], iopts)?.remove(0)),
    }
}

fn check_endpoints(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    opts: TransportOptions,
) -> Result<()> {
    slice0.check_transverse(model)?;
    slice1.check_transverse(model)?;
    let end = path_endpoint(model, path, slice0.point(), opts)?;
    let d = dist(&end, slice1.point());
    if d > ENDPOINT_TOL * euclid(&end).max(1.0) {
        return Err(Error::EndpointMismatch { distance: d });
    }
    if let LeafwisePath::Interval { .. } = path {
        if !slice0.is_vertical() || !slice1.is_vertical() {
            return Err(Error::InvalidSlice("interval paths need vertical slices".into()));
        }
    }
    Ok(())
}

/// Slices through `base` and through the endpoint of `path`.
///
/// For interval paths `base` holds the `y` coordinates at `x0` and the slices are
/// vertical; otherwise `base` is a full point and the slices are orthogonal to the leaf.
pub fn default_slices(
    model: &FoliationModel,
    path: &LeafwisePath,
    base: &[f64],
    opts: TransportOptions,
) -> Result<(TransverseSlice, TransverseSlice)> {
    match path {
        LeafwisePath::Interval { x0, .. } => {
            let p0 = graph_point(*x0, base);
            let end = path_endpoint(model, path, &p0, opts)?;
            Ok((TransverseSlice::vertical(p0)?, TransverseSlice::vertical(end)?))
        }
        LeafwisePath::FlowWord(_) => {
            let end = path_endpoint(model, path, base, opts)?;
            Ok((TransverseSlice::orthogonal(model, base.to_vec())?, TransverseSlice::orthogonal(model, end)?))
        }
    }
}

/// Moves `q` inside its plaque until it lies on `slice`, and returns the slice coordinates.
///
/// The plaque is parametrized by `u -> phi_{u_k X_k} o ... o phi_{u_1 X_1}(q)`; Newton
/// drives the component of `plaque(u) - point` normal to the slice to zero.
pub fn slide_onto(model: &FoliationModel, slice: &TransverseSlice, q: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (model.dim(), model.leaf_dim());
    let p1 = Vector::from_column_slice(slice.point());
    let normal = null_space(&slice.directions().transpose(), RANK_TOL);
    let plaque = |u: &[f64]| -> Vec<f64> {
        let mut y = q.to_vec();
        for (j, &uj) in u.iter().enumerate() {
            if uj == 0.0 {
                continue;
            }
            y = rk4_fixed(
                |_, y, dy| {
                    model.field_into(j, y, dy);
                    dy.iter_mut().for_each(|d| *d *= uj);
                },
                0.0,
                1.0,
                &y,
                PLAQUE_STEPS,
            );
        }
        y
    };
    let residual = |u: &[f64]| -> Result<Vec<f64>> {
        let r = normal.transpose() * (Vector::from_column_slice(&plaque(u)) - &p1);
        Ok(r.as_slice().to_vec())
    };
    let mut both = Matrix::zeros(n, n);
    both.columns_mut(0, k).copy_from(&model.tangent_frame(slice.point()));
    both.columns_mut(k, n - k).copy_from(slice.directions());
    let guess = inverse(&both)? * (Vector::from_column_slice(q) - &p1);
    let sol = newton_solve(residual, Jacobian::default(), &guess.as_slice()[..k], NewtonOptions::default())
        .map_err(|e| Error::SlideFailed(e.to_string()))?;
    let landed = plaque(&sol.x);
    if !model.domain().contains(&landed) {
        return Err(Error::Escaped { location: landed, time: 0.0 });
    }
    Ok(slice.coords_of(&landed))
}

/// Images of slice coordinates `inputs` on `slice0` in the coordinates of `slice1`.
pub fn transport_points(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    inputs: &[Vec<f64>],
    opts: TransportOptions,
) -> Result<Vec<Result<Vec<f64>>>> {
    check_endpoints(model, path, slice0, slice1, opts)?;
    let iopts = opts.integrator(model);
    match path {
        LeafwisePath::Interval { x0, x1 } => {
            let ys: Vec<Vec<f64>> = inputs.iter().map(|s| slice0.at(s)[1..].to_vec()).collect();
            let d1 = slice1.directions().rows(1, model.dim() - 1).into_owned();
            let d1_inv = inverse(&d1)?;
            let y1 = Vector::from_column_slice(&slice1.point()[1..]);
            Ok(isolate_escapes(&ys, |c| graph_stacked(model, *x0, *x1, c, iopts))
                .into_iter()
                .map(|r| r.map(|y| (&d1_inv * (Vector::from(y) - &y1)).as_slice().to_vec()))
                .collect())
        }
        LeafwisePath::FlowWord(w) => {
            let qs: Vec<Vec<f64>> = inputs.iter().map(|s| slice0.at(s)).collect();
            let flowed = isolate_escapes(&qs, |c| flow_word_stacked(model, w, c, iopts));
            Ok(flowed.into_par_iter().map(|r| r.and_then(|q| slide_onto(model, slice1, &q))).collect())
        }
    }
}

fn describe(path: &LeafwisePath) -> String {
    match path {
        LeafwisePath::Interval { x0, x1 } => format!("interval {x0} -> {x1}"),
        LeafwisePath::FlowWord(w) => {
            let parts: Vec<String> = w.iter().map(|(i, t)| format!("X{i}*{t}")).collect();
            format!("flow word [{}]", parts.join(", "))
        }
    }
}

/// Holonomy along `path` from `slice0` to `slice1`, tabulated on `samples` plus a jet stencil.
pub fn holonomy_transport(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    samples: &[Vec<f64>],
    opts: TransportOptions,
) -> Result<HolonomyMap> {
    let q = slice0.dim();
    let inputs = stencil_inputs(q, samples, opts.jet_step);
    let outputs = transport_points(model, path, slice0, slice1, &inputs, opts)?;
    let samples = inputs.into_iter().zip(outputs).map(|(input, output)| Sample { input, output }).collect();
    HolonomyMap::from_samples(Route::LeafFlow, describe(path), q, samples)
}

/// Linear holonomy by integrating the variational equation along the base leaf.
pub fn linear_holonomy_variational(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    opts: TransportOptions,
) -> Result<QuotientEndo> {
    check_endpoints(model, path, slice0, slice1, opts)?;
    let iopts = opts.integrator(model);
    let n = model.dim();
    match path {
        LeafwisePath::Interval { x0, x1 } => {
            let m = n - 1;
            let rhs = model.graph_rhs().expect("graph model");
            let mut state = slice0.point()[1..].to_vec();
            state.extend(Matrix::identity(m, m).iter());
            let out = integrate_adaptive(
                |x, s, ds| {
                    let p = graph_point(x, &s[..m]);
                    rhs.eval_into(&p, &mut ds[..m]);
                    let fy = rhs.jacobian(&p).columns(1, m).into_owned();
                    let v = Matrix::from_column_slice(m, m, &s[m..]);
                    ds[m..].copy_from_slice((fy * v).as_slice());
                },
                *x0,
                *x1,
                &state,
                iopts,
                |x, s| {
                    let p = graph_point(x, &s[..m]);
                    (!model.domain().contains(&p)).then_some(p)
                },
            )?;
            let v = Matrix::from_column_slice(m, m, &out[m..]);
            let d0 = slice0.directions().rows(1, m).into_owned();
            let d1 = slice1.directions().rows(1, m).into_owned();
            Ok(QuotientEndo(inverse(&d1)? * v * d0))
        }
        LeafwisePath::FlowWord(w) => {
            let mut state = slice0.point().to_vec();
            state.extend(Matrix::identity(n, n).iter());
            for &(i, t) in w {
                model.check_field(i)?;
                state = integrate_adaptive(
                    |_, s, ds| {
                        model.field_into(i, &s[..n], &mut ds[..n]);
                        let v = Matrix::from_column_slice(n, n, &s[n..]);
                        ds[n..].copy_from_slice((model.field_jacobian(i, &s[..n]) * v).as_slice());
                    },
                    0.0,
                    t,
                    &state,
                    iopts,
                    |_, s| (!model.domain().contains(&s[..n])).then(|| s[..n].to_vec()),
                )?;
            }
            let v = Matrix::from_column_slice(n, n, &state[n..]);
            let k = model.leaf_dim();
            let mut both = Matrix::zeros(n, n);
            both.columns_mut(0, k).copy_from(&model.tangent_frame(slice1.point()));
            both.columns_mut(k, n - k).copy_from(slice1.directions());
            let z = inverse(&both)? * v * slice0.directions();
            Ok(QuotientEndo(z.rows(k, n - k).into_owned()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct BottTransportReport {
    /// Operator-norm distance between the two linear parts.
    pub residual: f64,
    pub transport: QuotientEndo,
    pub variational: QuotientEndo,
}

/// Compares the 1-jet of the transport map with the variational transport.
pub fn bott_transport_check(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    opts: TransportOptions,
) -> Result<BottTransportReport> {
    let map = holonomy_transport(model, path, slice0, slice1, &[], opts)?;
    let variational = linear_holonomy_variational(model, path, slice0, slice1, opts)?;
    let transport = map.linear_part().clone();
    let residual = op_norm(&(&transport.0 - &variational.0));
    Ok(BottTransportReport { residual, transport, variational })
}

#[derive(Debug, Clone)]
pub struct PairDemoReport {
    /// Largest pointwise distance between the direct transport and the source-fiber route.
    pub max_deviation: f64,
    /// Largest distance from a sample to its image under forward then reversed transport.
    pub reversal_residual: f64,
    pub direct: HolonomyMap,
    pub fiber: HolonomyMap,
}

/// Recomputes the holonomy of an ode graph model in the pair groupoid `M x M`.
///
/// The source fiber over the base point `x` is `M x {x}`; the lifted foliation restricted
/// to it is spanned by `(1, f)`. Points of `S_x x {x}` are flowed there and slid onto
/// `S_y x {x}`, then right-translated by `(y, x)^-1` into `S_y x {y}`.
pub fn pair_groupoid_demo(
    model: &FoliationModel,
    path: &LeafwisePath,
    slice0: &TransverseSlice,
    slice1: &TransverseSlice,
    samples: &[Vec<f64>],
    opts: TransportOptions,
) -> Result<PairDemoReport> {
    let rhs = model
        .graph_rhs()
        .ok_or_else(|| Error::InvalidArgument("the pair groupoid demo needs an ode_graph model".into()))?;
    let word = match path {
        LeafwisePath::Interval { x0, x1 } => vec![(0, x1 - x0)],
        LeafwisePath::FlowWord(w) => w.clone(),
    };
    let n = model.dim();
    let direct = holonomy_transport(model, path, slice0, slice1, samples, opts)?;

    let mut lifted_field = vec![Expr::Num(1.0)];
    lifted_field.extend(rhs.components().iter().cloned());
    let fiber_model = FoliationModel::spanned(model.domain().clone(), vec![lifted_field])?;
    let (x, y) = (slice0.point().to_vec(), slice1.point().to_vec());
    let embed = |a: &[f64], over: &[f64]| -> Vec<f64> { a.iter().chain(over).copied().collect() };
    let restrict = |pair: &[f64], over: &[f64]| -> Result<Vec<f64>> {
        let d = dist(&pair[n..], over);
        if d > 0.0 {
            return Err(Error::NotComposable { distance: d });
        }
        Ok(pair[..n].to_vec())
    };
    let fiber_word = LeafwisePath::FlowWord(word);
    let inputs: Vec<Vec<f64>> = direct.samples().iter().map(|s| s.input.clone()).collect();
    let iopts = opts.integrator(&fiber_model);
    let arrows: Vec<Vec<f64>> = inputs.iter().map(|s| embed(&slice0.at(s), &x)).collect();
    let in_fiber: Vec<Vec<f64>> = arrows.iter().map(|g| restrict(g, &x)).collect::<Result<_>>()?;
    let fiber_slice = slice1.translated(y.clone())?;
    check_endpoints(&fiber_model, &fiber_word, slice0, &fiber_slice, opts)?;
    let LeafwisePath::FlowWord(w) = &fiber_word else { unreachable!() };
    let flowed = isolate_escapes(&in_fiber, |c| flow_word_stacked(&fiber_model, w, c, iopts));
    let fiber_samples: Vec<Sample> = inputs
        .iter()
        .zip(flowed)
        .map(|(input, r)| {
            let output = r.and_then(|q| {
                let s = slide_onto(&fiber_model, &fiber_slice, &q)?;
                let over_x = embed(&fiber_slice.at(&s), &x);
                // Right translation by (y, x)^-1 sends (a, x) to (a, y).
                let over_y = embed(&restrict(&over_x, &x)?, &y);
                Ok(slice1.coords_of(&restrict(&over_y, &y)?))
            });
            Sample { input: input.clone(), output }
        })
        .collect();
    let fiber = HolonomyMap::from_samples(Route::PairGroupoid, format!("source fiber, {}", describe(path)), slice0.dim(), fiber_samples)?;

    let forward: Vec<Vec<f64>> = direct
        .samples()
        .iter()
        .map(|s| s.output.clone())
        .collect::<Result<_>>()?;
    let back = transport_points(model, &path.reversed(), slice1, slice0, &forward, opts)?;
    let mut reversal_residual: f64 = 0.0;
    for (s, b) in inputs.iter().zip(back) {
        reversal_residual = reversal_residual.max(dist(&b?, s));
    }
    Ok(PairDemoReport { max_deviation: direct.max_deviation(&fiber), reversal_residual, direct, fiber })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::germ::nine_point_grid;

    fn graph(f: &str) -> FoliationModel {
        let domain = DomainBox::new(vec![-4.0, -2.0], vec![4.0, 2.0]).unwrap();
        FoliationModel::ode_graph(domain, vec![parse_expression(f, 2).unwrap()]).unwrap()
    }

    fn spanned(fields: &[&[&str]], lo: f64, hi: f64) -> Result<FoliationModel> {
        let n = fields[0].len();
        let domain = DomainBox::new(vec![lo; n], vec![hi; n]).unwrap();
        let exprs = fields.iter().map(|f| f.iter().map(|c| parse_expression(c, n).unwrap()).collect()).collect();
        FoliationModel::spanned(domain, exprs)
    }

    fn transport(model: &FoliationModel, path: &LeafwisePath, base: &[f64]) -> HolonomyMap {
        let opts = TransportOptions::default();
        let (s0, s1) = default_slices(model, path, base, opts).unwrap();
        holonomy_transport(model, path, &s0, &s1, &nine_point_grid(s0.dim(), 0.3), opts).unwrap()
    }

    #[test]
    fn box_grid_and_membership() {
        let b = DomainBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.grid(3).len(), 9);
        assert!(b.contains(&[0.5, 1.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        assert!(DomainBox::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn trivial_graph_is_identity() {
        let m = transport(&graph("0"), &LeafwisePath::Interval { x0: 0.0, x1: 1.0 }, &[0.0]);
        assert_eq!(m.max_displacement(), 0.0);
        assert!(m.linear_part().distance(&QuotientEndo::identity(1)) < 1e-12);
    }

    #[test]
    fn linear_graph_scales_by_e() {
        let m = transport(&graph("y"), &LeafwisePath::Interval { x0: 0.0, x1: 1.0 }, &[0.0]);
        for s in m.samples() {
            let out = s.output.as_ref().unwrap()[0];
            assert!((out - std::f64::consts::E * s.input[0]).abs() < 1e-8);
        }
        assert!((m.linear_part().0[(0, 0)] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn riccati_closed_form() {
        let m = transport(&graph("y^2"), &LeafwisePath::Interval { x0: 0.0, x1: 1.0 }, &[0.0]);
        for s in m.samples() {
            let y = s.input[0];
            assert!((s.output.as_ref().unwrap()[0] - y / (1.0 - y)).abs() < 1e-8, "{y}");
        }
        assert!((m.linear_part().0[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn variational_sin() {
        let model = graph("sin(x)*y");
        let path = LeafwisePath::Interval { x0: 0.0, x1: std::f64::consts::PI };
        let opts = TransportOptions::default();
        let (s0, s1) = default_slices(&model, &path, &[0.0], opts).unwrap();
        let v = linear_holonomy_variational(&model, &path, &s0, &s1, opts).unwrap();
        assert!((v.0[(0, 0)] - 2f64.exp()).abs() < 1e-7);
        let rep = bott_transport_check(&model, &path, &s0, &s1, opts).unwrap();
        assert!(rep.residual < 1e-6, "{}", rep.residual);
    }

    #[test]
    fn concatenation_law() {
        let model = graph("sin(x)*y + 0.5*y^2");
        let opts = TransportOptions::default();
        let a = LeafwisePath::Interval { x0: 0.0, x1: 0.6 };
        let b = LeafwisePath::Interval { x0: 0.6, x1: 1.3 };
        let ab = a.then(&b).unwrap();
        let (s0, s_mid) = default_slices(&model, &a, &[0.1], opts).unwrap();
        let (_, s1) = default_slices(&model, &ab, &[0.1], opts).unwrap();
        let grid = nine_point_grid(1, 0.2);
        let first = transport_points(&model, &a, &s0, &s_mid, &grid, opts).unwrap();
        let mid: Vec<Vec<f64>> = first.into_iter().map(|r| r.unwrap()).collect();
        let second = transport_points(&model, &b, &s_mid, &s1, &mid, opts).unwrap();
        let whole = transport_points(&model, &ab, &s0, &s1, &grid, opts).unwrap();
        for (x, y) in second.iter().zip(&whole) {
            assert!(dist(x.as_ref().unwrap(), y.as_ref().unwrap()) < 1e-8);
        }
    }

    #[test]
    fn base_only_dependence_is_trivial() {
        let m = transport(&graph("cos(x) + x"), &LeafwisePath::Interval { x0: 0.0, x1: 1.0 }, &[0.0]);
        assert!(m.linear_part().distance(&QuotientEndo::identity(1)) < 1e-8);
        assert!(m.max_displacement() < 1e-8);
    }

    #[test]
    fn endpoint_mismatch_rejected() {
        let model = graph("y");
        let path = LeafwisePath::Interval { x0: 0.0, x1: 1.0 };
        let s0 = TransverseSlice::vertical(vec![0.0, 0.1]).unwrap();
        let s1 = TransverseSlice::vertical(vec![1.0, 0.1]).unwrap();
        let r = holonomy_transport(&model, &path, &s0, &s1, &[], TransportOptions::default());
        assert!(matches!(r, Err(Error::EndpointMismatch { .. })));
    }

    #[test]
    fn escape_is_per_sample() {
        // y' = y^2 from y = 0.9 blows up before x = 1.2 and leaves |y| <= 2 earlier.
        let model = graph("y^2");
        let path = LeafwisePath::Interval { x0: 0.0, x1: 1.0 };
        let opts = TransportOptions::default();
        let (s0, s1) = default_slices(&model, &path, &[0.0], opts).unwrap();
        let out = transport_points(&model, &path, &s0, &s1, &[vec![0.1], vec![0.9]], opts).unwrap();
        assert!((out[0].as_ref().unwrap()[0] - 0.1 / 0.9).abs() < 1e-8);
        assert!(matches!(&out[1], Err(Error::Escaped { location, .. }) if location[1] > 2.0));
    }

    #[test]
    fn non_involutive_rejected() {
        // span{d/dx, d/dy + x d/dz} is the standard contact distribution.
        let r = spanned(&[&["1", "0", "0"], &["0", "1", "x"]], -1.0, 1.0);
        assert!(matches!(r, Err(Error::InvalidFoliation(_))));
    }

    #[test]
    fn dependent_fields_rejected() {
        let r = spanned(&[&["1", "0", "0"], &["2", "0", "0"]], -1.0, 1.0);
        assert!(matches!(r, Err(Error::InvalidFoliation(_))));
    }

    #[test]
    fn product_foliation_depends_on_endpoints_only() {
        // Leaves z = const, tilted slices on both ends.
        let model = spanned(&[&["1", "0", "0"], &["0", "1", "0"]], -2.0, 2.0).unwrap();
        let opts = TransportOptions::default();
        let p0 = vec![0.0, 0.0, 0.0];
        let d0 = crate::matrix::from_rows(&[&[0.3], &[-0.2], &[1.0]]);
        let d1 = crate::matrix::from_rows(&[&[-0.4], &[0.1], &[2.0]]);
        let w1 = LeafwisePath::FlowWord(vec![(0, 0.7), (1, -0.4)]);
        let w2 = LeafwisePath::FlowWord(vec![(1, -0.2), (0, 0.7), (1, -0.2)]);
        let s0 = TransverseSlice::new(p0.clone(), d0).unwrap();
        let end = path_endpoint(&model, &w1, &p0, opts).unwrap();
        let s1 = TransverseSlice::new(end, d1).unwrap();
        let grid = nine_point_grid(1, 0.3);
        let a = holonomy_transport(&model, &w1, &s0, &s1, &grid, opts).unwrap();
        let b = holonomy_transport(&model, &w2, &s0, &s1, &grid, opts).unwrap();
        assert!(a.max_deviation(&b) < 1e-6);
        for s in a.samples() {
            assert!((s.output.as_ref().unwrap()[0] - s.input[0] / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spanned_exponential_holonomy() {
        // Leaves of span{d/dx + z d/dz, d/dy} are z = c e^x.
        let model = spanned(&[&["1", "0", "y2"], &["0", "1", "0"]], -2.0, 2.0).unwrap();
        let path = LeafwisePath::FlowWord(vec![(0, 1.0), (1, 0.5)]);
        let opts = TransportOptions::default();
        let (s0, s1) = default_slices(&model, &path, &[0.0, 0.0, 0.1], opts).unwrap();
        let m = holonomy_transport(&model, &path, &s0, &s1, &nine_point_grid(1, 0.05), opts).unwrap();
        let rep = bott_transport_check(&model, &path, &s0, &s1, opts).unwrap();
        assert!(rep.residual < 1e-6, "{}", rep.residual);
        // Orthogonal slices are not z-lines, so compare the scalar factor only.
        assert!(m.linear_part().0[(0, 0)] > 1.0);
    }

    #[test]
    fn tolerance_tightening_reduces_residual() {
        // Without the step cap the integration error dominates down to the jet floor.
        let model = graph("sin(x)*y + 0.5*y^2");
        let path = LeafwisePath::Interval { x0: 0.0, x1: 2.0 };
        let mut last = f64::INFINITY;
        for e in 3..12 {
            let opts = TransportOptions { tol: 10f64.powi(-e), max_step: Some(f64::INFINITY), ..TransportOptions::default() };
            let (s0, s1) = default_slices(&model, &path, &[0.2], opts).unwrap();
            let r = bott_transport_check(&model, &path, &s0, &s1, opts).unwrap().residual;
            assert!(r <= last || r < 1e-9, "tol 1e-{e}: {r:e} after {last:e}");
            last = r;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn pair_groupoid_agrees() {
        for f in ["0", "y", "sin(x)*y"] {
            let model = graph(f);
            let path = LeafwisePath::Interval { x0: 0.0, x1: 1.0 };
            let opts = TransportOptions::default();
            let (s0, s1) = default_slices(&model, &path, &[0.0], opts).unwrap();
            let rep = pair_groupoid_demo(&model, &path, &s0, &s1, &nine_point_grid(1, 0.3), opts).unwrap();
            assert!(rep.max_deviation <= 1e-9, "{f}: {}", rep.max_deviation);
            assert!(rep.reversal_residual <= 1e-8, "{f}: {}", rep.reversal_residual);
        }
    }
}
