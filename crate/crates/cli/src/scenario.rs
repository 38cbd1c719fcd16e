//! Scenario files: the JSON description of a Lie pair or a foliation, and its
//! translation into core objects.
//!
//! Matrices are row-major nested arrays. Subspaces are lists of coordinate vectors in the
//! ambient basis. Expressions use the variables `x, y1, .., y{n-1}` (`y` when `n = 2`).

use std::path::Path;

use holab_core::algebra::check_complement;
use holab_core::foliation::{default_slices, TransverseSlice};
use holab_core::matrix::{rank, try_from_nested, vectorize};
use holab_core::{
    parse_expression, DomainBox, Expr, FoliationModel, LeafwisePath, LieAlgebraBasis, LiePair, Matrix, SliceChart,
    StructureConstants, Subspace, TransportOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scenario rejected before any computation; maps to exit code 2.
#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {file}: {message}")]
    Io { file: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl ToString) -> SchemaError {
    SchemaError::Invalid { path: path.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    LiePair(LiePairScenario),
    Foliation(FoliationScenario),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::LiePair(s) => &s.name,
            Scenario::Foliation(s) => &s.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::LiePair(_) => "lie_pair",
            Scenario::Foliation(_) => "foliation",
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        serde_json::from_str(text)
            .map_err(|e| invalid(format!("line {}, column {}", e.line(), e.column()), e))
    }

    pub fn load(file: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| SchemaError::Io { file: file.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text).map_err(|e| match e {
            SchemaError::Invalid { path, message } => invalid(format!("{}: {path}", file.display()), message),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// How the ambient algebra is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraSpec {
    /// Basis matrices, each row-major.
    Matrices(Vec<Vec<Vec<f64>>>),
    /// `c[i][j][m]` with `[e_i, e_j] = sum_m c[i][j][m] e_m`; realized by the adjoint
    /// representation, which needs a trivial center.
    StructureConstants(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearAnchor {
    /// Subgroup element as a word `exp(b_1) .. exp(b_m)` of subalgebra coordinates.
    pub word: Vec<Vec<f64>>,
    pub linear_part: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LieExpectations {
    /// Bott map of each subalgebra basis vector on the complement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bott: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub linear_parts: Vec<LinearAnchor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_trivial: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LieTolerances {
    pub flatness: f64,
    pub bott_anchor: f64,
    pub differentiate: f64,
    /// Error of the central difference below which the ratio test is not meaningful.
    pub ratio_floor: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub agree: f64,
    pub morphism: f64,
    pub linear_anchor: f64,
    pub rightinv: f64,
}

impl Default for LieTolerances {
    fn default() -> Self {
        Self {
            flatness: 1e-10,
            bott_anchor: 1e-12,
            differentiate: 1e-7,
            ratio_floor: 1e-10,
            ratio_min: 3.5,
            ratio_max: 4.5,
            agree: 1e-10,
            morphism: 1e-9,
            linear_anchor: 1e-6,
            rightinv: 1e-9,
        }
    }
}

impl LieTolerances {
    /// Scales the residual bounds; the ratio window is left alone.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            flatness: self.flatness * s,
            bott_anchor: self.bott_anchor * s,
            differentiate: self.differentiate * s,
            ratio_floor: self.ratio_floor * s,
            agree: self.agree * s,
            morphism: self.morphism * s,
            linear_anchor: self.linear_anchor * s,
            rightinv: self.rightinv * s,
            ..*self
        }
    }
}

fn default_radius() -> f64 {
    holab_core::holonomy::DEFAULT_RADIUS
}
fn default_draws() -> usize {
    100
}
fn default_pairs() -> usize {
    20
}
fn default_step() -> f64 {
    1e-4
}
fn default_normality_samples() -> usize {
    8
}
fn default_translations() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiePairScenario {
    pub name: String,
    pub algebra: AlgebraSpec,
    pub subalgebra: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complement: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Random `(b1, b2)` draws for the flatness check.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Random `(h1, h2)` pairs for the morphism and agreement checks.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Random `(h, g)` translations for right invariance.
    #[serde(default = "default_translations")]
    pub translations: usize,
    #[serde(default = "default_normality_samples")]
    pub normality_samples: usize,
    /// Step of the central difference of the adjoint representation.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub expected: LieExpectations,
    #[serde(default)]
    pub tolerances: LieTolerances,
}

/// A validated Lie pair scenario.
#[derive(Debug, Clone)]
pub struct PairSetup {
    pub chart: SliceChart,
}

impl PairSetup {
    pub fn pair(&self) -> &LiePair {
        self.chart.pair()
    }
}

fn matrix_at(rows: &[Vec<f64>], path: &str) -> Result<Matrix, SchemaError> {
    try_from_nested(rows).map_err(|e| invalid(path, e))
}

fn subspace_at(k: usize, vectors: &[Vec<f64>], path: &str) -> Result<Subspace, SchemaError> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != k {
            return Err(invalid(format!("{path}/{i}"), format!("expected {k} coordinates, got {}", v.len())));
        }
    }
    if vectors.is_empty() {
        return Ok(Subspace::zero(k));
    }
    Subspace::from_vectors(k, vectors).map_err(|e| invalid(path, e))
}

/// The adjoint representation `e_i -> ad_{e_i}` as a matrix basis.
pub fn adjoint_basis(sc: &StructureConstants) -> Result<Vec<Matrix>, String> {
    let k = sc.dim();
    let mats: Vec<Matrix> = (0..k).map(|i| sc.ad_matrix(i)).collect();
    let stacked = Matrix::from_fn(k * k, k, |r, c| vectorize(&mats[c])[r]);
    let r = rank(&stacked, 1e-10);
    if r < k {
        return Err(format!(
            "the algebra has a center of dimension {}; its adjoint representation is not faithful, give matrices instead",
            k - r
        ));
    }
    Ok(mats)
}

impl LiePairScenario {
    pub fn ambient(&self) -> Result<LieAlgebraBasis, SchemaError> {
        let mats = match &self.algebra {
            AlgebraSpec::Matrices(list) => {
                if list.is_empty() {
                    return Err(invalid("/algebra/matrices", "at least one basis matrix is required"));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, m)| matrix_at(m, &format!("/algebra/matrices/{i}")))
                    .collect::<Result<Vec<_>, _>>()?
            }
            AlgebraSpec::StructureConstants(t) => {
                let sc = StructureConstants::from_tensor(t).map_err(|e| invalid("/algebra/structure_constants", e))?;
                adjoint_basis(&sc).map_err(|e| invalid("/algebra/structure_constants", e))?
            }
        };
        let n = mats[0].nrows();
        if let Some(i) = mats.iter().position(|m| m.nrows() != n || m.ncols() != n) {
            return Err(invalid(format!("/algebra/matrices/{i}"), format!("expected a {n} x {n} matrix")));
        }
        LieAlgebraBasis::new(self.name.clone(), n, mats).map_err(|e| invalid("/algebra", e))
    }

    pub fn build(&self) -> Result<PairSetup, SchemaError> {
        let g = self.ambient()?;
        let k = g.dim();
        let sub = subspace_at(k, &self.subalgebra, "/subalgebra")?;
        if sub.dim() == 0 {
            return Err(invalid("/subalgebra", "the subalgebra needs at least one vector"));
        }
        let pair = match &self.complement {
            None => LiePair::new(g, sub).map_err(|e| invalid("/subalgebra", e))?,
            Some(c) => {
                let comp = subspace_at(k, c, "/complement")?;
                check_complement(&g, &sub, &comp).map_err(|e| invalid("/complement", e))?;
                LiePair::with_complement(g, sub, comp).map_err(|e| invalid("/complement", e))?
            }
        };
        if !(self.step > 0.0) {
            return Err(invalid("/step", "must be positive"));
        }
        let (m, d) = (pair.dim_sub(), pair.dim_comp());
        if let Some(b) = &self.expected.bott {
            if b.len() != m {
                return Err(invalid("/expected/bott", format!("expected {m} matrices")));
            }
            for (i, rows) in b.iter().enumerate() {
                check_square(rows, d, &format!("/expected/bott/{i}"))?;
            }
        }
        for (i, a) in self.expected.linear_parts.iter().enumerate() {
            for (j, w) in a.word.iter().enumerate() {
                if w.len() != m {
                    return Err(invalid(format!("/expected/linear_parts/{i}/word/{j}"), format!("expected {m} coordinates")));
                }
            }
            check_square(&a.linear_part, d, &format!("/expected/linear_parts/{i}/linear_part"))?;
        }
        let chart = SliceChart::new(pair, self.radius).map_err(|e| invalid("/radius", e))?;
        Ok(PairSetup { chart })
    }
}

fn check_square(rows: &[Vec<f64>], d: usize, path: &str) -> Result<(), SchemaError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(invalid(path, format!("expected a {d} x {d} matrix")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    OdeGraph,
    Spanned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    /// `[x0, x1]` for ode graph models.
    Interval([f64; 2]),
    /// `[[field, time], ..]`, applied left to right.
    FlowWord(Vec<(usize, f64)>),
}

impl PathSpec {
    pub fn to_path(&self) -> LeafwisePath {
        match self {
            PathSpec::Interval([x0, x1]) => LeafwisePath::Interval { x0: *x0, x1: *x1 },
            PathSpec::FlowWord(w) => LeafwisePath::FlowWord(w.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoliationExpectations {
    /// Closed form of the holonomy, one expression per slice coordinate. Slice
    /// coordinates are the variables `y1, ..` (`y` for one coordinate); `x` is unused.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoliationTolerances {
    /// Closed-form map and linear part against the transport.
    pub oracle: f64,
    /// Expected linear part against the variational transport.
    pub variational: f64,
    pub bott_transport: f64,
    pub pair_demo: f64,
    pub reversal: f64,
}

impl Default for FoliationTolerances {
    fn default() -> Self {
        Self { oracle: 1e-8, variational: 1e-7, bott_transport: 1e-6, pair_demo: 1e-9, reversal: 1e-8 }
    }
}

impl FoliationTolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            oracle: self.oracle * s,
            variational: self.variational * s,
            bott_transport: self.bott_transport * s,
            pair_demo: self.pair_demo * s,
            reversal: self.reversal * s,
        }
    }
}

fn default_integrator_tol() -> f64 {
    holab_core::ode::DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoliationScenario {
    pub name: String,
    pub variant: VariantSpec,
    /// Right-hand sides `f` of `y' = f(x, y)` (ode graph models).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rhs: Vec<String>,
    /// Component expressions of the spanning fields (spanned models).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<Vec<String>>,
    #[serde(rename = "box")]
    pub domain: BoxSpec,
    pub path: PathSpec,
    /// `y` at `x0` for interval paths, a full point for flow words.
    pub base: Vec<f64>,
    /// Slice coordinates at which the holonomy is tabulated.
    pub samples: Vec<Vec<f64>>,
    #[serde(default = "default_integrator_tol")]
    pub integrator_tol: f64,
    #[serde(default)]
    pub expected: FoliationExpectations,
    #[serde(default)]
    pub tolerances: FoliationTolerances,
}

/// A validated foliation scenario.
#[derive(Debug, Clone)]
pub struct FoliationSetup {
    pub model: FoliationModel,
    pub path: LeafwisePath,
    pub slices: (TransverseSlice, TransverseSlice),
    pub samples: Vec<Vec<f64>>,
    pub options: TransportOptions,
    pub expected_map: Option<Vec<Expr>>,
    pub expected_linear: Option<Matrix>,
}

fn parse_at(src: &str, dim: usize, path: &str) -> Result<Expr, SchemaError> {
    parse_expression(src, dim).map_err(|e| invalid(path, e))
}

impl FoliationScenario {
    pub fn build(&self) -> Result<FoliationSetup, SchemaError> {
        let domain =
            DomainBox::new(self.domain.lo.clone(), self.domain.hi.clone()).map_err(|e| invalid("/box", e))?;
        let n = domain.dim();
        let model = match self.variant {
            VariantSpec::OdeGraph => {
                if !self.fields.is_empty() {
                    return Err(invalid("/fields", "ode_graph models take `rhs`, not `fields`"));
                }
                if n < 2 || self.rhs.len() != n - 1 {
                    return Err(invalid("/rhs", format!("expected {} expressions for a {n}-dimensional box", n.max(1) - 1)));
                }
                let f = self
                    .rhs
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse_at(s, n, &format!("/rhs/{i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                FoliationModel::ode_graph(domain, f).map_err(|e| invalid("/rhs", e))?
            }
            VariantSpec::Spanned => {
                if !self.rhs.is_empty() {
                    return Err(invalid("/rhs", "spanned models take `fields`, not `rhs`"));
                }
                let mut fields = Vec::new();
                for (i, comps) in self.fields.iter().enumerate() {
                    if comps.len() != n {
                        return Err(invalid(format!("/fields/{i}"), format!("expected {n} components")));
                    }
                    fields.push(
                        comps
                            .iter()
                            .enumerate()
                            .map(|(j, s)| parse_at(s, n, &format!("/fields/{i}/{j}")))
                            .collect::<Result<Vec<_>, _>>()?,
                    );
                }
                FoliationModel::spanned(domain, fields).map_err(|e| invalid("/fields", e))?
            }
        };
        let path = self.path.to_path();
        match &self.path {
            PathSpec::Interval(_) if model.variant() != holab_core::foliation::Variant::OdeGraph => {
                return Err(invalid("/path", "interval paths need an ode_graph model"));
            }
            PathSpec::FlowWord(w) => {
                if let Some(i) = w.iter().position(|(f, _)| *f >= model.leaf_dim()) {
                    return Err(invalid(format!("/path/flow_word/{i}"), format!("the model has {} fields", model.leaf_dim())));
                }
            }
            _ => {}
        }
        let base_len = if matches!(self.path, PathSpec::Interval(_)) { n - 1 } else { n };
        if self.base.len() != base_len {
            return Err(invalid("/base", format!("expected {base_len} coordinates")));
        }
        if !(self.integrator_tol > 0.0) {
            return Err(invalid("/integrator_tol", "must be positive"));
        }
        let q = model.codim();
        for (i, s) in self.samples.iter().enumerate() {
            if s.len() != q {
                return Err(invalid(format!("/samples/{i}"), format!("expected {q} slice coordinates")));
            }
        }
        let expected_map = match &self.expected.map {
            None => None,
            Some(list) => {
                if list.len() != q {
                    return Err(invalid("/expected/map", format!("expected {q} expressions")));
                }
                Some(
                    list.iter()
                        .enumerate()
                        .map(|(i, s)| parse_at(s, q + 1, &format!("/expected/map/{i}")))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
        };
        let expected_linear = match &self.expected.linear {
            None => None,
            Some(rows) => {
                check_square(rows, q, "/expected/linear")?;
                Some(matrix_at(rows, "/expected/linear")?)
            }
        };
        let options = TransportOptions { tol: self.integrator_tol, ..TransportOptions::default() };
        let slices = default_slices(&model, &path, &self.base, options).map_err(|e| invalid("/path", e))?;
        Ok(FoliationSetup {
            model,
            path,
            slices,
            samples: self.samples.clone(),
            options,
            expected_map,
            expected_linear,
        })
    }
}
