//! Holonomy of Lie subalgebras and regular foliations.
//!
//! A pair `h < g` of matrix Lie algebras determines a transformation groupoid `H x G`
//! and a slice `exp(C)` through the identity for a complement `C`. Subgroup elements act
//! on the slice by conjugation followed by a slide along cosets; the linear part of this
//! action is `e^{ad}` on `g/h`, and its derivative is the Bott connection. The same chain
//! is reproduced for regular foliations on boxes in `R^n`.

pub mod algebra;
pub mod catalog;
pub mod error;
pub mod expm;
pub mod expr;
pub mod foliation;
pub mod germ;
pub mod groupoid;
pub mod holonomy;
pub mod matrix;
pub mod newton;
pub mod ode;
pub mod pair;

pub use algebra::{bracket, complement, structure_constants, LieAlgebraBasis, StructureConstants, Subspace};
pub use error::{Error, Result};
pub use expm::{mexp, mlog};
pub use expr::{parse_expression, Expr, ParseError};
pub use foliation::{
    bott_transport_check, holonomy_transport, linear_holonomy_variational, pair_groupoid_demo, DomainBox,
    FoliationModel, LeafwisePath, TransportOptions, TransverseSlice,
};
pub use germ::{linearize, HolonomyMap, Route};
pub use groupoid::{compose, project_pi, right_invariance_check, ActionGroupoidElement};
pub use holonomy::{GroupElement, SliceChart};
pub use matrix::{Matrix, Vector};
pub use pair::{LiePair, QuotientEndo};
