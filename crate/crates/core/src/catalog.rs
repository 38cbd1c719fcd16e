//! Built-in example algebras, pairs and foliations with known closed forms.

use crate::algebra::{LieAlgebraBasis, Subspace};
use crate::expr::parse_expression;
use crate::foliation::{DomainBox, FoliationModel, LeafwisePath};
use crate::matrix::{from_rows, Matrix};
use crate::pair::LiePair;

/// `H = diag(1,-1)`, `E = e_12`, `F = e_21`.
pub fn sl2_basis() -> [Matrix; 3] {
    [
        from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
        from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
        from_rows(&[&[0.0, 0.0], &[1.0, 0.0]]),
    ]
}

/// Strictly upper triangular `X = e_12`, `Y = e_23`, `Z = e_13`, with `[X,Y] = Z`.
pub fn heisenberg_basis() -> [Matrix; 3] {
    [
        from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]),
        from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]),
        from_rows(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]),
    ]
}

/// Infinitesimal rotations with `[L1, L2] = L3` and cyclic.
pub fn so3_basis() -> [Matrix; 3] {
    [
        from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, -1.0], &[0.0, 1.0, 0.0]]),
        from_rows(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]]),
        from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]),
    ]
}

pub fn sl2_algebra() -> LieAlgebraBasis {
    LieAlgebraBasis::new("sl2", 2, sl2_basis().to_vec()).expect("sl2 basis")
}

pub fn heisenberg_algebra() -> LieAlgebraBasis {
    LieAlgebraBasis::new("heisenberg", 3, heisenberg_basis().to_vec()).expect("heisenberg basis")
}

pub fn so3_algebra() -> LieAlgebraBasis {
    LieAlgebraBasis::new("so3", 3, so3_basis().to_vec()).expect("so3 basis")
}

/// `so(3) (+) R` as block-diagonal `4 x 4` matrices; the last basis vector spans `R`.
pub fn so3_plus_r_algebra() -> LieAlgebraBasis {
    let mut basis: Vec<Matrix> = so3_basis()
        .iter()
        .map(|l| {
            let mut m = Matrix::zeros(4, 4);
            m.view_mut((0, 0), (3, 3)).copy_from(l);
            m
        })
        .collect();
    basis.push(crate::matrix::unit(4, 3, 3));
    LieAlgebraBasis::new("so3+r", 4, basis).expect("so3+r basis")
}

/// `sl(2,R)` with the Borel subalgebra `span(H, E)`; the complement is `span(F)`.
pub fn sl2_borel() -> LiePair {
    let sub = Subspace::from_vectors(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
    LiePair::new(sl2_algebra(), sub).expect("sl2 borel pair")
}

/// Heisenberg algebra with its center `span(Z)`.
pub fn heisenberg_center() -> LiePair {
    let sub = Subspace::from_vectors(3, &[vec![0.0, 0.0, 1.0]]).unwrap();
    LiePair::new(heisenberg_algebra(), sub).expect("heisenberg center pair")
}

/// `so(3)` inside `so(3) (+) R`, an ideal.
pub fn so3_in_so3_plus_r() -> LiePair {
    let sub = Subspace::from_vectors(
        4,
        &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]],
    )
    .unwrap();
    LiePair::new(so3_plus_r_algebra(), sub).expect("so3 in so3+r pair")
}

/// `so(3)` with the rotation axis `span(L3)`; the Bott map of `L3` is a rotation generator.
pub fn so3_axis() -> LiePair {
    let sub = Subspace::from_vectors(3, &[vec![0.0, 0.0, 1.0]]).unwrap();
    LiePair::new(so3_algebra(), sub).expect("so3 axis pair")
}

pub const PAIR_NAMES: [&str; 4] = ["sl2_borel", "heisenberg_center", "so3_in_so3_plus_r", "so3_axis"];

pub fn pair_by_name(name: &str) -> Option<LiePair> {
    Some(match name {
        "sl2_borel" => sl2_borel(),
        "heisenberg_center" => heisenberg_center(),
        "so3_in_so3_plus_r" => so3_in_so3_plus_r(),
        "so3_axis" => so3_axis(),
        _ => return None,
    })
}

pub fn pairs() -> Vec<(&'static str, LiePair)> {
    PAIR_NAMES.iter().map(|n| (*n, pair_by_name(n).unwrap())).collect()
}

/// A graph foliation fixture: `y' = f(x, y)` along `[x0, x1]` through `y = base`.
#[derive(Debug, Clone)]
pub struct FoliationFixture {
    pub name: &'static str,
    pub f: &'static str,
    pub model: FoliationModel,
    pub path: LeafwisePath,
    pub base: Vec<f64>,
    pub sample_radius: f64,
}

fn graph_fixture(name: &'static str, f: &'static str, x1: f64, bounds: (f64, f64)) -> FoliationFixture {
    let expr = parse_expression(f, 2).expect("fixture expression");
    let domain = DomainBox::new(vec![-4.0, bounds.0], vec![4.0, bounds.1]).expect("fixture box");
    let model = FoliationModel::ode_graph(domain, vec![expr]).expect("fixture model");
    FoliationFixture {
        name,
        f,
        model,
        path: LeafwisePath::Interval { x0: 0.0, x1 },
        base: vec![0.0],
        sample_radius: 0.3,
    }
}

pub const FOLIATION_NAMES: [&str; 4] = ["fol_linear", "fol_riccati", "fol_sin", "fol_trivial"];

pub fn foliation_by_name(name: &str) -> Option<FoliationFixture> {
    Some(match name {
        "fol_linear" => graph_fixture("fol_linear", "y", 1.0, (-4.0, 4.0)),
        "fol_riccati" => graph_fixture("fol_riccati", "y^2", 1.0, (-2.0, 2.0)),
        "fol_sin" => graph_fixture("fol_sin", "sin(x)*y", std::f64::consts::PI, (-4.0, 4.0)),
        "fol_trivial" => graph_fixture("fol_trivial", "0", 1.0, (-4.0, 4.0)),
        _ => return None,
    })
}

pub fn foliations() -> Vec<FoliationFixture> {
    FOLIATION_NAMES.iter().map(|n| foliation_by_name(n).unwrap()).collect()
}
