//! Scenarios shipped with the binary.

use holab_core::catalog;
use holab_core::matrix::to_nested;
use holab_core::{LiePair, Matrix};

use crate::scenario::{
    AlgebraSpec, BoxSpec, FoliationExpectations, FoliationScenario, FoliationTolerances, LieExpectations,
    LiePairScenario, LieTolerances, LinearAnchor, PathSpec, Scenario, VariantSpec,
};

pub const NAMES: [&str; 8] = [
    "sl2_borel",
    "heisenberg_center",
    "so3_in_so3_plus_r",
    "so3_axis",
    "fol_linear",
    "fol_riccati",
    "fol_sin",
    "fol_trivial",
];

fn pair_scenario(name: &str, pair: &LiePair, expected: LieExpectations) -> LiePairScenario {
    LiePairScenario {
        name: name.to_string(),
        algebra: AlgebraSpec::Matrices(pair.ambient().basis().iter().map(to_nested).collect()),
        subalgebra: pair.sub().vectors(),
        complement: None,
        radius: holab_core::holonomy::DEFAULT_RADIUS,
        draws: 100,
        pairs: 20,
        translations: 3,
        normality_samples: 8,
        step: 1e-4,
        expected,
        tolerances: LieTolerances::default(),
    }
}

fn scalar(v: f64) -> Vec<Vec<f64>> {
    vec![vec![v]]
}

fn sl2_borel() -> Scenario {
    // bott(H) F = [H, F] = -2F and [E, F] = H lies in the subalgebra.
    let expected = LieExpectations {
        bott: Some(vec![scalar(-2.0), scalar(0.0)]),
        linear_parts: [0.1f64, 0.3]
            .iter()
            .map(|t| LinearAnchor { word: vec![vec![*t, 0.0]], linear_part: scalar((-2.0 * t).exp()) })
            .collect(),
        ideal: Some(false),
        chi_trivial: Some(false),
    };
    Scenario::LiePair(pair_scenario("sl2_borel", &catalog::sl2_borel(), expected))
}

fn heisenberg_center() -> Scenario {
    let zero = Matrix::zeros(2, 2);
    let expected = LieExpectations {
        bott: Some(vec![to_nested(&zero)]),
        linear_parts: vec![LinearAnchor { word: vec![vec![0.7]], linear_part: to_nested(&Matrix::identity(2, 2)) }],
        ideal: Some(true),
        chi_trivial: Some(true),
    };
    Scenario::LiePair(pair_scenario("heisenberg_center", &catalog::heisenberg_center(), expected))
}

fn so3_in_so3_plus_r() -> Scenario {
    let expected = LieExpectations {
        bott: Some(vec![scalar(0.0); 3]),
        linear_parts: Vec::new(),
        ideal: Some(true),
        chi_trivial: Some(true),
    };
    Scenario::LiePair(pair_scenario("so3_in_so3_plus_r", &catalog::so3_in_so3_plus_r(), expected))
}

fn so3_axis() -> Scenario {
    // On span(L1, L2), ad_{L3} is the rotation generator [[0, -1], [1, 0]].
    let t = 0.4f64;
    let expected = LieExpectations {
        bott: Some(vec![vec![vec![0.0, -1.0], vec![1.0, 0.0]]]),
        linear_parts: vec![LinearAnchor {
            word: vec![vec![t]],
            linear_part: vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]],
        }],
        ideal: Some(false),
        chi_trivial: Some(false),
    };
    let mut s = pair_scenario("so3_axis", &catalog::so3_axis(), expected);
    // Fixes the orientation of the complement, which the expected matrices depend on.
    s.complement = Some(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
    Scenario::LiePair(s)
}

fn foliation(name: &str, map: &str, linear: f64) -> Scenario {
    let fx = catalog::foliation_by_name(name).expect("catalog foliation");
    let (x0, x1) = match fx.path {
        holab_core::LeafwisePath::Interval { x0, x1 } => (x0, x1),
        _ => unreachable!("catalog foliations use interval paths"),
    };
    let r = fx.sample_radius;
    let samples = (0..=8).map(|i| vec![-r + 2.0 * r * i as f64 / 8.0]).collect();
    let domain = fx.model.domain();
    Scenario::Foliation(FoliationScenario {
        name: name.to_string(),
        variant: VariantSpec::OdeGraph,
        rhs: vec![fx.f.to_string()],
        fields: Vec::new(),
        domain: BoxSpec { lo: domain.lo().to_vec(), hi: domain.hi().to_vec() },
        path: PathSpec::Interval([x0, x1]),
        base: fx.base.clone(),
        samples,
        integrator_tol: holab_core::ode::DEFAULT_TOL,
        expected: FoliationExpectations { map: Some(vec![map.to_string()]), linear: Some(scalar(linear)) },
        tolerances: FoliationTolerances::default(),
    })
}

pub fn builtin(name: &str) -> Option<Scenario> {
    Some(match name {
        "sl2_borel" => sl2_borel(),
        "heisenberg_center" => heisenberg_center(),
        "so3_in_so3_plus_r" => so3_in_so3_plus_r(),
        "so3_axis" => so3_axis(),
        "fol_linear" => foliation("fol_linear", "exp(1) * y", std::f64::consts::E),
        "fol_riccati" => foliation("fol_riccati", "y / (1 - y)", 1.0),
        // y' = sin(x) y integrates to y exp(1 - cos x), which is e^2 y at x = pi.
        "fol_sin" => foliation("fol_sin", "exp(2) * y", 2f64.exp()),
        "fol_trivial" => foliation("fol_trivial", "y", 1.0),
        _ => return None,
    })
}
