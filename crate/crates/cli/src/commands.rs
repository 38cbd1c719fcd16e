//! The checks behind each command. Every function appends its checks and computed
//! values to a [`Report`]; errors from the numerics are recorded as failed checks.

use holab_core::matrix::{dist, max_abs_diff, op_norm, try_from_nested};
use holab_core::{
    bott_transport_check, holonomy_transport, linear_holonomy_variational, pair_groupoid_demo,
    right_invariance_check, GroupElement, Matrix, QuotientEndo,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::report::{matrix, num, vector, Report};
use crate::scenario::{FoliationSetup, FoliationTolerances, LiePairScenario, LieTolerances, PairSetup};

/// Range of the random subalgebra and ambient coordinates.
const DRAW_RANGE: f64 = 0.3;
/// A witness of nontrivial holonomy must move some grid point at least this far.
const WITNESS_MIN: f64 = 1e-3;

/// Generator for one command; each command has its own stream so that `all` and the
/// single commands draw the same samples.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}

pub struct LieContext<'a> {
    pub setup: &'a PairSetup,
    pub scenario: &'a LiePairScenario,
    pub tol: LieTolerances,
    pub seed: u64,
}

impl LieContext<'_> {
    fn sub_element(&self, word: &[Vec<f64>]) -> holab_core::Result<GroupElement> {
        self.setup.chart.subgroup_element(word)
    }

    fn random_h(&self, rng: &mut ChaCha8Rng) -> holab_core::Result<(Vec<f64>, GroupElement)> {
        let b = draw(rng, self.setup.pair().dim_sub(), DRAW_RANGE);
        let h = self.sub_element(std::slice::from_ref(&b))?;
        Ok((b, h))
    }
}

macro_rules! attempt {
    ($report:expr, $name:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $report.error($name, err);
                return;
            }
        }
    };
}

pub fn bott(ctx: &LieContext, report: &mut Report) {
    let pair = ctx.setup.pair();
    let basis = pair.sub_basis().basis().to_vec();
    let mut maps = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        let m = attempt!(report, format!("bott.b{i}"), pair.bott(b));
        if let Some(expected) = &ctx.scenario.expected.bott {
            let e = try_from_nested(&expected[i]).expect("validated");
            report.at_most(format!("bott.anchor.b{i}"), max_abs_diff(&m.0, &e), ctx.tol.bott_anchor);
        }
        maps.push(matrix(&m.0));
    }
    report.result("bott", "basis", Value::Array(maps));

    let mut rng = rng_for(ctx.seed, 1);
    let m = pair.dim_sub();
    let (mut flat, mut lin): (f64, f64) = (0.0, 0.0);
    for _ in 0..ctx.scenario.draws {
        let (c1, c2) = (draw(&mut rng, m, 1.0), draw(&mut rng, m, 1.0));
        let lambda = rng.gen_range(-2.0..2.0);
        let (b1, b2) = (pair.sub_element(&c1), pair.sub_element(&c2));
        flat = flat.max(attempt!(report, "bott.flatness", pair.bott_flatness_residual(&b1, &b2)));
        let combined = attempt!(report, "bott.linearity", pair.bott(&(&b1 * lambda + &b2)));
        let parts = attempt!(report, "bott.linearity", pair.bott(&b1)).0 * lambda
            + attempt!(report, "bott.linearity", pair.bott(&b2)).0;
        lin = lin.max(op_norm(&(combined.0 - parts)));
    }
    report.result("bott", "draws", Value::from(ctx.scenario.draws));
    report.result("bott", "flatness_residual", num(flat));
    report.result("bott", "linearity_residual", num(lin));
    report.at_most("bott.flatness", flat, ctx.tol.flatness);
    report.at_most("bott.linearity", lin, ctx.tol.bott_anchor);
}

pub fn differentiate(ctx: &LieContext, report: &mut Report) {
    let pair = ctx.setup.pair();
    let eps = ctx.scenario.step;
    let mut rows = Vec::new();
    for (i, b) in pair.sub_basis().basis().iter().enumerate() {
        let name = format!("differentiate.b{i}");
        let exact = attempt!(report, name.clone(), pair.bott(b));
        let d1 = attempt!(report, name.clone(), pair.differentiate_rep(b, eps));
        let d2 = attempt!(report, name.clone(), pair.differentiate_rep(b, eps / 2.0));
        let (e1, e2) = (d1.distance(&exact), d2.distance(&exact));
        report.at_most(name.clone(), e1, ctx.tol.differentiate);
        let mut row = Map::new();
        row.insert("derivative".into(), matrix(&d1.0));
        row.insert("error".into(), num(e1));
        row.insert("error_half_step".into(), num(e2));
        if e1 > ctx.tol.ratio_floor {
            let ratio = e1 / e2;
            report.within(format!("{name}.ratio"), ratio, ctx.tol.ratio_min, ctx.tol.ratio_max);
            row.insert("ratio".into(), num(ratio));
        } else {
            // The difference quotient is exact up to round-off; a ratio of two noise
            // values carries no information.
            report.at_most(format!("{name}.ratio_floor"), e1, ctx.tol.ratio_floor);
            row.insert("ratio".into(), Value::Null);
        }
        rows.push(Value::Object(row));
    }
    report.result("differentiate", "step", num(eps));
    report.result("differentiate", "basis", Value::Array(rows));
}

pub fn holonomy(ctx: &LieContext, report: &mut Report) {
    let chart = &ctx.setup.chart;
    let pair = ctx.setup.pair();
    let grid = chart.default_grid();
    let mut rng = rng_for(ctx.seed, 2);
    let (mut morphism, mut base): (f64, f64) = (0.0, 0.0);
    let zero = vec![0.0; chart.dim()];
    for _ in 0..ctx.scenario.pairs {
        let (_, h1) = attempt!(report, "holonomy.morphism", ctx.random_h(&mut rng));
        let (_, h2) = attempt!(report, "holonomy.morphism", ctx.random_h(&mut rng));
        let prod = h2.mul(&h1);
        for c in &grid {
            let direct = attempt!(report, "holonomy.morphism", chart.chi_conj_at(&prod, c));
            let first = attempt!(report, "holonomy.morphism", chart.chi_conj_at(&h1, c));
            let second = attempt!(report, "holonomy.morphism", chart.chi_conj_at(&h2, &first));
            morphism = morphism.max(dist(&direct, &second));
        }
        let fixed = attempt!(report, "holonomy.base_point", chart.chi_conj_at(&h1, &zero));
        base = base.max(fixed.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    report.result("holonomy", "pairs", Value::from(ctx.scenario.pairs));
    report.result("holonomy", "morphism_residual", num(morphism));
    report.result("holonomy", "base_point_displacement", num(base));
    report.at_most("holonomy.morphism", morphism, ctx.tol.morphism);
    report.at_most("holonomy.base_point", base, 0.0);

    // Linear part of chi(exp(t b_i)) against the conjugation action on the quotient.
    let t = 0.1;
    let mut worst: f64 = 0.0;
    let mut linear = Vec::new();
    for b in pair.sub_basis().basis() {
        let h = attempt!(report, "holonomy.linear_vs_adjoint", GroupElement::exp(&(b * t)));
        let map = attempt!(report, "holonomy.linear_vs_adjoint", chart.chi_conj(&h, None));
        let ad = attempt!(report, "holonomy.linear_vs_adjoint", pair.exp_ad_rep(b, t));
        worst = worst.max(map.linear_part().distance(&ad));
        linear.push(matrix(&map.linear_part().0));
    }
    report.result("holonomy", "linear_parts_at_0.1", Value::Array(linear));
    report.at_most("holonomy.linear_vs_adjoint", worst, ctx.tol.linear_anchor);

    let mut anchors = Vec::new();
    for (i, a) in ctx.scenario.expected.linear_parts.iter().enumerate() {
        let name = format!("holonomy.anchor{i}");
        let h = attempt!(report, name.clone(), ctx.sub_element(&a.word));
        let map = attempt!(report, name.clone(), chart.chi_conj(&h, None));
        let e = try_from_nested(&a.linear_part).expect("validated");
        report.at_most(name, max_abs_diff(&map.linear_part().0, &e), ctx.tol.linear_anchor);
        anchors.push(matrix(&map.linear_part().0));
    }
    if !anchors.is_empty() {
        report.result("holonomy", "anchors", Value::Array(anchors));
    }
}

pub fn agree(ctx: &LieContext, report: &mut Report) {
    let chart = &ctx.setup.chart;
    let grid = chart.nine_point_grid();
    let mut rng = rng_for(ctx.seed, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.scenario.pairs {
        let (_, h) = attempt!(report, "agree", ctx.random_h(&mut rng));
        let a = attempt!(report, "agree", chart.chi_conj(&h, Some(&grid)));
        let b = attempt!(report, "agree", chart.chi_via_bisection(&h, Some(&grid)));
        worst = worst.max(a.max_deviation(&b));
    }
    report.result("agree", "elements", Value::from(ctx.scenario.pairs));
    report.result("agree", "grid_points", Value::from(grid.len()));
    report.result("agree", "max_deviation", num(worst));
    report.at_most("agree", worst, ctx.tol.agree);
}

pub fn normality(ctx: &LieContext, report: &mut Report) {
    let rep = attempt!(
        report,
        "normality",
        ctx.setup.chart.normality_equivalence(ctx.scenario.normality_samples, ctx.seed)
    );
    report.result("normality", "ideal", Value::Bool(rep.ideal.is_ideal));
    report.result("normality", "ideal_residual", num(rep.ideal.residual));
    report.result("normality", "chi_trivial", Value::Bool(rep.chi_trivial));
    report.result("normality", "max_deviation", num(rep.max_deviation));
    let witness = match &rep.witness {
        None => Value::Null,
        Some(w) => {
            let mut m = Map::new();
            m.insert("h".into(), vector(&w.h));
            m.insert("c".into(), vector(&w.c));
            m.insert("deviation".into(), num(w.deviation));
            Value::Object(m)
        }
    };
    report.result("normality", "witness", witness);
    report.holds("normality.consistent", rep.consistent);
    if let Some(e) = ctx.scenario.expected.ideal {
        report.equals("normality.ideal", rep.ideal.is_ideal, e);
    }
    if let Some(e) = ctx.scenario.expected.chi_trivial {
        report.equals("normality.chi_trivial", rep.chi_trivial, e);
    }
    if let Some(w) = &rep.witness {
        report.within("normality.witness", w.deviation, WITNESS_MIN, f64::INFINITY);
    }
}

pub fn rightinv(ctx: &LieContext, report: &mut Report) {
    let pair = ctx.setup.pair();
    let mut rng = rng_for(ctx.seed, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.scenario.translations {
        let (_, h) = attempt!(report, "rightinv", ctx.random_h(&mut rng));
        let a = draw(&mut rng, pair.ambient().dim(), DRAW_RANGE);
        let g = attempt!(report, "rightinv", GroupElement::exp(&pair.ambient().element(&a)));
        let rep = attempt!(report, "rightinv", right_invariance_check(&ctx.setup.chart, &h, &g));
        worst = worst.max(rep.residual);
    }
    report.result("rightinv", "translations", Value::from(ctx.scenario.translations));
    report.result("rightinv", "residual", num(worst));
    report.at_most("rightinv", worst, ctx.tol.rightinv);
}

pub struct FoliationContext<'a> {
    pub setup: &'a FoliationSetup,
    pub tol: FoliationTolerances,
}

fn endo_error(a: &QuotientEndo, e: &Matrix) -> f64 {
    max_abs_diff(&a.0, e)
}

pub fn foliation(ctx: &FoliationContext, report: &mut Report) {
    let s = ctx.setup;
    let (s0, s1) = &s.slices;
    let map = attempt!(
        report,
        "foliation.transport",
        holonomy_transport(&s.model, &s.path, s0, s1, &s.samples, s.options)
    );
    let table: Vec<Value> = map
        .samples()
        .iter()
        .filter(|smp| s.samples.contains(&smp.input))
        .map(|smp| {
            let mut m = Map::new();
            m.insert("input".into(), vector(&smp.input));
            match &smp.output {
                Ok(o) => m.insert("output".into(), vector(o)),
                Err(e) => m.insert("error".into(), Value::String(e.to_string())),
            };
            Value::Object(m)
        })
        .collect();
    report.result("foliation", "samples", Value::Array(table));
    report.result("foliation", "linear_part", matrix(&map.linear_part().0));
    report.at_most("foliation.failed_samples", map.failures() as f64, 0.0);

    if let Some(exprs) = &s.expected_map {
        let mut worst: f64 = 0.0;
        for smp in map.samples() {
            if let Ok(out) = &smp.output {
                let vars: Vec<f64> = std::iter::once(0.0).chain(smp.input.iter().copied()).collect();
                let expected: Vec<f64> = exprs.iter().map(|e| e.eval(&vars)).collect();
                worst = worst.max(dist(out, &expected));
            }
        }
        report.result("foliation", "map_error", num(worst));
        report.at_most("foliation.map_oracle", worst, ctx.tol.oracle);
    }

    let variational = attempt!(
        report,
        "foliation.variational",
        linear_holonomy_variational(&s.model, &s.path, s0, s1, s.options)
    );
    report.result("foliation", "variational_linear_part", matrix(&variational.0));
    if let Some(e) = &s.expected_linear {
        report.at_most("foliation.linear_oracle", endo_error(map.linear_part(), e), ctx.tol.oracle);
        report.at_most("foliation.variational_oracle", endo_error(&variational, e), ctx.tol.variational);
    }

    let bott = attempt!(
        report,
        "foliation.bott_transport",
        bott_transport_check(&s.model, &s.path, s0, s1, s.options)
    );
    report.result("foliation", "bott_transport_residual", num(bott.residual));
    report.at_most("foliation.bott_transport", bott.residual, ctx.tol.bott_transport);
}

pub fn pairdemo(ctx: &FoliationContext, report: &mut Report) {
    let s = ctx.setup;
    let (s0, s1) = &s.slices;
    let rep = attempt!(
        report,
        "pairdemo",
        pair_groupoid_demo(&s.model, &s.path, s0, s1, &s.samples, s.options)
    );
    report.result("pairdemo", "max_deviation", num(rep.max_deviation));
    report.result("pairdemo", "reversal_residual", num(rep.reversal_residual));
    report.at_most("pairdemo.agreement", rep.max_deviation, ctx.tol.pair_demo);
    report.at_most("pairdemo.reversal", rep.reversal_residual, ctx.tol.reversal);
}
