use holab_core::catalog;
use holab_core::groupoid::leaf_holonomy_at;
use holab_core::matrix::{dist, from_rows, inverse, max_abs_diff};
use holab_core::{
    compose, project_pi, right_invariance_check, ActionGroupoidElement, GroupElement, LiePair, Matrix, SliceChart,
    Subspace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn charts() -> Vec<(&'static str, SliceChart)> {
    catalog::pairs().into_iter().map(|(n, p)| (n, SliceChart::with_default_radius(p).unwrap())).collect()
}

fn random_h(chart: &SliceChart, rng: &mut ChaCha8Rng, scale: f64) -> GroupElement {
    let b: Vec<f64> = (0..chart.pair().dim_sub()).map(|_| rng.gen_range(-scale..scale)).collect();
    chart.subgroup_element(&[b]).unwrap()
}

fn random_g(pair: &LiePair, rng: &mut ChaCha8Rng) -> GroupElement {
    let a: Vec<f64> = (0..pair.ambient().dim()).map(|_| rng.gen_range(-0.3..0.3)).collect();
    GroupElement::exp(&pair.ambient().element(&a)).unwrap()
}

#[test]
fn base_point_is_fixed_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (name, chart) in charts() {
        let h = random_h(&chart, &mut rng, 0.3);
        let out = chart.chi_conj_at(&h, &vec![0.0; chart.dim()]).unwrap();
        assert!(out.iter().all(|v| *v == 0.0), "{name}: {out:?}");
    }
}

#[test]
fn morphism_law_on_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for (name, chart) in charts() {
        for _ in 0..20 {
            let (h1, h2) = (random_h(&chart, &mut rng, 0.3), random_h(&chart, &mut rng, 0.3));
            let prod = h2.mul(&h1);
            for c in chart.default_grid() {
                let direct = chart.chi_conj_at(&prod, &c).unwrap();
                let stepwise = chart.chi_conj_at(&h2, &chart.chi_conj_at(&h1, &c).unwrap()).unwrap();
                assert!(dist(&direct, &stepwise) <= 1e-9, "{name}: {:e}", dist(&direct, &stepwise));
            }
        }
    }
}

#[test]
fn bisection_route_agrees_with_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (name, chart) in charts() {
        let grid = chart.nine_point_grid();
        for _ in 0..3 {
            let h = random_h(&chart, &mut rng, 0.3);
            let a = chart.chi_conj(&h, Some(&grid)).unwrap();
            let b = chart.chi_via_bisection(&h, Some(&grid)).unwrap();
            assert!(a.max_deviation(&b) <= 1e-10, "{name}: {:e}", a.max_deviation(&b));
        }
    }
}

#[test]
fn linear_part_is_conjugation_on_quotient() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for (name, chart) in charts() {
        let pair = chart.pair();
        for b in pair.sub_basis().basis() {
            let t = rng.gen_range(-0.4..0.4);
            let h = GroupElement::exp(&(b * t)).unwrap();
            let psi = chart.chi_conj(&h, None).unwrap().linear_part().clone();
            let expected = pair.exp_ad_rep(b, t).unwrap();
            assert!(psi.distance(&expected) <= 1e-8, "{name}: {:e}", psi.distance(&expected));
        }
    }
}

#[test]
fn first_order_term_is_bott() {
    for (name, chart) in charts() {
        let pair = chart.pair();
        let d = pair.dim_comp();
        for b in pair.sub_basis().basis() {
            let bott = pair.bott(b).unwrap();
            let k = bott.op_norm().powi(2) + 1.0;
            for eps in [1e-2, 1e-3, 1e-4] {
                let psi = |e: f64| chart.chi_conj(&GroupElement::exp(&(b * e)).unwrap(), None).unwrap().linear_part().0.clone();
                let one_sided = (psi(eps) - Matrix::identity(d, d)) / eps;
                let err1 = holab_core::matrix::op_norm(&(one_sided - &bott.0));
                assert!(err1 <= k * eps + 1e-6, "{name} eps {eps}: {err1:e}");
                let central = (psi(eps) - psi(-eps)) / (2.0 * eps);
                let err2 = holab_core::matrix::op_norm(&(central - &bott.0));
                assert!(err2 <= k * k * eps * eps + 1e-6, "{name} eps {eps}: {err2:e}");
            }
        }
    }
}

#[test]
fn sl2_linear_part_is_scalar_exponential() {
    let chart = SliceChart::with_default_radius(catalog::sl2_borel()).unwrap();
    let [h, _, _] = catalog::sl2_basis();
    for t in [0.1f64, 0.3] {
        let psi = chart.chi_conj(&GroupElement::exp(&(&h * t)).unwrap(), None).unwrap();
        assert!((psi.linear_part().0[(0, 0)] - (-2.0 * t).exp()).abs() <= 1e-6);
    }
}

/// Linear parts for an alternative complement are conjugate by the change of basis
/// `C -> C'` that projects along the subalgebra.
#[test]
fn linear_part_independent_of_slice_up_to_conjugation() {
    let base = catalog::so3_axis();
    let alt = Subspace::from_vectors(3, &[vec![1.0, 0.0, 0.2], vec![0.0, 1.0, -0.1]]).unwrap();
    let other = LiePair::with_complement(base.ambient().clone(), base.sub().clone(), alt).unwrap();
    let d = base.dim_comp();
    let t = Matrix::from_fn(d, d, |i, j| other.split(&base.comp_basis()[j]).unwrap().1[i]);
    let t_inv = inverse(&t).unwrap();
    let (c1, c2) = (SliceChart::with_default_radius(base).unwrap(), SliceChart::with_default_radius(other).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..5 {
        let h = random_h(&c1, &mut rng, 0.5);
        let psi = c1.chi_conj(&h, None).unwrap().linear_part().0.clone();
        let psi2 = c2.chi_conj(&h, None).unwrap().linear_part().0.clone();
        assert!(max_abs_diff(&(&t * psi * &t_inv), &psi2) <= 1e-8);
    }
}

#[test]
fn normality_matches_ideal_criterion() {
    for (name, chart) in charts() {
        let rep = chart.normality_equivalence(8, 0).unwrap();
        assert!(rep.consistent, "{name}");
        if !rep.chi_trivial {
            let w = rep.witness.expect("witness");
            assert!(w.deviation > 1e-3, "{name}: {}", w.deviation);
        }
    }
}

#[test]
fn probe_separates_distinct_elements() {
    let chart = SliceChart::with_default_radius(catalog::sl2_borel()).unwrap();
    let h1 = chart.subgroup_element(&[vec![0.2, 0.0]]).unwrap();
    let h2 = chart.subgroup_element(&[vec![0.0, 0.2]]).unwrap();
    let rep = chart.chi_phi_probe(&h1, &h2).unwrap();
    assert!(!rep.chi_collision && !rep.phi_equal);
    // In the Heisenberg center every element acts trivially, so chi collides while Phi does not.
    let heis = SliceChart::with_default_radius(catalog::heisenberg_center()).unwrap();
    let z1 = heis.subgroup_element(&[vec![0.4]]).unwrap();
    let rep = heis.chi_phi_probe(&z1, &GroupElement::identity(3)).unwrap();
    assert!(rep.chi_collision && !rep.phi_equal);
}

#[test]
fn slide_recovers_slice_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for (name, chart) in charts() {
        let pair = chart.pair();
        for _ in 0..5 {
            let b: Vec<f64> = (0..pair.dim_sub()).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let c: Vec<f64> = (0..chart.dim()).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let p = holab_core::mexp(&pair.sub_element(&b)).unwrap() * chart.slice_point(&c).unwrap();
            let s = chart.slide_to_slice(&p).unwrap();
            assert!(dist(&s.slice, &c) < 1e-11, "{name}");
        }
    }
}

#[test]
fn groupoid_associativity_and_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for (name, chart) in charts() {
        let pair = chart.pair();
        for _ in 0..50 {
            let g = random_g(pair, &mut rng);
            let (h1, h2, h3) =
                (random_h(&chart, &mut rng, 0.5), random_h(&chart, &mut rng, 0.5), random_h(&chart, &mut rng, 0.5));
            let e1 = ActionGroupoidElement::new(h1, g);
            let e2 = ActionGroupoidElement::new(h2, GroupElement::from_matrix(e1.target()).unwrap());
            let e3 = ActionGroupoidElement::new(h3, GroupElement::from_matrix(e2.target()).unwrap());
            let left = compose(&compose(&e3, &e2).unwrap(), &e1).unwrap();
            let right = compose(&e3, &compose(&e2, &e1).unwrap()).unwrap();
            assert!(max_abs_diff(left.h.matrix(), right.h.matrix()) <= 1e-12, "{name}");
            assert_eq!(left.g, right.g);
            let pi = project_pi(&compose(&e2, &e1).unwrap());
            let pi_prod = project_pi(&e2).mul(&project_pi(&e1));
            assert!(max_abs_diff(pi.matrix(), pi_prod.matrix()) <= 1e-12, "{name}");
            let inv = e1.inverse().unwrap();
            let unit = compose(&e1, &inv).unwrap();
            assert!(max_abs_diff(unit.h.matrix(), &Matrix::identity(pair.matrix_size(), pair.matrix_size())) <= 1e-12);
        }
    }
}

#[test]
fn right_invariance_on_catalog_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for (name, chart) in charts() {
        for _ in 0..3 {
            let h = random_h(&chart, &mut rng, 0.3);
            let g = random_g(chart.pair(), &mut rng);
            let rep = right_invariance_check(&chart, &h, &g).unwrap();
            assert!(rep.residual <= 1e-9, "{name}: {:e}", rep.residual);
        }
    }
}

#[test]
fn right_translate_of_explicit_element() {
    let chart = SliceChart::with_default_radius(catalog::sl2_borel()).unwrap();
    let h = chart.subgroup_element(&[vec![0.1, 0.2]]).unwrap();
    let g = GroupElement::from_matrix(from_rows(&[&[1.0, 0.0], &[0.3, 1.0]])).unwrap();
    for c in chart.default_grid() {
        let a = leaf_holonomy_at(&chart, &h, &Matrix::identity(2, 2), &c).unwrap();
        let b = leaf_holonomy_at(&chart, &h, g.matrix(), &c).unwrap();
        assert!(dist(&a, &b) <= 1e-9);
    }
}
