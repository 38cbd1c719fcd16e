use holab_core::catalog;
use holab_core::{LiePair, Matrix, QuotientEndo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sub(pair: &LiePair, rng: &mut ChaCha8Rng) -> Matrix {
    let b: Vec<f64> = (0..pair.dim_sub()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    pair.sub_element(&b)
}

/// `Ad(exp(eps b))` on the quotient, from the truncated series of `exp(eps ad_b)` in
/// ambient coordinates.
fn ad_series_rep(pair: &LiePair, b: &Matrix, eps: f64) -> QuotientEndo {
    let g = pair.ambient();
    let sc = g.structure_constants();
    let bc = g.coords_unchecked(b);
    let k = g.dim();
    let mut ad = Matrix::zeros(k, k);
    for (i, c) in bc.iter().enumerate() {
        ad += sc.ad_matrix(i) * (*c * eps);
    }
    let mut series = Matrix::identity(k, k);
    let mut term = Matrix::identity(k, k);
    for n in 1..40 {
        term = &term * &ad / n as f64;
        series += &term;
    }
    let d = pair.dim_comp();
    let mut out = Matrix::zeros(d, d);
    for (j, c) in pair.comp_basis().iter().enumerate() {
        let v = &series * holab_core::Vector::from(g.coords_unchecked(c));
        let (_, cc) = pair.split_unchecked(&g.element(v.as_slice()));
        for i in 0..d {
            out[(i, j)] = cc[i];
        }
    }
    QuotientEndo(out)
}

#[test]
fn flatness_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, pair) in catalog::pairs() {
        for _ in 0..100 {
            let (b1, b2) = (random_sub(&pair, &mut rng), random_sub(&pair, &mut rng));
            let r = pair.bott_flatness_residual(&b1, &b2).unwrap();
            assert!(r <= 1e-10, "{name}: {r:e}");
        }
    }
}

#[test]
fn bott_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (name, pair) in catalog::pairs() {
        for _ in 0..20 {
            let (b1, b2) = (random_sub(&pair, &mut rng), random_sub(&pair, &mut rng));
            let lambda = rng.gen_range(-2.0..2.0);
            let lhs = pair.bott(&(&b1 * lambda + &b2)).unwrap();
            let rhs = QuotientEndo(pair.bott(&b1).unwrap().0 * lambda + pair.bott(&b2).unwrap().0);
            assert!(lhs.distance(&rhs) <= 1e-12, "{name}");
        }
    }
}

#[test]
fn exp_ad_rep_is_a_one_parameter_group() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (name, pair) in catalog::pairs() {
        for _ in 0..10 {
            let b = random_sub(&pair, &mut rng);
            let (e1, e2) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let lhs = pair.exp_ad_rep(&b, e1 + e2).unwrap();
            let rhs = pair.exp_ad_rep(&b, e1).unwrap().compose(&pair.exp_ad_rep(&b, e2).unwrap());
            assert!(lhs.distance(&rhs) <= 1e-10, "{name}");
        }
    }
}

#[test]
fn exp_ad_rep_matches_ad_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (name, pair) in catalog::pairs() {
        for _ in 0..10 {
            let b = random_sub(&pair, &mut rng);
            let eps = rng.gen_range(-0.8..0.8);
            let conj = pair.exp_ad_rep(&b, eps).unwrap();
            let series = ad_series_rep(&pair, &b, eps);
            assert!(conj.distance(&series) <= 1e-12, "{name}: {:e}", conj.distance(&series));
        }
    }
}

#[test]
fn differentiation_error_is_second_order() {
    // sl2_borel at H has an exact scalar oracle, so the ratio is well defined.
    let pair = catalog::sl2_borel();
    let [h, _, _] = catalog::sl2_basis();
    let exact = pair.bott(&h).unwrap();
    let err = |eps: f64| pair.differentiate_rep(&h, eps).unwrap().distance(&exact);
    let ratio = err(1e-2) / err(5e-3);
    assert!((3.9..4.1).contains(&ratio), "{ratio}");
    // Closed form: sinh(2 eps) / eps - 2 = 4 eps^2 / 3 + ...
    let eps = 1e-2;
    let closed = ((2.0f64 * eps).sinh() / eps - 2.0).abs();
    assert!((err(eps) - closed).abs() < 1e-10);
}

#[test]
fn differentiation_matches_bott_on_every_basis_vector() {
    for (name, pair) in catalog::pairs() {
        for b in pair.sub_basis().basis() {
            let d = pair.differentiate_rep(b, 1e-4).unwrap();
            assert!(d.distance(&pair.bott(b).unwrap()) <= 1e-7, "{name}");
        }
    }
}

#[test]
fn ideals_are_invariant_under_adjoint_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (name, pair) in catalog::pairs() {
        if !pair.is_ideal().is_ideal {
            continue;
        }
        for _ in 0..10 {
            let coords: Vec<f64> = (0..pair.ambient().dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let g = holab_core::mexp(&pair.ambient().element(&coords)).unwrap();
            let g_inv = holab_core::mexp(&(pair.ambient().element(&coords) * -1.0)).unwrap();
            for hj in pair.sub_basis().basis() {
                let moved = &g * hj * &g_inv;
                assert!(pair.proj_comp(&moved).unwrap().norm() <= 1e-9, "{name}");
            }
        }
    }
}

#[test]
fn ideal_flags_on_catalog() {
    let expect = [("sl2_borel", false), ("heisenberg_center", true), ("so3_in_so3_plus_r", true), ("so3_axis", false)];
    for (name, ideal) in expect {
        assert_eq!(catalog::pair_by_name(name).unwrap().is_ideal().is_ideal, ideal, "{name}");
    }
}
