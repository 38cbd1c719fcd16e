//! Holonomy action of a connected matrix subgroup `H` on a slice `S_e` through the
//! identity.
//!
//! The slice is the exponential chart `S_e = exp(C)` of the complement. An element
//! `h` of `H` acts by conjugation, `g -> h g h^-1`, followed by the slide back onto
//! `S_e` along the left cosets `H p` (the leaves of the right-invariant distribution
//! generated by the subalgebra). The same map is also produced through a bisection
//! `sigma(g) = eps(g) h` with `g -> sigma(g) g h^-1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expm::{mexp, mlog};
use crate::germ::{axis_stencil, nine_point_grid, HolonomyMap, Route};
use crate::matrix::{condition_number, dist, euclid, inverse, Matrix};
use crate::newton::{newton_solve, Jacobian, NewtonOptions};
use crate::pair::{IdealReport, LiePair, QuotientEndo};

pub const DEFAULT_RADIUS: f64 = 0.1;
pub const RADIUS_FLOOR: f64 = 1e-3;
/// Pointwise tolerance for calling a holonomy map trivial.
pub const TRIVIALITY_TOL: f64 = 1e-8;
/// Pointwise tolerance for declaring two holonomy maps equal on a grid.
pub const COLLISION_TOL: f64 = 1e-9;

/// An invertible matrix, optionally remembering a logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: Matrix,
    log: Option<Matrix>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n, n), log: Some(Matrix::zeros(n, n)) }
    }

    pub fn exp(x: &Matrix) -> Result<Self> {
        Ok(Self { matrix: mexp(x)?, log: Some(x.clone()) })
    }

    /// `exp(x_1) exp(x_2) ... exp(x_m)`.
    pub fn from_word(n: usize, word: &[Matrix]) -> Result<Self> {
        if word.len() == 1 {
            return Self::exp(&word[0]);
        }
        let mut m = Matrix::identity(n, n);
        for x in word {
            m *= mexp(x)?;
        }
        Ok(Self { matrix: m, log: None })
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        inverse(&matrix)?;
        Ok(Self { matrix, log: None })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn log(&self) -> Option<&Matrix> {
        self.log.as_ref()
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement { matrix: &self.matrix * &rhs.matrix, log: None }
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        Ok(GroupElement { matrix: inverse(&self.matrix)?, log: self.log.as_ref().map(|l| -l) })
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(&self.matrix)
    }
}

/// Result of sliding a point onto `S_e`: `exp(b) p = exp(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slide {
    /// Subalgebra coordinates of `b`.
    pub sub: Vec<f64>,
    /// Slice coordinates of the landing point.
    pub slice: Vec<f64>,
    pub residual: f64,
}

/// Report of [`SliceChart::chi_phi_probe`].
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// The two holonomy maps agree on the grid.
    pub chi_collision: bool,
    pub chi_distance: f64,
    /// `Phi(h1) = Phi(h2)`; `Phi` is the inclusion here.
    pub phi_equal: bool,
    pub phi_distance: f64,
    pub linear_parts: (QuotientEndo, QuotientEndo),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityWitness {
    /// Subalgebra coordinates `b` with `h = exp(b)`.
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct NormalityReport {
    pub ideal: IdealReport,
    pub chi_trivial: bool,
    pub max_deviation: f64,
    pub witness: Option<NormalityWitness>,
    /// `ideal.is_ideal == chi_trivial`.
    pub consistent: bool,
}

/// Exponential-chart slice `exp({c in C : |c| < r})` through the identity.
#[derive(Debug, Clone)]
pub struct SliceChart {
    pair: LiePair,
    radius: f64,
}

impl SliceChart {
    /// Validates the chart by sampling, halving the radius on failure down to
    /// [`RADIUS_FLOOR`].
    pub fn new(pair: LiePair, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("slice radius must be positive, got {radius}")));
        }
        let mut r = radius;
        loop {
            let chart = SliceChart { pair: pair.clone(), radius: r };
            match chart.validate() {
                Ok(()) => return Ok(chart),
                Err(e) => {
                    r /= 2.0;
                    if r < RADIUS_FLOOR {
                        return Err(Error::RadiusFloor { floor: RADIUS_FLOOR, reason: e.to_string() });
                    }
                }
            }
        }
    }

    pub fn with_default_radius(pair: LiePair) -> Result<Self> {
        Self::new(pair, DEFAULT_RADIUS)
    }

    fn validate(&self) -> Result<()> {
        let r = self.radius;
        let mut subs = vec![vec![0.0; self.pair.dim_sub()]];
        for (i, h) in self.pair.sub_basis().basis().iter().enumerate() {
            for s in [r, -r] {
                let mut b = vec![0.0; self.pair.dim_sub()];
                b[i] = s / h.norm();
                subs.push(b);
            }
        }
        let comps = axis_stencil(self.dim(), r);
        for b in &subs {
            for c in &comps {
                let p = mexp(&self.pair.sub_element(b))? * self.slice_point(c)?;
                let slide = self.slide_to_slice(&p)?;
                let err = dist(&slide.slice, c) + dist(&slide.sub, &b.iter().map(|x| -x).collect::<Vec<_>>());
                if err > 1e-8 {
                    return Err(Error::SlideFailed(format!("validation slide off by {err:.3e}")));
                }
            }
        }
        Ok(())
    }

    pub fn pair(&self) -> &LiePair {
        &self.pair
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Slice dimension, `dim C`.
    pub fn dim(&self) -> usize {
        self.pair.dim_comp()
    }

    pub fn matrix_size(&self) -> usize {
        self.pair.matrix_size()
    }

    /// Central-difference step for linear parts.
    pub fn jet_step(&self) -> f64 {
        1e-4 * self.radius
    }

    /// Axis stencil at radius `r / 10`.
    pub fn default_grid(&self) -> Vec<Vec<f64>> {
        axis_stencil(self.dim(), self.radius / 10.0)
    }

    /// Nine points inside `[-r/2, r/2]^dim`.
    pub fn nine_point_grid(&self) -> Vec<Vec<f64>> {
        nine_point_grid(self.dim(), self.radius / 2.0)
    }

    pub fn slice_point(&self, c: &[f64]) -> Result<Matrix> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "slice point has {} coordinates, slice is {}-dimensional",
                c.len(),
                self.dim()
            )));
        }
        mexp(&self.pair.comp_element(c))
    }

    /// `exp(b_1) ... exp(b_m)` for subalgebra coordinate vectors `b_i`.
    pub fn subgroup_element(&self, word: &[Vec<f64>]) -> Result<GroupElement> {
        for b in word {
            if b.len() != self.pair.dim_sub() {
                return Err(Error::DimensionMismatch("subalgebra coordinates".into()));
            }
        }
        let mats: Vec<Matrix> = word.iter().map(|b| self.pair.sub_element(b)).collect();
        if mats.is_empty() {
            return Ok(GroupElement::identity(self.matrix_size()));
        }
        GroupElement::from_word(self.matrix_size(), &mats)
    }

    fn split_log(&self, g: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(self.pair.split_unchecked(&mlog(g)?))
    }

    fn solve_sub<F>(&self, make: F, start: Vec<f64>) -> Result<(Vec<f64>, f64)>
    where
        F: Fn(&Matrix) -> Matrix,
    {
        let residual = |beta: &[f64]| -> Result<Vec<f64>> {
            let q = make(&mexp(&self.pair.sub_element(beta))?);
            Ok(self.split_log(&q)?.0)
        };
        let sol = newton_solve(residual, Jacobian::default(), &start, NewtonOptions::default())
            .map_err(|e| Error::SlideFailed(e.to_string()))?;
        Ok((sol.x, sol.residual_norm))
    }

    /// Finds `b` in the subalgebra with `exp(b) p` on the slice.
    pub fn slide_to_slice(&self, p: &Matrix) -> Result<Slide> {
        let (h0, _) = self.split_log(p).map_err(|e| Error::SlideFailed(e.to_string()))?;
        let start: Vec<f64> = h0.iter().map(|x| -x).collect();
        let (sub, residual) = self.solve_sub(|e| e * p, start)?;
        let landed = mexp(&self.pair.sub_element(&sub))? * p;
        let (_, slice) = self.split_log(&landed)?;
        Ok(Slide { sub, slice, residual })
    }

    /// `chi(h)(c)`: conjugate `exp(c)` by `h` and slide back onto the slice.
    pub fn chi_conj_at(&self, h: &GroupElement, c: &[f64]) -> Result<Vec<f64>> {
        let g = self.slice_point(c)?;
        let h_inv = h.inverse()?;
        // h g h^-1 = I + h (g - I) h^-1, exact at g = I.
        let n = self.matrix_size();
        let p = Matrix::identity(n, n) + h.matrix() * (g - Matrix::identity(n, n)) * h_inv.matrix();
        Ok(self.slide_to_slice(&p)?.slice)
    }

    /// `chi(h)(c)` through the bisection `sigma(g) = eps(g) h`, returning `sigma(g)` too.
    pub fn bisection_at(&self, h: &GroupElement, c: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let g = self.slice_point(c)?;
        let h_inv = h.inverse()?;
        let translate = |sigma: &Matrix| sigma * &g * h_inv.matrix();
        let (eps, _) = self.solve_sub(|e| translate(&(e * h.matrix())), vec![0.0; self.pair.dim_sub()])?;
        let sigma = mexp(&self.pair.sub_element(&eps))? * h.matrix();
        let (off, out) = self.split_log(&translate(&sigma))?;
        if euclid(&off) > 1e-10 {
            return Err(Error::SlideFailed(format!(
                "bisection image misses the slice by {:.3e}",
                euclid(&off)
            )));
        }
        Ok((out, sigma))
    }

    /// Conjugation route. Uses the default grid when `grid` is `None`.
    pub fn chi_conj(&self, h: &GroupElement, grid: Option<&[Vec<f64>]>) -> Result<HolonomyMap> {
        let default = self.default_grid();
        let pts = grid.unwrap_or(&default);
        Ok(HolonomyMap::tabulate(Route::Conjugation, "chi_conj", self.dim(), pts, self.jet_step(), |c| {
            self.chi_conj_at(h, c)
        })?
        .with_element(h.matrix().clone()))
    }

    /// Bisection route. Uses the default grid when `grid` is `None`.
    pub fn chi_via_bisection(&self, h: &GroupElement, grid: Option<&[Vec<f64>]>) -> Result<HolonomyMap> {
        let default = self.default_grid();
        let pts = grid.unwrap_or(&default);
        Ok(HolonomyMap::tabulate(Route::Bisection, "chi_via_bisection", self.dim(), pts, self.jet_step(), |c| {
            self.bisection_at(h, c).map(|(out, _)| out)
        })?
        .with_element(h.matrix().clone()))
    }

    /// Compares `chi` and `Phi` on two subgroup elements.
    pub fn chi_phi_probe(&self, h1: &GroupElement, h2: &GroupElement) -> Result<ProbeReport> {
        let m1 = self.chi_conj(h1, None)?;
        let m2 = self.chi_conj(h2, None)?;
        let chi_distance = m1.max_deviation(&m2);
        let phi_distance = (h1.matrix() - h2.matrix()).norm();
        Ok(ProbeReport {
            chi_collision: chi_distance <= COLLISION_TOL,
            chi_distance,
            phi_equal: phi_distance <= 1e-12,
            phi_distance,
            linear_parts: (m1.linear_part().clone(), m2.linear_part().clone()),
        })
    }

    /// Checks that the subalgebra is an ideal exactly when the holonomy action is trivial.
    ///
    /// Subgroup samples are `exp(0.3 h_i)` for each basis vector followed by seeded
    /// random `exp(b)` with coordinates in `[-0.3, 0.3]`.
    pub fn normality_equivalence(&self, sample_count: usize, seed: u64) -> Result<NormalityReport> {
        let ideal = self.pair.is_ideal();
        let m = self.pair.dim_sub();
        let mut subs: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut b = vec![0.0; m];
                b[i] = 0.3;
                b
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..sample_count {
            subs.push((0..m).map(|_| rng.gen_range(-0.3..=0.3)).collect());
        }
        let grid = self.default_grid();
        let mut worst: Option<NormalityWitness> = None;
        for b in &subs {
            let h = self.subgroup_element(std::slice::from_ref(b))?;
            for c in &grid {
                let out = self.chi_conj_at(&h, c)?;
                let deviation = dist(&out, c);
                if worst.as_ref().is_none_or(|w| deviation > w.deviation) {
                    worst = Some(NormalityWitness { h: b.clone(), c: c.clone(), deviation });
                }
            }
        }
        let max_deviation = worst.as_ref().map_or(0.0, |w| w.deviation);
        let chi_trivial = max_deviation <= TRIVIALITY_TOL;
        Ok(NormalityReport {
            ideal,
            chi_trivial,
            max_deviation,
            witness: if chi_trivial { None } else { worst },
            consistent: ideal.is_ideal == chi_trivial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn sl2_chart() -> SliceChart {
        SliceChart::with_default_radius(catalog::sl2_borel()).unwrap()
    }

    #[test]
    fn slide_of_slice_point_is_trivial() {
        let chart = sl2_chart();
        let c = [0.04];
        let s = chart.slide_to_slice(&chart.slice_point(&c).unwrap()).unwrap();
        assert!(euclid(&s.sub) < 1e-15);
        assert!((s.slice[0] - c[0]).abs() < 1e-15);
    }

    #[test]
    fn slide_cancels_subgroup_factor() {
        let chart = sl2_chart();
        let b0 = [0.05, -0.03];
        let c0 = [0.07];
        let p = mexp(&chart.pair().sub_element(&b0)).unwrap() * chart.slice_point(&c0).unwrap();
        let s = chart.slide_to_slice(&p).unwrap();
        assert!((s.sub[0] + b0[0]).abs() < 1e-11 && (s.sub[1] + b0[1]).abs() < 1e-11);
        assert!((s.slice[0] - c0[0]).abs() < 1e-11);
    }

    #[test]
    fn chi_of_identity_is_identity() {
        let chart = sl2_chart();
        let id = GroupElement::identity(2);
        let m = chart.chi_conj(&id, None).unwrap();
        assert!(m.max_displacement() < 1e-15);
        assert!(m.linear_part().distance(&QuotientEndo::identity(1)) < 1e-10);
        let b = chart.chi_via_bisection(&id, None).unwrap();
        assert!(b.max_displacement() < 1e-15);
    }

    #[test]
    fn base_point_is_fixed_exactly() {
        let chart = sl2_chart();
        let h = chart.subgroup_element(&[vec![0.3, 0.2]]).unwrap();
        let out = chart.chi_conj_at(&h, &[0.0]).unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn sl2_linear_part_is_exponential() {
        let chart = sl2_chart();
        for t in [0.1, 0.3] {
            let h = chart.subgroup_element(&[vec![t, 0.0]]).unwrap();
            let m = chart.chi_conj(&h, None).unwrap();
            assert!((m.linear_part().0[(0, 0)] - (-2.0 * t).exp()).abs() <= 1e-6);
        }
    }

    #[test]
    fn heisenberg_center_acts_trivially() {
        let chart = SliceChart::with_default_radius(catalog::heisenberg_center()).unwrap();
        let h = chart.subgroup_element(&[vec![1.7]]).unwrap();
        let m = chart.chi_conj(&h, Some(&chart.nine_point_grid())).unwrap();
        assert!(m.max_displacement() < 1e-14);
        let c = [0.02, -0.03];
        let (_, sigma) = chart.bisection_at(&h, &c).unwrap();
        assert!((sigma - h.matrix()).norm() < 1e-14);
    }

    #[test]
    fn probe_heisenberg_collision() {
        let chart = SliceChart::with_default_radius(catalog::heisenberg_center()).unwrap();
        let h1 = chart.subgroup_element(&[vec![1.0]]).unwrap();
        let h2 = chart.subgroup_element(&[vec![2.0]]).unwrap();
        let p = chart.chi_phi_probe(&h1, &h2).unwrap();
        assert!(p.chi_collision);
        assert!(!p.phi_equal);
    }

    #[test]
    fn probe_sl2_distinguishes() {
        let chart = sl2_chart();
        let h1 = chart.subgroup_element(&[vec![0.1, 0.0]]).unwrap();
        let h2 = chart.subgroup_element(&[vec![0.2, 0.0]]).unwrap();
        let p = chart.chi_phi_probe(&h1, &h2).unwrap();
        assert!(!p.chi_collision);
        assert!((p.linear_parts.0 .0[(0, 0)] - (-0.2f64).exp()).abs() < 1e-6);
        assert!((p.linear_parts.1 .0[(0, 0)] - (-0.4f64).exp()).abs() < 1e-6);
        let same = chart.chi_phi_probe(&h1, &h1).unwrap();
        assert!(same.chi_collision && same.phi_equal && same.chi_distance == 0.0);
    }

    #[test]
    fn normality_full_subalgebra_is_vacuous() {
        let pair = LiePair::new(catalog::sl2_algebra(), crate::algebra::Subspace::full(3)).unwrap();
        let chart = SliceChart::with_default_radius(pair).unwrap();
        assert_eq!(chart.dim(), 0);
        let rep = chart.normality_equivalence(3, 0).unwrap();
        assert!(rep.ideal.is_ideal && rep.chi_trivial && rep.consistent);
    }

    #[test]
    fn normality_sl2_has_witness() {
        let rep = sl2_chart().normality_equivalence(5, 0).unwrap();
        assert!(!rep.ideal.is_ideal && !rep.chi_trivial && rep.consistent);
        assert!(rep.witness.unwrap().deviation > 1e-3);
    }

    #[test]
    fn radius_must_be_positive() {
        assert!(SliceChart::new(catalog::sl2_borel(), 0.0).is_err());
    }
}
