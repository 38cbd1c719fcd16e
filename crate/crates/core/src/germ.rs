//! Sampled germs of diffeomorphisms between slices, with their 1-jet at the base point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dist, Matrix};
use crate::pair::QuotientEndo;

/// How a holonomy map was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Conjugation by a subgroup element, then slide back onto the slice.
    Conjugation,
    /// Left translation by a bisection `sigma`, then right translation by `h^-1`.
    Bisection,
    /// Leafwise flow of a foliation, then slide onto the target transversal.
    LeafFlow,
    /// Source-fiber picture in the pair groupoid.
    PairGroupoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub output: Result<Vec<f64>>,
}

/// Sample table of a germ plus its linear part at the base point `0`.
#[derive(Debug, Clone)]
pub struct HolonomyMap {
    pub route: Route,
    /// The group element (or its flow-word description) that produced the map.
    pub element: Option<Matrix>,
    pub description: String,
    dim: usize,
    samples: Vec<Sample>,
    linear_part: QuotientEndo,
}

impl HolonomyMap {
    /// Evaluates `f` on `points` together with an axis stencil of half-width `jet_step`
    /// and extracts the linear part from the stencil.
    pub fn tabulate<F>(
        route: Route,
        description: impl Into<String>,
        dim: usize,
        points: &[Vec<f64>],
        jet_step: f64,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let inputs = stencil_inputs(dim, points, jet_step);
        let samples: Vec<Sample> = inputs
            .into_par_iter()
            .map(|input| {
                let output = f(&input);
                Sample { input, output }
            })
            .collect();
        Self::from_samples(route, description, dim, samples)
    }

    pub fn from_samples(
        route: Route,
        description: impl Into<String>,
        dim: usize,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let linear_part = stencil_jacobian(dim, &samples)?;
        Ok(Self { route, element: None, description: description.into(), dim, samples, linear_part })
    }

    pub fn with_element(mut self, element: Matrix) -> Self {
        self.element = Some(element);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn linear_part(&self) -> &QuotientEndo {
        &self.linear_part
    }

    /// Output at an input present in the table.
    pub fn lookup(&self, input: &[f64]) -> Option<&Result<Vec<f64>>> {
        self.samples.iter().find(|s| s.input == input).map(|s| &s.output)
    }

    /// Largest `|out - in|` over successful samples.
    pub fn max_displacement(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| s.output.as_ref().ok().map(|o| dist(o, &s.input)))
            .fold(0.0, f64::max)
    }

    /// Largest pointwise distance to another map on shared inputs.
    /// Samples that failed in either table are counted as infinite.
    pub fn max_deviation(&self, other: &HolonomyMap) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            if let Some(o) = other.lookup(&s.input) {
                let d = match (&s.output, o) {
                    (Ok(a), Ok(b)) => dist(a, b),
                    _ => f64::INFINITY,
                };
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Number of samples whose evaluation failed.
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.output.is_err()).count()
    }

    /// Linear part recomputed from the sample table.
    pub fn linearize(&self) -> Result<QuotientEndo> {
        stencil_jacobian(self.dim, &self.samples)
    }
}

/// `points` plus the origin and the `+-jet_step`, `+-2 jet_step` axis points, without
/// duplicates.
pub fn stencil_inputs(dim: usize, points: &[Vec<f64>], jet_step: f64) -> Vec<Vec<f64>> {
    let mut inputs: Vec<Vec<f64>> = points.to_vec();
    if !inputs.iter().any(|p| p.iter().all(|&x| x == 0.0)) {
        inputs.insert(0, vec![0.0; dim]);
    }
    for j in 0..dim {
        for s in [jet_step, -jet_step, 2.0 * jet_step, -2.0 * jet_step] {
            let mut p = vec![0.0; dim];
            p[j] = s;
            if !inputs.contains(&p) {
                inputs.push(p);
            }
        }
    }
    inputs
}

/// Degree-1 jet of a holonomy map at the base point, by central differences.
pub fn linearize(map: &HolonomyMap) -> Result<QuotientEndo> {
    map.linearize()
}

fn stencil_jacobian(dim: usize, samples: &[Sample]) -> Result<QuotientEndo> {
    let axis_output = |j: usize, step: f64| -> Option<&Vec<f64>> {
        samples
            .iter()
            .find(|s| s.input.iter().enumerate().all(|(i, &x)| if i == j { x == step } else { x == 0.0 }))
            .and_then(|s| s.output.as_ref().ok())
    };
    let mut jac = Matrix::zeros(dim, dim);
    for j in 0..dim {
        // Smallest symmetric axis pair with both evaluations available.
        let step = samples
            .iter()
            .filter(|s| s.output.is_ok())
            .map(|s| s.input[j])
            .filter(|&h| h > 0.0 && axis_output(j, h).is_some() && axis_output(j, -h).is_some())
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            return Err(Error::InsufficientStencil(format!("no symmetric pair of samples along axis {j}")));
        }
        let (p1, m1) = (axis_output(j, step).unwrap(), axis_output(j, -step).unwrap());
        let wide = axis_output(j, 2.0 * step).zip(axis_output(j, -2.0 * step));
        for i in 0..dim {
            let d1 = p1[i] - m1[i];
            jac[(i, j)] = match wide {
                // Fourth-order Richardson combination of the two central differences.
                Some((p2, m2)) => (8.0 * d1 - (p2[i] - m2[i])) / (12.0 * step),
                None => d1 / (2.0 * step),
            };
        }
    }
    Ok(QuotientEndo(jac))
}

/// Origin plus `+-rho e_j` for every axis.
pub fn axis_stencil(dim: usize, rho: f64) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dim]];
    for j in 0..dim {
        for s in [rho, -rho] {
            let mut p = vec![0.0; dim];
            p[j] = s;
            pts.push(p);
        }
    }
    pts
}

/// Nine points filling `[-rho, rho]^dim`: a line for one dimension, a `3 x 3` grid for
/// two, and the origin, axis points and diagonals otherwise.
pub fn nine_point_grid(dim: usize, rho: f64) -> Vec<Vec<f64>> {
    match dim {
        0 => vec![vec![]],
        1 => (0..9).map(|i| vec![-rho + rho * i as f64 / 4.0]).collect(),
        2 => {
            let ticks = [-rho, 0.0, rho];
            ticks.iter().flat_map(|&a| ticks.iter().map(move |&b| vec![a, b])).collect()
        }
        _ => {
            let mut pts = vec![vec![0.0; dim]];
            let mut j = 0;
            while pts.len() < 9 && j < dim {
                for s in [rho, -rho] {
                    let mut p = vec![0.0; dim];
                    p[j] = s;
                    pts.push(p);
                }
                j += 1;
            }
            let d = rho / 2f64.sqrt();
            let mut k = 0;
            while pts.len() < 9 {
                let mut p = vec![0.0; dim];
                p[k % dim] = if (k / dim) % 2 == 0 { d } else { -d };
                p[(k + 1) % dim] = d;
                pts.push(p);
                k += 1;
            }
            pts.truncate(9);
            pts
        }
    }
}
