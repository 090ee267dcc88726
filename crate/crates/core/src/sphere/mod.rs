//! Sphere grids, tangent frames, restricted Hessians and mixed discriminants.

mod discriminant;
mod function;
pub mod harmonics;
pub mod quadrature;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use discriminant::{
    determinant, mixed_discriminant, mixed_discriminant_matrices, mixed_discriminant_slices,
};
pub use function::{
    ambient_hessian_fd, extension_value, gradient_fd, restricted, restricted_hessian,
    restricted_hessian_fd, FnSpherical, Smoothness, SphericalFunction, SymForm, TangentBasis,
};
pub use quadrature::{unit_ball_volume, unit_sphere_area};

/// Uniformly distributed point on `S^{n-1}` by rejection from the cube.
pub fn random_unit(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v / r;
        }
    }
}

/// Points and weights of a product quadrature rule on `S^{n-1}`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    dim: usize,
    degree: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Polynomial degree the rule integrates exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate<F: Fn(&DVector<f64>) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

/// Product rule on `S^{n-1}`: Gauss rule in the polar cosine `x_n` (weight
/// `(1 - t^2)^{(n-3)/2}`, Gauss-Legendre for `n = 3`) times the rule on
/// `S^{n-2}`, bottoming out in a uniform rule on the circle.
///
/// Each factor uses `degree + 1` polar nodes and `2 (degree + 1)` circle
/// nodes, so the rule is exact through degree `2 degree + 1`.
pub fn build_grid(n: usize, degree: usize) -> Result<SphereGrid> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "sphere grid needs n >= 2, got {n}"
        )));
    }
    if degree < 2 {
        return Err(Error::InvalidInput(format!(
            "sphere grid needs degree >= 2, got {degree}"
        )));
    }
    let (nodes, weights) = product_rule(n, degree);
    Ok(SphereGrid {
        dim: n,
        degree,
        nodes,
        weights,
    })
}

fn product_rule(n: usize, degree: usize) -> (Vec<DVector<f64>>, Vec<f64>) {
    if n == 2 {
        let m = 2 * (degree + 1);
        let w = 2.0 * PI / m as f64;
        let nodes = (0..m)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / m as f64;
                DVector::from_vec(vec![phi.cos(), phi.sin()])
            })
            .collect();
        return (nodes, vec![w; m]);
    }
    let (inner_nodes, inner_weights) = product_rule(n - 1, degree);
    let (ts, tw) = quadrature::gauss_gegenbauer(degree + 1, (n as f64 - 3.0) / 2.0);
    let mut nodes = Vec::with_capacity(ts.len() * inner_nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (t, wt) in ts.iter().zip(&tw) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (y, wy) in inner_nodes.iter().zip(&inner_weights) {
            let mut x = DVector::zeros(n);
            for i in 0..n - 1 {
                x[i] = s * y[i];
            }
            x[n - 1] = *t;
            // renormalize to kill rounding in s
            let norm = x.norm();
            nodes.push(x / norm);
            weights.push(wt * wy);
        }
    }
    (nodes, weights)
}

/// Orthonormal basis of `T_x S^{n-1}`: the first `n - 1` columns of the
/// Householder reflection sending `e_n` to `x`.
pub fn tangent_basis(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut v = -x.clone();
    v[n - 1] += 1.0;
    let vv = v.norm_squared();
    let mut basis = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        basis[(j, j)] = 1.0;
        if vv > 0.0 {
            let scale = 2.0 * v[j] / vv;
            for i in 0..n {
                basis[(i, j)] -= scale * v[i];
            }
        }
    }
    basis
}
