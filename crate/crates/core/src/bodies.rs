//! Convex bodies given by their support functions.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::harmonics::{HarmonicDictionary, HarmonicExpansion};
use crate::sphere::{
    build_grid, restricted, tangent_basis, Smoothness, SphereGrid, SphericalFunction,
};

/// Smallest admissible eigenvalue of `D^2 h` for a certified smooth body.
pub const CONVEXITY_THRESHOLD: f64 = 1e-6;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyKind {
    Ellipsoid,
    Ball,
    PerturbedBall,
    Polytope,
    MinkowskiCombination,
}

#[derive(Debug, Clone)]
enum Shape {
    Ellipsoid(DMatrix<f64>),
    Ball(f64),
    PerturbedBall {
        radius: f64,
        perturbation: HarmonicExpansion,
    },
    Polytope {
        vertices: Vec<DVector<f64>>,
        lower_dimensional: bool,
    },
    Combination(Vec<(f64, Arc<ConvexBody>)>),
}

/// A convex body in `R^n`, translated by a fixed vector.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    translation: DVector<f64>,
}

/// Ellipsoid `{x : <x, A^{-1} x> <= 1}` with support function `sqrt(<x, A x>)`.
pub fn make_ellipsoid(a: &DMatrix<f64>) -> Result<ConvexBody> {
    let n = a.nrows();
    if !a.is_square() || n < 2 {
        return Err(Error::InvalidInput(format!(
            "ellipsoid matrix must be square with n >= 2, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if (a - a.transpose()).abs().max() > SYMMETRY_TOLERANCE * a.abs().max().max(1.0) {
        return Err(Error::InvalidInput(
            "ellipsoid matrix is not symmetric".into(),
        ));
    }
    let sym = (a + a.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(sym.clone()).eigenvalues.min();
    if min_eigenvalue.is_nan() || min_eigenvalue <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue });
    }
    Ok(ConvexBody {
        dim: n,
        shape: Shape::Ellipsoid(sym),
        translation: DVector::zeros(n),
    })
}

pub fn make_ball(n: usize, radius: f64) -> Result<ConvexBody> {
    if n < 2 || radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidInput(format!(
            "ball needs n >= 2 and radius >= 0, got n = {n}, r = {radius}"
        )));
    }
    Ok(ConvexBody {
        dim: n,
        shape: Shape::Ball(radius),
        translation: DVector::zeros(n),
    })
}

/// Ball of radius `radius` perturbed by a harmonic expansion, certified on `grid`.
pub fn make_perturbed_ball(
    radius: f64,
    perturbation: HarmonicExpansion,
    grid: &SphereGrid,
) -> Result<ConvexBody> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "perturbed ball radius must be positive, got {radius}"
        )));
    }
    let n = perturbation.dim();
    if grid.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grid.dim(),
        });
    }
    let body = ConvexBody {
        dim: n,
        shape: Shape::PerturbedBall {
            radius,
            perturbation,
        },
        translation: DVector::zeros(n),
    };
    let (node, eigenvalue) = min_curvature(&body, grid);
    if eigenvalue < CONVEXITY_THRESHOLD {
        return Err(Error::ConvexityViolation { node, eigenvalue });
    }
    Ok(body)
}

/// Convex hull of `vertices`, represented by its support function.
pub fn make_polytope(vertices: Vec<DVector<f64>>) -> Result<ConvexBody> {
    let n = vertices
        .first()
        .ok_or_else(|| Error::InvalidInput("polytope needs at least one vertex".into()))?
        .len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "polytope dimension must be at least 2".into(),
        ));
    }
    if let Some(v) = vertices.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidInput(
            "polytope vertex has non-finite coordinate".into(),
        ));
    }
    let lower_dimensional = affine_rank(&vertices) < n;
    Ok(ConvexBody {
        dim: n,
        shape: Shape::Polytope {
            vertices,
            lower_dimensional,
        },
        translation: DVector::zeros(n),
    })
}

fn affine_rank(vertices: &[DVector<f64>]) -> usize {
    let n = vertices[0].len();
    if vertices.len() < 2 {
        return 0;
    }
    let diffs = DMatrix::from_fn(n, vertices.len() - 1, |i, j| {
        vertices[j + 1][i] - vertices[0][i]
    });
    let scale = diffs.abs().max();
    if scale == 0.0 {
        return 0;
    }
    diffs.svd(false, false).rank(1e-10 * scale)
}

/// Minkowski combination `sum_i lambda_i K_i`.
pub fn minkowski_support(bodies: &[ConvexBody], lambdas: &[f64]) -> Result<ConvexBody> {
    let first = bodies
        .first()
        .ok_or_else(|| Error::InvalidInput("empty Minkowski combination".into()))?;
    if bodies.len() != lambdas.len() {
        return Err(Error::DimensionMismatch {
            expected: bodies.len(),
            got: lambdas.len(),
        });
    }
    let n = first.dim;
    let mut terms = Vec::with_capacity(bodies.len());
    for (b, &l) in bodies.iter().zip(lambdas) {
        if b.dim != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.dim,
            });
        }
        if l.is_nan() || l < 0.0 {
            return Err(Error::InvalidInput(format!(
                "Minkowski coefficient must be non-negative, got {l}"
            )));
        }
        terms.push((l, Arc::new(b.clone())));
    }
    Ok(ConvexBody {
        dim: n,
        shape: Shape::Combination(terms),
        translation: DVector::zeros(n),
    })
}

/// Smallest eigenvalue of `D^2 h` over the grid nodes.
pub fn convexity_certificate(body: &ConvexBody, grid: &SphereGrid) -> Result<f64> {
    if !body.is_smooth() {
        return Err(Error::InvalidInput(
            "convexity certificate needs a smooth body".into(),
        ));
    }
    if grid.dim() != body.dim {
        return Err(Error::DimensionMismatch {
            expected: body.dim,
            got: grid.dim(),
        });
    }
    Ok(min_curvature(body, grid).1)
}

fn min_curvature(body: &ConvexBody, grid: &SphereGrid) -> (usize, f64) {
    let mut worst = (0, f64::INFINITY);
    for (k, x) in grid.nodes().iter().enumerate() {
        let v = tangent_basis(x);
        let h = body.restricted_hessian(x, &v).expect("smooth body");
        let e = SymmetricEigen::new(h).eigenvalues.min();
        if e < worst.1 || e.is_nan() {
            worst = (k, e);
        }
    }
    worst
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> BodyKind {
        match self.shape {
            Shape::Ellipsoid(_) => BodyKind::Ellipsoid,
            Shape::Ball(_) => BodyKind::Ball,
            Shape::PerturbedBall { .. } => BodyKind::PerturbedBall,
            Shape::Polytope { .. } => BodyKind::Polytope,
            Shape::Combination(_) => BodyKind::MinkowskiCombination,
        }
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// The body shifted by `v`.
    pub fn translated(&self, v: &DVector<f64>) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut b = self.clone();
        b.translation += v;
        Ok(b)
    }

    /// The dilate `lambda K` for `lambda >= 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        minkowski_support(std::slice::from_ref(self), &[lambda])
    }

    /// The reflection `-K`, with support function `x -> h_K(-x)`.
    pub fn reflected(&self) -> Self {
        let shape = match &self.shape {
            Shape::Ellipsoid(_) | Shape::Ball(_) => self.shape.clone(),
            Shape::PerturbedBall {
                radius,
                perturbation,
            } => {
                let dict = perturbation.dictionary().clone();
                let coeffs = perturbation
                    .coefficients()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if dict.degree(i) % 2 == 1 { -c } else { *c })
                    .collect();
                let perturbation = HarmonicExpansion::new(dict, coeffs).expect("same dictionary");
                Shape::PerturbedBall {
                    radius: *radius,
                    perturbation,
                }
            }
            Shape::Polytope {
                vertices,
                lower_dimensional,
            } => Shape::Polytope {
                vertices: vertices.iter().map(|v| -v).collect(),
                lower_dimensional: *lower_dimensional,
            },
            Shape::Combination(terms) => Shape::Combination(
                terms
                    .iter()
                    .map(|(l, b)| (*l, Arc::new(b.reflected())))
                    .collect(),
            ),
        };
        Self {
            dim: self.dim,
            shape,
            translation: -&self.translation,
        }
    }

    /// Whether the support function is `C^2` with closed-form derivatives.
    pub fn is_smooth(&self) -> bool {
        match &self.shape {
            Shape::Polytope { .. } => false,
            Shape::Combination(terms) => terms.iter().all(|(l, b)| *l == 0.0 || b.is_smooth()),
            _ => true,
        }
    }

    /// Polytope vertices, translation included.
    pub fn vertices(&self) -> Option<Vec<DVector<f64>>> {
        match &self.shape {
            Shape::Polytope { vertices, .. } => {
                Some(vertices.iter().map(|v| v + &self.translation).collect())
            }
            _ => None,
        }
    }

    /// Whether a polytope's vertices span less than `R^n` affinely.
    pub fn is_lower_dimensional(&self) -> bool {
        matches!(
            self.shape,
            Shape::Polytope {
                lower_dimensional: true,
                ..
            }
        )
    }

    pub fn ellipsoid_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.shape {
            Shape::Ellipsoid(a) => Some(a),
            _ => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Ball(r) => Some(*r),
            Shape::PerturbedBall { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    pub fn perturbation(&self) -> Option<&HarmonicExpansion> {
        match &self.shape {
            Shape::PerturbedBall { perturbation, .. } => Some(perturbation),
            _ => None,
        }
    }

    /// Terms of a Minkowski combination.
    pub fn terms(&self) -> Option<&[(f64, Arc<ConvexBody>)]> {
        match &self.shape {
            Shape::Combination(t) => Some(t),
            _ => None,
        }
    }

    /// Support function at an arbitrary direction (not necessarily unit).
    pub fn support(&self, y: &DVector<f64>) -> f64 {
        let shape = match &self.shape {
            Shape::Ellipsoid(a) => y.dot(&(a * y)).max(0.0).sqrt(),
            Shape::Ball(r) => r * y.norm(),
            Shape::PerturbedBall {
                radius,
                perturbation,
            } => {
                let r = y.norm();
                if r == 0.0 {
                    0.0
                } else {
                    r * (radius + perturbation.value(&(y / r)))
                }
            }
            Shape::Polytope { vertices, .. } => vertices
                .iter()
                .map(|v| v.dot(y))
                .fold(f64::NEG_INFINITY, f64::max),
            Shape::Combination(terms) => terms
                .iter()
                .filter(|(l, _)| *l != 0.0)
                .map(|(l, b)| l * b.support(y))
                .sum(),
        };
        shape + self.translation.dot(y)
    }

    /// A point of the body where `<., y>` is maximal.
    pub fn support_point(&self, y: &DVector<f64>) -> DVector<f64> {
        let shape = match &self.shape {
            Shape::Ellipsoid(a) => {
                let ay = a * y;
                let q = y.dot(&ay);
                if q > 0.0 {
                    ay / q.sqrt()
                } else {
                    DVector::zeros(self.dim)
                }
            }
            Shape::Ball(r) => {
                let norm = y.norm();
                if norm > 0.0 {
                    y * (*r / norm)
                } else {
                    DVector::zeros(self.dim)
                }
            }
            Shape::PerturbedBall { .. } => {
                let norm = y.norm();
                if norm > 0.0 {
                    self.gradient_shape(&(y / norm))
                } else {
                    DVector::zeros(self.dim)
                }
            }
            Shape::Polytope { vertices, .. } => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, v) in vertices.iter().enumerate() {
                    let d = v.dot(y);
                    if d > best_val {
                        best_val = d;
                        best = i;
                    }
                }
                vertices[best].clone()
            }
            Shape::Combination(terms) => {
                let mut p = DVector::zeros(self.dim);
                for (l, b) in terms.iter().filter(|(l, _)| *l != 0.0) {
                    p.axpy(*l, &b.support_point(y), 1.0);
                }
                p
            }
        };
        shape + &self.translation
    }

    /// Gradient of the untranslated support function at a unit vector.
    fn gradient_shape(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.shape {
            Shape::PerturbedBall {
                radius,
                perturbation,
            } => x * *radius + perturbation.gradient(x),
            _ => self.support_point(x) - &self.translation,
        }
    }

    /// Ambient Hessian of the support function at a unit vector, when smooth.
    pub fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = self.dim;
        match &self.shape {
            Shape::Ellipsoid(a) => {
                let ax = a * x;
                let q = x.dot(&ax);
                Some((a * q - &ax * ax.transpose()) / q.powf(1.5))
            }
            Shape::Ball(r) => Some((DMatrix::identity(n, n) - x * x.transpose()) * *r),
            Shape::PerturbedBall {
                radius,
                perturbation,
            } => {
                let h = perturbation.derivatives(x).hessian;
                Some(h + (DMatrix::identity(n, n) - x * x.transpose()) * *radius)
            }
            Shape::Polytope { .. } => None,
            Shape::Combination(terms) => {
                let mut h = DMatrix::zeros(n, n);
                for (l, b) in terms.iter().filter(|(l, _)| *l != 0.0) {
                    h += b.hessian(x)? * *l;
                }
                Some(h)
            }
        }
    }

    /// `D^2 h(x)` in the tangent frame `v` (columns), when smooth.
    pub fn restricted_hessian(&self, x: &DVector<f64>, v: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        self.hessian(x).map(|h| restricted(&h, v))
    }

    /// Serializable description.
    pub fn to_spec(&self) -> BodySpec {
        let center = if self.translation.iter().all(|c| *c == 0.0) {
            None
        } else {
            Some(self.translation.iter().copied().collect())
        };
        match &self.shape {
            Shape::Ellipsoid(a) => BodySpec::Ellipsoid {
                matrix: rows(a),
                center,
            },
            Shape::Ball(r) => BodySpec::Ball {
                radius: *r,
                dim: Some(self.dim),
                center,
            },
            Shape::PerturbedBall {
                radius,
                perturbation,
            } => BodySpec::PerturbedBall {
                radius: *radius,
                coeffs: perturbation
                    .labelled()
                    .into_iter()
                    .map(|((l, i), c)| (format!("{l}:{i}"), c))
                    .collect(),
                dim: Some(self.dim),
                center,
            },
            Shape::Polytope { vertices, .. } => BodySpec::Polytope {
                vertices: vertices
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
                center,
            },
            Shape::Combination(terms) => BodySpec::Minkowski {
                terms: terms
                    .iter()
                    .map(|(l, b)| MinkowskiTerm {
                        weight: *l,
                        body: b.to_spec(),
                    })
                    .collect(),
                center,
            },
        }
    }

    /// Builds a body from its description; `n` is the default dimension for
    /// kinds whose description does not fix it.
    pub fn from_spec(spec: &BodySpec, n: usize) -> Result<Self> {
        let (body, center) = match spec {
            BodySpec::Ellipsoid { matrix, center } => {
                (make_ellipsoid(&matrix_from_rows(matrix)?)?, center)
            }
            BodySpec::Ball {
                radius,
                dim,
                center,
            } => (make_ball(dim.unwrap_or(n), *radius)?, center),
            BodySpec::PerturbedBall {
                radius,
                coeffs,
                dim,
                center,
            } => {
                let n = dim.unwrap_or(n);
                let mut entries = Vec::with_capacity(coeffs.len());
                for (label, c) in coeffs {
                    entries.push((parse_label(label)?, *c));
                }
                let perturbation = HarmonicExpansion::from_labels(n, &entries)?;
                let grid = reference_grid(n)?;
                (make_perturbed_ball(*radius, perturbation, &grid)?, center)
            }
            BodySpec::Polytope { vertices, center } => (
                make_polytope(
                    vertices
                        .iter()
                        .map(|v| DVector::from_column_slice(v))
                        .collect(),
                )?,
                center,
            ),
            BodySpec::Minkowski { terms, center } => {
                let bodies = terms
                    .iter()
                    .map(|t| Self::from_spec(&t.body, n))
                    .collect::<Result<Vec<_>>>()?;
                let weights: Vec<f64> = terms.iter().map(|t| t.weight).collect();
                (minkowski_support(&bodies, &weights)?, center)
            }
        };
        match center {
            Some(c) => body.translated(&DVector::from_column_slice(c)),
            None => Ok(body),
        }
    }
}

impl SphericalFunction for ConvexBody {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.support(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.gradient_shape(x) + &self.translation
    }

    fn ambient_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.hessian(x)
    }

    fn smoothness(&self) -> Smoothness {
        match &self.shape {
            Shape::Ellipsoid(_) | Shape::Ball(_) => Smoothness::AnalyticClosedForm,
            Shape::PerturbedBall { .. } => Smoothness::Spectral,
            Shape::Polytope { .. } => Smoothness::FiniteDifference,
            Shape::Combination(terms) => terms
                .iter()
                .map(|(_, b)| b.smoothness())
                .max_by_key(|s| match s {
                    Smoothness::AnalyticClosedForm => 0,
                    Smoothness::Spectral => 1,
                    Smoothness::FiniteDifference => 2,
                })
                .unwrap_or(Smoothness::AnalyticClosedForm),
        }
    }
}

/// Ellipsoid `A = Q diag(lambda) Q^T` with `lambda` uniform in `[lo, hi]`
/// and `Q` the orthogonal factor of a random matrix.
pub fn random_ellipsoid(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Result<ConvexBody> {
    if !(0.0 < lo && lo <= hi) {
        return Err(Error::InvalidInput(format!(
            "eigenvalue range [{lo}, {hi}] must be positive"
        )));
    }
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
        .qr()
        .q();
    let lambda = DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi));
    let a = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    make_ellipsoid(&((&a + a.transpose()) * 0.5))
}

/// Ball perturbed by harmonics of degrees `1..=max_degree` with coefficients
/// uniform in `[-amplitude, amplitude]`, certified on `grid`.
pub fn random_perturbed_ball(
    rng: &mut impl Rng,
    radius: f64,
    max_degree: usize,
    amplitude: f64,
    grid: &SphereGrid,
) -> Result<ConvexBody> {
    let dict = HarmonicDictionary::shared(grid.dim(), max_degree)?;
    let coeffs = (0..dict.len())
        .map(|i| {
            if dict.degree(i) == 0 {
                0.0
            } else {
                rng.gen_range(-amplitude..=amplitude)
            }
        })
        .collect();
    make_perturbed_ball(radius, HarmonicExpansion::new(dict, coeffs)?, grid)
}

/// Smooth test body with a random center in `[-1/2, 1/2]^n`: an ellipsoid
/// with eigenvalues in `[1/2, 2]` for even `index`, otherwise a perturbed
/// ball of radius 3/2 with degree at most 3.
pub fn random_smooth_body(
    rng: &mut impl Rng,
    index: usize,
    grid: &SphereGrid,
) -> Result<ConvexBody> {
    let n = grid.dim();
    let body = if index.is_multiple_of(2) {
        random_ellipsoid(rng, n, 0.5, 2.0)?
    } else {
        random_perturbed_ball(rng, 1.5, 3, 0.03, grid)?
    };
    body.translated(&DVector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5)))
}

/// Grid used to certify perturbed balls read from descriptions.
pub fn reference_grid(n: usize) -> Result<SphereGrid> {
    let degree = match n {
        2 => 40,
        3 => 20,
        4 => 10,
        _ => 6,
    };
    build_grid(n, degree)
}

/// Parses a harmonic label `"l:i"`.
pub fn parse_label(label: &str) -> Result<(usize, usize)> {
    let bad = || {
        Error::InvalidInput(format!(
            "harmonic label must look like \"l:i\", got {label:?}"
        ))
    };
    let (l, i) = label.split_once(':').ok_or_else(bad)?;
    Ok((
        l.trim().parse().map_err(|_| bad())?,
        i.trim().parse().map_err(|_| bad())?,
    ))
}

fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(
            "matrix must be a non-empty square array".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// JSON description of a body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    PerturbedBall {
        radius: f64,
        #[serde(default)]
        coeffs: BTreeMap<String, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Minkowski {
        terms: Vec<MinkowskiTerm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinkowskiTerm {
    pub weight: f64,
    pub body: BodySpec,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{random_unit, restricted_hessian_fd, FnSpherical};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn e(i: usize, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn ellipsoid_examples() {
        let id = make_ellipsoid(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(
            id.value(&random_unit(&mut ChaCha8Rng::seed_from_u64(0), 3)),
            1.0,
            epsilon = 1e-15
        );
        let body = make_ellipsoid(&diag(&[4.0, 1.0, 1.0])).unwrap();
        let x = e(0, 3);
        assert_eq!(body.value(&x), 2.0);
        let v = tangent_basis(&x);
        let h = body.restricted_hessian(&x, &v).unwrap();
        assert!((h - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-14);
        assert!(matches!(
            make_ellipsoid(&diag(&[1.0, -1.0, 1.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(make_ellipsoid(&DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    }

    #[test]
    fn perturbed_ball_examples() {
        let grid = reference_grid(3).unwrap();
        let ball = make_perturbed_ball(1.0, HarmonicExpansion::from_labels(3, &[]).unwrap(), &grid)
            .unwrap();
        assert_relative_eq!(
            convexity_certificate(&ball, &grid).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let small = HarmonicExpansion::from_labels(3, &[((2, 0), 0.01)]).unwrap();
        let body = make_perturbed_ball(1.0, small, &grid).unwrap();
        assert!(convexity_certificate(&body, &grid).unwrap() > 0.9);
        let huge = HarmonicExpansion::from_labels(3, &[((2, 0), 10.0)]).unwrap();
        assert!(matches!(
            make_perturbed_ball(1.0, huge, &grid),
            Err(Error::ConvexityViolation { .. })
        ));
    }

    #[test]
    fn polytope_examples() {
        let cube: Vec<DVector<f64>> = (0..8)
            .map(|m| DVector::from_fn(3, |i, _| ((m >> i) & 1) as f64))
            .collect();
        let cube = make_polytope(cube).unwrap();
        assert_eq!(cube.value(&e(0, 3)), 1.0);
        assert_eq!(cube.value(&(-e(0, 3))), 0.0);
        assert!(!cube.is_lower_dimensional());

        let simplex = make_polytope(vec![DVector::zeros(3), e(0, 3), e(1, 3), e(2, 3)]).unwrap();
        let d = DVector::from_element(3, 1.0 / 3f64.sqrt());
        assert_relative_eq!(simplex.value(&d), 1.0 / 3f64.sqrt(), epsilon = 1e-15);

        let segment = make_polytope(vec![DVector::zeros(3), e(0, 3)]).unwrap();
        assert!(segment.is_lower_dimensional());
        assert!(make_polytope(vec![]).is_err());
        assert!(convexity_certificate(&cube, &reference_grid(3).unwrap()).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let b = make_ball(3, 1.0).unwrap();
        let two = minkowski_support(&[b.clone(), b.clone()], &[1.0, 1.0]).unwrap();
        let x = random_unit(&mut ChaCha8Rng::seed_from_u64(3), 3);
        assert_relative_eq!(two.value(&x), 2.0, epsilon = 1e-15);
        assert!(minkowski_support(std::slice::from_ref(&b), &[-1.0]).is_err());

        let ea = make_ellipsoid(&diag(&[2.0, 1.0, 0.5])).unwrap();
        let eb = make_ellipsoid(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.2, 0.0, 0.2, 1.5, 0.1, 0.0, 0.1, 0.8],
        ))
        .unwrap();
        let sum = minkowski_support(&[ea.clone(), eb.clone()], &[1.0, 1.0]).unwrap();
        let grid = build_grid(3, 8).unwrap();
        for x in grid.nodes() {
            assert!((sum.value(x) - ea.value(x) - eb.value(x)).abs() < 1e-12);
            let h = sum.hessian(x).unwrap() - ea.hessian(x).unwrap() - eb.hessian(x).unwrap();
            assert!(h.abs().max() < 1e-10);
        }
    }

    #[test]
    fn degenerate_ellipsoid_certificate_is_small() {
        let body = make_ellipsoid(&diag(&[1.0, 1.0, 1e-12])).unwrap();
        let c = convexity_certificate(&body, &build_grid(3, 12).unwrap()).unwrap();
        assert!((0.0..1e-3).contains(&c), "{c}");
    }

    #[test]
    fn translation_leaves_hessian_unchanged() {
        let body = make_ellipsoid(&diag(&[2.0, 1.0, 0.5])).unwrap();
        let shift = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let moved = body.translated(&shift).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_unit(&mut rng, 3);
            assert_relative_eq!(
                moved.value(&x),
                body.value(&x) + x.dot(&shift),
                epsilon = 1e-14
            );
            let v = tangent_basis(&x);
            let fd = FnSpherical::new(3, |y: &DVector<f64>| moved.value(y));
            let h = restricted_hessian_fd(&fd, &x, &v);
            assert!((h - body.restricted_hessian(&x, &v).unwrap()).abs().max() < 1e-8);
        }
    }

    #[test]
    fn ellipsoid_closed_form_matches_fd_at_100_nodes() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 0.4, -0.2, 0.4, 1.0, 0.3, -0.2, 0.3, 0.6]);
        let body = make_ellipsoid(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = random_unit(&mut rng, 3);
            let v = tangent_basis(&x);
            let fd = FnSpherical::new(3, |y: &DVector<f64>| body.value(y));
            let diff =
                restricted_hessian_fd(&fd, &x, &v) - body.restricted_hessian(&x, &v).unwrap();
            assert!(diff.abs().max() < 1e-6);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[0.1 + 0.2, 1.0 / 3.0, 1.0 / 3.0, std::f64::consts::PI],
        );
        let specs = vec![
            make_ellipsoid(&a)
                .unwrap()
                .translated(&DVector::from_vec(vec![1e-300, -7.25]))
                .unwrap()
                .to_spec(),
            make_ball(3, 2.0f64.sqrt()).unwrap().to_spec(),
            make_polytope(vec![
                DVector::from_vec(vec![0.1, 0.7]),
                DVector::from_vec(vec![1.0 / 7.0, 2.0]),
            ])
            .unwrap()
            .to_spec(),
            make_perturbed_ball(
                1.0,
                HarmonicExpansion::from_labels(3, &[((2, 1), 0.012345678901234567)]).unwrap(),
                &reference_grid(3).unwrap(),
            )
            .unwrap()
            .to_spec(),
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: BodySpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
            let body = ConvexBody::from_spec(&back, 3).unwrap();
            assert_eq!(body.to_spec(), spec);
        }
    }

    #[test]
    fn random_bodies_are_smooth_and_seeded() {
        let grid = reference_grid(3).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for i in 0..4 {
            let x = random_smooth_body(&mut a, i, &grid).unwrap();
            let y = random_smooth_body(&mut b, i, &grid).unwrap();
            assert!(x.is_smooth());
            assert_eq!(x.to_spec(), y.to_spec());
            assert!(convexity_certificate(&x, &grid).unwrap() > CONVEXITY_THRESHOLD);
        }
        let e = random_ellipsoid(&mut a, 3, 0.5, 2.0).unwrap();
        let eig = SymmetricEigen::new(e.ellipsoid_matrix().unwrap().clone()).eigenvalues;
        assert!(eig.min() >= 0.5 - 1e-12 && eig.max() <= 2.0 + 1e-12);
    }

    #[test]
    fn reflection_negates_directions() {
        let grid = reference_grid(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cube = make_polytope(
            (0..8)
                .map(|m| DVector::from_fn(3, |i, _| ((m >> i) & 1) as f64 + 0.1 * i as f64))
                .collect(),
        )
        .unwrap();
        let bodies = vec![
            random_smooth_body(&mut rng, 0, &grid).unwrap(),
            random_smooth_body(&mut rng, 1, &grid).unwrap(),
            cube.clone(),
            minkowski_support(&[cube, make_ball(3, 0.5).unwrap()], &[1.0, 2.0]).unwrap(),
        ];
        for b in &bodies {
            let r = b.reflected();
            for _ in 0..20 {
                let x = random_unit(&mut rng, 3);
                assert_relative_eq!(r.value(&x), b.value(&-&x), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn labels_parse() {
        assert_eq!(parse_label("3:4").unwrap(), (3, 4));
        assert!(parse_label("3-4").is_err());
    }
}
