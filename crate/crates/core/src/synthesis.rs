//! From a kernel-represented valuation to a finite combination of mixed
//! volumes, with independent evaluators for both sides.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{make_ball, make_perturbed_ball, ConvexBody};
use crate::error::{Error, Result};
use crate::family::{EllipsoidFamily, SpanningFrame};
use crate::kernel::{PointCache, TensorDecomposition};
use crate::sphere::harmonics::{HarmonicDictionary, HarmonicExpansion};
use crate::sphere::{
    mixed_discriminant_slices, restricted, tangent_basis, SphereGrid, SphericalFunction,
};

/// Allowed gap between the two evaluation routes of a combination,
/// relative to the sum of the absolute mixed-volume terms.
pub const ROUTE_TOLERANCE: f64 = 1e-6;
const MAX_DOUBLINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    #[default]
    None,
}

/// `mu(K) = sum_j int f_1^j D_{n-1}(D^2 h_K[k], D^2 f_2^j, ..., D^2 f_{n-k}^j)`.
#[derive(Debug, Clone)]
pub struct KernelValuation {
    n: usize,
    k: usize,
    decomposition: TensorDecomposition,
    parity: Parity,
}

impl KernelValuation {
    pub fn new(k: usize, decomposition: TensorDecomposition, parity: Parity) -> Result<Self> {
        let n = decomposition.dim();
        if k == 0 || k >= n {
            return Err(Error::InvalidInput(format!(
                "degree k must lie in 1..={}, got {k}",
                n - 1
            )));
        }
        if decomposition.arity() != n - k {
            return Err(Error::DimensionMismatch {
                expected: n - k,
                got: decomposition.arity(),
            });
        }
        Ok(Self {
            n,
            k,
            decomposition,
            parity,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn decomposition(&self) -> &TensorDecomposition {
        &self.decomposition
    }
}

fn require_smooth(body: &ConvexBody, n: usize) -> Result<()> {
    if body.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: body.dim(),
        });
    }
    if !body.is_smooth() {
        return Err(Error::InvalidInput(format!(
            "{:?} test body has a singular area measure; use a smooth body",
            body.kind()
        )));
    }
    Ok(())
}

struct KernelNode {
    weight: f64,
    point: DVector<f64>,
    basis: DMatrix<f64>,
    /// per term: `f_1(x)` and the flattened `D^2 f_l(x)` for `l >= 2`
    terms: Vec<(f64, Vec<Vec<f64>>)>,
}

/// Kernel valuation with all kernel data sampled on a grid.
pub struct KernelEvaluator {
    n: usize,
    k: usize,
    parity: Parity,
    nodes: Vec<KernelNode>,
}

impl KernelEvaluator {
    pub fn new(v: &KernelValuation, grid: &SphereGrid) -> Result<Self> {
        if grid.dim() != v.n {
            return Err(Error::DimensionMismatch {
                expected: v.n,
                got: grid.dim(),
            });
        }
        let nodes = grid
            .nodes()
            .par_iter()
            .zip(grid.weights())
            .map(|(x, &weight)| {
                let basis = tangent_basis(x);
                let mut cache = PointCache::default();
                let terms = v
                    .decomposition
                    .terms()
                    .iter()
                    .map(|t| {
                        let f1 = t.factors[0].value_cached(x, &mut cache);
                        let rest = t.factors[1..]
                            .iter()
                            .map(|f| {
                                f.restricted_hessian_cached(x, &basis, &mut cache)
                                    .as_slice()
                                    .to_vec()
                            })
                            .collect();
                        (f1, rest)
                    })
                    .collect();
                KernelNode {
                    weight,
                    point: x.clone(),
                    basis,
                    terms,
                }
            })
            .collect();
        Ok(Self {
            n: v.n,
            k: v.k,
            parity: v.parity,
            nodes,
        })
    }

    /// `mu(K)`, or `(mu(K) +- mu(-K)) / 2` for an even or odd valuation.
    pub fn evaluate(&self, body: &ConvexBody) -> Result<f64> {
        require_smooth(body, self.n)?;
        let direct = self.integrate(body);
        Ok(match self.parity {
            Parity::None => direct,
            Parity::Even => 0.5 * (direct + self.integrate(&body.reflected())),
            Parity::Odd => 0.5 * (direct - self.integrate(&body.reflected())),
        })
    }

    fn integrate(&self, body: &ConvexBody) -> f64 {
        let m = self.n - 1;
        self.nodes
            .par_iter()
            .map(|node| {
                let hk = body
                    .restricted_hessian(&node.point, &node.basis)
                    .expect("smooth body");
                let mut args: Vec<&[f64]> = vec![hk.as_slice(); self.k];
                let mut sum = 0.0;
                for (f1, rest) in &node.terms {
                    args.truncate(self.k);
                    args.extend(rest.iter().map(|r| r.as_slice()));
                    sum += f1 * mixed_discriminant_slices(m, &args);
                }
                node.weight * sum
            })
            .sum()
    }
}

pub fn evaluate_kernel_valuation(
    v: &KernelValuation,
    body: &ConvexBody,
    grid: &SphereGrid,
) -> Result<f64> {
    KernelEvaluator::new(v, grid)?.evaluate(body)
}

/// Multi-indices of length `len` and total `total`, lexicographically
/// decreasing (`(total, 0, ..)` first).
pub fn multi_indices(len: usize, total: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if len == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(len - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `g_alpha` sampled on grid nodes and projected onto harmonics.
#[derive(Debug, Clone)]
pub struct GAlpha {
    pub alpha: Vec<usize>,
    pub samples: Vec<f64>,
    pub g: HarmonicExpansion,
}

/// Degree of the harmonic carrier used for `g_alpha` on a grid.
pub fn projection_degree(n: usize, grid: &SphereGrid) -> usize {
    let cap = if n <= 3 { 60 } else { 8 };
    grid.degree().min(cap)
}

/// Splits the valuation into `sum_alpha int g_alpha dS_{n-1}(K[k], E[alpha])`
/// using the pointwise dual frame of the ellipsoid family.
pub fn accumulate_g_alpha(
    v: &KernelValuation,
    frame: &SpanningFrame,
    grid: &SphereGrid,
) -> Result<Vec<GAlpha>> {
    if frame.frames().len() != grid.len() {
        return Err(Error::InvalidInput(
            "dual frame was built on a different grid".into(),
        ));
    }
    let big_n = frame.frames().first().map(|f| f.span.ncols()).unwrap_or(0);
    let slots = v.n - v.k - 1;
    let alphas = multi_indices(big_n, slots);
    let position = |alpha: &[usize]| {
        alphas
            .iter()
            .position(|a| a == alpha)
            .expect("alpha enumerated")
    };
    let tuples = multi_indices_tuples(big_n, slots);
    let tuple_alpha: Vec<usize> = tuples
        .iter()
        .map(|t| {
            let mut a = vec![0; big_n];
            for &s in t {
                a[s] += 1;
            }
            position(&a)
        })
        .collect();

    let per_node: Vec<Vec<f64>> = frame
        .frames()
        .par_iter()
        .map(|pf| {
            let mut g = vec![0.0; alphas.len()];
            let mut cache = PointCache::default();
            for term in v.decomposition.terms() {
                let f1 = term.factors[0].value_cached(&pf.point, &mut cache);
                if f1 == 0.0 {
                    continue;
                }
                let psis: Vec<DVector<f64>> = term.factors[1..]
                    .iter()
                    .map(|f| {
                        pf.coefficients(
                            &f.restricted_hessian_cached(&pf.point, &pf.basis, &mut cache),
                        )
                    })
                    .collect();
                for (t, &a) in tuples.iter().zip(&tuple_alpha) {
                    let prod: f64 = t.iter().zip(&psis).map(|(&s, psi)| psi[s]).product();
                    g[a] += f1 * prod;
                }
            }
            g
        })
        .collect();

    let dict = HarmonicDictionary::shared(v.n, projection_degree(v.n, grid))?;
    alphas
        .into_iter()
        .enumerate()
        .map(|(i, alpha)| {
            let samples: Vec<f64> = per_node.iter().map(|g| g[i]).collect();
            let g = HarmonicExpansion::new(dict.clone(), dict.project(grid, &samples))?;
            Ok(GAlpha { alpha, samples, g })
        })
        .collect()
}

/// All ordered tuples in `[0, n)^len`.
fn multi_indices_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |s| {
                    let mut u = t.clone();
                    u.push(s);
                    u
                })
            })
            .collect();
    }
    out
}

/// Even or odd part of a harmonic expansion (harmonics of degree `l` have
/// parity `(-1)^l`).
pub fn parity_project(g: &HarmonicExpansion, parity: Parity) -> HarmonicExpansion {
    let keep = |l: usize| match parity {
        Parity::Even => l.is_multiple_of(2),
        Parity::Odd => l % 2 == 1,
        Parity::None => true,
    };
    let dict = g.dictionary().clone();
    let coeffs = g
        .coefficients()
        .iter()
        .enumerate()
        .map(|(i, c)| if keep(dict.degree(i)) { *c } else { 0.0 })
        .collect();
    HarmonicExpansion::new(dict, coeffs).expect("same dictionary")
}

/// `(g(x) + g(-x)) / 2` or `(g(x) - g(-x)) / 2` for any spherical function.
pub struct ParityPart<F> {
    inner: F,
    sign: f64,
}

impl<F: SphericalFunction> ParityPart<F> {
    pub fn new(inner: F, parity: Parity) -> Self {
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
            Parity::None => 0.0,
        };
        Self { inner, sign }
    }
}

impl<F: SphericalFunction> SphericalFunction for ParityPart<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        if self.sign == 0.0 {
            return self.inner.value(x);
        }
        0.5 * (self.inner.value(x) + self.sign * self.inner.value(&-x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.sign == 0.0 {
            return self.inner.gradient(x);
        }
        (self.inner.gradient(x) - self.inner.gradient(&-x) * self.sign) * 0.5
    }

    fn ambient_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let h = self.inner.ambient_hessian(x)?;
        if self.sign == 0.0 {
            return Some(h);
        }
        Some((h + self.inner.ambient_hessian(&-x)? * self.sign) * 0.5)
    }

    fn smoothness(&self) -> crate::sphere::Smoothness {
        self.inner.smoothness()
    }
}

/// `g = h_{L+} - h_{L-}` with `L-` a ball of radius `R` and `h_{L+} = R + g`.
#[derive(Debug, Clone)]
pub struct Convexified {
    pub plus: ConvexBody,
    pub minus: ConvexBody,
    pub radius: f64,
}

pub fn convexify(g: &HarmonicExpansion, grid: &SphereGrid) -> Result<Convexified> {
    let n = g.dim();
    let (lambda_min, g_max) = grid
        .nodes()
        .par_iter()
        .map(|x| {
            let d = g.derivatives(x);
            let h = restricted(&d.hessian, &tangent_basis(x));
            (SymmetricEigen::new(h).eigenvalues.min(), d.value.abs())
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let mut radius = f64::max(1.0, 2.0 * (-lambda_min).max(0.0) + g_max);
    let mut last = None;
    for _ in 0..=MAX_DOUBLINGS {
        match make_perturbed_ball(radius, g.clone(), grid) {
            Ok(plus) => {
                let minus = make_ball(n, radius)?;
                return Ok(Convexified {
                    plus,
                    minus,
                    radius,
                });
            }
            Err(e @ Error::ConvexityViolation { .. }) => {
                last = Some(e);
                radius *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::NumericalFailure(format!(
        "convexification failed after {MAX_DOUBLINGS} doublings (radius {radius:e}): {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// One summand `V(K[k], L+, E[alpha]) - V(K[k], L-, E[alpha])`.
#[derive(Debug, Clone)]
pub struct CombinationTerm {
    pub alpha: Vec<usize>,
    /// `h_{L+} - h_{L-}`.
    pub g: HarmonicExpansion,
    pub plus: ConvexBody,
    pub minus: ConvexBody,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct FiniteCombination {
    n: usize,
    k: usize,
    parity: Parity,
    family: EllipsoidFamily,
    terms: Vec<CombinationTerm>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Upper bound `2 C(C(n+1, 2) + n - k - 1, n - k - 1)` on the number of
/// mixed volumes.
pub fn mixed_volume_bound(n: usize, k: usize) -> usize {
    2 * binomial(n * (n + 1) / 2 + n - k - 1, n - k - 1)
}

impl FiniteCombination {
    pub fn new(
        n: usize,
        k: usize,
        parity: Parity,
        family: EllipsoidFamily,
        terms: Vec<CombinationTerm>,
    ) -> Result<Self> {
        if family.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: family.n(),
            });
        }
        for t in &terms {
            if t.alpha.len() != family.len() || t.alpha.iter().sum::<usize>() + k + 1 != n {
                return Err(Error::InvalidInput(format!(
                    "multi-index {:?} does not fit n = {n}, k = {k}",
                    t.alpha
                )));
            }
        }
        Ok(Self {
            n,
            k,
            parity,
            family,
            terms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn family(&self) -> &EllipsoidFamily {
        &self.family
    }

    pub fn terms(&self) -> &[CombinationTerm] {
        &self.terms
    }

    pub fn mixed_volume_count(&self) -> usize {
        2 * self.terms.len()
    }

    pub fn mixed_volume_bound(&self) -> usize {
        mixed_volume_bound(self.n, self.k)
    }
}

/// Builds the finite combination. Since `V(K[k], L, E[alpha])` integrates
/// `h_L / n`, each `h_{L+} - h_{L-}` carries `n g_alpha`.
pub fn synthesize(
    v: &KernelValuation,
    family: &EllipsoidFamily,
    frame: &SpanningFrame,
    grid: &SphereGrid,
) -> Result<FiniteCombination> {
    if family.n() != v.n {
        return Err(Error::DimensionMismatch {
            expected: v.n,
            got: family.n(),
        });
    }
    let gs = accumulate_g_alpha(v, frame, grid)?;
    let scale = v.n as f64;
    let terms = gs
        .into_iter()
        .map(|ga| {
            let scaled: Vec<f64> = ga.g.coefficients().iter().map(|c| c * scale).collect();
            let g = HarmonicExpansion::new(ga.g.dictionary().clone(), scaled)?;
            let g = match v.parity {
                Parity::None => g,
                p => parity_project(&g, p),
            };
            let c = convexify(&g, grid)?;
            Ok(CombinationTerm {
                alpha: ga.alpha,
                g,
                plus: c.plus,
                minus: c.minus,
                radius: c.radius,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteCombination::new(v.n, v.k, v.parity, family.clone(), terms)
}

struct CombinationNode {
    weight: f64,
    point: DVector<f64>,
    basis: DMatrix<f64>,
    ellipsoids: Vec<Vec<f64>>,
    /// per term: `(h_{L+}, h_{L-}, g)`
    supports: Vec<(f64, f64, f64)>,
}

/// Both evaluation routes of a finite combination.
#[derive(Debug, Clone, Copy)]
pub struct CombinationValue {
    /// `sum_alpha V(K[k], L+, E[alpha]) - V(K[k], L-, E[alpha])`.
    pub mixed_volumes: f64,
    /// `sum_alpha (1/n) int g_alpha dS_{n-1}(K[k], E[alpha])`.
    pub densities: f64,
    /// `sum_alpha |V(.., L+, ..)| + |V(.., L-, ..)|`.
    pub magnitude: f64,
}

/// Finite combination with bodies and family sampled on a grid.
pub struct CombinationEvaluator {
    n: usize,
    k: usize,
    alphas: Vec<Vec<usize>>,
    nodes: Vec<CombinationNode>,
}

impl CombinationEvaluator {
    pub fn new(comb: &FiniteCombination, grid: &SphereGrid) -> Result<Self> {
        if grid.dim() != comb.n {
            return Err(Error::DimensionMismatch {
                expected: comb.n,
                got: grid.dim(),
            });
        }
        let nodes = grid
            .nodes()
            .par_iter()
            .zip(grid.weights())
            .map(|(x, &weight)| {
                let basis = tangent_basis(x);
                let ellipsoids = comb
                    .family
                    .bodies()
                    .iter()
                    .map(|e| {
                        e.restricted_hessian(x, &basis)
                            .expect("ellipsoid")
                            .as_slice()
                            .to_vec()
                    })
                    .collect();
                let supports = comb
                    .terms
                    .iter()
                    .map(|t| (t.plus.value(x), t.minus.value(x), t.g.value(x)))
                    .collect();
                CombinationNode {
                    weight,
                    point: x.clone(),
                    basis,
                    ellipsoids,
                    supports,
                }
            })
            .collect();
        Ok(Self {
            n: comb.n,
            k: comb.k,
            alphas: comb.terms.iter().map(|t| t.alpha.clone()).collect(),
            nodes,
        })
    }

    /// Evaluates both routes without comparing them.
    pub fn evaluate_routes(&self, body: &ConvexBody) -> Result<CombinationValue> {
        require_smooth(body, self.n)?;
        let m = self.n - 1;
        let terms = self.alphas.len();
        let per_term = self
            .nodes
            .par_iter()
            .map(|node| {
                let hk = body
                    .restricted_hessian(&node.point, &node.basis)
                    .expect("smooth body");
                let mut out = vec![[0.0; 3]; terms];
                for (t, alpha) in self.alphas.iter().enumerate() {
                    let mut args: Vec<&[f64]> = vec![hk.as_slice(); self.k];
                    for (s, &a) in alpha.iter().enumerate() {
                        for _ in 0..a {
                            args.push(&node.ellipsoids[s]);
                        }
                    }
                    let d = node.weight * mixed_discriminant_slices(m, &args);
                    let (hp, hm, g) = node.supports[t];
                    out[t] = [hp * d, hm * d, g * d];
                }
                out
            })
            .reduce(
                || vec![[0.0; 3]; terms],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        for i in 0..3 {
                            x[i] += y[i];
                        }
                    }
                    a
                },
            );
        let n = self.n as f64;
        let mut value = CombinationValue {
            mixed_volumes: 0.0,
            densities: 0.0,
            magnitude: 0.0,
        };
        for [p, m, g] in per_term {
            value.mixed_volumes += (p - m) / n;
            value.densities += g / n;
            value.magnitude += (p.abs() + m.abs()) / n;
        }
        Ok(value)
    }

    /// Mixed-volume value, checked against the density route.
    pub fn evaluate(&self, body: &ConvexBody) -> Result<f64> {
        let v = self.evaluate_routes(body)?;
        let gap = (v.mixed_volumes - v.densities).abs();
        if gap > ROUTE_TOLERANCE * v.magnitude.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalFailure(format!(
                "combination routes disagree: {} vs {} (gap {gap:.3e})",
                v.mixed_volumes, v.densities
            )));
        }
        Ok(v.mixed_volumes)
    }
}

pub fn evaluate_combination(
    comb: &FiniteCombination,
    body: &ConvexBody,
    grid: &SphereGrid,
) -> Result<f64> {
    CombinationEvaluator::new(comb, grid)?.evaluate(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{make_ellipsoid, minkowski_support};
    use crate::family::{build_family, dual_frame};
    use crate::functionals::mixed_volume_smooth;
    use crate::kernel::{decompose_kernel, HarmonicTable, DEFAULT_TOL};
    use crate::sphere::build_grid;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn ellipsoid(v: &[f64]) -> ConvexBody {
        make_ellipsoid(&diag(v)).unwrap()
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(3, 0), vec![vec![0, 0, 0]]);
        assert_eq!(multi_indices(7, 1).len(), 7);
        assert_eq!(multi_indices(7, 2).len(), 28);
        assert_eq!(
            multi_indices(2, 2),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(mixed_volume_bound(3, 1), 14);
        assert_eq!(mixed_volume_bound(3, 2), 2);
    }

    #[test]
    fn separable_kernel_matches_mixed_volume() {
        let grid = build_grid(3, 16).unwrap();
        let l1 = ellipsoid(&[2.0, 1.0, 0.5]);
        let l2 = ellipsoid(&[1.0, 1.5, 0.8]);
        let body = ellipsoid(&[0.7, 1.2, 1.0]);
        let d = TensorDecomposition::separable(vec![Arc::new(l1.clone()), Arc::new(l2.clone())])
            .unwrap();
        let v = KernelValuation::new(1, d, Parity::None).unwrap();
        let mu = evaluate_kernel_valuation(&v, &body, &grid).unwrap();
        let mv = mixed_volume_smooth(&l1, &body, 1, &[&l2], &grid).unwrap();
        assert_relative_eq!(mu, 3.0 * mv, max_relative = 1e-7);
        let doubled = evaluate_kernel_valuation(&v, &body.scaled(2.0).unwrap(), &grid).unwrap();
        assert_relative_eq!(doubled, 2.0 * mu, max_relative = 1e-7);
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let grid = build_grid(3, 8).unwrap();
        let v = KernelValuation::new(1, TensorDecomposition::zero(3, 2), Parity::None).unwrap();
        assert_eq!(
            evaluate_kernel_valuation(&v, &ellipsoid(&[1.0, 2.0, 3.0]), &grid).unwrap(),
            0.0
        );
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let comb = synthesize(&v, &family, &frame, &grid).unwrap();
        assert_eq!(comb.terms().len(), 7);
        for t in comb.terms() {
            assert_eq!(t.radius, 1.0);
        }
        assert_eq!(
            evaluate_combination(&comb, &ellipsoid(&[1.0, 2.0, 3.0]), &grid).unwrap(),
            0.0
        );
    }

    #[test]
    fn top_degree_has_single_alpha() {
        let grid = build_grid(3, 12).unwrap();
        let l1 = ellipsoid(&[2.0, 1.0, 0.5]);
        let d = TensorDecomposition::separable(vec![Arc::new(l1.clone())]).unwrap();
        let v = KernelValuation::new(2, d, Parity::None).unwrap();
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let gs = accumulate_g_alpha(&v, &frame, &grid).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].alpha, vec![0; 7]);
        for (s, x) in gs[0].samples.iter().zip(grid.nodes()) {
            assert_relative_eq!(*s, l1.value(x), epsilon = 1e-14);
        }
        let comb = synthesize(&v, &family, &frame, &grid).unwrap();
        assert_eq!(comb.mixed_volume_count(), 2);
    }

    #[test]
    fn family_member_concentrates_on_its_index() {
        let grid = build_grid(3, 8).unwrap();
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let member = family.bodies()[2].clone();
        for pf in frame.frames().iter().step_by(11) {
            let h = member.restricted_hessian(&pf.point, &pf.basis).unwrap();
            let psi = pf.coefficients(&h);
            assert!((pf.reconstruct(&psi) - &h).abs().max() < 1e-9);
        }
        let one: Arc<dyn SphericalFunction> = Arc::new(make_ball(3, 1.0).unwrap());
        let d = TensorDecomposition::separable(vec![one, Arc::new(member)]).unwrap();
        let v = KernelValuation::new(1, d, Parity::None).unwrap();
        let gs = accumulate_g_alpha(&v, &frame, &grid).unwrap();
        // g_alpha for the member's own index dominates the others
        let energy: Vec<f64> = gs
            .iter()
            .map(|g| g.samples.iter().map(|s| s * s).sum::<f64>())
            .collect();
        let best = energy
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(gs[best].alpha[2], 1);
    }

    #[test]
    fn round_trip_on_ellipsoids() {
        let grid = build_grid(3, 20).unwrap();
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let l1 = ellipsoid(&[2.0, 1.0, 0.5]);
        let l2 = make_ellipsoid(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, 0.0, 0.3, 1.5, 0.2, 0.0, 0.2, 0.8],
        ))
        .unwrap();
        let d = TensorDecomposition::separable(vec![Arc::new(l1), Arc::new(l2)]).unwrap();
        let v = KernelValuation::new(1, d, Parity::None).unwrap();
        let comb = synthesize(&v, &family, &frame, &grid).unwrap();
        assert!(comb.mixed_volume_count() <= 14);
        let kernel = KernelEvaluator::new(&v, &grid).unwrap();
        let eval = CombinationEvaluator::new(&comb, &grid).unwrap();
        for body in [ellipsoid(&[1.0, 1.0, 1.0]), ellipsoid(&[0.6, 1.8, 1.1])] {
            let a = kernel.evaluate(&body).unwrap();
            let b = eval.evaluate(&body).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-3);
            let t = eval.evaluate(&body.scaled(2.0).unwrap()).unwrap();
            assert_relative_eq!(t, 2.0 * b, max_relative = 1e-9);
        }
        // Minkowski polynomiality in t for K + tB, degree k = 1
        let body = ellipsoid(&[0.6, 1.8, 1.1]);
        let ball = make_ball(3, 1.0).unwrap();
        let vals: Vec<f64> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| {
                eval.evaluate(&minkowski_support(&[body.clone(), ball.clone()], &[1.0, t]).unwrap())
                    .unwrap()
            })
            .collect();
        assert!((vals[2] - 2.0 * vals[1] + vals[0]).abs() < 1e-9 * vals[2].abs());
    }

    #[test]
    fn parity_projections() {
        let g = HarmonicExpansion::from_labels(3, &[((0, 0), 1.0), ((1, 0), 0.5), ((2, 3), 0.2)])
            .unwrap();
        let even = parity_project(&g, Parity::Even);
        let odd = parity_project(&g, Parity::Odd);
        let x = DVector::from_vec(vec![0.36, 0.48, 0.8]);
        assert_relative_eq!(even.value(&x) + odd.value(&x), g.value(&x), epsilon = 1e-14);
        assert_eq!(even.value(&x), even.value(&-&x));
        let again = parity_project(&even, Parity::Even);
        assert_eq!(again.coefficients(), even.coefficients());

        let z = crate::sphere::FnSpherical::new(3, |y: &DVector<f64>| y[2]);
        let p = ParityPart::new(z, Parity::Even);
        assert_eq!(p.value(&x), 0.0);
        let e = ellipsoid(&[2.0, 1.0, 0.5])
            .translated(&DVector::from_vec(vec![0.1, 0.2, 0.3]))
            .unwrap();
        let pe = ParityPart::new(e, Parity::Even);
        assert_relative_eq!(
            pe.value(&x),
            (2.0 * 0.36f64.powi(2) + 0.48f64.powi(2) + 0.5 * 0.64f64).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn convexify_examples() {
        let grid = build_grid(3, 12).unwrap();
        let zero = HarmonicExpansion::from_labels(3, &[]).unwrap();
        let c = convexify(&zero, &grid).unwrap();
        assert_eq!(c.radius, 1.0);
        let g = HarmonicExpansion::from_labels(3, &[((2, 0), 3.0), ((2, 2), -1.0)]).unwrap();
        let c = convexify(&g, &grid).unwrap();
        let x = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        assert_relative_eq!(
            c.plus.value(&x) - c.minus.value(&x),
            g.value(&x),
            epsilon = 1e-12
        );
        assert_relative_eq!(c.plus.value(&x), c.plus.value(&-&x), epsilon = 1e-12);
    }

    #[test]
    fn even_parity_round_trip() {
        let grid = build_grid(3, 20).unwrap();
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let table = HarmonicTable::new(
            3,
            2,
            &[(vec![(0, 0), (0, 0)], 3.0), (vec![(1, 1), (1, 0)], 0.5)],
        )
        .unwrap();
        let d = decompose_kernel(&table, 2, DEFAULT_TOL).unwrap();
        let v = KernelValuation::new(1, d, Parity::Even).unwrap();
        let comb = synthesize(&v, &family, &frame, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for t in comb.terms() {
            for _ in 0..10 {
                let x = crate::sphere::random_unit(&mut rng, 3);
                assert!((t.plus.value(&x) - t.plus.value(&-&x)).abs() <= 1e-10);
                assert!((t.minus.value(&x) - t.minus.value(&-&x)).abs() <= 1e-10);
            }
        }
        let body = ellipsoid(&[0.6, 1.8, 1.1])
            .translated(&DVector::from_vec(vec![0.2, -0.1, 0.3]))
            .unwrap();
        let a = evaluate_kernel_valuation(&v, &body, &grid).unwrap();
        let b = evaluate_combination(&comb, &body, &grid).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
        assert_relative_eq!(
            b,
            evaluate_combination(&comb, &body.reflected(), &grid).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn harmonic_table_round_trip() {
        let grid = build_grid(3, 20).unwrap();
        let family = build_family(3).unwrap();
        let frame = dual_frame(&family, &grid).unwrap();
        let table = HarmonicTable::new(
            3,
            2,
            &[(vec![(0, 0), (0, 0)], 3.0), (vec![(1, 0), (2, 3)], 0.4)],
        )
        .unwrap();
        let d = decompose_kernel(&table, 2, DEFAULT_TOL).unwrap();
        let v = KernelValuation::new(1, d, Parity::None).unwrap();
        let comb = synthesize(&v, &family, &frame, &grid).unwrap();
        let body = ellipsoid(&[0.6, 1.8, 1.1]);
        let a = evaluate_kernel_valuation(&v, &body, &grid).unwrap();
        let b = evaluate_combination(&comb, &body, &grid).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
    }
}
