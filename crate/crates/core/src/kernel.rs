//! Separable expansions of kernels on products of spheres.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sphere::harmonics::{ExtensionDerivatives, HarmonicDictionary};
use crate::sphere::{
    build_grid, random_unit, restricted, tangent_basis, SphereGrid, SphericalFunction,
};

pub const DEFAULT_TOL: f64 = 1e-10;
const RESIDUAL_SAMPLES: usize = 200;
const RESIDUAL_SEED: u64 = 0x7e57;
const NORM_GRID_DEGREE: usize = 40;

/// A function on `(S^{n-1})^m`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    fn arity(&self) -> usize;
    fn eval(&self, points: &[DVector<f64>]) -> f64;
}

/// Kernel from a closure.
pub struct FnKernel<F> {
    dim: usize,
    arity: usize,
    f: F,
}

impl<F: Fn(&[DVector<f64>]) -> f64 + Send + Sync> FnKernel<F> {
    pub fn new(dim: usize, arity: usize, f: F) -> Self {
        Self { dim, arity, f }
    }
}

impl<F: Fn(&[DVector<f64>]) -> f64 + Send + Sync> Kernel for FnKernel<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, points: &[DVector<f64>]) -> f64 {
        (self.f)(points)
    }
}

/// `sum c * Y_{i_1}(x_1) ... Y_{i_m}(x_m)` over explicit index tuples.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    dict: Arc<HarmonicDictionary>,
    arity: usize,
    entries: Vec<(Vec<usize>, f64)>,
}

impl HarmonicTable {
    /// Entries are tuples of `(degree, position)` labels with a coefficient.
    pub fn new(
        n: usize,
        max_degree: usize,
        entries: &[(Vec<(usize, usize)>, f64)],
    ) -> Result<Self> {
        let dict = HarmonicDictionary::shared(n, max_degree)?;
        let arity = entries.first().map(|e| e.0.len()).unwrap_or(1);
        let mut out = Vec::with_capacity(entries.len());
        for (labels, c) in entries {
            if labels.len() != arity {
                return Err(Error::DimensionMismatch {
                    expected: arity,
                    got: labels.len(),
                });
            }
            let idx = labels
                .iter()
                .map(|&(l, i)| {
                    dict.index_of(l, i).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "no harmonic {l}:{i} up to degree {max_degree}"
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push((idx, *c));
        }
        Ok(Self {
            dict,
            arity,
            entries: out,
        })
    }

    pub fn with_arity(mut self, arity: usize) -> Result<Self> {
        if !self.entries.is_empty() && arity != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: arity,
            });
        }
        self.arity = arity;
        Ok(self)
    }

    pub fn dictionary(&self) -> &Arc<HarmonicDictionary> {
        &self.dict
    }

    pub fn max_degree(&self) -> usize {
        self.dict.max_degree()
    }

    pub fn entries(&self) -> &[(Vec<usize>, f64)] {
        &self.entries
    }
}

impl Kernel for HarmonicTable {
    fn dim(&self) -> usize {
        self.dict.dim()
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, points: &[DVector<f64>]) -> f64 {
        let values: Vec<Vec<f64>> = points.iter().map(|x| self.dict.values(x)).collect();
        self.entries
            .iter()
            .map(|(idx, c)| c * idx.iter().zip(&values).map(|(&i, v)| v[i]).product::<f64>())
            .sum()
    }
}

/// `f_1(x_1) ... f_m(x_m)`.
pub struct SeparableKernel {
    factors: Vec<Arc<dyn SphericalFunction>>,
}

impl SeparableKernel {
    pub fn new(factors: Vec<Arc<dyn SphericalFunction>>) -> Result<Self> {
        let n = factors
            .first()
            .ok_or_else(|| Error::InvalidInput("separable kernel without factors".into()))?
            .dim();
        if let Some(f) = factors.iter().find(|f| f.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.dim(),
            });
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Arc<dyn SphericalFunction>] {
        &self.factors
    }
}

impl Kernel for SeparableKernel {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }
    fn arity(&self) -> usize {
        self.factors.len()
    }
    fn eval(&self, points: &[DVector<f64>]) -> f64 {
        self.factors
            .iter()
            .zip(points)
            .map(|(f, x)| f.value(x))
            .product()
    }
}

/// One factor of a separable term.
#[derive(Clone)]
pub enum Factor {
    Harmonic {
        dict: Arc<HarmonicDictionary>,
        index: usize,
        scale: f64,
    },
    Function {
        f: Arc<dyn SphericalFunction>,
        scale: f64,
    },
}

impl std::fmt::Debug for Factor {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factor::Harmonic { dict, index, scale } => {
                write!(fmt, "Harmonic({} x {scale})", dict.label_string(*index))
            }
            Factor::Function { scale, .. } => write!(fmt, "Function(x {scale})"),
        }
    }
}

/// Per-point cache of harmonic derivatives shared by all harmonic factors.
#[derive(Default)]
pub struct PointCache {
    values: Option<(usize, Vec<f64>)>,
    derivatives: Option<(usize, Vec<ExtensionDerivatives>)>,
}

fn dict_key(dict: &Arc<HarmonicDictionary>) -> usize {
    Arc::as_ptr(dict) as usize
}

impl Factor {
    pub fn scale(&self) -> f64 {
        match self {
            Factor::Harmonic { scale, .. } | Factor::Function { scale, .. } => *scale,
        }
    }

    fn with_scale(&self, s: f64) -> Self {
        match self {
            Factor::Harmonic { dict, index, .. } => Factor::Harmonic {
                dict: dict.clone(),
                index: *index,
                scale: s,
            },
            Factor::Function { f, .. } => Factor::Function {
                f: f.clone(),
                scale: s,
            },
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_cached(x, &mut PointCache::default())
    }

    /// Value at `x`; `cache` must only be reused for the same point.
    pub fn value_cached(&self, x: &DVector<f64>, cache: &mut PointCache) -> f64 {
        match self {
            Factor::Harmonic { dict, index, scale } => {
                let key = dict_key(dict);
                if cache.values.as_ref().map(|c| c.0) != Some(key) {
                    cache.values = Some((key, dict.values(x)));
                }
                scale * cache.values.as_ref().unwrap().1[*index]
            }
            Factor::Function { f, scale } => scale * f.value(x),
        }
    }

    /// Value, gradient and ambient Hessian of the extension at `x`.
    pub fn derivatives_cached(
        &self,
        x: &DVector<f64>,
        cache: &mut PointCache,
    ) -> ExtensionDerivatives {
        match self {
            Factor::Harmonic { dict, index, scale } => {
                let key = dict_key(dict);
                if cache.derivatives.as_ref().map(|c| c.0) != Some(key) {
                    cache.derivatives = Some((key, dict.derivatives(x)));
                }
                let d = &cache.derivatives.as_ref().unwrap().1[*index];
                ExtensionDerivatives {
                    value: scale * d.value,
                    gradient: &d.gradient * *scale,
                    hessian: &d.hessian * *scale,
                }
            }
            Factor::Function { f, scale } => {
                let hessian = f
                    .ambient_hessian(x)
                    .unwrap_or_else(|| crate::sphere::ambient_hessian_fd(f.as_ref(), x));
                ExtensionDerivatives {
                    value: scale * f.value(x),
                    gradient: f.gradient(x) * *scale,
                    hessian: hessian * *scale,
                }
            }
        }
    }

    /// `D^2 f(x)` in the tangent frame `v`.
    pub fn restricted_hessian_cached(
        &self,
        x: &DVector<f64>,
        v: &DMatrix<f64>,
        cache: &mut PointCache,
    ) -> DMatrix<f64> {
        restricted(&self.derivatives_cached(x, cache).hessian, v)
    }
}

/// A rank-one term `f_1 (x) ... (x) f_m` with the coefficient folded into `f_1`.
#[derive(Debug, Clone)]
pub struct Term {
    pub factors: Vec<Factor>,
    /// Magnitude of the expansion coefficient (1 for given separable terms).
    pub weight: f64,
}

/// Finite separable expansion of a kernel.
#[derive(Debug, Clone)]
pub struct TensorDecomposition {
    n: usize,
    arity: usize,
    terms: Vec<Term>,
    discarded: Vec<Term>,
    residual: f64,
    tol: f64,
}

impl TensorDecomposition {
    /// The exact one-term decomposition of a separable kernel.
    pub fn separable(factors: Vec<Arc<dyn SphericalFunction>>) -> Result<Self> {
        let kernel = SeparableKernel::new(factors)?;
        let n = kernel.dim();
        let arity = kernel.arity();
        let term = Term {
            factors: kernel
                .factors
                .iter()
                .map(|f| Factor::Function {
                    f: f.clone(),
                    scale: 1.0,
                })
                .collect(),
            weight: 1.0,
        };
        Ok(Self {
            n,
            arity,
            terms: vec![term],
            discarded: vec![],
            residual: 0.0,
            tol: 0.0,
        })
    }

    /// Decomposition from explicit terms.
    pub fn from_terms(n: usize, arity: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.factors.len() != arity {
                return Err(Error::DimensionMismatch {
                    expected: arity,
                    got: t.factors.len(),
                });
            }
        }
        Ok(Self {
            n,
            arity,
            terms,
            discarded: vec![],
            residual: 0.0,
            tol: 0.0,
        })
    }

    /// The zero kernel.
    pub fn zero(n: usize, arity: usize) -> Self {
        Self {
            n,
            arity,
            terms: vec![],
            discarded: vec![],
            residual: 0.0,
            tol: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sup-norm reconstruction error on the random test tuples.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `a F + b G` as a decomposition (terms concatenated).
    pub fn linear_combination(a: f64, f: &Self, b: f64, g: &Self) -> Result<Self> {
        if f.n != g.n || f.arity != g.arity {
            return Err(Error::DimensionMismatch {
                expected: f.arity,
                got: g.arity,
            });
        }
        let scaled = |d: &Self, s: f64| -> Vec<Term> {
            d.terms
                .iter()
                .map(|t| {
                    let mut factors = t.factors.clone();
                    factors[0] = factors[0].with_scale(factors[0].scale() * s);
                    Term {
                        factors,
                        weight: t.weight * s.abs(),
                    }
                })
                .collect()
        };
        let mut terms = scaled(f, a);
        terms.extend(scaled(g, b));
        Ok(Self {
            n: f.n,
            arity: f.arity,
            terms,
            discarded: vec![],
            residual: 0.0,
            tol: f.tol.max(g.tol),
        })
    }
}

/// Expands `kernel` in tensor products of harmonics up to `max_degree` per
/// factor, keeping coefficients larger than `tol` in magnitude.
pub fn decompose_kernel(
    kernel: &dyn Kernel,
    max_degree: usize,
    tol: f64,
) -> Result<TensorDecomposition> {
    let n = kernel.dim();
    let m = kernel.arity();
    if m == 0 {
        return Err(Error::InvalidInput(
            "kernel needs at least one factor".into(),
        ));
    }
    let dict = HarmonicDictionary::shared(n, max_degree)?;
    let grid = build_grid(n, max_degree.max(2))?;
    let g = grid.len();
    let d = dict.len();

    // W[k, i] = w_k Y_i(x_k)
    let table = dict.table(&grid);
    let mut w = table.clone();
    for k in 0..g {
        for i in 0..d {
            w[(k, i)] *= grid.weights()[k];
        }
    }

    // sample on the product grid, last factor fastest
    let total = g
        .checked_pow(m as u32)
        .ok_or_else(|| Error::Unsupported("product grid too large".into()))?;
    let mut samples = Vec::with_capacity(total);
    let mut idx = vec![0usize; m];
    let mut pts: Vec<DVector<f64>> = vec![grid.nodes()[0].clone(); m];
    for _ in 0..total {
        for (slot, &k) in idx.iter().enumerate() {
            pts[slot] = grid.nodes()[k].clone();
        }
        samples.push(kernel.eval(&pts));
        for slot in (0..m).rev() {
            idx[slot] += 1;
            if idx[slot] < g {
                break;
            }
            idx[slot] = 0;
        }
    }

    // contract each mode with W
    let mut tensor = samples;
    let mut shape = vec![g; m];
    for mode in 0..m {
        tensor = contract_mode(&tensor, &shape, mode, &w);
        shape[mode] = d;
    }

    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    let mut multi = vec![0usize; m];
    for &a in &tensor {
        let factors: Vec<Factor> = multi
            .iter()
            .enumerate()
            .map(|(slot, &i)| Factor::Harmonic {
                dict: dict.clone(),
                index: i,
                scale: if slot == 0 { a } else { 1.0 },
            })
            .collect();
        let term = Term {
            factors,
            weight: a.abs(),
        };
        if a.abs() > tol {
            kept.push(term);
        } else if a != 0.0 {
            discarded.push(term);
        }
        for slot in (0..m).rev() {
            multi[slot] += 1;
            if multi[slot] < d {
                break;
            }
            multi[slot] = 0;
        }
    }
    kept.sort_by(|a, b| b.weight.total_cmp(&a.weight));

    let mut decomposition = TensorDecomposition {
        n,
        arity: m,
        terms: kept,
        discarded,
        residual: 0.0,
        tol,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(RESIDUAL_SEED);
    let mut residual: f64 = 0.0;
    for _ in 0..RESIDUAL_SAMPLES {
        let pts: Vec<DVector<f64>> = (0..m).map(|_| random_unit(&mut rng, n)).collect();
        residual = residual.max((kernel.eval(&pts) - reconstruct(&decomposition, &pts)?).abs());
    }
    decomposition.residual = residual;
    let limit = 10.0 * tol;
    if residual > limit {
        return Err(Error::ReconstructionFailure { residual, limit });
    }
    Ok(decomposition)
}

fn contract_mode(tensor: &[f64], shape: &[usize], mode: usize, w: &DMatrix<f64>) -> Vec<f64> {
    let outer: usize = shape[..mode].iter().product();
    let inner: usize = shape[mode + 1..].iter().product();
    let (g, d) = (w.nrows(), w.ncols());
    debug_assert_eq!(shape[mode], g);
    let mut out = vec![0.0; outer * d * inner];
    for o in 0..outer {
        for k in 0..g {
            let src = &tensor[(o * g + k) * inner..(o * g + k + 1) * inner];
            for i in 0..d {
                let wk = w[(k, i)];
                if wk == 0.0 {
                    continue;
                }
                let dst = &mut out[(o * d + i) * inner..(o * d + i + 1) * inner];
                for (t, s) in dst.iter_mut().zip(src) {
                    *t += wk * s;
                }
            }
        }
    }
    out
}

/// `sum_j prod_i f_i^j(x_i)`.
pub fn reconstruct(decomposition: &TensorDecomposition, points: &[DVector<f64>]) -> Result<f64> {
    if points.len() != decomposition.arity {
        return Err(Error::DimensionMismatch {
            expected: decomposition.arity,
            got: points.len(),
        });
    }
    let mut caches: Vec<PointCache> = (0..points.len()).map(|_| PointCache::default()).collect();
    let mut total = 0.0;
    for term in &decomposition.terms {
        let mut p = 1.0;
        for ((f, x), cache) in term.factors.iter().zip(points).zip(caches.iter_mut()) {
            p *= f.value_cached(x, cache);
        }
        total += p;
    }
    Ok(total)
}

/// Cumulative sums of `prod_i ||f_i^j||_{C^{l_i}}` over the kept terms.
#[derive(Debug, Clone)]
pub struct NormLedger {
    pub partial_sums: Vec<f64>,
    /// Same products summed over the discarded terms.
    pub tail: f64,
    pub monotone: bool,
    /// Set when the tail exceeds `1e-3` of the total.
    pub flagged: bool,
}

impl NormLedger {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }
}

/// Grid estimates of `C^0`, `C^1`, `C^2` norms of a factor (unscaled).
fn factor_norms(f: &Factor, grid: &SphereGrid) -> [f64; 3] {
    let mut sup = [0.0f64; 3];
    let unit = f.with_scale(1.0);
    for x in grid.nodes() {
        let d = unit.derivatives_cached(x, &mut PointCache::default());
        update_sup(&mut sup, x, &d);
    }
    [sup[0], sup[0] + sup[1], sup[0] + sup[1] + sup[2]]
}

fn update_sup(sup: &mut [f64; 3], x: &DVector<f64>, d: &ExtensionDerivatives) {
    let grad = &d.gradient - x * d.gradient.dot(x);
    let v = tangent_basis(x);
    let m = v.ncols();
    let spherical = restricted(&d.hessian, &v) - DMatrix::identity(m, m) * d.value;
    let op = SymmetricEigen::new(spherical).eigenvalues.amax();
    sup[0] = sup[0].max(d.value.abs());
    sup[1] = sup[1].max(grad.norm());
    sup[2] = sup[2].max(op);
}

pub fn norm_bound_report(decomposition: &TensorDecomposition, l: &[usize]) -> Result<NormLedger> {
    if l.len() != decomposition.arity {
        return Err(Error::DimensionMismatch {
            expected: decomposition.arity,
            got: l.len(),
        });
    }
    if l.iter().any(|&li| li > 2) {
        return Err(Error::Unsupported("norms beyond C^2".into()));
    }
    let grid = build_grid(decomposition.n, NORM_GRID_DEGREE)?;

    // harmonic norms are shared across terms; compute them once per dictionary
    let mut harmonic: Option<(Arc<HarmonicDictionary>, Vec<[f64; 3]>)> = None;
    let all_terms = decomposition.terms.iter().chain(&decomposition.discarded);
    for term in all_terms.clone() {
        for f in &term.factors {
            if let Factor::Harmonic { dict, .. } = f {
                if harmonic.is_none() {
                    harmonic = Some((dict.clone(), harmonic_norms(dict, &grid)));
                }
            }
        }
    }
    let norm_of = |f: &Factor, li: usize| -> f64 {
        let base = match (f, &harmonic) {
            (Factor::Harmonic { dict, index, .. }, Some((hd, table))) if Arc::ptr_eq(dict, hd) => {
                table[*index][li]
            }
            _ => factor_norms(f, &grid)[li],
        };
        base * f.scale().abs()
    };
    let product = |t: &Term| -> f64 {
        t.factors
            .iter()
            .zip(l)
            .map(|(f, &li)| norm_of(f, li))
            .product()
    };

    let mut partial_sums = Vec::with_capacity(decomposition.terms.len());
    let mut acc = 0.0;
    for t in &decomposition.terms {
        acc += product(t);
        partial_sums.push(acc);
    }
    let tail: f64 = decomposition.discarded.iter().map(product).sum();
    let monotone = partial_sums.windows(2).all(|w| w[1] >= w[0]);
    let flagged = tail > 1e-3 * acc;
    Ok(NormLedger {
        partial_sums,
        tail,
        monotone,
        flagged,
    })
}

fn harmonic_norms(dict: &HarmonicDictionary, grid: &SphereGrid) -> Vec<[f64; 3]> {
    let mut sup = vec![[0.0f64; 3]; dict.len()];
    for x in grid.nodes() {
        for (s, d) in sup.iter_mut().zip(dict.derivatives(x)) {
            update_sup(s, x, &d);
        }
    }
    sup.into_iter()
        .map(|s| [s[0], s[0] + s[1], s[0] + s[1] + s[2]])
        .collect()
}
