//! Real spherical harmonics, evaluated together with the first and second
//! derivatives of their 1-homogeneous extensions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::{Smoothness, SphereGrid, SphericalFunction};
use crate::error::{Error, Result};

/// Largest ambient dimension with derivative support.
pub const MAX_DIM: usize = 5;
const MAX_DEGREE_S2: usize = 60;
const MAX_DEGREE_HIGH: usize = 8;

/// Scalars the harmonic recurrences run over.
pub trait Field: Copy {
    fn constant(c: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn scale(self, c: f64) -> Self;
}

impl Field for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Second-order forward-mode jet in `N` variables.
#[derive(Debug, Clone, Copy)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn var(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }
}

impl<const N: usize> Field for Jet<N> {
    fn constant(c: f64) -> Self {
        Self {
            v: c,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for j in 0..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }

    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
            for j in 0..N {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }

    fn mul(self, o: Self) -> Self {
        let mut r = Self::constant(self.v * o.v);
        for i in 0..N {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..N {
                r.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
            }
        }
        r
    }

    fn scale(mut self, c: f64) -> Self {
        self.v *= c;
        for i in 0..N {
            self.g[i] *= c;
            for j in 0..N {
                self.h[i][j] *= c;
            }
        }
        self
    }
}

/// Value, gradient and Hessian of a 1-homogeneous extension at a unit vector.
#[derive(Debug, Clone)]
pub struct ExtensionDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Converts the jet of a homogeneous polynomial `p` of degree `l` at the unit
/// vector `x` into derivatives of `|y|^{1-l} p(y)`.
fn extend<const N: usize>(p: &Jet<N>, l: usize, x: &[f64]) -> ExtensionDerivatives {
    let s = 1.0 - l as f64;
    let gradient = DVector::from_fn(N, |i, _| s * p.v * x[i] + p.g[i]);
    let hessian = DMatrix::from_fn(N, N, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        p.v * (s * delta + s * (s - 2.0) * x[i] * x[j])
            + s * (x[i] * p.g[j] + p.g[i] * x[j])
            + p.h[i][j]
    });
    ExtensionDerivatives {
        value: p.v,
        gradient,
        hessian,
    }
}

#[derive(Debug)]
enum Kind {
    Circle,
    Sphere2,
    /// Per degree: exponent vectors of the degree-`l` monomials and, per basis
    /// function, its coefficients over them.
    Monomial(Vec<(Vec<Vec<u32>>, Vec<Vec<f64>>)>),
}

/// Orthonormal real spherical harmonics on `S^{n-1}` up to a maximal degree,
/// grouped by degree. Entry `i` of degree `l` carries the label `"l:i"`.
#[derive(Debug)]
pub struct HarmonicDictionary {
    dim: usize,
    max_degree: usize,
    degrees: Vec<usize>,
    offsets: Vec<usize>,
    kind: Kind,
}

static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<HarmonicDictionary>>>> = OnceLock::new();

/// Dimension of the space of degree-`l` harmonics on `S^{n-1}`.
pub fn harmonic_space_dim(n: usize, l: usize) -> usize {
    let homog = |d: usize| binomial(d + n - 1, n - 1);
    if l < 2 {
        homog(l)
    } else {
        homog(l) - homog(l - 2)
    }
}

fn binomial(a: usize, b: usize) -> usize {
    let b = b.min(a - b.min(a));
    let mut r: u128 = 1;
    for i in 0..b {
        r = r * (a - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

impl HarmonicDictionary {
    /// Builds (or fetches from a process-wide cache) the dictionary.
    pub fn shared(n: usize, max_degree: usize) -> Result<Arc<Self>> {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(d) = cache
            .lock()
            .expect("dictionary cache poisoned")
            .get(&(n, max_degree))
        {
            return Ok(d.clone());
        }
        let dict = Arc::new(Self::new(n, max_degree)?);
        cache
            .lock()
            .expect("dictionary cache poisoned")
            .insert((n, max_degree), dict.clone());
        Ok(dict)
    }

    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::Unsupported(format!("harmonics in dimension {n}")));
        }
        let cap = if n <= 3 {
            MAX_DEGREE_S2
        } else {
            MAX_DEGREE_HIGH
        };
        if max_degree > cap {
            return Err(Error::Unsupported(format!(
                "harmonic degree {max_degree} exceeds {cap} in dimension {n}"
            )));
        }
        let mut degrees = Vec::new();
        let mut offsets = Vec::new();
        for l in 0..=max_degree {
            offsets.push(degrees.len());
            degrees.extend(std::iter::repeat_n(l, harmonic_space_dim(n, l)));
        }
        offsets.push(degrees.len());
        let kind = match n {
            2 => Kind::Circle,
            3 => Kind::Sphere2,
            _ => Kind::Monomial(orthonormal_monomial_basis(n, max_degree)),
        };
        Ok(Self {
            dim: n,
            max_degree,
            degrees,
            offsets,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn degree(&self, index: usize) -> usize {
        self.degrees[index]
    }

    /// `(degree, position within degree)`.
    pub fn label(&self, index: usize) -> (usize, usize) {
        let l = self.degrees[index];
        (l, index - self.offsets[l])
    }

    pub fn label_string(&self, index: usize) -> String {
        let (l, i) = self.label(index);
        format!("{l}:{i}")
    }

    pub fn index_of(&self, l: usize, i: usize) -> Option<usize> {
        if l > self.max_degree || self.offsets[l] + i >= self.offsets[l + 1] {
            return None;
        }
        Some(self.offsets[l] + i)
    }

    /// Range of indices of degree `l`.
    pub fn degree_range(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    /// Values of all harmonics at the unit vector `x`.
    pub fn values(&self, x: &DVector<f64>) -> Vec<f64> {
        let vars: Vec<f64> = x.iter().copied().collect();
        self.eval_generic(&vars)
    }

    /// Value, gradient and Hessian of the 1-homogeneous extension of every
    /// harmonic at the unit vector `x`.
    pub fn derivatives(&self, x: &DVector<f64>) -> Vec<ExtensionDerivatives> {
        match self.dim {
            2 => self.derivatives_n::<2>(x),
            3 => self.derivatives_n::<3>(x),
            4 => self.derivatives_n::<4>(x),
            5 => self.derivatives_n::<5>(x),
            _ => unreachable!("dimension checked at construction"),
        }
    }

    fn derivatives_n<const N: usize>(&self, x: &DVector<f64>) -> Vec<ExtensionDerivatives> {
        let vars: Vec<Jet<N>> = (0..N).map(|i| Jet::var(i, x[i])).collect();
        let jets = self.eval_generic(&vars);
        jets.iter()
            .enumerate()
            .map(|(i, p)| extend(p, self.degrees[i], x.as_slice()))
            .collect()
    }

    /// Values on every grid node, as a `nodes x harmonics` matrix.
    pub fn table(&self, grid: &SphereGrid) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(grid.len(), self.len());
        for (k, x) in grid.nodes().iter().enumerate() {
            for (i, v) in self.values(x).into_iter().enumerate() {
                t[(k, i)] = v;
            }
        }
        t
    }

    /// Coefficients of the orthogonal projection of grid data.
    pub fn project(&self, grid: &SphereGrid, values: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.len()];
        for ((x, w), f) in grid.nodes().iter().zip(grid.weights()).zip(values) {
            let wf = w * f;
            for (ci, y) in c.iter_mut().zip(self.values(x)) {
                *ci += wf * y;
            }
        }
        c
    }

    fn eval_generic<T: Field>(&self, vars: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        match &self.kind {
            Kind::Circle => circle(vars[0], vars[1], self.max_degree, &mut out),
            Kind::Sphere2 => sphere2(vars[0], vars[1], vars[2], self.max_degree, &mut out),
            Kind::Monomial(groups) => monomial(vars, groups, &mut out),
        }
        out
    }
}

fn circle<T: Field>(x: T, y: T, max_degree: usize, out: &mut Vec<T>) {
    out.push(T::constant(1.0 / (2.0 * PI).sqrt()));
    let norm = 1.0 / PI.sqrt();
    let (mut c, mut s) = (T::constant(1.0), T::constant(0.0));
    for _ in 1..=max_degree {
        let c_next = x.mul(c).sub(y.mul(s));
        let s_next = x.mul(s).add(y.mul(c));
        c = c_next;
        s = s_next;
        out.push(c.scale(norm));
        out.push(s.scale(norm));
    }
}

/// Real solid harmonics `N_lm Q_l^m(z, r^2) Re/Im (x + i y)^m`.
fn sphere2<T: Field>(x: T, y: T, z: T, max_degree: usize, out: &mut Vec<T>) {
    let size = (max_degree + 1) * (max_degree + 1);
    out.resize(size, T::constant(0.0));
    let r2 = x.mul(x).add(y.mul(y)).add(z.mul(z));
    let (mut c, mut s) = (T::constant(1.0), T::constant(0.0));
    let mut double_factorial = 1.0;
    for m in 0..=max_degree {
        if m > 0 {
            let c_next = x.mul(c).sub(y.mul(s));
            let s_next = x.mul(s).add(y.mul(c));
            c = c_next;
            s = s_next;
            double_factorial *= (2 * m - 1) as f64;
        }
        let mut q_prev = T::constant(0.0);
        let mut q = T::constant(double_factorial);
        for l in m..=max_degree {
            if l == m + 1 {
                q_prev = q;
                q = z.mul(q).scale((2 * m + 1) as f64);
            } else if l > m + 1 {
                let next = z
                    .mul(q)
                    .scale((2 * l - 1) as f64)
                    .sub(r2.mul(q_prev).scale((l + m - 1) as f64))
                    .scale(1.0 / (l - m) as f64);
                q_prev = q;
                q = next;
            }
            // (l - m)! / (l + m)!
            let ratio: f64 = ((l - m + 1)..=(l + m)).map(|k| 1.0 / k as f64).product();
            let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
            if m == 0 {
                out[l * l] = q.scale(norm);
            } else {
                norm *= std::f64::consts::SQRT_2;
                out[l * l + 2 * m - 1] = q.mul(c).scale(norm);
                out[l * l + 2 * m] = q.mul(s).scale(norm);
            }
        }
    }
}

fn monomial<T: Field>(vars: &[T], groups: &[(Vec<Vec<u32>>, Vec<Vec<f64>>)], out: &mut Vec<T>) {
    let max_degree = groups.len().saturating_sub(1);
    let powers: Vec<Vec<T>> = vars
        .iter()
        .map(|&v| {
            let mut p = vec![T::constant(1.0)];
            for k in 1..=max_degree {
                p.push(p[k - 1].mul(v));
            }
            p
        })
        .collect();
    for (exponents, basis) in groups {
        let monos: Vec<T> = exponents
            .iter()
            .map(|e| {
                e.iter().enumerate().fold(T::constant(1.0), |acc, (i, &k)| {
                    if k == 0 {
                        acc
                    } else {
                        acc.mul(powers[i][k as usize])
                    }
                })
            })
            .collect();
        for coeffs in basis {
            let mut acc = T::constant(0.0);
            for (m, &c) in monos.iter().zip(coeffs) {
                if c != 0.0 {
                    acc = acc.add(m.scale(c));
                }
            }
            out.push(acc);
        }
    }
}

fn exponents_of_degree(n: usize, l: usize) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![l as u32]];
    }
    let mut out = Vec::new();
    for first in (0..=l).rev() {
        for mut rest in exponents_of_degree(n - 1, l - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut a = 0.5;
        while a < k as f64 / 2.0 - 0.25 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// Exact integral of `x^alpha` over `S^{n-1}`.
pub fn monomial_sphere_integral(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let num: f64 = alpha.iter().map(|&a| gamma_half(a + 1)).product();
    let total: u32 = alpha.iter().map(|&a| a + 1).sum();
    2.0 * num / gamma_half(total)
}

/// Orthonormal harmonic basis of each degree, written as homogeneous
/// polynomials: monomials of degree `l` are orthogonalized against the
/// lower-degree harmonics of the same parity lifted by powers of `|x|^2`.
fn orthonormal_monomial_basis(n: usize, max_degree: usize) -> Vec<(Vec<Vec<u32>>, Vec<Vec<f64>>)> {
    let mut groups: Vec<(Vec<Vec<u32>>, Vec<Vec<f64>>)> = Vec::new();
    for l in 0..=max_degree {
        let exps = exponents_of_degree(n, l);
        let index: HashMap<&Vec<u32>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let gram = DMatrix::from_fn(exps.len(), exps.len(), |i, j| {
            let s: Vec<u32> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
            monomial_sphere_integral(&s)
        });
        let inner = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for (i, ai) in a.iter().enumerate() {
                if *ai == 0.0 {
                    continue;
                }
                for (j, bj) in b.iter().enumerate() {
                    s += ai * gram[(i, j)] * bj;
                }
            }
            s
        };

        // lift harmonics of degree l - 2 (and hence all lower ones of the same parity)
        let mut lower: Vec<Vec<f64>> = Vec::new();
        if l >= 2 {
            let (prev_exps, prev_groups) = (&groups[l - 2].0, &groups[l - 2].1);
            let mut lifted_prev: Vec<Vec<f64>> = Vec::new();
            for coeffs in prev_groups {
                lifted_prev.push(lift(coeffs, prev_exps, &index, exps.len()));
            }
            // the degree l - 2 space already contains the lifted ones below it
            lower.extend(lifted_prev);
            let mut d = l as i64 - 4;
            while d >= 0 {
                for coeffs in &groups[d as usize].1 {
                    let mut c = coeffs.clone();
                    let mut e = groups[d as usize].0.clone();
                    let mut deg = d as usize;
                    while deg < l {
                        let target = exponents_of_degree(n, deg + 2);
                        let idx: HashMap<&Vec<u32>, usize> =
                            target.iter().enumerate().map(|(i, e)| (e, i)).collect();
                        c = lift(&c, &e, &idx, target.len());
                        e = target;
                        deg += 2;
                    }
                    lower.push(c);
                }
                d -= 2;
            }
        }

        let target = harmonic_space_dim(n, l);
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for k in 0..exps.len() {
            if kept.len() == target {
                break;
            }
            let mut v = vec![0.0; exps.len()];
            v[k] = 1.0;
            for _ in 0..2 {
                for u in lower.iter().chain(kept.iter()) {
                    let p = inner(&v, u);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= p * ui;
                    }
                }
            }
            let norm = inner(&v, &v).max(0.0).sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|c| *c /= norm);
                kept.push(v);
            }
        }
        groups.push((exps, kept));
    }
    groups
}

/// Multiplies a homogeneous polynomial by `|x|^2`.
fn lift(
    coeffs: &[f64],
    exps: &[Vec<u32>],
    target: &HashMap<&Vec<u32>, usize>,
    len: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (c, e) in coeffs.iter().zip(exps) {
        if *c == 0.0 {
            continue;
        }
        for i in 0..e.len() {
            let mut f = e.clone();
            f[i] += 2;
            out[target[&f]] += c;
        }
    }
    out
}

/// A finite harmonic expansion `sum_i c_i Y_i`.
#[derive(Debug, Clone)]
pub struct HarmonicExpansion {
    dict: Arc<HarmonicDictionary>,
    coeffs: Vec<f64>,
}

impl HarmonicExpansion {
    pub fn new(dict: Arc<HarmonicDictionary>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dict.len() {
            return Err(Error::DimensionMismatch {
                expected: dict.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { dict, coeffs })
    }

    /// Expansion from `(degree, position) -> coefficient` pairs.
    pub fn from_labels(n: usize, entries: &[((usize, usize), f64)]) -> Result<Self> {
        let max_degree = entries.iter().map(|((l, _), _)| *l).max().unwrap_or(0);
        let dict = HarmonicDictionary::shared(n, max_degree)?;
        let mut coeffs = vec![0.0; dict.len()];
        for &((l, i), c) in entries {
            let k = dict.index_of(l, i).ok_or_else(|| {
                Error::InvalidInput(format!("no harmonic labelled {l}:{i} for n = {n}"))
            })?;
            coeffs[k] += c;
        }
        Ok(Self { dict, coeffs })
    }

    pub fn dictionary(&self) -> &Arc<HarmonicDictionary> {
        &self.dict
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Nonzero coefficients keyed by `(degree, position)`.
    pub fn labelled(&self) -> Vec<((usize, usize), f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (self.dict.label(i), *c))
            .collect()
    }

    /// Derivatives of the extension at the unit vector `x`.
    pub fn derivatives(&self, x: &DVector<f64>) -> ExtensionDerivatives {
        let n = self.dict.dim();
        let mut out = ExtensionDerivatives {
            value: 0.0,
            gradient: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        };
        for (d, c) in self.dict.derivatives(x).iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            out.value += c * d.value;
            out.gradient.axpy(*c, &d.gradient, 1.0);
            out.hessian += &d.hessian * *c;
        }
        out
    }
}

impl SphericalFunction for HarmonicExpansion {
    fn dim(&self) -> usize {
        self.dict.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.dict
            .values(x)
            .iter()
            .zip(&self.coeffs)
            .map(|(y, c)| y * c)
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.derivatives(x).gradient
    }

    fn ambient_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.derivatives(x).hessian)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Spectral
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_grid, restricted_hessian_fd, tangent_basis};
    use super::*;
    use approx::assert_relative_eq;

    fn check_orthonormal(n: usize, degree: usize) {
        let dict = HarmonicDictionary::new(n, degree).unwrap();
        let grid = build_grid(n, degree + 1).unwrap();
        let t = dict.table(&grid);
        let w = DMatrix::from_diagonal(&DVector::from_row_slice(grid.weights()));
        let g = t.transpose() * w * &t;
        let err = (g - DMatrix::identity(dict.len(), dict.len())).abs().max();
        assert!(err < 1e-10, "n = {n}: Gram error {err}");
    }

    #[test]
    fn dictionaries_are_orthonormal() {
        check_orthonormal(2, 12);
        check_orthonormal(3, 12);
        check_orthonormal(4, 5);
        check_orthonormal(5, 4);
    }

    #[test]
    fn counts_per_degree() {
        assert_eq!(harmonic_space_dim(3, 4), 9);
        assert_eq!(harmonic_space_dim(2, 4), 2);
        assert_eq!(harmonic_space_dim(4, 2), 9);
        let d = HarmonicDictionary::new(3, 5).unwrap();
        assert_eq!(d.len(), 36);
        assert_eq!(d.label(d.index_of(3, 4).unwrap()), (3, 4));
        assert_eq!(d.label_string(10), "3:1");
        assert!(d.index_of(3, 7).is_none());
    }

    #[test]
    fn low_degree_values() {
        let d = HarmonicDictionary::new(3, 1).unwrap();
        let x = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let v = d.values(&x);
        assert_relative_eq!(v[0], 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
        let c = (3.0 / (4.0 * PI)).sqrt();
        assert_relative_eq!(v[1], c * 0.8, epsilon = 1e-15);
        assert_relative_eq!(v[2], c * 0.6, epsilon = 1e-15);
        assert_relative_eq!(v[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn jets_match_finite_differences() {
        for (n, degree) in [(2, 6), (3, 6), (4, 3)] {
            let dict = HarmonicDictionary::shared(n, degree).unwrap();
            let mut x = DVector::from_fn(n, |i, _| 0.3 + 0.17 * i as f64);
            x /= x.norm();
            let v = tangent_basis(&x);
            let derivs = dict.derivatives(&x);
            for (k, d) in derivs.iter().enumerate().step_by(3) {
                let mut coeffs = vec![0.0; dict.len()];
                coeffs[k] = 1.0;
                let f = HarmonicExpansion::new(dict.clone(), coeffs).unwrap();
                let fd = restricted_hessian_fd(&f, &x, &v);
                let exact = v.transpose() * &d.hessian * &v;
                assert!((fd - exact).abs().max() < 1e-6, "n = {n}, k = {k}");
                // Euler relation for 1-homogeneous functions
                assert!((&d.hessian * &x).abs().max() < 1e-10);
                assert_relative_eq!(d.gradient.dot(&x), d.value, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn projection_recovers_coefficients() {
        let dict = HarmonicDictionary::shared(3, 6).unwrap();
        let grid = build_grid(3, 10).unwrap();
        let coeffs: Vec<f64> = (0..dict.len())
            .map(|i| ((i * 7) % 5) as f64 - 2.0)
            .collect();
        let f = HarmonicExpansion::new(dict.clone(), coeffs.clone()).unwrap();
        let vals: Vec<f64> = grid.nodes().iter().map(|x| f.value(x)).collect();
        let back = dict.project(&grid, &vals);
        for (a, b) in back.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn monomial_integrals() {
        assert_relative_eq!(
            monomial_sphere_integral(&[0, 0, 0]),
            4.0 * PI,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            monomial_sphere_integral(&[2, 0, 0]),
            4.0 * PI / 3.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            monomial_sphere_integral(&[2, 2, 0]),
            4.0 * PI / 15.0,
            epsilon = 1e-13
        );
        assert_eq!(monomial_sphere_integral(&[1, 2, 0]), 0.0);
    }

    #[test]
    fn rejects_unsupported() {
        assert!(HarmonicDictionary::new(6, 2).is_err());
        assert!(HarmonicDictionary::new(4, 9).is_err());
    }
}
