//! The spanning ellipsoid family and its pointwise dual frame.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bodies::{make_ellipsoid, ConvexBody};
use crate::error::{Error, Result};
use crate::sphere::{restricted, tangent_basis, SphereGrid};

/// Smallest singular value accepted as spanning.
pub const SPANNING_THRESHOLD: f64 = 1e-10;
const NORM_SAMPLES: usize = 100_000;
const NORM_SEED: u64 = 0x5eed_c0de;

/// `E_ii = e_i e_i^T`, `E_ij = e_i e_j^T + e_j e_i^T` for `i < j`, in
/// lexicographic order of `(i, j)`.
pub fn standard_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// `max_ij |tr(C E_ij)|`.
pub fn dual_norm(c: &DMatrix<f64>, basis: &[DMatrix<f64>]) -> f64 {
    basis
        .iter()
        .map(|e| c.component_mul(e).sum().abs())
        .fold(0.0, f64::max)
}

pub fn operator_norm(c: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(c.clone()).eigenvalues.amax()
}

/// Constant `c` with `c ||C|| <= ||C||_*` on symmetric matrices.
#[derive(Debug, Clone, Copy)]
pub struct NormConstant {
    /// Analytic bound `1/n`; the value used downstream.
    pub certified: f64,
    /// Smallest ratio `||C||_* / ||C||` seen on random samples.
    pub sampled: f64,
}

pub fn norm_constant(n: usize, basis: &[DMatrix<f64>]) -> NormConstant {
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut sampled = f64::INFINITY;
    for _ in 0..NORM_SAMPLES {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut c = (&a + a.transpose()) * 0.5;
        let op = operator_norm(&c);
        if op == 0.0 {
            continue;
        }
        c /= op;
        sampled = sampled.min(dual_norm(&c, basis));
    }
    NormConstant {
        certified: 1.0 / n as f64,
        sampled,
    }
}

/// The ellipsoids `E_{t Id + E_ij}` for `i <= j`, followed by the unit ball.
#[derive(Debug, Clone)]
pub struct EllipsoidFamily {
    n: usize,
    t: f64,
    c: NormConstant,
    matrices: Vec<DMatrix<f64>>,
    bodies: Vec<ConvexBody>,
}

pub fn build_family(n: usize) -> Result<EllipsoidFamily> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("family needs n >= 2, got {n}")));
    }
    let basis = standard_basis(n);
    let c = norm_constant(n, &basis);
    let t = 1.0 + 2.0 / c.certified;
    let mut matrices: Vec<DMatrix<f64>> = basis
        .iter()
        .map(|e| DMatrix::identity(n, n) * t + e)
        .collect();
    matrices.push(DMatrix::identity(n, n));
    EllipsoidFamily::from_matrices(n, t, c, matrices)
}

impl EllipsoidFamily {
    /// A family from explicit matrices (each must be positive definite).
    pub fn from_matrices(
        n: usize,
        t: f64,
        c: NormConstant,
        matrices: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let bodies = matrices
            .iter()
            .map(make_ellipsoid)
            .collect::<Result<Vec<_>>>()?;
        if let Some(b) = bodies.iter().find(|b| b.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.dim(),
            });
        }
        Ok(Self {
            n,
            t,
            c,
            matrices,
            bodies,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn c(&self) -> NormConstant {
        self.c
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    /// `d x N` matrix of the restricted Hessians at `x`, each vectorized
    /// isometrically in the frame `v`.
    pub fn span_matrix(&self, x: &DVector<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.n - 1;
        let d = m * (m + 1) / 2;
        let mut out = DMatrix::zeros(d, self.len());
        for (s, body) in self.bodies.iter().enumerate() {
            let h = body
                .restricted_hessian(x, v)
                .expect("ellipsoids are smooth");
            out.set_column(s, &sym_to_vec(&h));
        }
        out
    }
}

/// Isometric coordinates of a symmetric matrix (off-diagonal entries scaled
/// by `sqrt 2`).
pub fn sym_to_vec(a: &DMatrix<f64>) -> DVector<f64> {
    let m = a.nrows();
    let mut v = DVector::zeros(m * (m + 1) / 2);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            v[k] = if i == j {
                a[(i, i)]
            } else {
                std::f64::consts::SQRT_2 * a[(i, j)]
            };
            k += 1;
        }
    }
    v
}

pub fn vec_to_sym(v: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            if i == j {
                a[(i, i)] = v[k];
            } else {
                a[(i, j)] = v[k] / std::f64::consts::SQRT_2;
                a[(j, i)] = a[(i, j)];
            }
            k += 1;
        }
    }
    a
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    // rank must equal the number of rows
    let gram = m * m.transpose();
    SymmetricEigen::new(gram).eigenvalues.min().max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct SpanningCertificate {
    pub min_sigma: f64,
    pub argmin_node: usize,
}

/// Smallest singular value of the span matrix over all grid nodes.
pub fn spanning_certificate(
    family: &EllipsoidFamily,
    grid: &SphereGrid,
) -> Result<SpanningCertificate> {
    if grid.dim() != family.n {
        return Err(Error::DimensionMismatch {
            expected: family.n,
            got: grid.dim(),
        });
    }
    let sigmas: Vec<f64> = grid
        .nodes()
        .par_iter()
        .map(|x| smallest_singular_value(&family.span_matrix(x, &tangent_basis(x))))
        .collect();
    let (argmin_node, &min_sigma) = sigmas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if !(min_sigma > SPANNING_THRESHOLD) {
        return Err(Error::SpanningFailure {
            node: argmin_node,
            sigma: min_sigma,
        });
    }
    Ok(SpanningCertificate {
        min_sigma,
        argmin_node,
    })
}

/// Dual frame at one point: `psi = M^+ vec(A)`.
#[derive(Debug, Clone)]
pub struct PointFrame {
    pub point: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub span: DMatrix<f64>,
    pub pseudo_inverse: DMatrix<f64>,
    pub sigma: f64,
}

impl PointFrame {
    pub fn at(family: &EllipsoidFamily, x: &DVector<f64>) -> Result<Self> {
        let basis = tangent_basis(x);
        let span = family.span_matrix(x, &basis);
        let sigma = smallest_singular_value(&span);
        if !(sigma > SPANNING_THRESHOLD) {
            return Err(Error::SpanningFailure { node: 0, sigma });
        }
        // full row rank: M^+ = M^T (M M^T)^{-1}
        let gram = &span * span.transpose();
        let inv = gram
            .cholesky()
            .ok_or(Error::SpanningFailure { node: 0, sigma })?
            .inverse();
        let pseudo_inverse = span.transpose() * inv;
        Ok(Self {
            point: x.clone(),
            basis,
            span,
            pseudo_inverse,
            sigma,
        })
    }

    /// Coefficients `Psi_s(A)` of a tangent form given in this frame's basis.
    pub fn coefficients(&self, a: &DMatrix<f64>) -> DVector<f64> {
        &self.pseudo_inverse * sym_to_vec(a)
    }

    /// `sum_s psi_s D^2 h_{E_s}(x)`.
    pub fn reconstruct(&self, psi: &DVector<f64>) -> DMatrix<f64> {
        vec_to_sym(&(&self.span * psi), self.basis.ncols())
    }
}

/// Dual frames at every node of a grid.
#[derive(Debug, Clone)]
pub struct SpanningFrame {
    frames: Vec<PointFrame>,
    certificate: SpanningCertificate,
}

pub fn dual_frame(family: &EllipsoidFamily, grid: &SphereGrid) -> Result<SpanningFrame> {
    if grid.dim() != family.n {
        return Err(Error::DimensionMismatch {
            expected: family.n,
            got: grid.dim(),
        });
    }
    let frames: Vec<PointFrame> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            PointFrame::at(family, x).map_err(|e| match e {
                Error::SpanningFailure { sigma, .. } => Error::SpanningFailure { node: k, sigma },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let (argmin_node, min_sigma) = frames
        .iter()
        .enumerate()
        .map(|(k, f)| (k, f.sigma))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    Ok(SpanningFrame {
        frames,
        certificate: SpanningCertificate {
            min_sigma,
            argmin_node,
        },
    })
}

impl SpanningFrame {
    pub fn frames(&self) -> &[PointFrame] {
        &self.frames
    }

    pub fn certificate(&self) -> SpanningCertificate {
        self.certificate
    }

    /// Empirical Lipschitz constant of `x -> Psi(x)` between consecutive grid
    /// nodes, measured on the projections `P_x E P_x` of the ambient basis.
    pub fn continuity_probe(&self) -> f64 {
        let n = self.frames.first().map(|f| f.point.len()).unwrap_or(0);
        let basis = standard_basis(n);
        let coeffs = |f: &PointFrame| -> Vec<DVector<f64>> {
            basis
                .iter()
                .map(|e| f.coefficients(&restricted(e, &f.basis)))
                .collect()
        };
        let mut worst: f64 = 0.0;
        for pair in self.frames.windows(2) {
            let dx = (&pair[0].point - &pair[1].point).norm();
            if dx == 0.0 || dx > 0.5 {
                continue;
            }
            let (a, b) = (coeffs(&pair[0]), coeffs(&pair[1]));
            let diff = a
                .iter()
                .zip(&b)
                .map(|(u, v)| (u - v).norm())
                .fold(0.0, f64::max);
            worst = worst.max(diff / dx);
        }
        worst
    }
}
