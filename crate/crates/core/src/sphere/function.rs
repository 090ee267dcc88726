use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::tangent_basis;
use crate::error::{Error, Result};

const FD_STEP: f64 = 1e-3;
const SYMMETRY_LIMIT: f64 = 1e-6;

/// How a function's second derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    AnalyticClosedForm,
    Spectral,
    FiniteDifference,
}

/// A function on `S^{n-1}`, identified with its 1-homogeneous extension
/// `F(y) = |y| f(y / |y|)`.
pub trait SphericalFunction: Send + Sync {
    /// Ambient dimension `n`.
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    /// Gradient of `F` at the unit vector `x`.
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        gradient_fd(self, x)
    }

    /// Hessian of `F` at the unit vector `x`, when a closed form exists.
    fn ambient_hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::FiniteDifference
    }
}

/// Wraps a closure as a spherical function with finite-difference derivatives.
pub struct FnSpherical<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&DVector<f64>) -> f64 + Send + Sync> FnSpherical<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&DVector<f64>) -> f64 + Send + Sync> SphericalFunction for FnSpherical<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }
}

/// `F(y) = |y| f(y / |y|)`.
pub fn extension_value<F: SphericalFunction + ?Sized>(f: &F, y: &DVector<f64>) -> f64 {
    let r = y.norm();
    if r == 0.0 {
        return 0.0;
    }
    r * f.value(&(y / r))
}

/// Orthonormal frame of the tangent space at a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis {
    point: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl TangentBasis {
    /// The Householder frame at `x`.
    pub fn at(x: &DVector<f64>) -> Self {
        Self {
            point: x.clone(),
            vectors: tangent_basis(x),
        }
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    /// `n x (n-1)` matrix whose columns are the frame vectors.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }
}

/// Symmetric bilinear form on a tangent space, in a fixed orthonormal frame.
#[derive(Debug, Clone)]
pub struct SymForm {
    matrix: DMatrix<f64>,
    basis: Option<Arc<TangentBasis>>,
}

impl SymForm {
    /// Symmetrizes `m`; the form is not tied to a frame.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "bilinear form must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self {
            matrix: symmetrize(m),
            basis: None,
        })
    }

    pub fn in_basis(m: DMatrix<f64>, basis: Arc<TangentBasis>) -> Result<Self> {
        let mut form = Self::from_matrix(m)?;
        if form.size() != basis.vectors.ncols() {
            return Err(Error::DimensionMismatch {
                expected: basis.vectors.ncols(),
                got: form.size(),
            });
        }
        form.basis = Some(basis);
        Ok(form)
    }

    pub fn identity(m: usize) -> Self {
        Self {
            matrix: DMatrix::identity(m, m),
            basis: None,
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn basis(&self) -> Option<&Arc<TangentBasis>> {
        self.basis.as_ref()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// `V^T H V` for a tangent frame `V`, symmetrized.
pub fn restricted(h: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(v.transpose() * h * v)
}

/// Hessian of the 1-homogeneous extension of `f` at `x`, restricted to the
/// frame `basis`. Uses the closed form when `f` provides one.
pub fn restricted_hessian<F: SphericalFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    basis: &Arc<TangentBasis>,
) -> Result<SymForm> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    if basis.vectors.nrows() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: basis.vectors.nrows(),
        });
    }
    let m = match f.ambient_hessian(x) {
        Some(h) => {
            let asym = (&h - h.transpose()).abs().max();
            if asym > SYMMETRY_LIMIT {
                return Err(Error::NumericalFailure(format!(
                    "Hessian asymmetric by {asym:.3e} at {:?}",
                    x.as_slice()
                )));
            }
            restricted(&h, &basis.vectors)
        }
        None => restricted_hessian_fd(f, x, &basis.vectors),
    };
    Ok(SymForm {
        matrix: m,
        basis: Some(basis.clone()),
    })
}

/// Second directional derivatives of `F` along the columns of `v`, by central
/// differences with one Richardson step.
pub fn restricted_hessian_fd<F: SphericalFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    v: &DMatrix<f64>,
) -> DMatrix<f64> {
    let dirs: Vec<DVector<f64>> = v.column_iter().map(|c| c.into_owned()).collect();
    second_differences(f, x, &dirs)
}

/// Full ambient Hessian of `F` by central differences with one Richardson step.
pub fn ambient_hessian_fd<F: SphericalFunction + ?Sized>(f: &F, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let dirs: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 }))
        .collect();
    second_differences(f, x, &dirs)
}

fn second_differences<F: SphericalFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dirs: &[DVector<f64>],
) -> DMatrix<f64> {
    let coarse = second_differences_at(f, x, dirs, FD_STEP);
    let fine = second_differences_at(f, x, dirs, FD_STEP / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

fn second_differences_at<F: SphericalFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    dirs: &[DVector<f64>],
    h: f64,
) -> DMatrix<f64> {
    let m = dirs.len();
    let fx = extension_value(f, x);
    let mut out = DMatrix::zeros(m, m);
    for a in 0..m {
        let plus = extension_value(f, &(x + &dirs[a] * h));
        let minus = extension_value(f, &(x - &dirs[a] * h));
        out[(a, a)] = (plus - 2.0 * fx + minus) / (h * h);
        for b in 0..a {
            let pp = extension_value(f, &(x + (&dirs[a] + &dirs[b]) * h));
            let pm = extension_value(f, &(x + (&dirs[a] - &dirs[b]) * h));
            let mp = extension_value(f, &(x - (&dirs[a] - &dirs[b]) * h));
            let mm = extension_value(f, &(x - (&dirs[a] + &dirs[b]) * h));
            let d = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(a, b)] = d;
            out[(b, a)] = d;
        }
    }
    out
}

/// Gradient of `F` by central differences with one Richardson step.
pub fn gradient_fd<F: SphericalFunction + ?Sized>(f: &F, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let diff = |h: f64| {
        DVector::from_fn(n, |i, _| {
            let mut p = x.clone();
            let mut q = x.clone();
            p[i] += h;
            q[i] -= h;
            (extension_value(f, &p) - extension_value(f, &q)) / (2.0 * h)
        })
    };
    let coarse = diff(FD_STEP);
    let fine = diff(FD_STEP / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::random_unit;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Ellipsoid(DMatrix<f64>);

    impl SphericalFunction for Ellipsoid {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            x.dot(&(&self.0 * x)).sqrt()
        }
        fn ambient_hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
            let ax = &self.0 * x;
            let q = x.dot(&ax);
            Some((&self.0 * q - &ax * ax.transpose()) / q.powf(1.5))
        }
        fn smoothness(&self) -> Smoothness {
            Smoothness::AnalyticClosedForm
        }
    }

    #[test]
    fn unit_ball_hessian_is_identity() {
        let ball = FnSpherical::new(3, |_| 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = random_unit(&mut rng, 3);
            let b = Arc::new(TangentBasis::at(&x));
            let h = restricted_hessian(&ball, &x, &b).unwrap();
            assert!((h.matrix() - DMatrix::identity(2, 2)).abs().max() < 1e-7);
        }
    }

    #[test]
    fn ellipsoid_closed_form_at_axis() {
        let e = Ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![
            4.0, 1.0, 1.0,
        ])));
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = Arc::new(TangentBasis::at(&x));
        let h = restricted_hessian(&e, &x, &b).unwrap();
        assert!((h.matrix() - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-12);
    }

    #[test]
    fn closed_form_matches_finite_differences() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.7]);
        let e = Ellipsoid(a.clone());
        let fd = FnSpherical::new(3, move |x: &DVector<f64>| x.dot(&(&a * x)).sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = random_unit(&mut rng, 3);
            let b = Arc::new(TangentBasis::at(&x));
            let h1 = restricted_hessian(&e, &x, &b).unwrap();
            let h2 = restricted_hessian(&fd, &x, &b).unwrap();
            assert!((h1.matrix() - h2.matrix()).abs().max() < 1e-6);
            let full = ambient_hessian_fd(&fd, &x);
            assert!((&full * &x).abs().max() < 1e-6);
            let g = gradient_fd(&fd, &x);
            let exact = &e.0 * &x / e.value(&x);
            assert!((g - exact).abs().max() < 1e-8);
        }
    }

    #[test]
    fn asymmetric_hessian_is_reported() {
        struct Bad;
        impl SphericalFunction for Bad {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, _: &DVector<f64>) -> f64 {
                1.0
            }
            fn ambient_hessian(&self, _: &DVector<f64>) -> Option<DMatrix<f64>> {
                Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]))
            }
        }
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let b = Arc::new(TangentBasis::at(&x));
        assert!(matches!(
            restricted_hessian(&Bad, &x, &b),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn symform_is_symmetric_by_construction() {
        let f = SymForm::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0])).unwrap();
        assert_eq!(f.matrix()[(0, 1)], f.matrix()[(1, 0)]);
        assert_relative_eq!(f.matrix()[(0, 1)], 1.0);
        assert!(SymForm::from_matrix(DMatrix::zeros(2, 3)).is_err());
    }
}
