//! A degree-one valuation whose Goodey-Weil distribution has order above
//! zero, and the numerical experiments exhibiting it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::bodies::{make_ball, minkowski_support, ConvexBody};
use crate::error::{Error, Result};
use crate::functionals::mixed_area_density;
use crate::quad1d::integrate_pieces;
use crate::sphere::{unit_sphere_area, SphereGrid};

const THIRD: f64 = 1.0 / 3.0;
const QUAD_TOL: f64 = 1e-13;
/// Expected power of `T(phi_eps)` in `eps`.
pub const DIVERGENCE_SLOPE: f64 = -0.5;
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const STENCIL_STEP: f64 = 1e-2;
pub const FIT_RESIDUAL_LIMIT: f64 = 1e-8;
pub const REDUCTION_TOLERANCE: f64 = 1e-4;

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
struct D2 {
    v: f64,
    d1: f64,
    d2: f64,
}

impl D2 {
    fn var(t: f64) -> Self {
        Self {
            v: t,
            d1: 1.0,
            d2: 0.0,
        }
    }

    fn constant(v: f64) -> Self {
        Self {
            v,
            d1: 0.0,
            d2: 0.0,
        }
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        Self {
            v: e,
            d1: e * self.d1,
            d2: e * (self.d2 + self.d1 * self.d1),
        }
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        Self {
            v: r,
            d1: -self.d1 * r * r,
            d2: (2.0 * self.d1 * self.d1 * r - self.d2) * r * r,
        }
    }

    fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            d1: self.d1 * s,
            d2: self.d2 * s,
        }
    }
}

impl Add for D2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for D2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for D2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for D2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for D2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// `exp(-1/u)` for `u > 0`, else `0`.
fn flat_exp(u: D2) -> D2 {
    if u.v <= 0.0 {
        D2::constant(0.0)
    } else {
        (-u.recip()).exp()
    }
}

/// Smooth monotone step: 0 for `u <= 0`, 1 for `u >= 1`.
fn smooth_step(u: D2) -> D2 {
    if u.v <= 0.0 {
        return D2::constant(0.0);
    }
    if u.v >= 1.0 {
        return D2::constant(1.0);
    }
    let a = flat_exp(u);
    a / (a + flat_exp(D2::constant(1.0) - u))
}

/// `psi(t) = 1` for `|t| <= 1/3`, `0` for `|t| >= 2/3`, smooth and even.
pub fn cutoff_psi(t: f64) -> f64 {
    1.0 - smooth_step(D2::constant((t.abs() - THIRD) / THIRD)).v
}

/// `f(t) = sqrt|t| (1 - t^2)^{-(n-3)/2} psi(t)`.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleDensity {
    n: usize,
}

impl CounterexampleDensity {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "dimension must be at least 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, t: f64) -> f64 {
        let psi = cutoff_psi(t);
        if psi == 0.0 {
            return 0.0;
        }
        t.abs().sqrt() * (1.0 - t * t).powf(-(self.n as f64 - 3.0) / 2.0) * psi
    }
}

/// Zonal test function `phi` on `(-1, 1)`, given with two derivatives.
pub trait ZonalFunction: Sync {
    /// `[phi(t), phi'(t), phi''(t)]`.
    fn jet(&self, t: f64) -> [f64; 3];
    /// Closed interval containing the support.
    fn support(&self) -> (f64, f64);
    /// Points where the integrand changes character, including the support ends.
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.support();
        vec![a, b]
    }

    fn value(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }
}

/// `phi_eps`: rises on `[eps/2, eps]`, equals 1 on `[eps, 4 eps]`, falls to
/// zero on `[4 eps, 4 eps + delta]` with `delta = min(eps, 1/3 - 4 eps)`.
#[derive(Debug, Clone, Copy)]
pub struct ZonalTestFunction {
    eps: f64,
    delta: f64,
}

impl ZonalTestFunction {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < THIRD / 4.0) {
            return Err(Error::InvalidInput(format!(
                "eps must lie in (0, 1/12) so the plateau and a fall-off fit in [eps/2, 1/3], got {eps}"
            )));
        }
        Ok(Self {
            eps,
            delta: eps.min(THIRD - 4.0 * eps),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.eps, 4.0 * self.eps)
    }
}

impl ZonalFunction for ZonalTestFunction {
    fn jet(&self, t: f64) -> [f64; 3] {
        let e = self.eps;
        let x = D2::var(t);
        let r = if t <= e {
            smooth_step((x - D2::constant(e / 2.0)).scale(2.0 / e))
        } else if t <= 4.0 * e {
            D2::constant(1.0)
        } else {
            D2::constant(1.0) - smooth_step((x - D2::constant(4.0 * e)).scale(1.0 / self.delta))
        };
        [r.v, r.d1, r.d2]
    }

    fn support(&self) -> (f64, f64) {
        (self.eps / 2.0, 4.0 * self.eps + self.delta)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let e = self.eps;
        vec![
            e / 2.0,
            0.75 * e,
            e,
            4.0 * e,
            4.0 * e + self.delta / 2.0,
            4.0 * e + self.delta,
        ]
    }
}

/// Smooth bump with peak 1 supported on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct ZonalBump {
    lo: f64,
    hi: f64,
}

impl ZonalBump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi && lo > -1.0 && hi < 1.0) {
            return Err(Error::InvalidInput(format!(
                "bump support [{lo}, {hi}] must be a subinterval of (-1, 1)"
            )));
        }
        Ok(Self { lo, hi })
    }
}

impl ZonalFunction for ZonalBump {
    fn jet(&self, t: f64) -> [f64; 3] {
        let w = 0.5 * (self.hi - self.lo);
        let x = D2::var(t);
        let r = smooth_step((x - D2::constant(self.lo)).scale(1.0 / w))
            * smooth_step((D2::constant(self.hi) - x).scale(1.0 / w));
        [r.v, r.d1, r.d2]
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let m = 0.5 * (self.lo + self.hi);
        vec![
            self.lo,
            0.5 * (self.lo + m),
            m,
            0.5 * (m + self.hi),
            self.hi,
        ]
    }
}

/// `mu_k(K) = int f(x_n) dS(K[k], B[n-k-1])`.
pub fn counterexample_valuation(body: &ConvexBody, k: usize, grid: &SphereGrid) -> Result<f64> {
    let n = grid.dim();
    if body.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: body.dim(),
        });
    }
    let f = CounterexampleDensity::new(n)?;
    let ball = make_ball(n, 1.0)?;
    let others: Vec<&ConvexBody> = vec![&ball; n.saturating_sub(k + 1)];
    let density = mixed_area_density(body, k, &others, grid)?;
    Ok(grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(density.values())
        .map(|((x, w), d)| w * f.value(x[n - 1]) * d)
        .sum())
}

fn check_zonal<Z: ZonalFunction + ?Sized>(phi: &Z, n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "zonal reduction needs n >= 3, got {n}"
        )));
    }
    let (a, b) = phi.support();
    if !(a > 0.0 && b <= THIRD) {
        return Err(Error::InvalidInput(format!(
            "support [{a}, {b}] must lie in (0, 1/3] where the cutoff is identically one"
        )));
    }
    Ok(phi.breakpoints())
}

/// `GW(mu)[phi(x_n)] = w_{n-2} int_0^1 sqrt(t) [(1-t^2) phi'' - (n-1) t phi' + (n-1) phi] dt`.
pub fn gw_zonal<Z: ZonalFunction + ?Sized>(phi: &Z, n: usize) -> Result<f64> {
    let breaks = check_zonal(phi, n)?;
    let m = n as f64 - 1.0;
    let integral = integrate_pieces(
        |t| {
            let [p, d1, d2] = phi.jet(t);
            t.sqrt() * ((1.0 - t * t) * d2 - m * t * d1 + m * p)
        },
        &breaks,
        QUAD_TOL,
        QUAD_TOL,
    )?;
    Ok(unit_sphere_area(n - 2) * integral)
}

/// The same quantity after moving all derivatives onto the weight:
/// `w_{n-2} int [-phi / (4 t^{3/2}) - (15/4) sqrt(t) phi + (3/2)(n-1) sqrt(t) phi + (n-1) sqrt(t) phi] dt`.
pub fn gw_zonal_by_parts<Z: ZonalFunction + ?Sized>(phi: &Z, n: usize) -> Result<f64> {
    let breaks = check_zonal(phi, n)?;
    let m = n as f64 - 1.0;
    let integral = integrate_pieces(
        |t| {
            let p = phi.value(t);
            let s = t.sqrt();
            -p / (4.0 * s * t) - 3.75 * s * p + 1.5 * m * s * p + m * s * p
        },
        &breaks,
        QUAD_TOL,
        QUAD_TOL,
    )?;
    Ok(unit_sphere_area(n - 2) * integral)
}

/// `T(phi) = int_0^1 phi(t) t^{-3/2} dt`.
pub fn singular_term<Z: ZonalFunction + ?Sized>(phi: &Z) -> Result<f64> {
    let (a, _) = phi.support();
    if a <= 0.0 {
        return Err(Error::InvalidInput(
            "T(phi) needs phi to vanish near 0".into(),
        ));
    }
    integrate_pieces(
        |t| phi.value(t) / (t * t.sqrt()),
        &phi.breakpoints(),
        0.0,
        QUAD_TOL,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceProbe {
    pub eps: f64,
    pub t_value: f64,
    pub lower_bound: f64,
    pub pass: bool,
}

pub fn divergence_probe(eps: f64, n: usize) -> Result<DivergenceProbe> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "zonal reduction needs n >= 3, got {n}"
        )));
    }
    let phi = ZonalTestFunction::new(eps)?;
    let t_value = singular_term(&phi)?;
    let lower_bound = eps.powf(-0.5);
    Ok(DivergenceProbe {
        eps,
        t_value,
        lower_bound,
        pass: t_value >= lower_bound,
    })
}

#[derive(Debug, Clone)]
pub struct DivergenceSweep {
    pub probes: Vec<DivergenceProbe>,
    /// Least-squares slope of `log T` against `log eps`.
    pub slope: f64,
    pub slope_pass: bool,
}

impl DivergenceSweep {
    pub fn pass(&self) -> bool {
        self.slope_pass && self.probes.iter().all(|p| p.pass)
    }
}

/// `count` values from `start` to `stop`, equally spaced in log scale.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) || count == 0 {
        return Err(Error::InvalidInput(format!(
            "log range needs positive ends and count, got {start}:{stop}:{count}"
        )));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = (start.log10(), stop.log10());
    Ok((0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect())
}

pub fn divergence_sweep(eps: &[f64], n: usize) -> Result<DivergenceSweep> {
    let probes = eps
        .par_iter()
        .map(|&e| divergence_probe(e, n))
        .collect::<Result<Vec<_>>>()?;
    let slope = if probes.len() < 2 {
        f64::NAN
    } else {
        let xs: Vec<f64> = probes.iter().map(|p| p.eps.ln()).collect();
        let ys: Vec<f64> = probes.iter().map(|p| p.t_value.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    };
    let slope_pass = (slope - DIVERGENCE_SLOPE).abs() <= SLOPE_TOLERANCE;
    Ok(DivergenceSweep {
        probes,
        slope,
        slope_pass,
    })
}

#[derive(Debug, Clone)]
pub struct DerivativeReduction {
    pub k: usize,
    /// `d^{k-1}/dt^{k-1} mu_k(K + tB)` at `t = 0`.
    pub derivative: f64,
    /// `mu_1(K)`.
    pub mu1: f64,
    /// Largest deviation of the stencil values from the fitted polynomial.
    pub residual: f64,
}

impl DerivativeReduction {
    fn factorial(m: usize) -> f64 {
        (1..=m).map(|i| i as f64).product()
    }

    /// `(k-1)! mu_1(K)`.
    pub fn stated_reference(&self) -> f64 {
        Self::factorial(self.k - 1) * self.mu1
    }

    /// `k! mu_1(K)`: the `t^{k-1}` coefficient of `mu_k(K + tB)` is
    /// `k mu_1(K)` by multilinearity.
    pub fn binomial_reference(&self) -> f64 {
        Self::factorial(self.k) * self.mu1
    }

    pub fn stated_relative_error(&self) -> f64 {
        (self.derivative - self.stated_reference()).abs() / self.stated_reference().abs()
    }

    pub fn binomial_relative_error(&self) -> f64 {
        (self.derivative - self.binomial_reference()).abs() / self.binomial_reference().abs()
    }
}

/// Fits `t -> mu_k(K + tB)` on `{0, h, ..., (k+1) h}` by a degree-`k`
/// polynomial and reads off the `(k-1)`-th derivative at zero.
pub fn derivative_reduction(
    body: &ConvexBody,
    k: usize,
    grid: &SphereGrid,
) -> Result<DerivativeReduction> {
    let n = grid.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "k must lie in 1..={}, got {k}",
            n - 1
        )));
    }
    let mu1 = counterexample_valuation(body, 1, grid)?;
    if k == 1 {
        return Ok(DerivativeReduction {
            k,
            derivative: mu1,
            mu1,
            residual: 0.0,
        });
    }
    let ball = make_ball(n, 1.0)?;
    let ts: Vec<f64> = (0..=k + 1).map(|j| j as f64 * STENCIL_STEP).collect();
    let values = ts
        .iter()
        .map(|&t| {
            counterexample_valuation(
                &minkowski_support(&[body.clone(), ball.clone()], &[1.0, t])?,
                k,
                grid,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    // monomials in t / h keep the system well conditioned
    let a = DMatrix::from_fn(ts.len(), k + 1, |i, j| {
        (ts[i] / STENCIL_STEP).powi(j as i32)
    });
    let b = DVector::from_vec(values.clone());
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let residual = (a * &coeffs - &b).amax();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if residual > FIT_RESIDUAL_LIMIT * scale {
        return Err(Error::NumericalFailure(format!(
            "mu_k(K + tB) is not polynomial of degree {k} on the stencil: residual {residual:.3e}"
        )));
    }
    let c = coeffs[k - 1] / STENCIL_STEP.powi(k as i32 - 1);
    let derivative = DerivativeReduction::factorial(k - 1) * c;
    Ok(DerivativeReduction {
        k,
        derivative,
        mu1,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::make_ellipsoid;
    use crate::quad1d::integrate;
    use crate::sphere::build_grid;
    use approx::assert_relative_eq;

    /// Central differences of `phi` and `phi'` with one Richardson step.
    fn fd<Z: ZonalFunction>(phi: &Z, t: f64, h: f64) -> [f64; 2] {
        let d = |i: usize, h: f64| (phi.jet(t + h)[i] - phi.jet(t - h)[i]) / (2.0 * h);
        let r = |i: usize| (4.0 * d(i, h / 2.0) - d(i, h)) / 3.0;
        [r(0), r(1)]
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff_psi(0.0), 1.0);
        assert_eq!(cutoff_psi(0.9), 0.0);
        assert_eq!(cutoff_psi(-0.3), 1.0);
        let mid = cutoff_psi(0.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert_relative_eq!(mid, 0.5, epsilon = 1e-15);
        let samples: Vec<f64> = (0..=100)
            .map(|i| cutoff_psi(THIRD + THIRD * i as f64 / 100.0))
            .collect();
        assert!(samples.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(cutoff_psi(0.4), cutoff_psi(-0.4));
    }

    #[test]
    fn density_shape() {
        let f = CounterexampleDensity::new(3).unwrap();
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(0.7), 0.0);
        assert_relative_eq!(f.value(0.25), 0.5, epsilon = 1e-15);
        let f5 = CounterexampleDensity::new(5).unwrap();
        assert_relative_eq!(f5.value(0.2), 0.2f64.sqrt() / 0.96, epsilon = 1e-15);
    }

    #[test]
    fn test_function_invariants() {
        for eps in [0.08, 1e-2, 1e-4] {
            let phi = ZonalTestFunction::new(eps).unwrap();
            let (a, b) = phi.support();
            assert!(a >= eps / 2.0 && b <= THIRD);
            for i in 0..=400 {
                let t = a - 0.1 * eps + (b - a + 0.2 * eps) * i as f64 / 400.0;
                let [v, d1, d2] = phi.jet(t);
                assert!((0.0..=1.0).contains(&v));
                if t < a || t > b {
                    assert_eq!(v, 0.0);
                }
                if t >= eps && t <= 4.0 * eps {
                    assert_eq!(v, 1.0);
                }
                let s = (eps / 2.0).min(b - 4.0 * eps);
                let [f1, f2] = fd(&phi, t, 1e-3 * s);
                assert!((d1 - f1).abs() * s < 1e-6, "phi' at {t}: {d1} vs {f1}");
                assert!((d2 - f2).abs() * s * s < 1e-6, "phi'' at {t}: {d2} vs {f2}");
            }
        }
        assert!(ZonalTestFunction::new(1.0 / 12.0).is_err());
        assert!(ZonalTestFunction::new(0.0).is_err());
    }

    #[test]
    fn zonal_forms_agree() {
        for eps in [0.08, 0.02, 1e-3, 1e-5] {
            let phi = ZonalTestFunction::new(eps).unwrap();
            for n in [3, 4, 6] {
                let a = gw_zonal(&phi, n).unwrap();
                let b = gw_zonal_by_parts(&phi, n).unwrap();
                assert!(
                    (a - b).abs() <= 1e-7 * a.abs().max(1.0),
                    "eps {eps}, n {n}: {a} vs {b}"
                );
            }
        }
        let bump = ZonalBump::new(0.1, 0.3).unwrap();
        assert_relative_eq!(
            gw_zonal(&bump, 3).unwrap(),
            gw_zonal_by_parts(&bump, 3).unwrap(),
            max_relative = 1e-10
        );
        assert!(gw_zonal(&ZonalBump::new(0.1, 0.5).unwrap(), 3).is_err());
        assert!(gw_zonal(&ZonalBump::new(-0.1, 0.2).unwrap(), 3).is_err());
    }

    struct Zero;
    impl ZonalFunction for Zero {
        fn jet(&self, _: f64) -> [f64; 3] {
            [0.0; 3]
        }
        fn support(&self) -> (f64, f64) {
            (0.1, 0.2)
        }
    }

    #[test]
    fn zero_phi() {
        assert_eq!(gw_zonal(&Zero, 3).unwrap(), 0.0);
    }

    #[test]
    fn divergence_bounds() {
        let p = divergence_probe(1e-4, 3).unwrap();
        assert!(p.pass && p.t_value >= 100.0);
        let p = divergence_probe(1e-2, 3).unwrap();
        assert!(p.pass && p.t_value >= 10.0);
        let eps = log_spaced(1e-2, 1e-5, 7).unwrap();
        assert_relative_eq!(eps[1], 10f64.powf(-2.5), max_relative = 1e-14);
        let sweep = divergence_sweep(&eps, 3).unwrap();
        assert!(sweep.pass());
        assert_relative_eq!(sweep.slope, -0.5, epsilon = 1e-6);
    }

    #[test]
    fn valuation_on_ball_is_zonal_integral() {
        // the sqrt|x_n| kink limits the product grid to slow convergence
        let grid = build_grid(3, 60).unwrap();
        let f = CounterexampleDensity::new(3).unwrap();
        let exact = 2.0
            * std::f64::consts::PI
            * integrate(|t| f.value(t), -1.0, 1.0, 1e-13, 1e-13).unwrap();
        let ball = make_ball(3, 1.0).unwrap();
        let v = counterexample_valuation(&ball, 1, &grid).unwrap();
        assert_relative_eq!(v, exact, max_relative = 2e-2);
        let shifted = ball
            .translated(&DVector::from_vec(vec![0.3, -0.2, 0.5]))
            .unwrap();
        assert_relative_eq!(
            counterexample_valuation(&shifted, 1, &grid).unwrap(),
            v,
            max_relative = 1e-7
        );
        let e = make_ellipsoid(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.5, 0.7, 1.1,
        ])))
        .unwrap();
        let v2 = counterexample_valuation(&e, 2, &grid).unwrap();
        assert_relative_eq!(
            counterexample_valuation(&e.scaled(2.0).unwrap(), 2, &grid).unwrap(),
            4.0 * v2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn reduction_constant() {
        let grid = build_grid(3, 30).unwrap();
        let ball = make_ball(3, 1.0).unwrap();
        let r = derivative_reduction(&ball, 2, &grid).unwrap();
        assert!(r.residual <= FIT_RESIDUAL_LIMIT);
        assert!(r.binomial_relative_error() < 1e-8, "{r:?}");
        let r1 = derivative_reduction(&ball, 1, &grid).unwrap();
        assert_eq!(r1.derivative, r1.mu1);
    }
}
