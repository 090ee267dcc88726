//! Mixed area densities, mixed volumes and Steiner coefficients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bodies::{make_ball, make_polytope, BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::hull::{self, Polytope3, P2, P3};
use crate::sphere::{mixed_discriminant_slices, tangent_basis, SphereGrid, SphericalFunction};

/// Icosphere levels used to extrapolate smooth bodies in the polytope route.
pub const DEFAULT_LEVELS: [usize; 3] = [1, 2, 3];
/// Finer levels for Steiner tables of polytopes.
pub const STEINER_LEVELS: [usize; 3] = [2, 3, 4];
const STEINER_FIT_LIMIT: f64 = 1e-6;

/// Node values of the density of `S_{n-1}(K[k], L_2, ..., L_{n-k})`.
#[derive(Debug, Clone)]
pub struct MixedAreaDensity {
    k: usize,
    values: Vec<f64>,
}

impl MixedAreaDensity {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total mass of the measure on `grid`.
    pub fn mass(&self, grid: &SphereGrid) -> f64 {
        grid.integrate_values(&self.values)
    }
}

fn check_smooth(body: &ConvexBody, n: usize) -> Result<()> {
    if body.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: body.dim(),
        });
    }
    if !body.is_smooth() {
        return Err(Error::InvalidInput(format!(
            "{:?} body cannot occupy a curvature slot; only the integrated slot accepts non-smooth bodies",
            body.kind()
        )));
    }
    Ok(())
}

pub fn mixed_area_density(
    body: &ConvexBody,
    k: usize,
    others: &[&ConvexBody],
    grid: &SphereGrid,
) -> Result<MixedAreaDensity> {
    let n = grid.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "multiplicity k must lie in 1..={}, got {k}",
            n - 1
        )));
    }
    if others.len() != n - k - 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} further bodies for k = {k}, got {}",
            n - k - 1,
            others.len()
        )));
    }
    check_smooth(body, n)?;
    for b in others {
        check_smooth(b, n)?;
    }
    let m = n - 1;
    let values = grid
        .nodes()
        .par_iter()
        .map(|x| {
            let v = tangent_basis(x);
            let hk = flat(&body.restricted_hessian(x, &v).expect("smooth body"));
            let rest: Vec<Vec<f64>> = others
                .iter()
                .map(|b| flat(&b.restricted_hessian(x, &v).expect("smooth body")))
                .collect();
            let mut args: Vec<&[f64]> = vec![&hk; k];
            args.extend(rest.iter().map(|r| r.as_slice()));
            mixed_discriminant_slices(m, &args)
        })
        .collect();
    Ok(MixedAreaDensity { k, values })
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// `V(K[k], L_1, L_2, ..., L_{n-k}) = (1/n) int h_{L_1} dS_{n-1}(K[k], L_2, ...)`.
pub fn mixed_volume_smooth(
    l1: &ConvexBody,
    body: &ConvexBody,
    k: usize,
    others: &[&ConvexBody],
    grid: &SphereGrid,
) -> Result<f64> {
    let n = grid.dim();
    if l1.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: l1.dim(),
        });
    }
    let density = mixed_area_density(body, k, others, grid)?;
    let total: f64 = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(density.values())
        .map(|((x, w), d)| w * l1.value(x) * d)
        .sum();
    Ok(total / n as f64)
}

/// Mixed volume of `n` bodies by quadrature; at most one of them may be
/// non-smooth, and it is placed in the integrated slot.
pub fn mixed_volume_quadrature(bodies: &[&ConvexBody], grid: &SphereGrid) -> Result<f64> {
    let n = grid.dim();
    if bodies.len() != n {
        return Err(Error::InvalidInput(format!(
            "mixed volume needs {n} bodies, got {}",
            bodies.len()
        )));
    }
    let rough: Vec<usize> = (0..n).filter(|&i| !bodies[i].is_smooth()).collect();
    if rough.len() > 1 {
        return Err(Error::InvalidInput(
            "quadrature route accepts at most one non-smooth body".into(),
        ));
    }
    let slot = rough.first().copied().unwrap_or(0);
    let rest: Vec<&ConvexBody> = (0..n).filter(|&i| i != slot).map(|i| bodies[i]).collect();
    mixed_volume_smooth(bodies[slot], rest[0], 1, &rest[1..], grid)
}

/// Volume of a smooth body by quadrature, or of a polytope exactly.
pub fn volume(body: &ConvexBody, grid: &SphereGrid) -> Result<f64> {
    if body.kind() == BodyKind::Polytope {
        return polytope_volume(body);
    }
    let n = grid.dim();
    mixed_volume_smooth(body, body, n - 1, &[], grid)
}

#[derive(Clone)]
enum Prepared {
    Planar(Vec<P2>),
    Spatial(Polytope3),
}

fn prepare(vertices: &[DVector<f64>]) -> Result<Prepared> {
    match vertices[0].len() {
        2 => Ok(Prepared::Planar(
            vertices.iter().map(|v| [v[0], v[1]]).collect(),
        )),
        3 => Ok(Prepared::Spatial(Polytope3::new(
            &vertices
                .iter()
                .map(|v| [v[0], v[1], v[2]])
                .collect::<Vec<P3>>(),
        )?)),
        n => Err(Error::Unsupported(format!(
            "polytope computations in dimension {n}"
        ))),
    }
}

fn polytope_vertices(body: &ConvexBody) -> Result<Vec<DVector<f64>>> {
    body.vertices()
        .ok_or_else(|| Error::InvalidInput(format!("{:?} body is not a polytope", body.kind())))
}

/// Exact volume of the convex hull of a polytope's vertices; zero for
/// lower-dimensional polytopes.
pub fn polytope_volume(body: &ConvexBody) -> Result<f64> {
    let verts = polytope_vertices(body)?;
    if body.is_lower_dimensional() {
        return Ok(0.0);
    }
    match prepare(&verts)? {
        Prepared::Planar(p) => Ok(hull::polygon_area(&hull::hull2_points(&p))),
        Prepared::Spatial(p) => p.volume(),
    }
}

fn minkowski_volume(parts: &[Prepared], lambdas: &[f64]) -> Result<f64> {
    match &parts[0] {
        Prepared::Planar(_) => {
            let terms: Vec<(f64, &[P2])> = parts
                .iter()
                .zip(lambdas)
                .map(|(p, l)| match p {
                    Prepared::Planar(v) => (*l, v.as_slice()),
                    Prepared::Spatial(_) => unreachable!("mixed dimensions rejected earlier"),
                })
                .collect();
            Ok(hull::minkowski_area2(&terms))
        }
        Prepared::Spatial(_) => {
            let terms: Vec<(f64, &Polytope3)> = parts
                .iter()
                .zip(lambdas)
                .map(|(p, l)| match p {
                    Prepared::Spatial(v) => (*l, v),
                    Prepared::Planar(_) => unreachable!("mixed dimensions rejected earlier"),
                })
                .collect();
            hull::minkowski_volume3(&terms)
        }
    }
}

/// Exponent vectors of the monomials of total degree `d` in `m` variables.
fn exponents(m: usize, d: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in exponents(m - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn lambda_grid(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = (n + 1).pow(n as u32);
    for code in 1..total {
        let mut c = code;
        let mut l = Vec::with_capacity(n);
        for _ in 0..n {
            l.push((c % (n + 1)) as f64);
            c /= n + 1;
        }
        out.push(l);
    }
    out
}

/// Least-squares solution of `A c = b`.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return Err(Error::NumericalFailure(
            "rank-deficient polynomial fit".into(),
        ));
    }
    let c = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let residual = (a * &c - b).amax();
    Ok((c, residual))
}

fn mixed_coefficient(parts: &[Prepared]) -> Result<f64> {
    let n = parts.len();
    let grid = lambda_grid(n);
    let monos = exponents(n, n);
    let vols: Vec<f64> = grid
        .par_iter()
        .map(|l| minkowski_volume(parts, l))
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(grid.len(), monos.len(), |r, c| {
        monos[c]
            .iter()
            .zip(&grid[r])
            .map(|(&e, &l)| l.powi(e as i32))
            .product()
    });
    let (coef, _) = least_squares(a, DVector::from_vec(vols))?;
    let target = monos
        .iter()
        .position(|e| e.iter().all(|&k| k == 1))
        .expect("square-free monomial");
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    Ok(coef[target] / fact)
}

/// Mixed volume of `n` polytopes from the volume polynomial of their
/// Minkowski combinations on the integer grid `{0..n}^n`.
pub fn polytope_mixed_volume(bodies: &[&ConvexBody]) -> Result<f64> {
    let n = bodies.first().map(|b| b.dim()).unwrap_or(0);
    if bodies.len() != n {
        return Err(Error::InvalidInput(format!(
            "need {n} polytopes in R^{n}, got {}",
            bodies.len()
        )));
    }
    let mut parts = Vec::with_capacity(n);
    for b in bodies {
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.dim(),
            });
        }
        parts.push(prepare(&polytope_vertices(b)?)?);
    }
    mixed_coefficient(&parts)
}

/// Polytope inscribed in a body: the extreme points in the directions of a
/// subdivided icosahedron (or a regular polygon in the plane).
pub fn inscribed_polytope(body: &ConvexBody, level: usize) -> Result<ConvexBody> {
    if body.kind() == BodyKind::Polytope {
        return Ok(body.clone());
    }
    let dirs: Vec<DVector<f64>> = match body.dim() {
        2 => hull::circle_directions(8 << level)
            .iter()
            .map(|d| DVector::from_row_slice(d))
            .collect(),
        3 => hull::icosphere(level)
            .0
            .iter()
            .map(|d| DVector::from_row_slice(d))
            .collect(),
        n => {
            return Err(Error::Unsupported(format!(
                "polytope approximation in dimension {n}"
            )))
        }
    };
    make_polytope(dirs.iter().map(|u| body.support_point(u)).collect())
}

/// Polytope inscribed in a body through the directions of a subdivided
/// octahedron; contains the extreme points in the directions `+-e_i`.
pub fn octahedral_polytope(body: &ConvexBody, level: usize) -> Result<ConvexBody> {
    if body.dim() != 3 {
        return Err(Error::Unsupported(
            "octahedral approximation needs n = 3".into(),
        ));
    }
    let dirs = hull::octasphere(level).0;
    make_polytope(
        dirs.iter()
            .map(|d| body.support_point(&DVector::from_row_slice(d)))
            .collect(),
    )
}

/// Romberg extrapolation of values on refinement levels with error
/// expansion in even powers of the mesh width.
fn romberg(values: &[f64]) -> f64 {
    match values.len() {
        0 => f64::NAN,
        1 => values[0],
        2 => (4.0 * values[1] - values[0]) / 3.0,
        _ => {
            let k = values.len();
            let r1 = (4.0 * values[k - 2] - values[k - 3]) / 3.0;
            let r2 = (4.0 * values[k - 1] - values[k - 2]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        }
    }
}

/// Mixed volume through the volume polynomial; smooth bodies are replaced
/// by inscribed polytopes on each of `levels` and the results extrapolated.
pub fn mixed_volume_polytope_route(bodies: &[&ConvexBody], levels: &[usize]) -> Result<f64> {
    if bodies.iter().all(|b| b.kind() == BodyKind::Polytope) || levels.is_empty() {
        return polytope_mixed_volume(bodies);
    }
    let mut values = Vec::with_capacity(levels.len());
    for &level in levels {
        let approx = bodies
            .iter()
            .map(|b| inscribed_polytope(b, level))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&ConvexBody> = approx.iter().collect();
        values.push(polytope_mixed_volume(&refs)?);
    }
    Ok(romberg(&values))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `t^0, ..., t^n` in `vol(K + t B)`.
pub fn steiner_coefficients(body: &ConvexBody, grid: &SphereGrid) -> Result<Vec<f64>> {
    let n = grid.dim();
    if body.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: body.dim(),
        });
    }
    if body.is_smooth() {
        let ball = make_ball(n, 1.0)?;
        let mut out = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let v = match j {
                0 => mixed_volume_smooth(body, body, n - 1, &[], grid)?,
                _ if j == n => mixed_volume_smooth(&ball, &ball, n - 1, &[], grid)?,
                _ => {
                    let balls = vec![&ball; j - 1];
                    mixed_volume_smooth(&ball, body, n - j, &balls, grid)?
                }
            };
            out.push(binomial(n, j) * v);
        }
        return Ok(out);
    }
    if body.kind() != BodyKind::Polytope {
        return Err(Error::Unsupported(
            "Steiner table of a non-smooth combination".into(),
        ));
    }
    let ball = make_ball(n, 1.0)?;
    let body_part = prepare(&polytope_vertices(body)?)?;
    let ts: Vec<f64> = (0..=2 * n).map(|j| j as f64 / 2.0).collect();
    let mut per_level: Vec<Vec<f64>> = Vec::new();
    for level in STEINER_LEVELS {
        let b = inscribed_polytope(&ball, level)?;
        let parts = [body_part.clone(), prepare(&polytope_vertices(&b)?)?];
        let vols: Vec<f64> = ts
            .iter()
            .map(|&t| minkowski_volume(&parts, &[1.0, t]))
            .collect::<Result<_>>()?;
        let a = DMatrix::from_fn(ts.len(), n + 1, |r, c| ts[r].powi(c as i32));
        let scale = vols.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let (coef, residual) = least_squares(a, DVector::from_vec(vols))?;
        if residual > STEINER_FIT_LIMIT * scale {
            return Err(Error::NumericalFailure(format!(
                "Steiner polynomial fit residual {residual:.3e}"
            )));
        }
        per_level.push(coef.iter().copied().collect());
    }
    Ok((0..=n)
        .map(|j| romberg(&per_level.iter().map(|c| c[j]).collect::<Vec<_>>()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{make_ellipsoid, minkowski_support};
    use crate::sphere::build_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn cube(side: f64) -> ConvexBody {
        make_polytope(
            (0..8)
                .map(|m| DVector::from_fn(3, |i, _| side * ((m >> i) & 1) as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ball_density_is_one() {
        let g = build_grid(3, 10).unwrap();
        let b = make_ball(3, 1.0).unwrap();
        let d = mixed_area_density(&b, 1, &[&b], &g).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert_relative_eq!(d.mass(&g), 4.0 * PI, max_relative = 1e-10);
    }

    #[test]
    fn ellipsoid_density_at_axis() {
        // the grid for degree 20 does not contain e_1; use a tiny grid-free check
        let e = make_ellipsoid(&diag(&[4.0, 1.0, 1.0])).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v = tangent_basis(&x);
        let h = e.restricted_hessian(&x, &v).unwrap();
        assert_relative_eq!(
            mixed_discriminant_slices(2, &[h.as_slice(), h.as_slice()]),
            0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn density_rejects_bad_arguments() {
        let g = build_grid(3, 6).unwrap();
        let b = make_ball(3, 1.0).unwrap();
        assert!(mixed_area_density(&b, 0, &[&b, &b], &g).is_err());
        assert!(mixed_area_density(&b, 3, &[], &g).is_err());
        assert!(mixed_area_density(&cube(1.0), 2, &[], &g).is_err());
        assert!(mixed_area_density(&b, 1, &[], &g).is_err());
    }

    #[test]
    fn density_symmetric_in_others() {
        let g = build_grid(4, 4).unwrap();
        let a = make_ellipsoid(&diag(&[2.0, 1.0, 0.5, 1.5])).unwrap();
        let b = make_ellipsoid(&diag(&[1.0, 3.0, 1.0, 0.7])).unwrap();
        let c = make_ball(4, 1.3).unwrap();
        let d1 = mixed_area_density(&c, 1, &[&a, &b], &g).unwrap();
        let d2 = mixed_area_density(&c, 1, &[&b, &a], &g).unwrap();
        for (x, y) in d1.values().iter().zip(d2.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn ball_volume_by_quadrature() {
        let g = build_grid(3, 20).unwrap();
        let b = make_ball(3, 1.0).unwrap();
        assert_relative_eq!(
            mixed_volume_smooth(&b, &b, 2, &[], &g).unwrap(),
            4.0 * PI / 3.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn ellipsoid_volume_by_quadrature() {
        let g = build_grid(3, 20).unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.6]);
        let e = make_ellipsoid(&a).unwrap();
        let exact = 4.0 * PI / 3.0 * a.determinant().sqrt();
        assert_relative_eq!(volume(&e, &g).unwrap(), exact, max_relative = 1e-6);
    }

    #[test]
    fn polytope_volumes() {
        assert_relative_eq!(polytope_volume(&cube(1.0)).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(polytope_volume(&cube(2.0)).unwrap(), 8.0, epsilon = 1e-13);
        let e = |i: usize| DVector::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
        let simplex = make_polytope(vec![DVector::zeros(3), e(0), e(1), e(2)]).unwrap();
        assert_relative_eq!(
            polytope_volume(&simplex).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        let seg = make_polytope(vec![DVector::zeros(3), e(0)]).unwrap();
        assert_eq!(polytope_volume(&seg).unwrap(), 0.0);
    }

    #[test]
    fn cube_mixed_volumes() {
        let c = cube(1.0);
        assert_relative_eq!(
            polytope_mixed_volume(&[&c, &c, &c]).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        let ball = make_ball(3, 1.0).unwrap();
        // octahedral approximations contain +-e_i, so V(C, C, P) = 2 exactly
        for level in 0..3 {
            let p = octahedral_polytope(&ball, level).unwrap();
            assert_relative_eq!(
                polytope_mixed_volume(&[&c, &c, &p]).unwrap(),
                2.0,
                epsilon = 1e-10
            );
        }
        let mut last = 0.0;
        for level in 1..4 {
            let p = octahedral_polytope(&ball, level).unwrap();
            let v = polytope_mixed_volume(&[&c, &p, &p]).unwrap();
            assert!(v > last && v < PI);
            last = v;
        }
        assert!((last - PI).abs() < 0.05);
    }

    #[test]
    fn planar_mixed_area() {
        let sq = make_polytope(vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ])
        .unwrap();
        // V(Q, B) = half the perimeter of Q
        let disk = make_ball(2, 1.0).unwrap();
        let v = mixed_volume_polytope_route(&[&sq, &disk], &DEFAULT_LEVELS).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-6);
        let g = build_grid(2, 30).unwrap();
        // h_Q has kinks, so plain quadrature converges slowly
        assert_relative_eq!(
            mixed_volume_quadrature(&[&sq, &disk], &g).unwrap(),
            2.0,
            max_relative = 1e-3
        );
    }

    #[test]
    fn routes_agree_on_ellipsoids() {
        let g = build_grid(3, 20).unwrap();
        let a = make_ellipsoid(&diag(&[2.0, 1.0, 0.5])).unwrap();
        let b = make_ellipsoid(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.2, 0.0, 0.2, 1.5, 0.1, 0.0, 0.1, 0.8],
        ))
        .unwrap();
        let c = make_ball(3, 0.8).unwrap();
        let q = mixed_volume_quadrature(&[&a, &b, &c], &g).unwrap();
        let p = mixed_volume_polytope_route(&[&a, &b, &c], &DEFAULT_LEVELS).unwrap();
        assert_relative_eq!(q, p, max_relative = 1e-4);
    }

    #[test]
    fn ball_steiner_table() {
        let g = build_grid(3, 12).unwrap();
        let b = make_ball(3, 1.0).unwrap();
        let s = steiner_coefficients(&b, &g).unwrap();
        let k = 4.0 * PI / 3.0;
        for (c, e) in s.iter().zip([k, 3.0 * k, 3.0 * k, k]) {
            assert_relative_eq!(*c, e, max_relative = 1e-10);
        }
    }

    #[test]
    fn multilinear_in_integrated_slot() {
        let g = build_grid(3, 16).unwrap();
        let a = make_ellipsoid(&diag(&[2.0, 1.0, 0.5])).unwrap();
        let b = make_ball(3, 1.0).unwrap();
        let c = cube(1.0);
        let sum = minkowski_support(&[a.clone(), c.clone()], &[2.0, 0.5]).unwrap();
        let lhs = mixed_volume_smooth(&sum, &a, 1, &[&b], &g).unwrap();
        let rhs = 2.0 * mixed_volume_smooth(&a, &a, 1, &[&b], &g).unwrap()
            + 0.5 * mixed_volume_smooth(&c, &a, 1, &[&b], &g).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }
}
