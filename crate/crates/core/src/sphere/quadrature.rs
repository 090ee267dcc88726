//! One-dimensional Gauss rules and sphere measure constants.

use nalgebra::{DMatrix, SymmetricEigen};

/// Surface area of the unit sphere `S^d` sitting in `R^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (d as f64 - 1.0) * unit_sphere_area(d - 2),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n - 1) / n as f64
}

/// Gauss rule with `p` nodes for the weight `(1 - t^2)^a` on `[-1, 1]`.
///
/// Nodes come from the Golub-Welsch eigenproblem and are then polished by
/// Newton steps on the orthonormal recurrence; weights are Christoffel
/// numbers. The rule is exact for polynomials of degree `2p - 1`.
pub fn gauss_gegenbauer(p: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1 && a > -1.0);
    let mass = mass(a);
    let b: Vec<f64> = (0..=p)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                let k = k as f64;
                (k * (k + 2.0 * a) / (4.0 * (k + a) * (k + a) - 1.0)).sqrt()
            }
        })
        .collect();

    let mut jacobi = DMatrix::<f64>::zeros(p, p);
    for k in 1..p {
        jacobi[(k, k - 1)] = b[k];
        jacobi[(k - 1, k)] = b[k];
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(f64::total_cmp);

    // orthonormal recurrence: b_{k+1} q_{k+1} = t q_k - b_k q_{k-1}
    let eval = |t: f64| -> (f64, f64, f64) {
        let mut q_prev = 0.0;
        let mut q = 1.0 / mass.sqrt();
        let mut dq_prev = 0.0;
        let mut dq = 0.0;
        let mut sum_sq = q * q;
        for k in 0..p {
            let q_next = (t * q - b[k] * q_prev) / b[k + 1];
            let dq_next = (q + t * dq - b[k] * dq_prev) / b[k + 1];
            q_prev = q;
            q = q_next;
            dq_prev = dq;
            dq = dq_next;
            if k + 1 < p {
                sum_sq += q * q;
            }
        }
        (q, dq, sum_sq)
    };

    let mut weights = vec![0.0; p];
    for (i, t) in nodes.iter_mut().enumerate() {
        for _ in 0..3 {
            let (q, dq, _) = eval(*t);
            if dq != 0.0 {
                *t -= q / dq;
            }
        }
        weights[i] = 1.0 / eval(*t).2;
    }

    // enforce the reflection symmetry of the weight exactly
    for i in 0..p / 2 {
        let j = p - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -t;
        nodes[j] = t;
        weights[i] = w;
        weights[j] = w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    (nodes, weights)
}

fn mass(a: f64) -> f64 {
    // integral of (1 - t^2)^a over [-1, 1]; for a = (n - 3) / 2 this is
    // |S^{n-1}| / |S^{n-2}|, which covers every case the grids need
    let twice = 2.0 * a;
    if (twice - twice.round()).abs() < 1e-12 && twice >= 0.0 {
        let n = twice.round() as usize + 3;
        unit_sphere_area(n - 1) / unit_sphere_area(n - 2)
    } else {
        // composite Gauss-Legendre fallback for other exponents
        let (t, w) = gauss_gegenbauer(64, 0.0);
        t.iter()
            .zip(&w)
            .map(|(t, w)| w * (1.0 - t * t).powf(a))
            .sum()
    }
}

/// Gauss-Legendre rule on `[lo, hi]` with `p` nodes.
pub fn gauss_legendre(p: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_gegenbauer(p, 0.0);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        t.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|w| w * half).collect(),
    )
}
