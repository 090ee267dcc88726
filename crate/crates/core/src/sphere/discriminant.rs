use std::cmp::Ordering;

use nalgebra::DMatrix;

use super::SymForm;
use crate::error::{Error, Result};

const MAX_SIZE: usize = 8;

/// Determinant of a row-major `m x m` matrix.
pub fn determinant(m: usize, a: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), m * m);
    match m {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => lu_determinant(m, a),
    }
}

fn lu_determinant(m: usize, a: &[f64]) -> f64 {
    let mut w = [0.0; MAX_SIZE * MAX_SIZE];
    w[..m * m].copy_from_slice(a);
    let mut det = 1.0;
    for c in 0..m {
        let p = (c..m)
            .max_by(|&i, &j| w[i * m + c].abs().total_cmp(&w[j * m + c].abs()))
            .unwrap_or(c);
        if w[p * m + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..m {
                w.swap(p * m + k, c * m + k);
            }
            det = -det;
        }
        let pivot = w[c * m + c];
        det *= pivot;
        for r in c + 1..m {
            let f = w[r * m + c] / pivot;
            for k in c + 1..m {
                w[r * m + k] -= f * w[c * m + k];
            }
        }
    }
    det
}

/// Mixed discriminant of `m` row-major `m x m` matrices.
///
/// Arguments are put into a canonical order first, so any permutation of the
/// inputs yields the same floating-point result.
pub fn mixed_discriminant_slices(m: usize, mats: &[&[f64]]) -> f64 {
    assert!(
        m <= MAX_SIZE,
        "mixed discriminant limited to size {MAX_SIZE}"
    );
    assert_eq!(mats.len(), m);
    if m == 0 {
        return 1.0;
    }
    let mut order = [0usize; MAX_SIZE];
    for (i, o) in order.iter_mut().enumerate().take(m) {
        *o = i;
    }
    order[..m].sort_by(|&i, &j| lex_cmp(mats[i], mats[j]));

    let mut total = 0.0;
    let mut acc = [0.0; MAX_SIZE * MAX_SIZE];
    for mask in 1u32..(1 << m) {
        acc[..m * m].fill(0.0);
        for (bit, &idx) in order[..m].iter().enumerate() {
            if mask & (1 << bit) != 0 {
                for (s, v) in acc[..m * m].iter_mut().zip(mats[idx]) {
                    *s += v;
                }
            }
        }
        let det = determinant(m, &acc[..m * m]);
        if (m - mask.count_ones() as usize).is_multiple_of(2) {
            total += det;
        } else {
            total -= det;
        }
    }
    total / factorial(m)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Mixed discriminant of `m` square matrices of size `m`.
pub fn mixed_discriminant_matrices(mats: &[&DMatrix<f64>]) -> Result<f64> {
    let m = mats.len();
    if m > MAX_SIZE {
        return Err(Error::Unsupported(format!(
            "mixed discriminant of size {m}"
        )));
    }
    let mut rows = Vec::with_capacity(m);
    for a in mats {
        if a.nrows() != m || a.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: a.nrows().max(a.ncols()),
            });
        }
        // nalgebra is column-major; transposing does not change the value
        rows.push(a.as_slice());
    }
    Ok(mixed_discriminant_slices(m, &rows))
}

/// Mixed discriminant `D_m(A_1, ..., A_m)` of forms on the same tangent space.
pub fn mixed_discriminant(forms: &[&SymForm]) -> Result<f64> {
    let frame = forms.iter().find_map(|f| f.basis());
    if let Some(frame) = frame {
        for f in forms {
            if let Some(b) = f.basis() {
                if b.point() != frame.point() {
                    return Err(Error::InvalidInput(
                        "forms live on different tangent spaces".into(),
                    ));
                }
            }
        }
    }
    let mats: Vec<&DMatrix<f64>> = forms.iter().map(|f| f.matrix()).collect();
    mixed_discriminant_matrices(&mats)
}
