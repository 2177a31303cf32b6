//! Dense complex helpers shared by the model and the solvers.

use nalgebra::{DMatrix, DVector};

#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex64;
pub type CMat = DMatrix<c64>;
pub type CVec = DVector<c64>;

pub(crate) const J: c64 = c64::new(0.0, 1.0);

/// Largest deviation from Hermitian symmetry, `max |A(i,j) - conj(A(j,i))|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Symmetrizes `a` in place as `(A + A^H) / 2`.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = c64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == c64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Real symmetric embedding `[[Re, -Im], [Im, Re]]` of a Hermitian matrix.
///
/// `H ⪰ 0` iff the embedding is PSD; each eigenvalue of `H` appears twice.
pub fn real_embedding(a: &CMat) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    out
}

/// Inverse of [`real_embedding`], averaging the redundant blocks.
pub fn from_real_embedding(m: &DMatrix<f64>) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(i + n, j + n)]);
        let im = 0.5 * (m[(i + n, j)] - m[(i, j + n)]);
        c64::new(re, im)
    })
}

pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

pub fn to_cvec(v: &[c64]) -> CVec {
    CVec::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_round_trip() {
        let a = CMat::from_fn(3, 3, |i, j| c64::new((i + j) as f64, i as f64 - j as f64));
        let back = from_real_embedding(&real_embedding(&a));
        assert!((back - a).norm() < 1e-14);
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = CMat::from_row_slice(2, 1, &[c64::new(1.0, 0.0), c64::new(2.0, 0.0)]);
        let b = CMat::from_row_slice(1, 2, &[c64::new(0.0, 1.0), c64::new(3.0, 0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (2, 2));
        assert_eq!(k[(1, 0)], c64::new(0.0, 2.0));
        assert_eq!(k[(1, 1)], c64::new(6.0, 0.0));
    }
}
