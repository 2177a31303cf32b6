//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_defect, CMat, CVec};
use nalgebra::DVector;

const MAX_SWEEPS: usize = 100;

/// Eigen-pairs of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: DVector<f64>,
    /// Columns are the eigenvectors, matching `values`.
    pub vectors: CMat,
}

impl HermEig {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Rebuilds `V f(Λ) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).scale_mut(fj);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Fails with a domain error when `a` is not square or is not Hermitian to
/// within `1e-10 * max(1, max|a_ij|)`.
pub fn herm_eig(a: &CMat) -> Result<HermEig> {
    if !a.is_square() {
        return Err(Error::domain(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let defect = hermitian_defect(a);
    if defect > 1e-10 * scale {
        return Err(Error::domain(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(jacobi(a))
}

fn off_norm_sq(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc
}

fn jacobi(input: &CMat) -> HermEig {
    let n = input.nrows();
    let mut a = input.clone();
    crate::linalg::hermitize(&mut a);
    let mut v = CMat::identity(n, n);
    let total: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_norm_sq(&a) <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // skip rotations that cannot change the diagonal at working precision
                if g < 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = c64::new(0.0, 0.0);
                    a[(q, p)] = c64::new(0.0, 0.0);
                    continue;
                }
                let phase = apq / g;
                let zeta = (aqq - app) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e*, c e*]] with e = phase
                let upp = c64::new(c, 0.0);
                let uqp = -phase.conj() * s;
                let upq = c64::new(s, 0.0);
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = c64::new(0.0, 0.0);
                a[(q, p)] = c64::new(0.0, 0.0);
                a[(p, p)] = c64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = c64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)].re));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    reorthonormalize(&mut vectors);
    HermEig { values, vectors }
}

/// Two passes of modified Gram-Schmidt over the columns.
fn reorthonormalize(v: &mut CMat) {
    let n = v.ncols();
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let proj = v.column(k).dotc(&v.column(j));
                let vk = v.column(k).clone_owned();
                v.column_mut(j).axpy(-proj, &vk, c64::new(1.0, 0.0));
            }
            let nrm = v.column(j).norm();
            if nrm > 0.0 {
                v.column_mut(j).unscale_mut(nrm);
            }
        }
    }
}

/// Rotates `x` so that its largest-modulus entry is real and positive.
pub fn fix_phase(x: &mut CVec) {
    let mut best = 0usize;
    let mut best_mod = -1.0;
    for (i, v) in x.iter().enumerate() {
        let m = v.norm();
        if m > best_mod * (1.0 + 1e-12) {
            best_mod = m;
            best = i;
        }
    }
    if best_mod > 0.0 {
        let ph = x[best].conj() / best_mod;
        for v in x.iter_mut() {
            *v *= ph;
        }
    }
}

/// Unit eigenvector for the largest eigenvalue, phase-normalized by [`fix_phase`].
pub fn principal_eigvec(a: &CMat) -> Result<CVec> {
    let eig = herm_eig(a)?;
    let mut x = eig.vectors.column(0).clone_owned();
    fix_phase(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = CMat::from_fn(n, n, |_, _| {
            c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut h = &b + b.adjoint();
        crate::linalg::hermitize(&mut h);
        h
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = herm_eig(&CMat::identity(4, 4)).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_sorted_descending() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c64::new(1.0, 0.0);
        a[(1, 1)] = c64::new(3.0, 0.0);
        let eig = herm_eig(&a).unwrap();
        assert_eq!(eig.values.as_slice(), &[3.0, 1.0]);
        assert!((eig.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_32_reconstructs() {
        let a = random_hermitian(32, 7);
        let eig = herm_eig(&a).unwrap();
        let scale = a.norm();
        let av = &a * &eig.vectors;
        let mut vl = eig.vectors.clone();
        for j in 0..32 {
            vl.column_mut(j).scale_mut(eig.values[j]);
        }
        assert!((av - vl).norm() <= 1e-8 * scale);
        let gram = eig.vectors.adjoint() * &eig.vectors;
        assert!((gram - CMat::identity(32, 32)).norm() <= 1e-10);
        for w in eig.values.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = c64::new(1.0, 0.0);
        assert!(matches!(herm_eig(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn principal_vector_of_diag() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = c64::new(5.0, 0.0);
        a[(1, 1)] = c64::new(1.0, 0.0);
        let x = principal_eigvec(&a).unwrap();
        assert!((x[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(x[1].norm() < 1e-14);
    }

    #[test]
    fn principal_vector_tie_is_unit() {
        let a = CMat::identity(3, 3);
        let x = principal_eigvec(&a).unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-14);
        assert!((crate::linalg::quad_form(&a, &x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn principal_vector_rayleigh_matches_max() {
        let b = random_hermitian(12, 3);
        let a = &b * b.adjoint();
        let eig = herm_eig(&a).unwrap();
        let x = principal_eigvec(&a).unwrap();
        let rq = crate::linalg::quad_form(&a, &x);
        assert!((rq - eig.max()).abs() <= 1e-8 * eig.max().max(1.0));
        let (imax, _) = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!(x[imax].im.abs() < 1e-12 && x[imax].re > 0.0);
    }
}
