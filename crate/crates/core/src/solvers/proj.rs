//! Projection onto Hermitian PSD matrices with a prescribed diagonal,
//!
//! ```text
//! minimize ‖X - C‖_F²   subject to  diag(X) = d,  X ⪰ 0,
//! ```
//!
//! solved on its dual `θ(y) = ½‖(C + Diag y)_+‖² - dᵀy` by a semismooth
//! Newton iteration with backtracking. The primal solution is
//! `X = (C + Diag y*)_+`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{c64, frobenius_sq, CMat};
use crate::solvers::eig::{herm_eig, HermEig};

#[derive(Debug, Clone)]
pub struct FixedDiagProjection {
    pub x: CMat,
    pub dual: DVector<f64>,
    pub iterations: usize,
    /// `max_i |X_ii - d_i|` at termination.
    pub residual: f64,
}

fn psd_part(e: &HermEig) -> CMat {
    e.reconstruct_with(|v| v.max(0.0))
}

fn shifted(c: &CMat, y: &DVector<f64>) -> CMat {
    let mut m = c.clone();
    for i in 0..y.len() {
        m[(i, i)] += c64::new(y[i], 0.0);
    }
    m
}

fn dual_value(x_plus: &CMat, y: &DVector<f64>, d: &DVector<f64>) -> f64 {
    0.5 * frobenius_sq(x_plus) - d.dot(y)
}

/// Generalized Jacobian of `y -> diag((C + Diag y)_+)`.
fn jacobian(e: &HermEig) -> DMatrix<f64> {
    let n = e.values.len();
    let lam = &e.values;
    let omega = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (lam[i], lam[j]);
        match (a > 0.0, b > 0.0) {
            (true, true) => 1.0,
            (false, false) => 0.0,
            _ => (a.max(0.0) - b.max(0.0)) / (a - b),
        }
    });
    let p = &e.vectors;
    // J(m, k) = Σ_ij Ω_ij Re[P_mi conj(P_mj) conj(P_ki) P_kj]
    let mut jac = DMatrix::zeros(n, n);
    let rows: Vec<CMat> = (0..n)
        .map(|m| CMat::from_fn(n, n, |i, j| p[(m, i)] * p[(m, j)].conj()))
        .collect();
    for m in 0..n {
        for k in m..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let w = omega[(i, j)];
                    if w != 0.0 {
                        acc += w * (rows[m][(i, j)] * rows[k][(i, j)].conj()).re;
                    }
                }
            }
            jac[(m, k)] = acc;
            jac[(k, m)] = acc;
        }
    }
    jac
}

/// Rescales rows and columns so the diagonal is met exactly; a congruence,
/// so PSD is preserved.
fn finish(mut x: CMat, dual: DVector<f64>, d: &DVector<f64>, iterations: usize) -> FixedDiagProjection {
    let n = d.len();
    let scales: Vec<f64> = (0..n)
        .map(|i| {
            let xi = x[(i, i)].re;
            if xi > 0.0 {
                (d[i] / xi).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] *= scales[i] * scales[j];
        }
    }
    let residual = (0..n).map(|i| (x[(i, i)].re - d[i]).abs()).fold(0.0, f64::max);
    FixedDiagProjection {
        x,
        dual,
        iterations,
        residual,
    }
}

/// Nearest PSD matrix to `c` (Frobenius) whose diagonal equals `d`.
pub fn project_fixed_diag_psd(c: &CMat, d: &DVector<f64>, tol: f64) -> Result<FixedDiagProjection> {
    let n = c.nrows();
    if c.ncols() != n || d.len() != n {
        return Err(Error::Dimension {
            what: "fixed-diagonal projection",
            expected: n,
            got: d.len(),
        });
    }
    if d.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::domain("prescribed diagonal must be nonnegative"));
    }
    let mut cc = c.clone();
    crate::linalg::hermitize(&mut cc);
    let scale = d.amax().max(cc.iter().map(|v| v.norm()).fold(1.0, f64::max));

    let mut y = DVector::from_fn(n, |i, _| d[i] - cc[(i, i)].re);
    let mut e = herm_eig(&shifted(&cc, &y))?;
    let mut x = psd_part(&e);
    let mut theta = dual_value(&x, &y, d);
    for it in 0..200 {
        let grad = DVector::from_fn(n, |i, _| x[(i, i)].re - d[i]);
        let res = grad.amax();
        if res <= tol * scale {
            return Ok(finish(x, y, d, it));
        }
        let mut jac = jacobian(&e);
        let reg = (res.min(1.0) * 1e-2).max(1e-14);
        for i in 0..n {
            jac[(i, i)] += reg;
        }
        let step = match jac.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -&grad,
        };
        // Armijo backtracking on the convex dual
        let slope = grad.dot(&step);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let y_try = &y + &step * alpha;
            let e_try = herm_eig(&shifted(&cc, &y_try))?;
            let x_try = psd_part(&e_try);
            let th = dual_value(&x_try, &y_try, d);
            let flat = (th - theta).abs() <= 1e-14 * theta.abs().max(1.0);
            let res_try = DVector::from_fn(n, |i, _| x_try[(i, i)].re - d[i]).amax();
            if th < theta + 1e-4 * alpha * slope || (flat && res_try < 0.5 * res) {
                y = y_try;
                e = e_try;
                x = x_try;
                theta = th;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // the dual is flat to machine precision; accept the current point
            let res = DVector::from_fn(n, |i, _| x[(i, i)].re - d[i]).amax();
            if res <= 1e3 * tol * scale {
                return Ok(finish(x, y, d, it));
            }
            return Err(Error::Solver(format!(
                "fixed-diagonal projection stalled with residual {res:.3e}"
            )));
        }
    }
    Err(Error::Solver("fixed-diagonal projection hit its iteration cap".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::conic::{solve_conic, ConicProblem, Constraint, LinExpr, SolverSettings};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_herm(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| {
            c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        (&a + a.adjoint()) * c64::new(0.5, 0.0)
    }

    #[test]
    fn feasible_input_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_herm(5, &mut rng);
        let x = &b * b.adjoint();
        let d = DVector::from_fn(5, |i, _| x[(i, i)].re);
        let p = project_fixed_diag_psd(&x, &d, 1e-12).unwrap();
        assert!((p.x - x).norm() < 1e-8);
    }

    #[test]
    fn result_is_feasible_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 8;
        let c = random_herm(n, &mut rng);
        let d = DVector::from_element(n, 0.5);
        let p = project_fixed_diag_psd(&c, &d, 1e-12).unwrap();
        assert!(p.residual < 1e-11);
        assert!(herm_eig(&p.x).unwrap().min() > -1e-10);
        // optimality: <C - X, Y - X> <= 0 for feasible Y
        for _ in 0..50 {
            let b = random_herm(n, &mut rng);
            let mut y = &b * b.adjoint();
            for i in 0..n {
                let s = (0.5 / y[(i, i)].re).sqrt();
                for j in 0..n {
                    y[(i, j)] *= s;
                    y[(j, i)] *= s;
                }
            }
            let ip = ((&c - &p.x).adjoint() * (&y - &p.x)).trace().re;
            assert!(ip <= 1e-8, "{ip}");
        }
    }

    #[test]
    fn agrees_with_conic_epigraph_formulation() {
        // min τ  s.t.  ‖X - C‖² <= τ, diag X = d, X ⪰ 0
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let c = random_herm(n, &mut rng);
        let d = DVector::from_vec(vec![1.0, 0.5, 2.0]);
        let p = project_fixed_diag_psd(&c, &d, 1e-12).unwrap();

        let mut prob = ConicProblem::new();
        let xv = prob.add_hermitian("X", n, true);
        let tau = prob.add_scalar("tau");
        for i in 0..n {
            prob.add_equality(LinExpr::var(xv.diag_var(i)).plus(-d[i]));
        }
        // ‖X - C‖_F² written over the real coordinates of X
        let mut w = Vec::new();
        for (v, e) in xv.basis() {
            let weight = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let target = (e.adjoint() * &c).trace().re / weight;
            w.push(LinExpr::default().term(v, weight).plus(-target));
        }
        prob.add(Constraint::QuadLe {
            t: LinExpr::var(tau),
            w,
        });
        prob.minimize(LinExpr::var(tau));
        let sol = solve_conic(&prob, &SolverSettings::default()).unwrap();
        assert!(sol.is_optimal());
        let x_conic = xv.value(&sol.values);
        assert!((x_conic - &p.x).norm() < 1e-4);
        assert!((sol.objective_value - frobenius_sq(&(&p.x - &c))).abs() < 1e-6);
    }
}
