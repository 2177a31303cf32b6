//! Quadratic minimization over a complex Euclidean ball,
//!
//! ```text
//! minimize  t^H U t   subject to  ‖t - t0‖ <= r.
//! ```
//!
//! [`min_quad_ball`] handles PSD `U` by a secular equation on the
//! eigenbasis; [`trs_dual`] solves the Lagrangian dual as an SDP and works
//! for indefinite `U` too. The two are used as independent checks of each
//! other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_defect, quad_form, CMat, CVec};
use crate::solvers::conic::{solve_conic, ConicProblem, Constraint, LinExpr, SolverSettings};
use crate::solvers::eig::herm_eig;

/// Minimizer of a quadratic over the ball.
#[derive(Debug, Clone)]
pub struct TrsResult {
    pub t_star: CVec,
    /// `t_star^H U t_star`.
    pub value: f64,
    /// Multiplier `λ >= 0` of the ball constraint.
    pub multiplier: f64,
}

fn check(u: &CMat, t0: &CVec, r: f64) -> Result<()> {
    if u.nrows() != u.ncols() || u.nrows() != t0.len() {
        return Err(Error::Dimension {
            what: "ball quadratic",
            expected: t0.len(),
            got: u.nrows(),
        });
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("ball radius must be finite and >= 0, got {r}")));
    }
    let scale = u.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if hermitian_defect(u) > 1e-9 * scale {
        return Err(Error::domain("ball quadratic is not Hermitian"));
    }
    Ok(())
}

/// Distance `‖t(λ) - t0‖` for `t(λ) = λ (U + λI)^{-1} t0` in the eigenbasis.
fn secular_dist(d: &[f64], c: &[c64], lambda: f64) -> f64 {
    d.iter()
        .zip(c)
        .map(|(di, ci)| (di * ci.norm() / (di + lambda)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Minimizer of `t^H U t` over the ball for Hermitian PSD `U`.
pub fn min_quad_ball(u: &CMat, t0: &CVec, r: f64) -> Result<TrsResult> {
    check(u, t0, r)?;
    let q = t0.len();
    if t0.norm() <= r {
        return Ok(TrsResult {
            t_star: CVec::zeros(q),
            value: 0.0,
            multiplier: 0.0,
        });
    }
    if r == 0.0 {
        return Ok(TrsResult {
            value: quad_form(u, t0),
            t_star: t0.clone(),
            // the multiplier is unbounded on a singleton ball; report 0
            multiplier: 0.0,
        });
    }
    let eig = herm_eig(u)?;
    let tol = 1e-12 * eig.max().abs().max(1.0);
    if eig.min() < -tol {
        return Err(Error::domain(format!(
            "min_quad_ball needs PSD U, smallest eigenvalue {:.3e}",
            eig.min()
        )));
    }
    let d: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let c: Vec<c64> = (eig.vectors.adjoint() * t0).iter().copied().collect();

    let build = |lambda: f64| -> CVec {
        let coef = CVec::from_iterator(
            q,
            d.iter().zip(&c).map(|(di, ci)| ci * (lambda / (di + lambda))),
        );
        &eig.vectors * coef
    };

    // distance decreases in λ; near λ = 0 it tends to the range component
    let lo = 1e-12 * d[0].max(1.0);
    if secular_dist(&d, &c, lo) <= r {
        // a null-space point reaches the ball
        let coef = CVec::from_iterator(
            q,
            d.iter()
                .zip(&c)
                .map(|(di, ci)| if *di <= tol { *ci } else { c64::new(0.0, 0.0) }),
        );
        let t = &eig.vectors * coef;
        return Ok(TrsResult {
            value: quad_form(u, &t).max(0.0),
            t_star: t,
            multiplier: 0.0,
        });
    }
    let mut hi = d[0].max(1.0);
    while secular_dist(&d, &c, hi) > r {
        hi *= 2.0;
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if secular_dist(&d, &c, m.exp()) > r {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let lambda = b.exp();
    let t = build(lambda);
    Ok(TrsResult {
        value: quad_form(u, &t),
        t_star: t,
        multiplier: lambda,
    })
}

/// Trust-region subproblem through its S-lemma dual
///
/// ```text
/// maximize γ  s.t.  [[U + λI, -λ t0], [-λ t0^H, λ(‖t0‖² - r²) - γ]] ⪰ 0,  λ >= 0,
/// ```
///
/// followed by primal recovery on the multiplier. `U` may be indefinite.
/// Returns the dual optimal value and the recovered primal minimizer.
pub fn trs_dual(u: &CMat, t0: &CVec, r: f64) -> Result<(f64, TrsResult)> {
    check(u, t0, r)?;
    let q = t0.len();
    let mut p = ConicProblem::new();
    let lam = p.add_scalar("lambda");
    let gam = p.add_scalar("gamma");
    let mut f_lam = CMat::zeros(q + 1, q + 1);
    for i in 0..q {
        f_lam[(i, i)] = c64::new(1.0, 0.0);
        f_lam[(i, q)] = -t0[i];
        f_lam[(q, i)] = -t0[i].conj();
    }
    f_lam[(q, q)] = c64::new(t0.norm_squared() - r * r, 0.0);
    let mut f_gam = CMat::zeros(q + 1, q + 1);
    f_gam[(q, q)] = c64::new(-1.0, 0.0);
    let mut k = CMat::zeros(q + 1, q + 1);
    k.view_mut((0, 0), (q, q)).copy_from(u);
    p.add(Constraint::Lmi {
        constant: k,
        terms: vec![(lam, f_lam), (gam, f_gam)],
    });
    p.add(Constraint::Nonneg(LinExpr::var(lam)));
    p.maximize(LinExpr::var(gam));
    let sol = solve_conic(&p, &SolverSettings::default())?.require_optimal("ball dual")?;
    let lambda_sdp = sol.value(lam).max(0.0);
    let dual_value = sol.value(gam);

    let eig = herm_eig(u)?;
    let d: Vec<f64> = eig.values.iter().copied().collect();
    let c: Vec<c64> = (eig.vectors.adjoint() * t0).iter().copied().collect();
    let dmin = *d.last().unwrap();
    let scale = d[0].abs().max(dmin.abs()).max(1.0);
    let tol = 1e-9 * scale;
    let floor = dmin.min(0.0).abs();

    let t_of = |lambda: f64| -> CVec {
        let coef = CVec::from_iterator(
            q,
            d.iter().zip(&c).map(|(di, ci)| ci * (lambda / (di + lambda))),
        );
        &eig.vectors * coef
    };

    let (t, lambda) = if lambda_sdp <= tol && dmin >= -tol {
        // interior optimum: a minimizer of a PSD form inside the ball
        let coef = CVec::from_iterator(
            q,
            d.iter()
                .zip(&c)
                .map(|(di, ci)| if di.abs() <= tol { *ci } else { c64::new(0.0, 0.0) }),
        );
        (&eig.vectors * coef, 0.0)
    } else {
        let lo = floor + 1e-13 * scale;
        if secular_dist(&d, &c, lo) >= r {
            let mut hi = (floor + lambda_sdp).max(lo) * 2.0 + 1.0;
            while secular_dist(&d, &c, hi) > r {
                hi *= 2.0;
            }
            let (mut a, mut b) = (lo, hi);
            for _ in 0..300 {
                let m = 0.5 * (a + b);
                if secular_dist(&d, &c, m) > r {
                    a = m;
                } else {
                    b = m;
                }
            }
            let l = 0.5 * (a + b);
            (t_of(l), l)
        } else {
            // hard case: move along the bottom eigenspace to the boundary
            let l = floor;
            let mut coef = CVec::zeros(q);
            let mut dist_sq = 0.0;
            for i in 0..q {
                if (d[i] - dmin).abs() > tol {
                    coef[i] = c[i] * (l / (d[i] + l));
                    dist_sq += (d[i] * c[i].norm() / (d[i] + l)).powi(2);
                } else {
                    coef[i] = c[i];
                }
            }
            let extra = (r * r - dist_sq).max(0.0).sqrt();
            coef[q - 1] += c64::new(extra, 0.0);
            (&eig.vectors * coef, l)
        }
    };
    Ok((
        dual_value,
        TrsResult {
            value: quad_form(u, &t),
            t_star: t,
            multiplier: lambda,
        },
    ))
}

/// Euclidean projection of `t` onto the ball of radius `r` around `t0`.
pub fn project_ball(t: &CVec, t0: &CVec, r: f64) -> CVec {
    let d = t - t0;
    let n = d.norm();
    if n <= r {
        t.clone()
    } else {
        t0 + d * c64::new(r / n, 0.0)
    }
}

/// `n` i.i.d. uniform draws from the complex ball of radius `r` around `t0`.
pub fn sample_ball(t0: &CVec, r: f64, n: usize, seed: u64) -> Vec<CVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_ball_with(t0, r, &mut rng)).collect()
}

/// One uniform draw from the ball using the caller's generator.
pub fn sample_ball_with<R: Rng + ?Sized>(t0: &CVec, r: f64, rng: &mut R) -> CVec {
    let q = t0.len();
    let dir = CVec::from_fn(q, |_, _| {
        c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let n = dir.norm();
    let u: f64 = rng.random();
    let rad = r * u.powf(1.0 / (2.0 * q as f64));
    t0 + dir * c64::new(rad / n, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_psd(q: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
        let b = CMat::from_fn(q, rank, |_, _| {
            c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        &b * b.adjoint()
    }

    fn random_vec(q: usize, rng: &mut ChaCha8Rng) -> CVec {
        CVec::from_fn(q, |_, _| c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
    }

    #[test]
    fn origin_inside_ball_gives_zero() {
        let u = CMat::identity(3, 3);
        let t0 = CVec::from_element(3, c64::new(0.1, 0.0));
        let m = min_quad_ball(&u, &t0, 1.0).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn identity_form_has_closed_form() {
        // min ‖t‖² over the ball: t = t0 (1 - r/‖t0‖)
        let u = CMat::identity(2, 2);
        let t0 = CVec::from_vec(vec![c64::new(3.0, 0.0), c64::new(0.0, 4.0)]);
        let m = min_quad_ball(&u, &t0, 1.0).unwrap();
        assert!((m.value - 16.0).abs() < 1e-9);
        assert!(((&m.t_star - &t0).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kkt_and_dual_agree_with_secular_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for rank in [1, 3, 6] {
            let u = random_psd(6, rank, &mut rng);
            let t0 = random_vec(6, &mut rng);
            let r = 0.5 * t0.norm();
            let m = min_quad_ball(&u, &t0, r).unwrap();
            let (dual_value, dual) = trs_dual(&u, &t0, r).unwrap();
            let scale = m.value.abs().max(1.0);
            assert!((m.value - dual.value).abs() < 1e-6 * scale, "{} vs {}", m.value, dual.value);
            assert!((m.value - dual_value).abs() < 1e-6 * scale);
            if m.multiplier > 0.0 {
                assert!(((&m.t_star - &t0).norm() - r).abs() < 1e-8 * r);
                let stat = &u * &m.t_star + (&m.t_star - &t0) * c64::new(m.multiplier, 0.0);
                assert!(stat.norm() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn random_feasible_points_never_beat_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_psd(4, 4, &mut rng);
        let t0 = random_vec(4, &mut rng);
        let r = 0.7;
        let m = min_quad_ball(&u, &t0, r).unwrap();
        for _ in 0..2000 {
            let t = sample_ball_with(&t0, r, &mut rng);
            assert!(quad_form(&u, &t) >= m.value - 1e-9);
        }
    }

    #[test]
    fn indefinite_trs_beats_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u = random_psd(4, 4, &mut rng);
        for i in 0..4 {
            u[(i, i)] -= c64::new(3.0, 0.0);
        }
        let t0 = random_vec(4, &mut rng);
        let r = 1.0;
        let (dual_value, d) = trs_dual(&u, &t0, r).unwrap();
        assert!((&d.t_star - &t0).norm() <= r + 1e-8);
        assert!((d.value - dual_value).abs() < 1e-6 * d.value.abs().max(1.0));
        for _ in 0..2000 {
            let t = sample_ball_with(&t0, r, &mut rng);
            assert!(quad_form(&u, &t) >= d.value - 1e-7);
        }
    }

    #[test]
    fn hard_case_is_handled() {
        // U = diag(-1, 1), t0 along the second axis only
        let mut u = CMat::zeros(2, 2);
        u[(0, 0)] = c64::new(-1.0, 0.0);
        u[(1, 1)] = c64::new(1.0, 0.0);
        let t0 = CVec::from_vec(vec![c64::new(0.0, 0.0), c64::new(0.5, 0.0)]);
        let (dual_value, d) = trs_dual(&u, &t0, 1.0).unwrap();
        assert!(((&d.t_star - &t0).norm() - 1.0).abs() < 1e-8);
        assert!((d.value - dual_value).abs() < 1e-6);
    }

    #[test]
    fn negative_identity_reaches_unit_sphere() {
        let u = -CMat::identity(3, 3);
        let (dual_value, d) = trs_dual(&u, &CVec::zeros(3), 1.0).unwrap();
        assert!((d.value + 1.0).abs() < 1e-9);
        assert!((dual_value + 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_radius_returns_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_psd(3, 2, &mut rng);
        let t0 = random_vec(3, &mut rng);
        let m = min_quad_ball(&u, &t0, 0.0).unwrap();
        assert_eq!(m.t_star, t0);
        assert!((m.value - quad_form(&u, &t0)).abs() < 1e-12);
        assert!(sample_ball(&t0, 0.0, 5, 9).iter().all(|s| (s - &t0).norm() < 1e-15));
    }

    #[test]
    fn projection_lands_in_ball() {
        let t0 = CVec::from_element(2, c64::new(1.0, 0.0));
        let t = CVec::from_element(2, c64::new(5.0, 2.0));
        let p = project_ball(&t, &t0, 0.5);
        assert!(((&p - &t0).norm() - 0.5).abs() < 1e-12);
        assert_eq!(project_ball(&t0, &t0, 0.5), t0);
    }

    #[test]
    fn sample_radius_is_uniform_in_volume() {
        // (‖t - t0‖ / r)^{2Q} ~ U(0, 1); Kolmogorov-Smirnov at n = 4000
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t0 = CVec::zeros(3);
        let n = 4000;
        let mut u: Vec<f64> = (0..n)
            .map(|_| (sample_ball_with(&t0, 2.0, &mut rng).norm() / 2.0).powi(6))
            .collect();
        u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = u
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64 / n as f64 - v).abs().max((v - i as f64 / n as f64).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / (n as f64).sqrt(), "KS statistic {ks}");
    }
}
