//! Energy-constrained game.
//!
//! With only `‖s‖² <= e_t` the radar's best response to `t` is the principal
//! eigenvector of `G(t)^H R_c^{-1} G(t)`, so the target minimizes
//! `e_t λ_max(G(t)^H R_c^{-1} G(t))` over the ball. That is the LMI problem
//!
//! ```text
//! minimize μ  s.t.  [[μI, B(t)^H], [B(t), I]] ⪰ 0,  ‖t - t0‖ <= r,
//! ```
//!
//! with the whitened operator `B(t) = L^{-1} G(t)` linear in `t`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::worst_case_tir;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMat, CVec, J};
use crate::model::{DesignResult, IterRecord, Scenario, Waveform};
use crate::solvers::conic::{solve_conic, ConicProblem, Constraint, Dual, LinExpr, SolverSettings};
use crate::solvers::eig::{herm_eig, principal_eigvec};

fn check_energy(e_t: f64) -> Result<()> {
    if !(e_t > 0.0) || !e_t.is_finite() {
        return Err(Error::domain(format!("e_t must be positive, got {e_t}")));
    }
    Ok(())
}

/// Target strategy minimizing the largest eigenvalue of the waveform form.
///
/// Also returns the radar's mixed strategy: the upper-left block of the LMI
/// multiplier, a PSD matrix of unit trace.
fn minimax_tir(scn: &Scenario) -> Result<(CVec, Option<CMat>, usize, f64)> {
    if scn.radius() == 0.0 {
        return Ok((scn.t0().clone(), None, 0, 0.0));
    }
    let taps = scn.whitened_taps();
    let (rows, cols) = (scn.rx_dim(), scn.code_dim());
    let n = rows + cols;
    let block = |b: &CMat| -> CMat {
        let mut f = CMat::zeros(n, n);
        f.view_mut((cols, 0), (rows, cols)).copy_from(b);
        f.view_mut((0, cols), (cols, rows)).copy_from(&b.adjoint());
        f
    };

    let mut p = ConicProblem::new();
    let t = p.add_complex_vector("t", scn.tir_len());
    let mu = p.add_scalar("mu");
    let mut terms = Vec::with_capacity(2 * taps.len() + 1);
    for (i, a) in taps.iter().enumerate() {
        terms.push((t.re[i], block(a)));
        terms.push((t.im[i], block(&a.map(|v| v * J))));
    }
    let mut f_mu = CMat::zeros(n, n);
    for k in 0..cols {
        f_mu[(k, k)] = c64::new(1.0, 0.0);
    }
    terms.push((mu, f_mu));
    let mut constant = CMat::zeros(n, n);
    for k in cols..n {
        constant[(k, k)] = c64::new(1.0, 0.0);
    }
    let lmi = p.add(Constraint::Lmi { constant, terms });

    let t0 = scn.t0();
    let mut x = Vec::with_capacity(2 * t0.len());
    for i in 0..t0.len() {
        x.push(LinExpr::var(t.re[i]).plus(-t0[i].re));
        x.push(LinExpr::var(t.im[i]).plus(-t0[i].im));
    }
    p.add(Constraint::Soc {
        t: LinExpr::constant(scn.radius()),
        x,
    });
    p.minimize(LinExpr::var(mu));
    let sol = solve_conic(&p, &SolverSettings::default())?.require_optimal("minimax TIR")?;
    let mixed = match &sol.duals[lmi] {
        Dual::Matrix(z) => Some(z.view((0, 0), (cols, cols)).clone_owned()),
        Dual::Vector(_) => None,
    };
    Ok((t.value(&sol.values), mixed, sol.iterations, sol.relative_gap))
}

/// Equilibrium of the energy-constrained game.
///
/// `sinr_worst` is `e_t λ_max(G(t*)^H R_c^{-1} G(t*))` at the target's
/// minimax strategy `t*`. The waveform is the principal eigenvector of that
/// matrix, or of the radar's mixed strategy read off the LMI multiplier when
/// that one guarantees more, scaled to energy `e_t` with its largest entry
/// real positive.
pub fn design_ec(scn: &Scenario, e_t: f64) -> Result<DesignResult> {
    check_energy(e_t)?;
    let start = Instant::now();
    let (t_star, mixed, iters, rel_gap) = minimax_tir(scn)?;
    let m = scn.gram_g(&t_star)?;
    let lam_max = herm_eig(&m)?.max();
    let scale = c64::new(e_t.sqrt(), 0.0);
    let mut s = principal_eigvec(&m)? * scale;
    let mut reply = worst_case_tir(scn, &s)?;
    // When λ_max is (nearly) repeated at t*, any top eigenvector maximizes the
    // payoff against t* but only the one carried by the radar's mixed strategy
    // is a best response that t* answers; prefer it when it is better.
    if let Some(z) = &mixed {
        let alt = principal_eigvec(z)? * scale;
        let alt_reply = worst_case_tir(scn, &alt)?;
        if alt_reply.value > reply.value {
            s = alt;
            reply = alt_reply;
        }
    }
    // Matched to the exact best response of s, the filter keeps the SINR at
    // or above z(s) everywhere on the ball.
    let w = scn.optimal_filter(&s, &reply.t_star)?;
    let sinr_worst = e_t * lam_max;
    log::debug!("design_ec: {iters} solver iterations, sinr_worst {sinr_worst:.6e}");
    Ok(DesignResult {
        s_opt: Waveform::new(s),
        w_opt: w,
        t_worst: t_star,
        sinr_worst,
        trace: vec![IterRecord {
            iter: iters,
            objective: sinr_worst,
            gap: Some(rel_gap),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        }],
        converged: true,
        relaxation_value: None,
    })
}

/// Outcome of the numerical equilibrium check.
#[derive(Debug, Clone, PartialEq)]
pub struct NashReport {
    /// `|z(s*) - sinr_worst| / sinr_worst` with `z` the worst-case SINR.
    pub target_gap: f64,
    /// `max(0, max_trial z(s') - sinr_worst)` over random feasible `s'`.
    pub radar_violation: f64,
    pub best_trial_value: f64,
    pub trials: usize,
}

impl NashReport {
    pub fn passed(&self) -> bool {
        self.target_gap <= 1e-4 && self.radar_violation <= 1e-6
    }
}

fn unit_sphere(n: usize, radius: f64, rng: &mut ChaCha8Rng) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = v.norm();
    v * c64::new(radius / norm, 0.0)
}

/// Checks both best-response conditions of a [`design_ec`] result: the
/// target cannot push the SINR below `sinr_worst`, and no random waveform of
/// energy `e_t` guarantees more than `sinr_worst`.
pub fn verify_nash_ec(
    scn: &Scenario,
    e_t: f64,
    result: &DesignResult,
    n_trials: usize,
    seed: u64,
) -> Result<NashReport> {
    check_energy(e_t)?;
    let z_star = worst_case_tir(scn, &result.s_opt.s)?.value;
    let denom = result.sinr_worst.abs().max(f64::MIN_POSITIVE);
    let target_gap = (z_star - result.sinr_worst).abs() / denom;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..n_trials {
        let s = unit_sphere(scn.code_dim(), e_t.sqrt(), &mut rng);
        best = best.max(worst_case_tir(scn, &s)?.value);
    }
    Ok(NashReport {
        target_gap,
        radar_violation: (best - result.sinr_worst).max(0.0),
        best_trial_value: best,
        trials: n_trials,
    })
}

/// Lower bound on the game value by projected subgradient ascent of
/// `s -> min_t t^H H(s)^H R_c^{-1} H(s) t` on the sphere `‖s‖² = e_t`.
///
/// Independent of the LMI route: it only uses the exact ball minimizer.
/// Returns the best waveform found and its worst-case SINR.
pub fn maxmin_subgradient(scn: &Scenario, e_t: f64, iters: usize) -> Result<(Waveform, f64)> {
    check_energy(e_t)?;
    let radius = e_t.sqrt();
    let mut s = principal_eigvec(&scn.gram_g(scn.t0())?)? * c64::new(radius, 0.0);
    let mut best = (s.clone(), worst_case_tir(scn, &s)?.value);
    for k in 0..iters {
        let inner = worst_case_tir(scn, &s)?;
        if inner.value > best.1 {
            best = (s.clone(), inner.value);
        }
        let g = scn.gram_g(&inner.t_star)? * &s;
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        let step = radius / (1.0 + k as f64).sqrt();
        s += g * c64::new(step / gn, 0.0);
        let n = s.norm();
        s *= c64::new(radius / n, 0.0);
    }
    let last = worst_case_tir(scn, &s)?.value;
    if last > best.1 {
        best = (s, last);
    }
    Ok((Waveform::new(best.0), best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{noise_covariance, ScenarioParams};

    fn small(radius: f64) -> Scenario {
        let t0 = CVec::from_vec(vec![c64::new(1.0, 0.2), c64::new(-0.3, 0.5), c64::new(0.1, 0.0)]);
        Scenario::new(ScenarioParams {
            n_tx: 2,
            n_rx: 2,
            code_len: 4,
            theta_t: 0.3,
            tx_spacing: 1.0,
            rx_spacing: 0.5,
            noise_cov: noise_covariance(0.5, 12).unwrap(),
            t0,
            radius,
        })
        .unwrap()
    }

    #[test]
    fn zero_radius_is_principal_eigenvalue() {
        let scn = small(0.0);
        let res = design_ec(&scn, 2.0).unwrap();
        assert_eq!(&res.t_worst, scn.t0());
        let lam = herm_eig(&scn.gram_g(scn.t0()).unwrap()).unwrap().max();
        assert!((res.sinr_worst - 2.0 * lam).abs() < 1e-12 * lam);
        assert!((res.s_opt.energy - 2.0).abs() < 1e-12);
        let rep = verify_nash_ec(&scn, 2.0, &res, 200, 1).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn value_is_linear_in_energy() {
        let scn = small(0.3);
        let a = design_ec(&scn, 1.0).unwrap();
        let b = design_ec(&scn, 2.0).unwrap();
        assert!((b.sinr_worst - 2.0 * a.sinr_worst).abs() <= 1e-12 * b.sinr_worst);
        let scaled = &a.s_opt.s * c64::new(2f64.sqrt(), 0.0);
        assert!((scaled - &b.s_opt.s).norm() < 1e-9);
    }

    #[test]
    fn equilibrium_on_small_scenario() {
        let scn = small(0.3);
        let res = design_ec(&scn, 1.0).unwrap();
        let rep = verify_nash_ec(&scn, 1.0, &res, 300, 7).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let (_, oracle) = maxmin_subgradient(&scn, 1.0, 400).unwrap();
        assert!(oracle <= res.sinr_worst * (1.0 + 1e-6));
        assert!(oracle >= 0.99 * res.sinr_worst, "{oracle} vs {}", res.sinr_worst);
    }

    #[test]
    fn perturbing_the_waveform_hurts() {
        let scn = small(0.3);
        let res = design_ec(&scn, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let noise = unit_sphere(scn.code_dim(), 1e-2, &mut rng);
            let s = &res.s_opt.s + noise;
            let s = &s * c64::new(1.0 / s.norm(), 0.0);
            assert!(worst_case_tir(&scn, &s).unwrap().value < res.sinr_worst);
        }
    }

    #[test]
    fn rejects_nonpositive_energy() {
        assert!(design_ec(&small(0.1), 0.0).is_err());
    }
}
