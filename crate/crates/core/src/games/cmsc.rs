//! Constant-modulus game with similarity constraint.
//!
//! The waveform set is relaxed to covariances `R = s s^H` with fixed
//! diagonal `e_t / (N_T L)`, giving the payoff `tr(G(t)^H R_c^{-1} G(t) R)`.
//! A proximal gradient descent-ascent iteration approaches the relaxed
//! equilibrium; Gaussian randomization then maps it back to constant-modulus
//! codes that stay within the similarity region of `s0`.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::worst_case_tir;
use crate::error::{Error, Result};
use crate::linalg::{c64, frobenius_sq, hermitize, CMat, CVec, J};
use crate::model::{ConstraintSet, DesignResult, IterRecord, Scenario, Waveform};
use crate::solvers::ball::project_ball;
use crate::solvers::conic::{solve_conic, ConicProblem, Constraint, Dual, LinExpr, SolverSettings};
use crate::solvers::eig::herm_eig;
use crate::solvers::proj::project_fixed_diag_psd;

/// Parameters of the descent-ascent iteration and the randomization.
#[derive(Debug, Clone, PartialEq)]
pub struct Algo2Params {
    pub beta: f64,
    pub eta: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub m_trials: usize,
    pub seed: u64,
}

impl Default for Algo2Params {
    fn default() -> Self {
        Algo2Params {
            beta: 0.05,
            eta: 0.002,
            eps: 1e-3,
            max_iter: 100,
            m_trials: 100,
            seed: 0,
        }
    }
}

impl Algo2Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::domain(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.eta > 0.0) || !(self.eps > 0.0) {
            return Err(Error::domain("eta and eps must be positive"));
        }
        if self.max_iter == 0 || self.m_trials == 0 {
            return Err(Error::domain("max_iter and m_trials must be positive"));
        }
        Ok(())
    }
}

/// Iterate of the relaxed game.
#[derive(Debug, Clone)]
pub struct GameState2 {
    pub r_s: CMat,
    pub t: CVec,
    pub iter: usize,
    pub last_gap: Option<f64>,
}

fn fixed_diag(scn: &Scenario, e_t: f64) -> DVector<f64> {
    DVector::from_element(scn.code_dim(), e_t / scn.code_dim() as f64)
}

/// `tr(M R) - β ‖R - R0‖²`.
fn proximal_payoff(m: &CMat, r: &CMat, r0: &CMat, beta: f64) -> f64 {
    let lin = (m * r).trace().re;
    if beta == 0.0 {
        lin
    } else {
        lin - beta * frobenius_sq(&(r - r0))
    }
}

/// `max tr(M R)` over `diag R = d`, `R ⪰ 0`, through the dual LMI
/// `min dᵀy s.t. Diag(y) - M ⪰ 0`; the primal maximizer is the LMI multiplier.
fn relaxed_max(m: &CMat, d: &DVector<f64>) -> Result<(f64, CMat)> {
    let n = m.nrows();
    let mut p = ConicProblem::new();
    let y: Vec<usize> = (0..n).map(|i| p.add_scalar(&format!("y{i}"))).collect();
    let terms = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut e = CMat::zeros(n, n);
            e[(i, i)] = c64::new(1.0, 0.0);
            (v, e)
        })
        .collect();
    let idx = p.add(Constraint::Lmi {
        constant: -m,
        terms,
    });
    let mut obj = LinExpr::default();
    for (i, &v) in y.iter().enumerate() {
        obj = obj.term(v, d[i]);
    }
    p.minimize(obj);
    let sol = solve_conic(&p, &SolverSettings::default())?.require_optimal("relaxed inner maximization")?;
    let mut r = match &sol.duals[idx] {
        Dual::Matrix(z) => z.clone(),
        Dual::Vector(_) => return Err(Error::Solver("LMI returned a vector multiplier".into())),
    };
    hermitize(&mut r);
    // snap the diagonal, which the solver only meets to its tolerance
    for i in 0..n {
        let di = r[(i, i)].re;
        if di > 0.0 {
            let s = (d[i] / di).sqrt();
            for j in 0..n {
                r[(i, j)] *= s;
                r[(j, i)] *= s;
            }
        }
    }
    Ok((sol.objective_value, r))
}

fn inner_max_with(m: &CMat, r0: &CMat, beta: f64, d: &DVector<f64>) -> Result<CMat> {
    if beta == 0.0 {
        return Ok(relaxed_max(m, d)?.1);
    }
    let c = r0 + m * c64::new(0.5 / beta, 0.0);
    Ok(project_fixed_diag_psd(&c, d, 1e-12)?.x)
}

/// Ascent step of the radar: maximizes
/// `tr(G(t)^H R_c^{-1} G(t) R) - β ‖R - R0‖²` over the fixed-diagonal PSD set
/// at the current target iterate.
///
/// For `β > 0` this is the Frobenius projection of `R0 + M/(2β)` onto that
/// set; for `β = 0` it is an SDP.
pub fn algo2_inner_max(
    scn: &Scenario,
    state: &GameState2,
    r_s0: &CMat,
    beta: f64,
    e_t: f64,
) -> Result<CMat> {
    if !(beta >= 0.0) {
        return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
    }
    let m = scn.gram_g(&state.t)?;
    inner_max_with(&m, r_s0, beta, &fixed_diag(scn, e_t))
}

/// Value of the relaxed radar problem `max tr(G(t)^H R_c^{-1} G(t) R)` over
/// the fixed-diagonal PSD set, and its maximizer. Upper-bounds the
/// worst-case SINR of every constant-modulus code of energy `e_t`.
pub fn relaxed_value(scn: &Scenario, t: &CVec, e_t: f64) -> Result<(f64, CMat)> {
    let m = scn.gram_g(t)?;
    relaxed_max(&m, &fixed_diag(scn, e_t))
}

fn t_step_with(u: &CMat, t: &CVec, t0: &CVec, r: f64, eta: f64) -> CVec {
    let grad = u * t * c64::new(2.0, 0.0);
    project_ball(&(t - grad * c64::new(eta, 0.0)), t0, r)
}

/// Descent step of the target: `t <- Proj(t - 2η U(R) t)`.
pub fn algo2_t_step(scn: &Scenario, state: &GameState2, r_s_next: &CMat, eta: f64) -> Result<CVec> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be positive, got {eta}")));
    }
    let u = scn.tap_gram(r_s_next)?;
    Ok(t_step_with(&u, &state.t, scn.t0(), scn.radius(), eta))
}

/// Phase draws around `s0` from `CN(0, R ⊙ (conj(s0) s0ᵀ))`. Each entry keeps
/// the modulus of `s0` and is rotated by at most `φ/2`, `φ = arccos(1 - δ²/2)`,
/// so every candidate lies in the similarity region.
pub fn randomize_cm(
    r_s_star: &CMat,
    s0: &CVec,
    delta: f64,
    e_t: f64,
    m: usize,
    seed: u64,
) -> Result<Vec<Waveform>> {
    let n = s0.len();
    if r_s_star.shape() != (n, n) {
        return Err(Error::Dimension {
            what: "relaxed covariance",
            expected: n,
            got: r_s_star.nrows(),
        });
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::domain(format!("delta must lie in (0, 2], got {delta}")));
    }
    if !(e_t > 0.0) {
        return Err(Error::domain(format!("e_t must be positive, got {e_t}")));
    }
    let mut cov = CMat::from_fn(n, n, |i, j| r_s_star[(i, j)] * s0[i].conj() * s0[j]);
    hermitize(&mut cov);
    let eig = herm_eig(&cov)?;
    let mut factor = eig.vectors.clone();
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    let phi = (1.0 - delta * delta / 2.0).clamp(-1.0, 1.0).acos();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let z = CVec::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c64::new(re * scale, im * scale)
        });
        let xi = &factor * z;
        let s = CVec::from_fn(n, |i, _| {
            let arg = xi[i].arg().rem_euclid(two_pi);
            let rot = (arg - std::f64::consts::PI) * phi / two_pi;
            s0[i] * (J * rot).exp()
        });
        out.push(Waveform::new(s));
    }
    Ok(out)
}

/// Membership in the constant-modulus similarity set: `|s_i| = √(e_t/N)`
/// and `|s_i - s0_i| <= δ √(e_t/N)`, both to relative precision `1e-12`.
pub fn in_cm_region(s: &CVec, s0: &CVec, delta: f64, e_t: f64) -> bool {
    let amp = (e_t / s.len() as f64).sqrt();
    s.len() == s0.len()
        && s.iter().zip(s0.iter()).all(|(a, b)| {
            (a.norm() - amp).abs() <= 1e-12 * amp && (a - b).norm() <= delta * amp * (1.0 + 1e-12)
        })
}

/// Descent-ascent on the relaxed game followed by randomized synthesis of a
/// constant-modulus code. `relaxation_value` holds the relaxed radar value
/// at the final target iterate, an upper bound on the relaxed game value.
pub fn design_cmsc(scn: &Scenario, c: &ConstraintSet, p: &Algo2Params) -> Result<DesignResult> {
    let ConstraintSet::Cmsc { e_t, delta, s0 } = c else {
        return Err(Error::domain("design_cmsc needs a constant-modulus constraint set"));
    };
    let (e_t, delta) = (*e_t, *delta);
    c.validate(scn.code_dim())?;
    p.validate()?;
    let amp = (e_t / scn.code_dim() as f64).sqrt();
    if s0.s.iter().any(|v| (v.norm() - amp).abs() > 1e-9 * amp) {
        return Err(Error::domain("reference code must have constant modulus √(e_t/(N_T L))"));
    }

    let start = Instant::now();
    let ms = || start.elapsed().as_secs_f64() * 1e3;
    let r0 = &s0.s * s0.s.adjoint();
    let mut state = GameState2 {
        r_s: r0.clone(),
        t: scn.t0().clone(),
        iter: 0,
        last_gap: None,
    };
    let mut z_prev = proximal_payoff(&scn.gram_g(&state.t)?, &r0, &r0, p.beta);
    let mut trace = vec![IterRecord {
        iter: 0,
        objective: z_prev,
        gap: None,
        wall_ms: ms(),
    }];
    let mut best: Option<(f64, CMat, CVec)> = None;
    let mut converged = false;
    for k in 1..=p.max_iter {
        let r_next = algo2_inner_max(scn, &state, &r0, p.beta, e_t)?;
        let t_next = algo2_t_step(scn, &state, &r_next, p.eta)?;
        let z = proximal_payoff(&scn.gram_g(&t_next)?, &r_next, &r0, p.beta);
        let gap = (z - z_prev).abs();
        trace.push(IterRecord {
            iter: k,
            objective: z,
            gap: Some(gap),
            wall_ms: ms(),
        });
        state = GameState2 {
            r_s: r_next,
            t: t_next,
            iter: k,
            last_gap: Some(gap),
        };
        z_prev = z;
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, state.r_s.clone(), state.t.clone()));
        }
        if gap <= p.eps {
            converged = true;
            break;
        }
    }
    let (r_star, t_k) = if converged {
        (state.r_s, state.t)
    } else {
        log::warn!("design_cmsc: gap rule not met in {} iterations", p.max_iter);
        let (_, r, t) = best.expect("at least one iteration");
        (r, t)
    };

    let cands = randomize_cm(&r_star, &s0.s, delta, e_t, p.m_trials, p.seed)?;
    let values: Vec<f64> = cands
        .par_iter()
        .map(|w| worst_case_tir(scn, &w.s).map(|r| r.value))
        .collect::<Result<_>>()?;
    let mut pick = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[pick] {
            pick = i;
        }
    }
    let s_opt = cands[pick].clone();
    let wc = worst_case_tir(scn, &s_opt.s)?;
    let w = scn.optimal_filter(&s_opt.s, &wc.t_star)?;
    let (bound, _) = relaxed_value(scn, &t_k, e_t)?;
    Ok(DesignResult {
        s_opt,
        w_opt: w,
        t_worst: wc.t_star,
        sinr_worst: wc.value,
        trace,
        converged,
        relaxation_value: Some(bound),
    })
}
