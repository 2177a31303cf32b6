//! Spectrally constrained game with similarity constraint.
//!
//! The waveform's worst-case SINR `z(s) = min_t t^H H(s)^H R_c^{-1} H(s) t`
//! is maximized by minorization-maximization. Linearizing the Gram matrix
//! around `s_l` gives the surrogate
//!
//! ```text
//! U(s, s_l) = H_l^H R_c^{-1} H(s) + H(s)^H R_c^{-1} H_l - H_l^H R_c^{-1} H_l,
//! ```
//!
//! affine in `s`, whose ball minimum is a concave minorizer of `z` touching
//! it at `s_l`. Each step maximizes the minorizer through the dual of the
//! trust-region problem, which is a single SDP jointly in `(s, λ, γ)`.

use std::time::Instant;

use super::worst_case_tir;
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitize, quad_form, CMat, CVec, J};
use crate::model::{spectral_matrix, ConstraintSet, DesignResult, IterRecord, Scenario, Waveform};
use crate::solvers::ball::{min_quad_ball, trs_dual};
use crate::solvers::conic::{
    solve_conic, ComplexVar, ConicProblem, Constraint, LinExpr, SolveStatus, SolverSettings,
};
use crate::solvers::eig::herm_eig;

/// Parameters of the MM iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Algo3Params {
    pub eps: f64,
    pub max_iter: usize,
    /// Starting waveform; [`feasible_init`] followed by a pull toward `s0`
    /// when absent.
    pub init_waveform: Option<Waveform>,
}

impl Default for Algo3Params {
    fn default() -> Self {
        Algo3Params {
            eps: 1e-3,
            max_iter: 50,
            init_waveform: None,
        }
    }
}

/// Current MM iterate and its surrogate value.
#[derive(Debug, Clone)]
pub struct MmState {
    pub s_l: Waveform,
    pub z_tilde: f64,
    pub iter: usize,
}

struct Scsc<'a> {
    e_t: f64,
    delta: f64,
    s0: &'a CVec,
    e_i: f64,
    r_i: CMat,
    /// Rows of `F` with `R_I = F^H F`.
    f: CMat,
}

impl<'a> Scsc<'a> {
    fn new(scn: &Scenario, c: &'a ConstraintSet) -> Result<Self> {
        let ConstraintSet::Scsc {
            e_t,
            delta,
            s0,
            bands,
            e_i,
        } = c
        else {
            return Err(Error::domain("expected a spectral constraint set"));
        };
        c.validate(scn.code_dim())?;
        let r_i = spectral_matrix(bands, scn.code_len(), scn.n_tx())?;
        let eig = herm_eig(&r_i)?;
        let cut = 1e-12 * eig.max().max(f64::MIN_POSITIVE);
        let keep: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > cut).collect();
        let n = r_i.nrows();
        let mut f = CMat::zeros(keep.len(), n);
        for (row, &k) in keep.iter().enumerate() {
            let g = eig.values[k].sqrt();
            for j in 0..n {
                f[(row, j)] = eig.vectors[(j, k)].conj() * g;
            }
        }
        Ok(Scsc {
            e_t: *e_t,
            delta: *delta,
            s0: &s0.s,
            e_i: *e_i,
            r_i,
            f,
        })
    }

    fn sim_radius(&self) -> f64 {
        self.delta * (self.e_t / self.s0.len() as f64).sqrt()
    }

    /// Largest violation of the energy, similarity and stop-band constraints.
    fn violation(&self, s: &CVec) -> f64 {
        let rad = self.sim_radius();
        let sim = s
            .iter()
            .zip(self.s0.iter())
            .map(|(a, b)| (a - b).norm() - rad)
            .fold(f64::NEG_INFINITY, f64::max);
        let energy = s.norm_squared() - self.e_t;
        let stop = quad_form(&self.r_i, s) - self.e_i;
        sim.max(energy).max(stop)
    }

    /// Adds similarity and energy cones on `s`.
    fn add_shape_constraints(&self, p: &mut ConicProblem, s: &ComplexVar) {
        let rad = self.sim_radius();
        for k in 0..s.len() {
            p.add(Constraint::Soc {
                t: LinExpr::constant(rad),
                x: vec![
                    LinExpr::var(s.re[k]).plus(-self.s0[k].re),
                    LinExpr::var(s.im[k]).plus(-self.s0[k].im),
                ],
            });
        }
        let all = (0..s.len())
            .flat_map(|k| [LinExpr::var(s.re[k]), LinExpr::var(s.im[k])])
            .collect();
        p.add(Constraint::Soc {
            t: LinExpr::constant(self.e_t.sqrt()),
            x: all,
        });
    }

    /// Real and imaginary parts of `F s` as linear expressions.
    fn spectral_rows(&self, s: &ComplexVar) -> Vec<LinExpr> {
        let mut out = Vec::with_capacity(2 * self.f.nrows());
        for r in 0..self.f.nrows() {
            let mut re = LinExpr::default();
            let mut im = LinExpr::default();
            for k in 0..s.len() {
                let f = self.f[(r, k)];
                re = re.term(s.re[k], f.re).term(s.im[k], -f.im);
                im = im.term(s.re[k], f.im).term(s.im[k], f.re);
            }
            out.push(re);
            out.push(im);
        }
        out
    }
}

/// Surrogate `min_t t^H U(s, s_l) t` over the ball. Equals the worst-case
/// SINR at `s = s_l` and lies below it elsewhere.
pub fn minorizer_value(scn: &Scenario, s: &CVec, s_l: &CVec) -> Result<f64> {
    let mut u = scn.cross_h(s_l, s)? + scn.cross_h(s, s_l)? - scn.gram_h(s_l)?;
    hermitize(&mut u);
    let scale = u.iter().map(|v| v.norm()).fold(1.0, f64::max);
    if herm_eig(&u)?.min() >= -1e-13 * scale {
        return Ok(min_quad_ball(&u, scn.t0(), scn.radius())?.value);
    }
    let (_, trs) = trs_dual(&u, scn.t0(), scn.radius())?;
    Ok(trs.value)
}

/// One MM step: maximizes the surrogate over the constraint set by the SDP
///
/// ```text
/// max γ  s.t. [[U(s, s_l) + λI, -λ t0], [-λ t0^H, λ(‖t0‖² - r²) - γ]] ⪰ 0,
///             λ >= 0,  ‖s‖² <= e_t,  |s_k - s0_k| <= δ √(e_t/N),  s^H R_I s <= e_I.
/// ```
///
/// The returned code satisfies the constraints exactly (the solver output is
/// pulled toward `s_l` if needed) and never lowers the surrogate below
/// `z(s_l)`; if the SDP cannot improve on `s_l`, `s_l` is returned.
pub fn mm_step(scn: &Scenario, c: &ConstraintSet, s_l: &CVec) -> Result<Waveform> {
    let cs = Scsc::new(scn, c)?;
    if s_l.len() != scn.code_dim() {
        return Err(Error::Dimension {
            what: "MM iterate",
            expected: scn.code_dim(),
            got: s_l.len(),
        });
    }
    let q = scn.tir_len();
    let n = scn.code_dim();
    let h_l = scn.whiten(&scn.op_h(s_l)?);
    let taps = scn.whitened_taps();

    let mut p = ConicProblem::new();
    let s = p.add_complex_vector("s", n);
    let lam = p.add_scalar("lambda");
    let gam = p.add_scalar("gamma");

    let embed = |m: &CMat| -> CMat {
        let mut f = CMat::zeros(q + 1, q + 1);
        f.view_mut((0, 0), (q, q)).copy_from(m);
        f
    };
    let mut terms = Vec::with_capacity(2 * n + 2);
    for k in 0..n {
        // H(e_k) has columns A_i e_k
        let hk = CMat::from_fn(scn.rx_dim(), q, |row, i| taps[i][(row, k)]);
        let ck = h_l.adjoint() * hk;
        let ckh = ck.adjoint();
        terms.push((s.re[k], embed(&(&ck + &ckh))));
        terms.push((s.im[k], embed(&((&ck - &ckh) * J))));
    }
    let t0 = scn.t0();
    let mut f_lam = CMat::zeros(q + 1, q + 1);
    for i in 0..q {
        f_lam[(i, i)] = c64::new(1.0, 0.0);
        f_lam[(i, q)] = -t0[i];
        f_lam[(q, i)] = -t0[i].conj();
    }
    let r = scn.radius();
    f_lam[(q, q)] = c64::new(t0.norm_squared() - r * r, 0.0);
    terms.push((lam, f_lam));
    let mut f_gam = CMat::zeros(q + 1, q + 1);
    f_gam[(q, q)] = c64::new(-1.0, 0.0);
    terms.push((gam, f_gam));
    p.add(Constraint::Lmi {
        constant: -embed(&(h_l.adjoint() * &h_l)),
        terms,
    });
    p.add(Constraint::Nonneg(LinExpr::var(lam)));
    cs.add_shape_constraints(&mut p, &s);
    p.add(Constraint::Soc {
        t: LinExpr::constant(cs.e_i.sqrt()),
        x: cs.spectral_rows(&s),
    });
    p.maximize(LinExpr::var(gam));

    let sol = solve_conic(&p, &SolverSettings::default())?;
    if sol.status == SolveStatus::Infeasible {
        return Err(Error::Infeasible(format!(
            "stop-band energy bound e_I = {} cannot be met; raise e_I above the floor reported by feasible_init",
            cs.e_i
        )));
    }
    // the step is safeguarded below, so a loose solver certificate suffices
    let sol = if sol.status == SolveStatus::MaxIter && sol.kkt_residual <= 1e-4 {
        log::debug!("MM step: using solver output at residual {:.2e}", sol.kkt_residual);
        sol
    } else {
        sol.require_optimal("MM step")?
    };
    let s_new = s.value(&sol.values);

    let base = minorizer_value(scn, s_l, s_l)?;
    if cs.violation(s_l) > 1e-9 * cs.e_t.max(cs.e_i) {
        return Err(Error::domain("MM iterate violates the constraint set"));
    }
    let dir = &s_new - s_l;
    for theta in [1.0, 1.0 - 1e-9, 1.0 - 1e-7, 1.0 - 1e-5, 1.0 - 1e-3, 0.99, 0.9, 0.5] {
        let cand = s_l + &dir * c64::new(theta, 0.0);
        if cs.violation(&cand) > 0.0 {
            continue;
        }
        if minorizer_value(scn, &cand, s_l)? >= base {
            return Ok(Waveform::new(cand));
        }
    }
    log::debug!("mm_step: no improving feasible step, keeping the iterate");
    Ok(Waveform::new(s_l.clone()))
}

/// Minimum stop-band energy over the energy and similarity constraints,
/// `min s^H R_I s s.t. ‖s‖² <= e_t, |s_k - s0_k| <= δ √(e_t/N)`.
/// Returns the minimizer and its stop-band energy, the floor for `e_I`.
pub fn feasible_init(scn: &Scenario, c: &ConstraintSet) -> Result<(Waveform, f64)> {
    let cs = Scsc::new(scn, c)?;
    let n = scn.code_dim();
    let mut p = ConicProblem::new();
    let s = p.add_complex_vector("s", n);
    let tau = p.add_scalar("tau");
    cs.add_shape_constraints(&mut p, &s);
    p.add(Constraint::QuadLe {
        t: LinExpr::var(tau),
        w: cs.spectral_rows(&s),
    });
    p.minimize(LinExpr::var(tau));
    let sol = solve_conic(&p, &SolverSettings::default())?.require_optimal("stop-band floor")?;
    let mut v = s.value(&sol.values);
    // pull strictly inside the shape constraints the solver meets to tolerance
    let dir = &v - cs.s0;
    for theta in [1.0, 1.0 - 1e-9, 1.0 - 1e-7, 1.0 - 1e-5, 1.0 - 1e-3] {
        let cand = cs.s0 + &dir * c64::new(theta, 0.0);
        let shape_ok = cand.norm_squared() <= cs.e_t
            && cand
                .iter()
                .zip(cs.s0.iter())
                .all(|(a, b)| (a - b).norm() <= cs.sim_radius());
        if shape_ok {
            v = cand;
            break;
        }
    }
    let floor = quad_form(&cs.r_i, &v);
    Ok((Waveform::new(v), floor))
}

/// Starting point: the stop-band minimizer moved toward `s0` as far as the
/// bound `e_I` allows (all the way when `s0` is itself feasible).
fn default_init(scn: &Scenario, c: &ConstraintSet) -> Result<Waveform> {
    let cs = Scsc::new(scn, c)?;
    let (base, floor) = feasible_init(scn, c)?;
    if floor > cs.e_i {
        return Err(Error::Infeasible(format!(
            "stop-band energy bound e_I = {} is below the achievable floor {floor:.6e}; raise e_I",
            cs.e_i
        )));
    }
    // q(θ) = (b + θd)^H R_I (b + θd) is convex in θ with q(0) <= e_I
    let d = cs.s0 - &base.s;
    let a = quad_form(&cs.r_i, &d);
    let b = (base.s.adjoint() * &cs.r_i * &d)[(0, 0)].re;
    let c0 = floor - cs.e_i;
    let theta = if a <= 0.0 {
        1.0
    } else {
        ((-b + (b * b - a * c0).max(0.0).sqrt()) / a).clamp(0.0, 1.0)
    };
    for factor in [1.0, 1.0 - 1e-12, 1.0 - 1e-9, 1.0 - 1e-6, 1.0 - 1e-3, 0.9, 0.5] {
        let cand = &base.s + &d * c64::new(theta * factor, 0.0);
        if cs.violation(&cand) <= 0.0 {
            return Ok(Waveform::new(cand));
        }
    }
    Ok(base)
}

/// Minorization-maximization design under the spectral constraint set.
pub fn design_scsc(scn: &Scenario, c: &ConstraintSet, p: &Algo3Params) -> Result<DesignResult> {
    let cs = Scsc::new(scn, c)?;
    if !(p.eps > 0.0) || p.max_iter == 0 {
        return Err(Error::domain("eps and max_iter must be positive"));
    }
    let init = match &p.init_waveform {
        Some(w) => {
            if cs.violation(&w.s) > 1e-9 * cs.e_t.max(cs.e_i) {
                return Err(Error::domain("initial waveform violates the constraint set"));
            }
            w.clone()
        }
        None => default_init(scn, c)?,
    };

    let start = Instant::now();
    let ms = || start.elapsed().as_secs_f64() * 1e3;
    let z0 = worst_case_tir(scn, &init.s)?.value;
    let mut state = MmState {
        s_l: init,
        z_tilde: z0,
        iter: 0,
    };
    let mut trace = vec![IterRecord {
        iter: 0,
        objective: z0,
        gap: None,
        wall_ms: ms(),
    }];
    let mut converged = false;
    for l in 1..=p.max_iter {
        let next = mm_step(scn, c, &state.s_l.s)?;
        let z = minorizer_value(scn, &next.s, &state.s_l.s)?;
        let inc = z - state.z_tilde;
        trace.push(IterRecord {
            iter: l,
            objective: z,
            gap: Some(inc),
            wall_ms: ms(),
        });
        state = MmState {
            s_l: next,
            z_tilde: z,
            iter: l,
        };
        if inc <= p.eps {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("design_scsc: increment rule not met in {} iterations", p.max_iter);
    }
    let wc = worst_case_tir(scn, &state.s_l.s)?;
    let w = scn.optimal_filter(&state.s_l.s, &wc.t_star)?;
    Ok(DesignResult {
        s_opt: state.s_l,
        w_opt: w,
        t_worst: wc.t_star,
        sinr_worst: wc.value,
        trace,
        converged,
        relaxation_value: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lfm_reference, Band};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn bands() -> Vec<Band> {
        vec![Band::new(0.3, 0.4, 0.6).unwrap(), Band::new(0.6, 0.8, 0.4).unwrap()]
    }

    fn constraint(e_t: f64, delta: f64, e_i: f64) -> ConstraintSet {
        ConstraintSet::Scsc {
            e_t,
            delta,
            s0: lfm_reference(2, 16, e_t),
            bands: bands(),
            e_i,
        }
    }

    fn random_code(n: usize, rng: &mut ChaCha8Rng) -> CVec {
        CVec::from_fn(n, |_, _| {
            c64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    #[test]
    fn touching_condition() {
        let scn = Scenario::reference(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let s = random_code(32, &mut rng);
            let z = worst_case_tir(&scn, &s).unwrap().value;
            let m = minorizer_value(&scn, &s, &s).unwrap();
            assert!((z - m).abs() <= 1e-8 * (1.0 + z), "{z} vs {m}");
        }
    }

    #[test]
    fn minorizes_everywhere() {
        let scn = Scenario::reference(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s_l = random_code(32, &mut rng);
        for _ in 0..20 {
            let s = random_code(32, &mut rng);
            let m = minorizer_value(&scn, &s, &s_l).unwrap();
            let z = worst_case_tir(&scn, &s).unwrap().value;
            assert!(m <= z + 1e-6, "{m} > {z}");
        }
    }

    #[test]
    fn zero_code_gives_nonpositive_value() {
        let scn = Scenario::reference(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s_l = random_code(32, &mut rng);
        let v = minorizer_value(&scn, &CVec::zeros(32), &s_l).unwrap();
        let direct = min_quad_ball(
            &CMat::zeros(6, 6),
            scn.t0(),
            scn.radius(),
        )
        .unwrap()
        .value;
        assert!(v <= direct + 1e-9);
    }

    #[test]
    fn floor_is_below_reference_energy() {
        let scn = Scenario::reference(0.1).unwrap();
        let c = constraint(1.0, 0.5, 1.0);
        let (w, floor) = feasible_init(&scn, &c).unwrap();
        let r_i = spectral_matrix(&bands(), 16, 2).unwrap();
        let s0 = lfm_reference(2, 16, 1.0);
        assert!(floor <= quad_form(&r_i, &s0.s) + 1e-9);
        assert!((floor - quad_form(&r_i, &w.s)).abs() < 1e-12);
    }

    #[test]
    fn pinned_similarity_returns_reference() {
        let scn = Scenario::reference(0.1).unwrap();
        let s0 = lfm_reference(2, 16, 1.0);
        let r_i = spectral_matrix(&bands(), 16, 2).unwrap();
        let e_i = quad_form(&r_i, &s0.s) * 1.01;
        let c = constraint(1.0, 1e-7, e_i);
        let (w, _) = feasible_init(&scn, &c).unwrap();
        assert!((w.s - &s0.s).camax() < 1e-6);
        let step = mm_step(&scn, &c, &s0.s).unwrap();
        assert!((step.s - &s0.s).camax() < 1e-6);
    }

    #[test]
    fn mm_step_ascends_and_stays_feasible() {
        let scn = Scenario::reference(0.3).unwrap();
        let s0 = lfm_reference(2, 16, 1.0);
        let r_i = spectral_matrix(&bands(), 16, 2).unwrap();
        let e_i = 0.5 * quad_form(&r_i, &s0.s);
        let c = constraint(1.0, 1.0, e_i);
        let init = default_init(&scn, &c).unwrap();
        let next = mm_step(&scn, &c, &init.s).unwrap();
        assert!(quad_form(&r_i, &next.s) <= e_i + 1e-7);
        assert!(next.energy <= 1.0 + 1e-7);
        let before = worst_case_tir(&scn, &init.s).unwrap().value;
        assert!(minorizer_value(&scn, &next.s, &init.s).unwrap() >= before - 1e-6);
    }

    #[test]
    fn design_trace_is_monotone() {
        let scn = Scenario::reference(0.3).unwrap();
        let s0 = lfm_reference(2, 16, 1.0);
        let r_i = spectral_matrix(&bands(), 16, 2).unwrap();
        let c = constraint(1.0, 1.0, 0.5 * quad_form(&r_i, &s0.s));
        let p = Algo3Params {
            eps: 1e-5,
            ..Algo3Params::default()
        };
        let res = design_scsc(&scn, &c, &p).unwrap();
        for pair in res.trace.windows(2) {
            assert!(pair[1].objective >= pair[0].objective - 1e-8);
        }
        let lam = herm_eig(&scn.gram_g(scn.t0()).unwrap()).unwrap().max();
        assert!(res.sinr_worst <= lam + 1e-9);
    }

    #[test]
    fn infeasible_bound_is_reported() {
        let scn = Scenario::reference(0.1).unwrap();
        let c = constraint(1.0, 0.05, 1e-12);
        assert!(matches!(
            design_scsc(&scn, &c, &Algo3Params::default()),
            Err(Error::Infeasible(_))
        ));
    }
}
