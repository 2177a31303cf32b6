//! Equilibrium design of the radar-versus-target game.
//!
//! For a fixed waveform `s` the radar's best filter is the matched filter
//! `w = R_c^{-1} H(s) t`, which turns the three-player payoff into
//! `t^H H(s)^H R_c^{-1} H(s) t = s^H G(t)^H R_c^{-1} G(t) s`. The modules
//! below solve the remaining waveform-versus-target game under each
//! constraint family.

pub mod cmsc;
pub mod ec;
pub mod scsc;

use crate::error::Result;
use crate::model::Scenario;
use crate::solvers::ball::{min_quad_ball, TrsResult};
use crate::CVec;

pub use cmsc::{
    algo2_inner_max, algo2_t_step, design_cmsc, randomize_cm, relaxed_value, Algo2Params,
    GameState2,
};
pub use ec::{design_ec, maxmin_subgradient, verify_nash_ec, NashReport};
pub use scsc::{design_scsc, feasible_init, minorizer_value, mm_step, Algo3Params, MmState};

/// Target's best response to waveform `s`: minimizes
/// `t^H H(s)^H R_c^{-1} H(s) t` over the uncertainty ball. The value is the
/// worst-case SINR of `s` with its matched filter.
pub fn worst_case_tir(scn: &Scenario, s: &CVec) -> Result<TrsResult> {
    let u = scn.gram_h(s)?;
    min_quad_ball(&u, scn.t0(), scn.radius())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, quad_form};
    use crate::solvers::ball::sample_ball;

    fn code(seed: u64) -> CVec {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CVec::from_fn(32, |_, _| {
            c64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        })
    }

    #[test]
    fn target_can_cancel_itself_when_ball_covers_origin() {
        let t0_norm = crate::model::reference_t0().norm();
        let scn = Scenario::reference(t0_norm * 1.01).unwrap();
        let v = worst_case_tir(&scn, &code(1)).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn zero_radius_is_nominal_quadratic() {
        let scn = Scenario::reference(0.0).unwrap();
        let s = code(2);
        let v = worst_case_tir(&scn, &s).unwrap();
        let want = quad_form(&scn.gram_h(&s).unwrap(), scn.t0());
        assert!((v.value - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn below_every_sampled_response() {
        let scn = Scenario::reference(0.3).unwrap();
        let s = code(3);
        let v = worst_case_tir(&scn, &s).unwrap();
        let u = scn.gram_h(&s).unwrap();
        for t in sample_ball(scn.t0(), 0.3, 10_000, 4) {
            assert!(v.value <= quad_form(&u, &t) + 1e-9);
        }
    }
}
