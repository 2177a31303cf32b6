//! Detection probability of the square-law detector,
//! `P_d = Q_1(√(2 SINR), √(-2 ln P_fa))`.
//!
//! The first-order Marcum Q function is evaluated through its Poisson
//! mixture form
//!
//! ```text
//! Q_1(a, b) = Σ_n Pois(n; a²/2) · P(Pois(b²/2) <= n)
//!           = 1 - Σ_n Pois(n; a²/2) · P(Pois(b²/2) > n),
//! ```
//!
//! whose second line only needs the terms where the upper tail of
//! `Pois(b²/2)` is non-negligible, so the cost is independent of the SINR.

use crate::error::{Error, Result};

/// `Q_1(√(2 sinr), √(-2 ln pfa))`.
pub fn detection_probability(sinr_lin: f64, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::domain(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    if !(sinr_lin >= 0.0) {
        return Err(Error::domain(format!("sinr must be >= 0, got {sinr_lin}")));
    }
    if sinr_lin.is_infinite() {
        return Ok(1.0);
    }
    Ok(marcum_q1_half_squares(sinr_lin, -pfa.ln()))
}

/// `Q_1(a, b)` for `λ = a²/2`, `μ = b²/2`.
fn marcum_q1_half_squares(lambda: f64, mu: f64) -> f64 {
    // tail T(n) = P(Pois(μ) > n), summed backwards from where it is negligible
    let k_max = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
    let mut log_q = vec![0.0; k_max + 1];
    log_q[0] = -mu;
    for k in 1..=k_max {
        log_q[k] = log_q[k - 1] + mu.ln() - (k as f64).ln();
    }
    let mut tail = vec![0.0; k_max + 1];
    let mut acc = 0.0;
    for n in (0..=k_max).rev() {
        tail[n] = acc;
        acc += log_q[n].exp();
    }

    let mut miss = 0.0;
    let mut log_p = -lambda;
    for (n, t) in tail.iter().enumerate() {
        if n > 0 {
            log_p += if lambda > 0.0 {
                lambda.ln() - (n as f64).ln()
            } else {
                f64::NEG_INFINITY
            };
        }
        if *t == 0.0 {
            break;
        }
        miss += log_p.exp() * t;
    }
    (1.0 - miss).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_sinr_gives_false_alarm_rate() {
        for pfa in [1e-2, 1e-4, 1e-6] {
            let pd = detection_probability(0.0, pfa).unwrap();
            assert!((pd - pfa).abs() < 1e-9, "{pd} vs {pfa}");
        }
    }

    #[test]
    fn large_sinr_saturates() {
        assert!(detection_probability(1e4, 1e-6).unwrap() > 1.0 - 1e-6);
        assert_eq!(detection_probability(f64::INFINITY, 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_pfa() {
        assert!(detection_probability(1.0, 0.0).is_err());
        assert!(detection_probability(1.0, 1.0).is_err());
        assert!(detection_probability(-1.0, 0.1).is_err());
    }

    #[test]
    fn monotone_in_sinr() {
        let mut prev = 0.0;
        for k in 0..200 {
            let pd = detection_probability(k as f64 * 0.25, 1e-6).unwrap();
            assert!(pd >= prev - 1e-15);
            prev = pd;
        }
    }

    #[test]
    fn matches_closed_form_at_unit_arguments() {
        // Q_1(a, 0) = 1 and, for a = b, Q_1(a, a) = (1 + e^{-a²} I_0(a²)) / 2
        let a2: f64 = 2.0;
        let i0 = (0..60)
            .map(|k| {
                let half = a2 / 2.0;
                (0..k).fold(1.0, |acc, j| acc * half / (j + 1) as f64).powi(2)
            })
            .sum::<f64>();
        let want = 0.5 * (1.0 + (-a2).exp() * i0);
        let got = marcum_q1_half_squares(a2 / 2.0, a2 / 2.0);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn monte_carlo_agreement() {
        let (sinr, pfa) = (10.0f64, 1e-3);
        let a = (2.0 * sinr).sqrt();
        let b = (-2.0 * f64::ln(pfa)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                (a + x).hypot(y) > b
            })
            .count();
        let p_hat = hits as f64 / n as f64;
        let pd = detection_probability(sinr, pfa).unwrap();
        let se = (pd * (1.0 - pd) / n as f64).sqrt();
        assert!((p_hat - pd).abs() <= 3.0 * se, "{p_hat} vs {pd} (se {se})");
    }
}
