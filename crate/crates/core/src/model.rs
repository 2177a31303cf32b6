//! Signal model: geometry, the two equivalent linear operators `G(t)` and
//! `H(s)`, filtering, and the waveform/constraint descriptors.
//!
//! Indexing follows the column stacking `s = vec(S)` of the `N_T x L` code
//! matrix, so entry `(n, l)` lives at `l * N_T + n`. Receive samples are
//! ordered the same way: range cell `m`, receiver `k` at `m * N_R + k`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_defect, CMat, CVec, J};

/// Array geometry, noise statistics and the target uncertainty set.
#[derive(Debug, Clone)]
pub struct Scenario {
    n_tx: usize,
    n_rx: usize,
    code_len: usize,
    tir_len: usize,
    theta_t: f64,
    tx_spacing: f64,
    rx_spacing: f64,
    noise_cov: CMat,
    t0: CVec,
    radius: f64,
    a: CVec,
    b: CVec,
    chol: Cholesky<c64, Dyn>,
    /// `L^{-1}` for the Cholesky factor `R_c = L L^H`.
    l_inv: CMat,
    /// Whitened `L^{-1} A_i` for every TIR tap.
    a_white: Vec<CMat>,
}

/// Plain parameter record used to build a [`Scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub code_len: usize,
    pub theta_t: f64,
    pub tx_spacing: f64,
    pub rx_spacing: f64,
    pub noise_cov: CMat,
    pub t0: CVec,
    pub radius: f64,
}

/// Nominal target response of the reference experiment.
pub fn reference_t0() -> CVec {
    use std::f64::consts::PI;
    let polar = [
        (0.2, PI / 4.0),
        (0.3, PI / 3.0),
        (0.8, 0.0),
        (0.3, -PI / 6.0),
        (0.2, -PI / 3.0),
        (0.1, -PI / 3.0),
    ];
    CVec::from_iterator(6, polar.iter().map(|&(m, p)| c64::from_polar(m, p)))
}

impl Scenario {
    pub fn new(p: ScenarioParams) -> Result<Self> {
        if p.n_tx == 0 || p.n_rx == 0 || p.code_len == 0 {
            return Err(Error::domain("n_tx, n_rx and code_len must be positive"));
        }
        let q = p.t0.len();
        if q == 0 {
            return Err(Error::domain("t0 must have at least one tap"));
        }
        if !(p.radius >= 0.0) || !p.radius.is_finite() {
            return Err(Error::domain(format!("radius must be >= 0, got {}", p.radius)));
        }
        let dim = (q + p.code_len - 1) * p.n_rx;
        if p.noise_cov.shape() != (dim, dim) {
            return Err(Error::Dimension {
                what: "noise covariance",
                expected: dim,
                got: p.noise_cov.nrows(),
            });
        }
        if hermitian_defect(&p.noise_cov) > 1e-12 {
            return Err(Error::domain("noise covariance is not Hermitian"));
        }
        let chol = Cholesky::new(p.noise_cov.clone())
            .ok_or_else(|| Error::domain("noise covariance is not positive definite"))?;
        let l = chol.l();
        let l_inv = l
            .solve_lower_triangular(&CMat::identity(dim, dim))
            .ok_or_else(|| Error::domain("noise covariance is singular"))?;

        let a = steering(p.n_tx, p.tx_spacing, p.theta_t);
        let b = steering(p.n_rx, p.rx_spacing, p.theta_t);
        let mut scn = Scenario {
            n_tx: p.n_tx,
            n_rx: p.n_rx,
            code_len: p.code_len,
            tir_len: q,
            theta_t: p.theta_t,
            tx_spacing: p.tx_spacing,
            rx_spacing: p.rx_spacing,
            noise_cov: p.noise_cov,
            t0: p.t0,
            radius: p.radius,
            a,
            b,
            chol,
            l_inv,
            a_white: Vec::new(),
        };
        scn.a_white = (0..q)
            .map(|i| {
                let ai = kron_shift(i, &scn);
                &scn.l_inv * ai
            })
            .collect();
        Ok(scn)
    }

    /// The reference configuration: `N_T = 2`, `N_R = 4`, `L = 16`, `Q = 6`,
    /// target at 30°, AR(1) noise with `ρ = 0.8`, and the six-tap nominal
    /// response of [`reference_t0`].
    pub fn reference(radius: f64) -> Result<Self> {
        let (n_tx, n_rx, code_len) = (2, 4, 16);
        let t0 = reference_t0();
        let dim = (t0.len() + code_len - 1) * n_rx;
        Scenario::new(ScenarioParams {
            n_tx,
            n_rx,
            code_len,
            theta_t: 30f64.to_radians(),
            tx_spacing: 1.0,
            rx_spacing: 0.5,
            noise_cov: noise_covariance(0.8, dim)?,
            t0,
            radius,
        })
    }

    /// Same scenario with a different uncertainty radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::domain(format!("radius must be >= 0, got {radius}")));
        }
        let mut out = self.clone();
        out.radius = radius;
        Ok(out)
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }
    pub fn n_rx(&self) -> usize {
        self.n_rx
    }
    pub fn code_len(&self) -> usize {
        self.code_len
    }
    pub fn tir_len(&self) -> usize {
        self.tir_len
    }
    pub fn theta_t(&self) -> f64 {
        self.theta_t
    }
    pub fn tx_spacing(&self) -> f64 {
        self.tx_spacing
    }
    pub fn rx_spacing(&self) -> f64 {
        self.rx_spacing
    }
    pub fn noise_cov(&self) -> &CMat {
        &self.noise_cov
    }
    pub fn t0(&self) -> &CVec {
        &self.t0
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Length `N_T L` of the space-time code.
    pub fn code_dim(&self) -> usize {
        self.n_tx * self.code_len
    }

    /// Length `(Q + L - 1) N_R` of the received snapshot.
    pub fn rx_dim(&self) -> usize {
        (self.tir_len + self.code_len - 1) * self.n_rx
    }

    /// Transmit and receive steering vectors `(a, b)`.
    pub fn steering_vectors(&self) -> (CVec, CVec) {
        (self.a.clone(), self.b.clone())
    }

    fn check_t(&self, t: &CVec) -> Result<()> {
        if t.len() != self.tir_len {
            return Err(Error::Dimension {
                what: "target response",
                expected: self.tir_len,
                got: t.len(),
            });
        }
        Ok(())
    }

    fn check_s(&self, s: &CVec) -> Result<()> {
        if s.len() != self.code_dim() {
            return Err(Error::Dimension {
                what: "waveform",
                expected: self.code_dim(),
                got: s.len(),
            });
        }
        Ok(())
    }

    /// `G(t) = T ⊗ (b a^T)` with `T = Σ t(i) J_{i-1}`.
    pub fn op_g(&self, t: &CVec) -> Result<CMat> {
        self.check_t(t)?;
        let (nt, nr, l, q) = (self.n_tx, self.n_rx, self.code_len, self.tir_len);
        let mut g = CMat::zeros(self.rx_dim(), self.code_dim());
        for col in 0..l {
            for (i, ti) in t.iter().enumerate().take(q) {
                let m = col + i;
                for k in 0..nr {
                    for n in 0..nt {
                        g[(m * nr + k, col * nt + n)] = ti * self.b[k] * self.a[n];
                    }
                }
            }
        }
        Ok(g)
    }

    /// `H(s) = [A_1 s, ..., A_Q s]` with `A_i = J_{i-1} ⊗ (b a^T)`.
    pub fn op_h(&self, s: &CVec) -> Result<CMat> {
        self.check_s(s)?;
        let (nt, nr, l, q) = (self.n_tx, self.n_rx, self.code_len, self.tir_len);
        // a^T S(:, l) for every code column
        let x: Vec<c64> = (0..l)
            .map(|col| (0..nt).map(|n| self.a[n] * s[col * nt + n]).sum())
            .collect();
        let mut h = CMat::zeros(self.rx_dim(), q);
        for i in 0..q {
            for (col, xc) in x.iter().enumerate() {
                let m = col + i;
                for k in 0..nr {
                    h[(m * nr + k, i)] = self.b[k] * xc;
                }
            }
        }
        Ok(h)
    }

    /// `A_i = J_i ⊗ (b a^T)` for a zero-based tap index.
    pub fn tap_operator(&self, i: usize) -> Result<CMat> {
        if i >= self.tir_len {
            return Err(Error::domain(format!("tap {i} out of range 0..{}", self.tir_len)));
        }
        Ok(kron_shift(i, self))
    }

    /// Whitened operator `L^{-1} X` with `R_c = L L^H`.
    pub fn whiten(&self, x: &CMat) -> CMat {
        &self.l_inv * x
    }

    /// Whitened tap operators `L^{-1} A_i`, so `L^{-1} G(t) = Σ t_i L^{-1} A_i`.
    pub fn whitened_taps(&self) -> &[CMat] {
        &self.a_white
    }

    /// `R_c^{-1} y`.
    pub fn solve_noise(&self, y: &CVec) -> CVec {
        self.chol.solve(y)
    }

    /// `G(t)^H R_c^{-1} G(t)`, the quadratic form of the waveform payoff.
    pub fn gram_g(&self, t: &CVec) -> Result<CMat> {
        let gw = self.whiten(&self.op_g(t)?);
        Ok(gw.adjoint() * gw)
    }

    /// `H(s)^H R_c^{-1} H(s)`, the quadratic form of the target payoff.
    pub fn gram_h(&self, s: &CVec) -> Result<CMat> {
        let hw = self.whiten(&self.op_h(s)?);
        Ok(hw.adjoint() * hw)
    }

    /// `H(s1)^H R_c^{-1} H(s2)`.
    pub fn cross_h(&self, s1: &CVec, s2: &CVec) -> Result<CMat> {
        let h1 = self.whiten(&self.op_h(s1)?);
        let h2 = self.whiten(&self.op_h(s2)?);
        Ok(h1.adjoint() * h2)
    }

    /// `U(R)` with entries `tr(A_i^H R_c^{-1} A_j R)`, so that
    /// `tr(G(t)^H R_c^{-1} G(t) R) = t^H U(R) t`.
    pub fn tap_gram(&self, r: &CMat) -> Result<CMat> {
        if r.shape() != (self.code_dim(), self.code_dim()) {
            return Err(Error::Dimension {
                what: "waveform covariance",
                expected: self.code_dim(),
                got: r.nrows(),
            });
        }
        let q = self.tir_len;
        let prods: Vec<CMat> = self.a_white.iter().map(|aj| aj * r).collect();
        let mut u = CMat::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                let v: c64 = self.a_white[i]
                    .iter()
                    .zip(prods[j].iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                u[(i, j)] = v;
                u[(j, i)] = v.conj();
            }
            u[(i, i)] = c64::new(u[(i, i)].re, 0.0);
        }
        Ok(u)
    }

    /// Output SINR `|w^H H(s) t|² / (w^H R_c w)`.
    pub fn sinr(&self, s: &CVec, w: &CVec, t: &CVec) -> Result<f64> {
        if w.len() != self.rx_dim() {
            return Err(Error::Dimension {
                what: "filter",
                expected: self.rx_dim(),
                got: w.len(),
            });
        }
        let den = w.dotc(&(&self.noise_cov * w)).re;
        if !(den > 0.0) {
            return Err(Error::domain("filter must be nonzero"));
        }
        let y = self.op_h(s)? * t;
        Ok(w.dotc(&y).norm_sqr() / den)
    }

    /// Matched filter `R_c^{-1} H(s) t`.
    pub fn optimal_filter(&self, s: &CVec, t: &CVec) -> Result<CVec> {
        self.check_t(t)?;
        let y = self.op_h(s)? * t;
        Ok(self.solve_noise(&y))
    }
}

fn steering(n: usize, spacing: f64, theta: f64) -> CVec {
    let phase = 2.0 * std::f64::consts::PI * spacing * theta.sin();
    CVec::from_fn(n, |k, _| (J * (phase * k as f64)).exp())
}

fn kron_shift(i: usize, scn: &Scenario) -> CMat {
    let (nt, nr, l) = (scn.n_tx, scn.n_rx, scn.code_len);
    let mut out = CMat::zeros(scn.rx_dim(), scn.code_dim());
    for col in 0..l {
        let m = col + i;
        for k in 0..nr {
            for n in 0..nt {
                out[(m * nr + k, col * nt + n)] = scn.b[k] * scn.a[n];
            }
        }
    }
    out
}

/// Shift matrix `J_i` of size `(Q + L - 1) x L` with ones where `m - n = i`.
pub fn shift_matrix(i: usize, q: usize, l: usize) -> Result<DMatrix<f64>> {
    if i >= q {
        return Err(Error::domain(format!("shift index {i} must be below Q = {q}")));
    }
    let mut j = DMatrix::zeros(q + l - 1, l);
    for n in 0..l {
        j[(n + i, n)] = 1.0;
    }
    Ok(j)
}

/// Toeplitz covariance with entries `ρ^{|m-n|}`.
pub fn noise_covariance(rho: f64, dim: usize) -> Result<CMat> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("correlation must lie in [0, 1), got {rho}")));
    }
    Ok(CMat::from_fn(dim, dim, |m, n| {
        c64::new(rho.powi((m as i64 - n as i64).unsigned_abs() as i32), 0.0)
    }))
}

/// Normalized frequency band `[f1, f2]` with weight `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f1: f64,
    pub f2: f64,
    pub weight: f64,
}

impl Band {
    pub fn new(f1: f64, f2: f64, weight: f64) -> Result<Self> {
        let b = Band { f1, f2, weight };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.f1 && self.f1 < self.f2 && self.f2 <= 1.0) {
            return Err(Error::domain(format!(
                "band needs 0 <= f1 < f2 <= 1, got [{}, {}]",
                self.f1, self.f2
            )));
        }
        if !(self.weight >= 0.0) {
            return Err(Error::domain(format!("band weight must be >= 0, got {}", self.weight)));
        }
        Ok(())
    }

    /// `L x L` stop-band energy matrix of this band (unweighted).
    pub fn energy_matrix(&self, l: usize) -> CMat {
        let two_pi = 2.0 * std::f64::consts::PI;
        CMat::from_fn(l, l, |m, n| {
            if m == n {
                c64::new(self.f2 - self.f1, 0.0)
            } else {
                let d = m as f64 - n as f64;
                ((J * (two_pi * self.f2 * d)).exp() - (J * (two_pi * self.f1 * d)).exp())
                    / (J * (two_pi * d))
            }
        })
    }
}

/// Weighted stop-band energy matrix `R_I` on the stacked code.
///
/// Each transmitter sees the same `Σ α_k R_I^k`; with the `l * N_T + n`
/// ordering this is `(Σ α_k R_I^k) ⊗ I_{N_T}`.
pub fn spectral_matrix(bands: &[Band], l: usize, n_tx: usize) -> Result<CMat> {
    let mut acc = CMat::zeros(l, l);
    for b in bands {
        b.validate()?;
        acc += b.energy_matrix(l) * c64::new(b.weight, 0.0);
    }
    Ok(crate::linalg::kron(&acc, &CMat::identity(n_tx, n_tx)))
}

/// A space-time code `s = vec(S)` with its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub s: CVec,
    pub energy: f64,
}

impl Waveform {
    pub fn new(s: CVec) -> Self {
        let energy = s.norm_squared();
        Waveform { s, energy }
    }

    /// `N_T x L` code matrix `S`.
    pub fn code_matrix(&self, n_tx: usize) -> CMat {
        let l = self.s.len() / n_tx;
        CMat::from_fn(n_tx, l, |n, col| self.s[col * n_tx + n])
    }
}

/// Orthogonal LFM reference code
/// `S0(n, l) = √(e_t/(N_T L)) exp(jπ(2n(l-1) + (l-1)²)/L)` with 1-based `n`, `l`.
pub fn lfm_reference(n_tx: usize, l: usize, e_t: f64) -> Waveform {
    let amp = (e_t / (n_tx * l) as f64).sqrt();
    let pi = std::f64::consts::PI;
    let s = CVec::from_fn(n_tx * l, |idx, _| {
        let n = (idx % n_tx + 1) as f64;
        let lm1 = (idx / n_tx) as f64;
        let phase = pi * (2.0 * n * lm1 + lm1 * lm1) / l as f64;
        c64::from_polar(amp, phase)
    });
    Waveform::new(s)
}

/// Waveform constraint families.
#[derive(Debug, Clone)]
pub enum ConstraintSet {
    /// Total energy only.
    Ec { e_t: f64 },
    /// Constant modulus and similarity `‖s - s0‖_∞ <= δ √(e_t/(N_T L))`.
    Cmsc { e_t: f64, delta: f64, s0: Waveform },
    /// Energy, similarity and stop-band energy `s^H R_I s <= e_I`.
    Scsc {
        e_t: f64,
        delta: f64,
        s0: Waveform,
        bands: Vec<Band>,
        e_i: f64,
    },
}

impl ConstraintSet {
    pub fn e_t(&self) -> f64 {
        match self {
            ConstraintSet::Ec { e_t }
            | ConstraintSet::Cmsc { e_t, .. }
            | ConstraintSet::Scsc { e_t, .. } => *e_t,
        }
    }

    pub fn validate(&self, code_dim: usize) -> Result<()> {
        let e_t = self.e_t();
        if !(e_t > 0.0) || !e_t.is_finite() {
            return Err(Error::domain(format!("e_t must be positive, got {e_t}")));
        }
        let check_sim = |delta: f64, s0: &Waveform| -> Result<()> {
            if !(delta > 0.0 && delta <= 2.0) {
                return Err(Error::domain(format!("delta must lie in (0, 2], got {delta}")));
            }
            if s0.s.len() != code_dim {
                return Err(Error::Dimension {
                    what: "reference waveform",
                    expected: code_dim,
                    got: s0.s.len(),
                });
            }
            Ok(())
        };
        match self {
            ConstraintSet::Ec { .. } => Ok(()),
            ConstraintSet::Cmsc { delta, s0, .. } => check_sim(*delta, s0),
            ConstraintSet::Scsc {
                delta,
                s0,
                bands,
                e_i,
                ..
            } => {
                check_sim(*delta, s0)?;
                if bands.is_empty() {
                    return Err(Error::domain("at least one stop band is required"));
                }
                for b in bands {
                    b.validate()?;
                }
                if !(*e_i > 0.0) {
                    return Err(Error::domain(format!("e_I must be positive, got {e_i}")));
                }
                Ok(())
            }
        }
    }
}

/// One row of an algorithm trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub gap: Option<f64>,
    pub wall_ms: f64,
}

/// Equilibrium waveform-filter pair and the target's best response.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub s_opt: Waveform,
    pub w_opt: CVec,
    pub t_worst: CVec,
    /// Worst-case SINR over the uncertainty ball, linear scale.
    pub sinr_worst: f64,
    pub trace: Vec<IterRecord>,
    /// False when the iteration cap was hit before the stopping rule.
    pub converged: bool,
    /// Value of the convex relaxation the design was derived from, if any.
    pub relaxation_value: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> Scenario {
        let t0 = CVec::from_vec(vec![c64::new(1.0, 0.2), c64::new(-0.3, 0.5), c64::new(0.1, 0.0)]);
        let dim = (3 + 4 - 1) * 2;
        Scenario::new(ScenarioParams {
            n_tx: 2,
            n_rx: 2,
            code_len: 4,
            theta_t: 0.3,
            tx_spacing: 1.0,
            rx_spacing: 0.5,
            noise_cov: noise_covariance(0.5, dim).unwrap(),
            t0,
            radius: 0.2,
        })
        .unwrap()
    }

    #[test]
    fn steering_examples() {
        let scn = Scenario::reference(0.1).unwrap();
        let (a, b) = scn.steering_vectors();
        assert!((a[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((a[1] - c64::new(-1.0, 0.0)).norm() < 1e-12);
        for (m, bm) in b.iter().enumerate() {
            let want = (J * (std::f64::consts::PI * m as f64 / 2.0)).exp();
            assert!((bm - want).norm() < 1e-12);
        }
        let flat = steering(5, 1.0, 0.0);
        assert!(flat.iter().all(|v| (v - c64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn shift_matrix_examples() {
        let j0 = shift_matrix(0, 3, 2).unwrap();
        assert_eq!(j0[(0, 0)], 1.0);
        assert_eq!(j0[(1, 1)], 1.0);
        assert_eq!(j0.sum(), 2.0);
        let j2 = shift_matrix(2, 3, 2).unwrap();
        assert_eq!(j2[(2, 0)], 1.0);
        assert_eq!(j2[(3, 1)], 1.0);
        assert!(shift_matrix(3, 3, 2).is_err());
        for q in 1..5 {
            for l in 1..5 {
                for i in 0..q {
                    let j = shift_matrix(i, q, l).unwrap();
                    assert!(j.column_iter().all(|c| c.sum() == 1.0));
                    assert!(j.row_iter().all(|r| r.sum() <= 1.0));
                }
            }
        }
    }

    #[test]
    fn g_matches_kronecker_definition() {
        let scn = small();
        let (a, b) = scn.steering_vectors();
        let ba = &b * a.transpose();
        let t = CVec::from_vec(vec![c64::new(0.4, -0.1), c64::new(0.0, 1.0), c64::new(2.0, 0.3)]);
        let mut tm = CMat::zeros(6, 4);
        for i in 0..3 {
            tm += shift_matrix(i, 3, 4).unwrap().map(|v| c64::new(v, 0.0)) * t[i];
        }
        let want = crate::linalg::kron(&tm, &ba);
        assert!((scn.op_g(&t).unwrap() - want).norm() < 1e-13);
        let e1 = CVec::from_vec(vec![c64::new(1.0, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)]);
        assert!((scn.op_g(&e1).unwrap() - scn.tap_operator(0).unwrap()).norm() < 1e-14);
        assert_eq!(scn.op_g(&CVec::zeros(3)).unwrap().norm(), 0.0);
    }

    #[test]
    fn tap_gram_reproduces_trace_form() {
        let scn = small();
        let s = CVec::from_fn(8, |i, _| c64::new((i as f64).cos(), (2.0 * i as f64).sin()));
        let r = &s * s.adjoint() + CMat::identity(8, 8) * c64::new(0.3, 0.0);
        let t = scn.t0().clone();
        let u = scn.tap_gram(&r).unwrap();
        let lhs = (scn.gram_g(&t).unwrap() * &r).trace().re;
        let rhs = t.dotc(&(&u * &t)).re;
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        // rank one: U(ss^H) = H(s)^H R^{-1} H(s)
        let u1 = scn.tap_gram(&(&s * s.adjoint())).unwrap();
        assert!((u1 - scn.gram_h(&s).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn noise_covariance_examples() {
        assert_eq!(noise_covariance(0.0, 3).unwrap(), CMat::identity(3, 3));
        let r = noise_covariance(0.8, 2).unwrap();
        assert!((r[(0, 1)].re - 0.8).abs() < 1e-15);
        let e = crate::solvers::herm_eig(&r).unwrap();
        assert!((e.values[0] - 1.8).abs() < 1e-12 && (e.values[1] - 0.2).abs() < 1e-12);
        let big = noise_covariance(0.8, 84).unwrap();
        assert!(crate::solvers::herm_eig(&big).unwrap().min() > 0.0);
        assert!(noise_covariance(1.0, 2).is_err());
    }

    #[test]
    fn spectral_matrix_examples() {
        let full = spectral_matrix(&[Band::new(0.0, 1.0, 1.0).unwrap()], 8, 1).unwrap();
        assert!((full - CMat::identity(8, 8)).norm() < 1e-12);
        let bands = [Band::new(0.3, 0.4, 0.6).unwrap(), Band::new(0.6, 0.8, 0.4).unwrap()];
        let ri = spectral_matrix(&bands, 16, 2).unwrap();
        assert!(ri.diagonal().iter().all(|d| (d.re - 0.14).abs() < 1e-12));
        assert!(hermitian_defect(&ri) < 1e-14);
        assert!(crate::solvers::herm_eig(&ri).unwrap().min() >= -1e-10);
    }

    #[test]
    fn lfm_examples() {
        let w = lfm_reference(2, 16, 1.0);
        assert!((w.energy - 1.0).abs() < 1e-12);
        let amp = (1.0f64 / 32.0).sqrt();
        assert!(w.s.iter().all(|v| (v.norm() - amp).abs() < 1e-14));
        // n = 1, l = 2 sits at index 1 * N_T + 0
        let ph = w.s[2].arg();
        assert!((ph - 3.0 * std::f64::consts::PI / 16.0).abs() < 1e-12);
        let one = lfm_reference(3, 1, 3.0);
        assert!(one.s.iter().all(|v| (v - c64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn sinr_examples() {
        let scn = small();
        let s = lfm_reference(2, 4, 1.0).s;
        let t = scn.t0().clone();
        let w = scn.optimal_filter(&s, &t).unwrap();
        let v = scn.sinr(&s, &w, &t).unwrap();
        let quad = t.dotc(&(scn.gram_h(&s).unwrap() * &t)).re;
        assert!((v - quad).abs() < 1e-10 * quad);
        assert_eq!(scn.sinr(&s, &w, &CVec::zeros(3)).unwrap(), 0.0);
        assert!(scn.sinr(&s, &CVec::zeros(12), &t).is_err());
    }

    #[test]
    fn constraint_validation() {
        let s0 = lfm_reference(2, 16, 1.0);
        let bad = ConstraintSet::Cmsc { e_t: 1.0, delta: 3.0, s0: s0.clone() };
        assert!(bad.validate(32).is_err());
        let ok = ConstraintSet::Cmsc { e_t: 1.0, delta: 0.5, s0 };
        assert!(ok.validate(32).is_ok());
        assert!(ConstraintSet::Ec { e_t: 0.0 }.validate(32).is_err());
    }

    fn cvec_strategy(n: usize) -> impl Strategy<Value = CVec> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
            .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| c64::new(a, b))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operators_agree(s in cvec_strategy(32), t in cvec_strategy(6)) {
            let scn = Scenario::reference(0.3).unwrap();
            let gs = scn.op_g(&t).unwrap() * &s;
            let ht = scn.op_h(&s).unwrap() * &t;
            prop_assert!((gs - ht).norm() <= 1e-10 * (1.0 + s.norm() * t.norm()));
        }

        #[test]
        fn sinr_is_scale_invariant(
            s in cvec_strategy(8),
            w in cvec_strategy(12),
            t in cvec_strategy(3),
            k in 0.1f64..10.0,
        ) {
            let scn = small();
            prop_assume!(w.norm() > 1e-3);
            let a = scn.sinr(&s, &w, &t).unwrap();
            let b = scn.sinr(&s, &(&w * c64::new(k, 0.0)), &t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn matched_filter_dominates(
            s in cvec_strategy(8),
            t in cvec_strategy(3),
            w in cvec_strategy(12),
        ) {
            let scn = small();
            prop_assume!(w.norm() > 1e-3);
            let best = scn.optimal_filter(&s, &t).unwrap();
            prop_assume!(best.norm() > 1e-9);
            let opt = scn.sinr(&s, &best, &t).unwrap();
            prop_assert!(scn.sinr(&s, &w, &t).unwrap() <= opt * (1.0 + 1e-10) + 1e-12);
        }

        #[test]
        fn spectral_form_nonnegative(s in cvec_strategy(8), f1 in 0.0f64..0.5, w in 0.01f64..0.5) {
            let ri = spectral_matrix(&[Band::new(f1, f1 + w, 1.0).unwrap()], 4, 2).unwrap();
            let v = s.dotc(&(&ri * &s));
            prop_assert!(v.re >= -1e-10 && v.im.abs() <= 1e-10 * (1.0 + v.re.abs()));
        }
    }
}
