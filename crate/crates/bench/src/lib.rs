//! Fixtures shared by the benchmarks.

use wavegame::{c64, CMat, CVec, Scenario};

/// Deterministic Hermitian test matrix with entries of order one.
pub fn hermitian(n: usize, shift: f64) -> CMat {
    let a = CMat::from_fn(n, n, |i, j| {
        let x = (i * 7 + j * 13) as f64;
        c64::new(x.sin(), (0.5 * x).cos())
    });
    let mut h = (&a + a.adjoint()) * c64::new(0.5, 0.0);
    for i in 0..n {
        h[(i, i)] += c64::new(shift, 0.0);
    }
    h
}

/// Deterministic complex vector of length `n`.
pub fn vector(n: usize) -> CVec {
    CVec::from_fn(n, |i, _| c64::new((1.3 * i as f64).cos(), (0.7 * i as f64).sin()))
}

pub fn reference(radius: f64) -> Scenario {
    Scenario::reference(radius).expect("reference scenario builds")
}
