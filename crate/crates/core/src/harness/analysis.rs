//! Spectral and correlation properties of a space-time code.

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::c64;
use crate::model::{Band, Waveform};

fn rows(wave: &Waveform, n_tx: usize) -> Result<Vec<Vec<c64>>> {
    if n_tx == 0 || !wave.s.len().is_multiple_of(n_tx) {
        return Err(Error::Dimension {
            what: "code length is not a multiple of n_tx",
            expected: n_tx,
            got: wave.s.len(),
        });
    }
    let s = wave.code_matrix(n_tx);
    Ok((0..n_tx).map(|n| s.row(n).iter().copied().collect()).collect())
}

/// Periodogram `(1/L) Σ_n |Σ_l S(n,l) e^{-j2πfl}|²` on the grid `f = g/n_fft`.
///
/// The grid mean equals `‖s‖²/L`.
pub fn psd_linear(wave: &Waveform, n_tx: usize, n_fft: usize) -> Result<Vec<f64>> {
    let rows = rows(wave, n_tx)?;
    let l = rows[0].len();
    if n_fft < l {
        return Err(Error::domain(format!("n_fft {n_fft} shorter than code length {l}")));
    }
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let mut out = vec![0.0; n_fft];
    let mut buf = vec![c64::new(0.0, 0.0); n_fft];
    for row in rows {
        buf.fill(c64::new(0.0, 0.0));
        buf[..l].copy_from_slice(&row);
        fft.process(&mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o += v.norm_sqr() / l as f64;
        }
    }
    Ok(out)
}

/// `10 log10` of `psd` relative to its peak, floored at `floor_db`.
pub fn to_db_peak(psd: &[f64], floor_db: f64) -> Vec<f64> {
    let peak = psd.iter().copied().fold(0.0, f64::max);
    psd.iter()
        .map(|&p| {
            if peak > 0.0 && p > 0.0 {
                (10.0 * (p / peak).log10()).max(floor_db)
            } else {
                floor_db
            }
        })
        .collect()
}

fn in_band(f: f64, bands: &[Band]) -> bool {
    bands.iter().any(|b| b.f1 <= f && f <= b.f2)
}

/// Mean PSD over the stop bands and over their complement in `[0, 1)`.
pub fn band_means(psd: &[f64], bands: &[Band]) -> (f64, f64) {
    let n = psd.len() as f64;
    let (mut stop, mut ns, mut pass, mut np) = (0.0, 0usize, 0.0, 0usize);
    for (g, p) in psd.iter().enumerate() {
        if in_band(g as f64 / n, bands) {
            stop += p;
            ns += 1;
        } else {
            pass += p;
            np += 1;
        }
    }
    (stop / ns.max(1) as f64, pass / np.max(1) as f64)
}

/// Aperiodic correlation `r(k) = Σ_l a(l+k) conj(b(l))` for
/// `k = -(L-1)..=(L-1)`.
pub fn aperiodic_xcorr(a: &[c64], b: &[c64]) -> Vec<c64> {
    let l = a.len() as isize;
    ((1 - l)..l)
        .map(|k| {
            (0..l)
                .filter(|&i| (0..l).contains(&(i + k)))
                .map(|i| a[(i + k) as usize] * b[i as usize].conj())
                .sum()
        })
        .collect()
}

/// Per-transmitter correlation magnitudes in dB relative to the zero lag.
///
/// With `reference = None` each row is correlated with itself, otherwise
/// with the matching row of `reference`.
pub fn correlation_db(
    wave: &Waveform,
    reference: Option<&Waveform>,
    n_tx: usize,
    floor_db: f64,
) -> Result<Vec<Vec<f64>>> {
    let a = rows(wave, n_tx)?;
    let b = match reference {
        Some(r) => {
            if r.s.len() != wave.s.len() {
                return Err(Error::Dimension {
                    what: "reference code",
                    expected: wave.s.len(),
                    got: r.s.len(),
                });
            }
            rows(r, n_tx)?
        }
        None => a.clone(),
    };
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| {
            let r = aperiodic_xcorr(x, y);
            let peak = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
            r.iter()
                .map(|v| {
                    if peak > 0.0 && v.norm() > 0.0 {
                        (20.0 * (v.norm() / peak).log10()).max(floor_db)
                    } else {
                        floor_db
                    }
                })
                .collect()
        })
        .collect())
}

/// Peak sidelobe level of each transmitter's autocorrelation, in dB.
pub fn peak_sidelobe_db(wave: &Waveform, n_tx: usize, floor_db: f64) -> Result<Vec<f64>> {
    let db = correlation_db(wave, None, n_tx, floor_db)?;
    Ok(db
        .iter()
        .map(|r| {
            let mid = r.len() / 2;
            r.iter()
                .enumerate()
                .filter(|(k, _)| *k != mid)
                .map(|(_, v)| *v)
                .fold(floor_db, f64::max)
        })
        .collect())
}
