//! Small end-to-end run with deterministic artifacts.

use std::path::{Path, PathBuf};

use super::config::{ConstraintConfig, ExperimentConfig, Format, ScenarioConfig, SeriesConfig, SweepConfig, SweepVar};
use super::runners::{
    design_from_config, run_convergence, run_detection_sweep, run_psd, run_pulse_compression,
    run_robustness,
};
use super::table::{emit, ResultTable};
use crate::error::Result;
use crate::model::Band;

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub files: Vec<PathBuf>,
    /// Named checks with their outcome.
    pub checks: Vec<(String, bool)>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// Scaled-down scenario: two transmitters, two receivers, length-8 code.
pub fn selftest_config(seed: u64) -> ExperimentConfig {
    let reference = ScenarioConfig::default();
    ExperimentConfig {
        seed,
        scenario: ScenarioConfig {
            n_rx: 2,
            code_len: 8,
            t0: reference.t0[..3].to_vec(),
            radius: 0.1,
            ..reference
        },
        constraint: ConstraintConfig::Ec { e_t: 1.0 },
        ..ExperimentConfig::default()
    }
}

fn write(
    table: &ResultTable,
    dir: &Path,
    stem: &str,
    formats: &[Format],
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    for f in formats {
        let ext = match f {
            Format::Csv => "csv",
            Format::Svg => "svg",
        };
        let path = dir.join(format!("{stem}.{ext}"));
        emit(table, *f, &path)?;
        files.push(path);
    }
    Ok(())
}

fn nondecreasing(v: &[f64], tol: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - tol)
}

/// Runs every experiment driver on [`selftest_config`] and writes the
/// tables to `dir`. CSV bytes depend only on `seed`.
pub fn selftest(seed: u64, dir: impl AsRef<Path>, formats: &[Format]) -> Result<SelftestReport> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    let mut checks = Vec::new();
    let base = selftest_config(seed);

    let mut cfg = base.clone();
    cfg.sweep = Some(SweepConfig {
        variable: SweepVar::Energy,
        values: vec![0.1, 1.0, 10.0],
        series: Some(SeriesConfig {
            variable: SweepVar::Radius,
            values: vec![0.1, 0.3],
        }),
    });
    let sweep = run_detection_sweep(&cfg)?;
    let pd = sweep.column("p_d").unwrap_or_default();
    checks.push((
        "detection sweep: p_d nondecreasing in e_t".into(),
        nondecreasing(&pd[..3], 1e-12) && nondecreasing(&pd[3..], 1e-12),
    ));
    checks.push((
        "detection sweep: smaller radius detects better".into(),
        (0..3).all(|i| pd[i] >= pd[i + 3] - 1e-9),
    ));
    write(&sweep, dir, "detection_ec", formats, &mut files)?;

    let (scn, ec) = design_from_config(&base)?;
    let robust = run_robustness(&scn, &ec, 100, seed)?;
    let floor = robust.column("sinr").unwrap_or_default();
    checks.push((
        "robustness: sampled SINR stays above sinr_worst".into(),
        floor.iter().all(|&v| v >= ec.sinr_worst - 1e-6),
    ));
    write(&robust, dir, "robustness_ec", formats, &mut files)?;

    let mut cfg = base.clone();
    cfg.constraint = ConstraintConfig::Cmsc { e_t: 1.0, delta: 0.5 };
    cfg.algo.m_trials = 20;
    let conv = run_convergence(&cfg)?;
    checks.push(("CM-SC trace is finite".into(), conv.first_non_finite().is_none()));
    write(&conv, dir, "convergence_cmsc", formats, &mut files)?;

    let bands = vec![Band::new(0.3, 0.4, 0.6)?, Band::new(0.6, 0.8, 0.4)?];
    let mut cfg = base;
    cfg.constraint = ConstraintConfig::Scsc {
        e_t: 1.0,
        delta: 1.0,
        bands: bands.clone(),
        e_i: None,
        e_i_frac: Some(0.2),
    };
    let (_, sc) = design_from_config(&cfg)?;
    let objective: Vec<f64> = sc.trace.iter().map(|r| r.objective).collect();
    checks.push(("SC-SC trace nondecreasing".into(), nondecreasing(&objective, 1e-9)));
    let mut conv = ResultTable::new(["iter", "objective"]);
    for r in &sc.trace {
        conv.push(vec![r.iter as f64, r.objective])?;
    }
    write(&conv, dir, "convergence_scsc", formats, &mut files)?;

    let n_tx = cfg.scenario.n_tx;
    let psd = run_psd(&sc.s_opt, n_tx, &bands)?;
    let lin = psd.column("psd").unwrap_or_default();
    let mean = lin.iter().sum::<f64>() / lin.len() as f64;
    let want = sc.s_opt.energy / cfg.scenario.code_len as f64;
    checks.push(("PSD mean matches energy / L".into(), (mean - want).abs() <= 1e-2 * want));
    write(&psd, dir, "psd_scsc", formats, &mut files)?;

    let pulse = run_pulse_compression(&sc.s_opt, n_tx, None)?;
    write(&pulse, dir, "pulse_scsc", formats, &mut files)?;

    Ok(SelftestReport { files, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifacts_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = selftest(5, a.path(), &[Format::Csv, Format::Svg]).unwrap();
        let rb = selftest(5, b.path(), &[Format::Csv, Format::Svg]).unwrap();
        assert!(ra.passed(), "{:?}", ra.checks);
        assert_eq!(ra.files.len(), rb.files.len());
        for (fa, fb) in ra.files.iter().zip(&rb.files) {
            assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap(), "{}", fa.display());
        }
    }
}
