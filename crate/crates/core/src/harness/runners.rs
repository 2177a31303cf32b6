//! Experiment drivers producing [`ResultTable`]s.

use std::time::Instant;

use rayon::prelude::*;

use super::analysis::{band_means, correlation_db, peak_sidelobe_db, psd_linear, to_db_peak};
use super::config::{ConstraintConfig, ExperimentConfig, Point, SweepVar};
use super::table::ResultTable;
use crate::detection::detection_probability;
use crate::error::{Error, Result};
use crate::games::{design_cmsc, design_ec, design_scsc};
use crate::model::{Band, DesignResult, Scenario, Waveform};
use crate::solvers::ball::sample_ball;

/// Floor applied to dB levels so tables stay finite.
pub const DB_FLOOR: f64 = -300.0;
pub const PSD_POINTS: usize = 1024;

fn set(p: &mut Point, var: SweepVar, v: f64) {
    match var {
        SweepVar::Energy => p.e_t = v,
        SweepVar::Radius => p.radius = v,
        SweepVar::Delta => p.delta = Some(v),
        SweepVar::StopBandFraction => p.e_i_frac = Some(v),
    }
}

fn get(p: &Point, var: SweepVar) -> f64 {
    match var {
        SweepVar::Energy => p.e_t,
        SweepVar::Radius => p.radius,
        SweepVar::Delta => p.delta.unwrap_or(f64::NAN),
        SweepVar::StopBandFraction => p.e_i_frac.unwrap_or(f64::NAN),
    }
}

/// Runs the configured design at one parameter point.
pub fn design_point(cfg: &ExperimentConfig, p: &Point) -> Result<(Scenario, DesignResult)> {
    let scn = cfg.scenario(p.radius)?;
    let res = match &cfg.constraint {
        ConstraintConfig::Ec { .. } => design_ec(&scn, p.e_t)?,
        ConstraintConfig::Cmsc { .. } => design_cmsc(&scn, &cfg.constraint_set(p)?, &cfg.algo2())?,
        ConstraintConfig::Scsc { .. } => design_scsc(&scn, &cfg.constraint_set(p)?, &cfg.algo3())?,
    };
    Ok((scn, res))
}

/// Design at the config's base point, ignoring any sweep.
pub fn design_from_config(cfg: &ExperimentConfig) -> Result<(Scenario, DesignResult)> {
    design_point(cfg, &cfg.base_point())
}

fn stamp(table: &mut ResultTable, cfg: &ExperimentConfig, start: Instant) {
    table
        .meta("config_hash", cfg.hash())
        .meta("seed", cfg.seed)
        .meta("kind", cfg.constraint.kind())
        .meta("wall_ms", format!("{:.3}", start.elapsed().as_secs_f64() * 1e3));
}

/// Worst-case SINR and detection probability over the `e_t` grid, one line
/// per series value.
///
/// Columns `e_t, series_value, sinr_worst, p_d`. Points whose design fails
/// become NaN rows and are counted in the `failures` metadata entry. Grid
/// points run in parallel; rows come back in grid order.
pub fn run_detection_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let start = Instant::now();
    let sweep = cfg
        .sweep
        .as_ref()
        .filter(|s| s.variable == SweepVar::Energy)
        .ok_or_else(|| Error::config("sweep.variable", "detection sweep needs variable = \"e_t\""))?;
    let base = cfg.base_point();
    let (series_var, series_vals) = match &sweep.series {
        Some(s) => (s.variable, s.values.clone()),
        None => (SweepVar::Radius, vec![base.radius]),
    };
    let grid: Vec<Point> = series_vals
        .iter()
        .flat_map(|&sv| {
            sweep.values.iter().map(move |&e| {
                let mut p = base;
                set(&mut p, series_var, sv);
                p.e_t = e;
                p
            })
        })
        .collect();

    let pfa = cfg.scenario.pfa;
    let out: Vec<Result<(f64, f64)>> = grid
        .par_iter()
        .map(|p| {
            let (_, res) = design_point(cfg, p)?;
            Ok((res.sinr_worst, detection_probability(res.sinr_worst, pfa)?))
        })
        .collect();

    let mut table = ResultTable::new(["e_t", "series_value", "sinr_worst", "p_d"]);
    let mut failures = 0;
    for (p, r) in grid.iter().zip(out) {
        let (sinr, pd) = r.unwrap_or_else(|e| {
            log::warn!("sweep point e_t={} {}={}: {e}", p.e_t, series_var.name(), get(p, series_var));
            failures += 1;
            (f64::NAN, f64::NAN)
        });
        table.push(vec![p.e_t, get(p, series_var), sinr, pd])?;
    }
    if failures > 0 {
        log::warn!("{failures} of {} sweep points failed", grid.len());
    }
    table
        .meta("series_variable", series_var.name())
        .meta("failures", failures)
        .meta("pfa", pfa)
        .meta("plot.x", "e_t")
        .meta("plot.y", "p_d")
        .meta("plot.series", "series_value");
    stamp(&mut table, cfg, start);
    Ok(table)
}

/// Per-iteration objective and gap of the configured design.
///
/// Columns `series_value, iter, objective, gap`. The series are the
/// `sweep.variable` values when a sweep is configured, otherwise the base
/// point alone (series value 0). `gap` is 0 on rows whose trace record
/// carries no gap, i.e. the initial iterate.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let start = Instant::now();
    let base = cfg.base_point();
    let points: Vec<(f64, Point)> = match &cfg.sweep {
        Some(sw) => sw
            .values
            .iter()
            .map(|&v| {
                let mut p = base;
                set(&mut p, sw.variable, v);
                (v, p)
            })
            .collect(),
        None => vec![(0.0, base)],
    };
    let mut table = ResultTable::new(["series_value", "iter", "objective", "gap"]);
    for (v, p) in &points {
        let (_, res) = design_point(cfg, p)?;
        for rec in &res.trace {
            table.push(vec![*v, rec.iter as f64, rec.objective, rec.gap.unwrap_or(0.0)])?;
        }
        table.meta(&format!("converged[{v}]"), res.converged);
        table.meta(&format!("sinr_worst[{v}]"), res.sinr_worst);
    }
    if let Some(sw) = &cfg.sweep {
        table.meta("series_variable", sw.variable.name());
    }
    table
        .meta("plot.x", "iter")
        .meta("plot.y", "objective")
        .meta("plot.series", "series_value");
    stamp(&mut table, cfg, start);
    Ok(table)
}

/// Power spectral density of `wave` on a 1024-point grid over `[0, 1)`.
///
/// Columns `f, psd_db, psd`: the periodogram
/// `(1/L) Σ_n |Σ_l S(n,l) e^{-j2πfl}|²` and its level in dB relative to the
/// peak. With stop bands given, their mean level and that of the
/// complement are recorded as metadata.
pub fn run_psd(wave: &Waveform, n_tx: usize, bands: &[Band]) -> Result<ResultTable> {
    let psd = psd_linear(wave, n_tx, PSD_POINTS)?;
    let db = to_db_peak(&psd, DB_FLOOR);
    let mut table = ResultTable::new(["f", "psd_db", "psd"]);
    for (g, (d, p)) in db.iter().zip(&psd).enumerate() {
        table.push(vec![g as f64 / PSD_POINTS as f64, *d, *p])?;
    }
    table
        .meta("definition", "periodogram (1/L) sum_n |DFT_1024 of row n|^2; psd_db relative to peak")
        .meta("plot.x", "f")
        .meta("plot.y", "psd_db");
    if !bands.is_empty() {
        let (stop, pass) = band_means(&psd, bands);
        table.meta("stop_band_mean", stop).meta("pass_band_mean", pass);
    }
    Ok(table)
}

/// Per-transmitter correlation levels in dB relative to the zero lag.
///
/// Columns `tx, lag, level_db`. Without `reference` this is the aperiodic
/// autocorrelation of each row and the peak sidelobe level of each
/// transmitter is recorded as `psl_db[n]`; with it, the aperiodic
/// cross-correlation against the matching reference row.
pub fn run_pulse_compression(
    wave: &Waveform,
    n_tx: usize,
    reference: Option<&Waveform>,
) -> Result<ResultTable> {
    let levels = correlation_db(wave, reference, n_tx, DB_FLOOR)?;
    let mut table = ResultTable::new(["tx", "lag", "level_db"]);
    for (n, row) in levels.iter().enumerate() {
        let l = (row.len() as isize + 1) / 2;
        for (k, v) in row.iter().enumerate() {
            table.push(vec![n as f64, (k as isize - (l - 1)) as f64, *v])?;
        }
    }
    let definition = match reference {
        None => {
            for (n, psl) in peak_sidelobe_db(wave, n_tx, DB_FLOOR)?.iter().enumerate() {
                table.meta(&format!("psl_db[{n}]"), psl);
            }
            "aperiodic autocorrelation per transmitter, dB re zero lag"
        }
        Some(_) => "aperiodic cross-correlation with the reference row, dB re its peak",
    };
    table
        .meta("definition", definition)
        .meta("plot.x", "lag")
        .meta("plot.y", "level_db")
        .meta("plot.series", "tx");
    Ok(table)
}

/// SINR of the fixed design `(s*, w*)` against `n_samples` responses drawn
/// uniformly from the uncertainty ball.
///
/// Columns `sample, sinr, sinr_worst`. The summary (minimum, mean and the
/// design's `sinr_worst`) is recorded as metadata. Samples are evaluated in
/// parallel and kept in draw order.
pub fn run_robustness(
    scn: &Scenario,
    design: &DesignResult,
    n_samples: usize,
    seed: u64,
) -> Result<ResultTable> {
    let ts = sample_ball(scn.t0(), scn.radius(), n_samples, seed);
    let sinrs = ts
        .par_iter()
        .map(|t| scn.sinr(&design.s_opt.s, &design.w_opt, t))
        .collect::<Result<Vec<f64>>>()?;
    let mut table = ResultTable::new(["sample", "sinr", "sinr_worst"]);
    for (i, v) in sinrs.iter().enumerate() {
        table.push(vec![i as f64, *v, design.sinr_worst])?;
    }
    let min = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = sinrs.iter().sum::<f64>() / sinrs.len().max(1) as f64;
    table
        .meta("min", min)
        .meta("mean", mean)
        .meta("sinr_worst", design.sinr_worst)
        .meta("seed", seed)
        .meta("plot.x", "sample")
        .meta("plot.y", "sinr");
    Ok(table)
}

/// [`run_robustness`] on the configured design.
pub fn run_robustness_cfg(cfg: &ExperimentConfig, n_samples: usize) -> Result<ResultTable> {
    let start = Instant::now();
    let (scn, res) = design_from_config(cfg)?;
    let mut table = run_robustness(&scn, &res, n_samples, cfg.seed)?;
    stamp(&mut table, cfg, start);
    Ok(table)
}
