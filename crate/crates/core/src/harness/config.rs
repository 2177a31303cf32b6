//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! seed = 7
//!
//! [scenario]
//! n_tx = 2
//! n_rx = 4
//! code_len = 16
//! theta_deg = 30.0
//! tx_spacing = 1.0
//! rx_spacing = 0.5
//! rho = 0.8
//! radius = 0.1
//! pfa = 1e-6
//! t0 = [[0.2, 0.7853981633974483], [0.3, 1.0471975511965976], [0.8, 0.0]]
//!
//! [constraint]
//! kind = "scsc"        # "ec" | "cmsc" | "scsc"
//! e_t = 100.0
//! delta = 1.0
//! e_i_frac = 0.2       # or e_i = <absolute bound>
//! bands = [{ f1 = 0.3, f2 = 0.4, weight = 0.6 }, { f1 = 0.6, f2 = 0.8, weight = 0.4 }]
//!
//! [algo]
//! beta = 0.05
//! m_trials = 100
//!
//! [sweep]
//! variable = "e_t"
//! values = [1.0, 10.0, 100.0]
//! series = { variable = "r", values = [0.1, 0.8] }
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "svg"]
//! ```
//!
//! Every block except `constraint` may be omitted; the defaults reproduce
//! the reference scenario. `t0` entries are `[magnitude, phase_rad]` pairs.
//! The reference code `s0` is always the LFM code of energy `e_t`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::games::{Algo2Params, Algo3Params};
use crate::linalg::{c64, quad_form, CVec};
use crate::model::{
    lfm_reference, noise_covariance, spectral_matrix, Band, ConstraintSet, Scenario, ScenarioParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub code_len: usize,
    pub theta_deg: f64,
    pub tx_spacing: f64,
    pub rx_spacing: f64,
    /// AR(1) correlation of the interference-plus-noise.
    pub rho: f64,
    pub t0: Vec<[f64; 2]>,
    pub radius: f64,
    pub pfa: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let t0 = crate::model::reference_t0()
            .iter()
            .map(|v| [v.norm(), v.arg()])
            .collect();
        ScenarioConfig {
            n_tx: 2,
            n_rx: 4,
            code_len: 16,
            theta_deg: 30.0,
            tx_spacing: 1.0,
            rx_spacing: 0.5,
            rho: 0.8,
            t0,
            radius: 0.1,
            pfa: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintConfig {
    Ec {
        e_t: f64,
    },
    Cmsc {
        e_t: f64,
        delta: f64,
    },
    Scsc {
        e_t: f64,
        delta: f64,
        bands: Vec<Band>,
        /// Absolute stop-band energy bound.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        e_i: Option<f64>,
        /// Bound as a fraction of the reference code's stop-band energy.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        e_i_frac: Option<f64>,
    },
}

impl ConstraintConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintConfig::Ec { .. } => "ec",
            ConstraintConfig::Cmsc { .. } => "cmsc",
            ConstraintConfig::Scsc { .. } => "scsc",
        }
    }

    pub fn e_t(&self) -> f64 {
        match self {
            ConstraintConfig::Ec { e_t }
            | ConstraintConfig::Cmsc { e_t, .. }
            | ConstraintConfig::Scsc { e_t, .. } => *e_t,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            ConstraintConfig::Ec { .. } => None,
            ConstraintConfig::Cmsc { delta, .. } | ConstraintConfig::Scsc { delta, .. } => {
                Some(*delta)
            }
        }
    }
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        ConstraintConfig::Ec { e_t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgoConfig {
    pub beta: f64,
    pub eta: f64,
    pub eps_c: f64,
    pub max_iter_c: usize,
    pub m_trials: usize,
    pub eps_s: f64,
    pub max_iter_s: usize,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        let a2 = Algo2Params::default();
        let a3 = Algo3Params::default();
        AlgoConfig {
            beta: a2.beta,
            eta: a2.eta,
            eps_c: a2.eps,
            max_iter_c: a2.max_iter,
            m_trials: a2.m_trials,
            eps_s: a3.eps,
            max_iter_s: a3.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "e_t")]
    Energy,
    #[serde(rename = "r")]
    Radius,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "e_i_frac")]
    StopBandFraction,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Energy => "e_t",
            SweepVar::Radius => "r",
            SweepVar::Delta => "delta",
            SweepVar::StopBandFraction => "e_i_frac",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            formats: vec![Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub constraint: ConstraintConfig,
    #[serde(default)]
    pub algo: AlgoConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parameter values of one design run, after sweep overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub e_t: f64,
    pub radius: f64,
    pub delta: Option<f64>,
    pub e_i_frac: Option<f64>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::config(field, msg.to_string())
}

fn check_range(field: &str, v: f64, ok: bool, what: &str) -> Result<()> {
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("{what}, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        for (f, v) in [
            ("scenario.n_tx", s.n_tx),
            ("scenario.n_rx", s.n_rx),
            ("scenario.code_len", s.code_len),
        ] {
            if v == 0 {
                return Err(bad(f, "must be positive"));
            }
        }
        if s.t0.is_empty() {
            return Err(bad("scenario.t0", "needs at least one tap"));
        }
        for (i, [m, p]) in s.t0.iter().enumerate() {
            if !(m.is_finite() && p.is_finite() && *m >= 0.0) {
                return Err(bad(&format!("scenario.t0[{i}]"), "magnitude must be >= 0 and finite"));
            }
        }
        check_range("scenario.rho", s.rho, s.rho.abs() < 1.0, "must lie in (-1, 1)")?;
        check_range("scenario.radius", s.radius, s.radius >= 0.0, "must be >= 0")?;
        check_range("scenario.pfa", s.pfa, s.pfa > 0.0 && s.pfa < 1.0, "must lie in (0, 1)")?;
        check_range("scenario.theta_deg", s.theta_deg, s.theta_deg.abs() <= 90.0, "must lie in [-90, 90]")?;

        let c = &self.constraint;
        check_range("constraint.e_t", c.e_t(), c.e_t() > 0.0, "must be positive")?;
        if let Some(d) = c.delta() {
            check_range("constraint.delta", d, d > 0.0 && d <= 2.0, "must lie in (0, 2]")?;
        }
        if let ConstraintConfig::Scsc {
            bands,
            e_i,
            e_i_frac,
            ..
        } = c
        {
            if bands.is_empty() {
                return Err(bad("constraint.bands", "needs at least one band"));
            }
            for (i, b) in bands.iter().enumerate() {
                b.validate()
                    .map_err(|e| bad(&format!("constraint.bands[{i}]"), e))?;
            }
            match (e_i, e_i_frac) {
                (Some(v), None) => check_range("constraint.e_i", *v, *v > 0.0, "must be positive")?,
                (None, Some(v)) => {
                    check_range("constraint.e_i_frac", *v, *v > 0.0, "must be positive")?
                }
                _ => return Err(bad("constraint", "give exactly one of e_i and e_i_frac")),
            }
        }

        let a = &self.algo;
        check_range("algo.beta", a.beta, a.beta >= 0.0, "must be >= 0")?;
        check_range("algo.eta", a.eta, a.eta > 0.0, "must be positive")?;
        check_range("algo.eps_c", a.eps_c, a.eps_c > 0.0, "must be positive")?;
        check_range("algo.eps_s", a.eps_s, a.eps_s > 0.0, "must be positive")?;
        for (f, v) in [
            ("algo.max_iter_c", a.max_iter_c),
            ("algo.m_trials", a.m_trials),
            ("algo.max_iter_s", a.max_iter_s),
        ] {
            if v == 0 {
                return Err(bad(f, "must be positive"));
            }
        }

        if let Some(sw) = &self.sweep {
            self.check_var("sweep.variable", sw.variable, &sw.values)?;
            if let Some(series) = &sw.series {
                if series.variable == sw.variable {
                    return Err(bad("sweep.series.variable", "must differ from sweep.variable"));
                }
                self.check_var("sweep.series.variable", series.variable, &series.values)?;
            }
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats", "needs at least one format"));
        }
        Ok(())
    }

    fn check_var(&self, field: &str, var: SweepVar, values: &[f64]) -> Result<()> {
        let kind = self.constraint.kind();
        let applies = match var {
            SweepVar::Energy | SweepVar::Radius => true,
            SweepVar::Delta => kind != "ec",
            SweepVar::StopBandFraction => kind == "scsc",
        };
        if !applies {
            return Err(bad(field, format!("{} is not a parameter of {kind} constraints", var.name())));
        }
        if values.is_empty() {
            return Err(bad(field, "needs at least one value"));
        }
        for v in values {
            let ok = match var {
                SweepVar::Energy | SweepVar::StopBandFraction => *v > 0.0,
                SweepVar::Radius => *v >= 0.0,
                SweepVar::Delta => *v > 0.0 && *v <= 2.0,
            };
            check_range(field, *v, ok, "value out of range")?;
        }
        Ok(())
    }

    /// Base parameter point before sweep overrides.
    pub fn base_point(&self) -> Point {
        let e_i_frac = match &self.constraint {
            ConstraintConfig::Scsc { e_i_frac, .. } => *e_i_frac,
            _ => None,
        };
        Point {
            e_t: self.constraint.e_t(),
            radius: self.scenario.radius,
            delta: self.constraint.delta(),
            e_i_frac,
        }
    }

    pub fn t0(&self) -> CVec {
        CVec::from_iterator(
            self.scenario.t0.len(),
            self.scenario.t0.iter().map(|[m, p]| c64::from_polar(*m, *p)),
        )
    }

    pub fn scenario(&self, radius: f64) -> Result<Scenario> {
        let s = &self.scenario;
        let q = s.t0.len();
        let dim = (q + s.code_len - 1) * s.n_rx;
        Scenario::new(ScenarioParams {
            n_tx: s.n_tx,
            n_rx: s.n_rx,
            code_len: s.code_len,
            theta_t: s.theta_deg.to_radians(),
            tx_spacing: s.tx_spacing,
            rx_spacing: s.rx_spacing,
            noise_cov: noise_covariance(s.rho, dim)?,
            t0: self.t0(),
            radius,
        })
    }

    pub fn constraint_set(&self, p: &Point) -> Result<ConstraintSet> {
        let (n_tx, l) = (self.scenario.n_tx, self.scenario.code_len);
        let s0 = lfm_reference(n_tx, l, p.e_t);
        let delta = || p.delta.ok_or_else(|| bad("constraint.delta", "missing"));
        Ok(match &self.constraint {
            ConstraintConfig::Ec { .. } => ConstraintSet::Ec { e_t: p.e_t },
            ConstraintConfig::Cmsc { .. } => ConstraintSet::Cmsc {
                e_t: p.e_t,
                delta: delta()?,
                s0,
            },
            ConstraintConfig::Scsc { bands, e_i, .. } => {
                let e_i = match (p.e_i_frac, e_i) {
                    (Some(frac), _) => {
                        let r_i = spectral_matrix(bands, l, n_tx)?;
                        frac * quad_form(&r_i, &s0.s)
                    }
                    (None, Some(v)) => *v,
                    (None, None) => return Err(bad("constraint", "missing e_i")),
                };
                ConstraintSet::Scsc {
                    e_t: p.e_t,
                    delta: delta()?,
                    s0,
                    bands: bands.clone(),
                    e_i,
                }
            }
        })
    }

    pub fn algo2(&self) -> Algo2Params {
        Algo2Params {
            beta: self.algo.beta,
            eta: self.algo.eta,
            eps: self.algo.eps_c,
            max_iter: self.algo.max_iter_c,
            m_trials: self.algo.m_trials,
            seed: self.seed,
        }
    }

    pub fn algo3(&self) -> Algo3Params {
        Algo3Params {
            eps: self.algo.eps_s,
            max_iter: self.algo.max_iter_s,
            init_waveform: None,
        }
    }

    /// Lowercase hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canon))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads, parses and validates a TOML experiment file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml(&text, &path.display().to_string())
}

pub fn save_config(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cfg.to_toml()?).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[constraint]
kind = "cmsc"
e_t = 1.0
delta = 1.0
"#;

    #[test]
    fn missing_blocks_take_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL, "test").unwrap();
        assert_eq!(cfg.algo, AlgoConfig::default());
        assert_eq!(cfg.algo.beta, 0.05);
        assert_eq!(cfg.algo.eta, 0.002);
        assert_eq!(cfg.algo.eps_c, 1e-3);
        assert_eq!(cfg.algo.eps_s, 1e-3);
        assert_eq!(cfg.algo.m_trials, 100);
        assert_eq!(cfg.scenario, ScenarioConfig::default());
    }

    #[test]
    fn delta_above_two_is_rejected() {
        let text = MINIMAL.replace("delta = 1.0", "delta = 3.0");
        let err = ExperimentConfig::from_toml(&text, "test").unwrap_err();
        assert!(err.to_string().contains("constraint.delta"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{MINIMAL}\n[algo]\nbetta = 0.1\n");
        assert!(ExperimentConfig::from_toml(&text, "test").is_err());
    }

    #[test]
    fn sweep_variable_must_apply() {
        let text = "[constraint]\nkind = \"ec\"\ne_t = 1.0\n[sweep]\nvariable = \"delta\"\nvalues = [0.5]\n";
        let err = ExperimentConfig::from_toml(text, "test").unwrap_err();
        assert!(err.to_string().contains("sweep.variable"), "{err}");
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            seed: 11,
            constraint: ConstraintConfig::Scsc {
                e_t: 100.0,
                delta: 1.0,
                bands: vec![Band::new(0.3, 0.4, 0.6).unwrap(), Band::new(0.6, 0.8, 0.4).unwrap()],
                e_i: None,
                e_i_frac: Some(0.2),
            },
            sweep: Some(SweepConfig {
                variable: SweepVar::StopBandFraction,
                values: vec![0.01, 0.1],
                series: Some(SeriesConfig {
                    variable: SweepVar::Radius,
                    values: vec![0.1, 0.3],
                }),
            }),
            ..ExperimentConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        save_config(&cfg, &path).unwrap();
        let back = load_config(&path).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn reference_defaults_build() {
        let cfg = ExperimentConfig::default();
        let scn = cfg.scenario(0.1).unwrap();
        let reference = Scenario::reference(0.1).unwrap();
        assert!((scn.t0() - reference.t0()).norm() < 1e-12);
        assert_eq!(scn.rx_dim(), reference.rx_dim());
    }
}
