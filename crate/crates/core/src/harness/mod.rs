//! Experiment configuration, drivers and artifact emission.

pub mod analysis;
pub mod config;
pub mod runners;
pub mod selftest;
pub mod table;

pub use config::{
    load_config, save_config, AlgoConfig, ConstraintConfig, ExperimentConfig, Format,
    OutputConfig, Point, ScenarioConfig, SeriesConfig, SweepConfig, SweepVar,
};
pub use runners::{
    design_from_config, design_point, run_convergence, run_detection_sweep, run_psd,
    run_pulse_compression, run_robustness, run_robustness_cfg,
};
pub use selftest::{selftest, selftest_config, SelftestReport};
pub use table::{emit, format_sig12, to_csv, to_svg, ResultTable};
