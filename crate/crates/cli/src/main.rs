use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wavegame::harness::{
    self, design_from_config, emit, load_config, run_convergence, run_detection_sweep, run_psd,
    run_pulse_compression, run_robustness, ConstraintConfig, ExperimentConfig, Format,
    ResultTable,
};
use wavegame::{lfm_reference, Band, DesignResult, Error};

#[derive(Parser)]
#[command(name = "wavegame", version, about = "Robust MIMO radar waveform and filter design")]
struct Cli {
    /// TOML experiment file; defaults to the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact format; overrides `output.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energy-constrained equilibrium design.
    DesignEc,
    /// Constant-modulus design with similarity constraint.
    DesignCmsc,
    /// Stop-band constrained design with similarity constraint.
    DesignScsc,
    /// Detection probability over the configured e_t sweep.
    Sweep,
    /// Per-iteration objective of the configured design.
    Convergence,
    /// Power spectral density of the configured design.
    Psd,
    /// Pulse compression of the configured design.
    Pulse {
        /// Cross-correlate against the LFM reference instead.
        #[arg(long)]
        cross: bool,
    },
    /// SINR of the fixed design over random target responses.
    Robust {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Small end-to-end run with reproducible artifacts.
    Selftest,
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;

enum Failure {
    Validation(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::Infeasible(_) => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn reference_bands() -> Vec<Band> {
    vec![
        Band { f1: 0.3, f2: 0.4, weight: 0.6 },
        Band { f1: 0.6, f2: 0.8, weight: 0.4 },
    ]
}

fn default_constraint(cmd: &Cmd) -> ConstraintConfig {
    match cmd {
        Cmd::DesignCmsc => ConstraintConfig::Cmsc { e_t: 1.0, delta: 1.0 },
        Cmd::DesignScsc => ConstraintConfig::Scsc {
            e_t: 100.0,
            delta: 1.0,
            bands: reference_bands(),
            e_i: None,
            e_i_frac: Some(0.2),
        },
        _ => ConstraintConfig::Ec { e_t: 1.0 },
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig {
            constraint: default_constraint(&cli.cmd),
            ..ExperimentConfig::default()
        },
    };
    let wanted = match cli.cmd {
        Cmd::DesignEc => Some("ec"),
        Cmd::DesignCmsc => Some("cmsc"),
        Cmd::DesignScsc => Some("scsc"),
        _ => None,
    };
    if let Some(kind) = wanted.filter(|k| *k != cfg.constraint.kind()) {
        return Err(Failure::Validation(format!(
            "invalid config at `constraint.kind`: this command needs \"{kind}\", got \"{}\"",
            cfg.constraint.kind()
        )));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(f) = cli.format {
        cfg.output.formats = match f {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Svg => vec![Format::Svg],
            FormatArg::Both => vec![Format::Csv, Format::Svg],
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(cfg: &ExperimentConfig, table: &ResultTable, stem: &str) -> Result<(), Failure> {
    if let Some((row, col)) = table.first_non_finite() {
        return Err(Failure::Solver(format!(
            "{stem}: row {row} column `{col}` is not finite ({} failed points)",
            table.metadata.get("failures").map_or("?", String::as_str)
        )));
    }
    let dir = Path::new(&cfg.output.dir);
    for f in &cfg.output.formats {
        let ext = match f {
            Format::Csv => "csv",
            Format::Svg => "svg",
        };
        let path = dir.join(format!("{stem}.{ext}"));
        emit(table, *f, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn summarize(res: &DesignResult) {
    println!("sinr_worst      {:.9e} ({:.4} dB)", res.sinr_worst, 10.0 * res.sinr_worst.log10());
    println!("energy          {:.9e}", res.s_opt.energy);
    println!("iterations      {}", res.trace.last().map_or(0, |r| r.iter));
    println!("converged       {}", res.converged);
    if let Some(v) = res.relaxation_value {
        println!("relaxation      {v:.9e}");
    }
}

fn design(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let (scn, res) = design_from_config(cfg)?;
    summarize(&res);
    let n_tx = scn.n_tx();
    let mut wave = ResultTable::new(["tx", "slot", "re", "im"]);
    for (i, v) in res.s_opt.s.iter().enumerate() {
        wave.push(vec![(i % n_tx) as f64, (i / n_tx) as f64, v.re, v.im])?;
    }
    wave.meta("config_hash", cfg.hash())
        .meta("sinr_worst", res.sinr_worst)
        .meta("plot.x", "slot")
        .meta("plot.y", "re")
        .meta("plot.series", "tx");
    let mut filt = ResultTable::new(["index", "re", "im"]);
    for (i, v) in res.w_opt.iter().enumerate() {
        filt.push(vec![i as f64, v.re, v.im])?;
    }
    let mut trace = ResultTable::new(["iter", "objective", "gap"]);
    for r in &res.trace {
        trace.push(vec![r.iter as f64, r.objective, r.gap.unwrap_or(0.0)])?;
    }
    let kind = cfg.constraint.kind();
    write(cfg, &wave, &format!("design_{kind}_waveform"))?;
    write(cfg, &filt, &format!("design_{kind}_filter"))?;
    write(cfg, &trace, &format!("design_{kind}_trace"))
}

fn bands_of(cfg: &ExperimentConfig) -> Vec<Band> {
    match &cfg.constraint {
        ConstraintConfig::Scsc { bands, .. } => bands.clone(),
        _ => Vec::new(),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Cmd::Selftest = cli.cmd {
        let seed = cli.seed.unwrap_or(0);
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("selftest"));
        let formats = match cli.format {
            Some(FormatArg::Svg) => vec![Format::Svg],
            Some(FormatArg::Both) => vec![Format::Csv, Format::Svg],
            _ => vec![Format::Csv],
        };
        let report = harness::selftest(seed, &dir, &formats)?;
        for (name, ok) in &report.checks {
            println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
        }
        for f in &report.files {
            println!("wrote {}", f.display());
        }
        return if report.passed() {
            Ok(())
        } else {
            Err(Failure::Solver("selftest checks failed".into()))
        };
    }

    let cfg = load(cli)?;
    match &cli.cmd {
        Cmd::DesignEc | Cmd::DesignCmsc | Cmd::DesignScsc => design(&cfg),
        Cmd::Sweep => write(&cfg, &run_detection_sweep(&cfg)?, "detection_sweep"),
        Cmd::Convergence => write(&cfg, &run_convergence(&cfg)?, "convergence"),
        Cmd::Psd => {
            let (scn, res) = design_from_config(&cfg)?;
            let mut t = run_psd(&res.s_opt, scn.n_tx(), &bands_of(&cfg))?;
            t.meta("config_hash", cfg.hash());
            write(&cfg, &t, "psd")
        }
        Cmd::Pulse { cross } => {
            let (scn, res) = design_from_config(&cfg)?;
            let s0 = lfm_reference(scn.n_tx(), scn.code_len(), cfg.constraint.e_t());
            let reference = cross.then_some(&s0);
            let mut t = run_pulse_compression(&res.s_opt, scn.n_tx(), reference)?;
            t.meta("config_hash", cfg.hash());
            write(&cfg, &t, "pulse")
        }
        Cmd::Robust { samples } => {
            let (scn, res) = design_from_config(&cfg)?;
            let mut t = run_robustness(&scn, &res, *samples, cfg.seed)?;
            t.meta("config_hash", cfg.hash());
            println!(
                "min {} mean {} sinr_worst {}",
                t.metadata["min"], t.metadata["mean"], t.metadata["sinr_worst"]
            );
            write(&cfg, &t, "robustness")
        }
        Cmd::Selftest => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
