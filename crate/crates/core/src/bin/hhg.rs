use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hhg_core::config::{Mode, RunConfig, PRESETS};
use hhg_core::error::{Error, Result};
use hhg_core::run::{reproduce, resolve, run};
use serde_json::json;

/// High-harmonic generation in a tight-binding molecular dimer.
#[derive(Parser)]
#[command(name = "hhg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. `pulse.phi=55`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for scans.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write model.json.
    #[arg(long)]
    dump_model: bool,
    /// Also write the time series.
    #[arg(long)]
    dump_series: bool,
    /// Default output root.
    #[arg(long, env = "HHG_OUTPUT_ROOT", default_value = "hhg-out")]
    output_root: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Single run: spectrum and harmonic intensities.
    Spectrum(Common),
    /// Harmonic intensities against polarization angle.
    PolarScan(Common),
    /// Peak angles and perpendicular curves against coupling strength.
    CouplingSweep(Common),
    /// Exact, adia-intra and adia-inter spectra of one run.
    AdiabaticCompare(Common),
    /// Runs whatever mode the configuration names.
    Run(Common),
    /// Regenerates the data for one figure preset (fig2..fig8) or `all`.
    Reproduce {
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Resolves and checks a configuration without running it.
    Validate(Common),
}

fn load(common: &Common, mode: Option<Mode>) -> Result<RunConfig> {
    let base = match &common.config {
        Some(path) => RunConfig::from_json_str(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let mut config = base.with_overrides(&common.overrides)?;
    if let Some(mode) = mode {
        config.mode = mode;
    }
    config.output.dump_model |= common.dump_model;
    config.output.dump_series |= common.dump_series;
    Ok(config)
}

fn single(common: &Common, mode: Option<Mode>) -> Result<()> {
    let config = load(common, mode)?;
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| common.output_root.join(config.mode.name()));
    let report = run(&config, &dir)?;
    println!("{}", report.dir.join(hhg_core::run::MANIFEST).display());
    Ok(())
}

fn figures(common: &Common, figure: &str) -> Result<()> {
    let root: &Path = common.out.as_deref().unwrap_or(&common.output_root);
    let names: Vec<&str> = if figure == "all" {
        PRESETS.to_vec()
    } else {
        vec![figure]
    };
    let mut overrides = common.overrides.clone();
    if common.dump_model {
        overrides.push("output.dump_model=true".into());
    }
    if common.dump_series {
        overrides.push("output.dump_series=true".into());
    }
    for name in names {
        for report in reproduce(name, root, &overrides)? {
            println!("{}", report.dir.join(hhg_core::run::MANIFEST).display());
        }
    }
    Ok(())
}

fn validate(common: &Common) -> Result<()> {
    let config = load(common, None)?;
    let resolved = resolve(&config)?;
    let out = json!({ "config": resolved.config, "derived": resolved.derived });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        "config" | "invalid-input" => 2,
        "norm-drift" => 3,
        "numerical" => 4,
        _ => 5,
    }
}

fn report_error(e: &Error) {
    let issues = match e {
        Error::Config(issues) => serde_json::to_value(issues).unwrap_or_default(),
        _ => json!([]),
    };
    let record = json!({ "error": { "kind": e.kind(), "message": e.to_string(), "issues": issues } });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Spectrum(c)
        | Command::PolarScan(c)
        | Command::CouplingSweep(c)
        | Command::AdiabaticCompare(c)
        | Command::Run(c)
        | Command::Validate(c) => c,
        Command::Reproduce { common, .. } => common,
    };
    if let Some(n) = common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Spectrum(c) => single(c, Some(Mode::Spectrum)),
        Command::PolarScan(c) => single(c, Some(Mode::PolarScan)),
        Command::CouplingSweep(c) => single(c, Some(Mode::CouplingSweep)),
        Command::AdiabaticCompare(c) => single(c, Some(Mode::AdiabaticCompare)),
        Command::Run(c) => single(c, None),
        Command::Reproduce { figure, common } => figures(common, figure),
        Command::Validate(c) => validate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
