use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afc_core::comb::{design_afc, CombParams};
use afc_core::config::ExperimentConfig;
use afc_core::experiment::{self, storage_sweep, sweep_csv};
use afc_core::fit::{fit_nonlinear, FitModel};
use afc_core::spectroscopy::SideHoleModel;
use afc_core::{Dataset, Error};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afcsim", version, about = "Simulate and analyse a multimode AFC quantum memory experiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the Monte Carlo.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Validate inputs and exit without writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run source, memory and detectors, persist streams and write reports.
    Simulate(Common),
    /// Re-run the analysis on persisted timestamp streams.
    Analyze {
        /// Directory written by `simulate`.
        input: PathBuf,
        /// Analysis config; defaults to the copy stored in the input directory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report directory; defaults to `<input>/analysis`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dry_run: bool,
    },
    /// Lay out a comb for a target storage time and check the side holes.
    DesignAfc {
        #[arg(long, default_value_t = 200.0)]
        storage_ns: f64,
        #[arg(long, default_value_t = 4.0)]
        bandwidth_ghz: f64,
        #[arg(long, default_value_t = 13000.0)]
        field_gauss: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted least-squares fit of a closed-form model to `x,y,sigma` data.
    Fit {
        /// One of double_exp, stretched_echo, quadratic, inverse, linear.
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated starting values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        initial: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Efficiency versus storage time as a table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100.0)]
        from_ns: f64,
        #[arg(long, default_value_t = 240.0)]
        to_ns: f64,
        #[arg(long, default_value_t = 20.0)]
        step_ns: f64,
        /// Also simulate each point (uses the config's run durations).
        #[arg(long)]
        simulate: bool,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c.config, c.seed, c.out.as_deref())?;
            if c.dry_run {
                eprintln!("config ok ({})", experiment::config_hash(&cfg));
                return Ok(());
            }
            let sim = experiment::simulate_runs(&cfg, c.workers)?;
            let (_, analysis) = experiment::write_simulation(&cfg.output_dir, &cfg, &sim)
                .with_context(|| format!("writing outputs to {}", cfg.output_dir.display()))?;
            println!("{}", serde_json::to_string_pretty(&analysis.report)?);
        }
        Command::Analyze {
            input,
            config,
            out,
            dry_run,
        } => {
            let cfg_path = config.unwrap_or_else(|| input.join("config.toml"));
            let cfg = load_config(&cfg_path, None, None)?;
            let out = out.unwrap_or_else(|| input.join("analysis"));
            if dry_run {
                afc_core::io::Manifest::load(&input.join("manifest.json"))?;
                eprintln!("inputs ok");
                return Ok(());
            }
            let analysis = experiment::analyze_directory(&input, &cfg)?;
            experiment::write_analysis(&out, &analysis)?;
            println!("{}", serde_json::to_string_pretty(&analysis.report)?);
        }
        Command::DesignAfc {
            storage_ns,
            bandwidth_ghz,
            field_gauss,
            out,
        } => {
            let d = design_afc(
                &CombParams::paper_default(),
                &SideHoleModel::measured(),
                storage_ns,
                bandwidth_ghz,
                field_gauss,
            )?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&d)? + "\n"))?;
        }
        Command::Fit {
            model,
            data,
            initial,
            out,
        } => {
            let Some(m) = FitModel::parse(&model) else {
                return Err(Error::Config {
                    field: "model".into(),
                    reason: format!("unknown model `{model}`"),
                }
                .into());
            };
            if initial.len() != m.n_params() {
                return Err(Error::Config {
                    field: "initial".into(),
                    reason: format!("{} needs {} values ({})", m.name(), m.n_params(), m.param_names().join(", ")),
                }
                .into());
            }
            let text = fs::read_to_string(&data).with_context(|| format!("reading {}", data.display()))?;
            let ds = Dataset::from_csv(&text)?;
            let fit = fit_nonlinear(m, &ds, &initial)?;
            emit(out.as_deref(), &(serde_json::to_string_pretty(&fit)? + "\n"))?;
        }
        Command::Sweep {
            common: c,
            from_ns,
            to_ns,
            step_ns,
            simulate,
        } => {
            let cfg = load_config(&c.config, c.seed, c.out.as_deref())?;
            if !(step_ns > 0.0) || !(to_ns >= from_ns) {
                bail!(Error::Config {
                    field: "step_ns".into(),
                    reason: "need step > 0 and to >= from".into(),
                });
            }
            let n = ((to_ns - from_ns) / step_ns + 1e-9).floor() as usize;
            let times: Vec<f64> = (0..=n).map(|i| from_ns + i as f64 * step_ns).collect();
            if c.dry_run {
                eprintln!("config ok, {} storage times", times.len());
                return Ok(());
            }
            let rows = storage_sweep(&cfg, &times, simulate, c.workers)?;
            let csv = sweep_csv(&rows);
            fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join("storage_sweep.csv");
            fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
            print!("{csv}");
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config { .. } | Error::InvalidParameter { .. } | Error::Format(_) | Error::Unsorted(_)) => 2,
        Some(Error::NonConvergence { .. } | Error::SingularCurvature) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
