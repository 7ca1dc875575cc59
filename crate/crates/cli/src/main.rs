use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gfield_core::config::RunConfig;
use gfield_core::experiment::{run_experiment, write_artifacts, EXPERIMENTS};
use gfield_core::report::write_reports;
use gfield_core::svg::{parse_plot_csv, plot_table};
use gfield_core::verify::{run_verify_with, Suite};
use gfield_core::Error;

const DEFAULT_OUT: &str = "gfield-out";

#[derive(Parser)]
#[command(name = "gfield-lab", version, about = "G-Gaussian random fields, G-noise and SPDE verification")]
struct Cli {
    /// TOML or JSON (by `.json` extension) run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; falls back to GFIELD_LAB_OUT, then the config.
    #[arg(long, global = true, value_name = "DIR", env = "GFIELD_LAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for the Monte Carlo engines.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run acceptance checks and write report.csv and report.json.
    Verify {
        #[arg(long, default_value = "all", value_parser = Suite::NAMES)]
        suite: String,
    },
    /// Run a named experiment and write its CSV (and SVG) files.
    Experiment {
        #[arg(value_name = "NAME")]
        name: String,
        /// Skip the SVG plots.
        #[arg(long)]
        no_svg: bool,
    },
    /// Draw a CSV table as a standalone SVG next to the output directory.
    Plot {
        #[arg(value_name = "CSV")]
        input: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

enum Failure {
    Usage(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config {
                field: "--jobs".into(),
                msg: "must be at least 1".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config {
                field: "--jobs".into(),
                msg: e.to_string(),
            })?;
    }
    match &cli.command {
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let rows = run_verify_with(suite, &cfg, |r| println!("{}", r.line()))?;
            write_reports(&dir, suite.as_str(), cfg.seed, &rows)?;
            eprintln!("wrote {}", dir.join("report.csv").display());
            if rows.iter().all(|r| r.pass()) {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Experiment { name, no_svg } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(Error::Config {
                    field: "experiment".into(),
                    msg: format!("unknown experiment `{name}`; expected one of {}", EXPERIMENTS.join(", ")),
                }
                .into());
            }
            let cfg = load_config(cli)?;
            let dir = out_dir(cli, Some(&cfg));
            let files = run_experiment(name, &cfg, !no_svg)?;
            write_artifacts(&dir, &files)?;
            for f in &files {
                println!("{}", dir.join(&f.file_name).display());
            }
            Ok(())
        }
        Command::Plot { input, title } => {
            let text = std::fs::read_to_string(input).map_err(Error::from)?;
            let table = parse_plot_csv(&text)?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
            let svg = plot_table(title.as_deref().unwrap_or(stem), &table)?;
            let cfg = match &cli.config {
                Some(_) => Some(load_config(cli)?),
                None => None,
            };
            let dir = out_dir(cli, cfg.as_ref());
            std::fs::create_dir_all(&dir).map_err(Error::from)?;
            let path = dir.join(Path::new(stem).with_extension("svg"));
            std::fs::write(&path, svg).map_err(Error::from)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
