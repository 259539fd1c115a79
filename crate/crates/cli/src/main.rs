use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdot_hf::pipeline::{self, LoadedConfig, PipelineError, RunOptions, Stage};

/// Hyperfine coupling, nuclear-field statistics and error budgets for
/// self-assembled quantum dots.
#[derive(Debug, Parser)]
#[command(name = "qdot-hf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the default configuration.
    Defaults,
    /// Check a configuration and list every problem found.
    Validate { config: PathBuf },
    /// Run the full pipeline, reusing unchanged stages.
    Run {
        config: PathBuf,
        /// Stop after this stage.
        #[arg(long, value_parser = parse_stage)]
        until: Option<Stage>,
    },
    /// Summarize a finished run (output directory or its config file).
    Report { path: PathBuf },
    /// Build the atomistic structure.
    Geometry { config: PathBuf },
    /// Relax the structure (pass-through when strain is off).
    Strain { config: PathBuf },
    /// Solve for the ground conduction state.
    Electronic { config: PathBuf },
    /// Compute the coupling map and profiles.
    Hyperfine { config: PathBuf },
    /// Nuclear-field statistics for the configured sources.
    Spinbath { config: PathBuf },
    /// Error budget from the bath output.
    Errorbudget { config: PathBuf },
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    Stage::ALL
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| format!("unknown stage {s}; expected one of geometry, strain, electronic, hyperfine, spinbath, errorbudget"))
}

fn load(path: &Path) -> Result<LoadedConfig, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "config file not found"),
        });
    }
    pipeline::load(path).map_err(PipelineError::Validation)
}

fn run_until(config: &Path, until: Option<Stage>) -> Result<(), PipelineError> {
    let lc = load(config)?;
    let m = pipeline::run(&lc, RunOptions { until })?;
    eprint!("{}", pipeline::manifest_table(&m));
    if until.is_none_or(|s| s >= Stage::Spinbath) {
        print!("{}", pipeline::report(&lc.output_dir())?);
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::Defaults => {
            print!("{}", pipeline::defaults_toml());
            Ok(())
        }
        Command::Validate { config } => {
            let lc = load(&config)?;
            pipeline::validate(&lc).map_err(PipelineError::Validation)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Run { config, until } => run_until(&config, until),
        Command::Report { path } => {
            let dir = if path.is_file() { load(&path)?.output_dir() } else { path };
            print!("{}", pipeline::report(&dir)?);
            Ok(())
        }
        Command::Geometry { config } => run_until(&config, Some(Stage::Geometry)),
        Command::Strain { config } => run_until(&config, Some(Stage::Strain)),
        Command::Electronic { config } => run_until(&config, Some(Stage::Electronic)),
        Command::Hyperfine { config } => run_until(&config, Some(Stage::Hyperfine)),
        Command::Spinbath { config } => run_until(&config, Some(Stage::Spinbath)),
        Command::Errorbudget { config } => run_until(&config, Some(Stage::Errorbudget)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
