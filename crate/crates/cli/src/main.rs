//! `fedsim`: run a federated-learning sweep and emit CSV plus markdown
//! results.
//!
//! The experiment comes from a config file (see the repository README for
//! the grammar); every file setting this binary exposes as a flag can be
//! overridden on the command line. Exit code is 0 only when every cell of
//! the sweep completed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fedsim_core::experiment::{
    config_cells, parse_config, render_markdown, run_sweep, table_cells, write_details_csv,
    write_summary_csv, ExperimentConfig, TableKind,
};
use fedsim_core::flcore::Defense;
use fedsim_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fedsim", version, about = "Deterministic federated-learning simulator")]
struct Args {
    /// Experiment config file (sectioned `key = value` text). Without it,
    /// the built-in synthetic-image default experiment runs.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the heterogeneity levels: comma-separated positive reals,
    /// e.g. "1.0,0.5,0.25".
    #[arg(long)]
    alpha: Option<String>,

    /// Override the defense: "none" or "rlr".
    #[arg(long)]
    defense: Option<String>,

    /// Override the robust-learning-rate vote threshold.
    #[arg(long)]
    theta: Option<usize>,

    /// Override the number of federation rounds.
    #[arg(long)]
    rounds: Option<u32>,

    /// Directory for details.csv, summary.csv and summary.md. Created if
    /// missing. Without it, results are only printed.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run a named table's sweep (fairness, robustness, rlr or interplay)
    /// instead of the cells implied by the config.
    #[arg(long)]
    table: Option<TableKind>,
}

fn apply_overrides(config: &mut ExperimentConfig, args: &Args) -> Result<()> {
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(alpha) = &args.alpha {
        config.alphas = alpha
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("--alpha: bad value {:?}", s.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
    }
    if let Some(defense) = &args.defense {
        config.defense.enabled = match defense.as_str() {
            "none" => false,
            "rlr" => true,
            other => {
                return Err(Error::config(format!(
                    "--defense: expected none or rlr, got {other:?}"
                )))
            }
        };
    }
    if let Some(theta) = args.theta {
        config.defense.theta = theta;
    }
    if let Some(rounds) = args.rounds {
        config.rounds = rounds;
    }
    Ok(())
}

fn run(args: &Args) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut config, args)?;
    config.validate()?;

    let cells = match args.table {
        Some(kind) => table_cells(kind, &config)?,
        None => config_cells(&config),
    };
    let output = run_sweep(&config, &cells)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        write_details_csv(&dir.join("details.csv"), &output.details, output.num_classes)?;
        write_summary_csv(&dir.join("summary.csv"), &output.rows)?;
        let md = render_markdown(&output.rows);
        std::fs::write(dir.join("summary.md"), &md).map_err(|source| Error::Io {
            path: dir.join("summary.md"),
            source,
        })?;
    }

    print!("{}", render_markdown(&output.rows));
    for failure in &output.failures {
        let defense = match failure.cell.defense {
            Defense::None => "none".to_string(),
            Defense::Rlr { theta } => format!("rlr(theta={theta})"),
        };
        eprintln!(
            "error: cell alpha={} attack={} defense={}: {}",
            failure.cell.alpha,
            failure.cell.attack,
            defense,
            render_error(&failure.error)
        );
    }
    Ok(output.failures.is_empty())
}

/// One line per error in the source chain.
fn render_error(error: &Error) -> String {
    let mut text = error.to_string();
    let mut source = std::error::Error::source(error);
    while let Some(cause) = source {
        text.push_str(&format!("\n  caused by: {cause}"));
        source = cause.source();
    }
    text
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(error) => {
            eprintln!("error: {}", render_error(&error));
            ExitCode::FAILURE
        }
    }
}
