use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use predcore::coreset::CoresetWeights;
use predcore::experiment::{self, ExperimentConfig, ExperimentKind};
use predcore::measure::Dataset;
use predcore::Error;

#[derive(Parser)]
#[command(name = "predcore", version, about = "Predictive coresets under Dirichlet-process predictives")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    experiment: Option<ExperimentKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the published study sizes instead of the desk defaults.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic dataset (data.csv, truth.json).
    Generate,
    /// Build coreset weights for a dataset (weights.csv, report.json).
    Coreset {
        #[arg(long)]
        data: PathBuf,
    },
    /// Compare coreset and unit-coreset downstream fits against the full data.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Run all repetitions of a study.
    Experiment,
    /// Summarise a results CSV.
    Summarize { results: PathBuf },
    /// Histogram plot data from a results CSV.
    PlotData { results: PathBuf },
    /// Render a plot-data CSV as SVG.
    RenderSvg { input: PathBuf, output: PathBuf },
}

fn resolve(c: &Common) -> predcore::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::desk(c.experiment.unwrap_or(ExperimentKind::Density)),
    };
    if let Some(kind) = c.experiment {
        if c.config.is_some() && kind != cfg.experiment {
            return Err(Error::Config(format!(
                "--experiment {} conflicts with the config file's {}",
                kind.name(),
                cfg.experiment.name()
            )));
        }
    }
    if c.paper_scale {
        cfg = cfg.with_paper_scale();
    }
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = c.reps {
        cfg.reps = r;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> predcore::Result<ExitCode> {
    let cfg = resolve(&cli.common)?;
    if cli.common.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    let out = &cfg.output_dir;
    match cli.command {
        Command::Generate => {
            let (data, truth) = experiment::seeded_dataset(&cfg, cfg.master_seed)?;
            std::fs::create_dir_all(out)?;
            data.save(out.join("data.csv"))?;
            std::fs::write(out.join("truth.json"), serde_json::to_vec_pretty(&truth)?)?;
            println!("wrote {} points to {}", data.len(), out.join("data.csv").display());
        }
        Command::Coreset { data } => {
            let data = Dataset::load(&data)?;
            let (weights, report) = experiment::build_coreset(&data, &cfg, cfg.master_seed)?;
            std::fs::create_dir_all(out)?;
            weights.save(out.join("weights.csv"))?;
            std::fs::write(out.join("report.json"), report.to_json()?)?;
            println!(
                "{} weights from {} iterations ({} aborted) in {}",
                weights.values.len(),
                report.iterations.len(),
                report.aborted.len(),
                out.display()
            );
        }
        Command::Evaluate { data, weights } => {
            let data = Dataset::load(&data)?;
            let weights = CoresetWeights::load(&weights)?;
            let (record, _) = experiment::evaluate_coreset(&data, None, &weights, &cfg, cfg.master_seed)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Experiment => {
            let run = experiment::run_experiment(&cfg)?;
            if let Some(s) = &run.summary {
                println!("{}", serde_json::to_string_pretty(s)?);
            }
            for f in &run.manifest.failures {
                eprintln!("rep {} (seed {}) failed: {}", f.rep, f.seed, f.error);
            }
            if !run.manifest.complete {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Summarize { results } => {
            println!("{}", serde_json::to_string_pretty(&experiment::summarize_file(results)?)?);
        }
        Command::PlotData { results } => {
            let path = experiment::plot_data_from_results(&results, out)?;
            println!("wrote {}", path.display());
        }
        Command::RenderSvg { input, output } => {
            experiment::render_svg(&input, &output)?;
            println!("wrote {}", output.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PREDCORE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
