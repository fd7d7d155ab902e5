use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use salda::classify::CentroidSource;
use salda::dataset::LabelColumn;
use salda::graph::{GraphKind, KernelKind};
use salda::harness::{compare_report, run_experiment, ExperimentConfig, ResultTable, StandardizeMode};
use salda::scatter::Variant;
use salda::selftest::{self_test, Fault, SelfTestOptions};
use salda::synth::{write_csv, GaussianClasses};
use salda::{Error, Result};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "SALDA_THREADS";

#[derive(Parser)]
#[command(name = "salda", version, about = "Saliency-weighted LDA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate the configured variants on one dataset.
    Run(Box<RunArgs>),
    /// Merge result tables into one comparison report.
    Compare {
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        /// Write the report CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in oracle suite.
    SelfTest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Deliberately break a component, e.g. `skip-symmetrization`.
        #[arg(long)]
        inject_fault: Option<Fault>,
    },
    /// Write a seeded Gaussian dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 60)]
        per_class: usize,
        /// Distance between class means in units of sigma.
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    /// Label column index or header name.
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// Comma-separated selectors such as `lda,tang,swlda_41`.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    /// Graph kinds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    graph: Option<Vec<GraphKind>>,
    #[arg(long)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    dims: Option<usize>,
    /// Fit standardization on the whole dataset instead of per training split.
    #[arg(long)]
    leaky_standardize: bool,
    #[arg(long)]
    centroid: Option<CentroidSource>,
    /// Result table CSV.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-sample predictions CSV.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Per-class saliency vectors as JSON.
    #[arg(long)]
    dump_saliency: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.dataset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(dataset)) => ExperimentConfig::new(dataset),
            (None, None) => return Err(Error::InvalidArgument("either --config or --dataset is required".into())),
        };
        if let Some(v) = self.dataset.filter(|_| self.config.is_some()) {
            config.dataset = v;
        }
        if let Some(v) = self.name {
            config.name = Some(v);
        }
        if let Some(v) = self.label_column {
            config.label_column = v;
        }
        if let Some(v) = self.variants {
            config.variants = v;
        }
        if let Some(v) = self.graph {
            config.graphs = v;
        }
        if let Some(v) = self.kernel {
            config.kernel = v;
        }
        if let Some(v) = self.folds {
            config.folds = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.dims {
            config.dims = Some(v);
        }
        if self.leaky_standardize {
            config.standardize = StandardizeMode::Leaky;
        }
        if let Some(v) = self.centroid {
            config.centroid = Some(v);
        }
        if let Some(v) = self.output {
            config.output = Some(v);
        }
        if let Some(v) = self.predictions {
            config.predictions = Some(v);
        }
        if let Some(v) = self.dump_saliency {
            config.dump_saliency = Some(v);
        }
        config.validate()?;
        Ok(config)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn read_table(path: &PathBuf) -> Result<ResultTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    ResultTable::from_csv(&text)
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => {
            let config = args.into_config()?;
            info!("running {} cells on {}", config.cells().len(), config.dataset.display());
            let out = run_experiment(&config)?;
            print!("{}", out.table.to_text());
            if out.table.rows.iter().any(|r| r.error.is_some()) {
                log::warn!("some cells failed; see the status column");
            }
        }
        Command::Compare { tables, output } => {
            let tables = tables.iter().map(read_table).collect::<Result<Vec<_>>>()?;
            let report = compare_report(&tables)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, report.to_csv()?)
                        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
                    print!("{}", report.to_text());
                }
                None => print!("{}", report.to_csv()?),
            }
        }
        Command::SelfTest {
            seed,
            instances,
            inject_fault,
        } => {
            let report = self_test(&SelfTestOptions {
                seed,
                instances,
                fault: inject_fault,
            });
            print!("{}", report.summary());
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Synth {
            classes,
            dim,
            per_class,
            separation,
            seed,
            output,
        } => {
            let data = GaussianClasses::separated(classes, dim, per_class, separation, 1.0, seed)?.generate()?;
            let file = std::fs::File::create(&output)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", output.display())))?;
            write_csv(&data, std::io::BufWriter::new(file))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
