use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fedcgau::experiment::{
    hetero_for_assignment, hetero_report, prepare_output_dir, read_dataset, run_sweep,
    run_xor, simulate_assignment, write_dataset, write_grid_csv, write_sweep, ExperimentConfig, HeteroSpace,
    XorConfig,
};
use fedcgau::nn::gradcheck::{run_suite, GradCheckOptions};
use fedcgau::simclients::{read_assignment_csv, write_assignment_csv};
use fedcgau::Error;

#[derive(Parser)]
#[command(name = "fedcgau", version, about = "Federated CGAU experiments on embedding datasets")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train CGAU and baseline models across shuffle proportions and repetitions.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report client heterogeneity Γ.
    Hetero {
        /// Config whose proportions and repetitions are measured.
        #[arg(long, required_unless_present = "dataset")]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dataset (.csv or .emb1) measured under `--assignment` instead.
        #[arg(long, requires = "assignment", conflicts_with = "config")]
        dataset: Option<PathBuf>,
        /// Assignment CSV (`sample_index,client_id`).
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Space for `--dataset` mode.
        #[arg(long, value_enum, default_value = "pca")]
        space: SpaceArg,
        /// Directory for `hetero.json`; printed to stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the simulated train and test client assignments.
    SimulateClients {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        proportion: f64,
    },
    /// Two-client XOR demonstration with logit grids.
    Xor {
        /// Optional XOR config (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference gradient check over random small models.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        configs: usize,
        /// Directory for `gradcheck.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a dataset between CSV and EMB1 (by file extension).
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SpaceArg {
    Pca,
    Full,
}

/// Separates failures before any computation (exit 1) from failures while
/// running (exit 2).
enum Failure {
    Startup(Error),
    Runtime(Error),
}

fn startup<T>(r: fedcgau::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Startup)
}

fn runtime<T>(r: fedcgau::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        if e.is_validation() && matches!(e, Error::Config(_) | Error::Range { .. }) {
            Failure::Startup(e)
        } else {
            Failure::Runtime(e)
        }
    })
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = startup(ExperimentConfig::load(&common.config))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    startup(cfg.validate())?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> fedcgau::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create(path: &Path) -> fedcgau::Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep { common, out } => {
            let cfg = load_config(&common)?;
            startup(prepare_output_dir(&out))?;
            let cells = cfg.proportions.len() * cfg.repetitions * cfg.model_kinds.len();
            eprintln!("sweep: {cells} runs");
            let outcome = runtime(run_sweep(&cfg))?;
            runtime(write_sweep(&outcome, &cfg, &out))?;
            for s in outcome.summaries(&cfg) {
                eprintln!(
                    "p={:.2} {:>4}: metric {:.4} ± {:.4}, Γ {:.3}",
                    s.proportion,
                    s.model_kind.as_str(),
                    s.mean_test_metric,
                    s.std_test_metric,
                    s.mean_gamma
                );
            }
        }
        Command::Hetero {
            config,
            seed,
            dataset,
            assignment,
            space,
            out,
        } => {
            if let Some(dir) = &out {
                startup(prepare_output_dir(dir))?;
            }
            let report = match (config, dataset) {
                (Some(path), _) => {
                    let cfg = load_config(&Common { config: path, seed })?;
                    runtime(hetero_report(&cfg))?
                }
                (None, Some(ds_path)) => {
                    let ds = startup(read_dataset(&ds_path))?;
                    let a_path = assignment.expect("clap requires --assignment");
                    let file = startup(fs::File::open(&a_path).map_err(|e| Error::File {
                        path: a_path.clone(),
                        source: e,
                    }))?;
                    let a = startup(read_assignment_csv(file))?;
                    let space = match space {
                        SpaceArg::Pca => HeteroSpace::Pca,
                        SpaceArg::Full => HeteroSpace::Full,
                    };
                    runtime(hetero_for_assignment(&ds, &a, space, 2))?
                }
                (None, None) => unreachable!("clap requires --config or --dataset"),
            };
            match out {
                Some(dir) => runtime(write_json(&dir.join("hetero.json"), &report))?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?
                ),
            }
        }
        Command::SimulateClients {
            common,
            out,
            proportion,
        } => {
            let cfg = load_config(&common)?;
            if !(0.0..=1.0).contains(&proportion) {
                return Err(Failure::Startup(Error::Range {
                    name: "proportion",
                    value: proportion,
                    range: "[0, 1]",
                }));
            }
            startup(prepare_output_dir(&out))?;
            let sim = runtime(simulate_assignment(&cfg, proportion))?;
            runtime(write_assignment_csv(
                &sim.train.assignment,
                create(&out.join("train_assignment.csv")).map_err(Failure::Runtime)?,
            ))?;
            runtime(write_assignment_csv(
                &sim.test.assignment,
                create(&out.join("test_assignment.csv")).map_err(Failure::Runtime)?,
            ))?;
            runtime(write_json(&out.join("clients.json"), &sim.summary))?;
        }
        Command::Xor { config, seed, out } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = startup(fs::read_to_string(&path).map_err(|e| Error::File {
                        path: path.clone(),
                        source: e,
                    }))?;
                    startup(serde_json::from_str::<XorConfig>(&text).map_err(Error::from))?
                }
                None => XorConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            startup(prepare_output_dir(&out))?;
            let outcome = runtime(run_xor(&cfg))?;
            runtime(write_json(&out.join("xor_report.json"), &outcome.report))?;
            runtime(write_grid_csv(
                &outcome.grid,
                create(&out.join("xor_grid.csv")).map_err(Failure::Runtime)?,
            ))?;
            for m in &outcome.report.models {
                eprintln!(
                    "{:>4}: up {:.4}, down {:.4}",
                    m.model_kind.as_str(),
                    m.client_accuracy[0],
                    m.client_accuracy[1]
                );
            }
        }
        Command::Gradcheck { seed, configs, out } => {
            if let Some(dir) = &out {
                startup(prepare_output_dir(dir))?;
            }
            let opts = GradCheckOptions {
                configs,
                seed,
                ..GradCheckOptions::default()
            };
            let report = runtime(run_suite(&opts))?;
            for case in report.failures() {
                eprintln!("FAILED case {}: {}", case.index, case.description);
                for b in case.blocks.iter().filter(|b| b.max_rel_error >= report.tolerance) {
                    eprintln!(
                        "  layer {} {}: max relative error {:.3e}",
                        b.layer, b.name, b.max_rel_error
                    );
                }
            }
            eprintln!(
                "gradcheck: {} cases, max relative error {:.3e} (tolerance {:.0e})",
                report.cases.len(),
                report.max_rel_error(),
                report.tolerance
            );
            if let Some(dir) = &out {
                runtime(write_json(&dir.join("gradcheck.json"), &report))?;
            }
            if !report.passed() {
                return Err(Failure::Runtime(Error::Config(
                    "gradient check failed".into(),
                )));
            }
        }
        Command::Convert { input, output } => {
            let ds = startup(read_dataset(&input))?;
            runtime(write_dataset(&ds, &output))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Startup(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
