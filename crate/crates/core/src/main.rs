use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use advrank::experiment::{evaluate_checkpoint, run_ablation, run_experiment, run_sweep, ExperimentSpec, RunOptions, Task};
use advrank::perturb::Norm;
use advrank::sampling::SamplerKind;
use advrank::trainer::Objective;
use advrank::Error;

mod fetch;

/// Adversarial sampling and adversarial training for ranking experiments.
#[derive(Parser)]
#[command(name = "advrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write reports, curve and checkpoint.
    Train {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved checkpoint on the test split.
    Evaluate {
        /// Spec file; defaults to spec.toml next to the checkpoint.
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One run per label fraction.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated fractions in (0, 1].
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Objective x sampler grid.
    Ablation {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Download MovieLens 100k and check for MQ2008-semi.
    FetchData {
        #[arg(long, env = advrank::experiment::DATA_ENV, default_value = "data")]
        data_root: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Websearch,
    Itemrec,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Uniform,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L2,
    Max,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    Objective::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Objective::ALL.iter().map(|o| o.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Args)]
struct SpecArgs {
    /// TOML experiment spec. Flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
    #[arg(long, value_enum)]
    sampler: Option<SamplerArg>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    label_fraction: Option<f64>,
    /// Data root; overrides the spec and the environment.
    #[arg(long)]
    data_root: Option<PathBuf>,
}

impl SpecArgs {
    fn resolve(&self, fallback: Option<&Path>) -> advrank::Result<ExperimentSpec> {
        let path = self.spec.as_deref().or(fallback);
        let mut spec = match (path, self.task) {
            (Some(p), _) => {
                let text = fs::read_to_string(p).map_err(|_| Error::MissingFile(p.to_path_buf()))?;
                ExperimentSpec::from_toml(&text)?
            }
            (None, Some(t)) => ExperimentSpec::defaults(task(t)),
            (None, None) => return Err(Error::Config("either --spec or --task is required".into())),
        };
        if let Some(t) = self.task {
            spec.task = task(t);
        }
        let train = &mut spec.train;
        if let Some(o) = self.objective {
            train.objective = o;
        }
        if let Some(s) = self.sampler {
            train.sampler.kind = match s {
                SamplerArg::Uniform => SamplerKind::Uniform,
                SamplerArg::Adversarial => SamplerKind::Adversarial,
            };
        }
        if let Some(e) = self.epsilon {
            train.perturb.epsilon = e;
        }
        if let Some(t) = self.tau {
            train.sampler.tau = t;
        }
        if let Some(n) = self.norm {
            train.perturb.norm = match n {
                NormArg::L2 => Norm::L2,
                NormArg::Max => Norm::Max,
            };
        }
        if let Some(e) = self.epochs {
            train.epochs = e;
        }
        if let Some(lr) = self.lr {
            train.learning_rate = lr;
        }
        if let Some(s) = self.seed {
            train.seed = s;
        }
        if let Some(f) = self.label_fraction {
            spec.data.label_fraction = f;
        }
        if let Some(r) = &self.data_root {
            spec.data.root = Some(r.clone());
        }
        Ok(spec)
    }
}

fn task(t: TaskArg) -> Task {
    match t {
        TaskArg::Websearch => Task::Websearch,
        TaskArg::Itemrec => Task::Itemrec,
    }
}

fn run(cli: Cli) -> advrank::Result<()> {
    let opts = RunOptions { log: true };
    match cli.command {
        Command::Train { spec, out } => {
            let spec = spec.resolve(None)?;
            let r = run_experiment(&spec, &out, opts)?;
            print!("{}", r.report.to_tsv());
        }
        Command::Evaluate { spec, checkpoint, out } => {
            let fallback = checkpoint.with_file_name("spec.toml");
            let spec = spec.resolve(Some(&fallback))?;
            let r = evaluate_checkpoint(&spec, &checkpoint, &out)?;
            print!("{}", r.to_tsv());
        }
        Command::Sweep { spec, fractions, out } => {
            let mut spec = spec.resolve(None)?;
            if let Some(f) = fractions {
                spec.sweep.fractions = f;
            }
            run_sweep(&spec, &out, opts)?;
            print!("{}", fs::read_to_string(out.join("sweep.tsv"))?);
        }
        Command::Ablation { spec, out } => {
            let spec = spec.resolve(None)?;
            run_ablation(&spec, &out, RunOptions { log: false })?;
            print!("{}", fs::read_to_string(out.join("grid.tsv"))?);
        }
        Command::FetchData { data_root } => {
            fetch::fetch_data(&data_root).map_err(Error::Data)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
