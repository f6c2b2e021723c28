#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdslab::bench::{bounds_table, run_experiment, ExperimentConfig, Format};
use pdslab::data::{read_jsonl, sample_dataset, write_jsonl, DatasetHeader, Quality, SampleSpec};
use pdslab::ensemble::{fit_ensemble, relabel_file, EnsembleRewardModel, PenaltyK};
use pdslab::mdp::{exact_optimal, LinearMdp};
use pdslab::pipeline::{worker_count, MdpSpec};
use pdslab::report::{emit_table_as, GroupKey};
use pdslab::theory::BoundInputs;
use pdslab::{Error, Result};

#[derive(Parser)]
#[command(name = "pdslab", version, about = "Offline RL data-sharing experiments on linear MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an MDP from a spec file and write it as JSON.
    GenMdp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a dataset from an MDP file into JSON lines.
    Sample(SampleArgs),
    /// Run an experiment config; writes a results CSV and a summary table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the summary table.
        #[arg(long)]
        format: Option<String>,
    },
    /// Fill null rewards with a pessimistic ensemble estimate.
    Relabel(RelabelArgs),
    /// Print bound terms and ratios.
    Bounds(BoundsArgs),
    /// Summarize a results CSV.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "n1")]
        group_by: Vec<String>,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "random")]
    quality: String,
    /// Write null rewards.
    #[arg(long)]
    unlabeled: bool,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RelabelArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Ensemble model JSON. Written when --labeled is given, read otherwise.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "auto")]
    k: String,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long = "L", default_value_t = 10)]
    members: usize,
    /// Labeled JSON lines to fit the ensemble on.
    #[arg(long)]
    labeled: Option<PathBuf>,
    /// MDP file supplying the features when fitting.
    #[arg(long)]
    mdp: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundsArgs {
    /// JSON file with one input object or an array of them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 1000)]
    n0: usize,
    #[arg(long, default_value_t = 10_000)]
    n1: usize,
    #[arg(long, default_value_t = 0.5)]
    c0: f64,
    #[arg(long, default_value_t = 0.5)]
    c1: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    r_max: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value = "csv")]
    format: String,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))
}

fn read_mdp(path: &Path) -> Result<LinearMdp> {
    LinearMdp::from_json(&read_text(path)?)
}

fn gen_mdp(config: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec: MdpSpec = serde_json::from_str(&read_text(config)?)
        .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let mdp = spec.build(seed)?;
    std::fs::write(out, mdp.to_json()?)?;
    println!("{} {}", out.display(), mdp.content_hash());
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<()> {
    let mdp = read_mdp(&args.mdp)?;
    let quality: Quality = args.quality.parse()?;
    let optimal = exact_optimal(&mdp)?;
    let behavior = quality.behavior(&optimal.actions, mdp.num_actions())?;
    let spec = SampleSpec::new(args.n, !args.unlabeled, args.seed)
        .with_noise(args.noise)
        .with_horizon(args.horizon);
    let data = sample_dataset(&mdp, &behavior, &spec, quality.name())?;
    let header = DatasetHeader {
        mdp_hash: mdp.content_hash(),
        seed: args.seed,
        behavior: quality.name().to_string(),
        labeled: data.labeled,
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
        n: data.len(),
    };
    write_jsonl(&args.out, &data, Some(&header))
}

fn relabel(args: &RelabelArgs) -> Result<()> {
    let k: PenaltyK = args.k.parse()?;
    let mut model = match (&args.labeled, &args.mdp) {
        (Some(labeled), Some(mdp)) => {
            let mdp = read_mdp(mdp)?;
            let (data, _) = read_jsonl(labeled)?;
            let model = fit_ensemble(&data, mdp.features(), args.members, args.nu, args.seed)?;
            std::fs::write(&args.model, model.to_json()?)?;
            model
        }
        (None, None) => EnsembleRewardModel::from_json(&read_text(&args.model)?)?,
        _ => return Err(Error::Parameter("--labeled and --mdp must be given together".into())),
    };
    if let Some(a) = args.a {
        model.auto_a = a;
    }
    let summary = relabel_file(&args.input, &args.out, &model, Some(k))?;
    if summary.passthrough > 0 {
        eprintln!("warning: {} already-labeled lines copied unchanged", summary.passthrough);
    }
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let format: Format = args.format.parse()?;
    let inputs = match &args.config {
        Some(path) => {
            let text = read_text(path)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            if value.is_array() {
                serde_json::from_value::<Vec<BoundInputs>>(value)?
            } else {
                vec![serde_json::from_value::<BoundInputs>(value)?]
            }
        }
        None => vec![BoundInputs {
            d: args.d,
            n0: args.n0,
            n1: args.n1,
            c0: args.c0,
            c1: args.c1,
            gamma: args.gamma,
            r_max: args.r_max,
            delta: args.delta,
            c: args.c,
        }],
    };
    print!("{}", bounds_table(&inputs, format)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMdp { config, seed, out } => gen_mdp(&config, seed, &out),
        Command::Sample(args) => sample(&args),
        Command::Run { config, seed, out, format } => {
            let format = format.map(|f| f.parse::<Format>()).transpose()?;
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seeds = vec![seed];
            }
            if let Some(out) = out {
                cfg.output = out;
            }
            let outcome = run_experiment(&cfg, worker_count())?;
            eprintln!("{} rows -> {}", outcome.results.len(), outcome.csv_path.display());
            eprintln!("summary -> {}", outcome.summary_path.display());
            if let Some(format) = format {
                print!("{}", emit_table_as(&outcome.csv_path, &cfg.group_by, format)?);
            }
            if outcome.failures.is_empty() {
                return Ok(());
            }
            for f in &outcome.failures {
                eprintln!("cell n0={} n1={} seed={} {:?}: {}", f.n0, f.n1, f.seed, f.method, f.message);
            }
            Err(Error::Runtime(format!("{} runs failed", outcome.failures.len())))
        }
        Command::Relabel(args) => relabel(&args),
        Command::Bounds(args) => bounds(&args),
        Command::Table { input, group_by, format } => {
            let keys = group_by
                .iter()
                .filter(|g| !g.is_empty())
                .map(|g| g.parse::<GroupKey>())
                .collect::<Result<Vec<_>>>()?;
            print!("{}", emit_table_as(&input, &keys, format.parse()?)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
