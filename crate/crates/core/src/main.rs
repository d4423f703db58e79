use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wordsplit::batch::{batch_eval, list_problems};
use wordsplit::benchgen::{generate, witness_text, GenConfig};
use wordsplit::dataset::{collect_dataset, write_shards, CollectConfig};
use wordsplit::gnn::{GnnModel, DEFAULT_EMBED_DIM, DEFAULT_HIDDEN, DEFAULT_STEPS};
use wordsplit::search::{
    Backtrack, BranchOrder, BranchScorer, SearchConfig, Solver, DEFAULT_L_BT2, DEFAULT_L_BT2_STEP,
    DEFAULT_L_BT3,
};
use wordsplit::tree::{DEFAULT_DEPTH_LIMIT, DEFAULT_NODE_CAP};
use wordsplit::{build_proof_tree, EquationGraph, Problem, Status, Variant, Weights};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNKNOWN: u8 = 30;

#[derive(Parser)]
#[command(name = "wordsplit", version, about = "Word equation solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file.
    Solve(SolveArgs),
    /// Generate benchmark problems.
    Gen(GenArgs),
    /// Extract training samples from SAT problems.
    CollectData(CollectArgs),
    /// Print the graph encoding of a problem.
    Encode(EncodeArgs),
    /// Solve every problem in a directory and write a report.
    BatchEval(BatchArgs),
    /// Print the exhaustive proof tree of a problem as JSON.
    Tree(TreeArgs),
    /// Write a randomly initialised weight file.
    InitWeights(InitArgs),
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "bt2")]
    strategy: Backtrack,
    /// fixed, reversed, random, gnn, gnn-fixed or gnn-random
    #[arg(long, default_value = "fixed")]
    order: BranchOrder,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Graph encoding the model was trained on.
    #[arg(long, default_value = "g5")]
    variant: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    #[arg(long, default_value_t = DEFAULT_L_BT2)]
    l_bt2: usize,
    #[arg(long, default_value_t = DEFAULT_L_BT2_STEP)]
    l_bt2_step: usize,
    #[arg(long, default_value_t = DEFAULT_L_BT3)]
    l_bt3: usize,
    /// Stop with UNKNOWN after this many rule applications.
    #[arg(long)]
    node_budget: Option<u64>,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            bail!("--timeout must be a positive number of seconds");
        }
        Ok(SearchConfig {
            backtrack: self.strategy,
            l_bt2: self.l_bt2,
            l_bt2_step: self.l_bt2_step,
            l_bt3: self.l_bt3,
            order: self.order,
            seed: self.seed,
            timeout: Duration::from_secs_f64(self.timeout),
            node_budget: self.node_budget,
        })
    }

    fn model(&self) -> Result<Option<GnnModel<f32>>> {
        match &self.model {
            Some(p) => Ok(Some(
                GnnModel::load(p, self.variant)
                    .with_context(|| format!("loading model {}", p.display()))?,
            )),
            None => Ok(None),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Write one line per rule application.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the statistics record here instead of stderr.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    benchmark: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = GenConfig::default().k)]
    k: usize,
    #[arg(long, default_value_t = GenConfig::default().vars)]
    vars: usize,
    #[arg(long, default_value_t = GenConfig::default().letters)]
    letters: usize,
    #[arg(long, default_value_t = GenConfig::default().rounds)]
    rounds: usize,
    #[arg(long, default_value_t = GenConfig::default().conjuncts)]
    conjuncts: usize,
    #[arg(long, default_value_t = GenConfig::default().n)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CollectArgs {
    /// Problem files or directories of `*.eq` files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "g5")]
    variant: Variant,
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
    #[arg(long)]
    out: PathBuf,
    /// Shard name prefix.
    #[arg(long, default_value = "train")]
    name: String,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct EncodeArgs {
    problem: PathBuf,
    #[arg(long, default_value = "g5")]
    variant: Variant,
}

#[derive(Args)]
struct BatchArgs {
    dir: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print `-` for wall-clock columns.
    #[arg(long)]
    omit_timings: bool,
}

#[derive(Args)]
struct TreeArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH_LIMIT)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long, default_value_t = DEFAULT_EMBED_DIM)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read_problem(path: &Path) -> Result<Problem> {
    Problem::read(path).with_context(|| format!("reading {}", path.display()))
}

fn solve(args: &SolveArgs) -> Result<u8> {
    let problem = read_problem(&args.problem)?;
    let cfg = args.search.config()?;
    let model = args.search.model()?;
    let scorer = model.as_ref().map(|m| m as &dyn BranchScorer);
    let mut trace_file = match &args.trace {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let mut solver = Solver::new(&cfg, scorer);
    if let Some(f) = trace_file.as_mut() {
        solver = solver.with_trace(f);
    }
    let result = solver.solve(&problem.formula, &problem.symbols)?;
    println!("{}", result.status);
    if let Some(a) = result.assignment(&problem.formula.variables()) {
        print!("{}", witness_text(&a, &problem.symbols));
    }
    let record = result.stats_record();
    match &args.stats {
        Some(p) => {
            fs::write(p, record + "\n").with_context(|| format!("writing {}", p.display()))?
        }
        None => eprintln!("{record}"),
    }
    Ok(match result.status {
        Status::Sat => EXIT_SAT,
        Status::Unsat => EXIT_UNSAT,
        Status::Unknown => EXIT_UNKNOWN,
    })
}

fn gen(args: &GenArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let cfg = GenConfig {
        seed: args.seed,
        letters: args.letters,
        vars: args.vars,
        k: args.k,
        rounds: args.rounds,
        conjuncts: args.conjuncts,
        n: args.n,
    };
    for i in 0..args.count {
        let inst = generate(args.benchmark, &cfg.with_seed(args.seed.wrapping_add(i)))?;
        let stem = format!("b{}-{:05}", args.benchmark, i);
        fs::write(args.out.join(format!("{stem}.eq")), inst.problem.to_text())?;
        if let Some(w) = &inst.witness {
            fs::write(
                args.out.join(format!("{stem}.witness")),
                witness_text(w, &inst.problem.symbols),
            )?;
        }
    }
    Ok(())
}

fn collect(args: &CollectArgs) -> Result<()> {
    let mut files = Vec::new();
    for input in &args.inputs {
        if input.is_dir() {
            files.extend(list_problems(input)?);
        } else {
            let id = input
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            files.push((id, input.clone()));
        }
    }
    let mut problems = Vec::new();
    for (id, path) in files {
        problems.push((id, read_problem(&path)?));
    }
    let cfg = CollectConfig {
        variant: args.variant,
        depth_limit: args.depth,
        node_cap: args.node_cap,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()?;
    let samples = pool.install(|| collect_dataset(&problems, &cfg));
    for p in write_shards(&samples, &args.out, &args.name)? {
        println!("{}", p.display());
    }
    log::info!("{} samples from {} problems", samples.len(), problems.len());
    Ok(())
}

fn encode(args: &EncodeArgs) -> Result<()> {
    let problem = read_problem(&args.problem)?;
    let g = EquationGraph::encode(&problem.formula, args.variant);
    println!("{}", g.to_json(&problem.symbols));
    Ok(())
}

fn batch(args: &BatchArgs) -> Result<()> {
    let cfg = args.search.config()?;
    let model = args.search.model()?;
    let scorer = model.as_ref().map(|m| m as &dyn BranchScorer);
    let report = batch_eval(&args.dir, &cfg, scorer, args.jobs)?;
    let text = report.to_text(!args.omit_timings);
    match &args.report {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn tree(args: &TreeArgs) -> Result<()> {
    let problem = read_problem(&args.problem)?;
    let mut symbols = problem.symbols.clone();
    let t = build_proof_tree(&problem.formula, &mut symbols, args.depth, args.node_cap);
    println!("{}", serde_json::to_string_pretty(&t.dump(&symbols))?);
    Ok(())
}

fn init_weights(args: &InitArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    Weights::random(args.m, args.steps, args.hidden, &mut rng).save(&args.out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(a) => return solve(a),
        Command::Gen(a) => gen(a)?,
        Command::CollectData(a) => collect(a)?,
        Command::Encode(a) => encode(a)?,
        Command::BatchEval(a) => batch(a)?,
        Command::Tree(a) => tree(a)?,
        Command::InitWeights(a) => init_weights(a)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
