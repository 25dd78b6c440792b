//! `qmf` command implementations. `main.rs` only parses and maps errors to
//! exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use qmf_cdae::{
    train, transfer, CdaeError, Checkpoint, LossVariant, Network, NetworkSpec, TrainConfig, TrainEvent, TransferPolicy,
    NUM_PARAM_LAYERS,
};
use qmf_pipeline::{
    benchmark_runtime, evaluate, generate_dataset, to_json_lines, validate_dataset, write_atomic, BaselineConfig,
    BenchMode, Case, Dataset, EvalConfig, EvalMode, GenConfig, PipelineError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Cdae(#[from] CdaeError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Json(_) => EXIT_IO,
            CliError::Pipeline(e) => match e {
                PipelineError::InvalidArgument(_) | PipelineError::Mismatch(_) => EXIT_USAGE,
                PipelineError::Io(_) | PipelineError::Json(_) | PipelineError::Format(_) => EXIT_IO,
                PipelineError::Cdae(e) => cdae_code(e),
                PipelineError::Core(_) => EXIT_NUMERIC,
            },
            CliError::Cdae(e) => cdae_code(e),
        }
    }
}

fn cdae_code(e: &CdaeError) -> i32 {
    match e {
        CdaeError::InvalidArchitecture(_) | CdaeError::InvalidConfig(_) | CdaeError::Mismatch(_) => EXIT_USAGE,
        CdaeError::Io(_) | CdaeError::Format(_) => EXIT_IO,
        CdaeError::NonFinite { .. } | CdaeError::Core(_) | CdaeError::Nn(_) => EXIT_NUMERIC,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qmf", version, about = "Reconstruct quantum states from their marginals")]
pub struct Cli {
    /// Worker threads (default: QMF_THREADS, else all logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single-threaded execution with a fixed reduction order.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a training or test data set.
    Gen(GenArgs),
    /// Check every sample of a data set.
    Validate(ValidateArgs),
    /// Train a model, optionally starting from a smaller model.
    Train(TrainArgs),
    /// Per-rank fidelity and success rate of a reconstruction mode.
    Eval(EvalArgs),
    /// Time reconstruction per (N, k) case.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub qubits: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub count: u64,
    /// Smallest generator rank; ranks are uniform on rmin..=2^N.
    #[arg(long, default_value_t = 1)]
    pub rmin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Width scale S (channels = 10·S). Defaults to the parent's when transferring, else 10.
    #[arg(long)]
    pub scale: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub batch: usize,
    #[arg(long, default_value = "model1")]
    pub variant: LossVariant,
    /// Seeds weight initialization and batch shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint of a smaller model to start from.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Layers left trainable after transfer: full, decoder or last-layer.
    #[arg(long, requires = "from")]
    pub policy: Option<TransferPolicy>,
    /// Overwrite the output checkpoint every this many epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Loss curve as JSON lines (default: <out>.curve.jsonl).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Required for model modes; otherwise --qubits sets the register size.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub k: usize,
    /// Comma-separated ranks or ranges, e.g. `1,2,8` or `1-8`; default all.
    #[arg(long)]
    pub ranks: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value = "model1")]
    pub mode: EvalMode,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub baseline_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub baseline_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated cases, e.g. `N3k2,N4k3`.
    #[arg(long)]
    pub cases: String,
    /// Holds `N<n>k<k>.qmck` or `N<n>.qmck` per case.
    #[arg(long)]
    pub ckpt_dir: Option<PathBuf>,
    #[arg(long, default_value = "model1,model1+mio,baseline")]
    pub modes: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub baseline_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub baseline_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Record of one invocation, written next to its main output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Value,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 of every input file.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub threads: usize,
    pub deterministic: bool,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

struct Ctx {
    threads: usize,
    deterministic: bool,
}

impl Ctx {
    fn manifest(&self, command: &str, args: &impl Serialize, outputs: Vec<PathBuf>) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_string(),
            args: serde_json::to_value(args)?,
            seeds: BTreeMap::new(),
            input_digests: BTreeMap::new(),
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            threads: self.threads,
            deterministic: self.deterministic,
        })
    }
}

fn write_manifest(m: &RunManifest, main_out: &Path) -> Result<()> {
    write_atomic(&manifest_path(main_out), serde_json::to_string_pretty(m)?.as_bytes())?;
    Ok(())
}

/// Thread count from the flags, then `QMF_THREADS`, then the machine.
pub fn resolve_threads(flag: Option<usize>, deterministic: bool) -> Result<usize> {
    if deterministic {
        return Ok(1);
    }
    let from_env = match std::env::var("QMF_THREADS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| CliError::Usage(format!("QMF_THREADS={v:?} is not a count")))?),
        Err(_) => None,
    };
    let t = flag.or(from_env).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if t == 0 {
        return Err(CliError::Usage("thread count must be positive".into()));
    }
    Ok(t)
}

/// Parses `1,2,5-8` into a sorted, deduplicated list.
pub fn parse_ranks(spec: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad rank list {spec:?}"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) =
                    (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads, cli.deterministic)?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let ctx = Ctx { threads, deterministic: cli.deterministic };
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a),
        Command::Validate(a) => cmd_validate(a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
    }
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let cfg = GenConfig { num_qubits: a.qubits, k: a.k, count: a.count, r_min: a.rmin, seed: a.seed };
    cfg.validate()?;
    let summary = generate_dataset(&cfg, &a.out)?;
    let mut m = ctx.manifest("gen", a, vec![a.out.clone()])?;
    m.seeds.insert("data".into(), a.seed);
    m.input_digests.insert("output".into(), summary.digest.clone());
    write_manifest(&m, &a.out)?;
    println!("{}", json!({ "out": a.out, "count": summary.count, "digest": summary.digest }));
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let ds = Dataset::read(&a.data)?;
    let report = validate_dataset(&ds)?;
    println!("{}", serde_json::to_string(&json!({ "digest": ds.digest(), "report": report }))?);
    if report.is_valid() {
        Ok(())
    } else {
        Err(PipelineError::Format(format!("{} invalid samples", report.failures.len())).into())
    }
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    if a.epochs == 0 || a.batch == 0 || !(a.lr.is_finite() && a.lr > 0.0) || a.checkpoint_every == Some(0) {
        return Err(CliError::Usage("epochs, batch, lr and checkpoint cadence must be positive".into()));
    }
    let data = Dataset::read(&a.data)?;
    let n = data.num_qubits;
    let mut inputs = BTreeMap::from([("data".to_string(), data.digest().to_string())]);
    let (mut net, frozen, transferred_from) = match &a.from {
        Some(path) => {
            let parent = Checkpoint::load(path)?;
            inputs.insert("from".into(), qmf_pipeline::sha256_file(path)?);
            let scale = a.scale.unwrap_or(parent.header.scale);
            let policy = a.policy.unwrap_or(TransferPolicy::Full);
            let (net, mask) = transfer(&parent, n, scale, policy)?;
            info!("transferring from the {}-qubit model with policy {policy}", parent.header.num_qubits);
            (net, mask, Some(parent.header.num_qubits))
        }
        None => {
            let spec = NetworkSpec::new(n, a.scale.unwrap_or(10))?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (Network::new(spec, &mut rng)?, vec![false; NUM_PARAM_LAYERS], None)
        }
    };
    let cfg = TrainConfig {
        lr: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        variant: a.variant,
        frozen,
        checkpoint_every: a.checkpoint_every,
        transferred_from,
    };
    let curve_path = a.curve.clone().unwrap_or_else(|| with_suffix(&a.out, ".curve.jsonl"));
    let mut save_err = None;
    let out = train(&mut net, &data, &cfg, &mut |e| match e {
        TrainEvent::Epoch(s) => info!("epoch {} loss {:.6e}", s.epoch, s.mean_loss),
        TrainEvent::Checkpoint { epoch, checkpoint } => {
            if let Err(err) = checkpoint.save(&a.out) {
                warn!("could not write checkpoint at epoch {epoch}: {err}");
                save_err.get_or_insert(err);
            }
        }
    })?;
    if let Some(e) = save_err {
        return Err(e.into());
    }
    out.checkpoint.save(&a.out)?;
    write_atomic(&curve_path, to_json_lines(&out.loss_curve)?.as_bytes())?;
    let mut m = ctx.manifest("train", a, vec![a.out.clone(), curve_path.clone()])?;
    m.seeds.insert("init_and_shuffle".into(), a.seed);
    m.input_digests = inputs;
    write_manifest(&m, &a.out)?;
    let last = out.loss_curve.last().expect("at least one epoch");
    println!(
        "{}",
        json!({ "out": a.out, "curve": curve_path, "epochs": a.epochs, "final_loss": last.mean_loss, "terms": last.terms })
    );
    Ok(())
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let ckpt = a.ckpt.as_deref().map(Checkpoint::load).transpose()?;
    if a.mode.needs_model() && ckpt.is_none() {
        return Err(CliError::Usage(format!("mode {} needs --ckpt", a.mode)));
    }
    let n = match (&ckpt, a.qubits) {
        (Some(c), Some(q)) if c.header.num_qubits != q => {
            return Err(CliError::Usage(format!(
                "--qubits {q} but the checkpoint is for {} qubits",
                c.header.num_qubits
            )))
        }
        (Some(c), _) => c.header.num_qubits,
        (None, Some(q)) => q,
        (None, None) => return Err(CliError::Usage("give --ckpt or --qubits".into())),
    };
    if let Some(c) = &ckpt {
        let expected = match a.mode {
            EvalMode::Model1 | EvalMode::Model1Mio => Some(LossVariant::Model1),
            EvalMode::Model2 => Some(LossVariant::Model2),
            _ => None,
        };
        if expected.is_some_and(|v| v != c.header.variant) {
            warn!("evaluating a {} checkpoint in mode {}", c.header.variant, a.mode);
        }
    }
    let ranks = match &a.ranks {
        Some(s) => parse_ranks(s)?,
        None => (1..=1usize << n).collect(),
    };
    let mut cfg = EvalConfig::new(n, a.k, ranks, a.samples, a.seed);
    cfg.baseline = BaselineConfig { max_iters: a.baseline_iters, tol: a.baseline_tol };
    cfg.validate()?;
    let report = evaluate(a.mode, ckpt.as_ref().map(|c| &c.network), &cfg)?;
    write_atomic(&a.out, to_json_lines(&report.rows)?.as_bytes())?;
    let mut m = ctx.manifest("eval", a, vec![a.out.clone()])?;
    m.seeds.insert("eval".into(), a.seed);
    if let Some(p) = &a.ckpt {
        m.input_digests.insert("ckpt".into(), qmf_pipeline::sha256_file(p)?);
    }
    write_manifest(&m, &a.out)?;
    print!("{}", to_json_lines(&report.rows)?);
    Ok(())
}

fn find_checkpoint(dir: &Path, case: Case) -> Option<PathBuf> {
    [format!("{case}.qmck"), format!("N{}.qmck", case.num_qubits)]
        .into_iter()
        .map(|f| dir.join(f))
        .find(|p| p.is_file())
}

fn cmd_bench(ctx: &Ctx, a: &BenchArgs) -> Result<()> {
    let cases: Vec<Case> =
        a.cases.split(',').map(|s| s.trim().parse::<Case>().map_err(CliError::Usage)).collect::<Result<_>>()?;
    let modes: Vec<BenchMode> =
        a.modes.split(',').map(|s| s.trim().parse::<BenchMode>().map_err(CliError::Usage)).collect::<Result<_>>()?;
    if cases.is_empty() || modes.is_empty() || a.samples == 0 {
        return Err(CliError::Usage("need at least one case, one mode and one sample".into()));
    }
    let needs_model = modes.iter().any(|m| m.needs_model());
    let mut digests = BTreeMap::new();
    let mut nets = Vec::with_capacity(cases.len());
    for &case in &cases {
        let net = if needs_model {
            let dir = a.ckpt_dir.as_deref().ok_or_else(|| CliError::Usage("model modes need --ckpt-dir".into()))?;
            let path = find_checkpoint(dir, case)
                .ok_or_else(|| CliError::Usage(format!("no checkpoint for {case} in {}", dir.display())))?;
            digests.insert(case.to_string(), qmf_pipeline::sha256_file(&path)?);
            Some(Checkpoint::load(&path)?.network)
        } else {
            None
        };
        nets.push(net);
    }
    let pairs: Vec<(Case, Option<&Network<f32>>)> =
        cases.iter().copied().zip(nets.iter().map(Option::as_ref)).collect();
    let baseline = BaselineConfig { max_iters: a.baseline_iters, tol: a.baseline_tol };
    let rows = benchmark_runtime(&pairs, &modes, a.samples, a.seed, &baseline)?;
    write_atomic(&a.out, to_json_lines(&rows)?.as_bytes())?;
    let mut m = ctx.manifest("bench", a, vec![a.out.clone()])?;
    m.seeds.insert("bench".into(), a.seed);
    m.input_digests = digests;
    write_manifest(&m, &a.out)?;
    print!("{}", to_json_lines(&rows)?);
    Ok(())
}
