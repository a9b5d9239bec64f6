//! The `ssmlab` command line.
//!
//! Tables are CSV (or JSON with `--format json`) preceded by `# key=value`
//! metadata lines carrying the version and the full parsed configuration.
//! Models, node selections and training reports are JSON with a `meta` field.
//!
//! Exit codes: 0 on success or `--help`, 2 on flag errors, 1 on numerical
//! errors.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    condition_table, magnitude_table, spectrum_table, tradeoff_table, CopyingRun, MagnitudeGrid, ShiftRun,
    SpectrumSource,
};
use crate::init::{make_model, InitSpec};
use crate::output::{matrix_from_csv, matrix_to_csv, write_file, Cell, Table};
use crate::recovery::{dominant_frequencies, greedy_select_nodes, recover_memory, RecoveryProblem};
use crate::stability::OutputMode;
use crate::train::{TaskKind, TrainConfig, TrainReport};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("SSMLAB_GIT_DESCRIBE"), ")");

const KINDS: [&str; 4] = ["iid", "ou", "rbf", "rand"];

#[derive(Debug, Parser, Serialize)]
#[command(name = "ssmlab", version = VERSION, about = "Initialization experiments for diagonal state space models")]
pub struct Cli {
    /// Global seed; falls back to SSMLAB_SEED, then 0.
    #[arg(long, global = true, env = "SSMLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweep grids; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    /// Encoding for tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Emit an initialized model as JSON.
    Init(InitArgs),
    /// λ_max of input autocorrelations over sequence lengths.
    Spectrum(SpectrumArgs),
    /// Monte Carlo output magnitude against the Δ²m²Lλ_max bound.
    Stability(StabilityArgs),
    /// Gram-matrix spectrum and condition number per hidden size.
    Gram(GramArgs),
    /// Condition number vs approximation error as model frequencies scale.
    Tradeoff(TradeoffArgs),
    /// Least-squares memory function from sequences and labels.
    Recover(RecoverArgs),
    /// Separation-maximizing frequency nodes from a recovered memory.
    PickNodes(PickNodesArgs),
    /// Train on a synthetic memory task.
    Train(TrainArgs),
    /// Regenerate every experiment table and training report.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    S4dLin,
    S4dReal,
}

impl SchemeArg {
    fn name(self) -> &'static str {
        match self {
            SchemeArg::S4dLin => "s4d-lin",
            SchemeArg::S4dReal => "s4d-real",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct InitArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::S4dLin)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    /// Fraction of modes whose real part is set to zero.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub real_part: f64,
    #[arg(long, default_value_t = 1.0)]
    pub imag_scale: f64,
    /// Timescale; defaults to 1/sqrt(L).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "L", default_value_t = 1024)]
    pub len: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Comma list of iid, ou, rbf, rand.
    #[arg(long, default_value = "iid,ou,rbf,rand", value_parser = parse_kinds)]
    pub kind: Kinds,
    /// `a..b` doubles from a up to b; or a comma list.
    #[arg(long = "L", default_value = "64..4096", value_parser = parse_sizes)]
    pub len: Sizes,
    /// GP draws for the sample autocorrelation.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Use the population autocovariance instead of samples.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityArgs {
    #[arg(long, default_value = "iid", value_parser = parse_kinds)]
    pub kind: Kinds,
    /// Δ = L^{-alpha}.
    #[arg(long, default_value = "0.5,0.75,1.0", value_parser = parse_reals)]
    pub alpha: Reals,
    /// Real part shared by every S4D-Lin mode.
    #[arg(long, default_value = "0,-0.5", value_parser = parse_reals, allow_hyphen_values = true)]
    pub re: Reals,
    #[arg(long = "L", default_value = "64..4096", value_parser = parse_sizes)]
    pub len: Sizes,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 256)]
    pub n_c: usize,
    #[arg(long, default_value_t = 256)]
    pub n_x: usize,
    /// Use (1/L) Σ y_l² instead of y_L².
    #[arg(long)]
    pub pooling: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GramArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::S4dLin)]
    pub scheme: SchemeArg,
    #[arg(long, default_value = "4,16,64,256", value_parser = parse_sizes)]
    pub m: Sizes,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TradeoffArgs {
    /// Target frequencies: a formula in `j = 1..m` such as `0.1*pi*j`, or a
    /// comma list.
    #[arg(long, default_value = "0.1*pi*j", value_parser = parse_frequencies)]
    pub xi: Frequencies,
    #[arg(long, default_value = "1..256", value_parser = parse_ratios)]
    pub ratios: Reals,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RecoverArgs {
    /// `N × L` sequences.
    #[arg(long)]
    pub x: PathBuf,
    /// `N × C` labels.
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PickNodesArgs {
    /// `L × C` memory, as written by `recover`.
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub m: usize,
    /// Sampling step; a DFT frequency ω (rad/sample) becomes ξ = ω / delta-t.
    #[arg(long, default_value_t = 1.0)]
    pub delta_t: f64,
    /// Strongest DFT bins considered; defaults to min(2m, L/2).
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskArg {
    Shift,
    FirstLast,
    Copying,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::Shift)]
    pub task: TaskArg,
    #[arg(long = "L", default_value_t = 128)]
    pub len: usize,
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    /// Real part of every mode at initialization.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub re_init: f64,
    /// Fraction of modes reset to a zero real part.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// Timescale for single-channel tasks; defaults to 1/sqrt(L).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Copying: per-channel Δ ~ U[delta-min, delta-max]; defaults to 1/sqrt(L).
    #[arg(long)]
    pub delta_min: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 128)]
    pub channels: usize,
    /// Copying delay; defaults to L/2.
    #[arg(long)]
    pub delay: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr_state: f64,
    /// Defaults to 0.01 for shift/first-last and 0.1 for copying.
    #[arg(long)]
    pub lr_readout: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 100)]
    pub eval_every: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_train: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_test: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproArgs {
    /// Desk-scale sizes (a few minutes) instead of the full sweep.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value = "repro")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Kinds(pub Vec<String>);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Sizes(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Reals(pub Vec<f64>);

/// `coefficient * j` for `j = 1..m`, or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequencies {
    Linear(f64),
    List(Vec<f64>),
}

impl Frequencies {
    pub fn values(&self, m: usize) -> std::result::Result<Vec<f64>, String> {
        match self {
            Frequencies::Linear(c) => Ok((1..=m).map(|j| c * j as f64).collect()),
            Frequencies::List(v) if v.len() == m => Ok(v.clone()),
            Frequencies::List(v) => Err(format!("--xi lists {} values but --m is {m}", v.len())),
        }
    }
}

fn parse_kinds(s: &str) -> std::result::Result<Kinds, String> {
    let kinds: Vec<String> = s.split(',').map(|k| k.trim().to_string()).collect();
    match kinds.iter().find(|k| !KINDS.contains(&k.as_str())) {
        Some(bad) => Err(format!("unknown kind '{bad}' (expected {})", KINDS.join(", "))),
        None => Ok(Kinds(kinds)),
    }
}

/// `a..b` is `a, 2a, 4a, ...` up to `b`; otherwise a comma list.
fn doubling(a: f64, b: f64) -> std::result::Result<Vec<f64>, String> {
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(format!("range {a}..{b} needs 0 < a <= b"));
    }
    let mut out = vec![a];
    while out[out.len() - 1] * 2.0 <= b * (1.0 + 1e-12) {
        out.push(out[out.len() - 1] * 2.0);
    }
    Ok(out)
}

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a positive integer"));
    let sizes = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            doubling(a as f64, b as f64)?.into_iter().map(|v| v as usize).collect()
        }
        None => s.split(',').map(parse).collect::<std::result::Result<Vec<_>, _>>()?,
    };
    if sizes.contains(&0) {
        return Err("sizes must be positive".into());
    }
    Ok(Sizes(sizes))
}

fn parse_reals(s: &str) -> std::result::Result<Reals, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Reals)
}

fn parse_ratios(s: &str) -> std::result::Result<Reals, String> {
    match s.split_once("..") {
        Some((a, b)) => {
            let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
            Ok(Reals(doubling(num(a)?, num(b)?)?))
        }
        None => parse_reals(s),
    }
}

/// Product of `*`-separated factors, each a number or `pi`.
fn product(expr: &str) -> std::result::Result<f64, String> {
    expr.split('*').try_fold(1.0, |acc, f| {
        let f = f.trim();
        if f.eq_ignore_ascii_case("pi") {
            Ok(acc * PI)
        } else {
            f.parse::<f64>()
                .map(|v| acc * v)
                .map_err(|_| format!("'{f}' is not a number or pi"))
        }
    })
}

fn parse_frequencies(s: &str) -> std::result::Result<Frequencies, String> {
    let factors: Vec<&str> = s.split('*').map(str::trim).collect();
    let js = factors.iter().filter(|f| **f == "j").count();
    match js {
        0 => s.split(',').map(product).collect::<std::result::Result<_, _>>().map(Frequencies::List),
        1 => {
            let rest: Vec<&str> = factors.into_iter().filter(|f| *f != "j").collect();
            let c = if rest.is_empty() { Ok(1.0) } else { product(&rest.join("*")) }?;
            Ok(Frequencies::Linear(c))
        }
        _ => Err("'j' may appear once".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
}

/// A JSON output: `meta` followed by the payload's own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub meta: Meta,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodesOutput {
    /// Selected continuous frequencies `ω / delta_t`, ascending.
    pub nodes: Vec<f64>,
    pub separation: f64,
    /// Candidate frequencies, strongest first.
    pub candidates: Vec<f64>,
    pub delta_t: f64,
}

/// JSON table form: column names and rows of numbers, strings or `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<serde_json::Value>>,
}

impl From<&Table> for JsonTable {
    fn from(t: &Table) -> Self {
        let cell = |c: &Cell| match c {
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => serde_json::Value::from(s.as_str()),
        };
        Self {
            columns: t.columns.clone(),
            rows: t.rows.iter().map(|r| r.iter().map(cell).collect()).collect(),
        }
    }
}

struct Context {
    seed: u64,
    jobs: usize,
    format: Format,
    meta: Meta,
}

impl Context {
    fn csv_meta(&self) -> Vec<(String, String)> {
        vec![
            ("version".into(), self.meta.version.clone()),
            ("command".into(), self.meta.command.clone()),
            ("config".into(), self.meta.config.to_string()),
        ]
    }

    fn json<T: Serialize>(&self, body: T) -> Result<String> {
        let doc = Document {
            meta: self.meta.clone(),
            body,
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    fn table(&self, table: Table, out: Option<&Path>) -> Result<()> {
        let text = match self.format {
            Format::Csv => table.with_meta(self.csv_meta()).to_csv(),
            Format::Json => self.json(JsonTable::from(&table))?,
        };
        emit(out, &text)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn usage_error(msg: String) -> Error {
    Error::InvalidInput(msg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let command = serde_json::to_value(&cli.command)?;
    let name = command
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let config = serde_json::json!({
        "seed": cli.seed,
        "jobs": cli.jobs,
        "format": cli.format,
        "args": command.get(&name).cloned().unwrap_or(serde_json::Value::Null),
    });
    let ctx = Context {
        seed: cli.seed,
        jobs: cli.jobs as usize,
        format: cli.format,
        meta: Meta {
            version: format!("ssmlab {VERSION}"),
            command: name,
            config,
        },
    };
    match &cli.command {
        Command::Init(a) => init(&ctx, a),
        Command::Spectrum(a) => {
            let source = if a.exact {
                SpectrumSource::Exact
            } else {
                SpectrumSource::Sampled(a.samples)
            };
            let t = spectrum_table(&a.kind.0, &a.len.0, source, ctx.seed, ctx.jobs)?;
            ctx.table(t, a.out.as_deref())
        }
        Command::Stability(a) => {
            let grid = MagnitudeGrid {
                kinds: a.kind.0.clone(),
                lens: a.len.0.clone(),
                alphas: a.alpha.0.clone(),
                reals: a.re.0.clone(),
                m: a.m,
                n_c: a.n_c,
                n_x: a.n_x,
                mode: if a.pooling { OutputMode::Pooling } else { OutputMode::Final },
            };
            ctx.table(magnitude_table(&grid, ctx.seed, ctx.jobs)?, a.out.as_deref())
        }
        Command::Gram(a) => ctx.table(condition_table(a.scheme.name(), &a.m.0, ctx.jobs)?, a.out.as_deref()),
        Command::Tradeoff(a) => {
            let xi = a.xi.values(a.m).map_err(usage_error)?;
            ctx.table(tradeoff_table(&xi, &a.ratios.0)?, a.out.as_deref())
        }
        Command::Recover(a) => recover(&ctx, a),
        Command::PickNodes(a) => pick_nodes(&ctx, a),
        Command::Train(a) => {
            let report = train_task(&ctx, a)?;
            emit(a.out.as_deref(), &ctx.json(&report)?)
        }
        Command::Repro(a) => repro(&ctx, a),
    }
}

fn init(ctx: &Context, a: &InitArgs) -> Result<()> {
    let spec = match a.scheme {
        SchemeArg::S4dLin => InitSpec::s4d_lin(a.m),
        SchemeArg::S4dReal => InitSpec::s4d_real(a.m),
    };
    let spec = InitSpec {
        imag_scale: a.imag_scale,
        ..spec.with_real_part(a.real_part)
            .with_zero_real_fraction(a.p)
            .with_seed(ctx.seed)
    };
    let delta = a.delta.unwrap_or(1.0 / (a.len.max(1) as f64).sqrt());
    let model = make_model(&spec, delta)?;
    emit(a.out.as_deref(), &ctx.json(&model)?)
}

fn recover(ctx: &Context, a: &RecoverArgs) -> Result<()> {
    let problem = RecoveryProblem {
        x: matrix_from_csv(&std::fs::read_to_string(&a.x)?)?,
        y: matrix_from_csv(&std::fs::read_to_string(&a.y)?)?,
        ridge: a.ridge,
    };
    let rec = recover_memory(&problem)?;
    let rho = rec.memory.to_raw(problem.x.ncols(), 1.0);
    let mut meta = ctx.csv_meta();
    meta.push(("residual".into(), crate::output::format_f64(rec.residual)));
    emit(a.out.as_deref(), &matrix_to_csv(&rho, &meta))
}

fn pick_nodes(ctx: &Context, a: &PickNodesArgs) -> Result<()> {
    if !(a.delta_t > 0.0) {
        return Err(usage_error("--delta-t must be positive".into()));
    }
    let rho = matrix_from_csv(&std::fs::read_to_string(&a.rho)?)?;
    if a.channel >= rho.ncols() {
        return Err(usage_error(format!(
            "--channel {} but the memory has {} channels",
            a.channel,
            rho.ncols()
        )));
    }
    let column: Vec<f64> = rho.column(a.channel).iter().copied().collect();
    let k = a.candidates.unwrap_or((2 * a.m).min(column.len() / 2));
    let omegas = dominant_frequencies(&column, k)?;
    let selection = greedy_select_nodes(&omegas, a.m)?;
    let out = NodesOutput {
        nodes: selection.nodes.iter().map(|w| w / a.delta_t).collect(),
        separation: selection.separation / a.delta_t,
        candidates: omegas.iter().map(|w| w / a.delta_t).collect(),
        delta_t: a.delta_t,
    };
    emit(a.out.as_deref(), &ctx.json(&out)?)
}

fn train_task(ctx: &Context, a: &TrainArgs) -> Result<TrainReport> {
    let config = TrainConfig {
        steps: a.steps,
        lr_state: a.lr_state,
        lr_readout: a.lr_readout.unwrap_or(if a.task == TaskArg::Copying { 0.1 } else { 0.01 }),
        batch_size: a.batch_size,
        eval_every: a.eval_every,
        seed: ctx.seed,
        ..TrainConfig::default()
    };
    let root = 1.0 / (a.len.max(1) as f64).sqrt();
    let mut report = match a.task {
        TaskArg::Copying => {
            let mut run = CopyingRun::new(a.delta_min.unwrap_or(root), ctx.seed);
            run.channels = a.channels;
            run.len = a.len;
            run.delay = a.delay.unwrap_or(a.len / 2);
            run.m = a.m;
            run.real_part = a.re_init;
            run.zero_real_fraction = a.p;
            run.delta_max = a.delta_max;
            run.config = config;
            {
                run.n_train = a.n_train;
                run.n_test = a.n_test;
                run.run()?
            }
        }
        task => {
            let mut run = ShiftRun::new(a.re_init, ctx.seed);
            run.kind = if task == TaskArg::Shift { TaskKind::Shift } else { TaskKind::FirstLast };
            run.len = a.len;
            run.m = a.m;
            run.zero_real_fraction = a.p;
            run.delta = a.delta.unwrap_or(root);
            run.config = config;
            {
                run.n_train = a.n_train;
                run.n_test = a.n_test;
                run.run()?
            }
        }
    };
    report.models.clear();
    Ok(report)
}

fn repro(ctx: &Context, a: &ReproArgs) -> Result<()> {
    let dir = &a.out_dir;
    let kinds: Vec<String> = KINDS.iter().map(|k| k.to_string()).collect();
    let mut written = Vec::new();
    let mut save = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    let table_text = |t: Table| t.with_meta(ctx.csv_meta()).to_csv();

    let spectrum_lens: Vec<usize> = if a.quick { vec![64, 128, 256, 512, 1024] } else { vec![64, 128, 256, 512, 1024, 2048, 4096] };
    let spectrum = spectrum_table(&kinds, &spectrum_lens, SpectrumSource::Sampled(1000), ctx.seed, ctx.jobs)?;
    save("spectrum.csv", table_text(spectrum))?;

    let grid = MagnitudeGrid {
        kinds: kinds.clone(),
        lens: if a.quick { vec![64, 256, 1024] } else { vec![64, 256, 1024, 4096] },
        alphas: vec![1.0, 0.75, 0.5, 0.25],
        reals: vec![0.0, -0.5],
        ..MagnitudeGrid::new(&[], &[], &[], &[])
    };
    save("mag.csv", table_text(magnitude_table(&grid, ctx.seed, ctx.jobs)?))?;

    let mut cond = condition_table("s4d-lin", &[4, 16, 64, 256], ctx.jobs)?;
    let real: Vec<usize> = (2..=12).collect();
    cond.rows.extend(condition_table("s4d-real", &real, ctx.jobs)?.rows);
    save("cond.csv", table_text(cond))?;

    let xi: Vec<f64> = (1..=8).map(|j| 0.1 * PI * j as f64).collect();
    let ratios: Vec<f64> = (0..=8).map(|k| 2f64.powi(k)).collect();
    save("tradeoff.csv", table_text(tradeoff_table(&xi, &ratios)?))?;

    for (name, re) in [("shift_report.json", 0.0), ("shift_report_re-0.5.json", -0.5)] {
        let mut report = ShiftRun::new(re, ctx.seed).run()?;
        report.models.clear();
        save(name, ctx.json(&report)?)?;
    }
    if !a.quick {
        let len = 128f64;
        for (name, dmin) in [("copying_sqrt.json", 1.0 / len.sqrt()), ("copying_inv.json", 1.0 / len)] {
            let mut report = CopyingRun::new(dmin, ctx.seed).run()?;
            report.models.clear();
            save(name, ctx.json(&report)?)?;
        }
    }
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
