use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use vtd_core::commands::{filter_document, parse_scores, plan_from_json, validate_file, vtda_report};
use vtd_core::{evaluate, from_json, Error, EvalConfig, EvalTask, Result, ScalingTable};

#[derive(Parser)]
#[command(
    name = "vtd",
    version,
    about = "Evaluate driving video tasks, aggregate scores and plan training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth for one task.
    Evaluate(EvaluateArgs),
    /// Combine the thirteen task scores into group scores and a total.
    Vtda(VtdaArgs),
    /// Generate a batch schedule or a curriculum plan.
    Schedule(ScheduleArgs),
    /// Apply a pseudo-label confidence filter.
    Filter(FilterArgs),
    /// Check a label file against a task's schema.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file with any of the other options; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    subsample: Option<usize>,
    /// Comma-separated OKS constants, one value or one per joint.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
}

#[derive(Args)]
struct VtdaArgs {
    /// Scores document: slot keys to values, or an evaluation report.
    #[arg(long)]
    scores: PathBuf,
    /// Scaling table document; the published table when omitted.
    #[arg(long, conflicts_with = "default_scales")]
    scales: Option<PathBuf>,
    #[arg(long)]
    default_scales: bool,
    /// Allow missing slots and renormalize within each group.
    #[arg(long)]
    partial: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    /// `pose` or `sem`.
    #[arg(long)]
    task: String,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    task: String,
    /// File to check.
    #[arg(long, required_unless_present = "gt")]
    pred: Option<PathBuf>,
    #[arg(long, conflicts_with = "pred")]
    gt: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => writeln!(std::io::stdout(), "{text}").map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn eval_config(args: EvaluateArgs) -> Result<EvalConfig> {
    let mut doc = match &args.config {
        Some(path) => match from_json::<Value>(&read(path)?)? {
            Value::Object(m) => m,
            _ => return Err(Error::Invalid("config file must hold a JSON object".into())),
        },
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            doc.insert(key.to_string(), v);
        }
    };
    set("task", args.task.map(Value::from));
    set("pred", args.pred.map(|p| Value::from(p.to_string_lossy().into_owned())));
    set("gt", args.gt.map(|p| Value::from(p.to_string_lossy().into_owned())));
    set("out", args.out.map(|p| Value::from(p.to_string_lossy().into_owned())));
    set("workers", args.workers.map(Value::from));
    set("threshold", args.threshold.map(Value::from));
    set("subsample", args.subsample.map(Value::from));
    set("sigmas", args.sigmas.map(Value::from));
    if let Some(Value::String(task)) = doc.get("task") {
        task.parse::<EvalTask>()?;
    }
    serde_json::from_value(Value::Object(doc)).map_err(|e| Error::Invalid(format!("evaluate config: {e}")))
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = eval_config(args)?;
    let report = evaluate(&cfg)?;
    for (slot, v) in &report.scores {
        eprintln!("{slot:>8}  {v:7.2}");
    }
    emit(cfg.out.as_deref(), &pretty(&report.to_json()))
}

fn run_vtda(args: VtdaArgs) -> Result<()> {
    let scores = parse_scores(&read(&args.scores)?)?;
    let scales: ScalingTable = match &args.scales {
        Some(path) => from_json(&read(path)?)?,
        None => ScalingTable::default(),
    };
    let report = vtda_report(&scores, &scales, args.partial)?;
    for w in &report.warnings {
        eprintln!(
            "warning: {}: s = {} but 1/max(1, ceil(2 * {})) = {:.4}",
            w.slot, w.s, w.sigma, w.derived
        );
    }
    let g = report.groups;
    eprintln!(
        "cls {:.1}  seg {:.1}  loc {:.1}  ass {:.1}  total {:.1}",
        g.cls, g.seg, g.loc, g.ass, g.total
    );
    let json = serde_json::to_value(&report).expect("report serializes");
    emit(args.out.as_deref(), &pretty(&json))
}

fn run_schedule(args: ScheduleArgs) -> Result<()> {
    let plan = plan_from_json(&read(&args.config)?, args.seed)?;
    // compact: schedules can hold thousands of batches
    emit(
        args.out.as_deref(),
        &serde_json::to_string(&plan).expect("plans serialize"),
    )
}

fn run_filter(args: FilterArgs) -> Result<()> {
    let task: EvalTask = args.task.parse()?;
    let out = filter_document(task, &read(&args.pred)?, args.threshold)?;
    emit(args.out.as_deref(), &out)
}

fn run_validate(args: ValidateArgs) -> Result<bool> {
    let task: EvalTask = args.task.parse()?;
    let path = args.pred.or(args.gt).expect("clap requires one of --pred/--gt");
    let diagnostics = validate_file(task, &path)?;
    for d in &diagnostics {
        eprintln!("{d}");
    }
    if diagnostics.is_empty() {
        emit(None, &format!("{}: ok", path.display()))?;
    }
    Ok(diagnostics.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evaluate(a) => run_evaluate(a).map(|_| true),
        Command::Vtda(a) => run_vtda(a).map(|_| true),
        Command::Schedule(a) => run_schedule(a).map(|_| true),
        Command::Filter(a) => run_filter(a).map(|_| true),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
