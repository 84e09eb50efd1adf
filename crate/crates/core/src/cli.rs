//! Command-line front end.
//!
//! Every option can also come from a JSON config file (`--config`); flags
//! win over the file, the file wins over built-in defaults.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 pipeline failure,
//! 4 infeasible security budget.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adversary::{
    entropy_audit, simulate_guess, write_audit_csv, AttackScenario, AuditRow, Selection, Target,
};
use crate::bench::{bench_mul, bench_pipeline, synthetic_file, write_bench_csv, PipelineConfig};
use crate::codec::{strict_width, DigitString, GroupingMode, Rendering};
use crate::gf::{build_vandermonde, default_points, Field, FieldSpec};
use crate::optimizer::{solve_cost, write_sweep_csv, CostProblem, OptError};
use crate::pipeline::{self, BlockSize, PipelineRequest};
use crate::planner::SecurityProfile;
use crate::storage::Backends;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ncss",
    version,
    about = "Network-coded secure storage over simulated clouds"
)]
pub struct Cli {
    /// JSON file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a message and print the distribution plan as JSON.
    Plan(PipelineArgs),
    /// Encode, plan and write shards, local share and manifest under --root.
    Store(PipelineArgs),
    /// Recover the original file from a stored manifest.
    Fetch(RecoverArgs),
    /// Recover the plaintext digit string from a stored manifest.
    Decode(RecoverArgs),
    /// Check every coded block against the non-overflow definitions.
    Classify(ClassifyArgs),
    /// Minimize local storage cost for strict-mode encoding.
    Optimize(OptimizeArgs),
    /// Monte-Carlo guessing attack against one cloud or all of them.
    Attack(AttackArgs),
    /// Exact entropy audit of what an eavesdropper learns.
    Audit(AuditArgs),
    /// Timing runs; CSV output.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Strict,
    Alpha,
}

#[derive(Debug, Default, Args)]
pub struct InputArgs {
    /// Input file (bytes are expanded to base-d digits).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Input digit string in base d.
    #[arg(long, conflicts_with = "input")]
    pub digits: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Reduction polynomial, decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_poly)]
    pub poly: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Block size, or "auto" to let the optimizer choose.
    #[arg(long)]
    pub n: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct SecurityArgs {
    /// Per-cloud breach probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub breach: Option<Vec<f64>>,
    #[arg(long)]
    pub pu: Option<f64>,
    /// Digits per block kept local, one per component.
    #[arg(long)]
    pub w: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub security: SecurityArgs,
    /// Backend root directory (store only).
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub security: SecurityArgs,
    /// Factor for the per-cloud bound; defaults to the grouping alpha or 1.
    #[arg(long)]
    pub test_alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub m: Option<u64>,
    /// Comma-separated message lengths; emits one CSV row each.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<u64>>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    /// Common breach probability (the largest is used if several are given).
    #[arg(long, value_delimiter = ',')]
    pub breach: Option<Vec<f64>>,
    #[arg(long)]
    pub pu: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub security: SecurityArgs,
    /// Cloud index, or "all".
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub w: Option<usize>,
    /// Number of consecutive coded components observed.
    #[arg(long)]
    pub t: Option<usize>,
    /// First observed component.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Observe digits in this base instead, hiding the leading digit of
    /// each of the first w components.
    #[arg(long)]
    pub digit_base: Option<u32>,
    /// Run every k <= 3, n <= 4, w, t with contiguous selections.
    #[arg(long)]
    pub grid: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    Mul,
    Pipeline,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchKind::Mul)]
    pub kind: BenchKind,
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Synthetic file size for pipeline runs.
    #[arg(long)]
    pub bytes: Option<usize>,
    #[arg(long)]
    pub mul_count: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_poly(text: &str) -> Result<u32, String> {
    let parsed = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => text.parse(),
    };
    parsed.map_err(|e| format!("bad polynomial {text:?}: {e}"))
}

/// Block size in a config file: a number or `"auto"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NValue {
    Num(usize),
    Text(String),
}

/// The config file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: Option<u32>,
    pub k: Option<u32>,
    pub poly: Option<u32>,
    pub mode: Option<ModeArg>,
    pub alpha: Option<f64>,
    pub n: Option<NValue>,
    pub breach: Option<Vec<f64>>,
    pub pu: Option<f64>,
    pub w: Option<usize>,
    pub input: Option<PathBuf>,
    pub digits: Option<String>,
    pub root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub target: Option<String>,
    pub m: Option<u64>,
    pub p: Option<u32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_D: u32 = 2;
pub const DEFAULT_K: u32 = 8;
pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_ROOT: &str = "ncss-store";
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_BENCH_BYTES: usize = 2 * 1024 * 1024;
pub const DEFAULT_MUL_COUNT: u64 = 10_000_000;

enum Failure {
    Error(Error),
    Infeasible(String),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.into())
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Error(Error::Config(msg.into()))
}

fn exit_code(f: &Failure) -> i32 {
    match f {
        Failure::Infeasible(_) | Failure::Error(Error::Optimizer(OptError::Infeasible)) => {
            EXIT_INFEASIBLE
        }
        Failure::Error(Error::Config(_)) => EXIT_CONFIG,
        Failure::Error(_) => EXIT_PIPELINE,
    }
}

/// Field, grouping and block-size settings after merging flags, file and defaults.
#[derive(Clone, Debug)]
pub struct ResolvedField {
    pub spec: FieldSpec,
    pub mode: GroupingMode,
    pub block_size: BlockSize,
}

fn resolve_field(args: &FieldArgs, cfg: &RunConfig) -> Result<ResolvedField, Error> {
    let d = args.d.or(cfg.d).unwrap_or(DEFAULT_D);
    let k = args.k.or(cfg.k).unwrap_or(DEFAULT_K);
    let spec = match args.poly.or(cfg.poly) {
        Some(poly) => FieldSpec::with_polynomial(k, poly, d),
        None => FieldSpec::new(k, d),
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    let mode = match args.mode.or(cfg.mode).unwrap_or(ModeArg::Strict) {
        ModeArg::Strict => {
            strict_width(k, d).map_err(|e| Error::Config(e.to_string()))?;
            GroupingMode::Strict
        }
        ModeArg::Alpha => {
            let alpha = args.alpha.or(cfg.alpha).unwrap_or(DEFAULT_ALPHA);
            if !alpha.is_finite() || alpha < 1.0 {
                return Err(Error::Config(format!("alpha = {alpha} must be at least 1")));
            }
            GroupingMode::AlphaBounded { alpha }
        }
    };
    let n = match (&args.n, &cfg.n) {
        (Some(text), _) => NValue::Text(text.clone()),
        (None, Some(v)) => v.clone(),
        (None, None) => NValue::Text("auto".into()),
    };
    let block_size = match n {
        NValue::Num(n) => BlockSize::Fixed(n),
        NValue::Text(t) if t == "auto" => BlockSize::Auto,
        NValue::Text(t) => BlockSize::Fixed(
            t.parse()
                .map_err(|_| Error::Config(format!("n must be a number or \"auto\", got {t:?}")))?,
        ),
    };
    if let BlockSize::Fixed(n) = block_size {
        let max = (1u64 << k) - 1;
        if n == 0 || n as u64 > max {
            return Err(Error::Config(format!(
                "n = {n} outside 1..={max} for k = {k}"
            )));
        }
    }
    if block_size == BlockSize::Auto && mode != GroupingMode::Strict {
        return Err(Error::Config(
            "n = auto requires strict mode; pass --n".into(),
        ));
    }
    Ok(ResolvedField {
        spec,
        mode,
        block_size,
    })
}

fn resolve_profile(args: &SecurityArgs, cfg: &RunConfig) -> Result<SecurityProfile, Error> {
    let breach = args
        .breach
        .clone()
        .or_else(|| cfg.breach.clone())
        .ok_or_else(|| Error::Config("--breach is required".into()))?;
    let pu = args
        .pu
        .or(cfg.pu)
        .ok_or_else(|| Error::Config("--pu is required".into()))?;
    SecurityProfile::new(breach, pu).map_err(|e| Error::Config(e.to_string()))
}

/// Reads the message; returns its digits and, for file input, its byte length.
fn read_input(
    args: &InputArgs,
    cfg: &RunConfig,
    d: u32,
) -> Result<(DigitString, Option<u64>), Error> {
    if let Some(text) = args
        .digits
        .as_ref()
        .or(cfg.digits.as_ref())
        .filter(|_| args.input.is_none())
    {
        return Ok((DigitString::parse(d, text)?, None));
    }
    let path = args
        .input
        .as_ref()
        .or(cfg.input.as_ref())
        .ok_or_else(|| Error::Config("--in or --digits is required".into()))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((
        DigitString::from_bytes(&bytes, d)?,
        Some(bytes.len() as u64),
    ))
}

fn emit(out: Option<&Path>, data: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, data).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data)
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable output");
    v.push(b'\n');
    v
}

/// Machine-readable summary printed by `plan`.
#[derive(Debug, Serialize)]
pub struct PlanReport<'a> {
    pub grouping: &'a crate::codec::GroupingPlan,
    pub points: Vec<u16>,
    pub cost: Option<crate::optimizer::CostSolution>,
    pub secret_digits: usize,
    pub total_digits: u64,
    pub caps: &'a [u64],
    pub stored: Vec<u64>,
    pub local: u64,
    pub guess_prob: &'a [f64],
    #[serde(rename = "Pu")]
    pub pu: f64,
    pub meets_budget: bool,
}

impl<'a> PlanReport<'a> {
    pub fn new(prep: &'a pipeline::Prepared) -> Self {
        let plan = &prep.plan;
        Self {
            grouping: &prep.message.grouping,
            points: prep.message.matrix.points().iter().map(|p| p.0).collect(),
            cost: prep.cost,
            secret_digits: prep.secret_digits,
            total_digits: plan.total_digits,
            caps: &plan.caps,
            stored: (0..plan.p()).map(|i| plan.stored(i)).collect(),
            local: plan.local_count(),
            guess_prob: &plan.guess_prob,
            pu: plan.pu,
            meets_budget: plan.meets_budget(),
        }
    }
}

fn prepare_from(
    input: &InputArgs,
    field: &FieldArgs,
    security: &SecurityArgs,
    cfg: &RunConfig,
) -> Result<(pipeline::Prepared, PipelineRequest, Option<u64>), Error> {
    let resolved = resolve_field(field, cfg)?;
    let profile = resolve_profile(security, cfg)?;
    let (digits, source_bytes) = read_input(input, cfg, resolved.spec.d())?;
    let req = PipelineRequest {
        spec: resolved.spec,
        mode: resolved.mode,
        block_size: resolved.block_size,
        profile,
        secret_digits: security.w.or(cfg.w).unwrap_or(0),
        parallel: false,
    };
    let prep = pipeline::prepare(&digits, &req)?;
    Ok((prep, req, source_bytes))
}

fn cmd_plan(args: &PipelineArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let (prep, _, _) = prepare_from(&args.input, &args.field, &args.security, cfg)?;
    let report = PlanReport::new(&prep);
    emit(
        args.out.as_deref().or(cfg.out.as_deref()),
        &json_line(&report),
    )?;
    if !report.meets_budget {
        return Err(Failure::Infeasible(
            "no placement meets the budget Pu".into(),
        ));
    }
    Ok(())
}

fn cmd_store(args: &PipelineArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let (prep, req, source_bytes) = prepare_from(&args.input, &args.field, &args.security, cfg)?;
    if !prep.plan.meets_budget() {
        return Err(Failure::Infeasible(
            "no placement meets the budget Pu; nothing stored".into(),
        ));
    }
    let root = args
        .root
        .clone()
        .or_else(|| cfg.root.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT));
    let backends = Backends::directory(&root, prep.plan.p());
    let manifest = pipeline::store(&prep, &req.profile, &backends, source_bytes)?;
    let summary = serde_json::json!({
        "manifest": root.join(crate::storage::MANIFEST_KEY),
        "total_digits": manifest.total_digits,
        "clouds": manifest.clouds.iter().map(|c| c.digit_count).collect::<Vec<_>>(),
        "local": manifest.local.digit_count,
    });
    emit(
        args.out.as_deref().or(cfg.out.as_deref()),
        &json_line(&summary),
    )?;
    Ok(())
}

fn backends_for_manifest(args: &RecoverArgs, cfg: &RunConfig) -> Result<Backends, Error> {
    let path = args
        .manifest
        .clone()
        .or_else(|| cfg.manifest.clone())
        .or_else(|| {
            cfg.root
                .as_ref()
                .map(|r| r.join(crate::storage::MANIFEST_KEY))
        })
        .ok_or_else(|| Error::Config("--manifest is required".into()))?;
    let data = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = crate::storage::Manifest::from_json(&data)?;
    let root = path.parent().unwrap_or(Path::new("."));
    let mut backends = Backends::directory(root, manifest.clouds.len());
    backends.meta = Box::new(crate::storage::DirBackend::new(root));
    Ok(backends)
}

fn cmd_fetch(args: &RecoverArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let backends = backends_for_manifest(args, cfg)?;
    let bytes = pipeline::recover_bytes(&backends)?;
    let out = args
        .out
        .as_deref()
        .or(cfg.out.as_deref())
        .ok_or_else(|| config_err("--out is required"))?;
    emit(Some(out), &bytes)?;
    Ok(())
}

fn cmd_decode(args: &RecoverArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let backends = backends_for_manifest(args, cfg)?;
    let (_, digits) = pipeline::recover(&backends)?;
    let mut text = digits.to_string().into_bytes();
    text.push(b'\n');
    emit(args.out.as_deref().or(cfg.out.as_deref()), &text)?;
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let resolved = resolve_field(&args.field, cfg)?;
    // no profile given: one fully trusted cloud, so every element is assigned
    let security_given = args.security.breach.is_some() || cfg.breach.is_some();
    let profile = if security_given {
        resolve_profile(&args.security, cfg)?
    } else {
        SecurityProfile::new(vec![1.0], 1.0)?
    };
    let (digits, _) = read_input(&args.input, cfg, resolved.spec.d())?;
    let req = PipelineRequest {
        spec: resolved.spec,
        mode: resolved.mode,
        block_size: resolved.block_size,
        profile,
        secret_digits: args.security.w.or(cfg.w).unwrap_or(0),
        parallel: false,
    };
    let prep = pipeline::prepare(&digits, &req)?;
    let alpha = args
        .test_alpha
        .unwrap_or(resolved.mode.alpha().unwrap_or(1.0));
    let (summary, _) = pipeline::classify_message(&prep.message, &prep.plan, alpha)?;
    emit(
        args.out.as_deref().or(cfg.out.as_deref()),
        &json_line(&summary),
    )?;
    Ok(())
}

fn cmd_optimize(args: &OptimizeArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let d = args.d.or(cfg.d).unwrap_or(DEFAULT_D);
    let k = args.k.or(cfg.k).unwrap_or(DEFAULT_K);
    let breach = args
        .breach
        .clone()
        .or_else(|| cfg.breach.clone())
        .ok_or_else(|| config_err("--breach is required"))?;
    let q = breach.iter().copied().fold(f64::NAN, f64::max);
    let p = args.p.or(cfg.p).unwrap_or(breach.len() as u32);
    let pu = args
        .pu
        .or(cfg.pu)
        .ok_or_else(|| config_err("--pu is required"))?;
    let out = args.out.as_deref().or(cfg.out.as_deref());
    let problem = |m| CostProblem::new(m, d, k, p, q, pu).map_err(|e| config_err(e.to_string()));
    if let Some(ms) = &args.sweep {
        let problems = ms
            .iter()
            .map(|&m| problem(m))
            .collect::<Result<Vec<_>, _>>()?;
        let mut buf = Vec::new();
        write_sweep_csv(&problems, &mut buf)?;
        emit(out, &buf)?;
        return Ok(());
    }
    let m = args
        .m
        .or(cfg.m)
        .ok_or_else(|| config_err("--m or --sweep is required"))?;
    let sol = solve_cost(&problem(m)?)?;
    emit(out, format!("{sol}\n").as_bytes())?;
    Ok(())
}

fn cmd_attack(args: &AttackArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let (prep, req, _) = prepare_from(&args.input, &args.field, &args.security, cfg)?;
    let target_text = args
        .target
        .clone()
        .or_else(|| cfg.target.clone())
        .unwrap_or_else(|| "all".into());
    let target = if target_text == "all" {
        Target::All
    } else {
        Target::Cloud(target_text.parse().map_err(|_| {
            config_err(format!(
                "target must be a cloud index or \"all\", got {target_text:?}"
            ))
        })?)
    };
    let trials = args.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let scenario = AttackScenario::new(&prep.message, &prep.plan, target)?;
    let empirical = simulate_guess(&scenario, trials, seed)?;
    let breach = match target {
        Target::Cloud(i) => req.profile.breach()[i],
        Target::All => req.profile.breach().iter().copied().fold(0.0, f64::max),
    };
    let report = serde_json::json!({
        "target": target_text,
        "total_digits": scenario.total(),
        "observed": scenario.observed(),
        "unknown": scenario.unknown(),
        "trials": trials,
        "seed": seed,
        "empirical": empirical,
        "guessing_factor": scenario.guessing_factor(),
        "breach": breach,
        "predicted": breach * scenario.guessing_factor(),
    });
    emit(
        args.out.as_deref().or(cfg.out.as_deref()),
        &json_line(&report),
    )?;
    Ok(())
}

/// Every `(k <= 3, n <= 4, w <= n, t <= n)` point with contiguous selections
/// starting at component 0.
pub fn audit_grid() -> Result<Vec<AuditRow>, Error> {
    let mut rows = Vec::new();
    for k in 2..=3u32 {
        let field = Field::new(k)?;
        for n in 1..=4usize.min(field.size() as usize - 1) {
            let a = build_vandermonde(&field, &default_points(&field, n)?)?;
            for w in 0..=n {
                for t in 0..=n {
                    let sel = Selection::contiguous(0, t);
                    let rep = entropy_audit(&field, &a, w, &sel)?;
                    rows.push(AuditRow::new(&field, n, w, &sel, &rep));
                }
            }
        }
    }
    Ok(rows)
}

fn cmd_audit(args: &AuditArgs, _cfg: &RunConfig) -> Result<(), Failure> {
    let rows = if args.grid {
        audit_grid()?
    } else {
        let k = args
            .k
            .ok_or_else(|| config_err("--k is required (or --grid)"))?;
        let n = args.n.ok_or_else(|| config_err("--n is required"))?;
        let w = args.w.ok_or_else(|| config_err("--w is required"))?;
        let field = Field::new(k).map_err(|e| config_err(e.to_string()))?;
        let a = build_vandermonde(
            &field,
            &default_points(&field, n).map_err(|e| config_err(e.to_string()))?,
        )?;
        let sel = match args.digit_base {
            Some(d) => Selection::leading_digits_hidden(d, Rendering::Minimal, w),
            None => {
                let t = args.t.unwrap_or(n.saturating_sub(w));
                if args.start + t > n {
                    return Err(config_err(format!(
                        "components {}..{} exceed n = {n}",
                        args.start,
                        args.start + t
                    )));
                }
                Selection::contiguous(args.start, t)
            }
        };
        let rep = entropy_audit(&field, &a, w, &sel)?;
        vec![AuditRow::new(&field, n, w, &sel, &rep)]
    };
    let mut buf = Vec::new();
    write_audit_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let reps = args.reps.unwrap_or(crate::bench::MIN_REPS);
    let rows = match args.kind {
        BenchKind::Mul => {
            let ks = args.k.clone().unwrap_or_else(|| vec![8, 16]);
            bench_mul(&ks, args.mul_count.unwrap_or(DEFAULT_MUL_COUNT), seed, reps)?
        }
        BenchKind::Pipeline => {
            let ks = args.k.clone().unwrap_or_else(|| vec![DEFAULT_K]);
            let ns = args.n.clone().unwrap_or_else(|| vec![10, 50, 100, 200]);
            let p = args.p.or(cfg.p.map(|p| p as usize)).unwrap_or(2);
            let mode = match args.mode.or(cfg.mode).unwrap_or(ModeArg::Strict) {
                ModeArg::Strict => GroupingMode::Strict,
                ModeArg::Alpha => GroupingMode::AlphaBounded {
                    alpha: args.alpha.or(cfg.alpha).unwrap_or(5.0),
                },
            };
            let pcfg = PipelineConfig {
                d: args.d.or(cfg.d).unwrap_or(DEFAULT_D),
                reps,
                parallel: args.parallel,
                ..PipelineConfig::new(mode, p)
            };
            let file = synthetic_file(args.bytes.unwrap_or(DEFAULT_BENCH_BYTES), seed);
            bench_pipeline(&file, &ns, &ks, &pcfg)?
        }
    };
    let mut buf = Vec::new();
    write_bench_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Plan(a) => cmd_plan(a, &cfg),
        Command::Store(a) => cmd_store(a, &cfg),
        Command::Fetch(a) => cmd_fetch(a, &cfg),
        Command::Decode(a) => cmd_decode(a, &cfg),
        Command::Classify(a) => cmd_classify(a, &cfg),
        Command::Optimize(a) => cmd_optimize(a, &cfg),
        Command::Attack(a) => cmd_attack(a, &cfg),
        Command::Audit(a) => cmd_audit(a, &cfg),
        Command::Bench(a) => cmd_bench(a, &cfg),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let code = exit_code(&f);
            match f {
                Failure::Error(e) => eprintln!("error: {e}"),
                Failure::Infeasible(msg) => eprintln!("infeasible: {msg}"),
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_examples() {
        Cli::try_parse_from([
            "ncss", "store", "--in", "file", "--d", "2", "--k", "8", "--mode", "strict", "--pu",
            "1e-6", "--breach", "0.5,0.25", "--root", "./demo",
        ])
        .unwrap();
        Cli::try_parse_from([
            "ncss",
            "fetch",
            "--manifest",
            "./demo/manifest.json",
            "--out",
            "r",
        ])
        .unwrap();
        let cli = Cli::try_parse_from([
            "ncss", "optimize", "--m", "1024", "--d", "2", "--k", "8", "--p", "3", "--breach",
            "0.5", "--pu", "1e-6",
        ])
        .unwrap();
        let Command::Optimize(o) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(o.breach, Some(vec![0.5]));
    }

    #[test]
    fn flags_override_file_over_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"d": 4, "k": 8, "mode": "alpha", "alpha": 3.0, "n": 5}"#)
                .unwrap();
        let flags = FieldArgs {
            k: Some(16),
            ..FieldArgs::default()
        };
        let r = resolve_field(&flags, &cfg).unwrap();
        assert_eq!((r.spec.d(), r.spec.k()), (4, 16));
        assert_eq!(r.mode, GroupingMode::AlphaBounded { alpha: 3.0 });
        assert_eq!(r.block_size, BlockSize::Fixed(5));
        let r = resolve_field(&FieldArgs::default(), &RunConfig::default()).unwrap();
        assert_eq!(
            (r.spec.d(), r.spec.k(), r.block_size),
            (2, 8, BlockSize::Auto)
        );
    }

    #[test]
    fn config_problems_map_to_exit_2() {
        let bad = [
            FieldArgs {
                n: Some("300".into()),
                ..FieldArgs::default()
            },
            FieldArgs {
                d: Some(8),
                k: Some(4),
                ..FieldArgs::default()
            },
            FieldArgs {
                mode: Some(ModeArg::Alpha),
                ..FieldArgs::default()
            },
            FieldArgs {
                poly: Some(0x15),
                k: Some(4),
                ..FieldArgs::default()
            },
        ];
        for args in &bad {
            let err = resolve_field(args, &RunConfig::default()).unwrap_err();
            assert_eq!(exit_code(&Failure::Error(err)), EXIT_CONFIG, "{args:?}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"colour": 1}"#).is_err());
        assert_eq!(
            exit_code(&Failure::Error(Error::Optimizer(OptError::Infeasible))),
            EXIT_INFEASIBLE
        );
    }

    #[test]
    fn polynomial_parsing() {
        assert_eq!(parse_poly("0x11B"), Ok(0x11B));
        assert_eq!(parse_poly("283"), Ok(283));
        assert!(parse_poly("x").is_err());
    }
}
