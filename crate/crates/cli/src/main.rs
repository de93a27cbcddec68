//! `robustify`: compile robustness properties into appended network layers
//! plus a trivial scalar query, evaluate models, and run the numeric
//! validators.

mod pipeline;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use robustify_core::eval::{argmax, confidence, forward};
use robustify_core::validate::{
    validate_confidence_claims, validate_error_bound, validate_random_sweep, validate_soundness,
    ValidationReport,
};
use robustify_core::vnnlib::parse_vnnlib;
use robustify_core::{load_model, Formula, PropertyKind, Shape};

use pipeline::{compile_one, FormulaSummary};
use spec::{parse_float_list, RobustnessSpec};

/// Exit codes: 0 success, 2 spec error, 3 model error, 4 inconclusive
/// warning escalated under --strict.
#[derive(Debug)]
pub struct AppError {
    pub code: u8,
    pub message: String,
}

impl AppError {
    pub fn spec(message: impl Into<String>) -> Self {
        AppError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn model(message: impl Into<String>) -> Self {
        AppError {
            code: 3,
            message: message.into(),
        }
    }

    pub fn from_spec(e: robustify_core::Error) -> Self {
        AppError::spec(e.to_string())
    }

    pub fn from_model(e: robustify_core::Error) -> Self {
        AppError::model(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "robustify",
    version,
    about = "Compile rich robustness properties into appended network layers with a trivial scalar query"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile (model, spec) pairs into appended ONNX + property + metadata.
    Compile(CompileArgs),
    /// Run sampling validators (margin claims, encoding soundness, slack bound).
    Validate(ValidateArgs),
    /// Forward-evaluate a model on one input; print logits and confidences.
    Eval(EvalArgs),
    /// Summarize a model, property file, or spec.
    Info(InfoArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// ONNX model to append onto.
    #[arg(short, long)]
    model: PathBuf,
    /// Property spec file(s); each compiles independently.
    #[arg(short = 'p', long = "property", required = true)]
    properties: Vec<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Encoding slack override (default 1e-4, floor 1e-7).
    #[arg(long)]
    eta: Option<f64>,
    /// Escalate inconclusive-approximation warnings to exit code 4.
    #[arg(long)]
    strict: bool,
    /// Compile independent spec files concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ValidateArgs {
    /// Validate the margin claims on a threshold grid.
    #[arg(long)]
    claims: bool,
    /// Class count for --claims.
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Relaxed confidence threshold(s) for --claims.
    #[arg(long)]
    tau: Vec<f64>,
    /// Strong confidence threshold(s) for --claims.
    #[arg(long)]
    tau2: Vec<f64>,
    /// Smoothness seed confidence (paired with --smooth-tau).
    #[arg(long)]
    smooth_c: Vec<f64>,
    /// Smoothness variation bound (paired with --smooth-c).
    #[arg(long)]
    smooth_tau: Vec<f64>,
    /// Validate the encoding on the post-condition of a property file.
    #[arg(long)]
    vnnlib: Option<PathBuf>,
    /// Validate the property built from a spec file (kind claims plus
    /// encoding soundness and, where stated, the slack bound).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Model used to resolve seed logits for --spec (optional if the spec
    /// carries `seed_logits`).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Validate the encoding on randomly generated formulas.
    #[arg(long)]
    sweep: bool,
    /// Number of random formulas for --sweep.
    #[arg(long, default_value_t = 100)]
    formulas: usize,
    /// Encoding slack for --vnnlib/--sweep.
    #[arg(long, default_value_t = robustify_core::DEFAULT_ETA)]
    eta: f64,
    /// Samples per validator cell (or points per formula).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// RNG seed; defaults to ROBUSTIFY_SEED or 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit the reports as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// ONNX model to evaluate.
    #[arg(short, long)]
    model: PathBuf,
    /// Input vector file (whitespace/comma-separated floats).
    #[arg(short = 'x', long)]
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InfoArgs {
    /// A .onnx model, .vnnlib property, or .json spec.
    path: PathBuf,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(args) => cmd_compile(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Info(args) => cmd_info(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let payload = serde_json::json!({ "error": e.message, "exit_code": e.code });
            eprintln!("{payload}");
            ExitCode::from(e.code)
        }
    }
}

fn default_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| {
            std::env::var("ROBUSTIFY_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// compile
// ---------------------------------------------------------------------------

fn cmd_compile(args: CompileArgs) -> Result<ExitCode, AppError> {
    let jobs = args.jobs.max(1).min(args.properties.len().max(1));
    let n_specs = args.properties.len();
    let results: Vec<Option<Result<pipeline::CompileOutcome, AppError>>> = {
        let slots = Mutex::new((0..n_specs).map(|_| None).collect::<Vec<_>>());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n_specs {
                        break;
                    }
                    let outcome =
                        compile_one(&args.model, &args.properties[i], &args.out, args.eta);
                    slots.lock().unwrap()[i] = Some(outcome);
                });
            }
        });
        slots.into_inner().unwrap()
    };

    let mut warned = false;
    for (path, slot) in args.properties.iter().zip(results) {
        let outcome = slot.expect("every slot filled")?;
        let meta = &outcome.metadata;
        let what = match (&meta.formula, &meta.assertion) {
            (Some(f), Some(a)) => format!(
                "{} atoms, {} shape, {} -> {}",
                f.atoms,
                f.shape,
                meta.circuit
                    .as_ref()
                    .map(|c| c.mode.clone())
                    .unwrap_or_default(),
                a
            ),
            _ => "no query emitted".to_string(),
        };
        println!("compiled {} [{}]: {what}", path.display(), meta.kind);
        for w in &outcome.warnings {
            warned = true;
            eprintln!("warning: {}: {w}", path.display());
        }
    }
    if warned && args.strict {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn print_reports(reports: &[ValidationReport], json: bool) -> Result<ExitCode, AppError> {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(reports).expect("reports serialize")
        );
    } else {
        for r in reports {
            println!(
                "{}: {} ({} samples, {} violations, max slack {:.3e}, tol {:.0e})",
                if r.passed { "pass" } else { "FAIL" },
                r.property,
                r.samples,
                r.violation_count,
                r.max_slack,
                r.tolerance
            );
            for w in &r.witnesses {
                println!("    witness {:?}: {}", w.point, w.detail);
            }
        }
    }
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(AppError::spec("validation reported violations"))
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, AppError> {
    let seed = default_seed(args.seed);
    let mut reports = Vec::new();

    if args.claims {
        let taus = if args.tau.is_empty() {
            vec![50.0, 60.0, 80.0, 90.0, 95.0, 99.0]
        } else {
            args.tau.clone()
        };
        let tau2s: Vec<f64> = if args.tau2.is_empty() {
            // in-range defaults for the chosen m
            [30.0, 35.0, 40.0]
                .into_iter()
                .filter(|&t| t >= 100.0 / args.m as f64)
                .collect()
        } else {
            args.tau2.clone()
        };
        let smooth: Vec<(f64, f64)> = if args.smooth_c.is_empty() {
            vec![(50.0, 10.0), (50.0, 25.0), (50.0, 40.0)]
        } else {
            if args.smooth_c.len() != args.smooth_tau.len() {
                return Err(AppError::spec("--smooth-c and --smooth-tau must pair up"));
            }
            args.smooth_c
                .iter()
                .copied()
                .zip(args.smooth_tau.iter().copied())
                .collect()
        };
        reports.extend(
            validate_confidence_claims(args.m, &taus, &tau2s, &smooth, args.samples, seed)
                .map_err(AppError::from_spec)?,
        );
    }

    if let Some(path) = &args.vnnlib {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", path.display())))?;
        let (_, formula) = parse_vnnlib(&text).map_err(AppError::from_spec)?;
        let arity = formula.arity();
        reports.push(
            validate_soundness(&formula, arity, args.eta, args.samples, seed)
                .map_err(AppError::from_spec)?,
        );
        if formula.classify().shape != Shape::General {
            reports.push(
                validate_error_bound(&formula, arity, args.eta, args.samples, seed)
                    .map_err(AppError::from_spec)?,
            );
        }
    }

    if let Some(spec_path) = &args.spec {
        reports.extend(validate_spec(
            spec_path,
            args.model.as_deref(),
            &args,
            seed,
        )?);
    }

    if args.sweep {
        let points = args.samples.clamp(100, 10_000);
        reports.push(
            validate_random_sweep(args.formulas, points, args.eta, seed)
                .map_err(AppError::from_spec)?,
        );
    }

    if reports.is_empty() {
        return Err(AppError::spec(
            "nothing to validate: pass --claims, --vnnlib <file>, --spec <file>, or --sweep",
        ));
    }
    print_reports(&reports, args.json)
}

/// Build the property a spec describes and validate it: the kind's margin
/// claims where applicable, encoding soundness, and the slack bound on
/// CNF/DNF shapes.
fn validate_spec(
    spec_path: &Path,
    model_path: Option<&Path>,
    args: &ValidateArgs,
    seed: u64,
) -> Result<Vec<ValidationReport>, AppError> {
    use robustify_core::validate::{
        validate_claim_relaxed, validate_claim_smooth, validate_claim_strong,
    };

    let spec = RobustnessSpec::load(spec_path)?;
    let spec_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let model = match model_path {
        Some(p) => {
            let bytes = std::fs::read(p)
                .map_err(|e| AppError::model(format!("cannot read `{}`: {e}", p.display())))?;
            Some(robustify_core::load_model(&bytes).map_err(AppError::from_model)?)
        }
        None => None,
    };
    let m = match (&model, &spec.seed_logits) {
        (Some(g), _) => g.output_arity().map_err(AppError::from_model)?,
        (None, Some(logits)) => logits.len(),
        (None, None) => {
            return Err(AppError::spec(
                "--spec validation needs --model or inline `seed_logits`",
            ))
        }
    };
    let eta = args.eta;
    let built = pipeline::build_property(&spec, spec_dir, model.as_ref(), m, eta)?;

    let mut reports = Vec::new();
    match spec.kind {
        PropertyKind::Relaxed => {
            reports.push(validate_claim_relaxed(
                m,
                built.deltas[0],
                args.samples,
                seed,
            ));
        }
        PropertyKind::Strong => {
            reports.push(validate_claim_strong(
                m,
                built.deltas[0],
                args.samples,
                seed,
            ));
        }
        PropertyKind::Smooth => {
            let c = built.seed_confidence.expect("smooth resolves a confidence");
            let tau = spec.tau.expect("smooth requires tau");
            reports.push(
                validate_claim_smooth(m, c, tau, args.samples, seed)
                    .map_err(AppError::from_spec)?,
            );
        }
        _ => {}
    }
    if let Some(f) = &built.formula {
        let points = args.samples.clamp(100, 100_000);
        reports.push(validate_soundness(f, m, eta, points, seed).map_err(AppError::from_spec)?);
        if f.classify().shape != Shape::General {
            reports
                .push(validate_error_bound(f, m, eta, points, seed).map_err(AppError::from_spec)?);
        }
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, AppError> {
    let bytes = std::fs::read(&args.model)
        .map_err(|e| AppError::model(format!("cannot read `{}`: {e}", args.model.display())))?;
    let model = load_model(&bytes).map_err(AppError::from_model)?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", args.input.display())))?;
    let x = parse_float_list(&text).map_err(AppError::spec)?;
    let logits = forward(&model, &x).map_err(AppError::from_model)?;
    let top = argmax(&logits);
    let confidences: Vec<f64> = (0..logits.len())
        .map(|c| confidence(&logits, c).expect("finite logits"))
        .collect();
    if args.json {
        let payload = serde_json::json!({
            "logits": logits,
            "argmax": top,
            "confidence": confidences,
        });
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        println!("logits:     {logits:?}");
        println!("argmax:     {top}");
        println!(
            "confidence: [{}]",
            confidences
                .iter()
                .map(|c| format!("{c:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// info
// ---------------------------------------------------------------------------

fn cmd_info(args: InfoArgs) -> Result<ExitCode, AppError> {
    let ext = args
        .path
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let payload = match ext.as_str() {
        "onnx" => info_model(&args.path)?,
        "vnnlib" => info_vnnlib(&args.path)?,
        "json" => info_spec(&args.path)?,
        other => {
            return Err(AppError::spec(format!(
                "cannot summarize `.{other}` files (expected .onnx, .vnnlib, or .json)"
            )))
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        print_value("", &payload);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_value(indent: &str, value: &serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                match v {
                    serde_json::Value::Object(_) => {
                        println!("{indent}{k}:");
                        print_value(&format!("{indent}  "), v);
                    }
                    _ => println!("{indent}{k}: {v}"),
                }
            }
        }
        other => println!("{indent}{other}"),
    }
}

fn info_model(path: &Path) -> Result<serde_json::Value, AppError> {
    let bytes = std::fs::read(path)
        .map_err(|e| AppError::model(format!("cannot read `{}`: {e}", path.display())))?;
    let model = load_model(&bytes).map_err(AppError::from_model)?;
    let mut ops = std::collections::BTreeMap::<String, usize>::new();
    for node in &model.nodes {
        *ops.entry(node.op_type.clone()).or_insert(0) += 1;
    }
    let params: usize = model
        .initializers
        .iter()
        .map(|t| t.dims.iter().product::<u64>() as usize)
        .sum();
    Ok(serde_json::json!({
        "graph": model.graph_name,
        "opset": model.opset,
        "inputs": model.input_arity().map_err(AppError::from_model)?,
        "outputs": model.output_arity().map_err(AppError::from_model)?,
        "nodes": model.nodes.len(),
        "ops": ops,
        "initializers": model.initializers.len(),
        "parameters": params,
    }))
}

fn info_vnnlib(path: &Path) -> Result<serde_json::Value, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", path.display())))?;
    let (input_box, formula) = parse_vnnlib(&text).map_err(AppError::from_spec)?;
    Ok(serde_json::json!({
        "inputs": input_box.dim(),
        "formula": FormulaSummary::of(&formula),
    }))
}

fn info_spec(path: &Path) -> Result<serde_json::Value, AppError> {
    let spec = RobustnessSpec::load(path)?;
    let mut payload = serde_json::json!({
        "kind": spec.kind.as_str(),
        "tau": spec.tau,
        "tau2": spec.tau2,
        "k": spec.k,
        "K": spec.k_max,
        "eta": spec.eta,
    });
    // with inline seed logits the formula is buildable without a model
    if let Some(logits) = spec.seed_logits.clone() {
        let m = logits.len();
        let built: Option<Formula> = match spec.kind {
            PropertyKind::Topk => spec
                .k
                .and_then(|k| {
                    robustify_core::TopKContext::new(logits, k, None)
                        .ok()
                        .map(|ctx| (ctx, k))
                })
                .and_then(|(ctx, k)| robustify_core::topk::build_topk_negation(&ctx, k).ok()),
            PropertyKind::TopkRelaxed => spec
                .k_max
                .and_then(|km| robustify_core::TopKContext::new(logits, km, None).ok())
                .and_then(|ctx| robustify_core::topk::build_topk_relaxed_negation(&ctx).ok()),
            PropertyKind::Standard => {
                let t = argmax(&logits);
                robustify_core::confidence::build_standard_negation(m, t).ok()
            }
            PropertyKind::Relaxed => spec.tau.and_then(|tau| {
                let t = argmax(&logits);
                robustify_core::confidence::delta_relaxed(tau)
                    .and_then(|d| robustify_core::confidence::build_relaxed_negation(m, t, d))
                    .ok()
            }),
            _ => None,
        };
        if let Some(f) = built {
            payload["formula"] = serde_json::to_value(FormulaSummary::of(&f)).unwrap();
        }
    }
    Ok(payload)
}
