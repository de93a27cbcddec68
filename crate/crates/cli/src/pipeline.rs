//! The compile pipeline: spec + model in, appended model + property file +
//! metadata out.

use std::fs;
use std::path::Path;

use serde::Serialize;

use robustify_core::confidence::{
    build_relaxed_negation, build_smooth_negation, build_standard_negation, build_strong_negation,
    delta_relaxed, delta_strong, deltas_smooth, relaxed_bounds, smooth_bounds, strong_bounds,
};
use robustify_core::eval::forward;
use robustify_core::topk::{
    build_affinity_negation, build_topk_negation, build_topk_relaxed_negation,
};
use robustify_core::vnnlib::{emit_query, parse_vnnlib};
use robustify_core::{
    append_circuit, compile, load_model, save_model, AffinityNegation, CircuitIR, Compiled,
    ConfidenceBounds, Formula, FormulaClass, InputBox, ModelGraph, PropertyKind, QueryProvenance,
    QuerySpec, SeedContext, TopKContext, VerificationQuery, DEFAULT_ETA,
};

use crate::spec::RobustnessSpec;
use crate::AppError;

#[derive(Debug, Clone, Serialize)]
pub struct FormulaSummary {
    pub root: String,
    pub shape: String,
    pub strictness: String,
    pub atoms: usize,
    pub depth: usize,
    pub clauses: usize,
}

impl FormulaSummary {
    pub fn of(f: &Formula) -> Self {
        let class: FormulaClass = f.classify();
        let clauses = match f {
            Formula::Atom(_) => 1,
            Formula::And(c) | Formula::Or(c) => c.len(),
        };
        FormulaSummary {
            root: format!("{:?}", class.root),
            shape: format!("{:?}", class.shape),
            strictness: format!("{:?}", class.strictness),
            atoms: f.atoms().len(),
            depth: f.depth(),
            clauses,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CircuitSummary {
    pub mode: String,
    pub affine_layers: usize,
    pub relu_stages: usize,
    pub neurons: usize,
    pub carry_neurons: usize,
    pub error_margin: Option<f64>,
}

impl CircuitSummary {
    fn of(c: &CircuitIR) -> Self {
        CircuitSummary {
            mode: format!("{:?}", c.meta.mode),
            affine_layers: c.layers.len(),
            relu_stages: c.relu_stages(),
            neurons: c.neuron_count(),
            carry_neurons: c.meta.carry_neurons,
            error_margin: c.meta.error_margin,
        }
    }
}

/// Everything a run records; serialized as the `.meta.json` artifact.
#[derive(Debug, Clone, Serialize)]
pub struct CompileMetadata {
    pub kind: String,
    pub model: String,
    pub spec: String,
    pub inputs: usize,
    pub outputs: usize,
    pub seed_class: Option<usize>,
    pub deltas: Vec<f64>,
    pub eta: f64,
    pub bounds: Option<ConfidenceBounds>,
    pub formula: Option<FormulaSummary>,
    pub circuit: Option<CircuitSummary>,
    pub assertion: Option<String>,
    pub guarantee: String,
    pub trivially_violated: bool,
    pub infeasible_approximation: bool,
    pub trivially_safe: bool,
    pub artifacts: ArtifactPaths,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactPaths {
    pub onnx: Option<String>,
    pub vnnlib: Option<String>,
    pub metadata: String,
}

pub struct CompileOutcome {
    pub metadata: CompileMetadata,
    pub warnings: Vec<String>,
}

pub(crate) struct BuiltProperty {
    pub(crate) formula: Option<Formula>,
    pub(crate) deltas: Vec<f64>,
    pub(crate) bounds: Option<ConfidenceBounds>,
    pub(crate) seed_class: Option<usize>,
    pub(crate) seed_confidence: Option<f64>,
    pub(crate) guarantee: String,
    pub(crate) trivially_violated: bool,
    pub(crate) infeasible: bool,
    pub(crate) trivially_safe: bool,
    /// Box parsed from a raw property file, when the spec carries one.
    raw_box: Option<InputBox>,
}

fn pct(v: f64) -> String {
    format!("{:.3}", v)
}

/// Resolve the seed logits: declared in the spec, or a forward pass of the
/// seed input through the model.
fn resolve_logits(
    spec: &RobustnessSpec,
    spec_dir: &Path,
    model: Option<&ModelGraph>,
) -> Result<Option<Vec<f64>>, AppError> {
    if let Some(l) = &spec.seed_logits {
        return Ok(Some(l.clone()));
    }
    let Some(model) = model else {
        return Ok(None);
    };
    let Some(x) = spec.seed_input(spec_dir)? else {
        return Ok(None);
    };
    match forward(model, &x) {
        Ok(logits) => Ok(Some(logits)),
        // evaluating the model is optional when the spec pins the class
        Err(robustify_core::Error::UnsupportedOp(_)) if spec.seed_class.is_some() => Ok(None),
        Err(e) => Err(AppError::model(format!("seed forward pass failed: {e}"))),
    }
}

fn seed_context(
    spec: &RobustnessSpec,
    logits: &Option<Vec<f64>>,
    m: usize,
) -> Result<(usize, Option<f64>, Option<SeedContext>), AppError> {
    if let Some(logits) = logits {
        if logits.len() != m {
            return Err(AppError::spec(format!(
                "seed logits have {} entries but the model has {m} outputs",
                logits.len()
            )));
        }
        let ctx = SeedContext::from_logits(logits).map_err(AppError::from_spec)?;
        ctx.check_declared(spec.seed_class, spec.seed_confidence)
            .map_err(AppError::from_spec)?;
        Ok((ctx.seed_class, Some(ctx.confidence), Some(ctx)))
    } else {
        let t = spec.seed_class.ok_or_else(|| {
            AppError::spec("no seed class: provide `seed_class`, `seed_logits`, or a seed input the model can evaluate")
        })?;
        if t >= m {
            return Err(AppError::spec(format!(
                "seed class {t} out of range for {m} outputs"
            )));
        }
        Ok((t, spec.seed_confidence, None))
    }
}

pub(crate) fn build_property(
    spec: &RobustnessSpec,
    spec_dir: &Path,
    model: Option<&ModelGraph>,
    m: usize,
    eta: f64,
) -> Result<BuiltProperty, AppError> {
    let mut built = BuiltProperty {
        formula: None,
        deltas: Vec::new(),
        bounds: None,
        seed_class: None,
        seed_confidence: None,
        guarantee: String::new(),
        trivially_violated: false,
        infeasible: false,
        trivially_safe: false,
        raw_box: None,
    };
    match spec.kind {
        PropertyKind::Standard => {
            let logits = resolve_logits(spec, spec_dir, model)?;
            let (t, _, _) = seed_context(spec, &logits, m)?;
            built.seed_class = Some(t);
            built.formula = Some(build_standard_negation(m, t).map_err(AppError::from_spec)?);
            built.guarantee = format!(
                "unsat: every input in the box keeps class {t} (ties resolved toward it); \
                 sat: the witness strictly prefers another class. Exact query."
            );
        }
        PropertyKind::Relaxed => {
            let tau = spec.require_tau()?;
            let delta = delta_relaxed(tau).map_err(AppError::from_spec)?;
            let logits = resolve_logits(spec, spec_dir, model)?;
            let (t, _, _) = seed_context(spec, &logits, m)?;
            let bounds = relaxed_bounds(delta, m).map_err(AppError::from_spec)?;
            built.guarantee = format!(
                "unsat: no misclassified input in the box has confidence >= {}%; \
                 sat: a misclassified witness exists with confidence >= {}% \
                 (atoms relaxed by at most {}).",
                pct(bounds.guaranteed_safe_threshold.unwrap()),
                pct(bounds.counterexample_floor.unwrap()),
                2.0 * eta
            );
            built.seed_class = Some(t);
            built.deltas = vec![delta];
            built.bounds = Some(bounds);
            built.formula = Some(build_relaxed_negation(m, t, delta).map_err(AppError::from_spec)?);
        }
        PropertyKind::Strong => {
            let tau2 = spec.require_tau2()?;
            let delta = delta_strong(tau2, m).map_err(AppError::from_spec)?;
            let logits = resolve_logits(spec, spec_dir, model)?;
            let (t, conf, _) = seed_context(spec, &logits, m)?;
            if let (Some(tau1), Some(c)) = (spec.tau1, conf) {
                // seed below the precondition threshold: property holds
                // vacuously, still emitted for uniform batch handling
                built.trivially_safe = c < tau1;
            }
            let bounds = strong_bounds(delta, m).map_err(AppError::from_spec)?;
            built.guarantee = format!(
                "unsat: every input in the box keeps class {t} with confidence > {}%; \
                 sat: some input is misclassified or its confidence drops to <= {}%.",
                pct(bounds.guaranteed_safe_threshold.unwrap()),
                pct(bounds.counterexample_ceiling.unwrap()),
            );
            built.seed_class = Some(t);
            built.deltas = vec![delta];
            built.bounds = Some(bounds);
            built.formula = Some(build_strong_negation(m, t, delta).map_err(AppError::from_spec)?);
        }
        PropertyKind::Smooth => {
            let tau = spec.require_tau()?;
            let logits = resolve_logits(spec, spec_dir, model)?;
            let (t, conf, _) = seed_context(spec, &logits, m)?;
            let c = conf.ok_or_else(|| {
                AppError::spec("smoothness needs the seed confidence: provide `seed_confidence`, `seed_logits`, or an evaluable seed input")
            })?;
            let d = deltas_smooth(c, tau, m).map_err(AppError::from_spec)?;
            built.infeasible = !d.feasible;
            let bounds = smooth_bounds(d.delta1, d.delta2, m).map_err(AppError::from_spec)?;
            built.guarantee = format!(
                "unsat: confidence of class {t} stays within +-{tau} of {}%; \
                 sat: some input pushes it to >= {}% or <= {}%.",
                pct(c),
                pct(bounds.counterexample_floor.unwrap()),
                pct(bounds.counterexample_ceiling.unwrap()),
            );
            built.seed_class = Some(t);
            built.seed_confidence = Some(c);
            built.deltas = vec![d.delta1, d.delta2];
            built.bounds = Some(bounds);
            built.formula =
                Some(build_smooth_negation(m, t, d.delta1, d.delta2).map_err(AppError::from_spec)?);
        }
        PropertyKind::Topk | PropertyKind::TopkRelaxed | PropertyKind::TopkAffinity => {
            let logits = resolve_logits(spec, spec_dir, model)?
                .ok_or_else(|| AppError::spec("top-k properties need seed logits (provide `seed_logits` or an evaluable seed input)"))?;
            if logits.len() != m {
                return Err(AppError::spec(format!(
                    "seed logits have {} entries but the model has {m} outputs",
                    logits.len()
                )));
            }
            let k_max = match spec.kind {
                PropertyKind::Topk => spec.require_k()?,
                _ => spec.require_k_max()?,
            };
            let sets = if spec.kind == PropertyKind::TopkAffinity {
                Some(spec.affinity_sets()?)
            } else {
                None
            };
            let ctx = TopKContext::new(logits, k_max, sets).map_err(AppError::from_spec)?;
            match spec.kind {
                PropertyKind::Topk => {
                    let k = spec.require_k()?;
                    built.formula =
                        Some(build_topk_negation(&ctx, k).map_err(AppError::from_spec)?);
                    built.guarantee = format!(
                        "unsat: the top-{k} class set never changes inside the box. Exact query."
                    );
                }
                PropertyKind::TopkRelaxed => {
                    built.formula =
                        Some(build_topk_relaxed_negation(&ctx).map_err(AppError::from_spec)?);
                    built.guarantee = format!(
                        "unsat: for every input in the box some rank r <= {k_max} keeps its \
                         top-r class set (atoms relaxed by at most {}).",
                        2.0 * eta
                    );
                }
                PropertyKind::TopkAffinity => {
                    match build_affinity_negation(&ctx).map_err(AppError::from_spec)? {
                        AffinityNegation::Formula(f) => {
                            built.formula = Some(f);
                            built.guarantee = format!(
                                "unsat: for every input in the box some pair (r, S) with the \
                                 seed top-r set inside S keeps its top-r set (atoms relaxed \
                                 by at most {}).",
                                2.0 * eta
                            );
                        }
                        AffinityNegation::TriviallyViolated => {
                            built.trivially_violated = true;
                            built.guarantee =
                                "no affinity set contains any seed top-r set: the property is \
                                 violated by the seed input itself; nothing to verify."
                                    .to_string();
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        PropertyKind::RawVnnlib => {
            let rel = spec
                .vnnlib
                .as_ref()
                .ok_or_else(|| AppError::spec("kind `raw_vnnlib` needs a `vnnlib` file path"))?;
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                spec_dir.join(rel)
            };
            let text = fs::read_to_string(&path)
                .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", path.display())))?;
            let (input_box, formula) = parse_vnnlib(&text).map_err(AppError::from_spec)?;
            built.guarantee = format!(
                "unsat: the property file's post-condition negation is unreachable in the box \
                 (atoms relaxed by at most {}).",
                2.0 * eta
            );
            built.raw_box = Some(input_box);
            built.formula = Some(formula);
        }
    }
    Ok(built)
}

fn resolve_box(
    spec: &RobustnessSpec,
    spec_dir: &Path,
    built: &BuiltProperty,
    n: usize,
) -> Result<InputBox, AppError> {
    if let Some(b) = &built.raw_box {
        if b.dim() != n {
            return Err(AppError::spec(format!(
                "property file bounds {} inputs but the model has {n}",
                b.dim()
            )));
        }
        return Ok(b.clone());
    }
    if let Some(b) = &spec.input_box {
        let bx = InputBox::new(b.lower.clone(), b.upper.clone()).map_err(AppError::from_spec)?;
        if bx.dim() != n {
            return Err(AppError::spec(format!(
                "input_box has {} entries but the model has {n} inputs",
                bx.dim()
            )));
        }
        return Ok(bx);
    }
    let x = spec.seed_input(spec_dir)?.ok_or_else(|| {
        AppError::spec("no pre-condition: provide `input_box` or `seed_input`(+`epsilon`)")
    })?;
    if x.len() != n {
        return Err(AppError::spec(format!(
            "seed input has {} entries but the model has {n} inputs",
            x.len()
        )));
    }
    let eps = spec
        .epsilon
        .ok_or_else(|| AppError::spec("`seed_input` needs an `epsilon` radius"))?;
    InputBox::around(&x, eps, spec.input_clip).map_err(AppError::from_spec)
}

/// Compile one (model, spec) pair into `outdir`.
pub fn compile_one(
    model_path: &Path,
    spec_path: &Path,
    outdir: &Path,
    eta_override: Option<f64>,
) -> Result<CompileOutcome, AppError> {
    let bytes = fs::read(model_path)
        .map_err(|e| AppError::model(format!("cannot read `{}`: {e}", model_path.display())))?;
    let model = load_model(&bytes).map_err(AppError::from_model)?;
    let m = model.output_arity().map_err(AppError::from_model)?;
    let n = model.input_arity().map_err(AppError::from_model)?;

    let spec = RobustnessSpec::load(spec_path)?;
    let spec_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let eta = eta_override.or(spec.eta).unwrap_or(DEFAULT_ETA);

    let built = build_property(&spec, spec_dir, Some(&model), m, eta)?;
    let input_box = resolve_box(&spec, spec_dir, &built, n)?;

    let stem = spec_path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "property".to_string());
    fs::create_dir_all(outdir)
        .map_err(|e| AppError::spec(format!("cannot create `{}`: {e}", outdir.display())))?;
    let meta_path = outdir.join(format!("{stem}.meta.json"));

    let mut warnings = Vec::new();
    if built.trivially_safe {
        warnings.push(
            "seed confidence is below tau1: the property holds vacuously for this seed".to_string(),
        );
    }
    if built.infeasible {
        warnings.push(
            "smoothness margins are infeasible (delta2 >= delta1): the approximation cannot \
             certify this window; the emitted query is inconclusive"
                .to_string(),
        );
    }

    let mut metadata = CompileMetadata {
        kind: spec.kind.as_str().to_string(),
        model: model_path.display().to_string(),
        spec: spec_path.display().to_string(),
        inputs: n,
        outputs: m,
        seed_class: built.seed_class,
        deltas: built.deltas.clone(),
        eta,
        bounds: built.bounds.clone(),
        formula: None,
        circuit: None,
        assertion: None,
        guarantee: built.guarantee.clone(),
        trivially_violated: built.trivially_violated,
        infeasible_approximation: built.infeasible,
        trivially_safe: built.trivially_safe,
        artifacts: ArtifactPaths {
            onnx: None,
            vnnlib: None,
            metadata: meta_path.display().to_string(),
        },
    };

    if let Some(formula) = &built.formula {
        let Compiled { circuit, query } = compile(formula, m, eta).map_err(AppError::from_spec)?;
        let appended = append_circuit(&model, &circuit).map_err(AppError::from_model)?;

        let onnx_path = outdir.join(format!("{stem}.onnx"));
        fs::write(&onnx_path, save_model(&appended))
            .map_err(|e| AppError::model(format!("cannot write `{}`: {e}", onnx_path.display())))?;

        let vq = VerificationQuery {
            input_box,
            formula: formula.clone(),
            provenance: QueryProvenance {
                kind: spec.kind,
                deltas: built.deltas.clone(),
                eta,
                bounds: built.bounds.clone(),
                seed_class: built.seed_class,
                trivially_violated: false,
                infeasible_approximation: built.infeasible,
            },
        };
        vq.check_arity(m).map_err(AppError::from_spec)?;
        let vnnlib_path = outdir.join(format!("{stem}.vnnlib"));
        fs::write(&vnnlib_path, emit_query(&vq, &query)).map_err(|e| {
            AppError::spec(format!("cannot write `{}`: {e}", vnnlib_path.display()))
        })?;

        metadata.formula = Some(FormulaSummary::of(formula));
        metadata.circuit = Some(CircuitSummary::of(&circuit));
        metadata.assertion = Some(assertion_string(&query));
        metadata.artifacts.onnx = Some(onnx_path.display().to_string());
        metadata.artifacts.vnnlib = Some(vnnlib_path.display().to_string());
    } else {
        warnings.push(
            "trivially violated: no query emitted (the negated post-condition is vacuously true)"
                .to_string(),
        );
    }

    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    fs::write(&meta_path, json + "\n")
        .map_err(|e| AppError::spec(format!("cannot write `{}`: {e}", meta_path.display())))?;

    Ok(CompileOutcome { metadata, warnings })
}

pub fn assertion_string(query: &QuerySpec) -> String {
    format!(
        "(assert ({} Y_0 {}))",
        query.assert_cmp.symbol(),
        query.threshold
    )
}
