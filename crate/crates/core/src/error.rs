//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- formulas ----
    #[error("negation is only supported on atomic constraints")]
    NegationNotAtomic,
    #[error("formula references output y{var} but only {arity} outputs are available")]
    ArityMismatch { var: usize, arity: usize },
    #[error("formula is not flattened: {0} node nested under a node of the same kind")]
    NotFlattened(&'static str),
    #[error("formula folded to the constant `{0}`; there is nothing to compile")]
    ConstantFormula(bool),

    // ---- confidence thresholds ----
    #[error("relaxed confidence threshold tau={tau} must satisfy 50 <= tau < 100")]
    RelaxedTauRange { tau: f64 },
    #[error("strong confidence threshold tau2={tau2} must satisfy 100/m <= tau2 < 100 for m={m} (the logit margin would be negative)")]
    StrongTauRange { tau2: f64, m: usize },
    #[error(
        "smoothness window invalid: need 0 < C - tau and C + tau < 100 (got C={c}, tau={tau})"
    )]
    SmoothWindow { c: f64, tau: f64 },
    #[error("class count m={0} must be at least 2")]
    ClassCount(usize),
    #[error("class index {class} out of range for {m} classes")]
    ClassIndex { class: usize, m: usize },
    #[error("declared seed class {given} does not match the argmax of the seed logits ({argmax})")]
    SeedClassMismatch { given: usize, argmax: usize },
    #[error(
        "declared seed confidence {given} disagrees with the seed logits (computed {computed})"
    )]
    SeedConfidenceMismatch { given: f64, computed: f64 },
    #[error("logits must be finite")]
    NonFiniteLogits,

    // ---- top-k ----
    #[error("rank k={k} out of range 1..={max}")]
    TopKRange { k: usize, max: usize },
    #[error("tie at the rank-{k} boundary of the seed logits; the top-{k} set is ill-defined")]
    TopKTie { k: usize },
    #[error("affinity set mentions class {class} but the network has {m} classes")]
    AffinityClassRange { class: usize, m: usize },
    #[error("no affinity sets were provided")]
    MissingAffinitySets,

    // ---- gadget compilation ----
    #[error("eta must be positive, got {0}")]
    EtaNotPositive(f64),
    #[error("eta={0} is below the 1e-7 floor; solvers cannot separate the query threshold at that scale")]
    EtaTooSmall(f64),
    #[error("fast path needs a pure conjunction of nonstrict atoms or a pure disjunction of strict atoms")]
    FastPathShape,

    // ---- model i/o ----
    #[error("onnx decode error at byte {offset}: {msg}")]
    OnnxDecode { offset: usize, msg: String },
    #[error("model error: {0}")]
    Model(String),
    #[error("op `{0}` is outside the evaluator subset (Gemm, MatMul, Add, Relu, Flatten)")]
    UnsupportedOp(String),
    #[error("vnnlib parse error at line {line}: {msg}")]
    VnnlibParse { line: usize, msg: String },
    #[error("input box error: {0}")]
    InputBox(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub(crate) fn vnnlib(line: usize, msg: impl Into<String>) -> Self {
        Error::VnnlibParse {
            line,
            msg: msg.into(),
        }
    }
}
