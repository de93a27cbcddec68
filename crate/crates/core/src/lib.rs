//! robustify-core: compile rich robustness post-conditions over a network's
//! outputs into a few appended affine/ReLU layers plus a trivial scalar
//! query, so that any off-the-shelf verifier can check them.
//!
//! The pieces, bottom up:
//!
//! - [`formula`]: the post-condition grammar (Boolean combinations of linear
//!   constraints) with normalization, classification and margin
//!   substitution.
//! - [`confidence`] / [`topk`]: builders that turn robustness variants
//!   (confidence-aware and top-k families) into negated post-conditions,
//!   with the margin arithmetic that makes softmax thresholds linear.
//! - [`gadget`]: lowering a formula into affine+ReLU stages with an exact
//!   fast path for pure shapes and a bounded-error general encoding.
//! - [`onnx`] / [`vnnlib`]: the two external formats, plus graph surgery to
//!   attach a compiled circuit after a model's output layer.
//! - [`eval`]: reference forward passes, softmax confidence and circuit
//!   evaluation.
//! - [`validate`]: sampling validators that re-check every margin claim and
//!   encoding guarantee numerically.

pub mod confidence;
pub mod error;
pub mod eval;
pub mod formula;
pub mod gadget;
pub mod onnx;
mod pb;
pub mod query;
pub mod sampling;
pub mod topk;
pub mod validate;
pub mod vnnlib;

pub use confidence::{ConfidenceBounds, SeedContext, SmoothDeltas};
pub use error::{Error, Result};
pub use formula::{
    Atom, Formula, FormulaClass, LinearExpr, Normalized, RawFormula, RawRelation, Relation,
    RootKind, Shape, Strictness,
};
pub use gadget::{
    b_value, compile, compile_fast_path, compile_gadget, expected_error_margin, AffineLayer,
    CircuitIR, CircuitMeta, Comparator, CompileMode, Compiled, GateOp, QuerySpec, DEFAULT_ETA,
};
pub use onnx::{append_circuit, build_mlp, load_model, save_model, ModelGraph};
pub use query::{InputBox, PropertyKind, QueryProvenance, VerificationQuery};
pub use topk::{AffinityNegation, TopKContext};
pub use validate::{ValidationReport, Violation};
