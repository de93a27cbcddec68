//! Sampling validators: every margin claim and encoding guarantee restated
//! as an executable check over randomized, boundary-stratified inputs.
//!
//! Reports are deterministic for a fixed seed. Tolerances follow a ladder:
//! 1e-12 where both sides share the same float computation, 1e-9 across
//! double-precision chains, 1e-6 once float32 storage is involved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::confidence::{deltas_smooth, relaxed_bounds, smooth_bounds, strong_bounds};
use crate::error::{Error, Result};
use crate::eval::{argmax, confidence, eval_circuit};
use crate::formula::{Formula, RootKind, Shape};
use crate::gadget::{compile_fast_path, compile_gadget, CircuitIR, Compiled, GateOp, QuerySpec};
use crate::sampling::{random_point, stratified_point};

pub const TOL_EXACT: f64 = 1e-12;
pub const TOL_F64: f64 = 1e-9;
pub const TOL_F32: f64 = 1e-6;

/// Default sampling box for logit-space validators.
pub const LOGIT_BOX: (f64, f64) = (-10.0, 10.0);

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub point: Vec<f64>,
    pub detail: String,
}

/// Outcome of one validator run; `passed` holds exactly when no violation
/// was observed.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub property: String,
    pub samples: u64,
    pub violation_count: u64,
    pub witnesses: Vec<Violation>,
    /// Largest observed signed slack; negative means the worst sample still
    /// had margin to spare.
    pub max_slack: f64,
    pub tolerance: f64,
    pub passed: bool,
}

struct Recorder {
    samples: u64,
    violation_count: u64,
    witnesses: Vec<Violation>,
    max_slack: f64,
    tolerance: f64,
}

impl Recorder {
    fn new(tolerance: f64) -> Self {
        Recorder {
            samples: 0,
            violation_count: 0,
            witnesses: Vec::new(),
            max_slack: f64::NEG_INFINITY,
            tolerance,
        }
    }

    /// Record a checked implication: `slack` is how far the required
    /// inequality was missed (positive beyond the tolerance = violation).
    fn observe(&mut self, slack: f64, point: &[f64], detail: impl FnOnce() -> String) {
        self.samples += 1;
        if slack > self.max_slack {
            self.max_slack = slack;
        }
        if slack > self.tolerance {
            self.violation_count += 1;
            if self.witnesses.len() < 5 {
                self.witnesses.push(Violation {
                    point: point.to_vec(),
                    detail: detail(),
                });
            }
        }
    }

    fn skip(&mut self) {
        self.samples += 1;
    }

    fn finish(self, property: impl Into<String>) -> ValidationReport {
        ValidationReport {
            property: property.into(),
            samples: self.samples,
            violation_count: self.violation_count,
            passed: self.violation_count == 0,
            witnesses: self.witnesses,
            max_slack: self.max_slack,
            tolerance: self.tolerance,
        }
    }
}

// ---------------------------------------------------------------------------
// encoding validators
// ---------------------------------------------------------------------------

/// Check the one-sided encoding guarantee on a compiled circuit: whenever the
/// formula holds at a point, a conjunctive root stays at or below the
/// threshold and a disjunctive root at or above it (strict variants
/// inclusive of the same tolerance). Lone atoms are checked in both
/// directions.
pub fn validate_soundness_circuit(
    f: &Formula,
    circuit: &CircuitIR,
    query: &QuerySpec,
    arity: usize,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = circuit.meta.eta;
    let mut rec = Recorder::new(TOL_F64);
    let atomic = matches!(f, Formula::Atom(_));
    for _ in 0..samples {
        let p = stratified_point(&mut rng, f, arity, eta.max(1e-6), LOGIT_BOX.0, LOGIT_BOX.1);
        let holds = f.eval_unchecked(&p);
        let y = eval_circuit(circuit, &p).expect("arity checked");
        if holds {
            // satisfied side must land on the asserted side of the threshold
            let slack = match circuit.meta.root_op {
                GateOp::And => y - query.threshold,
                GateOp::Or => query.threshold - y,
            };
            rec.observe(slack, &p, || {
                format!(
                    "formula holds but circuit value {y} is on the wrong side of {}",
                    query.threshold
                )
            });
        } else if atomic {
            // lone atoms are exact: the comparator may not claim the point
            let slack = match circuit.meta.root_op {
                GateOp::And => query.threshold - y,
                GateOp::Or => y - query.threshold,
            };
            rec.observe(slack, &p, || {
                format!(
                    "atom is false but circuit value {y} sits strictly inside the asserted side"
                )
            });
        } else {
            rec.skip();
        }
    }
    rec.finish(format!(
        "encoding soundness (eta={eta}, root={:?})",
        circuit.meta.root_op
    ))
}

/// Compile with the gadget and run [`validate_soundness_circuit`].
pub fn validate_soundness(
    f: &Formula,
    arity: usize,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let compiled = compile_gadget(f, arity, eta)?;
    Ok(validate_soundness_circuit(
        f,
        &compiled.circuit,
        &compiled.query,
        arity,
        samples,
        seed,
    ))
}

/// Check the counterexample slack bound: every sampled point on the asserted
/// side satisfies the formula with all atoms relaxed by `2*eta`. Stated for
/// CNF/DNF (and pure/atomic) shapes only.
pub fn validate_error_bound(
    f: &Formula,
    arity: usize,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let class = f.classify();
    if class.root != RootKind::Atomic && class.shape == Shape::General {
        return Err(Error::model(
            "the 2*eta slack bound is only stated for CNF/DNF shapes",
        ));
    }
    let compiled = compile_gadget(f, arity, eta)?;
    let relaxed = f.substitute_margin(2.0 * eta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(TOL_F64);
    for _ in 0..samples {
        let p = stratified_point(&mut rng, f, arity, eta, LOGIT_BOX.0, LOGIT_BOX.1);
        let y = eval_circuit(&compiled.circuit, &p).expect("arity checked");
        if compiled.query.asserted(y) {
            // how far the cheapest clause still overshoots after the 2*eta
            // relaxation; at most 0 when the relaxed formula holds
            let slack = relaxed.satisfaction_margin(&p);
            rec.observe(slack, &p, || {
                format!(
                    "asserted side (value {y}) but the 2*eta-relaxed formula misses by {slack:.3e}"
                )
            });
        } else {
            rec.skip();
        }
    }
    Ok(rec.finish(format!("counterexample slack bound (eta={eta})")))
}

/// Search for a point that violates the formula while satisfying its
/// `2*eta` relaxation: evidence that the slack bound is meaningfully tight.
///
/// Tries stratified samples first, then cyclic projections: one clause is
/// driven onto the `1.5*eta` slab (violated, but inside the relaxation)
/// while every other clause is pushed to whichever side keeps the point a
/// counterexample of the original formula and a model of the relaxed one.
pub fn find_slack_exhibit(
    f: &Formula,
    arity: usize,
    eta: f64,
    tries: usize,
    seed: u64,
) -> Option<Vec<f64>> {
    let relaxed = f.substitute_margin(2.0 * eta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let is_exhibit = |p: &[f64]| !f.eval_unchecked(p) && relaxed.eval_unchecked(p);
    for _ in 0..tries {
        let p = stratified_point(&mut rng, f, arity, eta, LOGIT_BOX.0, LOGIT_BOX.1);
        if is_exhibit(&p) {
            return Some(p);
        }
    }

    let project = |p: &mut [f64], expr: &crate::formula::LinearExpr, target: f64| {
        let norm_sq = expr.coeff_norm_sq();
        if norm_sq == 0.0 {
            return;
        }
        let shift = (target - expr.eval(p)) / norm_sq;
        for (v, c) in expr.coeffs() {
            p[v] += shift * c;
        }
    };
    let disjunctive = matches!(f, Formula::Or(_));
    let clauses: Vec<&Formula> = match f {
        Formula::And(children) | Formula::Or(children) => children.iter().collect(),
        atom => vec![atom],
    };
    for (ci, clause) in clauses.iter().enumerate() {
        for _ in 0..10 {
            let mut p = random_point(&mut rng, arity, -2.0, 2.0);
            for _ in 0..80 {
                // target clause sits just past its boundary, within 2*eta
                for a in clause.atoms() {
                    project(&mut p, &a.expr, 1.5 * eta);
                }
                for (oi, other) in clauses.iter().enumerate() {
                    if oi == ci {
                        continue;
                    }
                    if disjunctive {
                        // every other disjunct must stay violated: push its
                        // best-satisfied atom out when none is positive yet
                        if let Some(a) = other
                            .atoms()
                            .into_iter()
                            .max_by(|x, y| x.expr.eval(&p).partial_cmp(&y.expr.eval(&p)).unwrap())
                        {
                            if a.expr.eval(&p) <= 0.0 {
                                project(&mut p, &a.expr, 1.5 * eta);
                            }
                        }
                    } else {
                        // every other conjunct clause must hold outright:
                        // pull its closest atom clearly inside
                        if let Some(a) = other
                            .atoms()
                            .into_iter()
                            .min_by(|x, y| x.expr.eval(&p).partial_cmp(&y.expr.eval(&p)).unwrap())
                        {
                            if a.expr.eval(&p) > 0.0 {
                                project(&mut p, &a.expr, -1.5 * eta);
                            }
                        }
                    }
                }
            }
            if is_exhibit(&p) {
                return Some(p);
            }
        }
    }
    None
}

/// Soundness sweep over freshly generated random formulas (mixed strictness,
/// all shapes), aggregated into one report.
pub fn validate_random_sweep(
    n_formulas: usize,
    points_per_formula: usize,
    eta: f64,
    seed: u64,
) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = Recorder::new(TOL_F64);
    let mut samples = 0u64;
    for i in 0..n_formulas {
        let f = crate::sampling::random_formula(&mut rng, 4, 5, 6, 0.3);
        let r = validate_soundness(&f, 6, eta, points_per_formula, seed.wrapping_add(i as u64))?;
        samples += r.samples;
        if r.max_slack > total.max_slack {
            total.max_slack = r.max_slack;
        }
        total.violation_count += r.violation_count;
        for w in r.witnesses {
            if total.witnesses.len() < 5 {
                total.witnesses.push(w);
            }
        }
    }
    total.samples = samples;
    Ok(total.finish(format!(
        "encoding soundness sweep ({n_formulas} random formulas, eta={eta})"
    )))
}

/// Agreement of the exact fast path with the formula on stratified points,
/// boundary points included, at zero tolerance.
pub fn validate_fast_path(
    f: &Formula,
    arity: usize,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let Compiled { circuit, query } = compile_fast_path(f, arity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(0.0);
    for _ in 0..samples {
        let p = stratified_point(&mut rng, f, arity, 1e-6, LOGIT_BOX.0, LOGIT_BOX.1);
        let y = eval_circuit(&circuit, &p).expect("arity checked");
        let agree = query.asserted(y) == f.eval_unchecked(&p);
        rec.observe(if agree { -1.0 } else { 1.0 }, &p, || {
            format!("fast-path comparator disagrees with the formula (value {y})")
        });
    }
    Ok(rec.finish("fast path exactness"))
}

// ---------------------------------------------------------------------------
// confidence-claim validators
// ---------------------------------------------------------------------------

fn sample_logits_with_gap(rng: &mut ChaCha8Rng, m: usize, delta: f64) -> (Vec<f64>, usize) {
    let mut logits = random_point(rng, m, LOGIT_BOX.0, LOGIT_BOX.1);
    let t = rng.gen_range(0..m);
    if rng.gen_bool(0.7) {
        // place y_t at a controlled gap from the best competitor, clustering
        // around the margin where the claims bite
        let best_other = (0..m)
            .filter(|&i| i != t)
            .map(|i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = if rng.gen_bool(0.5) {
            rng.gen_range(-1.0..=1.0) * delta.abs().max(0.5)
        } else {
            rng.gen_range(-4.0..4.0)
        };
        logits[t] = best_other + gap;
    }
    (logits, t)
}

/// Margin claims for the relaxed encoding at margin `delta`: a sub-margin
/// winner has confidence below the derived threshold, and a super-margin
/// winner has confidence at least the floor.
pub fn validate_claim_relaxed(m: usize, delta: f64, samples: usize, seed: u64) -> ValidationReport {
    let bounds = relaxed_bounds(delta, m).expect("m >= 2");
    let tau = bounds.guaranteed_safe_threshold.unwrap();
    let floor = bounds.counterexample_floor.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(TOL_F64);
    for _ in 0..samples {
        let (logits, _) = sample_logits_with_gap(&mut rng, m, delta);
        let t = argmax(&logits);
        let second = (0..m)
            .filter(|&i| i != t)
            .map(|i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let conf = confidence(&logits, t).expect("finite");
        if logits[t] < second + delta {
            rec.observe(conf - tau, &logits, || {
                format!("gap below delta yet confidence {conf} reaches threshold {tau}")
            });
        } else {
            rec.observe(floor - conf, &logits, || {
                format!("gap at least delta yet confidence {conf} is under the floor {floor}")
            });
        }
    }
    rec.finish(format!("relaxed margins (m={m}, delta={delta:.6})"))
}

/// Margin claim for the strong encoding at margin `delta`: a strict
/// super-margin seed class is the argmax with confidence above the derived
/// threshold; otherwise confidence cannot exceed the ceiling.
pub fn validate_claim_strong(m: usize, delta: f64, samples: usize, seed: u64) -> ValidationReport {
    let bounds = strong_bounds(delta, m).expect("m >= 2");
    let tau2 = bounds.guaranteed_safe_threshold.unwrap();
    let ceiling = bounds.counterexample_ceiling.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(TOL_F64);
    for _ in 0..samples {
        let (logits, t) = sample_logits_with_gap(&mut rng, m, delta);
        let best_other = (0..m)
            .filter(|&i| i != t)
            .map(|i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let conf = confidence(&logits, t).expect("finite");
        if logits[t] > best_other + delta {
            let misclassified = argmax(&logits) != t;
            let slack = if misclassified { 1.0 } else { tau2 - conf };
            rec.observe(slack, &logits, || {
                format!("super-margin seed class: argmax mismatch or confidence {conf} <= {tau2}")
            });
        } else {
            rec.observe(conf - ceiling, &logits, || {
                format!("sub-margin seed class yet confidence {conf} exceeds ceiling {ceiling}")
            });
        }
    }
    rec.finish(format!("strong margins (m={m}, delta={delta:.6})"))
}

/// Two-sided smoothness claim for window `C +- tau`.
pub fn validate_claim_smooth(
    m: usize,
    c: f64,
    tau: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let d = deltas_smooth(c, tau, m)?;
    let bounds = smooth_bounds(d.delta1, d.delta2, m)?;
    let floor = bounds.counterexample_floor.unwrap();
    let ceiling = bounds.counterexample_ceiling.unwrap();
    let (tau1, tau2) = (c + tau, c - tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(TOL_F64);
    for _ in 0..samples {
        let (logits, t) = sample_logits_with_gap(&mut rng, m, d.delta1.abs().max(d.delta2.abs()));
        let best_other = (0..m)
            .filter(|&i| i != t)
            .map(|i| logits[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = logits[t] - best_other;
        let conf = confidence(&logits, t).expect("finite");
        if gap < d.delta1 && gap > d.delta2 {
            // inside the window: confidence stays within (tau2, tau1)
            let slack = (conf - tau1).max(tau2 - conf);
            rec.observe(slack, &logits, || {
                format!("in-window gap {gap} yet confidence {conf} leaves ({tau2}, {tau1})")
            });
        } else if gap >= d.delta1 {
            rec.observe(floor - conf, &logits, || {
                format!("gap above delta1 yet confidence {conf} is under the floor {floor}")
            });
        } else {
            rec.observe(conf - ceiling, &logits, || {
                format!("gap below delta2 yet confidence {conf} exceeds ceiling {ceiling}")
            });
        }
    }
    Ok(rec.finish(format!("smoothness margins (m={m}, C={c}, tau={tau})")))
}

/// Run the margin claims for every threshold cell, including a re-check with
/// each margin rounded through float32 (the precision the appended layers
/// are stored at).
pub fn validate_confidence_claims(
    m: usize,
    relaxed_taus: &[f64],
    strong_tau2s: &[f64],
    smooth_windows: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<Vec<ValidationReport>> {
    let mut reports = Vec::new();
    let mut sub_seed = seed;
    let mut next_seed = || {
        sub_seed = sub_seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        sub_seed
    };
    for &tau in relaxed_taus {
        let delta = crate::confidence::delta_relaxed(tau)?;
        reports.push(validate_claim_relaxed(m, delta, samples, next_seed()));
        let delta32 = f64::from(delta as f32);
        reports.push(validate_claim_relaxed(m, delta32, samples, next_seed()));
    }
    for &tau2 in strong_tau2s {
        let delta = crate::confidence::delta_strong(tau2, m)?;
        reports.push(validate_claim_strong(m, delta, samples, next_seed()));
        let delta32 = f64::from(delta as f32);
        reports.push(validate_claim_strong(m, delta32, samples, next_seed()));
    }
    for &(c, tau) in smooth_windows {
        reports.push(validate_claim_smooth(m, c, tau, samples, next_seed())?);
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
