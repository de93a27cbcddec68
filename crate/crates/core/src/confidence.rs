//! Confidence-aware robustness: logit-margin thresholds that conservatively
//! encode softmax confidence levels, and the negated post-conditions built
//! from them.
//!
//! All thresholds are percents in (0, 100). A confidence threshold `tau`
//! maps to a logit margin `delta`; the encodings then only compare output
//! differences against `delta`, which keeps everything linear.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::confidence;
use crate::formula::{Atom, Formula, LinearExpr};

/// Seed-image context: class count, predicted class and its confidence.
#[derive(Debug, Clone)]
pub struct SeedContext {
    pub m: usize,
    pub seed_class: usize,
    /// Confidence of `seed_class` on the seed input, in percent.
    pub confidence: f64,
    pub seed_logits: Option<Vec<f64>>,
}

impl SeedContext {
    pub fn new(m: usize, seed_class: usize, confidence: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::ClassCount(m));
        }
        if seed_class >= m {
            return Err(Error::ClassIndex {
                class: seed_class,
                m,
            });
        }
        Ok(SeedContext {
            m,
            seed_class,
            confidence,
            seed_logits: None,
        })
    }

    /// Derive the context from seed logits: the class is the argmax and the
    /// confidence comes from the softmax.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLogits);
        }
        let m = logits.len();
        if m < 2 {
            return Err(Error::ClassCount(m));
        }
        let seed_class = argmax(logits);
        let conf = confidence(logits, seed_class)?;
        Ok(SeedContext {
            m,
            seed_class,
            confidence: conf,
            seed_logits: Some(logits.to_vec()),
        })
    }

    /// Cross-check a user-declared class/confidence against the logits.
    pub fn check_declared(&self, class: Option<usize>, conf: Option<f64>) -> Result<()> {
        if let Some(c) = class {
            if c != self.seed_class {
                return Err(Error::SeedClassMismatch {
                    given: c,
                    argmax: self.seed_class,
                });
            }
        }
        if let Some(c) = conf {
            if (c - self.confidence).abs() > 1e-9 {
                return Err(Error::SeedConfidenceMismatch {
                    given: c,
                    computed: self.confidence,
                });
            }
        }
        Ok(())
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Confidence guarantees attached to a compiled query.
///
/// For relaxed robustness `guaranteed_safe_threshold` is the level below
/// which a verified query rules out counterexamples, and
/// `counterexample_floor` is the least confidence any returned counterexample
/// can have. Strong robustness uses the ceiling instead; smoothness reports
/// both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceBounds {
    pub deltas: Vec<f64>,
    pub guaranteed_safe_threshold: Option<f64>,
    pub counterexample_floor: Option<f64>,
    pub counterexample_ceiling: Option<f64>,
    pub m: usize,
}

/// Margin for the relaxed property: `delta = -ln(100/tau - 1)`.
///
/// Requires `50 <= tau < 100` so the margin is nonnegative.
pub fn delta_relaxed(tau: f64) -> Result<f64> {
    if !(50.0..100.0).contains(&tau) {
        return Err(Error::RelaxedTauRange { tau });
    }
    Ok(-(100.0 / tau - 1.0).ln())
}

/// Guarantee pair for the relaxed encoding at margin `delta`.
pub fn relaxed_bounds(delta: f64, m: usize) -> Result<ConfidenceBounds> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    Ok(ConfidenceBounds {
        deltas: vec![delta],
        guaranteed_safe_threshold: Some(100.0 / (1.0 + (-delta).exp())),
        counterexample_floor: Some(100.0 / (1.0 + (m as f64 - 1.0) * (-delta).exp())),
        counterexample_ceiling: None,
        m,
    })
}

/// Negated relaxed post-condition: some class other than the seed class beats
/// every other logit by `delta`.
///
/// DNF with `m - 1` disjuncts of `m - 1` nonstrict atoms
/// `y_j - y_i + delta <= 0` each.
pub fn build_relaxed_negation(m: usize, seed_class: usize, delta: f64) -> Result<Formula> {
    check_class(m, seed_class)?;
    let disjuncts = (0..m)
        .filter(|&i| i != seed_class)
        .map(|i| {
            Formula::and(
                (0..m)
                    .filter(|&j| j != i)
                    .map(|j| Formula::Atom(Atom::le(LinearExpr::margin(j, i, delta))))
                    .collect(),
            )
        })
        .collect();
    Ok(Formula::or(disjuncts))
}

/// Margin for the strong property: `delta = -ln((100/tau2 - 1)/(m - 1))`.
///
/// Requires `100/m <= tau2 < 100` so the margin is nonnegative.
pub fn delta_strong(tau2: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    if tau2 < 100.0 / m as f64 || tau2 >= 100.0 {
        return Err(Error::StrongTauRange { tau2, m });
    }
    Ok(-((100.0 / tau2 - 1.0) / (m as f64 - 1.0)).ln())
}

/// Guarantee pair for the strong encoding at margin `delta`.
///
/// The safe threshold is recomputed from `delta`, so a user-supplied margin
/// reports the level it actually certifies.
pub fn strong_bounds(delta: f64, m: usize) -> Result<ConfidenceBounds> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    Ok(ConfidenceBounds {
        deltas: vec![delta],
        guaranteed_safe_threshold: Some(100.0 / (1.0 + (m as f64 - 1.0) * (-delta).exp())),
        counterexample_floor: None,
        counterexample_ceiling: Some(100.0 / (1.0 + (-delta).exp())),
        m,
    })
}

/// Negated strong post-condition: the seed class fails to dominate some
/// competitor by `delta`.
///
/// Pure disjunction of `m - 1` nonstrict atoms `y_t - y_i - delta <= 0`.
pub fn build_strong_negation(m: usize, seed_class: usize, delta: f64) -> Result<Formula> {
    check_class(m, seed_class)?;
    let atoms = (0..m)
        .filter(|&i| i != seed_class)
        .map(|i| Formula::Atom(Atom::le(LinearExpr::margin(seed_class, i, -delta))))
        .collect();
    Ok(Formula::or(atoms))
}

/// Margin pair for the smoothness property with seed confidence `c` and
/// variation bound `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothDeltas {
    pub delta1: f64,
    pub delta2: f64,
    /// True when `delta2 < delta1`, i.e. the margin interval
    /// `y_t' + delta2 < y_t < y_t' + delta1` is non-empty. When false the
    /// approximation is too conservative to certify anything.
    pub feasible: bool,
}

/// `delta1 = -ln(100/(C+tau) - 1)`, `delta2 = -ln((100/(C-tau) - 1)/(m-1))`.
///
/// Requires `0 < C - tau` and `C + tau < 100`. Either margin may be
/// negative; only their order decides feasibility.
pub fn deltas_smooth(c: f64, tau: f64, m: usize) -> Result<SmoothDeltas> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    if tau <= 0.0 || c - tau <= 0.0 || c + tau >= 100.0 {
        return Err(Error::SmoothWindow { c, tau });
    }
    let delta1 = -(100.0 / (c + tau) - 1.0).ln();
    let delta2 = -((100.0 / (c - tau) - 1.0) / (m as f64 - 1.0)).ln();
    Ok(SmoothDeltas {
        delta1,
        delta2,
        feasible: delta2 < delta1,
    })
}

/// Negated smoothness post-condition: the seed class either dominates every
/// competitor by `delta1` or fails to dominate some competitor by `delta2`.
///
/// Shape is a depth-2 disjunction with one conjunctive child and `m - 1`
/// bare-atom children, i.e. a DNF whose disjuncts have mixed widths.
pub fn build_smooth_negation(
    m: usize,
    seed_class: usize,
    delta1: f64,
    delta2: f64,
) -> Result<Formula> {
    check_class(m, seed_class)?;
    let dominate = Formula::and(
        (0..m)
            .filter(|&i| i != seed_class)
            .map(|i| Formula::Atom(Atom::le(LinearExpr::margin(i, seed_class, delta1))))
            .collect(),
    );
    let mut children = vec![dominate];
    children.extend(
        (0..m)
            .filter(|&i| i != seed_class)
            .map(|i| Formula::Atom(Atom::le(LinearExpr::margin(seed_class, i, -delta2)))),
    );
    Ok(Formula::or(children))
}

/// Counterexample confidence bounds for the smoothness encoding: any
/// counterexample has confidence at least the floor or at most the ceiling.
pub fn smooth_bounds(delta1: f64, delta2: f64, m: usize) -> Result<ConfidenceBounds> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    Ok(ConfidenceBounds {
        deltas: vec![delta1, delta2],
        guaranteed_safe_threshold: None,
        counterexample_floor: Some(100.0 / (1.0 + (m as f64 - 1.0) * (-delta1).exp())),
        counterexample_ceiling: Some(100.0 / (1.0 + (-delta2).exp())),
        m,
    })
}

/// Negated standard-robustness post-condition: some other class strictly
/// beats the seed class.
///
/// Pure disjunction of `m - 1` strict atoms `y_t - y_i < 0`; the strict form
/// is what the exact fast-path encoding captures (an exact argmax tie is
/// resolved in favour of the seed class).
pub fn build_standard_negation(m: usize, seed_class: usize) -> Result<Formula> {
    check_class(m, seed_class)?;
    let atoms = (0..m)
        .filter(|&i| i != seed_class)
        .map(|i| Formula::Atom(Atom::lt(LinearExpr::margin(seed_class, i, 0.0))))
        .collect();
    Ok(Formula::or(atoms))
}

fn check_class(m: usize, class: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::ClassCount(m));
    }
    if class >= m {
        return Err(Error::ClassIndex { class, m });
    }
    Ok(())
}
