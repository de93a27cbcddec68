//! Verification queries: an input box, the negated post-condition, and the
//! provenance needed to state what a verifier result means.

use serde::Serialize;

use crate::confidence::ConfidenceBounds;
use crate::error::{Error, Result};
use crate::formula::Formula;

/// Per-input closed interval bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InputBox(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        let bad = |i: &usize| {
            let (lo, hi) = (lower[*i], upper[*i]);
            lo > hi || lo.is_nan() || hi.is_nan()
        };
        if let Some(i) = (0..lower.len()).find(bad) {
            return Err(Error::InputBox(format!(
                "lower[{i}] = {} exceeds upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(InputBox { lower, upper })
    }

    /// The L-infinity ball of radius `epsilon` around `center`, optionally
    /// clipped to `[clip_lo, clip_hi]`.
    pub fn around(center: &[f64], epsilon: f64, clip: Option<(f64, f64)>) -> Result<Self> {
        if epsilon < 0.0 {
            return Err(Error::InputBox(format!("negative radius {epsilon}")));
        }
        let mut lower: Vec<f64> = center.iter().map(|&c| c - epsilon).collect();
        let mut upper: Vec<f64> = center.iter().map(|&c| c + epsilon).collect();
        if let Some((lo, hi)) = clip {
            for v in &mut lower {
                *v = v.max(lo);
            }
            for v in &mut upper {
                *v = v.min(hi);
            }
        }
        InputBox::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

/// The robustness variants the front end understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Standard,
    Relaxed,
    Strong,
    Smooth,
    Topk,
    TopkRelaxed,
    TopkAffinity,
    RawVnnlib,
}

impl PropertyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Standard => "standard",
            PropertyKind::Relaxed => "relaxed",
            PropertyKind::Strong => "strong",
            PropertyKind::Smooth => "smooth",
            PropertyKind::Topk => "topk",
            PropertyKind::TopkRelaxed => "topk_relaxed",
            PropertyKind::TopkAffinity => "topk_affinity",
            PropertyKind::RawVnnlib => "raw_vnnlib",
        }
    }
}

/// Where a query came from and which guarantees apply to it.
#[derive(Debug, Clone, Serialize)]
pub struct QueryProvenance {
    pub kind: PropertyKind,
    pub deltas: Vec<f64>,
    pub eta: f64,
    pub bounds: Option<ConfidenceBounds>,
    pub seed_class: Option<usize>,
    /// The negated post-condition is vacuously satisfiable (affinity filter
    /// came back empty).
    pub trivially_violated: bool,
    /// The smoothness margin interval is empty; the query cannot certify
    /// anything (compile proceeds, flagged as inconclusive).
    pub infeasible_approximation: bool,
}

impl QueryProvenance {
    pub fn bare(kind: PropertyKind, eta: f64) -> Self {
        QueryProvenance {
            kind,
            deltas: Vec::new(),
            eta,
            bounds: None,
            seed_class: None,
            trivially_violated: false,
            infeasible_approximation: false,
        }
    }
}

/// A full verification query: box pre-condition plus negated post-condition.
#[derive(Debug, Clone)]
pub struct VerificationQuery {
    pub input_box: InputBox,
    pub formula: Formula,
    pub provenance: QueryProvenance,
}

impl VerificationQuery {
    /// The formula must fit the network's output count.
    pub fn check_arity(&self, m: usize) -> Result<()> {
        if self.formula.arity() > m {
            return Err(Error::ArityMismatch {
                var: self.formula.arity() - 1,
                arity: m,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validation() {
        assert!(InputBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(InputBox::new(vec![2.0], vec![1.0]).is_err());
        let b = InputBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[1.5, 0.0]));
    }

    #[test]
    fn epsilon_ball_with_clipping() {
        let b = InputBox::around(&[0.875, 0.125], 0.25, Some((0.0, 1.0))).unwrap();
        assert_eq!(b.lower, vec![0.625, 0.0]);
        assert_eq!(b.upper, vec![1.0, 0.375]);
    }

    #[test]
    fn kind_names_are_stable() {
        let kinds = [
            PropertyKind::Standard,
            PropertyKind::TopkRelaxed,
            PropertyKind::RawVnnlib,
        ];
        let names: Vec<_> = kinds.iter().map(|k| k.as_str()).collect();
        assert_eq!(names, vec!["standard", "topk_relaxed", "raw_vnnlib"]);
        let parsed: PropertyKind = serde_json::from_str("\"topk_affinity\"").unwrap();
        assert_eq!(parsed, PropertyKind::TopkAffinity);
    }
}
