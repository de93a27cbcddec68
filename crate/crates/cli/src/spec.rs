//! Property-spec files: a JSON object with a `kind` discriminator plus the
//! thresholds and seed data that variant needs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use robustify_core::PropertyKind;

use crate::AppError;

/// One robustness property instance as written by the user.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    pub kind: PropertyKind,

    /// Relaxed confidence threshold, or the smoothness variation bound.
    pub tau: Option<f64>,
    /// Strong robustness: seed-confidence precondition (optional).
    pub tau1: Option<f64>,
    /// Strong robustness: confidence the perturbed input must keep.
    pub tau2: Option<f64>,
    /// Top-k rank.
    pub k: Option<usize>,
    /// Largest rank for the relaxed/affinity top-k variants.
    #[serde(rename = "K")]
    pub k_max: Option<usize>,
    /// Class-index sets within which misclassification is tolerated.
    pub affinity_sets: Option<Vec<Vec<usize>>>,

    /// Seed input, inline or as a whitespace/comma-separated float file.
    pub seed_input: Option<Vec<f64>>,
    pub seed_input_path: Option<PathBuf>,
    /// L-infinity perturbation radius around the seed input.
    pub epsilon: Option<f64>,
    /// Optional clamp applied to the perturbation box (e.g. [0, 1] pixels).
    pub input_clip: Option<(f64, f64)>,
    /// Explicit box overriding seed_input/epsilon.
    pub input_box: Option<BoxSpec>,

    pub seed_class: Option<usize>,
    pub seed_logits: Option<Vec<f64>>,
    /// Seed confidence in percent (smoothness), if not derived from logits.
    pub seed_confidence: Option<f64>,

    /// Slack override for the gadget encoding.
    pub eta: Option<f64>,

    /// Property file for `kind = raw_vnnlib`.
    pub vnnlib: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RobustnessSpec {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::spec(format!("`{}` is not a valid spec: {e}", path.display())))
    }

    pub fn require_tau(&self) -> Result<f64, AppError> {
        self.tau
            .ok_or_else(|| AppError::spec(format!("kind `{}` needs `tau`", self.kind.as_str())))
    }

    pub fn require_tau2(&self) -> Result<f64, AppError> {
        self.tau2
            .ok_or_else(|| AppError::spec(format!("kind `{}` needs `tau2`", self.kind.as_str())))
    }

    pub fn require_k(&self) -> Result<usize, AppError> {
        self.k
            .ok_or_else(|| AppError::spec(format!("kind `{}` needs `k`", self.kind.as_str())))
    }

    pub fn require_k_max(&self) -> Result<usize, AppError> {
        self.k_max
            .ok_or_else(|| AppError::spec(format!("kind `{}` needs `K`", self.kind.as_str())))
    }

    pub fn affinity_sets(&self) -> Result<Vec<BTreeSet<usize>>, AppError> {
        let sets = self.affinity_sets.as_ref().ok_or_else(|| {
            AppError::spec(format!(
                "kind `{}` needs `affinity_sets`",
                self.kind.as_str()
            ))
        })?;
        Ok(sets.iter().map(|s| s.iter().copied().collect()).collect())
    }

    /// Seed input vector from the inline field or the referenced file.
    pub fn seed_input(&self, spec_dir: &Path) -> Result<Option<Vec<f64>>, AppError> {
        if let Some(v) = &self.seed_input {
            return Ok(Some(v.clone()));
        }
        let Some(rel) = &self.seed_input_path else {
            return Ok(None);
        };
        let path = if rel.is_absolute() {
            rel.clone()
        } else {
            spec_dir.join(rel)
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| AppError::spec(format!("cannot read `{}`: {e}", path.display())))?;
        let values = parse_float_list(&text)
            .map_err(|e| AppError::spec(format!("`{}`: {e}", path.display())))?;
        Ok(Some(values))
    }
}

/// Whitespace- or comma-separated floats (a flat vector dump).
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in text.split(|c: char| c.is_whitespace() || c == ',') {
        if tok.is_empty() {
            continue;
        }
        out.push(
            tok.parse::<f64>()
                .map_err(|_| format!("`{tok}` is not a number"))?,
        );
    }
    if out.is_empty() {
        return Err("no numbers found".to_string());
    }
    Ok(out)
}
