//! Path-score heuristic: rank the candidate pool directly by `S(P)`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::explain::{select_paths, FeatureSpec, Path, PathRole, PerturbationConfig};
use crate::kg::{KnowledgeGraph, Triple, Vocabulary};
use crate::kge::EmbeddingStore;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Every hop must reach the threshold.
    #[default]
    PerHop,
    /// The mean hop plausibility must reach the threshold.
    PathMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicConfig {
    pub threshold: f64,
    pub mode: ThresholdMode,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { threshold: 0.9, mode: ThresholdMode::PerHop }
    }
}

impl HeuristicConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self { threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("heuristic threshold must be in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }

    fn keeps(&self, hop_plausibility: &[f64]) -> bool {
        match self.mode {
            ThresholdMode::PerHop => hop_plausibility.iter().all(|&f| f >= self.threshold),
            ThresholdMode::PathMean => {
                hop_plausibility.iter().sum::<f64>() / hop_plausibility.len() as f64 >= self.threshold
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub path: Path,
    pub role: PathRole,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicExplanation {
    pub query: Triple,
    pub ranked_paths: Vec<ScoredPath>,
    pub n_paths: usize,
}

/// Candidate paths passing the plausibility threshold, ranked by `S(P)`.
/// Uses the same pool as the surrogate explainer; `pool` supplies its
/// fan-out and per-group limits.
pub fn heuristic_explain(
    store: &EmbeddingStore,
    graph: &KnowledgeGraph,
    query: &Triple,
    pool: &PerturbationConfig,
    spec: &FeatureSpec,
    config: &HeuristicConfig,
) -> Result<HeuristicExplanation> {
    config.validate()?;
    let candidates = select_paths(store, graph, query, pool, spec)?;
    let ranked: Vec<ScoredPath> = candidates
        .into_iter()
        .filter(|c| config.keeps(&c.hop_plausibility))
        .map(|c| ScoredPath { path: c.path, role: c.role, score: c.score })
        .collect();
    Ok(HeuristicExplanation { query: *query, n_paths: ranked.len(), ranked_paths: ranked })
}

pub fn heuristic_json(e: &HeuristicExplanation, vocab: &Vocabulary, config: &HeuristicConfig) -> serde_json::Value {
    let paths: Vec<serde_json::Value> = e
        .ranked_paths
        .iter()
        .map(|p| {
            json!({
                "path": p.path.names(vocab),
                "score": p.score,
                "role": p.role,
            })
        })
        .collect();
    json!({
        "method": "heuristic",
        "query": vocab.triple_names(&e.query),
        "paths": paths,
        "n_paths": e.n_paths,
        "fidelity_r2": null,
        "threshold": config.threshold,
        "threshold_mode": config.mode,
    })
}
