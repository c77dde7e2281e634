//! Perturbation-based surrogate explanations for link predictions.
//!
//! For a query `(h, r, t)` the head and tail embeddings are jittered with
//! Gaussian noise scaled by the spread of their KGE neighbourhoods. Each
//! candidate path gets a feature column holding its path score under every
//! perturbation, the label is the query's own score, and a non-negative
//! Lasso picks out the paths that explain the prediction.

mod features;
mod lasso;
mod paths;
mod sigma;

use std::io::Write;

use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::kg::{FamilyRelations, KnowledgeGraph, RelationId, Triple, Vocabulary};
use crate::kge::EmbeddingStore;

pub use features::{compute_features, compute_labels, perturb_queries, PerturbedQueries};
pub use lasso::{fit_nonneg_lasso, lasso_objective, LassoFit, LASSO_MAX_SWEEPS, LASSO_TOLERANCE};
pub use paths::{path_score, select_paths, CandidatePath, Path, PathRole, RoleKind};
pub use sigma::{compute_sigmas, head_neighbors, rms_distance, tail_neighbors, Sigmas};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Noise magnitude multiplying the neighbourhood spread.
    pub alpha: f64,
    /// Number of perturbed queries.
    pub n: usize,
    /// Neighbour fan-out for the spread estimate.
    pub k: usize,
    /// Paths kept per relation group.
    pub per_group: usize,
    /// Per-row Lasso penalty.
    pub lambda: f64,
    /// Solve on feature columns scaled to unit standard deviation, then
    /// fold the scaling back into the coefficients.
    #[serde(default)]
    pub standardize: bool,
    pub holdout_fraction: f64,
    /// Entities taken per relation and direction when building one-hop candidates.
    pub candidate_fanout: usize,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            n: 1000,
            k: 3,
            per_group: 20,
            lambda: 0.2,
            standardize: false,
            holdout_fraction: 0.2,
            candidate_fanout: 50,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if self.n < 10 {
            return fail(format!("n must be at least 10, got {}", self.n));
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.per_group == 0 {
            return fail("per_group must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 0.5) {
            return fail(format!("holdout_fraction must be in (0, 0.5), got {}", self.holdout_fraction));
        }
        if self.candidate_fanout == 0 {
            return fail("candidate_fanout must be at least 1".into());
        }
        Ok(())
    }
}

/// A relation, optionally restricted to one candidate role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationPattern {
    pub relation: RelationId,
    pub role: Option<RoleKind>,
}

/// Which candidate paths may become features.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// `(r, inverse of r)` pairs used to recognise query-inverse paths.
    pub inverse_pairs: Vec<(RelationId, RelationId)>,
    /// Drop the one-hop path `(t, inverse of r, h)` restating the query.
    pub exclude_query_inverse: bool,
    /// Drop every path that uses one of these relations (in the given role).
    pub exclude_patterns: Vec<RelationPattern>,
}

impl FeatureSpec {
    pub fn allow_all() -> Self {
        Self::default()
    }

    pub fn for_family(family: &FamilyRelations, exclude_query_inverse: bool) -> Self {
        Self { inverse_pairs: family.inverse_pairs(), exclude_query_inverse, exclude_patterns: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        !self.exclude_query_inverse && self.exclude_patterns.is_empty()
    }

    pub fn is_query_inverse(&self, query: &Triple, path: &Path) -> bool {
        path.len() == 1
            && path.first() == query.tail
            && path.last() == query.head
            && self.inverse_pairs.iter().any(|&(r, inv)| r == query.relation && inv == path.relations[0])
    }

    pub fn excludes(&self, query: &Triple, path: &Path, role: PathRole) -> bool {
        if self.exclude_query_inverse && self.is_query_inverse(query, path) {
            return true;
        }
        self.exclude_patterns
            .iter()
            .any(|p| path.relations.contains(&p.relation) && p.role.is_none_or(|k| k == role.kind()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainedPath {
    pub path: Path,
    pub role: PathRole,
    pub coefficient: f64,
    /// `S(P)` at the unperturbed query.
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurrogateDiagnostics {
    pub sigma_h: f64,
    pub sigma_t: f64,
    /// Both spreads were zero, so every perturbed query equals the original.
    pub degenerate_sigma: bool,
    /// Holdout labels were constant, so fidelity was set to 0.
    pub constant_holdout_labels: bool,
    pub train_r2: f64,
    pub n_fit: usize,
    pub n_holdout: usize,
    /// Candidate paths used as features.
    pub m_candidates: usize,
    /// Features with a positive coefficient.
    pub m_effective: usize,
    pub zero_variance_features: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub intercept: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutPoint {
    pub y_true: f64,
    pub y_pred: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub query: Triple,
    /// Plausibility of the unperturbed query.
    pub query_plausibility: f64,
    pub ranked_paths: Vec<ExplainedPath>,
    pub fidelity_r2: f64,
    pub n_paths: usize,
    pub diagnostics: SurrogateDiagnostics,
    pub holdout: Vec<HoldoutPoint>,
    pub seed: u64,
}

/// `1 - SS_res / SS_tot` about the mean of `y_true`. Returns `(0, true)`
/// when the labels are constant.
pub fn fidelity_r2(y_true: &[f64], y_pred: &[f64]) -> (f64, bool) {
    assert_eq!(y_true.len(), y_pred.len(), "fidelity inputs differ in length");
    if y_true.is_empty() {
        return (0.0, true);
    }
    if y_true.iter().all(|&y| y == y_true[0]) {
        return (0.0, true);
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    (1.0 - ss_res / ss_tot, false)
}

/// Row indices `(fit, holdout)`, both ascending. The holdout holds
/// `round(n * fraction)` rows (at least one) chosen with stream 1 of the
/// query seed.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    idx.shuffle(&mut rng);
    let n_hold = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut hold = idx[..n_hold].to_vec();
    let mut fit = idx[n_hold..].to_vec();
    hold.sort_unstable();
    fit.sort_unstable();
    (fit, hold)
}

/// Explain the KGE prediction for `query`.
pub fn explain(
    store: &EmbeddingStore,
    graph: &KnowledgeGraph,
    query: &Triple,
    config: &PerturbationConfig,
    spec: &FeatureSpec,
) -> Result<Explanation> {
    config.validate()?;
    store.check_triple(query)?;
    let query_plausibility = store.plausibility(query.head, query.relation, query.tail)?;
    let sigmas = compute_sigmas(store, query, config.k)?;
    let mut diagnostics = SurrogateDiagnostics {
        sigma_h: sigmas.sigma_h,
        sigma_t: sigmas.sigma_t,
        degenerate_sigma: sigmas.sigma_h == 0.0 && sigmas.sigma_t == 0.0,
        converged: true,
        ..Default::default()
    };
    let candidates = select_paths(store, graph, query, config, spec)?;
    diagnostics.m_candidates = candidates.len();
    if candidates.is_empty() {
        return Ok(Explanation {
            query: *query,
            query_plausibility,
            ranked_paths: Vec::new(),
            fidelity_r2: 0.0,
            n_paths: 0,
            diagnostics,
            holdout: Vec::new(),
            seed: config.seed,
        });
    }

    let perturbed = perturb_queries(store, query, sigmas, config.alpha, config.n, config.seed)?;
    let paths: Vec<Path> = candidates.iter().map(|c| c.path.clone()).collect();
    let x = compute_features(store, query, &perturbed, &paths)?;
    let y = compute_labels(store, &perturbed, query.relation)?;

    let (fit_rows, hold_rows) = holdout_split(config.n, config.holdout_fraction, config.seed);
    let x_fit = x.select(Axis(0), &fit_rows);
    let y_fit: Array1<f64> = fit_rows.iter().map(|&i| y[i]).collect();
    let scales: Vec<f64> = x_fit
        .columns()
        .into_iter()
        .map(|c| {
            let sd = c.std(0.0);
            if config.standardize && sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let x_scaled = &x_fit / &ndarray::ArrayView1::from(&scales);
    let penalty = 2.0 * fit_rows.len() as f64 * config.lambda;
    let scaled = fit_nonneg_lasso(x_scaled.view(), y_fit.view(), penalty)?;
    let fit =
        LassoFit { coefficients: scaled.coefficients.iter().zip(&scales).map(|(b, s)| b / s).collect(), ..scaled };

    let predict =
        |rows: &[usize]| -> (Vec<f64>, Vec<f64>) { rows.iter().map(|&i| (y[i], fit.predict_row(x.row(i)))).unzip() };
    let (fit_true, fit_pred) = predict(&fit_rows);
    let (hold_true, hold_pred) = predict(&hold_rows);
    let (fidelity, constant) = fidelity_r2(&hold_true, &hold_pred);
    diagnostics.train_r2 = fidelity_r2(&fit_true, &fit_pred).0;
    diagnostics.constant_holdout_labels = constant;
    diagnostics.n_fit = fit_rows.len();
    diagnostics.n_holdout = hold_rows.len();
    diagnostics.m_effective = fit.nonzero();
    diagnostics.zero_variance_features = fit.zero_variance.len();
    diagnostics.sweeps = fit.sweeps;
    diagnostics.converged = fit.converged;
    diagnostics.intercept = fit.intercept;

    let mut ranked: Vec<ExplainedPath> = candidates
        .into_iter()
        .zip(&fit.coefficients)
        .filter(|(_, &b)| b > 0.0)
        .map(|(c, &b)| ExplainedPath { path: c.path, role: c.role, coefficient: b, score: c.score })
        .collect();
    ranked.sort_by(|a, b| paths::rank_cmp(a.coefficient, &a.path, b.coefficient, &b.path));

    Ok(Explanation {
        query: *query,
        query_plausibility,
        n_paths: ranked.len(),
        ranked_paths: ranked,
        fidelity_r2: fidelity,
        diagnostics,
        holdout: hold_true.into_iter().zip(hold_pred).map(|(y_true, y_pred)| HoldoutPoint { y_true, y_pred }).collect(),
        seed: config.seed,
    })
}

/// Names of a query triple.
pub fn query_names(vocab: &Vocabulary, q: &Triple) -> [String; 3] {
    vocab.triple_names(q)
}

/// JSON document for an explanation.
pub fn explanation_json(
    e: &Explanation,
    vocab: &Vocabulary,
    config: &PerturbationConfig,
    spec: &FeatureSpec,
) -> serde_json::Value {
    let paths: Vec<serde_json::Value> = e
        .ranked_paths
        .iter()
        .map(|p| {
            json!({
                "path": p.path.names(vocab),
                "coefficient": p.coefficient,
                "path_score": p.score,
                "role": p.role,
            })
        })
        .collect();
    json!({
        "method": "linklogic",
        "query": query_names(vocab, &e.query),
        "query_plausibility": e.query_plausibility,
        "paths": paths,
        "fidelity_r2": e.fidelity_r2,
        "n_paths": e.n_paths,
        "diagnostics": e.diagnostics,
        "config": config,
        "exclude_query_inverse": spec.exclude_query_inverse,
        "seed": e.seed,
    })
}

/// Holdout `(y_true, y_pred)` pairs as CSV.
pub fn write_holdout_csv(e: &Explanation, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "y_true,y_pred")?;
    for p in &e.holdout {
        writeln!(out, "{},{}", p.y_true, p.y_pred)?;
    }
    Ok(())
}
