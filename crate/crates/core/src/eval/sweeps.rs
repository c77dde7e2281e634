use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_at_k, ranking_relevances, Gain};
use super::report::{ExperimentReport, QueryRecord, RecordPath, Setting, SweepKind};
use super::truth::{sample_truth_queries, TruthCategory};
use super::Method;
use crate::baseline::{heuristic_explain, HeuristicConfig, ThresholdMode};
use crate::benchmark::{siblings_of, Benchmark};
use crate::error::{Error, Result};
use crate::explain::{explain, FeatureSpec, Path, PerturbationConfig, RelationPattern};
use crate::kg::{relation_group, EntityId, EntityType, FamilyRelations, KnowledgeGraph, Triple, Vocabulary};
use crate::kge::EmbeddingStore;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub perturbation: PerturbationConfig,
    pub methods: Vec<Method>,
    pub heuristic_mode: ThresholdMode,
    /// Observed triples sampled per relation in the truth sweep.
    pub per_relation: usize,
    /// Largest NDCG cut-off.
    pub max_k: usize,
    pub gain: Gain,
    /// Drop the query inverse from truth-sweep features.
    pub exclude_query_inverse: bool,
    /// Drives sampling; query `i` is explained with seed `derive(seed, i)`.
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            perturbation: PerturbationConfig::default(),
            methods: vec![
                Method::LinkLogic,
                Method::Heuristic { threshold_permille: 900 },
                Method::Heuristic { threshold_permille: 950 },
            ],
            heuristic_mode: ThresholdMode::PerHop,
            per_relation: 100,
            max_k: 7,
            gain: Gain::Linear,
            exclude_query_inverse: false,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.perturbation.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.max_k == 0 {
            return Err(Error::Config("max_k must be at least 1".into()));
        }
        if self.per_relation == 0 {
            return Err(Error::Config("per_relation must be at least 1".into()));
        }
        Ok(())
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sweep config serializes")
    }
}

/// Everything a sweep reads.
#[derive(Clone, Copy)]
pub struct SweepInputs<'a> {
    pub store: &'a EmbeddingStore,
    pub vocab: &'a Vocabulary,
    /// Graph explanation paths are drawn from.
    pub graph: &'a KnowledgeGraph,
    /// All known triples, for corruption filtering and family roles.
    pub known: &'a KnowledgeGraph,
    pub entity_types: &'a [EntityType],
}

struct Outcome {
    paths: Vec<(Path, f64)>,
    fidelity: Option<f64>,
}

fn run_method(
    inputs: &SweepInputs<'_>,
    method: Method,
    query: &Triple,
    pcfg: &PerturbationConfig,
    spec: &FeatureSpec,
    mode: ThresholdMode,
) -> Result<Outcome> {
    match method.threshold() {
        None => {
            let e = explain(inputs.store, inputs.graph, query, pcfg, spec)?;
            Ok(Outcome {
                paths: e.ranked_paths.into_iter().map(|p| (p.path, p.coefficient)).collect(),
                fidelity: Some(e.fidelity_r2),
            })
        }
        Some(threshold) => {
            let cfg = HeuristicConfig { threshold, mode };
            let e = heuristic_explain(inputs.store, inputs.graph, query, pcfg, spec, &cfg)?;
            Ok(Outcome { paths: e.ranked_paths.into_iter().map(|p| (p.path, p.score)).collect(), fidelity: None })
        }
    }
}

/// Family roles of the entities around a parent query.
struct Roles {
    c: EntityId,
    p: EntityId,
    co_parents: BTreeSet<EntityId>,
    siblings: BTreeSet<EntityId>,
}

impl Roles {
    fn new(known: &KnowledgeGraph, family: &FamilyRelations, query: &Triple) -> Self {
        let mut co_parents = family.parents_of(known, query.head);
        co_parents.remove(&query.tail);
        Self { c: query.head, p: query.tail, co_parents, siblings: siblings_of(known, family, query.head) }
    }

    fn label(&self, e: EntityId) -> &'static str {
        if e == self.c {
            "c"
        } else if e == self.p {
            "p"
        } else if self.co_parents.contains(&e) {
            "p2"
        } else if self.siblings.contains(&e) {
            "s"
        } else {
            "x"
        }
    }
}

/// A path written with query roles in place of entities, e.g.
/// `{c, parent, p2, spouse, p}`. Entities outside the family are `x`.
pub fn path_template(
    path: &Path,
    vocab: &Vocabulary,
    known: &KnowledgeGraph,
    family: &FamilyRelations,
    query: &Triple,
) -> String {
    template_with(path, vocab, &Roles::new(known, family, query))
}

fn template_with(path: &Path, vocab: &Vocabulary, roles: &Roles) -> String {
    let mut parts = vec![roles.label(path.entities[0]).to_owned()];
    for (r, e) in path.relations.iter().zip(&path.entities[1..]) {
        parts.push(vocab.relation_name(*r).to_owned());
        parts.push(roles.label(*e).to_owned());
    }
    format!("{{{}}}", parts.join(", "))
}

struct RecordContext<'a> {
    index: usize,
    method: Method,
    setting: Setting,
    truth: Option<TruthCategory>,
    siblings: Option<usize>,
    benchmark: Option<&'a Benchmark>,
    roles: Option<&'a Roles>,
}

fn make_record(
    inputs: &SweepInputs<'_>,
    family: Option<&FamilyRelations>,
    config: &SweepConfig,
    query: &Triple,
    ctx: RecordContext<'_>,
    outcome: Outcome,
) -> Result<QueryRecord> {
    let kge_score = inputs.store.plausibility(query.head, query.relation, query.tail)?;
    let inverse_spec = family.map(|f| FeatureSpec::for_family(f, false));
    let query_inverse_rank = inverse_spec
        .as_ref()
        .and_then(|s| outcome.paths.iter().position(|(p, _)| s.is_query_inverse(query, p)).map(|i| i + 1));
    let relevances = ctx.benchmark.map(|b| ranking_relevances(b, query, outcome.paths.iter().map(|(p, _)| p)));
    let ndcg = match (ctx.benchmark, &relevances) {
        (Some(b), Some(rel)) => {
            let ideal = b.ideal_relevances(query);
            (1..=config.max_k).map(|k| ndcg_at_k(rel, &ideal, k, config.gain).0).collect()
        }
        _ => Vec::new(),
    };
    let paths = outcome
        .paths
        .iter()
        .enumerate()
        .map(|(i, (p, w))| RecordPath {
            path: p.names(inputs.vocab),
            weight: *w,
            relevance: relevances.as_ref().map_or(0.0, |r| r[i]),
            template: ctx.roles.map(|roles| template_with(p, inputs.vocab, roles)),
        })
        .collect();
    Ok(QueryRecord {
        index: ctx.index,
        method: ctx.method,
        setting: ctx.setting,
        query: inputs.vocab.triple_names(query),
        truth: ctx.truth,
        relation_group: relation_group(inputs.vocab.relation_name(query.relation)),
        siblings: ctx.siblings,
        kge_score,
        n_paths: outcome.paths.len(),
        fidelity: outcome.fidelity,
        paths,
        ndcg,
        contains_query_inverse: query_inverse_rank.is_some(),
        query_inverse_rank,
    })
}

fn per_query(config: &SweepConfig, index: usize) -> PerturbationConfig {
    PerturbationConfig { seed: seed::derive(config.seed, index as u64), ..config.perturbation.clone() }
}

/// Explain observed, type-consistent corrupted and type-violating
/// corrupted triples with every configured method.
pub fn run_truth_sweep(inputs: &SweepInputs<'_>, config: &SweepConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let family = FamilyRelations::resolve(inputs.vocab).ok();
    let spec = match &family {
        Some(f) => FeatureSpec::for_family(f, config.exclude_query_inverse),
        None => FeatureSpec::allow_all(),
    };
    let queries =
        sample_truth_queries(inputs.graph, inputs.known, inputs.entity_types, config.per_relation, config.seed);
    log::info!("truth sweep over {} queries", queries.len());
    let records: Vec<Vec<QueryRecord>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let pcfg = per_query(config, i);
            config
                .methods
                .iter()
                .map(|&m| {
                    let outcome = run_method(inputs, m, &q.triple, &pcfg, &spec, config.heuristic_mode)?;
                    let ctx = RecordContext {
                        index: i,
                        method: m,
                        setting: Setting::Default,
                        truth: Some(q.category),
                        siblings: None,
                        benchmark: None,
                        roles: None,
                    };
                    make_record(inputs, family.as_ref(), config, &q.triple, ctx, outcome)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::new(SweepKind::Truth, config.seed, config.echo(), records.concat()))
}

/// NDCG@1..=max_k, path counts and fidelity for every benchmark query. The
/// query inverse is excluded from the features unless the benchmark
/// includes it.
pub fn run_parents_sweep(
    inputs: &SweepInputs<'_>,
    benchmark: &Benchmark,
    config: &SweepConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    let family = *benchmark.family();
    let spec = FeatureSpec::for_family(&family, !benchmark.include_query_inverse());
    let queries: Vec<Triple> = benchmark.queries().copied().collect();
    log::info!("parents sweep over {} queries", queries.len());
    let records: Vec<Vec<QueryRecord>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let pcfg = per_query(config, i);
            config
                .methods
                .iter()
                .map(|&m| {
                    let outcome = run_method(inputs, m, q, &pcfg, &spec, config.heuristic_mode)?;
                    let ctx = RecordContext {
                        index: i,
                        method: m,
                        setting: Setting::Default,
                        truth: None,
                        siblings: Some(benchmark.sibling_count(q)),
                        benchmark: Some(benchmark),
                        roles: None,
                    };
                    make_record(inputs, Some(&family), config, q, ctx, outcome)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::new(SweepKind::Parents, config.seed, config.echo(), records.concat()))
}

/// LinkLogic on single-sibling parent queries under three feature settings:
/// query inverse included; excluded along with sibling-relation paths; and
/// excluded with sibling-relation paths allowed. The benchmark must include
/// the query inverse.
pub fn run_tautology_experiment(
    inputs: &SweepInputs<'_>,
    benchmark: &Benchmark,
    config: &SweepConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    if !benchmark.include_query_inverse() {
        return Err(Error::Config("the tautology experiment needs a benchmark that includes the query inverse".into()));
    }
    let family = *benchmark.family();
    let no_sibling = FeatureSpec {
        exclude_patterns: family.sibling.map(|r| RelationPattern { relation: r, role: None }).into_iter().collect(),
        ..FeatureSpec::for_family(&family, true)
    };
    let settings = [
        (Setting::InverseIncluded, FeatureSpec::for_family(&family, false)),
        (Setting::InverseExcluded, no_sibling),
        (Setting::InverseExcludedWithSiblings, FeatureSpec::for_family(&family, true)),
    ];
    let queries: Vec<Triple> = benchmark.queries().filter(|q| benchmark.sibling_count(q) == 1).copied().collect();
    log::info!("tautology experiment over {} single-sibling queries", queries.len());
    let records: Vec<Vec<QueryRecord>> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let pcfg = per_query(config, i);
            let roles = Roles::new(inputs.known, &family, q);
            settings
                .iter()
                .map(|(setting, spec)| {
                    let outcome = run_method(inputs, Method::LinkLogic, q, &pcfg, spec, config.heuristic_mode)?;
                    let ctx = RecordContext {
                        index: i,
                        method: Method::LinkLogic,
                        setting: *setting,
                        truth: None,
                        siblings: Some(1),
                        benchmark: Some(benchmark),
                        roles: Some(&roles),
                    };
                    make_record(inputs, Some(&family), config, q, ctx, outcome)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::new(SweepKind::Tautology, config.seed, config.echo(), records.concat()))
}
