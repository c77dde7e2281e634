use std::sync::OnceLock;

use linklogic::baseline::{heuristic_explain, HeuristicConfig, ThresholdMode};
use linklogic::explain::{explain, FeatureSpec, PathRole, PerturbationConfig};
use linklogic::kg::{EntityId, FamilyRelations, KnowledgeGraph, Triple, Vocabulary};
use linklogic::kge::{train, EmbeddingStore, TrainingConfig};
use linklogic::synthetic::{child_name, family_corpus, parent_names, SyntheticConfig};
use linklogic::Error;

struct Fixture {
    vocab: Vocabulary,
    graph: KnowledgeGraph,
    store: EmbeddingStore,
    family: FamilyRelations,
}

fn fixture() -> &'static Fixture {
    static FX: OnceLock<Fixture> = OnceLock::new();
    FX.get_or_init(|| {
        let (vocab, triples) =
            family_corpus(&SyntheticConfig { families: 12, sibling_edges: true, ..Default::default() }).unwrap();
        let graph = KnowledgeGraph::new(vocab.num_entities(), vocab.num_relations(), triples);
        let (store, _) = train(&graph, &TrainingConfig { max_step: 600, ..TrainingConfig::desk() }).unwrap();
        let family = FamilyRelations::resolve(&vocab).unwrap();
        Fixture { vocab, graph, store, family }
    })
}

fn parent_query(fx: &Fixture, family: usize) -> Triple {
    Triple::new(
        fx.vocab.entity(&child_name(family, 0)).unwrap(),
        fx.family.parent,
        fx.vocab.entity(&parent_names(family)[0]).unwrap(),
    )
}

fn config() -> PerturbationConfig {
    PerturbationConfig { n: 300, lambda: 1.0, ..Default::default() }
}

#[test]
fn explanation_is_sorted_positive_and_consistent() {
    let fx = fixture();
    let q = parent_query(fx, 3);
    let cfg = config();
    let e = explain(&fx.store, &fx.graph, &q, &cfg, &FeatureSpec::for_family(&fx.family, true)).unwrap();
    assert_eq!(e.n_paths, e.ranked_paths.len());
    assert_eq!(e.diagnostics.m_effective, e.n_paths);
    assert!(e.n_paths > 0);
    assert!(e.ranked_paths.iter().all(|p| p.coefficient > 0.0));
    assert!(e.ranked_paths.windows(2).all(|w| w[0].coefficient >= w[1].coefficient));
    for p in &e.ranked_paths {
        assert!(p.path.is_well_formed());
        let touches = |x: EntityId| p.path.first() == x || p.path.last() == x;
        match p.role {
            PathRole::HeadOneHop { .. } => assert!(touches(q.head)),
            PathRole::TailOneHop { .. } => assert!(touches(q.tail)),
            PathRole::BridgeTwoHop { .. } => assert!(touches(q.head) && touches(q.tail) && p.path.len() == 2),
        }
    }
    assert_eq!(e.holdout.len(), 60);
    assert_eq!(e.diagnostics.n_fit + e.diagnostics.n_holdout, cfg.n);
    assert!(e.fidelity_r2 <= 1.0);
    assert!((0.0..=1.0).contains(&e.query_plausibility));
}

#[test]
fn same_seed_same_explanation() {
    let fx = fixture();
    let q = parent_query(fx, 5);
    let spec = FeatureSpec::for_family(&fx.family, false);
    let a = explain(&fx.store, &fx.graph, &q, &config(), &spec).unwrap();
    let b = explain(&fx.store, &fx.graph, &q, &config(), &spec).unwrap();
    assert_eq!(a, b);
    let c = explain(&fx.store, &fx.graph, &q, &PerturbationConfig { seed: 9, ..config() }, &spec).unwrap();
    assert_ne!(a.holdout, c.holdout);
}

#[test]
fn excluded_query_inverse_never_appears() {
    let fx = fixture();
    let spec = FeatureSpec::for_family(&fx.family, true);
    for family in 0..12 {
        let q = parent_query(fx, family);
        let e = explain(&fx.store, &fx.graph, &q, &config(), &spec).unwrap();
        assert!(e.ranked_paths.iter().all(|p| !spec.is_query_inverse(&q, &p.path)));
    }
}

#[test]
fn zero_noise_gives_empty_explanation() {
    let fx = fixture();
    let q = parent_query(fx, 1);
    let cfg = PerturbationConfig { alpha: 0.0, ..config() };
    let e = explain(&fx.store, &fx.graph, &q, &cfg, &FeatureSpec::allow_all()).unwrap();
    assert_eq!(e.n_paths, 0);
    assert!(e.diagnostics.constant_holdout_labels);
    assert_eq!(e.fidelity_r2, 0.0);
    assert_eq!(e.diagnostics.zero_variance_features, e.diagnostics.m_candidates);
}

#[test]
fn standardized_fit_keeps_invariants() {
    let fx = fixture();
    let q = parent_query(fx, 2);
    let cfg = PerturbationConfig { standardize: true, ..config() };
    let e = explain(&fx.store, &fx.graph, &q, &cfg, &FeatureSpec::for_family(&fx.family, true)).unwrap();
    assert!(e.ranked_paths.iter().all(|p| p.coefficient > 0.0));
    assert!(e.ranked_paths.windows(2).all(|w| w[0].coefficient >= w[1].coefficient));
}

#[test]
fn invalid_settings_are_config_errors() {
    let fx = fixture();
    let q = parent_query(fx, 0);
    let spec = FeatureSpec::allow_all();
    for bad in [
        PerturbationConfig { n: 5, ..config() },
        PerturbationConfig { holdout_fraction: 0.6, ..config() },
        PerturbationConfig { lambda: -1.0, ..config() },
        PerturbationConfig { k: 0, ..config() },
    ] {
        assert!(matches!(explain(&fx.store, &fx.graph, &q, &bad, &spec), Err(Error::Config(_))));
    }
    let outside = Triple::new(EntityId(fx.vocab.num_entities() as u32), q.relation, q.tail);
    assert!(explain(&fx.store, &fx.graph, &outside, &config(), &spec).is_err());
}

#[test]
fn heuristic_thresholds_nest() {
    let fx = fixture();
    let q = parent_query(fx, 4);
    let spec = FeatureSpec::for_family(&fx.family, true);
    let run = |threshold, mode| {
        heuristic_explain(&fx.store, &fx.graph, &q, &config(), &spec, &HeuristicConfig { threshold, mode }).unwrap()
    };
    let loose = run(0.5, ThresholdMode::PerHop);
    let strict = run(0.95, ThresholdMode::PerHop);
    assert!(strict.n_paths <= loose.n_paths);
    assert!(strict.ranked_paths.iter().all(|p| loose.ranked_paths.contains(p)));
    assert!(loose.ranked_paths.windows(2).all(|w| w[0].score >= w[1].score));
    let mean = run(0.95, ThresholdMode::PathMean);
    assert!(mean.n_paths >= strict.n_paths);
    assert_eq!(run(0.0, ThresholdMode::PerHop).n_paths, {
        let all = linklogic::explain::select_paths(&fx.store, &fx.graph, &q, &config(), &spec).unwrap();
        all.len()
    });
    assert!(matches!(
        heuristic_explain(&fx.store, &fx.graph, &q, &config(), &spec, &HeuristicConfig::with_threshold(1.5)),
        Err(Error::Config(_))
    ));
}
