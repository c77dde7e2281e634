use std::collections::BTreeMap;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{complex_score, EmbeddingStore, EmbeddingVector};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub neg_sample_size: usize,
    pub learning_rate: f64,
    pub max_step: usize,
    pub adversarial_sampling: bool,
    pub adversarial_temperature: f64,
    pub regularization_coef: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    /// The full-scale recipe used for FB13.
    fn default() -> Self {
        Self {
            hidden_dim: 400,
            batch_size: 1000,
            neg_sample_size: 200,
            learning_rate: 0.1,
            max_step: 50_000,
            adversarial_sampling: true,
            adversarial_temperature: 1.0,
            regularization_coef: 2e-6,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    /// Small preset for synthetic graphs that trains in seconds.
    pub fn desk() -> Self {
        Self {
            hidden_dim: 32,
            batch_size: 512,
            neg_sample_size: 8,
            learning_rate: 0.025,
            max_step: 5000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("training: {what} must be positive")));
        if self.hidden_dim == 0 {
            return bad("hidden_dim");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if self.neg_sample_size == 0 {
            return bad("neg_sample_size");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate");
        }
        if self.max_step == 0 {
            return bad("max_step");
        }
        if self.adversarial_sampling
            && !(self.adversarial_temperature > 0.0 && self.adversarial_temperature.is_finite())
        {
            return bad("adversarial_temperature");
        }
        if !(self.regularization_coef >= 0.0 && self.regularization_coef.is_finite()) {
            return Err(Error::Config("training: regularization_coef must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub steps: usize,
    /// `(step, mean example loss over the preceding interval)`.
    pub loss_history: Vec<(usize, f64)>,
    pub final_loss: f64,
}

/// Gradient of one example's loss, keyed by parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleGradient {
    pub entities: BTreeMap<EntityId, EmbeddingVector>,
    pub relations: BTreeMap<RelationId, EmbeddingVector>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Negative weights: softmax of `temperature * score` if adversarial, else uniform.
fn negative_weights(scores: &[f64], config: &TrainingConfig) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    if !config.adversarial_sampling {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let logits: Vec<f64> = scores.iter().map(|s| s * config.adversarial_temperature).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Accumulates `coef * dscore/dparam` for the triple `(h, r, t)`.
trait GradSink {
    fn add_entity(&mut self, e: EntityId, re: &[f64], im: &[f64], coef: f64);
    fn add_relation(&mut self, r: RelationId, re: &[f64], im: &[f64], coef: f64);
}

fn score_grad(store: &EmbeddingStore, t: &Triple, coef: f64, sink: &mut impl GradSink) {
    let h = store.entity(t.head);
    let r = store.relation(t.relation);
    let tl = store.entity(t.tail);
    let d = store.dim();
    let mut buf = [vec![0.0; d], vec![0.0; d]];
    // d/dh
    for i in 0..d {
        buf[0][i] = r.re[i] * tl.re[i] + r.im[i] * tl.im[i];
        buf[1][i] = r.re[i] * tl.im[i] - r.im[i] * tl.re[i];
    }
    sink.add_entity(t.head, &buf[0], &buf[1], coef);
    // d/dr
    for i in 0..d {
        buf[0][i] = h.re[i] * tl.re[i] + h.im[i] * tl.im[i];
        buf[1][i] = h.re[i] * tl.im[i] - h.im[i] * tl.re[i];
    }
    sink.add_relation(t.relation, &buf[0], &buf[1], coef);
    // d/dt
    for i in 0..d {
        buf[0][i] = h.re[i] * r.re[i] - h.im[i] * r.im[i];
        buf[1][i] = h.im[i] * r.re[i] + h.re[i] * r.im[i];
    }
    sink.add_entity(t.tail, &buf[0], &buf[1], coef);
}

/// Loss of one positive with its negatives, using the given negative
/// weights. Gradients (weights treated as constants) go to `sink`.
fn example_loss(
    store: &EmbeddingStore,
    pos: &Triple,
    negs: &[Triple],
    weights: &[f64],
    reg_coef: f64,
    mut sink: Option<&mut dyn FnMut(&Triple, f64)>,
) -> f64 {
    let s_pos = complex_score(store.entity(pos.head), store.relation(pos.relation), store.entity(pos.tail));
    let mut loss = 0.5 * softplus(-s_pos);
    if let Some(sink) = sink.as_mut() {
        sink(pos, -0.5 * sigmoid(-s_pos));
    }
    for (neg, w) in negs.iter().zip(weights) {
        let s = complex_score(store.entity(neg.head), store.relation(neg.relation), store.entity(neg.tail));
        loss += 0.5 * w * softplus(s);
        if let Some(sink) = sink.as_mut() {
            sink(neg, 0.5 * w * sigmoid(s));
        }
    }
    if reg_coef > 0.0 {
        let views = [store.entity(pos.head), store.relation(pos.relation), store.entity(pos.tail)];
        let cubes: f64 = views.iter().flat_map(|v| v.real_components()).map(|x| x.abs().powi(3)).sum();
        loss += reg_coef * cubes;
    }
    loss
}

fn negative_scores(store: &EmbeddingStore, negs: &[Triple]) -> Vec<f64> {
    negs.iter().map(|n| complex_score(store.entity(n.head), store.relation(n.relation), store.entity(n.tail))).collect()
}

impl GradSink for ExampleGradient {
    fn add_entity(&mut self, e: EntityId, re: &[f64], im: &[f64], coef: f64) {
        let g = self.entities.entry(e).or_insert_with(|| EmbeddingVector::zeros(re.len()));
        axpy(&mut g.re, re, coef);
        axpy(&mut g.im, im, coef);
    }

    fn add_relation(&mut self, r: RelationId, re: &[f64], im: &[f64], coef: f64) {
        let g = self.relations.entry(r).or_insert_with(|| EmbeddingVector::zeros(re.len()));
        axpy(&mut g.re, re, coef);
        axpy(&mut g.im, im, coef);
    }
}

fn axpy(y: &mut [f64], x: &[f64], a: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn add_l3_grad(store: &EmbeddingStore, pos: &Triple, coef: f64, sink: &mut impl GradSink) {
    if coef == 0.0 {
        return;
    }
    let cube_grad = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| 3.0 * x.abs() * x).collect() };
    for e in [pos.head, pos.tail] {
        let v = store.entity(e);
        sink.add_entity(e, &cube_grad(v.re), &cube_grad(v.im), coef);
    }
    let v = store.relation(pos.relation);
    sink.add_relation(pos.relation, &cube_grad(v.re), &cube_grad(v.im), coef);
}

/// Loss of one example and its analytic gradient. Adversarial weights are
/// computed from the current scores and then held constant.
pub fn logistic_example_loss(
    store: &EmbeddingStore,
    pos: &Triple,
    negs: &[Triple],
    config: &TrainingConfig,
) -> (f64, ExampleGradient) {
    let weights = negative_weights(&negative_scores(store, negs), config);
    let mut grad = ExampleGradient::default();
    let mut coefs: Vec<(Triple, f64)> = Vec::new();
    let loss = example_loss(
        store,
        pos,
        negs,
        &weights,
        config.regularization_coef,
        Some(&mut |t: &Triple, c: f64| coefs.push((*t, c))),
    );
    for (t, c) in coefs {
        score_grad(store, &t, c, &mut grad);
    }
    add_l3_grad(store, pos, config.regularization_coef, &mut grad);
    (loss, grad)
}

/// Dense gradient buffer with a touched list, reused across steps.
struct BatchGrad {
    grad: EmbeddingStore,
    entity_touched: Vec<bool>,
    relation_touched: Vec<bool>,
    entities: Vec<EntityId>,
    relations: Vec<RelationId>,
}

impl BatchGrad {
    fn new(store: &EmbeddingStore) -> Self {
        Self {
            grad: EmbeddingStore::zeros(store.num_entities(), store.num_relations(), store.dim()),
            entity_touched: vec![false; store.num_entities()],
            relation_touched: vec![false; store.num_relations()],
            entities: Vec::new(),
            relations: Vec::new(),
        }
    }

    fn apply(&mut self, store: &mut EmbeddingStore, lr: f64) -> bool {
        let mut finite = true;
        for &e in &self.entities {
            let (gre, gim) = self.grad.entity_mut(e);
            let (re, im) = store.entity_mut(e);
            for (x, g) in re.iter_mut().chain(im.iter_mut()).zip(gre.iter_mut().chain(gim.iter_mut())) {
                *x -= lr * *g;
                *g = 0.0;
                finite &= x.is_finite();
            }
            self.entity_touched[e.index()] = false;
        }
        for &r in &self.relations {
            let (gre, gim) = self.grad.relation_mut(r);
            let (re, im) = store.relation_mut(r);
            for (x, g) in re.iter_mut().chain(im.iter_mut()).zip(gre.iter_mut().chain(gim.iter_mut())) {
                *x -= lr * *g;
                *g = 0.0;
                finite &= x.is_finite();
            }
            self.relation_touched[r.index()] = false;
        }
        self.entities.clear();
        self.relations.clear();
        finite
    }
}

impl GradSink for BatchGrad {
    fn add_entity(&mut self, e: EntityId, re: &[f64], im: &[f64], coef: f64) {
        if !self.entity_touched[e.index()] {
            self.entity_touched[e.index()] = true;
            self.entities.push(e);
        }
        let (gre, gim) = self.grad.entity_mut(e);
        axpy(gre, re, coef);
        axpy(gim, im, coef);
    }

    fn add_relation(&mut self, r: RelationId, re: &[f64], im: &[f64], coef: f64) {
        if !self.relation_touched[r.index()] {
            self.relation_touched[r.index()] = true;
            self.relations.push(r);
        }
        let (gre, gim) = self.grad.relation_mut(r);
        axpy(gre, re, coef);
        axpy(gim, im, coef);
    }
}

fn corrupt(pos: &Triple, num_entities: usize, rng: &mut impl Rng) -> Triple {
    let e = EntityId(rng.random_range(0..num_entities as u32));
    if rng.random_bool(0.5) {
        Triple::new(e, pos.relation, pos.tail)
    } else {
        Triple::new(pos.head, pos.relation, e)
    }
}

/// Train ComplEx embeddings on `graph` with minibatch SGD.
///
/// Each step draws `batch_size` positives uniformly with replacement and
/// `neg_sample_size` corruptions per positive. Example gradients are summed
/// over the batch. Single threaded and deterministic for a fixed seed.
pub fn train(graph: &KnowledgeGraph, config: &TrainingConfig) -> Result<(EmbeddingStore, TrainingLog)> {
    config.validate()?;
    if graph.is_empty() {
        return Err(Error::Input("cannot train on an empty graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / (config.hidden_dim as f64).sqrt();
    let mut store =
        EmbeddingStore::random_uniform(graph.num_entities(), graph.num_relations(), config.hidden_dim, bound, &mut rng);
    let triples = graph.triples();
    let mut grad = BatchGrad::new(&store);
    let mut negs = Vec::with_capacity(config.neg_sample_size);
    let mut coefs: Vec<(Triple, f64)> = Vec::with_capacity(config.neg_sample_size + 1);
    let mut log = TrainingLog::default();
    let interval = (config.max_step / 20).max(1);
    let mut interval_loss = 0.0;
    let mut interval_count = 0usize;

    for step in 1..=config.max_step {
        let mut batch_loss = 0.0;
        for _ in 0..config.batch_size {
            let pos = triples[rng.random_range(0..triples.len())];
            negs.clear();
            for _ in 0..config.neg_sample_size {
                negs.push(corrupt(&pos, graph.num_entities(), &mut rng));
            }
            let weights = negative_weights(&negative_scores(&store, &negs), config);
            coefs.clear();
            batch_loss += example_loss(
                &store,
                &pos,
                &negs,
                &weights,
                config.regularization_coef,
                Some(&mut |t: &Triple, c: f64| coefs.push((*t, c))),
            );
            for (t, c) in &coefs {
                score_grad(&store, t, *c, &mut grad);
            }
            add_l3_grad(&store, &pos, config.regularization_coef, &mut grad);
        }
        if !batch_loss.is_finite() {
            return Err(Error::Divergence { step, message: format!("batch loss is {batch_loss}") });
        }
        if !grad.apply(&mut store, config.learning_rate) {
            return Err(Error::Divergence { step, message: "non-finite embedding component after update".into() });
        }
        let mean = batch_loss / config.batch_size as f64;
        interval_loss += mean;
        interval_count += 1;
        log.final_loss = mean;
        if step % interval == 0 || step == config.max_step {
            let avg = interval_loss / interval_count as f64;
            log.loss_history.push((step, avg));
            info!("train step {step}/{} loss {avg:.5}", config.max_step);
            interval_loss = 0.0;
            interval_count = 0;
        }
    }
    log.steps = config.max_step;
    Ok((store, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kge::plausibility_of_score;

    fn random_store(seed: u64) -> EmbeddingStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EmbeddingStore::random_uniform(5, 2, 8, 0.8, &mut rng)
    }

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(EntityId(h), RelationId(r), EntityId(tl))
    }

    fn perturbed_loss(
        store: &EmbeddingStore,
        pos: &Triple,
        negs: &[Triple],
        weights: &[f64],
        reg: f64,
        target: (bool, u32, usize, f64),
    ) -> f64 {
        let (is_entity, id, comp, delta) = target;
        let mut s = store.clone();
        let d = s.dim();
        let (re, im) = if is_entity { s.entity_mut(EntityId(id)) } else { s.relation_mut(RelationId(id)) };
        if comp < d {
            re[comp] += delta;
        } else {
            im[comp - d] += delta;
        }
        example_loss(&s, pos, negs, weights, reg, None)
    }

    fn check_gradient(adversarial: bool, seed: u64) {
        let store = random_store(seed);
        let config = TrainingConfig {
            hidden_dim: 8,
            adversarial_sampling: adversarial,
            adversarial_temperature: 1.0,
            regularization_coef: 0.05,
            ..TrainingConfig::default()
        };
        // entity 1 appears as both head and tail
        let pos = t(0, 1, 1);
        let negs = [t(3, 1, 1), t(0, 1, 4), t(1, 1, 1), t(0, 1, 2)];
        let (_, grad) = logistic_example_loss(&store, &pos, &negs, &config);
        let weights = negative_weights(&negative_scores(&store, &negs), &config);
        let step = 1e-4;
        let mut checked = 0;
        let mut check = |is_entity: bool, id: u32, analytic: &EmbeddingVector| {
            for comp in 0..16 {
                let plus = perturbed_loss(&store, &pos, &negs, &weights, 0.05, (is_entity, id, comp, step));
                let minus = perturbed_loss(&store, &pos, &negs, &weights, 0.05, (is_entity, id, comp, -step));
                let numeric = (plus - minus) / (2.0 * step);
                let a = if comp < 8 { analytic.re[comp] } else { analytic.im[comp - 8] };
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    rel < 1e-4 || (a - numeric).abs() < 1e-10,
                    "{is_entity} {id} {comp}: analytic {a} numeric {numeric}"
                );
                checked += 1;
            }
        };
        for (e, g) in &grad.entities {
            check(true, e.0, g);
        }
        for (r, g) in &grad.relations {
            check(false, r.0, g);
        }
        assert_eq!(checked, 16 * 6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            check_gradient(false, seed);
        }
    }

    #[test]
    fn adversarial_gradient_matches_with_detached_weights() {
        for seed in 0..5 {
            check_gradient(true, seed);
        }
    }

    #[test]
    fn uniform_weights_without_adversarial() {
        let cfg = TrainingConfig { adversarial_sampling: false, ..TrainingConfig::default() };
        assert_eq!(negative_weights(&[1.0, 5.0], &cfg), vec![0.5, 0.5]);
        let cfg = TrainingConfig::default();
        let w = negative_weights(&[0.0, 2.0_f64.ln()], &cfg);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    fn tiny_config() -> TrainingConfig {
        TrainingConfig {
            hidden_dim: 8,
            batch_size: 4,
            neg_sample_size: 4,
            learning_rate: 0.1,
            max_step: 300,
            seed: 11,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn memorizes_single_triple() {
        let graph = KnowledgeGraph::new(20, 1, [t(0, 0, 1)]);
        let cfg = TrainingConfig { max_step: 1000, ..tiny_config() };
        let (store, log) = train(&graph, &cfg).unwrap();
        let f = store.plausibility(EntityId(0), RelationId(0), EntityId(1)).unwrap();
        assert!(f > 0.9, "plausibility {f}");
        assert_eq!(log.steps, 1000);
        assert!(store.all_finite());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let graph = KnowledgeGraph::new(6, 2, [t(0, 0, 1), t(1, 1, 2), t(3, 0, 4), t(5, 1, 0)]);
        let (a, _) = train(&graph, &tiny_config()).unwrap();
        let (b, _) = train(&graph, &tiny_config()).unwrap();
        assert_eq!(a, b);
        let (c, _) = train(&graph, &TrainingConfig { seed: 12, ..tiny_config() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let graph = KnowledgeGraph::new(4, 1, [t(0, 0, 1), t(1, 0, 2)]);
        let cfg = TrainingConfig { learning_rate: 1e200, regularization_coef: 1.0, ..tiny_config() };
        match train(&graph, &cfg) {
            Err(Error::Divergence { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_graph_rejected() {
        let graph = KnowledgeGraph::empty(3, 1);
        assert!(matches!(train(&graph, &tiny_config()), Err(Error::Input(_))));
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((sigmoid(3.0) - plausibility_of_score(3.0)).abs() < 1e-15);
    }
}
