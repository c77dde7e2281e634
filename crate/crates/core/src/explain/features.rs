use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::paths::Path;
use super::sigma::Sigmas;
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};
use crate::kge::{complex_score, hop_score, plausibility_of_score, ComplexView, EmbeddingStore};

/// `n` perturbed copies of the query head and tail. Row `i` holds the real
/// layout `[re_0 .. re_d-1, im_0 .. im_d-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedQueries {
    pub heads: Array2<f64>,
    pub tails: Array2<f64>,
}

fn split_row(row: &[f64]) -> ComplexView<'_> {
    let (re, im) = row.split_at(row.len() / 2);
    ComplexView { re, im }
}

impl PerturbedQueries {
    pub fn len(&self) -> usize {
        self.heads.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.nrows() == 0
    }

    pub fn head(&self, i: usize) -> ComplexView<'_> {
        split_row(self.heads.row(i).to_slice().expect("standard layout"))
    }

    pub fn tail(&self, i: usize) -> ComplexView<'_> {
        split_row(self.tails.row(i).to_slice().expect("standard layout"))
    }
}

/// `h_i = h + alpha * sigma_h * z` and `t_i = t + alpha * sigma_t * z'` with
/// independent standard normal draws for every real component. Draws are
/// taken in row order, head before tail, from stream 0 of a ChaCha8
/// generator seeded with `seed`.
pub fn perturb_queries(
    store: &EmbeddingStore,
    query: &Triple,
    sigmas: Sigmas,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<PerturbedQueries> {
    store.check_triple(query)?;
    if !(alpha >= 0.0 && alpha.is_finite() && sigmas.sigma_h >= 0.0 && sigmas.sigma_t >= 0.0) {
        return Err(Error::Numeric(format!("invalid perturbation scale alpha={alpha} sigmas={sigmas:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let d2 = 2 * store.dim();
    let h: Vec<f64> = store.entity(query.head).real_components().collect();
    let t: Vec<f64> = store.entity(query.tail).real_components().collect();
    let (sh, st) = (alpha * sigmas.sigma_h, alpha * sigmas.sigma_t);
    let mut heads = Array2::zeros((n, d2));
    let mut tails = Array2::zeros((n, d2));
    for i in 0..n {
        for (j, x) in heads.row_mut(i).iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = h[j] + sh * z;
        }
        for (j, x) in tails.row_mut(i).iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = t[j] + st * z;
        }
    }
    Ok(PerturbedQueries { heads, tails })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum End {
    Head,
    Tail,
    Fixed(EntityId),
}

type Hop = (End, RelationId, End);

/// `w` such that `score(x, r, e) = <x, w>` over the real layout of `x`.
fn linear_as_head(r: ComplexView<'_>, e: ComplexView<'_>) -> Vec<f64> {
    let d = r.dim();
    let mut w = vec![0.0; 2 * d];
    for i in 0..d {
        w[i] = r.re[i] * e.re[i] + r.im[i] * e.im[i];
        w[d + i] = r.re[i] * e.im[i] - r.im[i] * e.re[i];
    }
    w
}

/// `w` such that `score(e, r, x) = <x, w>` over the real layout of `x`.
fn linear_as_tail(e: ComplexView<'_>, r: ComplexView<'_>) -> Vec<f64> {
    let d = r.dim();
    let mut w = vec![0.0; 2 * d];
    for i in 0..d {
        w[i] = r.re[i] * e.re[i] - r.im[i] * e.im[i];
        w[d + i] = r.re[i] * e.im[i] + r.im[i] * e.re[i];
    }
    w
}

/// Raw scores `rows · W` for a set of linear hops, one column per hop.
fn linear_scores(rows: &Array2<f64>, weights: &[Vec<f64>]) -> Array2<f64> {
    let d2 = rows.ncols();
    let mut w = Array2::zeros((d2, weights.len()));
    for (k, col) in weights.iter().enumerate() {
        for (j, &x) in col.iter().enumerate() {
            w[[j, k]] = x;
        }
    }
    rows.dot(&w)
}

/// Feature matrix: entry `(i, j)` is `S(P_j)` with the query head and tail
/// replaced by the `i`-th perturbed pair. Interior entities and relations
/// keep their stored embeddings.
pub fn compute_features(
    store: &EmbeddingStore,
    query: &Triple,
    perturbed: &PerturbedQueries,
    paths: &[Path],
) -> Result<Array2<f64>> {
    store.check_triple(query)?;
    let n = perturbed.len();
    let end = |e: EntityId| {
        if e == query.head {
            End::Head
        } else if e == query.tail {
            End::Tail
        } else {
            End::Fixed(e)
        }
    };

    let mut hop_index: HashMap<Hop, usize> = HashMap::new();
    let mut hops: Vec<Hop> = Vec::new();
    let mut path_hops: Vec<Vec<usize>> = Vec::with_capacity(paths.len());
    for p in paths {
        if !p.is_well_formed() {
            return Err(Error::Lookup(format!("malformed path {p:?}")));
        }
        let mut idx = Vec::with_capacity(p.len());
        for hop in p.hops() {
            store.check_triple(&hop)?;
            let key = (end(hop.head), hop.relation, end(hop.tail));
            let k = *hop_index.entry(key).or_insert_with(|| {
                hops.push(key);
                hops.len() - 1
            });
            idx.push(k);
        }
        path_hops.push(idx);
    }

    let mut values = Array2::<f64>::zeros((n, hops.len()));
    let mut head_linear: (Vec<usize>, Vec<Vec<f64>>) = (Vec::new(), Vec::new());
    let mut tail_linear: (Vec<usize>, Vec<Vec<f64>>) = (Vec::new(), Vec::new());
    for (k, &(a, r, b)) in hops.iter().enumerate() {
        let rv = store.relation(r);
        match (a, b) {
            (End::Fixed(x), End::Fixed(y)) => {
                let v = hop_score(plausibility_of_score(complex_score(store.entity(x), rv, store.entity(y))));
                values.column_mut(k).fill(v);
            }
            (End::Head, End::Fixed(e)) => {
                head_linear.0.push(k);
                head_linear.1.push(linear_as_head(rv, store.entity(e)));
            }
            (End::Fixed(e), End::Head) => {
                head_linear.0.push(k);
                head_linear.1.push(linear_as_tail(store.entity(e), rv));
            }
            (End::Tail, End::Fixed(e)) => {
                tail_linear.0.push(k);
                tail_linear.1.push(linear_as_head(rv, store.entity(e)));
            }
            (End::Fixed(e), End::Tail) => {
                tail_linear.0.push(k);
                tail_linear.1.push(linear_as_tail(store.entity(e), rv));
            }
            _ => {
                let pick = |side: End, i: usize| match side {
                    End::Head => perturbed.head(i),
                    _ => perturbed.tail(i),
                };
                for i in 0..n {
                    values[[i, k]] = hop_score(plausibility_of_score(complex_score(pick(a, i), rv, pick(b, i))));
                }
            }
        }
    }
    for (rows, (cols, weights)) in [(&perturbed.heads, head_linear), (&perturbed.tails, tail_linear)] {
        if cols.is_empty() {
            continue;
        }
        let raw = linear_scores(rows, &weights);
        for (c, &k) in cols.iter().enumerate() {
            for i in 0..n {
                values[[i, k]] = hop_score(plausibility_of_score(raw[[i, c]]));
            }
        }
    }

    let mut x = Array2::<f64>::zeros((n, paths.len()));
    for (j, idx) in path_hops.iter().enumerate() {
        let l = idx.len() as f64;
        for i in 0..n {
            let mut s = 0.0;
            for &k in idx {
                s += values[[i, k]];
            }
            x[[i, j]] = s / l;
        }
    }
    Ok(x)
}

/// Labels `y_i = -ln(1 - f(h_i, r, t_i))`.
pub fn compute_labels(
    store: &EmbeddingStore,
    perturbed: &PerturbedQueries,
    relation: RelationId,
) -> Result<Array1<f64>> {
    let r = store.try_relation(relation)?;
    Ok((0..perturbed.len())
        .map(|i| hop_score(plausibility_of_score(complex_score(perturbed.head(i), r, perturbed.tail(i)))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::path_score;
    use crate::kge::EmbeddingVector;

    fn store() -> EmbeddingStore {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        EmbeddingStore::random_uniform(6, 2, 3, 1.0, &mut rng)
    }

    fn q() -> Triple {
        Triple::new(EntityId(0), RelationId(0), EntityId(1))
    }

    fn sig(a: f64, b: f64) -> Sigmas {
        Sigmas { sigma_h: a, sigma_t: b }
    }

    fn toy_paths() -> Vec<Path> {
        vec![
            Path::one_hop(EntityId(1), RelationId(1), EntityId(0)),
            Path::one_hop(EntityId(0), RelationId(1), EntityId(3)),
            Path::two_hop(EntityId(0), RelationId(0), EntityId(2), RelationId(1), EntityId(1)),
            Path::two_hop(EntityId(1), RelationId(1), EntityId(4), RelationId(0), EntityId(0)),
            Path::one_hop(EntityId(3), RelationId(0), EntityId(4)),
            Path::one_hop(EntityId(5), RelationId(1), EntityId(1)),
        ]
    }

    #[test]
    fn zero_alpha_keeps_query() {
        let s = store();
        let p = perturb_queries(&s, &q(), sig(0.5, 0.5), 0.0, 5, 1).unwrap();
        for i in 0..5 {
            assert_eq!(EmbeddingVector::from_view(p.head(i)), EmbeddingVector::from_view(s.entity(EntityId(0))));
        }
        let p = perturb_queries(&s, &q(), sig(0.0, 0.5), 3.0, 5, 1).unwrap();
        assert_eq!(EmbeddingVector::from_view(p.head(2)), EmbeddingVector::from_view(s.entity(EntityId(0))));
        assert_ne!(EmbeddingVector::from_view(p.tail(2)), EmbeddingVector::from_view(s.entity(EntityId(1))));
    }

    #[test]
    fn sample_mean_near_center() {
        let s = store();
        let sigma = 0.4;
        let n = 10_000;
        let p = perturb_queries(&s, &q(), sig(sigma, sigma), 1.0, n, 9).unwrap();
        let mean = p.heads.mean_axis(ndarray::Axis(0)).unwrap();
        let h: Vec<f64> = s.entity(EntityId(0)).real_components().collect();
        for (m, c) in mean.iter().zip(&h) {
            assert!((m - c).abs() < 4.0 * sigma / (n as f64).sqrt());
        }
    }

    #[test]
    fn features_match_direct_recomputation() {
        let s = store();
        let p = perturb_queries(&s, &q(), sig(0.3, 0.2), 1.0, 3, 4).unwrap();
        let paths = toy_paths();
        let x = compute_features(&s, &q(), &p, &paths).unwrap();
        for i in 0..3 {
            let mut si = s.clone();
            si.set_entity(EntityId(0), &EmbeddingVector::from_view(p.head(i)));
            si.set_entity(EntityId(1), &EmbeddingVector::from_view(p.tail(i)));
            for (j, path) in paths.iter().enumerate() {
                let want = path_score(&si, path).unwrap();
                assert!((x[[i, j]] - want).abs() < 1e-12, "({i},{j}) {} vs {want}", x[[i, j]]);
            }
        }
        // paths without a perturbed endpoint are exactly constant
        assert!(x.column(4).iter().all(|&v| v == x[[0, 4]]));
    }

    #[test]
    fn zero_alpha_rows_equal_unperturbed_scores() {
        let s = store();
        let p = perturb_queries(&s, &q(), sig(0.3, 0.2), 0.0, 4, 4).unwrap();
        let paths = toy_paths();
        let x = compute_features(&s, &q(), &p, &paths).unwrap();
        for (j, path) in paths.iter().enumerate() {
            let want = path_score(&s, path).unwrap();
            for i in 0..4 {
                assert!((x[[i, j]] - want).abs() < 1e-12);
            }
        }
        let y = compute_labels(&s, &p, RelationId(0)).unwrap();
        let want = path_score(&s, &Path::one_hop(EntityId(0), RelationId(0), EntityId(1))).unwrap();
        assert!(y.iter().all(|&v| v == want));
    }

    #[test]
    fn labels_share_the_feature_kernel() {
        let s = store();
        let p = perturb_queries(&s, &q(), sig(0.3, 0.2), 1.0, 7, 5).unwrap();
        let y = compute_labels(&s, &p, RelationId(0)).unwrap();
        let x = compute_features(&s, &q(), &p, &[Path::one_hop(EntityId(0), RelationId(0), EntityId(1))]).unwrap();
        for i in 0..7 {
            assert_eq!(y[i], x[[i, 0]]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let s = store();
        let a = perturb_queries(&s, &q(), sig(0.3, 0.2), 1.0, 7, 5).unwrap();
        let b = perturb_queries(&s, &q(), sig(0.3, 0.2), 1.0, 7, 5).unwrap();
        assert_eq!(a, b);
    }
}
