use linklogic::eval::{ndcg_at_k, Gain};
use linklogic::explain::fit_nonneg_lasso;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Array2<f64>, Array1<f64>, f64)> {
    (5usize..40, 1usize..6).prop_flat_map(|(n, m)| {
        (proptest::collection::vec(-3.0f64..3.0, n * m), proptest::collection::vec(-3.0f64..3.0, n), 0.0f64..20.0)
            .prop_map(move |(x, y, penalty)| (Array2::from_shape_vec((n, m), x).unwrap(), Array1::from(y), penalty))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Optimality conditions of the non-negative Lasso on centered data:
    /// the gradient vanishes on the support and is non-negative off it.
    #[test]
    fn lasso_satisfies_kkt((x, y, penalty) in instance()) {
        let fit = fit_nonneg_lasso(x.view(), y.view(), penalty).unwrap();
        prop_assert!(fit.converged);
        let (n, m) = x.dim();
        let xm: Vec<f64> = (0..m).map(|j| x.column(j).sum() / n as f64).collect();
        let ym = y.sum() / n as f64;
        let resid: Vec<f64> = (0..n)
            .map(|i| (y[i] - ym) - (0..m).map(|j| (x[[i, j]] - xm[j]) * fit.coefficients[j]).sum::<f64>())
            .collect();
        for j in 0..m {
            let grad = -2.0 * (0..n).map(|i| (x[[i, j]] - xm[j]) * resid[i]).sum::<f64>() + penalty;
            let col_norm: f64 = (0..n).map(|i| (x[[i, j]] - xm[j]).powi(2)).sum();
            let tol = 1e-5 * (1.0 + col_norm);
            prop_assert!(fit.coefficients[j] >= 0.0);
            if col_norm == 0.0 {
                prop_assert_eq!(fit.coefficients[j], 0.0);
            } else if fit.coefficients[j] > 0.0 {
                prop_assert!(grad.abs() <= tol, "support gradient {}", grad);
            } else {
                prop_assert!(grad >= -tol, "off-support gradient {}", grad);
            }
        }
    }

    /// A sub-multiset of the ideal relevances never scores above 1, and the
    /// ideal order scores exactly 1.
    #[test]
    fn ndcg_is_bounded(ideal in proptest::collection::vec(prop_oneof![Just(0.5), Just(1.0)], 1..10), keep in proptest::collection::vec(any::<bool>(), 10), k in 1usize..8) {
        let mut ranking: Vec<f64> = ideal.iter().zip(&keep).map(|(&r, &kp)| if kp { r } else { 0.0 }).collect();
        ranking.reverse();
        for gain in [Gain::Linear, Gain::Exponential] {
            let (v, _) = ndcg_at_k(&ranking, &ideal, k, gain);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            let mut sorted = ideal.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            prop_assert!((ndcg_at_k(&sorted, &ideal, k, gain).0 - 1.0).abs() < 1e-12);
        }
    }
}
