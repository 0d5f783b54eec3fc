use std::collections::BTreeMap;

use digipop::analysis::{mae, rmse, theorem3_interval, theorem5_from_stats, Branch};
use digipop::beliefnet::kl_to_standard_normal;
use digipop::data::{
    load_report, load_responses, save_report, save_responses, Diagnostics, ProblemReport,
    ResponseFormat,
};
use digipop::decision::{aggregate, dawid_skene, glad, Aggregator, EmConfig, LabelMatrix};
use digipop::population::empirical_w1;
use digipop::{DecisionScale, Response, ResponseMatrix, RunReport};
use proptest::prelude::*;

fn values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..max_len)
}

fn dense_labels() -> impl Strategy<Value = (usize, Vec<Vec<Option<usize>>>)> {
    (2usize..4, 2usize..6, 2usize..12).prop_flat_map(|(k, workers, items)| {
        let row = prop::collection::vec(prop::option::weighted(0.8, 0..k), workers)
            .prop_filter("item needs a label", |r| r.iter().any(Option::is_some));
        (Just(k), prop::collection::vec(row, items))
    })
}

fn on_simplex(p: &[f64]) -> bool {
    p.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x))
        && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn w1_is_a_metric(a in values(30), b in values(30), c in values(30)) {
        let ab = empirical_w1(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - empirical_w1(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert!(empirical_w1(&a, &a).unwrap() < 1e-12);
        let ac = empirical_w1(&a, &c).unwrap();
        let cb = empirical_w1(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }

    #[test]
    fn rmse_dominates_mae(r in values(50)) {
        prop_assert!(rmse(&r).unwrap() + 1e-12 >= mae(&r).unwrap());
    }

    #[test]
    fn projection_lands_on_scale(v in -1e6f64..1e6, lo in -50.0f64..50.0, width in 0.1f64..100.0, k in 2usize..7) {
        let scales = [
            DecisionScale::continuous(lo, lo + width).unwrap(),
            DecisionScale::likert(1, k as i32).unwrap(),
            DecisionScale::choice(k).unwrap(),
        ];
        for s in scales {
            let p = s.project(v);
            prop_assert!(s.contains(p), "{s} does not contain {p}");
            prop_assert_eq!(s.project(p), p);
        }
    }

    #[test]
    fn aggregators_stay_within_range(v in values(40)) {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for m in [Aggregator::Mean, Aggregator::Median, Aggregator::Majority] {
            let a = aggregate(&v, m).unwrap();
            prop_assert!(a >= lo - 1e-9 && a <= hi + 1e-9);
        }
        let maj = aggregate(&v, Aggregator::Majority).unwrap();
        prop_assert!(v.contains(&maj));
    }

    #[test]
    fn em_posteriors_are_distributions((k, dense) in dense_labels()) {
        let m = LabelMatrix::from_dense(k, &dense).unwrap();
        for r in [dawid_skene(&m, &EmConfig::default()).unwrap(), glad(&m, &EmConfig::default()).unwrap()] {
            prop_assert_eq!(r.posteriors.len(), dense.len());
            for (p, &l) in r.posteriors.iter().zip(&r.labels) {
                prop_assert!(on_simplex(p));
                prop_assert!(l < k);
            }
            for t in &r.traces {
                prop_assert!(t.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            }
        }
    }

    #[test]
    fn confidence_shrinks_with_sample_size(n in 2usize..500, m in 2usize..500, sd in 0.0f64..4.0, sr in 0.0f64..4.0, eta in 0.0f64..2.0) {
        let a = theorem5_from_stats(0.0, n, m, sd, sr, eta, 0.05, 0.1).unwrap();
        let b = theorem5_from_stats(0.0, 2 * n, m, sd, sr, eta, 0.05, 0.1).unwrap();
        let c = theorem5_from_stats(0.0, n, 2 * m, sd, sr, eta, 0.05, 0.1).unwrap();
        prop_assert!(b.half_width <= a.half_width + 1e-12);
        prop_assert!(c.half_width <= a.half_width + 1e-12);
        prop_assert!(a.half_width >= 0.1);
    }

    #[test]
    fn tolerance_is_continuous_at_boundary(n in 3usize..60, kappa in 0.01f64..3.0, share in 0.0f64..1.0) {
        let nf = n as f64;
        // Split the boundary value of s between the two terms.
        let s = 2.0 * (kappa * nf / (nf - 2.0)).powi(2);
        let eta = share * s / nf;
        let eps2 = (1.0 - share) * s / (nf - 2.0);
        prop_assume!(eps2 > 1e-6);
        let lo = theorem3_interval(n, kappa, eps2 * (1.0 - 1e-9), eta, 0.0).unwrap();
        let hi = theorem3_interval(n, kappa, eps2 * (1.0 + 1e-9), eta, 0.0).unwrap();
        prop_assert_eq!(lo.branch, Branch::H2);
        prop_assert_eq!(hi.branch, Branch::H1);
        prop_assert!((lo.h - hi.h).abs() < 1e-6 * (1.0 + hi.h));
    }

    #[test]
    fn tolerance_half_width_is_nonnegative(n in 2usize..100, kappa in 0.0f64..5.0, eps2 in 0.0f64..5.0, eta in 0.0f64..5.0, delta in -5.0f64..5.0) {
        let t = theorem3_interval(n, kappa, eps2, eta, delta).unwrap();
        prop_assert!(t.h >= 0.0);
        prop_assert!(t.lower <= delta && delta <= t.upper);
    }

    #[test]
    fn response_matrix_round_trips(cells in prop::collection::btree_map((0usize..8, 0usize..6), 1.0f64..5.0, 1..30)) {
        let responses: Vec<Response> = cells
            .iter()
            .map(|(&(i, t), &v)| Response::new(format!("w{i}"), format!("t{t}"), (v * 100.0).round() / 100.0))
            .collect();
        let matrix = ResponseMatrix::new(responses).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        save_responses(&path, &matrix).unwrap();
        let back = load_responses(&path, ResponseFormat::Csv, None).unwrap();
        prop_assert_eq!(back, matrix);
    }

    #[test]
    fn run_report_round_trips(seed in any::<u64>(), decisions in values(10), w in 0.0f64..10.0) {
        let mut aggregated = BTreeMap::new();
        aggregated.insert("mean".to_string(), decisions.iter().sum::<f64>() / decisions.len() as f64);
        let report = RunReport {
            seed,
            config: serde_json::json!({"seed": seed}),
            problems: vec![ProblemReport {
                problem_id: "p".into(),
                y_ref: Some(3.0),
                human_decisions: decisions.iter().rev().copied().collect(),
                decisions,
                aggregated: aggregated.clone(),
                human_aggregated: aggregated,
                wasserstein: w,
            }],
            metrics: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        save_report(&report, &path).unwrap();
        prop_assert_eq!(load_report(&path).unwrap(), report);
    }

    #[test]
    fn kl_is_nonnegative(pairs in prop::collection::vec((-5.0f64..5.0, 1e-3f64..10.0), 1..8)) {
        let (mu, var): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(kl_to_standard_normal(&mu, &var) >= -1e-12);
        let zero = kl_to_standard_normal(&vec![0.0; mu.len()], &vec![1.0; mu.len()]);
        prop_assert!(zero.abs() < 1e-12);
    }
}
