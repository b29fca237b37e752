use ews_core::evaluation::roc_auc;
use ews_core::indicators::{detrend, kendall_tau, lowess_smooth, rolling_lag1_ac, rolling_variance};
use ews_core::learned::{expanding_predictions, loss_and_grad, Architecture, Classifier, N_INPUTS};
use ews_core::scenario::{Class, Window};
use proptest::prelude::*;

/// τ-b against the time index by direct pair counting.
fn brute_tau(y: &[f64]) -> Option<f64> {
    let n = y.len();
    let (mut s, mut ties) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            if y[j] > y[i] {
                s += 1;
            } else if y[j] < y[i] {
                s -= 1;
            } else {
                ties += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if n0 == ties {
        return None;
    }
    Some(s as f64 / ((n0 as f64) * ((n0 - ties) as f64)).sqrt())
}

fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &pi) in positive.iter().enumerate() {
        for (j, &pj) in positive.iter().enumerate() {
            if pi && !pj {
                pairs += 1.0;
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn tied_series(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..8).prop_map(|v| v as f64 * 0.5), 2..max)
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..30)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0i32..10).prop_map(|v| v as f64 / 10.0), n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_filter("both classes", |(_, l)| l.iter().any(|&b| b) && l.iter().any(|&b| !b))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn kendall_matches_pair_counting(y in tied_series(50)) {
        let fast = kendall_tau(&y).unwrap();
        let slow = brute_tau(&y);
        match (fast, slow) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn auc_matches_pair_counting((scores, labels) in scored_labels()) {
        let auc = roc_auc(&scores, &labels).unwrap().auc;
        prop_assert!((auc - brute_auc(&scores, &labels)).abs() < 1e-12);
        let flipped: Vec<bool> = labels.iter().map(|b| !b).collect();
        prop_assert!((roc_auc(&scores, &flipped).unwrap().auc - (1.0 - auc)).abs() < 1e-12);
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&warped, &labels).unwrap().auc, auc);
    }

    #[test]
    fn detrending_decomposes_and_is_equivariant(
        x in prop::collection::vec(-100.0..100.0f64, 10..200), shift in -1e3..1e3f64, c in 0.1..10.0f64,
    ) {
        let d = detrend(&x, 0.2).unwrap();
        for ((t, r), v) in d.trend.iter().zip(&d.residuals).zip(&x) {
            prop_assert!(close(t + r, *v, 1e-9));
        }
        let moved: Vec<f64> = x.iter().map(|v| c * v + shift).collect();
        let trend = lowess_smooth(&moved, 0.2).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max) * c + shift.abs();
        for (a, b) in trend.iter().zip(&d.trend) {
            prop_assert!((a - (c * b + shift)).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn rolling_indicators_shift_and_scale(
        x in prop::collection::vec(-10.0..10.0f64, 20..200), shift in -100.0..100.0f64, c in 0.1..10.0f64,
    ) {
        let base_v = rolling_variance(&x, 0.25).unwrap();
        let base_a = rolling_lag1_ac(&x, 0.25).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| c * v + shift).collect();
        let v = rolling_variance(&moved, 0.25).unwrap();
        let a = rolling_lag1_ac(&moved, 0.25).unwrap();
        // Rounding in the shifted series scales with its magnitude.
        let mag = (c * x.iter().map(|v| v.abs()).fold(0.0, f64::max) + shift.abs()).powi(2);
        for (p, q) in v.values.iter().zip(&base_v.values) {
            let (p, q) = (p.unwrap(), q.unwrap());
            prop_assert!(p >= 0.0);
            prop_assert!((p - c * c * q).abs() <= 1e-10 * mag);
        }
        for (p, q) in a.values.iter().zip(&base_a.values) {
            match (p, q) {
                (Some(p), Some(q)) => {
                    prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(p));
                    prop_assert!((p - q).abs() <= 1e-6, "{} vs {}", p, q);
                }
                (None, None) => {}
                other => prop_assert!(false, "definedness changed: {:?}", other),
            }
        }
    }

    #[test]
    fn predictions_lie_on_the_simplex(
        params in prop::collection::vec(-5.0..5.0f64, 2 * N_INPUTS + 2),
        values in prop::collection::vec(-3.0..3.0f64, 100),
        pad in 0usize..90,
    ) {
        let mut c = Classifier::zeroed(Architecture::Softmax, 100).unwrap();
        c.params = params;
        let mut values = values;
        for v in &mut values[100 - pad..] {
            *v = 0.0;
        }
        let w = Window { values, label: Class::Null, pad_count: pad, source: 0 };
        let p = c.predict(&w).unwrap();
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences(seed in any::<u64>(), conv in any::<bool>()) {
        use rand::Rng;
        let mut rng = ews_core::stream::stream(seed, 0);
        let arch = if conv { Architecture::Conv1d { filters: 2, width: 3 } } else { Architecture::Softmax };
        let dim = 9;
        let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let ys: Vec<usize> = (0..6).map(|i| i % 2).collect();
        let params: Vec<f64> = (0..arch.n_params(dim)).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Architecture::Conv1d { filters, width } = arch {
            // Kernels come first, then one bias per filter; a ReLU kink inside
            // the stencil defeats central differences.
            let nearest = xs.iter().flat_map(|x| {
                let params = &params;
                (0..filters).flat_map(move |f| {
                    (0..=dim - width).map(move |s| {
                        let z: f64 = (0..width).map(|k| params[f * width + k] * x[s + k]).sum();
                        (z + params[filters * width + f]).abs()
                    })
                })
            });
            prop_assume!(nearest.fold(f64::INFINITY, f64::min) > 1e-3);
        }
        let (_, grad) = loss_and_grad(&arch, &params, &refs, &ys, 1e-3);
        let h = 1e-6;
        let mut numeric = Vec::with_capacity(params.len());
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            let up = loss_and_grad(&arch, &p, &refs, &ys, 1e-3).0;
            p[i] -= 2.0 * h;
            let down = loss_and_grad(&arch, &p, &refs, &ys, 1e-3).0;
            numeric.push((up - down) / (2.0 * h));
        }
        // Central differences carry ~1e-10 of rounding noise at this step.
        for (i, (a, n)) in grad.iter().zip(&numeric).enumerate() {
            prop_assert!((a - n).abs() <= 1e-5 * a.abs().max(n.abs()) + 1e-9, "param {}: analytic {} numeric {}", i, a, n);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = grad.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        prop_assert!(norm(&diff) <= 1e-5 * (norm(&grad) + norm(&numeric)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prediction_traces_ignore_series_scale(
        params in prop::collection::vec(-2.0..2.0f64, 2 * N_INPUTS + 2),
        noise in prop::collection::vec(-1.0..1.0f64, 200),
        c in 0.01..100.0f64,
    ) {
        let mut m = Classifier::zeroed(Architecture::Softmax, 100).unwrap();
        m.params = params;
        let series: Vec<f64> = noise.iter().enumerate().map(|(t, e)| 50.0 + t as f64 * 0.1 + e * (1.0 + t as f64 / 100.0)).collect();
        let scaled: Vec<f64> = series.iter().map(|v| c * v).collect();
        let a = expanding_predictions(std::slice::from_ref(&m), &series, 100).unwrap();
        let b = expanding_predictions(std::slice::from_ref(&m), &scaled, 100).unwrap();
        prop_assert_eq!(&a.times, &b.times);
        for (p, q) in a.probs.iter().zip(&b.probs) {
            prop_assert!((p[0] - q[0]).abs() <= 1e-9, "{:?} vs {:?}", p, q);
        }
    }
}
