//! Property tests: invariants checked against independent oracles.

use proptest::prelude::*;

use sddnn_core::arch::{partition_features, PartitionMode};
use sddnn_core::features::{functionals_of_series, FeatureLayout, LldColumn, NUM_FUNCTIONALS};
use sddnn_core::nn::{
    adagrad_step, grad_check, init_params, Activation, Gradients, LayerShape, Network,
    OptimizerState,
};
use sddnn_core::session::{aggregate_session, fit_threshold};

// ---------------------------------------------------------------------------
// Session aggregation (geometric mean of clamped frame scores)
// ---------------------------------------------------------------------------

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, 1..60)
}

proptest! {
    #[test]
    fn aggregate_is_permutation_invariant(mut qs in scores(), seed in 0u64..1000) {
        let a = aggregate_session(&qs, 1e-6).unwrap();
        // Deterministic shuffle.
        let n = qs.len();
        for i in 0..n {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 17) % n;
            qs.swap(i, j);
        }
        let b = aggregate_session(&qs, 1e-6).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn aggregate_respects_min_max_bounds(qs in scores()) {
        let q = aggregate_session(&qs, 1e-6).unwrap();
        let clamped: Vec<f64> = qs.iter().map(|x| x.clamp(1e-6, 1.0 - 1e-6)).collect();
        let min = clamped.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = clamped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(q >= min - 1e-12 && q <= max + 1e-12);
        prop_assert!(q > 0.0 && q < 1.0);
    }

    #[test]
    fn aggregate_obeys_am_gm(qs in scores()) {
        let q = aggregate_session(&qs, 1e-6).unwrap();
        let clamped: Vec<f64> = qs.iter().map(|x| x.clamp(1e-6, 1.0 - 1e-6)).collect();
        let am = clamped.iter().sum::<f64>() / clamped.len() as f64;
        prop_assert!(q <= am + 1e-12, "geometric {q} above arithmetic {am}");
    }

    #[test]
    fn aggregate_is_strictly_monotone_in_each_score(
        qs in prop::collection::vec(0.01..=0.98f64, 1..40),
        pick in 0usize..40,
    ) {
        let i = pick % qs.len();
        let base = aggregate_session(&qs, 1e-6).unwrap();
        let mut bumped = qs.clone();
        bumped[i] += 0.01;
        let after = aggregate_session(&bumped, 1e-6).unwrap();
        prop_assert!(after > base, "bumping q[{i}] did not increase the aggregate");
    }
}

// ---------------------------------------------------------------------------
// Threshold fitting vs exhaustive evaluation
// ---------------------------------------------------------------------------

fn error_at(training: &[(f64, u8)], threshold: f64) -> f64 {
    let wrong = training
        .iter()
        .filter(|&&(q, label)| u8::from(q > threshold) != label)
        .count();
    wrong as f64 / training.len() as f64
}

proptest! {
    #[test]
    fn fitted_threshold_is_globally_optimal(
        qs in prop::collection::vec((0.0..=1.0f64, 0u8..=1), 2..50),
    ) {
        let mut training = qs;
        // Force both classes.
        training[0].1 = 0;
        let last = training.len() - 1;
        training[last].1 = 1;

        let model = fit_threshold(&training).unwrap();
        prop_assert!((error_at(&training, model.threshold) - model.training_error).abs() < 1e-12);

        // Exhaustive oracle: a dense grid plus points adjacent to every datum.
        let mut candidates: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        for &(q, _) in &training {
            candidates.push((q - 1e-9).max(0.0));
            candidates.push((q + 1e-9).min(1.0));
        }
        for c in candidates {
            prop_assert!(
                model.training_error <= error_at(&training, c) + 1e-12,
                "candidate {c} beats the fitted threshold"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Functionals vs a naive sorted-scan oracle
// ---------------------------------------------------------------------------

/// Independent oracle: percentile by explicit rank walk over a sorted copy,
/// mean/std by accumulation.
fn oracle_functionals(series: &[f64]) -> [f64; NUM_FUNCTIONALS] {
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let pct = |p: f64| -> f64 {
        let rank = p / 100.0 * (n as f64 - 1.0);
        let lo = rank.floor() as usize;
        if lo + 1 >= n {
            return sorted[n - 1];
        }
        let w = rank - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[lo + 1] * w
    };
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut ss = 0.0;
    for x in series {
        ss += (x - mean).powi(2);
    }
    [
        pct(1.0),
        pct(99.0),
        pct(99.0) - pct(1.0),
        mean,
        pct(50.0),
        (ss / n as f64).sqrt(),
    ]
}

proptest! {
    #[test]
    fn functionals_match_the_naive_oracle(
        series in prop::collection::vec(-100.0..100.0f64, 1..50),
    ) {
        let got = functionals_of_series(&series).unwrap();
        let want = oracle_functionals(&series);
        for (f, (g, w)) in got.iter().zip(&want).enumerate() {
            prop_assert!((g - w).abs() <= 1e-12, "functional {f}: {g} vs {w}");
        }
    }

    #[test]
    fn constant_shift_moves_locations_not_spread(
        series in prop::collection::vec(-10.0..10.0f64, 2..50),
        shift in -5.0..5.0f64,
    ) {
        let base = functionals_of_series(&series).unwrap();
        let shifted: Vec<f64> = series.iter().map(|x| x + shift).collect();
        let moved = functionals_of_series(&shifted).unwrap();
        // p1, p99, mean, median move by the shift.
        for f in [0, 1, 3, 4] {
            prop_assert!((moved[f] - base[f] - shift).abs() <= 1e-12);
        }
        // range and std stay put.
        for f in [2, 5] {
            prop_assert!((moved[f] - base[f]).abs() <= 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient fidelity and frozen immutability
// ---------------------------------------------------------------------------

fn random_dense_net(seed: u64, depth: usize) -> Network {
    // Small shapes keep parameter counts under 500.
    let dims = [7, 6, 5, 4, 3];
    let mut shapes = Vec::new();
    for d in 0..depth {
        let act = if d + 1 == depth {
            Activation::Sigmoid
        } else {
            Activation::Tanh
        };
        shapes.push(LayerShape::new(dims[d], dims[d + 1], act));
    }
    init_params(&shapes, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn backprop_matches_finite_differences(
        seed in 0u64..10_000,
        depth in 1usize..4,
        input in prop::collection::vec(-1.0..1.0f64, 7),
    ) {
        let net = random_dense_net(seed, depth);
        let target = vec![0.35; net.output_dim()];
        let report = grad_check(&net, &input, &target, 1e-5).unwrap();
        prop_assert!(
            report.max_rel_error < 1e-4,
            "max relative error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn frozen_parameters_never_move(seed in 0u64..10_000) {
        let mut net = random_dense_net(seed, 3);
        net.layers[0].trainable = false;
        let frozen = net.layers[0].clone();
        let mut state = OptimizerState::new(&net, 0.3, 1e-8).unwrap();
        let input = vec![0.2; 7];
        for step in 0..25 {
            let target = vec![f64::from(step % 2 == 0); net.output_dim()];
            let acts = net.forward(&input).unwrap();
            let grads = net.backward(&acts, &target).unwrap();
            adagrad_step(&mut net, &grads, &mut state).unwrap();
        }
        prop_assert!(net.layers[0]
            .weights
            .iter()
            .zip(&frozen.weights)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(net.layers[0]
            .biases
            .iter()
            .zip(&frozen.biases)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn scorer_outputs_stay_in_the_open_interval(
        seed in 0u64..10_000,
        scale in 0.1..50.0f64,
    ) {
        let mut net = random_dense_net(seed, 2);
        for layer in &mut net.layers {
            for w in &mut layer.weights {
                *w *= scale;
            }
        }
        let input = vec![1.0; 7];
        let acts = net.forward(&input).unwrap();
        for &y in acts.output() {
            prop_assert!(y > 0.0 && y < 1.0, "score {y} escaped (0,1)");
        }
    }
}

// ---------------------------------------------------------------------------
// Partition totality
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn random_partitions_cover_every_column_once(
        num_llds in 1usize..12,
        num_groups in 1usize..6,
        seed in 0u64..500,
    ) {
        let layout = FeatureLayout::new(
            (0..num_llds)
                .map(|i| LldColumn { name: format!("c{i}"), family: None })
                .collect(),
        )
        .unwrap();
        let dim = layout.frame_dim();
        prop_assume!(num_groups <= dim);
        let assignment =
            partition_features(PartitionMode::Random, &layout, num_groups, seed).unwrap();
        let mut seen: Vec<usize> = assignment
            .groups()
            .iter()
            .flat_map(|g| g.feature_indices.iter().copied())
            .collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..dim).collect::<Vec<_>>());
        let sizes: Vec<usize> = assignment
            .groups()
            .iter()
            .map(|g| g.feature_indices.len())
            .collect();
        let min = sizes.iter().min().unwrap();
        let max = sizes.iter().max().unwrap();
        prop_assert!(max - min <= 1);
    }
}

// ---------------------------------------------------------------------------
// Gradients structure
// ---------------------------------------------------------------------------

#[test]
fn gradients_mirror_trainable_structure() {
    let mut net = random_dense_net(3, 3);
    net.layers[1].trainable = false;
    let grads = Gradients::zeros(&net);
    assert!(grads.layers[0].is_some());
    assert!(grads.layers[1].is_none());
    assert!(grads.layers[2].is_some());
}
