mod common;

use std::collections::BTreeMap;

use common::data;
use emkit::estimation::{random_distribution, relative_frequency_estimate, seeded_rng};
use emkit::io::parse_corpus;
use emkit::maxent::{
    exponential_prob, feature_expectation, in_constrained_model, maxent_duality_check, parse_feature_table,
    DualityGrid, ExponentialModelInstance, FeatureSet,
};
use emkit::{Corpus, Distribution, Error};
use proptest::prelude::*;

#[test]
fn expectations_from_files() {
    let fs: FeatureSet<String> = parse_feature_table(&data("indicator_features.tsv")).unwrap();
    let p = Distribution::from_pairs([("a".to_string(), 0.2), ("b".to_string(), 0.8)]).unwrap();
    assert_eq!(feature_expectation(&p, &fs), vec![0.2]);

    let f: Corpus<String> = parse_corpus(&data("two_types.tsv")).unwrap();
    let u = Distribution::uniform(["a".to_string(), "b".to_string()]).unwrap();
    assert!(!in_constrained_model(&u, &fs, &f, 1e-9).unwrap());
    assert_eq!(feature_expectation(&u, &fs), vec![0.5]);
    assert_eq!(
        feature_expectation(&relative_frequency_estimate(&f).unwrap(), &fs),
        vec![0.25]
    );
}

#[test]
fn constant_feature_has_expectation_one() {
    let fs = FeatureSet::new().with("one", |_: &u8| 1.0);
    let p = random_distribution(&[1u8, 2, 3, 4], &mut seeded_rng(1)).unwrap();
    assert!((feature_expectation(&p, &fs)[0] - 1.0).abs() < 1e-15);
}

#[test]
fn weight_count_must_match_features() {
    let fs = FeatureSet::new().with("one", |_: &u8| 1.0);
    let m = ExponentialModelInstance::new(vec![], [1u8, 2]);
    assert!(matches!(exponential_prob(&m, &fs), Err(Error::InvalidOptions(_))));
}

#[test]
fn reference_must_cover_the_support() {
    let fs: FeatureSet<u8> = FeatureSet::new();
    let p0 = Distribution::from_pairs([(1u8, 1.0)]).unwrap();
    let m = ExponentialModelInstance::new(vec![], [1u8, 2]).with_reference(p0);
    assert!(matches!(exponential_prob(&m, &fs), Err(Error::OutOfRange(_))));
}

#[test]
fn duality_with_one_indicator_on_two_types() {
    let fs: FeatureSet<String> = parse_feature_table(&data("indicator_features.tsv")).unwrap();
    let f: Corpus<String> = parse_corpus(&data("two_types.tsv")).unwrap();
    let support = ["a".to_string(), "b".to_string()];
    let r = maxent_duality_check(&support, &fs, &f, &DualityGrid::default()).unwrap();
    assert!(r.passed, "{r:?}");
    let closed_form = Distribution::from_pairs([("a".to_string(), 0.25), ("b".to_string(), 0.75)]).unwrap();
    assert!(r.maxent.max_abs_diff(&closed_form) <= r.resolution);
    assert!(r.mle.max_abs_diff(&closed_form) <= r.resolution);
    // lambda = ln(1/3) gives exactly 1/4 : 3/4
    assert!((r.mle_lambdas[0] - (1.0f64 / 3.0).ln()).abs() <= 0.01);
}

#[test]
fn duality_without_features_is_uniform() {
    let fs: FeatureSet<String> = FeatureSet::new();
    let f: Corpus<String> = parse_corpus(&data("abc.tsv")).unwrap();
    let support = ["a".to_string(), "b".to_string(), "c".to_string()];
    let r = maxent_duality_check(&support, &fs, &f, &DualityGrid::default()).unwrap();
    assert!(r.passed);
    let u = Distribution::uniform(support.clone()).unwrap();
    assert!(r.mle.max_abs_diff(&u) < 1e-15);
    assert!(r.maxent.max_abs_diff(&u) <= 3.0 / 240.0);
}

#[test]
fn duality_with_a_linear_feature_on_three_types() {
    let fs = FeatureSet::new().with("f", |x: &u8| *x as f64);
    // E f = (0 * 3 + 1 * 4 + 2 * 3) / 10 = 1
    let f = Corpus::from_pairs([(0u8, 3.0), (1, 4.0), (2, 3.0)]).unwrap();
    let r = maxent_duality_check(&[0u8, 1, 2], &fs, &f, &DualityGrid::default()).unwrap();
    assert!(r.passed, "{r:?}");
    // Mean 1 on {0, 1, 2} with maximal entropy is uniform (lambda = 0).
    assert!(r.mle_lambdas[0].abs() < 1e-9);
}

#[test]
fn duality_scale_limits() {
    let support: Vec<u8> = (0..13).collect();
    let fs = FeatureSet::new().with("f", |x: &u8| *x as f64);
    let f = Corpus::from_pairs([(0u8, 1.0)]).unwrap();
    assert!(matches!(
        maxent_duality_check(&support, &fs, &f, &DualityGrid::default()),
        Err(Error::ScaleExceeded(_))
    ));
    let mut four = FeatureSet::new();
    for i in 0..4 {
        four.push(format!("f{i}"), move |x: &u8| (*x == i) as u8 as f64);
    }
    assert!(matches!(
        maxent_duality_check(&[0u8, 1], &four, &f, &DualityGrid::default()),
        Err(Error::ScaleExceeded(_))
    ));
    let dense = DualityGrid {
        simplex_steps: 10_000,
        ..DualityGrid::default()
    };
    assert!(matches!(
        maxent_duality_check(&[0u8, 1, 2, 3], &fs, &f, &dense),
        Err(Error::ScaleExceeded(_))
    ));
}

fn table_features(values: &[Vec<f64>]) -> FeatureSet<usize> {
    let tables = values
        .iter()
        .enumerate()
        .map(|(i, col)| {
            (
                format!("f{i}"),
                col.iter().copied().enumerate().collect::<BTreeMap<_, _>>(),
            )
        })
        .collect();
    FeatureSet::from_tables(tables)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, rng_algorithm: prop::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn exponential_models_are_normalized_and_shift_invariant(
        n in 1usize..8,
        d in 1usize..4,
        seed in any::<u64>(),
        shift in -50.0f64..50.0,
    ) {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        let values: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let lambdas: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let fs = table_features(&values);
        let m = ExponentialModelInstance::new(lambdas, 0..n);
        let p = exponential_prob(&m, &fs).unwrap();
        prop_assert!((p.total() - 1.0).abs() <= 1e-9);

        let mut shifted = values.clone();
        shifted[0].iter_mut().for_each(|v| *v += shift);
        let q = exponential_prob(&m, &table_features(&shifted)).unwrap();
        prop_assert!(p.max_abs_diff(&q) <= 1e-9);
    }

    #[test]
    fn relative_frequencies_satisfy_their_own_constraints(
        counts in prop::collection::vec(0.0f64..20.0, 1..8),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        prop_assume!(counts.iter().sum::<f64>() > 0.0);
        let mut rng = seeded_rng(seed);
        let n = counts.len();
        let values: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let fs = table_features(&values);
        let f = Corpus::from_pairs(counts.into_iter().enumerate()).unwrap();
        let p_tilde = relative_frequency_estimate(&f).unwrap();
        prop_assert!(in_constrained_model(&p_tilde, &fs, &f, 1e-9).unwrap());
    }
}
