mod common;

use common::data;
use emkit::dice::{
    dice_em, dice_sum_analyzer, marginalize, mle_independent, parse_dice_start, write_dice_start, DiceModel,
    DicePair, IndependentDiceDistribution,
};
use emkit::em::{expected_complete_corpus, EmOptions, SymbolicAnalyzer};
use emkit::estimation::{corpus_log_likelihood, relative_frequency_estimate, seeded_rng};
use emkit::io::parse_corpus;
use emkit::{Corpus, Error};

fn pairs() -> Corpus<DicePair> {
    parse_corpus(&data("dice_pairs.tsv")).unwrap()
}

fn pair(a: u8, b: u8) -> DicePair {
    DicePair::new(a, b).unwrap()
}

#[test]
fn pair_type_set() {
    assert_eq!(DicePair::all().count(), 36);
    assert!(DicePair::new(0, 1).is_err());
    assert!(DicePair::new(1, 7).is_err());
    assert_eq!("3,5".parse::<DicePair>().unwrap(), pair(3, 5));
    assert_eq!(pair(3, 5).to_string(), "3,5");
    assert!("3;5".parse::<DicePair>().is_err());
}

#[test]
fn marginal_corpora() {
    let (f1, f2) = marginalize(&pairs());
    assert_eq!(f1.size(), 100_000.0);
    assert_eq!(f2.size(), 100_000.0);
    assert_eq!(f1.get(&1), 15112.0);
    assert_eq!(f2.get(&1), 25112.0);
    assert_eq!(f1.get(&6), 25127.0);
    assert_eq!(f2.get(&6), 14807.0);

    let single = Corpus::from_pairs([(pair(3, 5), 7.0)]).unwrap();
    let (f1, f2) = marginalize(&single);
    assert_eq!(f1, Corpus::from_pairs([(3, 7.0)]).unwrap());
    assert_eq!(f2, Corpus::from_pairs([(5, 7.0)]).unwrap());
}

#[test]
fn independent_mle() {
    let p = mle_independent(&pairs()).unwrap();
    // 0.15112 * 0.25112 and 0.25127 * 0.25112
    assert!((p.prob(&pair(1, 1)) - 0.15112 * 0.25112).abs() < 1e-15);
    assert!((p.prob(&pair(1, 1)) - 0.0379493).abs() < 5e-8);
    assert!((p.prob(&pair(6, 1)) - 0.0630989).abs() < 5e-8);

    let uniform_corpus = Corpus::from_pairs(DicePair::all().map(|x| (x, 1.0))).unwrap();
    let u = mle_independent(&uniform_corpus).unwrap();
    assert!(DicePair::all().all(|x| (u.prob(&x) - 1.0 / 36.0).abs() < 1e-15));

    assert_eq!(mle_independent(&Corpus::new()).unwrap_err(), Error::EmptyCorpus);
}

#[test]
fn relative_frequencies_are_not_independent() {
    let f = pairs();
    let p_tilde = relative_frequency_estimate(&f).unwrap();
    let p_hat = mle_independent(&f).unwrap();
    let gap = (p_tilde.prob(&pair(1, 1)) - p_hat.prob(&pair(1, 1))).abs();
    assert!((gap - (0.0379493 - 0.03790)).abs() < 1e-7);
    assert!(gap > 0.0);
}

#[test]
fn joint_marginals_match_the_estimates() {
    let f = pairs();
    let p = mle_independent(&f).unwrap();
    let joint = p.joint();
    assert!((joint.total() - 1.0).abs() < 1e-12);
    let (f1, f2) = marginalize(&f);
    let (r1, r2) = (
        relative_frequency_estimate(&f1).unwrap(),
        relative_frequency_estimate(&f2).unwrap(),
    );
    for k in 1..=6u8 {
        let m1: f64 = (1..=6).map(|j| joint.prob(&pair(k, j))).sum();
        let m2: f64 = (1..=6).map(|j| joint.prob(&pair(j, k))).sum();
        assert!((m1 - r1.prob(&k)).abs() < 1e-12);
        assert!((m2 - r2.prob(&k)).abs() < 1e-12);
    }
}

#[test]
fn mle_dominates_random_independent_instances() {
    let f = pairs();
    let best = corpus_log_likelihood(&f, &mle_independent(&f).unwrap().joint());
    let mut rng = seeded_rng(11);
    for _ in 0..1000 {
        let p = IndependentDiceDistribution::random(&mut rng);
        assert!(corpus_log_likelihood(&f, &p.joint()) < best);
    }
}

#[test]
fn sum_analyzer_partitions_the_pairs() {
    let a = dice_sum_analyzer();
    assert_eq!(a.analyses(&4), vec![pair(1, 3), pair(2, 2), pair(3, 1)]);
    assert_eq!(a.analyses(&7).len(), 6);
    assert_eq!(a.analyses(&2), vec![pair(1, 1)]);
    assert_eq!(a.analyses(&12), vec![pair(6, 6)]);
    assert!(a.analyses(&13).is_empty());
    assert_eq!(a.yield_of(&pair(6, 6)), 12);
    assert_eq!((2..=12u8).map(|y| a.analyses(&y).len()).sum::<usize>(), 36);
    for x in DicePair::all() {
        assert!(a.analyses(&a.yield_of(&x)).contains(&x));
    }
}

#[test]
fn first_iteration_tables() {
    let f: Corpus<u8> = parse_corpus(&data("dice_sums.tsv")).unwrap();
    let p0 = parse_dice_start(&data("dice_start.tsv")).unwrap();
    let f_q = expected_complete_corpus(&f, &dice_sum_analyzer(), &DiceModel, &p0).unwrap();
    let (fq1, fq2) = marginalize(&f_q);
    assert!((fq1.get(&1) - 16788.86).abs() < 5e-3);
    assert!((fq2.get(&1) - 20680.56).abs() < 5e-3);

    let trace = dice_em(
        &f,
        p0,
        &EmOptions {
            max_iterations: 1,
            ..EmOptions::default()
        },
    )
    .unwrap();
    let p1 = trace.final_instance();
    assert!((p1.p1.prob(&1) - fq1.get(&1) / 100_000.0).abs() < 1e-15);
    assert!((p1.p1.prob(&1) - 0.167889).abs() < 5e-7);
}

#[test]
fn converged_marginals() {
    let f: Corpus<u8> = parse_corpus(&data("dice_sums.tsv")).unwrap();
    let p0 = parse_dice_start(&data("dice_start.tsv")).unwrap();
    let trace = dice_em(&f, p0, &EmOptions::default()).unwrap();
    assert!(trace.converged());
    let p = trace.final_instance();
    assert!((p.p1.prob(&1) - 0.158396).abs() < 1e-3);
    assert!((p.p2.prob(&1) - 0.239281).abs() < 1e-3);
    assert!((p.p1.prob(&3) - 0.204291).abs() < 1e-3);
    assert!((p.p2.prob(&2) - 0.260559).abs() < 1e-3);
    assert!(trace.is_monotone(emkit::EPS_MONO));
}

#[test]
fn symmetric_start_on_sevens_stays_symmetric() {
    let f = Corpus::from_pairs([(7u8, 100.0)]).unwrap();
    let trace = dice_em(&f, IndependentDiceDistribution::uniform(), &EmOptions::default()).unwrap();
    for it in &trace.iterates {
        assert_eq!(it.instance.p1, it.instance.p2);
    }
}

#[test]
fn sums_outside_the_dice_range_are_rejected() {
    let f = Corpus::from_pairs([(1u8, 3.0), (7, 1.0)]).unwrap();
    assert!(matches!(
        dice_em(&f, IndependentDiceDistribution::uniform(), &EmOptions::default()),
        Err(Error::OutOfRange(_))
    ));
}

#[test]
fn start_file_round_trip_and_errors() {
    let p0 = parse_dice_start(&data("dice_start.tsv")).unwrap();
    assert_eq!(p0.p1.prob(&1), 0.18);
    assert_eq!(p0.p2.prob(&6), 0.12);
    let back = parse_dice_start(&write_dice_start(&p0)).unwrap();
    assert!(back.p1.max_abs_diff(&p0.p1) < 1e-12 && back.p2.max_abs_diff(&p0.p2) < 1e-12);

    assert!(matches!(parse_dice_start("1\t1\n"), Err(Error::Format { .. })));
    assert!(matches!(
        parse_dice_start("7\t1\n\n1\t1\n"),
        Err(Error::Format { line: 1, .. })
    ));
    assert!(matches!(
        parse_dice_start("1\t0.5\n\n1\t1\n"),
        Err(Error::NotNormalized(_))
    ));
}
