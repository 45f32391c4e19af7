//! Relative-frequency and maximum-likelihood estimation, plus the entropy
//! toolbox. All logarithms are base 2, so likelihoods are in bits.
//!
//! The zero conventions are applied exactly rather than left to IEEE
//! arithmetic: `p^0 = 1` (so `0 * log 0 = 0`) and `p * log(p / 0) = inf`.

use std::collections::BTreeMap;
use std::fmt::Debug;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Distribution};
use crate::error::{Error, Result};

/// Deterministic generator used for every random start and property check.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p~(x) = f(x) / |f|`.
pub fn relative_frequency_estimate<T: Ord + Clone + Debug>(f: &Corpus<T>) -> Result<Distribution<T>> {
    for (k, &v) in f {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite {
                key: format!("{k:?}"),
                value: v,
            });
        }
    }
    let size = f.size();
    if !size.is_finite() {
        return Err(Error::NonFinite {
            key: "|f|".into(),
            value: size,
        });
    }
    if size <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    let probs: BTreeMap<T, f64> = f
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &v)| (k.clone(), v / size))
        .collect();
    Distribution::new(probs)
}

/// Weighted log-likelihood `sum_x w(x) * log2 p(x)` under the `p^0 = 1`
/// convention. Zero weights contribute nothing even where `p(x) = 0`.
pub(crate) fn weighted_log2<'a, T: 'a, I, P>(weights: I, mut prob: P) -> f64
where
    I: IntoIterator<Item = (&'a T, f64)>,
    P: FnMut(&T) -> f64,
{
    let mut acc = 0.0;
    for (x, w) in weights {
        if w == 0.0 {
            continue;
        }
        let p = prob(x);
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += w * p.log2();
    }
    acc
}

/// `log2 L(f; p) = sum_x f(x) * log2 p(x)`. May return `-inf`.
pub fn corpus_log_likelihood<T: Ord + Clone + Debug>(f: &Corpus<T>, p: &Distribution<T>) -> f64 {
    weighted_log2(f.iter().map(|(k, &v)| (k, v)), |x| p.prob(x))
}

/// Linear-space likelihood from a log2 value.
pub fn likelihood_from_log2(log2_value: f64) -> f64 {
    log2_value.exp2()
}

/// Cross-entropy `H(p~; p) = -sum_x p~(x) log2 p(x)` in bits. May return `+inf`.
pub fn cross_entropy<T: Ord + Clone + Debug>(p_tilde: &Distribution<T>, p: &Distribution<T>) -> f64 {
    -weighted_log2(p_tilde.iter().map(|(k, &v)| (k, v)), |x| p.prob(x))
}

/// Entropy `H(p) = -sum_x p(x) log2 p(x)` in bits.
pub fn entropy<T: Ord + Clone + Debug>(p: &Distribution<T>) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(_, &v)| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// Relative entropy `D(p || q) = sum_x p(x) log2(p(x) / q(x))`. May return `+inf`.
pub fn relative_entropy<T: Ord + Clone + Debug>(p: &Distribution<T>, q: &Distribution<T>) -> f64 {
    let mut acc = 0.0;
    for (x, &px) in p {
        if px == 0.0 {
            continue;
        }
        let qx = q.prob(x);
        if qx <= 0.0 {
            return f64::INFINITY;
        }
        acc += px * (px / qx).log2();
    }
    acc
}

/// `perp(f; p) = 2^{H(p~; p)}`, equivalently `L(f; p)^{-1/|f|}`.
pub fn perplexity<T: Ord + Clone + Debug>(f: &Corpus<T>, p: &Distribution<T>) -> Result<f64> {
    let p_tilde = relative_frequency_estimate(f)?;
    Ok(cross_entropy(&p_tilde, p).exp2())
}

/// Draws a full-support distribution on `support` by normalizing i.i.d.
/// uniform(0, 1) weights.
pub fn random_distribution<T, R>(support: &[T], rng: &mut R) -> Result<Distribution<T>>
where
    T: Ord + Clone + Debug,
    R: Rng + ?Sized,
{
    if support.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    loop {
        let weights: Vec<f64> = support.iter().map(|_| rng.gen::<f64>()).collect();
        if weights.iter().all(|&w| w > 0.0) {
            return Distribution::normalize(support.iter().cloned().zip(weights));
        }
    }
}

/// Outcome of [`assert_mle_unrestricted`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleReport {
    pub trials: usize,
    /// Trials in which `L(f; p~) > L(f; p_random)`, or equality with
    /// `p_random == p~`.
    pub dominated: usize,
    pub estimate_log_likelihood: f64,
    /// Smallest `log2 L(f; p~) - log2 L(f; p_random)` seen.
    pub worst_margin: f64,
    pub passed: bool,
}

/// Empirically checks that the relative-frequency estimate maximizes the
/// corpus likelihood over the unrestricted model on `f`'s support.
pub fn assert_mle_unrestricted<T: Ord + Clone + Debug>(
    f: &Corpus<T>,
    trials: usize,
    seed: u64,
) -> Result<MleReport> {
    let p_tilde = relative_frequency_estimate(f)?;
    let support: Vec<T> = f.support().cloned().collect();
    let best = corpus_log_likelihood(f, &p_tilde);
    let mut rng = seeded_rng(seed);
    let mut dominated = 0;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..trials {
        let candidate = random_distribution(&support, &mut rng)?;
        let margin = best - corpus_log_likelihood(f, &candidate);
        worst_margin = worst_margin.min(margin);
        let ok = if candidate.max_abs_diff(&p_tilde) == 0.0 {
            margin >= 0.0
        } else {
            margin > 0.0
        };
        if ok {
            dominated += 1;
        }
    }
    Ok(MleReport {
        trials,
        dominated,
        estimate_log_likelihood: best,
        worst_margin,
        passed: dominated == trials,
    })
}
