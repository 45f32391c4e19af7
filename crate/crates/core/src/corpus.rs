//! Corpora (frequency functions over types) and probability distributions.
//!
//! Both are backed by ordered maps so that every summation runs in key order
//! and results are reproducible bit for bit.

use std::collections::btree_map;
use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Tolerance for "sums to one" checks.
pub const EPS_NORM: f64 = 1e-9;

/// A frequency function `f: T -> [0, inf)` with finite total mass.
///
/// Frequencies may be non-integer (weighted occurrences). Duplicate insertions
/// of the same type are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus<T: Ord> {
    entries: BTreeMap<T, f64>,
}

impl<T: Ord> Default for Corpus<T> {
    fn default() -> Self {
        Corpus {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Ord + Clone + Debug> Corpus<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a corpus from `(type, frequency)` pairs, summing duplicates.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
    {
        let mut corpus = Self::new();
        for (key, value) in pairs {
            corpus.add(key, value)?;
        }
        Ok(corpus)
    }

    /// Adds `weight` occurrences of `key`.
    pub fn add(&mut self, key: T, weight: f64) -> Result<()> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::NonFinite {
                key: format!("{key:?}"),
                value: weight,
            });
        }
        *self.entries.entry(key).or_insert(0.0) += weight;
        Ok(())
    }

    /// Frequency of `key`; zero for unseen types.
    pub fn get(&self, key: &T) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    /// Corpus size `|f|`, the sum of all frequencies.
    pub fn size(&self) -> f64 {
        self.entries.values().sum()
    }

    /// True iff `0 < |f| < inf`.
    pub fn is_non_empty(&self) -> bool {
        let size = self.size();
        size > 0.0 && size.is_finite()
    }

    /// Number of stored types (including zero-frequency ones).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, T, f64> {
        self.entries.iter()
    }

    /// Types with strictly positive frequency, in key order.
    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().filter(|(_, &v)| v > 0.0).map(|(k, _)| k)
    }

    /// Maps every type through `relabel`, merging frequencies of types that
    /// collide.
    pub fn map_types<U, F>(&self, mut relabel: F) -> Corpus<U>
    where
        U: Ord + Clone + Debug,
        F: FnMut(&T) -> U,
    {
        let mut out = Corpus::new();
        for (k, &v) in &self.entries {
            *out.entries.entry(relabel(k)).or_insert(0.0) += v;
        }
        out
    }

    pub(crate) fn ensure_non_empty(&self) -> Result<()> {
        if self.is_non_empty() {
            Ok(())
        } else {
            Err(Error::EmptyCorpus)
        }
    }
}

impl<'a, T: Ord> IntoIterator for &'a Corpus<T> {
    type Item = (&'a T, &'a f64);
    type IntoIter = btree_map::Iter<'a, T, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// An ordered sequence of tokens `x_1, ..., x_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence<T> {
    pub tokens: Vec<T>,
}

impl<T: Ord + Clone + Debug> TokenSequence<T> {
    pub fn new(tokens: Vec<T>) -> Self {
        TokenSequence { tokens }
    }

    /// Occurrence frequencies of the sequence; `|f|` equals the token count.
    pub fn to_corpus(&self) -> Corpus<T> {
        let mut corpus = Corpus::new();
        for t in &self.tokens {
            *corpus.entries.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        corpus
    }
}

/// A probability distribution over a countable type set, stored sparsely.
///
/// Types absent from the map have probability zero. Keys may be stored with
/// probability zero; the support is the set of keys with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T: Ord> {
    probs: BTreeMap<T, f64>,
}

impl<T: Ord + Clone + Debug> Distribution<T> {
    /// Validates that every probability lies in `[0, 1]` and that the total is
    /// one within [`EPS_NORM`].
    pub fn new(probs: BTreeMap<T, f64>) -> Result<Self> {
        let dist = Self::new_unchecked(probs)?;
        let total = dist.total();
        if (total - 1.0).abs() > EPS_NORM {
            return Err(Error::NotNormalized(total));
        }
        Ok(dist)
    }

    /// Like [`Distribution::new`] but skips the sum-to-one check. Individual
    /// probabilities are still range checked.
    pub fn new_unchecked(probs: BTreeMap<T, f64>) -> Result<Self> {
        for (k, &p) in &probs {
            if !p.is_finite() || !(0.0..=1.0 + EPS_NORM).contains(&p) {
                return Err(Error::InvalidProbability {
                    key: format!("{k:?}"),
                    value: p,
                });
            }
        }
        Ok(Distribution { probs })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
    {
        let mut map = BTreeMap::new();
        for (k, p) in pairs {
            *map.entry(k).or_insert(0.0) += p;
        }
        Self::new(map)
    }

    /// Uniform distribution over the given (deduplicated) types.
    pub fn uniform<I>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
    {
        let keys: std::collections::BTreeSet<T> = types.into_iter().collect();
        if keys.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let p = 1.0 / keys.len() as f64;
        Self::new(keys.into_iter().map(|k| (k, p)).collect())
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn normalize<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
    {
        let corpus = Corpus::from_pairs(weights)?;
        crate::estimation::relative_frequency_estimate(&corpus)
    }

    /// `p(x)`; zero outside the stored keys.
    pub fn prob(&self, key: &T) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }

    /// Event probability `p(A) = sum_{x in A} p(x)`.
    pub fn event_prob<'a, I>(&self, event: I) -> f64
    where
        I: IntoIterator<Item = &'a T>,
        T: 'a,
    {
        let set: std::collections::BTreeSet<&T> = event.into_iter().collect();
        set.into_iter().map(|k| self.prob(k)).sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, T, f64> {
        self.probs.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &T> {
        self.probs.keys()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.probs.iter().filter(|(_, &p)| p > 0.0).map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest absolute coordinate difference over the union of both key sets.
    pub fn max_abs_diff(&self, other: &Distribution<T>) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &p) in &self.probs {
            worst = worst.max((p - other.prob(k)).abs());
        }
        for (k, &q) in &other.probs {
            if !self.probs.contains_key(k) {
                worst = worst.max(q);
            }
        }
        worst
    }
}

impl<'a, T: Ord> IntoIterator for &'a Distribution<T> {
    type Item = (&'a T, &'a f64);
    type IntoIter = btree_map::Iter<'a, T, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.probs.iter()
    }
}
