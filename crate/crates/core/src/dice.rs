//! Two six-sided dice: the independence model `M_{1/2}` and EM from sums.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::corpus::{Corpus, Distribution, EPS_NORM};
use crate::em::{em_run, CompleteDataModel, EmOptions, EmTrace, SymbolicAnalyzer};
use crate::error::{Error, Result};
use crate::estimation::{random_distribution, relative_frequency_estimate};
use crate::fmt::format_sig;

pub const FACES: [u8; 6] = [1, 2, 3, 4, 5, 6];

/// The outcome `(x1, x2)` of throwing both dice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DicePair {
    pub first: u8,
    pub second: u8,
}

impl DicePair {
    pub fn new(first: u8, second: u8) -> Result<Self> {
        for face in [first, second] {
            if !FACES.contains(&face) {
                return Err(Error::OutOfRange(format!("face {face}")));
            }
        }
        Ok(DicePair { first, second })
    }

    pub fn sum(&self) -> u8 {
        self.first + self.second
    }

    /// All 36 pairs in lexicographic order.
    pub fn all() -> impl Iterator<Item = DicePair> {
        FACES
            .iter()
            .flat_map(|&a| FACES.iter().map(move |&b| DicePair { first: a, second: b }))
    }
}

impl fmt::Display for DicePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.first, self.second)
    }
}

impl FromStr for DicePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::OutOfRange(format!("pair {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<u8>()
                .map_err(|_| Error::OutOfRange(format!("pair {s:?}")))
        };
        DicePair::new(parse(a)?, parse(b)?)
    }
}

/// An instance of `M_{1/2}`: `p(x1, x2) = p1(x1) * p2(x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentDiceDistribution {
    pub p1: Distribution<u8>,
    pub p2: Distribution<u8>,
}

impl IndependentDiceDistribution {
    pub fn new(p1: Distribution<u8>, p2: Distribution<u8>) -> Result<Self> {
        for p in [&p1, &p2] {
            if let Some(face) = p.keys().find(|k| !FACES.contains(k)) {
                return Err(Error::OutOfRange(format!("face {face}")));
            }
            if (p.total() - 1.0).abs() > EPS_NORM {
                return Err(Error::NotNormalized(p.total()));
            }
        }
        Ok(IndependentDiceDistribution { p1, p2 })
    }

    pub fn uniform() -> Self {
        let u = Distribution::uniform(FACES).expect("six faces");
        IndependentDiceDistribution { p1: u.clone(), p2: u }
    }

    /// Both marginals drawn independently from the 6-simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let p1 = random_distribution(&FACES, rng).expect("non-empty support");
        let p2 = random_distribution(&FACES, rng).expect("non-empty support");
        IndependentDiceDistribution { p1, p2 }
    }

    pub fn prob(&self, x: &DicePair) -> f64 {
        self.p1.prob(&x.first) * self.p2.prob(&x.second)
    }

    /// The joint distribution over all 36 pairs.
    pub fn joint(&self) -> Distribution<DicePair> {
        Distribution::new_unchecked(DicePair::all().map(|x| (x, self.prob(&x))).collect())
            .expect("products of probabilities are probabilities")
    }

    /// Probability of the sum `y`, `sum_{x1 + x2 = y} p(x1, x2)`.
    pub fn sum_prob(&self, y: u8) -> f64 {
        DicePair::all()
            .filter(|x| x.sum() == y)
            .map(|x| self.prob(&x))
            .sum()
    }
}

/// The marginal corpora `f1(x1) = sum_{x2} f(x1, x2)` and
/// `f2(x2) = sum_{x1} f(x1, x2)`.
pub fn marginalize(f: &Corpus<DicePair>) -> (Corpus<u8>, Corpus<u8>) {
    (f.map_types(|x| x.first), f.map_types(|x| x.second))
}

/// The unique maximum-likelihood estimate of `M_{1/2}`: the product of the
/// relative-frequency estimates of both marginal corpora.
pub fn mle_independent(f: &Corpus<DicePair>) -> Result<IndependentDiceDistribution> {
    let (f1, f2) = marginalize(f);
    Ok(IndependentDiceDistribution {
        p1: relative_frequency_estimate(&f1)?,
        p2: relative_frequency_estimate(&f2)?,
    })
}

/// `A(y) = {(x1, x2) | x1 + x2 = y}` for sums `y` in `2..=12`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiceSumAnalyzer;

pub fn dice_sum_analyzer() -> DiceSumAnalyzer {
    DiceSumAnalyzer
}

impl SymbolicAnalyzer for DiceSumAnalyzer {
    type Incomplete = u8;
    type Complete = DicePair;

    fn analyses(&self, y: &u8) -> Vec<DicePair> {
        DicePair::all().filter(|x| x.sum() == *y).collect()
    }

    fn yield_of(&self, x: &DicePair) -> u8 {
        x.sum()
    }
}

/// `M_{1/2}` as a complete-data model with the closed-form M-step.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiceModel;

impl CompleteDataModel<DicePair> for DiceModel {
    type Instance = IndependentDiceDistribution;

    fn log2_probability(&self, p: &IndependentDiceDistribution, x: &DicePair) -> f64 {
        p.prob(x).log2()
    }

    fn maximize(
        &self,
        expected: &Corpus<DicePair>,
        _current: &IndependentDiceDistribution,
    ) -> Result<IndependentDiceDistribution> {
        mle_independent(expected)
    }

    fn is_instance(&self, p: &IndependentDiceDistribution) -> bool {
        [&p.p1, &p.p2]
            .iter()
            .all(|d| d.keys().all(|k| FACES.contains(k)) && (d.total() - 1.0).abs() <= EPS_NORM)
    }

    fn parameter_change(&self, a: &IndependentDiceDistribution, b: &IndependentDiceDistribution) -> f64 {
        a.p1.max_abs_diff(&b.p1).max(a.p2.max_abs_diff(&b.p2))
    }

    fn zero_parameters(&self, p: &IndependentDiceDistribution) -> usize {
        FACES
            .iter()
            .map(|k| (p.p1.prob(k) == 0.0) as usize + (p.p2.prob(k) == 0.0) as usize)
            .sum()
    }
}

/// EM for `M_{1/2}` trained on a corpus of sums.
pub fn dice_em(
    f: &Corpus<u8>,
    p0: IndependentDiceDistribution,
    options: &EmOptions,
) -> Result<EmTrace<IndependentDiceDistribution>> {
    if let Some(y) = f.iter().find(|(y, _)| !(2..=12).contains(*y)).map(|(y, _)| y) {
        return Err(Error::OutOfRange(format!("sum {y}")));
    }
    em_run(f, &DiceSumAnalyzer, &DiceModel, p0, options)
}

/// Parses a starting instance: two blocks of `face<TAB>prob` lines (first
/// die, then second die) separated by a blank line. `#` lines are comments.
pub fn parse_dice_start(text: &str) -> Result<IndependentDiceDistribution> {
    let mut blocks: Vec<BTreeMap<u8, f64>> = vec![BTreeMap::new()];
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !blocks.last().expect("non-empty").is_empty() {
                blocks.push(BTreeMap::new());
            }
            continue;
        }
        let (face, prob) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(line_no, "expected `face<TAB>prob`"))?;
        let face: u8 = face
            .trim()
            .parse()
            .ok()
            .filter(|f| FACES.contains(f))
            .ok_or_else(|| Error::format(line_no, format!("bad face {face:?}")))?;
        let prob: f64 = prob
            .trim()
            .parse()
            .map_err(|_| Error::format(line_no, format!("bad probability {prob:?}")))?;
        let block = blocks.last_mut().expect("non-empty");
        if block.insert(face, prob).is_some() {
            return Err(Error::format(line_no, format!("face {face} listed twice")));
        }
    }
    if blocks.last().is_some_and(|b| b.is_empty()) {
        blocks.pop();
    }
    if blocks.len() != 2 {
        return Err(Error::format(
            last_line,
            format!(
                "expected two blocks of face probabilities, found {}",
                blocks.len()
            ),
        ));
    }
    let p2 = Distribution::new(blocks.pop().expect("two blocks"))?;
    let p1 = Distribution::new(blocks.pop().expect("two blocks"))?;
    IndependentDiceDistribution::new(p1, p2)
}

/// Inverse of [`parse_dice_start`].
pub fn write_dice_start(p: &IndependentDiceDistribution) -> String {
    let block = |d: &Distribution<u8>| {
        FACES
            .iter()
            .map(|k| format!("{k}\t{}\n", format_sig(d.prob(k))))
            .collect::<String>()
    };
    format!("{}\n{}", block(&p.p1), block(&p.p2))
}
