//! EM training of a PCFG on a corpus of sentences.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::corpus::{Corpus, EPS_NORM};
use crate::em::{em_run_analyzed, AnalyzedCorpus, CompleteDataModel, EmOptions, EmTrace, SymbolicAnalyzer};
use crate::error::{Error, Result};
use crate::fmt::format_sig;

use super::grammar::{Cfg, Pcfg};
use super::parser::parse_all;
use super::tree::ParseTree;
use super::treebank::{estimate_on, Treebank};

/// A sentence: a sequence of terminal symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sentence(pub Vec<String>);

impl Sentence {
    pub fn words(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl FromStr for Sentence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Sentence(s.split_whitespace().map(String::from).collect()))
    }
}

/// Parses `count<TAB>w1 w2 ... wn` lines.
pub fn parse_sentence_corpus(text: &str) -> Result<Corpus<Sentence>> {
    let mut corpus = Corpus::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (count, words) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(line_no, "expected `count<TAB>sentence`"))?;
        let count: f64 = count
            .trim()
            .parse()
            .map_err(|_| Error::format(line_no, format!("bad count {count:?}")))?;
        let sentence: Sentence = words.parse()?;
        if sentence.0.is_empty() {
            return Err(Error::format(line_no, "empty sentence"));
        }
        corpus
            .add(sentence, count)
            .map_err(|e| Error::format(line_no, e.to_string()))?;
    }
    Ok(corpus)
}

pub fn write_sentence_corpus(f: &Corpus<Sentence>) -> String {
    f.iter()
        .map(|(s, c)| format!("{}\t{s}\n", format_sig(*c)))
        .collect()
}

/// `A(y)` = the full-parse trees of `y`.
#[derive(Debug, Clone)]
pub struct ParseAnalyzer {
    cfg: Arc<Cfg>,
}

impl ParseAnalyzer {
    pub fn new(cfg: Arc<Cfg>) -> Self {
        ParseAnalyzer { cfg }
    }
}

impl SymbolicAnalyzer for ParseAnalyzer {
    type Incomplete = Sentence;
    type Complete = ParseTree;

    fn analyses(&self, y: &Sentence) -> Vec<ParseTree> {
        parse_all(&self.cfg, y.words())
    }

    fn yield_of(&self, x: &ParseTree) -> Sentence {
        Sentence(x.yield_symbols())
    }
}

/// The model `M_G` of all fragment-normalized PCFGs on a fixed CFG. Its
/// M-step is the treebank grammar of the expected treebank.
#[derive(Debug, Clone)]
pub struct PcfgModel {
    cfg: Arc<Cfg>,
}

impl PcfgModel {
    pub fn new(cfg: Arc<Cfg>) -> Self {
        PcfgModel { cfg }
    }
}

impl CompleteDataModel<ParseTree> for PcfgModel {
    type Instance = Pcfg;

    fn log2_probability(&self, g: &Pcfg, x: &ParseTree) -> f64 {
        g.tree_log2_probability(x).unwrap_or(f64::NEG_INFINITY)
    }

    /// Fragments that do not occur in the expected treebank keep their
    /// current probabilities.
    fn maximize(&self, expected: &Treebank, current: &Pcfg) -> Result<Pcfg> {
        estimate_on(self.cfg.clone(), expected, Some(current))
    }

    fn is_instance(&self, g: &Pcfg) -> bool {
        let same = Arc::ptr_eq(g.shared_cfg(), &self.cfg) || g.cfg() == &*self.cfg;
        same && self.cfg.fragments().all(|(_, ids)| {
            let s: f64 = ids.iter().map(|&i| g.prob(i)).sum();
            (s - 1.0).abs() <= EPS_NORM
        })
    }

    fn parameter_change(&self, a: &Pcfg, b: &Pcfg) -> f64 {
        a.probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn zero_parameters(&self, g: &Pcfg) -> usize {
        g.probs().iter().filter(|&&p| p == 0.0).count()
    }
}

/// Sentences of `f` (with positive frequency) that `cfg` cannot parse.
pub fn unparseable_sentences(cfg: &Cfg, f: &Corpus<Sentence>) -> Vec<Sentence> {
    f.support()
        .filter(|y| parse_all(cfg, y.words()).is_empty())
        .cloned()
        .collect()
}

/// EM for PCFGs from `g0` on the sentence corpus `f`.
///
/// Every sentence is parsed once up front; unparseable sentences are all
/// reported together in [`Error::UnparseableSentence`].
pub fn pcfg_em(g0: &Pcfg, f: &Corpus<Sentence>, options: &EmOptions) -> Result<EmTrace<Pcfg>> {
    let cfg = g0.shared_cfg().clone();
    let bad = unparseable_sentences(&cfg, f);
    if !bad.is_empty() {
        return Err(Error::UnparseableSentence(
            bad.iter().map(|s| s.to_string()).collect(),
        ));
    }
    let analyzer = ParseAnalyzer::new(cfg.clone());
    let analyzed = AnalyzedCorpus::new(f, &analyzer)?;
    em_run_analyzed(&analyzed, &PcfgModel::new(cfg), g0.clone(), options)
}
