//! Estimation toolkit: corpora and distributions, relative-frequency and
//! maximum-likelihood estimation, information measures, a generic EM engine,
//! and two worked models (independent dice and probabilistic context-free
//! grammars), plus maximum-entropy checks on small type sets.

pub mod corpus;
pub mod dice;
pub mod em;
pub mod error;
pub mod estimation;
pub mod fmt;
pub mod io;
pub mod maxent;
pub mod pcfg;

pub use corpus::{Corpus, Distribution, TokenSequence, EPS_NORM};
pub use dice::{dice_em, mle_independent, DicePair, IndependentDiceDistribution};
pub use em::{
    em_run, expected_complete_corpus, gem_step_check, CompleteDataModel, EmOptions, EmTrace, StopReason,
    SymbolicAnalyzer, TableAnalyzer, UnrestrictedModel, EPS_MONO,
};
pub use error::{Error, Result};
pub use estimation::{
    corpus_log_likelihood, cross_entropy, entropy, perplexity, relative_entropy, relative_frequency_estimate,
    seeded_rng,
};
pub use pcfg::{ParseTree, Pcfg, Sentence, Treebank};
