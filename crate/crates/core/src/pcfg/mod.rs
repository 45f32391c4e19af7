//! Probabilistic context-free grammars: rules and fragments, parse trees,
//! treebank training, chart parsing, tree-mass diagnostics, parent encoding
//! and EM training on raw sentences.

pub mod em;
pub mod grammar;
pub mod mass;
pub mod parser;
pub mod tree;
pub mod treebank;

pub use em::{
    parse_sentence_corpus, pcfg_em, unparseable_sentences, write_sentence_corpus, ParseAnalyzer, PcfgModel,
    Sentence,
};
pub use grammar::{parse_grammar, parse_pcfg, write_pcfg, Cfg, GrammarFile, Pcfg, Rule};
pub use mass::{enumerate_trees, max_tree_size, tree_mass, TreeMass};
pub use parser::{best_parse, derivation_key, parse_all, BestParse};
pub use tree::ParseTree;
pub use treebank::{
    estimate_on, fragment_log_likelihoods, parent_decode, parent_encode, parse_treebank, read_off_grammar,
    rule_frequencies, treebank_estimate, treebank_log_likelihood, write_treebank, Treebank,
};
