use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::fmt::format_sig;

use super::grammar::{Cfg, Pcfg, Rule};
use super::tree::ParseTree;

/// A corpus of full-parse trees.
pub type Treebank = Corpus<ParseTree>;

/// Parses one tree per line, optionally prefixed by `count<TAB>`.
pub fn parse_treebank(text: &str) -> Result<Treebank> {
    let mut tb = Treebank::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (count, tree) = match line.split_once('\t') {
            Some((c, t)) if !c.trim_start().starts_with('(') => {
                let c = c
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::format(line_no, format!("bad count {c:?}")))?;
                (c, t)
            }
            _ => (1.0, line),
        };
        let tree: ParseTree = tree.parse().map_err(|e| match e {
            Error::Format { message, .. } => Error::format(line_no, message),
            other => other,
        })?;
        tb.add(tree, count)
            .map_err(|e| Error::format(line_no, e.to_string()))?;
    }
    Ok(tb)
}

pub fn write_treebank(tb: &Treebank) -> String {
    tb.iter()
        .map(|(t, c)| format!("{}\t{t}\n", format_sig(*c)))
        .collect()
}

/// The CFG whose rules are the local trees occurring in the treebank.
///
/// Rules are grouped by left-hand side, fragments in order of first
/// appearance and rules within a fragment likewise.
pub fn read_off_grammar(tb: &Treebank) -> Result<Cfg> {
    let trees: Vec<&ParseTree> = tb.support().collect();
    let first = trees.first().ok_or(Error::EmptyTreebank)?;
    let start = first.label().to_string();
    let mut rules: Vec<Rule> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut labels = BTreeSet::new();
    let mut leaves = BTreeSet::new();
    for t in &trees {
        match t {
            ParseTree::Leaf(s) => return Err(Error::NotAFullParse(format!("bare leaf {s}"))),
            ParseTree::Node { label, .. } if *label != start => {
                return Err(Error::MixedRoots(start, label.clone()));
            }
            _ => {}
        }
        for r in t.rules() {
            labels.insert(r.lhs.clone());
            if seen.insert(r.clone()) {
                rules.push(r);
            }
        }
        leaves.extend(t.yield_symbols());
    }
    if let Some(sym) = labels.intersection(&leaves).next() {
        return Err(Error::SymbolClash(sym.clone()));
    }
    let mut order: HashMap<String, usize> = HashMap::new();
    for r in &rules {
        let n = order.len();
        order.entry(r.lhs.clone()).or_insert(n);
    }
    rules.sort_by_key(|r| order[&r.lhs]);
    Cfg::new(start, rules)
}

/// `f(r) = sum_x f_T(x) f_r(x)`, indexed by rule id.
pub fn rule_frequencies(cfg: &Cfg, tb: &Treebank) -> Result<Vec<f64>> {
    let mut freqs = vec![0.0; cfg.len()];
    for (t, &w) in tb {
        if w == 0.0 {
            continue;
        }
        for (id, n) in cfg.rule_counts(t)? {
            freqs[id] += w * n as f64;
        }
    }
    Ok(freqs)
}

/// The treebank grammar: the read-off CFG with per-fragment relative
/// frequencies of its rules.
pub fn treebank_estimate(tb: &Treebank) -> Result<Pcfg> {
    let cfg = Arc::new(read_off_grammar(tb)?);
    estimate_on(cfg, tb, None)
}

/// Per-fragment relative frequencies of the rules of `cfg` on `tb`.
///
/// Fragments whose rules never occur take their probabilities from
/// `fallback` if given; otherwise they are an error.
pub fn estimate_on(cfg: Arc<Cfg>, tb: &Treebank, fallback: Option<&Pcfg>) -> Result<Pcfg> {
    if !tb.is_non_empty() {
        return Err(Error::EmptyTreebank);
    }
    let freqs = rule_frequencies(&cfg, tb)?;
    let mut probs = vec![0.0; cfg.len()];
    for (lhs, ids) in cfg.fragments() {
        let total: f64 = ids.iter().map(|&i| freqs[i]).sum();
        if total > 0.0 {
            for &i in ids {
                probs[i] = freqs[i] / total;
            }
        } else {
            let fb =
                fallback.ok_or_else(|| Error::InvalidGrammar(format!("no occurrences of any {lhs} rule")))?;
            for &i in ids {
                probs[i] = fb.prob(i);
            }
        }
    }
    Pcfg::new(cfg, probs)
}

/// `log2 L(f_T; p) = sum_x f_T(x) log2 p(x)`.
pub fn treebank_log_likelihood(g: &Pcfg, tb: &Treebank) -> Result<f64> {
    let mut acc = 0.0;
    for (t, &w) in tb {
        if w == 0.0 {
            continue;
        }
        let l = g.tree_log2_probability(t)?;
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        acc += w * l;
    }
    Ok(acc)
}

/// `log2 L(f_A; p) = sum_{r in G_A} f(r) log2 p(r)` for every fragment.
/// Their sum equals [`treebank_log_likelihood`].
pub fn fragment_log_likelihoods(g: &Pcfg, tb: &Treebank) -> Result<BTreeMap<String, f64>> {
    let freqs = rule_frequencies(g.cfg(), tb)?;
    let mut out = BTreeMap::new();
    for (lhs, ids) in g.cfg().fragments() {
        let mut acc = 0.0;
        for &i in ids {
            if freqs[i] == 0.0 {
                continue;
            }
            acc += freqs[i] * g.prob(i).log2();
        }
        out.insert(lhs.to_string(), acc);
    }
    Ok(out)
}

/// Parent-encodes every tree of the treebank.
pub fn parent_encode(tb: &Treebank) -> Treebank {
    tb.map_types(ParseTree::parent_encode)
}

/// Inverse of [`parent_encode`].
pub fn parent_decode(tb: &Treebank) -> Result<Treebank> {
    let mut out = Treebank::new();
    for (t, &w) in tb {
        out.add(t.parent_decode()?, w)?;
    }
    Ok(out)
}
