//! Earley chart parsing with extraction of every full-parse tree.

use std::collections::{HashMap, HashSet};

use super::grammar::{Cfg, Pcfg, Rule};
use super::tree::ParseTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Item {
    rule: usize,
    dot: usize,
    origin: usize,
}

/// Completed constituents `(rule, start, end)` of an Earley run.
struct Chart<'g> {
    cfg: &'g Cfg,
    words: &'g [String],
    completed: HashSet<(usize, usize, usize)>,
}

impl<'g> Chart<'g> {
    fn build(cfg: &'g Cfg, words: &'g [String]) -> Self {
        let n = words.len();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let mut completed = HashSet::new();

        let push = |sets: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, i: usize, item: Item| {
            if seen[i].insert(item) {
                sets[i].push(item);
            }
        };

        for &r in cfg.fragment(cfg.start()) {
            push(
                &mut sets,
                &mut seen,
                0,
                Item {
                    rule: r,
                    dot: 0,
                    origin: 0,
                },
            );
        }
        for i in 0..=n {
            let mut k = 0;
            while k < sets[i].len() {
                let item = sets[i][k];
                k += 1;
                let rule = cfg.rule(item.rule);
                match rule.rhs.get(item.dot) {
                    None => {
                        completed.insert((item.rule, item.origin, i));
                        // No empty rules, so origin < i and that set is final.
                        let waiting: Vec<Item> = sets[item.origin]
                            .iter()
                            .filter(|w| cfg.rule(w.rule).rhs.get(w.dot) == Some(&rule.lhs))
                            .copied()
                            .collect();
                        for w in waiting {
                            push(&mut sets, &mut seen, i, Item { dot: w.dot + 1, ..w });
                        }
                    }
                    Some(sym) if cfg.is_nonterminal(sym) => {
                        for &r in cfg.fragment(sym) {
                            push(
                                &mut sets,
                                &mut seen,
                                i,
                                Item {
                                    rule: r,
                                    dot: 0,
                                    origin: i,
                                },
                            );
                        }
                    }
                    Some(sym) => {
                        if i < n && words[i] == *sym {
                            push(
                                &mut sets,
                                &mut seen,
                                i + 1,
                                Item {
                                    dot: item.dot + 1,
                                    ..item
                                },
                            );
                        }
                    }
                }
            }
        }
        Chart {
            cfg,
            words,
            completed,
        }
    }

    /// All trees for `sym` spanning `words[i..j]`.
    fn trees(
        &self,
        sym: &str,
        i: usize,
        j: usize,
        memo: &mut HashMap<(String, usize, usize), Vec<ParseTree>>,
    ) -> Vec<ParseTree> {
        if !self.cfg.is_nonterminal(sym) {
            return if j == i + 1 && self.words[i] == sym {
                vec![ParseTree::leaf(sym)]
            } else {
                Vec::new()
            };
        }
        let key = (sym.to_string(), i, j);
        if let Some(ts) = memo.get(&key) {
            return ts.clone();
        }
        let mut out = Vec::new();
        for &r in self.cfg.fragment(sym) {
            if !self.completed.contains(&(r, i, j)) {
                continue;
            }
            let rhs = &self.cfg.rule(r).rhs;
            for children in self.sequences(rhs, i, j, memo) {
                out.push(ParseTree::node(sym, children));
            }
        }
        memo.insert(key, out.clone());
        out
    }

    /// All ways to derive `words[i..j]` from the symbol sequence `rhs`.
    fn sequences(
        &self,
        rhs: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(String, usize, usize), Vec<ParseTree>>,
    ) -> Vec<Vec<ParseTree>> {
        let Some((first, rest)) = rhs.split_first() else {
            return if i == j { vec![Vec::new()] } else { Vec::new() };
        };
        let mut out = Vec::new();
        // Every symbol covers at least one word.
        let last_end = j - rest.len();
        for e in (i + 1)..=last_end {
            let heads = self.trees(first, i, e, memo);
            if heads.is_empty() {
                continue;
            }
            let tails = self.sequences(rest, e, j, memo);
            for h in &heads {
                for t in &tails {
                    let mut seq = Vec::with_capacity(rhs.len());
                    seq.push(h.clone());
                    seq.extend(t.iter().cloned());
                    out.push(seq);
                }
            }
        }
        out
    }
}

/// Preorder sequence of rule ids, the key for the deterministic parse order.
pub fn derivation_key(cfg: &Cfg, tree: &ParseTree) -> Vec<usize> {
    let mut key = Vec::new();
    fn walk(cfg: &Cfg, t: &ParseTree, key: &mut Vec<usize>) {
        if let ParseTree::Node { label, children } = t {
            let rule = Rule {
                lhs: label.clone(),
                rhs: children.iter().map(|c| c.label().to_string()).collect(),
            };
            key.push(cfg.rule_id(&rule).unwrap_or(usize::MAX));
            children.iter().for_each(|c| walk(cfg, c, key));
        }
    }
    walk(cfg, tree, &mut key);
    key
}

/// Every full-parse tree of `cfg` whose yield is `words`, without
/// duplicates, ordered lexicographically by derivation (preorder rule ids).
/// An unparseable sentence yields an empty list.
pub fn parse_all(cfg: &Cfg, words: &[String]) -> Vec<ParseTree> {
    if words.is_empty() {
        return Vec::new();
    }
    let chart = Chart::build(cfg, words);
    let mut memo = HashMap::new();
    let trees = chart.trees(cfg.start(), 0, words.len(), &mut memo);
    let mut keyed: Vec<(Vec<usize>, ParseTree)> =
        trees.into_iter().map(|t| (derivation_key(cfg, &t), t)).collect();
    keyed.sort();
    keyed.dedup();
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// The most probable parse of a sentence.
#[derive(Debug, Clone)]
pub struct BestParse {
    pub tree: ParseTree,
    pub probability: f64,
    pub log2_probability: f64,
    /// Every parse tied with the winner (the winner included), in parse order.
    pub co_maximal: Vec<ParseTree>,
}

/// Relative tolerance, in bits, under which two parses count as tied.
const TIE_TOL: f64 = 1e-12;

/// The first parse (in [`parse_all`] order) of maximal probability, or
/// `None` if the sentence has no parse.
pub fn best_parse(g: &Pcfg, words: &[String]) -> Option<BestParse> {
    let parses = parse_all(g.cfg(), words);
    let scored: Vec<(ParseTree, f64)> = parses
        .into_iter()
        .map(|t| {
            let l = g
                .tree_log2_probability(&t)
                .expect("parser output is a full parse");
            (t, l)
        })
        .collect();
    let tied = |a: f64, b: f64| a == b || (a - b).abs() <= TIE_TOL * a.abs().max(1.0);
    let mut best: Option<usize> = None;
    for (k, (_, l)) in scored.iter().enumerate() {
        match best {
            Some(b) if *l <= scored[b].1 || tied(*l, scored[b].1) => {}
            _ => best = Some(k),
        }
    }
    let b = best?;
    let top = scored[b].1;
    let co_maximal = scored
        .iter()
        .filter(|(_, l)| tied(*l, top))
        .map(|(t, _)| t.clone())
        .collect();
    Some(BestParse {
        tree: scored[b].0.clone(),
        probability: top.exp2(),
        log2_probability: top,
        co_maximal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcfg::grammar::parse_grammar;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn toy() -> Cfg {
        parse_grammar(
            "S -> NP VP\nVP -> V NP\nVP -> V NP PP\nNP -> NP PP\nNP -> Mary\nNP -> a bird\nNP -> a worm\nPP -> on a tree\nV -> saw\n",
        )
        .unwrap()
        .cfg
    }

    #[test]
    fn ambiguous_and_unambiguous_sentences() {
        let g = toy();
        let y1 = parse_all(&g, &words("Mary saw a bird on a tree"));
        let shown: Vec<String> = y1.iter().map(|t| t.to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "(S (NP Mary) (VP (V saw) (NP (NP a bird) (PP on a tree))))",
                "(S (NP Mary) (VP (V saw) (NP a bird) (PP on a tree)))",
            ]
        );
        let y2 = parse_all(&g, &words("a bird on a tree saw a worm"));
        assert_eq!(y2.len(), 1);
        assert!(parse_all(&g, &words("saw a worm")).is_empty());
        assert!(parse_all(&g, &[]).is_empty());
    }

    #[test]
    fn unary_chains_and_mixed_rules() {
        let g = parse_grammar("S -> A\nS -> a B\nA -> B\nB -> a\nB -> a a\n")
            .unwrap()
            .cfg;
        let ts: Vec<String> = parse_all(&g, &words("a a"))
            .iter()
            .map(|t| t.to_string())
            .collect();
        assert_eq!(ts, vec!["(S (A (B a a)))", "(S a (B a))"]);
    }

    #[test]
    fn best_parse_ties_keep_the_first() {
        let g =
            crate::pcfg::grammar::parse_pcfg("S -> A : 0.5\nS -> B : 0.5\nA -> a : 1\nB -> a : 1\n").unwrap();
        let best = best_parse(&g, &words("a")).unwrap();
        assert_eq!(best.tree.to_string(), "(S (A a))");
        assert_eq!(best.co_maximal.len(), 2);
        assert_eq!(best.probability, 0.5);
        assert!(best_parse(&g, &words("b")).is_none());
    }
}
