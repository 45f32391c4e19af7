//! Total probability of finite trees, and explicit tree enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::grammar::{Cfg, Pcfg};
use super::tree::ParseTree;

/// Result of [`tree_mass`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeMass {
    /// Sum of `p(x)` over full-parse trees with at most `max_nodes` internal
    /// nodes.
    pub partial_sum: f64,
    /// True iff no full-parse tree has more than `max_nodes` internal nodes.
    pub exhausted: bool,
}

/// Probability mass of the full-parse trees with at most `max_nodes`
/// internal nodes.
///
/// Computed by dynamic programming over (symbol, node count), which sums
/// exactly the terms [`enumerate_trees`] would list, without materializing
/// the trees.
pub fn tree_mass(g: &Pcfg, max_nodes: usize) -> TreeMass {
    let cfg = g.cfg();
    let nts: Vec<&str> = cfg.nonterminals().collect();
    let idx: HashMap<&str, usize> = nts.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    // mass[a][n]: total probability of trees rooted in nonterminal a with
    // exactly n internal nodes.
    let mut mass = vec![vec![0.0; max_nodes + 1]; nts.len()];
    let children: Vec<Vec<Option<usize>>> = cfg
        .rules()
        .iter()
        .map(|r| r.rhs.iter().map(|s| idx.get(s.as_str()).copied()).collect())
        .collect();

    for n in 1..=max_nodes {
        for (id, rule) in cfg.rules().iter().enumerate() {
            let p = g.prob(id);
            if p == 0.0 {
                continue;
            }
            // Coefficient of n-1 in the product of the children's series.
            let mut series = vec![0.0; n];
            series[0] = 1.0;
            for child in &children[id] {
                let Some(c) = child else { continue };
                let mut next = vec![0.0; n];
                for (a, &sa) in series.iter().enumerate() {
                    if sa == 0.0 {
                        continue;
                    }
                    for b in 1..(n - a) {
                        next[a + b] += sa * mass[*c][b];
                    }
                }
                series = next;
            }
            mass[idx[rule.lhs.as_str()]][n] += p * series[n - 1];
        }
    }
    let start = idx[cfg.start()];
    let partial_sum = mass[start][1..].iter().sum();
    let exhausted = match max_tree_size(cfg) {
        Some(size) => size <= max_nodes,
        None => false,
    };
    TreeMass {
        partial_sum,
        exhausted,
    }
}

/// Largest number of internal nodes of any full-parse tree, or `None` if
/// there are infinitely many trees. A grammar with no trees at all gives
/// `Some(0)`.
pub fn max_tree_size(cfg: &Cfg) -> Option<usize> {
    // Productive nonterminals derive at least one terminal string.
    let mut productive: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = productive.len();
        for r in cfg.rules() {
            if r.rhs
                .iter()
                .all(|s| !cfg.is_nonterminal(s) || productive.contains(s.as_str()))
            {
                productive.insert(&r.lhs);
            }
        }
        if productive.len() == before {
            break;
        }
    }
    if !productive.contains(cfg.start()) {
        return Some(0);
    }
    let useful = |r: &super::grammar::Rule| {
        r.rhs
            .iter()
            .all(|s| !cfg.is_nonterminal(s) || productive.contains(s.as_str()))
    };
    // Longest derivation via memoized DFS; a back edge means recursion.
    fn visit<'a>(
        a: &'a str,
        cfg: &'a Cfg,
        useful: &dyn Fn(&super::grammar::Rule) -> bool,
        state: &mut BTreeMap<&'a str, Option<usize>>,
    ) -> Option<usize> {
        match state.get(a) {
            Some(Some(n)) => return Some(*n),
            Some(None) => return None,
            None => {}
        }
        state.insert(a, None);
        let mut best = 0;
        for &id in cfg.fragment(a) {
            let r = cfg.rule(id);
            if !useful(r) {
                continue;
            }
            let mut size = 1;
            for s in &r.rhs {
                if cfg.is_nonterminal(s) {
                    size += visit(s, cfg, useful, state)?;
                }
            }
            best = best.max(size);
        }
        state.insert(a, Some(best));
        Some(best)
    }
    let mut state = BTreeMap::new();
    visit(cfg.start(), cfg, &useful, &mut state)
}

/// All full-parse trees with at most `max_nodes` internal nodes (and, if
/// given, at most `max_yield` leaves), ordered by node count and then by
/// tree order.
///
/// This is the brute-force counterpart of [`tree_mass`] and of the chart
/// parser; its output grows exponentially, so keep the bounds small.
pub fn enumerate_trees(cfg: &Cfg, max_nodes: usize, max_yield: Option<usize>) -> Vec<ParseTree> {
    let max_yield = max_yield.unwrap_or(usize::MAX);
    let nts: Vec<&str> = cfg.nonterminals().collect();
    let idx: HashMap<&str, usize> = nts.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    // by_size[a][n]: trees rooted in nonterminal a with exactly n internal
    // nodes, paired with their yield length.
    let mut by_size: Vec<Vec<Vec<(ParseTree, usize)>>> = vec![vec![Vec::new(); max_nodes + 1]; nts.len()];
    for n in 1..=max_nodes {
        for rule in cfg.rules() {
            // Partial child sequences with their node and yield totals.
            let mut partial: Vec<(Vec<ParseTree>, usize, usize)> = vec![(Vec::new(), 1, 0)];
            for (k, sym) in rule.rhs.iter().enumerate() {
                let remaining = rule.rhs.len() - k - 1;
                let mut next = Vec::new();
                for (kids, nodes, leaves) in &partial {
                    let mut extend = |t: &ParseTree, m: usize, y: usize| {
                        // Each later sibling needs at least one leaf.
                        if leaves + y + remaining <= max_yield {
                            let mut kids = kids.clone();
                            kids.push(t.clone());
                            next.push((kids, nodes + m, leaves + y));
                        }
                    };
                    match idx.get(sym.as_str()) {
                        None => extend(&ParseTree::leaf(sym), 0, 1),
                        Some(&c) => {
                            for (m, trees) in by_size[c].iter().enumerate().take(n - nodes + 1).skip(1) {
                                for (t, y) in trees {
                                    extend(t, m, *y);
                                }
                            }
                        }
                    }
                }
                partial = next;
            }
            let a = idx[rule.lhs.as_str()];
            for (kids, nodes, leaves) in partial {
                if nodes == n {
                    by_size[a][n].push((ParseTree::node(&rule.lhs, kids), leaves));
                }
            }
        }
        for level in by_size.iter_mut() {
            level[n].sort();
        }
    }
    let start = idx[cfg.start()];
    std::mem::take(&mut by_size[start])
        .into_iter()
        .flatten()
        .map(|(t, _)| t)
        .collect()
}
