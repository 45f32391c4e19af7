use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::corpus::EPS_NORM;
use crate::error::{Error, Result};
use crate::estimation::random_distribution;
use crate::fmt::format_sig;

use super::tree::ParseTree;

/// A context-free rule `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl Rule {
    pub fn new<L: Into<String>, S: Into<String>>(lhs: L, rhs: impl IntoIterator<Item = S>) -> Self {
        Rule {
            lhs: lhs.into(),
            rhs: rhs.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses `"A -> b c"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (lhs, rhs) = s
            .split_once("->")
            .ok_or_else(|| Error::InvalidGrammar(format!("rule without `->`: {s:?}")))?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            return Err(Error::InvalidGrammar(format!("bad left-hand side in {s:?}")));
        }
        Ok(Rule::new(lhs, rhs.split_whitespace()))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
    }
}

/// A context-free grammar without empty right-hand sides or unary cycles.
///
/// A symbol is a nonterminal iff it is the left-hand side of some rule.
/// Rules keep their insertion order; a rule's position is its id.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    start: String,
    rules: Vec<Rule>,
    index: HashMap<Rule, usize>,
    fragments: BTreeMap<String, Vec<usize>>,
    terminals: BTreeSet<String>,
}

impl Cfg {
    pub fn new(start: impl Into<String>, rules: Vec<Rule>) -> Result<Self> {
        let start = start.into();
        let mut index = HashMap::new();
        let mut fragments: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (id, rule) in rules.iter().enumerate() {
            if rule.rhs.is_empty() {
                return Err(Error::InvalidGrammar(format!(
                    "empty right-hand side for {}",
                    rule.lhs
                )));
            }
            if index.insert(rule.clone(), id).is_some() {
                return Err(Error::InvalidGrammar(format!("duplicate rule {rule}")));
            }
            fragments.entry(rule.lhs.clone()).or_default().push(id);
        }
        if !fragments.contains_key(&start) {
            return Err(Error::InvalidGrammar(format!(
                "start symbol {start} has no rules"
            )));
        }
        let terminals = rules
            .iter()
            .flat_map(|r| r.rhs.iter())
            .filter(|s| !fragments.contains_key(*s))
            .cloned()
            .collect();
        let cfg = Cfg {
            start,
            rules,
            index,
            fragments,
            terminals,
        };
        cfg.check_unary_cycles()?;
        Ok(cfg)
    }

    fn check_unary_cycles(&self) -> Result<()> {
        let mut unary: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in &self.rules {
            if r.rhs.len() == 1 && self.is_nonterminal(&r.rhs[0]) {
                unary.entry(&r.lhs).or_default().push(&r.rhs[0]);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(
            a: &'a str,
            unary: &BTreeMap<&'a str, Vec<&'a str>>,
            state: &mut BTreeMap<&'a str, u8>,
        ) -> Option<&'a str> {
            match state.get(a) {
                Some(1) => return Some(a),
                Some(2) => return None,
                _ => {}
            }
            state.insert(a, 1);
            for &b in unary.get(a).map(Vec::as_slice).unwrap_or(&[]) {
                if let Some(c) = visit(b, unary, state) {
                    return Some(c);
                }
            }
            state.insert(a, 2);
            None
        }
        for &a in unary.keys() {
            if let Some(c) = visit(a, &unary, &mut state) {
                return Err(Error::CyclicGrammar(c.to_string()));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: usize) -> &Rule {
        &self.rules[id]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule_id(&self, rule: &Rule) -> Option<usize> {
        self.index.get(rule).copied()
    }

    /// Rule ids of the fragment `G_A`, in rule order.
    pub fn fragment(&self, lhs: &str) -> &[usize] {
        self.fragments.get(lhs).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All fragments keyed by left-hand side.
    pub fn fragments(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.fragments.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn is_nonterminal(&self, sym: &str) -> bool {
        self.fragments.contains_key(sym)
    }

    pub fn is_terminal(&self, sym: &str) -> bool {
        self.terminals.contains(sym)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.fragments.keys().map(String::as_str)
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.terminals.iter().map(String::as_str)
    }

    /// Rule occurrence counts `f_r(x)` keyed by rule id, or
    /// [`Error::NotAFullParse`] if `x` is not a full-parse tree of the grammar.
    pub fn rule_counts(&self, x: &ParseTree) -> Result<BTreeMap<usize, usize>> {
        if x.label() != self.start {
            return Err(Error::NotAFullParse(format!(
                "root {} is not the start symbol {}",
                x.label(),
                self.start
            )));
        }
        let mut counts = BTreeMap::new();
        self.count_into(x, &mut counts)?;
        Ok(counts)
    }

    fn count_into(&self, x: &ParseTree, counts: &mut BTreeMap<usize, usize>) -> Result<()> {
        match x {
            ParseTree::Leaf(sym) => {
                if self.is_nonterminal(sym) {
                    return Err(Error::NotAFullParse(format!("nonterminal leaf {sym}")));
                }
                Ok(())
            }
            ParseTree::Node { label, children } => {
                let rule = Rule {
                    lhs: label.clone(),
                    rhs: children.iter().map(|c| c.label().to_string()).collect(),
                };
                let id = self
                    .rule_id(&rule)
                    .ok_or_else(|| Error::NotAFullParse(format!("{rule} is not a grammar rule")))?;
                *counts.entry(id).or_insert(0) += 1;
                for c in children {
                    self.count_into(c, counts)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A CFG with fragment-normalized rule probabilities.
///
/// Properness (finite trees summing to one) is not guaranteed; see
/// [`super::tree_mass`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    cfg: Arc<Cfg>,
    probs: Vec<f64>,
}

impl Pcfg {
    /// `probs[i]` is the probability of rule `i`. Every fragment must sum to
    /// one within the normalization tolerance.
    pub fn new(cfg: Arc<Cfg>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != cfg.len() {
            return Err(Error::InvalidGrammar(format!(
                "{} probabilities for {} rules",
                probs.len(),
                cfg.len()
            )));
        }
        for (id, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0 + EPS_NORM).contains(&p) {
                return Err(Error::InvalidProbability {
                    key: cfg.rule(id).to_string(),
                    value: p,
                });
            }
        }
        for (lhs, ids) in cfg.fragments() {
            let sum: f64 = ids.iter().map(|&i| probs[i]).sum();
            if (sum - 1.0).abs() > EPS_NORM {
                return Err(Error::NotFragmentNormalized {
                    lhs: lhs.to_string(),
                    sum,
                });
            }
        }
        Ok(Pcfg { cfg, probs })
    }

    /// Uniform distribution on every fragment.
    pub fn uniform(cfg: Arc<Cfg>) -> Self {
        let mut probs = vec![0.0; cfg.len()];
        for (_, ids) in cfg.fragments() {
            for &i in ids {
                probs[i] = 1.0 / ids.len() as f64;
            }
        }
        Pcfg { cfg, probs }
    }

    /// Each fragment drawn independently from its simplex.
    pub fn random<R: Rng + ?Sized>(cfg: Arc<Cfg>, rng: &mut R) -> Self {
        let mut probs = vec![0.0; cfg.len()];
        for (_, ids) in cfg.fragments() {
            let d = random_distribution(ids, rng).expect("fragments are non-empty");
            for &i in ids {
                probs[i] = d.prob(&i);
            }
        }
        Pcfg { cfg, probs }
    }

    pub fn cfg(&self) -> &Cfg {
        &self.cfg
    }

    pub fn shared_cfg(&self) -> &Arc<Cfg> {
        &self.cfg
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: usize) -> f64 {
        self.probs[id]
    }

    /// Probability of `rule`; zero if the grammar lacks it.
    pub fn rule_prob(&self, rule: &Rule) -> f64 {
        self.cfg.rule_id(rule).map_or(0.0, |i| self.probs[i])
    }

    /// `log2 p(x) = sum_r f_r(x) log2 p(r)`, accumulated in rule-id order so
    /// that trees with equal rule multisets get bit-identical values.
    pub fn tree_log2_probability(&self, x: &ParseTree) -> Result<f64> {
        let counts = self.cfg.rule_counts(x)?;
        let mut acc = 0.0;
        for (id, n) in counts {
            let p = self.probs[id];
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += n as f64 * p.log2();
        }
        Ok(acc)
    }

    /// `p(x) = prod_r p(r)^{f_r(x)}`.
    pub fn tree_probability(&self, x: &ParseTree) -> Result<f64> {
        Ok(self.tree_log2_probability(x)?.exp2())
    }
}

/// Contents of a grammar file.
#[derive(Debug, Clone)]
pub struct GrammarFile {
    pub cfg: Cfg,
    /// Present iff every rule line carried a probability.
    pub probs: Option<Vec<f64>>,
}

/// Parses `LHS -> sym ... [: prob]` lines. The start symbol is the left-hand
/// side of the first rule.
pub fn parse_grammar(text: &str) -> Result<GrammarFile> {
    let mut rules = Vec::new();
    let mut probs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let lhs = tokens.next().expect("non-empty line");
        if tokens.next() != Some("->") {
            return Err(Error::format(line_no, "expected `LHS -> symbols [: prob]`"));
        }
        let mut rhs = Vec::new();
        let mut prob = None;
        while let Some(tok) = tokens.next() {
            if tok == ":" {
                let p = tokens
                    .next()
                    .ok_or_else(|| Error::format(line_no, "missing probability after `:`"))?;
                prob = Some(
                    p.parse::<f64>()
                        .map_err(|_| Error::format(line_no, format!("bad probability {p:?}")))?,
                );
                if tokens.next().is_some() {
                    return Err(Error::format(line_no, "trailing input after probability"));
                }
                break;
            }
            if tok == "->" {
                return Err(Error::format(line_no, "`->` inside a right-hand side"));
            }
            rhs.push(tok.to_string());
        }
        if rhs.is_empty() {
            return Err(Error::format(line_no, "empty right-hand side"));
        }
        rules.push(Rule::new(lhs, rhs));
        probs.push((line_no, prob));
    }
    let start = rules
        .first()
        .map(|r| r.lhs.clone())
        .ok_or_else(|| Error::InvalidGrammar("no rules".into()))?;
    let with = probs.iter().filter(|(_, p)| p.is_some()).count();
    let probs = if with == 0 {
        None
    } else if with == probs.len() {
        Some(probs.into_iter().map(|(_, p)| p.expect("checked")).collect())
    } else {
        let (line, _) = probs.iter().find(|(_, p)| p.is_none()).expect("mixed");
        return Err(Error::format(
            *line,
            "rule without probability in a probabilistic grammar",
        ));
    };
    Ok(GrammarFile {
        cfg: Cfg::new(start, rules)?,
        probs,
    })
}

/// Parses a probabilistic grammar file. Fragments summing to one within the
/// normalization tolerance are rescaled to sum to one exactly; larger
/// deviations are an error.
pub fn parse_pcfg(text: &str) -> Result<Pcfg> {
    let file = parse_grammar(text)?;
    let mut probs = file
        .probs
        .ok_or_else(|| Error::InvalidGrammar("rules carry no probabilities".into()))?;
    let cfg = Arc::new(file.cfg);
    for (lhs, ids) in cfg.fragments() {
        let sum: f64 = ids.iter().map(|&i| probs[i]).sum();
        if (sum - 1.0).abs() > EPS_NORM {
            return Err(Error::NotFragmentNormalized {
                lhs: lhs.to_string(),
                sum,
            });
        }
        for &i in ids {
            probs[i] /= sum;
        }
    }
    Pcfg::new(cfg, probs)
}

/// Writes `LHS -> rhs : prob` lines with 12 significant digits.
pub fn write_pcfg(g: &Pcfg) -> String {
    g.cfg
        .rules()
        .iter()
        .zip(g.probs())
        .map(|(r, p)| format!("{r} : {}\n", format_sig(*p)))
        .collect()
}
