use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::grammar::Rule;

/// Separator between a label and its parent's label in parent-encoded trees.
pub const PARENT_SEP: char = '^';

/// A parse tree in bracketed form, e.g. `(S (NP the man) (VP left))`.
///
/// Leaves are bare symbols; every internal node has at least one child.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseTree {
    Leaf(String),
    Node { label: String, children: Vec<ParseTree> },
}

impl ParseTree {
    pub fn leaf(sym: impl Into<String>) -> Self {
        ParseTree::Leaf(sym.into())
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ParseTree::Leaf(s) => s,
            ParseTree::Node { label, .. } => label,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ParseTree::Leaf(_))
    }

    /// The leaf symbols from left to right.
    pub fn yield_symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut Vec<String>) {
        match self {
            ParseTree::Leaf(s) => out.push(s.clone()),
            ParseTree::Node { children, .. } => children.iter().for_each(|c| c.collect_yield(out)),
        }
    }

    pub fn internal_nodes(&self) -> usize {
        match self {
            ParseTree::Leaf(_) => 0,
            ParseTree::Node { children, .. } => 1 + children.iter().map(Self::internal_nodes).sum::<usize>(),
        }
    }

    /// Local trees as rules, in preorder.
    pub fn rules(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        self.collect_rules(&mut out);
        out
    }

    fn collect_rules(&self, out: &mut Vec<Rule>) {
        if let ParseTree::Node { label, children } = self {
            out.push(Rule {
                lhs: label.clone(),
                rhs: children.iter().map(|c| c.label().to_string()).collect(),
            });
            children.iter().for_each(|c| c.collect_rules(out));
        }
    }

    /// `f_r(x)` for every rule occurring in the tree.
    pub fn rule_counts(&self) -> BTreeMap<Rule, usize> {
        let mut counts = BTreeMap::new();
        for r in self.rules() {
            *counts.entry(r).or_insert(0) += 1;
        }
        counts
    }

    /// Appends `^parent` to every non-root internal node, where `parent` is
    /// the original label of the node's parent.
    pub fn parent_encode(&self) -> ParseTree {
        match self {
            ParseTree::Leaf(_) => self.clone(),
            ParseTree::Node { label, children } => ParseTree::Node {
                label: label.clone(),
                children: children.iter().map(|c| c.encode_under(label)).collect(),
            },
        }
    }

    fn encode_under(&self, parent: &str) -> ParseTree {
        match self {
            ParseTree::Leaf(_) => self.clone(),
            ParseTree::Node { label, children } => ParseTree::Node {
                label: format!("{label}{PARENT_SEP}{parent}"),
                children: children.iter().map(|c| c.encode_under(label)).collect(),
            },
        }
    }

    /// Inverse of [`ParseTree::parent_encode`].
    pub fn parent_decode(&self) -> Result<ParseTree> {
        match self {
            ParseTree::Leaf(_) => Ok(self.clone()),
            ParseTree::Node { label, children } => Ok(ParseTree::Node {
                label: label.clone(),
                children: children
                    .iter()
                    .map(|c| c.decode_under(label))
                    .collect::<Result<_>>()?,
            }),
        }
    }

    fn decode_under(&self, parent: &str) -> Result<ParseTree> {
        match self {
            ParseTree::Leaf(_) => Ok(self.clone()),
            ParseTree::Node { label, children } => {
                let suffix = format!("{PARENT_SEP}{parent}");
                let base = label.strip_suffix(&suffix).ok_or_else(|| {
                    Error::NotAFullParse(format!("label {label} lacks the parent suffix {suffix}"))
                })?;
                Ok(ParseTree::Node {
                    label: base.to_string(),
                    children: children
                        .iter()
                        .map(|c| c.decode_under(base))
                        .collect::<Result<_>>()?,
                })
            }
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf(s) => f.write_str(s),
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Sym(&'a str),
}

fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(b) = start.take() {
                out.push(Token::Sym(&s[b..i]));
            }
            match c {
                '(' => out.push(Token::Open),
                ')' => out.push(Token::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push(Token::Sym(&s[b..]));
    }
    out
}

fn syntax(msg: impl Into<String>) -> Error {
    Error::format(1, msg)
}

fn parse_node<'a>(tokens: &[Token<'a>], pos: &mut usize) -> Result<ParseTree> {
    // tokens[*pos] is Open
    *pos += 1;
    let label = match tokens.get(*pos) {
        Some(Token::Sym(s)) => s.to_string(),
        _ => return Err(syntax("expected a label after `(`")),
    };
    *pos += 1;
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(Token::Close) => {
                *pos += 1;
                break;
            }
            Some(Token::Open) => children.push(parse_node(tokens, pos)?),
            Some(Token::Sym(s)) => {
                children.push(ParseTree::Leaf(s.to_string()));
                *pos += 1;
            }
            None => return Err(syntax("unbalanced parentheses")),
        }
    }
    if children.is_empty() {
        return Err(syntax(format!("node {label} has no children")));
    }
    Ok(ParseTree::Node { label, children })
}

impl FromStr for ParseTree {
    type Err = Error;

    /// Parses a single bracketed tree. Errors are reported on line 1.
    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s);
        if tokens.first() != Some(&Token::Open) {
            return Err(syntax("a tree must start with `(`"));
        }
        let mut pos = 0;
        let tree = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(syntax("trailing input after tree"));
        }
        Ok(tree)
    }
}
