#![allow(dead_code)]

use std::path::PathBuf;

use emkit::pcfg::{Cfg, Rule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

pub const NONTERMINALS: [&str; 3] = ["S", "A", "B"];
pub const TERMINALS: [&str; 2] = ["a", "b"];

/// A random grammar over S, A, B and a, b with at most `max_rules` rules,
/// no duplicates and no unary cycles.
pub fn random_cfg<R: Rng>(rng: &mut R, max_rules: usize) -> Cfg {
    loop {
        let n = rng.gen_range(2..=max_rules);
        let mut rules: Vec<Rule> = Vec::new();
        while rules.len() < n {
            let lhs = if rules.is_empty() {
                "S"
            } else {
                NONTERMINALS.choose(rng).unwrap()
            };
            let len = rng.gen_range(1..=3);
            let rhs: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.55) {
                        *TERMINALS.choose(rng).unwrap()
                    } else {
                        *NONTERMINALS.choose(rng).unwrap()
                    }
                })
                .collect();
            let r = Rule::new(lhs, rhs);
            if !rules.contains(&r) {
                rules.push(r);
            }
        }
        if let Ok(cfg) = Cfg::new("S", rules) {
            return cfg;
        }
    }
}
