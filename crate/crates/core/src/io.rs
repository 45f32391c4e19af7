//! TSV readers and writers for corpora and distributions.
//!
//! Both formats hold one `type<TAB>value` pair per line. Blank lines and
//! lines starting with `#` are skipped; duplicate types are summed.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use crate::corpus::{Corpus, Distribution};
use crate::error::{Error, Result};
use crate::fmt::format_sig;

/// Yields `(line_number, key, value)` for every data line.
fn pairs<'a, T>(text: &'a str) -> impl Iterator<Item = Result<(usize, T, f64)>> + 'a
where
    T: FromStr,
    T::Err: Display,
{
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            return None;
        }
        Some(parse_pair(line_no, line))
    })
}

fn parse_pair<T>(line_no: usize, line: &str) -> Result<(usize, T, f64)>
where
    T: FromStr,
    T::Err: Display,
{
    let (key, value) = line
        .rsplit_once('\t')
        .ok_or_else(|| Error::format(line_no, "expected `type<TAB>value`"))?;
    let key = key
        .trim()
        .parse::<T>()
        .map_err(|e| Error::format(line_no, format!("bad type {key:?}: {e}")))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::format(line_no, format!("bad number {value:?}")))?;
    Ok((line_no, key, value))
}

/// Parses a corpus file.
pub fn parse_corpus<T>(text: &str) -> Result<Corpus<T>>
where
    T: FromStr + Ord + Clone + Debug,
    T::Err: Display,
{
    let mut corpus = Corpus::new();
    for item in pairs(text) {
        let (line, key, value) = item?;
        corpus
            .add(key, value)
            .map_err(|e| Error::format(line, e.to_string()))?;
    }
    Ok(corpus)
}

/// Parses a distribution file. With `validate` the total must be one within
/// the normalization tolerance; individual entries are always range checked.
pub fn parse_distribution<T>(text: &str, validate: bool) -> Result<Distribution<T>>
where
    T: FromStr + Ord + Clone + Debug,
    T::Err: Display,
{
    let mut map = std::collections::BTreeMap::new();
    for item in pairs(text) {
        let (_, key, value) = item?;
        *map.entry(key).or_insert(0.0) += value;
    }
    if validate {
        Distribution::new(map)
    } else {
        Distribution::new_unchecked(map)
    }
}

/// One `type<TAB>value` line per entry, values with 12 significant digits.
pub fn write_pairs<'a, T, I>(entries: I) -> String
where
    T: Display + 'a,
    I: IntoIterator<Item = (&'a T, &'a f64)>,
{
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k}\t{}\n", format_sig(*v)));
    }
    out
}

pub fn write_corpus<T: Ord + Display>(corpus: &Corpus<T>) -> String {
    write_pairs(corpus)
}

pub fn write_distribution<T: Ord + Display>(dist: &Distribution<T>) -> String {
    write_pairs(dist)
}
