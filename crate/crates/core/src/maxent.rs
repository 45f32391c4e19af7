//! Maximum-entropy checks on small type sets: feature expectations,
//! constrained-model membership, exponential-model evaluation, and a
//! brute-force comparison of the maximum-entropy and maximum-likelihood
//! estimates.
//!
//! No parameter fitting is provided; the grid search in
//! [`maxent_duality_check`] is an oracle for tiny problems only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug, Display};
use std::str::FromStr;
use std::sync::Arc;

use crate::corpus::{Corpus, Distribution};
use crate::error::{Error, Result};
use crate::estimation::relative_frequency_estimate;

type FeatureFn<T> = Arc<dyn Fn(&T) -> f64 + Send + Sync>;

/// An ordered list of named real-valued features `f_1, ..., f_d`.
#[derive(Clone)]
pub struct FeatureSet<T> {
    names: Vec<String>,
    features: Vec<FeatureFn<T>>,
}

impl<T> Default for FeatureSet<T> {
    fn default() -> Self {
        FeatureSet {
            names: Vec::new(),
            features: Vec::new(),
        }
    }
}

impl<T> Debug for FeatureSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureSet").field("names", &self.names).finish()
    }
}

impl<T: 'static> FeatureSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&T) -> f64 + Send + Sync + 'static,
    {
        self.push(name, f);
        self
    }

    pub fn push<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: Fn(&T) -> f64 + Send + Sync + 'static,
    {
        self.names.push(name.into());
        self.features.push(Arc::new(f));
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `(f_1(x), ..., f_d(x))`.
    pub fn values(&self, x: &T) -> Vec<f64> {
        self.features.iter().map(|f| f(x)).collect()
    }
}

impl<T: Ord + Clone + Send + Sync + 'static> FeatureSet<T> {
    /// Features given by value tables; types missing from a table map to 0.
    pub fn from_tables(tables: Vec<(String, BTreeMap<T, f64>)>) -> Self {
        let mut fs = FeatureSet::new();
        for (name, table) in tables {
            fs.push(name, move |x: &T| table.get(x).copied().unwrap_or(0.0));
        }
        fs
    }
}

/// Parses `feature-name<TAB>type<TAB>value` lines into table features, in
/// order of first appearance of each name.
pub fn parse_feature_table<T>(text: &str) -> Result<FeatureSet<T>>
where
    T: FromStr + Ord + Clone + Send + Sync + 'static,
    T::Err: Display,
{
    let mut tables: Vec<(String, BTreeMap<T, f64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let [name, ty, value] = parts[..] else {
            return Err(Error::format(line_no, "expected `feature<TAB>type<TAB>value`"));
        };
        let ty: T = ty
            .trim()
            .parse()
            .map_err(|e| Error::format(line_no, format!("bad type {ty:?}: {e}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::format(line_no, format!("bad value {value:?}")))?;
        let name = name.trim();
        let pos = match tables.iter().position(|(n, _)| n == name) {
            Some(p) => p,
            None => {
                tables.push((name.to_string(), BTreeMap::new()));
                tables.len() - 1
            }
        };
        tables[pos].1.insert(ty, value);
    }
    Ok(FeatureSet::from_tables(tables))
}

/// `E_p f_i = sum_x p(x) f_i(x)` for every feature.
pub fn feature_expectation<T: Ord + Clone + Debug + 'static>(
    p: &Distribution<T>,
    fs: &FeatureSet<T>,
) -> Vec<f64> {
    let mut out = vec![0.0; fs.len()];
    for (x, &px) in p {
        if px == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(fs.values(x)) {
            *o += px * v;
        }
    }
    out
}

/// True iff `|E_p f_i - E_p~ f_i| <= tol` for every feature, where `p~` is
/// the relative-frequency estimate on `f`.
pub fn in_constrained_model<T: Ord + Clone + Debug + 'static>(
    p: &Distribution<T>,
    fs: &FeatureSet<T>,
    f: &Corpus<T>,
    tol: f64,
) -> Result<bool> {
    let target = feature_expectation(&relative_frequency_estimate(f)?, fs);
    let got = feature_expectation(p, fs);
    Ok(got.iter().zip(&target).all(|(a, b)| (a - b).abs() <= tol))
}

/// `p(x) = exp(sum_i lambda_i f_i(x)) p0(x) / Z` on a finite support, with
/// `p0` uniform when no reference is given.
#[derive(Debug, Clone)]
pub struct ExponentialModelInstance<T: Ord> {
    pub lambdas: Vec<f64>,
    pub reference: Option<Distribution<T>>,
    pub support: BTreeSet<T>,
}

impl<T: Ord + Clone + Debug + 'static> ExponentialModelInstance<T> {
    pub fn new(lambdas: Vec<f64>, support: impl IntoIterator<Item = T>) -> Self {
        ExponentialModelInstance {
            lambdas,
            reference: None,
            support: support.into_iter().collect(),
        }
    }

    pub fn with_reference(mut self, reference: Distribution<T>) -> Self {
        self.reference = Some(reference);
        self
    }
}

/// Evaluates an exponential model, normalizing in log space with the
/// maximum subtracted.
pub fn exponential_prob<T: Ord + Clone + Debug + 'static>(
    m: &ExponentialModelInstance<T>,
    fs: &FeatureSet<T>,
) -> Result<Distribution<T>> {
    if m.lambdas.len() != fs.len() {
        return Err(Error::InvalidOptions(format!(
            "{} weights for {} features",
            m.lambdas.len(),
            fs.len()
        )));
    }
    if m.support.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut scores = Vec::with_capacity(m.support.len());
    for x in &m.support {
        let mut s: f64 = m.lambdas.iter().zip(fs.values(x)).map(|(l, v)| l * v).sum();
        if let Some(p0) = &m.reference {
            let q = p0.prob(x);
            if q == 0.0 {
                return Err(Error::OutOfRange(format!("{x:?} has zero reference probability")));
            }
            s += q.ln();
        }
        scores.push(s);
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateNormalizer);
    }
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::DegenerateNormalizer);
    }
    Distribution::new(
        m.support
            .iter()
            .cloned()
            .zip(weights.iter().map(|w| w / z))
            .collect(),
    )
}

/// Search grids for [`maxent_duality_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityGrid {
    /// The simplex is searched at multiples of `1 / simplex_steps`.
    pub simplex_steps: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Number of grid points per weight, at least 2.
    pub lambda_points: usize,
}

impl Default for DualityGrid {
    fn default() -> Self {
        DualityGrid {
            simplex_steps: 240,
            lambda_min: -5.0,
            lambda_max: 5.0,
            lambda_points: 1001,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualityReport<T: Ord> {
    /// Entropy maximizer over the simplex grid within the constraint band.
    pub maxent: Distribution<T>,
    /// Likelihood maximizer of the exponential model over the weight grid.
    pub mle: Distribution<T>,
    pub mle_lambdas: Vec<f64>,
    /// Max-norm distance between the two.
    pub distance: f64,
    /// Distance the two grids can account for.
    pub resolution: f64,
    pub passed: bool,
}

const MAX_TYPES: usize = 12;
const MAX_FEATURES: usize = 3;
const MAX_GRID_POINTS: f64 = 5e6;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Calls `visit` with every vector of `parts` non-negative integers summing
/// to `total`, in lexicographic order.
fn compositions(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            visit(cur);
            return;
        }
        for k in 0..=left {
            cur[slot] = k;
            rec(left - k, slot + 1, cur, visit);
        }
    }
    let mut cur = vec![0; parts];
    rec(total, 0, &mut cur, visit);
}

/// Brute-force witness that the maximum-entropy distribution under the
/// feature constraints of `f` coincides with the maximum-likelihood
/// exponential model on `f`.
///
/// (a) Among simplex grid points whose feature expectations are within
/// `|X| range(f_i) / (2 steps)` of the empirical ones (a band that always
/// contains a grid point) the entropy maximizer is taken. (b) Over the weight
/// grid the likelihood maximizer of the exponential model is taken. The check
/// passes if their max-norm distance is at most `|X| / steps` plus the largest
/// change of the model between neighbouring weight-grid points around (b).
pub fn maxent_duality_check<T: Ord + Clone + Debug + 'static>(
    support: &[T],
    fs: &FeatureSet<T>,
    f: &Corpus<T>,
    grid: &DualityGrid,
) -> Result<DualityReport<T>> {
    let types: Vec<T> = support
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = types.len();
    let d = fs.len();
    if n > MAX_TYPES || d > MAX_FEATURES {
        return Err(Error::ScaleExceeded(format!("{n} types, {d} features")));
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    if grid.simplex_steps == 0
        || grid.lambda_points < 2
        || grid.lambda_max.partial_cmp(&grid.lambda_min) != Some(std::cmp::Ordering::Greater)
    {
        return Err(Error::InvalidOptions("degenerate search grid".into()));
    }
    let simplex_points = binomial(grid.simplex_steps + n - 1, n - 1);
    let lambda_total = (grid.lambda_points as f64).powi(d as i32);
    if simplex_points > MAX_GRID_POINTS || lambda_total > MAX_GRID_POINTS {
        return Err(Error::ScaleExceeded(format!(
            "{simplex_points} simplex points, {lambda_total} weight points"
        )));
    }
    if let Some((x, _)) = f
        .iter()
        .find(|(x, &c)| c > 0.0 && types.binary_search(x).is_err())
    {
        return Err(Error::OutOfRange(format!("{x:?}")));
    }
    let p_tilde = relative_frequency_estimate(f)?;
    let target = feature_expectation(&p_tilde, fs);
    let values: Vec<Vec<f64>> = types.iter().map(|x| fs.values(x)).collect();

    // (a) maximum entropy within the constraint band
    let steps = grid.simplex_steps as f64;
    let band: Vec<f64> = (0..d)
        .map(|i| {
            let (lo, hi) = values
                .iter()
                .map(|v| v[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            n as f64 * (hi - lo) / (2.0 * steps) + 1e-12
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    compositions(grid.simplex_steps, n, &mut |counts| {
        for i in 0..d {
            let e: f64 = counts
                .iter()
                .zip(&values)
                .map(|(&c, v)| c as f64 / steps * v[i])
                .sum();
            if (e - target[i]).abs() > band[i] {
                return;
            }
        }
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / steps;
                -p * p.log2()
            })
            .sum();
        if best.as_ref().is_none_or(|(bh, _)| h > *bh) {
            best = Some((h, counts.to_vec()));
        }
    });
    let (_, counts) = best.expect("the band always contains a grid point");
    let maxent = Distribution::new_unchecked(
        types
            .iter()
            .cloned()
            .zip(counts.iter().map(|&c| c as f64 / steps))
            .collect(),
    )?;

    // (b) maximum likelihood over the weight grid
    let step = (grid.lambda_max - grid.lambda_min) / (grid.lambda_points - 1) as f64;
    let at = |k: usize| grid.lambda_min + step * k as f64;
    let model =
        |lambdas: Vec<f64>| exponential_prob(&ExponentialModelInstance::new(lambdas, types.clone()), fs);
    let loglik = |p: &Distribution<T>| -> f64 {
        f.iter()
            .filter(|(_, &c)| c > 0.0)
            .map(|(x, &c)| c * p.prob(x).log2())
            .sum()
    };
    let mut best_l = f64::NEG_INFINITY;
    let mut best_idx = vec![0usize; d];
    let mut idx = vec![0usize; d];
    loop {
        let p = model(idx.iter().map(|&k| at(k)).collect())?;
        let l = loglik(&p);
        if l > best_l {
            best_l = l;
            best_idx = idx.clone();
        }
        // odometer increment
        let mut pos = 0;
        while pos < d {
            idx[pos] += 1;
            if idx[pos] < grid.lambda_points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == d {
            break;
        }
    }
    let mle_lambdas: Vec<f64> = best_idx.iter().map(|&k| at(k)).collect();
    let mle = model(mle_lambdas.clone())?;
    let mut neighbour = 0.0f64;
    for i in 0..d {
        for delta in [-step, step] {
            let mut l = mle_lambdas.clone();
            l[i] += delta;
            neighbour = neighbour.max(model(l)?.max_abs_diff(&mle));
        }
    }

    let distance = maxent.max_abs_diff(&mle);
    let resolution = n as f64 / steps + neighbour;
    Ok(DualityReport {
        passed: distance <= resolution,
        maxent,
        mle,
        mle_lambdas,
        distance,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(a: &'static str) -> impl Fn(&&'static str) -> f64 + Send + Sync {
        move |x: &&str| if *x == a { 1.0 } else { 0.0 }
    }

    #[test]
    fn expectations() {
        let p = Distribution::from_pairs([("a", 0.2), ("b", 0.8)]).unwrap();
        let fs = FeatureSet::new()
            .with("is_a", indicator("a"))
            .with("one", |_: &&str| 1.0);
        assert_eq!(feature_expectation(&p, &fs), vec![0.2, 1.0]);

        let f = Corpus::from_pairs([(1, 2.0), (2, 3.0), (3, 5.0)]).unwrap();
        let fs = FeatureSet::new().with("id", |x: &i32| *x as f64);
        let e = feature_expectation(&relative_frequency_estimate(&f).unwrap(), &fs);
        assert!((e[0] - 2.3).abs() < 1e-15);
    }

    #[test]
    fn membership() {
        let f = Corpus::from_pairs([("a", 1.0), ("b", 3.0)]).unwrap();
        let fs = FeatureSet::new().with("is_a", indicator("a"));
        let p_tilde = relative_frequency_estimate(&f).unwrap();
        assert!(in_constrained_model(&p_tilde, &fs, &f, 1e-9).unwrap());
        let u = Distribution::uniform(["a", "b"]).unwrap();
        assert!(!in_constrained_model(&u, &fs, &f, 1e-9).unwrap());
        let point = Distribution::from_pairs([("a", 1.0)]).unwrap();
        assert!(!in_constrained_model(&point, &fs, &f, 1e-9).unwrap());
        assert_eq!(
            in_constrained_model(&u, &fs, &Corpus::new(), 1e-9).unwrap_err(),
            Error::EmptyCorpus
        );
    }

    #[test]
    fn exponential_model_values() {
        let fs = FeatureSet::new().with("is_a", indicator("a"));
        let m = ExponentialModelInstance::new(vec![3f64.ln()], ["a", "b"]);
        let p = exponential_prob(&m, &fs).unwrap();
        assert!((p.prob(&"a") - 0.75).abs() < 1e-15);
        assert!((p.prob(&"b") - 0.25).abs() < 1e-15);

        let m = ExponentialModelInstance::new(vec![0.0], ["a", "b", "c"]);
        let p = exponential_prob(&m, &fs).unwrap();
        assert!((p.prob(&"c") - 1.0 / 3.0).abs() < 1e-15);

        let p0 = Distribution::from_pairs([("a", 0.1), ("b", 0.2), ("c", 0.7)]).unwrap();
        let m = ExponentialModelInstance::new(vec![0.0], ["a", "b", "c"]).with_reference(p0.clone());
        assert!(exponential_prob(&m, &fs).unwrap().max_abs_diff(&p0) < 1e-15);
    }

    #[test]
    fn large_weights_stay_finite() {
        let fs = FeatureSet::new().with("is_a", indicator("a"));
        let m = ExponentialModelInstance::new(vec![700.0], ["a", "b"]);
        let p = exponential_prob(&m, &fs).unwrap();
        assert_eq!(p.prob(&"a"), 1.0);
        let m = ExponentialModelInstance::new(vec![f64::NAN], ["a", "b"]);
        assert_eq!(
            exponential_prob(&m, &fs).unwrap_err(),
            Error::DegenerateNormalizer
        );
    }

    #[test]
    fn feature_table_file() {
        let fs: FeatureSet<String> = parse_feature_table("# f\nf1\ta\t1\nf2\tb\t2.5\nf1\tc\t3\n").unwrap();
        assert_eq!(fs.names(), &["f1".to_string(), "f2".to_string()]);
        assert_eq!(fs.values(&"c".to_string()), vec![3.0, 0.0]);
        assert_eq!(fs.values(&"b".to_string()), vec![0.0, 2.5]);
        assert!(matches!(
            parse_feature_table::<String>("f1\ta\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn compositions_are_complete() {
        let mut seen = 0;
        compositions(4, 3, &mut |c| {
            assert_eq!(c.iter().sum::<usize>(), 4);
            seen += 1;
        });
        assert_eq!(seen as f64, binomial(6, 2));
    }

    #[test]
    fn scale_limits() {
        let types: Vec<u32> = (0..13).collect();
        let f = Corpus::from_pairs([(0u32, 1.0)]).unwrap();
        let fs = FeatureSet::new();
        assert!(matches!(
            maxent_duality_check(&types, &fs, &f, &DualityGrid::default()),
            Err(Error::ScaleExceeded(_))
        ));
        let fs = FeatureSet::new()
            .with("a", |_: &u32| 0.0)
            .with("b", |_: &u32| 0.0)
            .with("c", |_: &u32| 0.0)
            .with("d", |_: &u32| 0.0);
        assert!(matches!(
            maxent_duality_check(&types[..2], &fs, &f, &DualityGrid::default()),
            Err(Error::ScaleExceeded(_))
        ));
    }
}
