//! Generic EM and GEM machinery.
//!
//! An incomplete-data corpus `f: Y -> R` is paired with a [`SymbolicAnalyzer`]
//! that maps every `y` to its disjoint set of complete-data analyses `A(y)`.
//! A [`CompleteDataModel`] supplies instance probabilities on complete data
//! and an M-step. [`em_run`] alternates the E-step (distributing `f(y)` over
//! `A(y)` in proportion to `q(x | y)`) with the plugged M-step and records the
//! incomplete-data log-likelihood of every re-estimate.

use std::collections::BTreeMap;
use std::fmt::{self, Debug};

use crate::corpus::{Corpus, Distribution, EPS_NORM};
use crate::error::{Error, Result};
use crate::estimation::relative_frequency_estimate;
use crate::fmt::format_sig;

/// Slack, in bits, tolerated on likelihood monotonicity before a step is
/// treated as a regression.
pub const EPS_MONO: f64 = 1e-9;

/// Maps incomplete-data types to their sets of analyses.
///
/// Implementations must keep the sets `A(y)` pairwise disjoint, so that
/// `yield_of(x) == y` exactly when `x` is in `A(y)`.
pub trait SymbolicAnalyzer {
    type Incomplete: Ord + Clone + Debug;
    type Complete: Ord + Clone + Debug;

    /// The (possibly empty) analysis set `A(y)`.
    fn analyses(&self, y: &Self::Incomplete) -> Vec<Self::Complete>;

    /// The unique `y` with `x` in `A(y)`.
    fn yield_of(&self, x: &Self::Complete) -> Self::Incomplete;
}

/// A symbolic analyzer given by an explicit table.
#[derive(Debug, Clone)]
pub struct TableAnalyzer<Y: Ord, X: Ord> {
    table: BTreeMap<Y, Vec<X>>,
    yields: BTreeMap<X, Y>,
}

impl<Y, X> TableAnalyzer<Y, X>
where
    Y: Ord + Clone + Debug,
    X: Ord + Clone + Debug,
{
    /// Fails with [`Error::OverlappingAnalyses`] if some `x` is listed under
    /// two different incomplete types.
    pub fn new(table: BTreeMap<Y, Vec<X>>) -> Result<Self> {
        let mut yields = BTreeMap::new();
        for (y, xs) in &table {
            for x in xs {
                if let Some(prev) = yields.insert(x.clone(), y.clone()) {
                    if &prev != y {
                        return Err(Error::OverlappingAnalyses(format!("{x:?}")));
                    }
                }
            }
        }
        Ok(TableAnalyzer { table, yields })
    }
}

impl<Y, X> SymbolicAnalyzer for TableAnalyzer<Y, X>
where
    Y: Ord + Clone + Debug,
    X: Ord + Clone + Debug,
{
    type Incomplete = Y;
    type Complete = X;

    fn analyses(&self, y: &Y) -> Vec<X> {
        let mut xs = self.table.get(y).cloned().unwrap_or_default();
        xs.sort();
        xs.dedup();
        xs
    }

    fn yield_of(&self, x: &X) -> Y {
        self.yields
            .get(x)
            .cloned()
            .expect("complete type outside the analyzer's table")
    }
}

/// A complete-data probability model with a closed-form (or at least
/// likelihood-non-decreasing) M-step.
pub trait CompleteDataModel<X: Ord> {
    type Instance: Clone + Debug;

    /// `log2 p(x)` under `instance`; `-inf` for zero probability.
    fn log2_probability(&self, instance: &Self::Instance, x: &X) -> f64;

    /// The M-step: an instance maximizing (or for GEM, not decreasing)
    /// `L(f_q; .)` on the expected corpus. `current` is the instance `q` that
    /// produced `expected`.
    fn maximize(&self, expected: &Corpus<X>, current: &Self::Instance) -> Result<Self::Instance>;

    /// Membership test for the model.
    fn is_instance(&self, instance: &Self::Instance) -> bool;

    /// Largest absolute change of any parameter between two instances.
    fn parameter_change(&self, a: &Self::Instance, b: &Self::Instance) -> f64;

    /// Number of parameters set to zero, used to warn about starting
    /// instances that rule out some complete-data types.
    fn zero_parameters(&self, _instance: &Self::Instance) -> usize {
        0
    }
}

/// The unrestricted model `M(X)` over a finite type set, whose maximum
/// likelihood estimate is the relative-frequency estimate.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnrestrictedModel;

impl<X: Ord + Clone + Debug> CompleteDataModel<X> for UnrestrictedModel {
    type Instance = Distribution<X>;

    fn log2_probability(&self, instance: &Distribution<X>, x: &X) -> f64 {
        instance.prob(x).log2()
    }

    fn maximize(&self, expected: &Corpus<X>, _current: &Distribution<X>) -> Result<Distribution<X>> {
        relative_frequency_estimate(expected)
    }

    fn is_instance(&self, instance: &Distribution<X>) -> bool {
        (instance.total() - 1.0).abs() <= EPS_NORM
    }

    fn parameter_change(&self, a: &Distribution<X>, b: &Distribution<X>) -> f64 {
        a.max_abs_diff(b)
    }

    fn zero_parameters(&self, instance: &Distribution<X>) -> usize {
        instance.iter().filter(|(_, &p)| p == 0.0).count()
    }
}

/// Conditional distribution `q(. | y)` over the analyses of one `y`.
#[derive(Debug, Clone)]
pub struct Conditional<X> {
    /// `log2 q(y)`.
    pub log2_incomplete: f64,
    /// `(x, q(x | y))` for every analysis, in analysis order.
    pub analyses: Vec<(X, f64)>,
}

fn conditional<X: Ord + Clone, M: CompleteDataModel<X>>(
    model: &M,
    instance: &M::Instance,
    analyses: &[X],
) -> Option<Conditional<X>> {
    let logs: Vec<f64> = analyses
        .iter()
        .map(|x| model.log2_probability(instance, x))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return None;
    }
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp2()).collect();
    let total: f64 = weights.iter().sum();
    Some(Conditional {
        log2_incomplete: max + total.log2(),
        analyses: analyses
            .iter()
            .cloned()
            .zip(weights.iter().map(|w| w / total))
            .collect(),
    })
}

/// A symbolic analyzer paired with a model instance. It induces `q(y)` and
/// the conditionals `q(x | y)`.
pub struct StatisticalAnalyzer<'a, A, M>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    pub analyzer: &'a A,
    pub model: &'a M,
    pub instance: &'a M::Instance,
}

impl<'a, A, M> StatisticalAnalyzer<'a, A, M>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    pub fn new(analyzer: &'a A, model: &'a M, instance: &'a M::Instance) -> Self {
        StatisticalAnalyzer {
            analyzer,
            model,
            instance,
        }
    }

    /// `q(y) = sum_{x in A(y)} q(x)`.
    pub fn incomplete_probability(&self, y: &A::Incomplete) -> f64 {
        let xs = self.analyzer.analyses(y);
        xs.iter()
            .map(|x| self.model.log2_probability(self.instance, x).exp2())
            .sum()
    }

    /// `q(. | y)`, or [`Error::ZeroMassIncomplete`] when `q(y) = 0`.
    pub fn conditional(&self, y: &A::Incomplete) -> Result<Conditional<A::Complete>> {
        let xs = self.analyzer.analyses(y);
        conditional(self.model, self.instance, &xs).ok_or_else(|| Error::ZeroMassIncomplete(format!("{y:?}")))
    }
}

/// An incomplete-data corpus with the analyses of every supported type
/// resolved once. Parsing is the expensive part of PCFG training, so EM runs
/// reuse this across iterations.
#[derive(Debug, Clone)]
pub struct AnalyzedCorpus<Y, X> {
    entries: Vec<(Y, f64, Vec<X>)>,
    size: f64,
}

impl<Y, X> AnalyzedCorpus<Y, X>
where
    Y: Ord + Clone + Debug,
    X: Ord + Clone + Debug,
{
    /// Resolves `A(y)` for each `y` with `f(y) > 0`.
    pub fn new<A>(f: &Corpus<Y>, analyzer: &A) -> Result<Self>
    where
        A: SymbolicAnalyzer<Incomplete = Y, Complete = X>,
    {
        f.ensure_non_empty()?;
        let mut entries = Vec::new();
        let mut unanalyzable = None;
        for (y, &count) in f {
            if count == 0.0 {
                continue;
            }
            let xs = analyzer.analyses(y);
            if xs.is_empty() {
                unanalyzable.get_or_insert_with(|| format!("{y:?}"));
                continue;
            }
            for x in &xs {
                if &analyzer.yield_of(x) != y {
                    return Err(Error::OverlappingAnalyses(format!("{x:?}")));
                }
            }
            entries.push((y.clone(), count, xs));
        }
        if let Some(y) = unanalyzable {
            return Err(Error::UnanalyzableToken(y));
        }
        Ok(AnalyzedCorpus {
            entries,
            size: f.size(),
        })
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Y, f64, &[X])> {
        self.entries.iter().map(|(y, c, xs)| (y, *c, xs.as_slice()))
    }

    /// `log2 L(f; p) = sum_y f(y) log2 p(y)`.
    pub fn log_likelihood<M: CompleteDataModel<X>>(&self, model: &M, instance: &M::Instance) -> f64 {
        let mut acc = 0.0;
        for (_, count, xs) in &self.entries {
            match conditional(model, instance, xs) {
                Some(c) => acc += count * c.log2_incomplete,
                None => return f64::NEG_INFINITY,
            }
        }
        acc
    }

    /// E-step: `f_q(x) = f(y) q(x | y)`. Analyses with `q(x | y) = 0` are left
    /// out of the returned corpus.
    pub fn expected_corpus<M: CompleteDataModel<X>>(&self, model: &M, q: &M::Instance) -> Result<Corpus<X>> {
        let mut out = Corpus::new();
        for (y, count, xs) in &self.entries {
            let cond =
                conditional(model, q, xs).ok_or_else(|| Error::ZeroMassIncomplete(format!("{y:?}")))?;
            for (x, p) in cond.analyses {
                if p > 0.0 {
                    out.add(x, count * p)?;
                }
            }
        }
        Ok(out)
    }

    /// `H_A(q; p) = sum_y p~(y) H_{A(y)}(q; p)`.
    pub fn expected_analysis_cross_entropy<M: CompleteDataModel<X>>(
        &self,
        model: &M,
        q: &M::Instance,
        p: &M::Instance,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for (y, count, xs) in &self.entries {
            let zero = || Error::ZeroMassIncomplete(format!("{y:?}"));
            let cq = conditional(model, q, xs).ok_or_else(zero)?;
            let cp = conditional(model, p, xs).ok_or_else(zero)?;
            let mut h = 0.0;
            for ((_, qx), (_, px)) in cq.analyses.iter().zip(&cp.analyses) {
                if *qx == 0.0 {
                    continue;
                }
                if *px == 0.0 {
                    return Ok(f64::INFINITY);
                }
                h -= qx * px.log2();
            }
            acc += count / self.size * h;
        }
        Ok(acc)
    }
}

/// `log2 L(f_q; p)` for a complete-data corpus under a model instance.
pub fn complete_log_likelihood<X, M>(model: &M, instance: &M::Instance, corpus: &Corpus<X>) -> f64
where
    X: Ord + Clone + Debug,
    M: CompleteDataModel<X>,
{
    let mut acc = 0.0;
    for (x, &w) in corpus {
        if w == 0.0 {
            continue;
        }
        let l = model.log2_probability(instance, x);
        if l == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        acc += w * l;
    }
    acc
}

/// The complete-data corpus `f_q` expected by `q`.
pub fn expected_complete_corpus<A, M>(
    f: &Corpus<A::Incomplete>,
    analyzer: &A,
    model: &M,
    q: &M::Instance,
) -> Result<Corpus<A::Complete>>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    AnalyzedCorpus::new(f, analyzer)?.expected_corpus(model, q)
}

/// Incomplete-data log-likelihood `log2 L(f; p)` with `p(y)` induced through
/// the analyzer.
pub fn incomplete_log_likelihood<A, M>(
    f: &Corpus<A::Incomplete>,
    analyzer: &A,
    model: &M,
    p: &M::Instance,
) -> Result<f64>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    Ok(AnalyzedCorpus::new(f, analyzer)?.log_likelihood(model, p))
}

/// The GEM condition `L(f_q; p^) >= L(f_q; q)`, with [`EPS_MONO`] slack.
pub fn gem_step_check<X, M>(model: &M, f_q: &Corpus<X>, q: &M::Instance, p_hat: &M::Instance) -> bool
where
    X: Ord + Clone + Debug,
    M: CompleteDataModel<X>,
{
    let before = complete_log_likelihood(model, q, f_q);
    let after = complete_log_likelihood(model, p_hat, f_q);
    after >= before - EPS_MONO
}

/// Expected cross-entropy on the analyses, `H_A(q; p)`, in bits.
pub fn expected_analysis_cross_entropy<A, M>(
    f: &Corpus<A::Incomplete>,
    analyzer: &A,
    model: &M,
    q: &M::Instance,
    p: &M::Instance,
) -> Result<f64>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    AnalyzedCorpus::new(f, analyzer)?.expected_analysis_cross_entropy(model, q, p)
}

/// Residual of `log2 L(f; p) = |f| H_A(q; p) + log2 L(f_q; p)`, in bits.
/// It is zero up to rounding for every pair of instances with positive
/// incomplete-data mass.
pub fn analysis_identity_gap<A, M>(
    f: &Corpus<A::Incomplete>,
    analyzer: &A,
    model: &M,
    q: &M::Instance,
    p: &M::Instance,
) -> Result<f64>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    let analyzed = AnalyzedCorpus::new(f, analyzer)?;
    let f_q = analyzed.expected_corpus(model, q)?;
    let h = analyzed.expected_analysis_cross_entropy(model, q, p)?;
    let lhs = analyzed.log_likelihood(model, p);
    let rhs = analyzed.size() * h + complete_log_likelihood(model, p, &f_q);
    Ok(lhs - rhs)
}

/// Stopping options for [`em_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iterations: usize,
    /// Stop once `|log2 L(f; p_i) - log2 L(f; p_{i-1})|` falls below this.
    pub tol_log_likelihood: f64,
    /// Stop once the largest parameter change falls below this.
    pub tol_parameters: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iterations: 10_000,
            tol_log_likelihood: 1e-10,
            tol_parameters: 1e-10,
        }
    }
}

impl EmOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1".into()));
        }
        let positive = |x: f64| x > 0.0;
        if !positive(self.tol_log_likelihood) || !positive(self.tol_parameters) {
            return Err(Error::InvalidOptions("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Which test ended a converged run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    LogLikelihood,
    Parameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged(Convergence),
    MaxIterations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged(Convergence::LogLikelihood) => f.write_str("converged (log-likelihood)"),
            StopReason::Converged(Convergence::Parameters) => f.write_str("converged (parameters)"),
            StopReason::MaxIterations => f.write_str("iteration cap reached"),
        }
    }
}

/// One re-estimate `p_i` with its incomplete-data log-likelihood.
#[derive(Debug, Clone)]
pub struct EmIterate<I> {
    pub iteration: usize,
    pub instance: I,
    pub log_likelihood: f64,
    /// Largest parameter change from `p_{i-1}`; `None` for `p_0`.
    pub max_param_delta: Option<f64>,
}

/// The re-estimates `p_0, p_1, ...` of a run.
#[derive(Debug, Clone)]
pub struct EmTrace<I> {
    pub iterates: Vec<EmIterate<I>>,
    pub stop_reason: StopReason,
    pub warnings: Vec<String>,
}

impl<I> EmTrace<I> {
    pub fn last(&self) -> &EmIterate<I> {
        self.iterates.last().expect("a trace always holds p_0")
    }

    pub fn final_instance(&self) -> &I {
        &self.last().instance
    }

    /// Number of completed EM iterations (excluding `p_0`).
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn converged(&self) -> bool {
        matches!(self.stop_reason, StopReason::Converged(_))
    }

    pub fn log_likelihoods(&self) -> Vec<f64> {
        self.iterates.iter().map(|it| it.log_likelihood).collect()
    }

    /// True iff no log-likelihood drops by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.iterates
            .windows(2)
            .all(|w| w[1].log_likelihood >= w[0].log_likelihood - slack)
    }

    /// `iter<TAB>loglik_bits<TAB>max_param_delta`, one row per iteration
    /// `i >= 1`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for it in &self.iterates[1..] {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                it.iteration,
                format_sig(it.log_likelihood),
                format_sig(it.max_param_delta.unwrap_or(f64::NAN)),
            ));
        }
        out
    }
}

/// Runs EM from `p0` until convergence or the iteration cap.
///
/// Every step is checked against the GEM condition on the expected corpus and
/// against incomplete-data likelihood monotonicity; a drop of more than
/// [`EPS_MONO`] bits aborts with [`Error::MstepRegression`].
pub fn em_run<A, M>(
    f: &Corpus<A::Incomplete>,
    analyzer: &A,
    model: &M,
    p0: M::Instance,
    options: &EmOptions,
) -> Result<EmTrace<M::Instance>>
where
    A: SymbolicAnalyzer,
    M: CompleteDataModel<A::Complete>,
{
    let analyzed = AnalyzedCorpus::new(f, analyzer)?;
    em_run_analyzed(&analyzed, model, p0, options)
}

/// [`em_run`] on a corpus whose analyses are already resolved.
pub fn em_run_analyzed<Y, X, M>(
    analyzed: &AnalyzedCorpus<Y, X>,
    model: &M,
    p0: M::Instance,
    options: &EmOptions,
) -> Result<EmTrace<M::Instance>>
where
    Y: Ord + Clone + Debug,
    X: Ord + Clone + Debug,
    M: CompleteDataModel<X>,
{
    options.validate()?;
    if !model.is_instance(&p0) {
        return Err(Error::InvalidOptions(
            "starting instance is not an instance of the model".into(),
        ));
    }
    let mut warnings = Vec::new();
    let zeros = model.zero_parameters(&p0);
    if zeros > 0 {
        let msg = format!("starting instance has {zeros} zero-probability parameter(s)");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let ll0 = analyzed.log_likelihood(model, &p0);
    let mut iterates = vec![EmIterate {
        iteration: 0,
        instance: p0,
        log_likelihood: ll0,
        max_param_delta: None,
    }];
    let mut stop_reason = StopReason::MaxIterations;

    for i in 1..=options.max_iterations {
        let prev = iterates.last().expect("non-empty");
        let q = &prev.instance;
        let f_q = analyzed.expected_corpus(model, q)?;
        let p_hat = model.maximize(&f_q, q)?;

        let before = complete_log_likelihood(model, q, &f_q);
        let after = complete_log_likelihood(model, &p_hat, &f_q);
        if after < before - EPS_MONO {
            return Err(Error::MstepRegression {
                iteration: i,
                before,
                after,
            });
        }
        let ll = analyzed.log_likelihood(model, &p_hat);
        if ll < prev.log_likelihood - EPS_MONO {
            return Err(Error::MstepRegression {
                iteration: i,
                before: prev.log_likelihood,
                after: ll,
            });
        }
        let delta = model.parameter_change(q, &p_hat);
        let ll_change = (ll - prev.log_likelihood).abs();
        iterates.push(EmIterate {
            iteration: i,
            instance: p_hat,
            log_likelihood: ll,
            max_param_delta: Some(delta),
        });
        if ll_change < options.tol_log_likelihood {
            stop_reason = StopReason::Converged(Convergence::LogLikelihood);
            break;
        }
        if delta < options.tol_parameters {
            stop_reason = StopReason::Converged(Convergence::Parameters);
            break;
        }
    }

    Ok(EmTrace {
        iterates,
        stop_reason,
        warnings,
    })
}
