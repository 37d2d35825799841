//! Empirical privacy checks.
//!
//! For tiny instances every permutation tuple and every within-source
//! ordering is enumerated, which gives the exact distribution of the query
//! set one source receives. Privacy then means these distributions are the
//! same map for every desired index, so the mutual information between the
//! query and the index is exactly zero.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scheme::{self, canonical_shape, RetrievalPlan, Shape};
use crate::types::{BitRef, QueryElement, SystemConfig};

/// Largest number of (permutation tuple, ordering) outcomes exhaustive mode
/// will walk.
pub const EXHAUSTIVE_BOUND: u64 = 100_000;

/// A query set with ids and order removed: elements sorted by message subset,
/// then by positions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalSet(Vec<Vec<BitRef>>);

impl CanonicalSet {
    pub fn of(elements: &[QueryElement]) -> Self {
        let mut terms: Vec<Vec<BitRef>> = elements.iter().map(|e| e.terms().to_vec()).collect();
        terms.sort_by(|a, b| {
            let subset = |t: &[BitRef]| t.iter().map(|r| r.message).collect::<Vec<_>>();
            let positions = |t: &[BitRef]| t.iter().map(|r| r.position).collect::<Vec<_>>();
            (subset(a), positions(a)).cmp(&(subset(b), positions(b)))
        });
        CanonicalSet(terms)
    }

    pub fn elements(&self) -> &[Vec<BitRef>] {
        &self.0
    }
}

impl fmt::Display for CanonicalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = serde_json::to_string(&self.0).map_err(|_| fmt::Error)?;
        f.write_str(&json)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

/// Distribution of the canonical query set seen by one source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct QueryDistribution {
    messages: usize,
    sources: usize,
    source: usize,
    theta: usize,
    support: BTreeMap<CanonicalSet, Rational>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    #[serde(rename = "K")]
    messages: usize,
    #[serde(rename = "S")]
    sources: usize,
    source: usize,
    theta: usize,
    support: BTreeMap<String, Rational>,
}

impl From<QueryDistribution> for RawDistribution {
    fn from(d: QueryDistribution) -> Self {
        RawDistribution {
            messages: d.messages,
            sources: d.sources,
            source: d.source,
            theta: d.theta,
            support: d.support.into_iter().map(|(k, p)| (k.to_string(), p)).collect(),
        }
    }
}

impl TryFrom<RawDistribution> for QueryDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let support = raw
            .support
            .into_iter()
            .map(|(k, p)| {
                let terms: Vec<Vec<BitRef>> =
                    serde_json::from_str(&k).map_err(|e| Error::Mismatch(format!("bad support key {k:?}: {e}")))?;
                Ok((CanonicalSet(terms), p))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let d = QueryDistribution {
            messages: raw.messages,
            sources: raw.sources,
            source: raw.source,
            theta: raw.theta,
            support,
        };
        if d.total() != Rational::one() {
            return Err(Error::Mismatch("probabilities do not sum to 1".into()));
        }
        Ok(d)
    }
}

impl QueryDistribution {
    pub fn new(
        messages: usize,
        sources: usize,
        source: usize,
        theta: usize,
        support: BTreeMap<CanonicalSet, Rational>,
    ) -> Result<Self> {
        let d = QueryDistribution { messages, sources, source, theta, support };
        if d.total() != Rational::one() {
            return Err(Error::Mismatch("probabilities do not sum to 1".into()));
        }
        Ok(d)
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn support(&self) -> &BTreeMap<CanonicalSet, Rational> {
        &self.support
    }

    pub fn total(&self) -> Rational {
        self.support.values().sum()
    }

    /// Distribution of one uniformly chosen element of the query set.
    pub fn element_marginal(&self) -> BTreeMap<Vec<BitRef>, Rational> {
        let mut out: BTreeMap<Vec<BitRef>, Rational> = BTreeMap::new();
        for (set, p) in &self.support {
            let share = p / &Rational::from_integer(set.0.len());
            for e in &set.0 {
                let slot = out.entry(e.clone()).or_insert_with(Rational::zero);
                *slot = &*slot + &share;
            }
        }
        out
    }

    fn from_counts(
        messages: usize,
        sources: usize,
        source: usize,
        theta: usize,
        counts: BTreeMap<CanonicalSet, u64>,
    ) -> Result<Self> {
        let total: u64 = counts.values().sum();
        let support = counts
            .into_iter()
            .map(|(k, c)| (k, Rational::new(c, total)))
            .collect();
        QueryDistribution::new(messages, sources, source, theta, support)
    }
}

fn check_instance(messages: usize, sources: usize, source: usize, theta: usize) -> Result<SystemConfig> {
    let config = SystemConfig::single_database(messages, sources)?;
    config.check_message(theta)?;
    if source >= sources {
        return Err(Error::Config(format!("source {source} out of range for S = {sources}")));
    }
    Ok(config)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).map(BigUint::from).product()
}

/// Outcomes exhaustive enumeration walks for `(K, S)`: `(L!)^K * |Q|!`.
pub fn exhaustive_outcomes(messages: usize, sources: usize) -> BigUint {
    let l = bounds::block_length_big(sources, messages);
    let per_source = bounds::query_cardinality(sources, messages);
    match (l.to_usize(), per_source.to_usize()) {
        (Some(l), Some(q)) if l <= 64 && q <= 64 => num_traits::pow(factorial(l), messages) * factorial(q),
        _ => BigUint::from(u64::MAX) * BigUint::from(u64::MAX),
    }
}

/// Distribution of source `source`'s canonical query set when the requester
/// wants `theta`.
pub fn enumerate_distribution(
    messages: usize,
    sources: usize,
    source: usize,
    theta: usize,
    mode: &Mode,
) -> Result<QueryDistribution> {
    match *mode {
        Mode::Exhaustive => enumerate_exhaustive_with(messages, sources, source, theta, |config, theta, perms| {
            Ok(scheme::generate_plan_with_permutations(config, theta, perms)?.query_sets().to_vec())
        }),
        Mode::Sampled { count, seed } => {
            let config = check_instance(messages, sources, source, theta)?;
            if count == 0 {
                return Err(Error::Config("sampled mode needs at least one draw".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = BTreeMap::new();
            for _ in 0..count {
                let plan = scheme::generate_plan(&config, theta, &mut rng)?;
                let set = plan.query_set(source).expect("source checked");
                *counts.entry(CanonicalSet::of(set)).or_insert(0u64) += 1;
            }
            QueryDistribution::from_counts(messages, sources, source, theta, counts)
        }
    }
}

/// Exhaustive enumeration over an arbitrary plan generator. `generate`
/// receives one permutation of `0..L` per message and returns every source's
/// set in emission order; each ordering of the chosen source's set is then
/// counted as an equally likely outcome.
pub fn enumerate_exhaustive_with<F>(
    messages: usize,
    sources: usize,
    source: usize,
    theta: usize,
    mut generate: F,
) -> Result<QueryDistribution>
where
    F: FnMut(&SystemConfig, usize, Vec<Vec<usize>>) -> Result<Vec<Vec<QueryElement>>>,
{
    let config = check_instance(messages, sources, source, theta)?;
    let outcomes = exhaustive_outcomes(messages, sources);
    if outcomes > BigUint::from(EXHAUSTIVE_BOUND) {
        return Err(Error::EnumerationBound { outcomes: outcomes.to_string(), bound: EXHAUSTIVE_BOUND });
    }
    let l = bounds::block_length(sources, messages)?;

    let mut counts: BTreeMap<CanonicalSet, u64> = BTreeMap::new();
    for perms in (0..messages).map(|_| (0..l).permutations(l)).multi_cartesian_product() {
        let sets = generate(&config, theta, perms)?;
        let set = sets
            .get(source)
            .ok_or_else(|| Error::Invariant(format!("generator produced no set for source {source}")))?;
        for order in (0..set.len()).permutations(set.len()) {
            let reordered: Vec<QueryElement> = order.iter().map(|&i| set[i].clone()).collect();
            *counts.entry(CanonicalSet::of(&reordered)).or_insert(0) += 1;
        }
    }
    QueryDistribution::from_counts(messages, sources, source, theta, counts)
}

/// `I(Q_s; theta)` under a uniform prior on `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MutualInformation {
    /// All conditional distributions are identical as exact maps.
    Zero,
    /// Numeric value in bits, for diagnostics.
    Positive(f64),
}

impl MutualInformation {
    pub fn is_zero(&self) -> bool {
        matches!(self, MutualInformation::Zero)
    }

    pub fn bits(&self) -> f64 {
        match *self {
            MutualInformation::Zero => 0.0,
            MutualInformation::Positive(b) => b,
        }
    }
}

impl fmt::Display for MutualInformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutualInformation::Zero => f.write_str("0 (exact)"),
            MutualInformation::Positive(b) => write!(f, "{b:.6} bits"),
        }
    }
}

/// Takes one distribution per desired index, all for the same instance.
pub fn mutual_information_with_theta(distributions: &[QueryDistribution]) -> Result<MutualInformation> {
    let first = distributions
        .first()
        .ok_or_else(|| Error::Mismatch("no distributions given".into()))?;
    let k = first.messages;
    if distributions.len() != k {
        return Err(Error::Mismatch(format!("need {k} distributions, got {}", distributions.len())));
    }
    let mut thetas: Vec<usize> = distributions.iter().map(|d| d.theta).collect();
    thetas.sort_unstable();
    if thetas != (0..k).collect::<Vec<_>>() {
        return Err(Error::Mismatch("need exactly one distribution per desired index".into()));
    }
    if distributions
        .iter()
        .any(|d| (d.messages, d.sources, d.source) != (first.messages, first.sources, first.source))
    {
        return Err(Error::Mismatch("distributions describe different instances".into()));
    }

    if distributions.iter().all(|d| d.support == first.support) {
        return Ok(MutualInformation::Zero);
    }

    let prior = 1.0 / k as f64;
    let mut marginal: BTreeMap<&CanonicalSet, f64> = BTreeMap::new();
    for d in distributions {
        for (q, p) in &d.support {
            *marginal.entry(q).or_insert(0.0) += prior * p.to_f64();
        }
    }
    let info: f64 = distributions
        .iter()
        .flat_map(|d| d.support.iter())
        .map(|(q, p)| {
            let p = p.to_f64();
            if p > 0.0 {
                prior * p * (p / marginal[q]).log2()
            } else {
                0.0
            }
        })
        .sum();
    Ok(MutualInformation::Positive(info.max(f64::MIN_POSITIVE)))
}

/// `1/2 * sum |a - b|` over the union of supports.
pub fn total_variation<K: Ord>(a: &BTreeMap<K, Rational>, b: &BTreeMap<K, Rational>) -> Rational {
    let zero = Rational::zero();
    let keys: std::collections::BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    let sum: Rational = keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&zero) - b.get(k).unwrap_or(&zero)).abs())
        .sum();
    sum / Rational::from_integer(2)
}

/// Total variation between the single-element marginals of two
/// distributions; meaningful for sampled runs where full query sets rarely
/// repeat.
pub fn marginal_total_variation(a: &QueryDistribution, b: &QueryDistribution) -> Rational {
    total_variation(&a.element_marginal(), &b.element_marginal())
}

/// `(S-1)^(k-1)` elements for every nonempty `k`-subset of the `K` messages.
pub fn expected_shape(messages: usize, sources: usize) -> Shape {
    let mut out = Vec::new();
    for k in 1..=messages {
        let count = (sources - 1).pow(k as u32 - 1);
        if count == 0 {
            continue;
        }
        out.extend((0..messages).combinations(k).map(|subset| (subset, count)));
    }
    Shape::from(out)
}

/// True iff every source's set has exactly the symmetric shape.
pub fn shape_symmetry_check(plan: &RetrievalPlan) -> bool {
    let expected = expected_shape(plan.config().messages(), plan.config().sources());
    plan.query_sets().iter().all(|set| canonical_shape(set) == expected)
}
