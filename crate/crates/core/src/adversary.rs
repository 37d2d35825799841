//! Brute-force index inference a database can run on the query sets it sees.
//!
//! Query elements are read as characteristic vectors over the `K * L` bit
//! index space, so `a ^ b` is the symmetric difference of the two term sets.
//! Whenever a single element, or the XOR of two elements, is a unit vector,
//! the attacker learns that one bit of that message was requested and bumps
//! the message's tally. The message with the largest tally is the guess.
//!
//! [`infer_single_user`] looks at one user's set in isolation;
//! [`infer_cross_user`] XORs each user's elements against every other user's
//! set, which is where side information pairs up with its carrier.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simnet::{self, RoutingPolicy, UserId};
use crate::types::{BitRef, MessageSet, QueryElement, SystemConfig};

/// Every unit index vector, mapped to its message.
#[derive(Clone, Debug)]
pub struct SingletonCatalog {
    messages: usize,
    block_length: usize,
    index: HashMap<BitRef, usize>,
}

impl SingletonCatalog {
    pub fn new(messages: usize, block_length: usize) -> Self {
        let index = (0..messages)
            .flat_map(|m| (0..block_length).map(move |p| (BitRef::new(m, p), m)))
            .collect();
        SingletonCatalog { messages, block_length, index }
    }

    pub fn for_config(config: &SystemConfig) -> Result<Self> {
        let l = crate::bounds::block_length(config.sources(), config.messages())?;
        Ok(Self::new(config.messages(), l))
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// The message owning `vector` if it is a unit vector.
    pub fn lookup(&self, vector: &[BitRef]) -> Option<usize> {
        match vector {
            [bit] => self.index.get(bit).copied(),
            _ => None,
        }
    }

    fn check(&self, elements: &[QueryElement]) -> Result<()> {
        for e in elements {
            if let Some(t) = e.terms().iter().find(|t| !self.index.contains_key(t)) {
                return Err(Error::Protocol(format!(
                    "{t} outside the catalog (K={}, L={})",
                    self.messages, self.block_length
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric difference of two sorted term lists, kept only while it could
/// still be a unit vector.
fn xor_unit(a: &[BitRef], b: &[BitRef]) -> Option<BitRef> {
    let (mut i, mut j) = (0, 0);
    let mut found = None;
    let mut keep = |bit: BitRef| -> bool {
        if found.is_some() {
            return false;
        }
        found = Some(bit);
        true
    };
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                if !keep(a[i]) {
                    return None;
                }
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if !keep(b[j]) {
                    return None;
                }
                j += 1;
            }
        }
    }
    for &bit in a[i..].iter().chain(&b[j..]) {
        if !keep(bit) {
            return None;
        }
    }
    found
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Message(usize),
    Tie,
}

/// Outcome of an attack.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    /// Identified-bit count per message.
    pub beta: Vec<u64>,
    pub verdict: Verdict,
    /// Every message attaining the maximum tally.
    pub tied_indices: Vec<usize>,
    /// XOR-and-lookup operations performed.
    pub comparisons: u64,
}

impl AttackReport {
    fn from_tally(beta: Vec<u64>, comparisons: u64) -> Self {
        let max = beta.iter().copied().max().unwrap_or(0);
        let tied_indices: Vec<usize> = beta
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == max).then_some(i))
            .collect();
        let verdict = match tied_indices.as_slice() {
            [only] => Verdict::Message(*only),
            _ => Verdict::Tie,
        };
        AttackReport { beta, verdict, tied_indices, comparisons }
    }

    pub fn is_tie(&self) -> bool {
        self.verdict == Verdict::Tie
    }

    /// True when every tally is equal.
    pub fn is_uniform(&self) -> bool {
        self.beta.windows(2).all(|w| w[0] == w[1])
    }
}

/// Single-user analysis: singletons count directly, every other element is
/// XORed against every element of the same set (itself included).
pub fn infer_single_user(query_set: &[QueryElement], catalog: &SingletonCatalog) -> Result<AttackReport> {
    catalog.check(query_set)?;
    let mut beta = vec![0u64; catalog.messages];
    let mut comparisons = 0u64;
    for alpha in query_set {
        if let Some(m) = catalog.lookup(alpha.terms()) {
            beta[m] += 1;
            continue;
        }
        for other in query_set {
            comparisons += 1;
            if let Some(m) = xor_unit(alpha.terms(), other.terms()).and_then(|b| catalog.lookup(&[b])) {
                beta[m] += 1;
            }
        }
    }
    Ok(AttackReport::from_tally(beta, comparisons))
}

/// Cross-user analysis. For each user, element and *other* user: singletons
/// count once per other user, anything else is XORed against every element
/// of that user's set.
pub fn infer_cross_user(
    sets_by_user: &[(UserId, Vec<QueryElement>)],
    catalog: &SingletonCatalog,
) -> Result<AttackReport> {
    for (_, set) in sets_by_user {
        catalog.check(set)?;
    }
    let mut beta = vec![0u64; catalog.messages];
    let mut comparisons = 0u64;
    for (u, (_, set)) in sets_by_user.iter().enumerate() {
        for alpha in set {
            let singleton = catalog.lookup(alpha.terms());
            for (_, other_set) in sets_by_user.iter().enumerate().filter(|(v, _)| *v != u).map(|(_, s)| s) {
                if let Some(m) = singleton {
                    beta[m] += 1;
                    continue;
                }
                for other in other_set {
                    comparisons += 1;
                    if let Some(m) = xor_unit(alpha.terms(), other.terms()).and_then(|b| catalog.lookup(&[b])) {
                        beta[m] += 1;
                    }
                }
            }
        }
    }
    Ok(AttackReport::from_tally(beta, comparisons))
}

/// One row of a cost sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub messages: usize,
    pub sources: usize,
    /// Total number of query elements the attacker analyzed.
    pub n: usize,
    pub mean_comparisons: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `ln(comparisons)` against `ln(n)`; `None` with
    /// fewer than two usable points.
    pub fitted_slope: Option<f64>,
}

/// Runs honest single-database transcripts for each `(K, S)` and records
/// what the cross-user attack costs.
pub fn complexity_sweep(sizes: &[(usize, usize)], trials: usize, seed: u64) -> Result<SweepReport> {
    if trials == 0 {
        return Err(Error::Config("at least one trial per size".into()));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for (row, &(k, s)) in sizes.iter().enumerate() {
        let config = SystemConfig::single_database(k, s)?;
        let catalog = SingletonCatalog::for_config(&config)?;
        let mut total = 0u64;
        let mut n = 0;
        for trial in 0..trials {
            let run_seed = seed ^ ((row as u64) << 32) ^ trial as u64;
            let messages = MessageSet::random(k, catalog.block_length(), &mut ChaCha8Rng::seed_from_u64(run_seed));
            let transcript = simnet::run_retrieval(&config, trial % k, &messages, run_seed, &RoutingPolicy::Uniform)?;
            let seen = simnet::observed_sets(&transcript, 0);
            n = seen.iter().map(|(_, set)| set.len()).sum();
            total += infer_cross_user(&seen, &catalog)?.comparisons;
        }
        points.push(SweepPoint { messages: k, sources: s, n, mean_comparisons: total as f64 / trials as f64 });
    }
    let fitted_slope = log_log_slope(&points);
    Ok(SweepReport { points, fitted_slope })
}

fn log_log_slope(points: &[SweepPoint]) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n > 0 && p.mean_comparisons > 0.0)
        .map(|p| ((p.n as f64).ln(), p.mean_comparisons.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let len = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / len;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
