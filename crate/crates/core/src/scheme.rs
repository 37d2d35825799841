//! Capacity-achieving query plans over `S` sources.
//!
//! A plan is built in rounds. Round 1 asks every source for one fresh bit of
//! every message. In round `k`, each source gets, for every `k`-subset of
//! messages, `(S-1)^(k-1)` elements: subsets containing the desired message
//! pair a fresh desired bit with a pure undesired `(k-1)`-sum that was asked
//! at some other source (whose answer is then side information), and subsets
//! without it ask entirely fresh bits, which become side information for the
//! next round.
//!
//! Bits are addressed by physical position. The requester maps its `i`-th
//! fresh bit of message `m` to position `permutations[m][i]`, so sources only
//! ever see uniformly scattered positions.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::types::{BitRef, Bits, ElementId, MessageSet, QueryElement, SystemConfig};

/// Largest block length a plan may use.
pub const MAX_BLOCK_LENGTH: usize = 1_000_000;

/// How one desired bit is recovered: the carrier's answer XOR every
/// side-information answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub carrier: ElementId,
    pub side_info: Vec<ElementId>,
}

/// One entry per desired fresh bit, indexed by fresh-bit number.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecodeLedger {
    entries: Vec<LedgerEntry>,
}

impl DecodeLedger {
    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fresh-bit numbers whose recovery uses `id`.
    pub fn entries_referencing(&self, id: ElementId) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.carrier == id || e.side_info.contains(&id))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Answers one source returned, keyed by element id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSheet {
    pub source: usize,
    pub bits: BTreeMap<ElementId, bool>,
}

/// Everything the requester needs to query and decode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan")]
pub struct RetrievalPlan {
    config: SystemConfig,
    theta: usize,
    permutations: Vec<Vec<usize>>,
    query_sets: Vec<Vec<QueryElement>>,
    ledger: DecodeLedger,
    fresh_consumed: Vec<usize>,
}

#[derive(Deserialize)]
struct RawPlan {
    config: SystemConfig,
    theta: usize,
    permutations: Vec<Vec<usize>>,
    query_sets: Vec<Vec<QueryElement>>,
    ledger: DecodeLedger,
    fresh_consumed: Vec<usize>,
}

impl TryFrom<RawPlan> for RetrievalPlan {
    type Error = Error;

    fn try_from(raw: RawPlan) -> Result<Self> {
        let plan = RetrievalPlan {
            config: raw.config,
            theta: raw.theta,
            permutations: raw.permutations,
            query_sets: raw.query_sets,
            ledger: raw.ledger,
            fresh_consumed: raw.fresh_consumed,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl RetrievalPlan {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn block_length(&self) -> usize {
        self.permutations.first().map_or(0, Vec::len)
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn query_sets(&self) -> &[Vec<QueryElement>] {
        &self.query_sets
    }

    pub fn query_set(&self, source: usize) -> Option<&[QueryElement]> {
        self.query_sets.get(source).map(Vec::as_slice)
    }

    pub fn ledger(&self) -> &DecodeLedger {
        &self.ledger
    }

    /// Fresh bits consumed per message.
    pub fn fresh_consumed(&self) -> &[usize] {
        &self.fresh_consumed
    }

    /// `D`: one answer bit per element.
    pub fn downloaded_bits(&self) -> usize {
        self.query_sets.iter().map(Vec::len).sum()
    }

    #[cfg(test)]
    pub(crate) fn query_sets_mut(&mut self) -> &mut Vec<Vec<QueryElement>> {
        &mut self.query_sets
    }

    /// Checks every structural invariant of a well-formed plan.
    pub fn validate(&self) -> Result<()> {
        let k = self.config.messages();
        let s = self.config.sources();
        self.config.check_message(self.theta)?;
        let l = checked_block_length(&self.config)?;
        let broken = |msg: String| Err(Error::Invariant(msg));

        if self.permutations.len() != k || self.permutations.iter().any(|p| !is_permutation(p, l)) {
            return broken("permutations must be K permutations of [L]".into());
        }
        if self.query_sets.len() != s {
            return broken(format!("expected {s} query sets, found {}", self.query_sets.len()));
        }
        if self.fresh_consumed.len() != k || self.fresh_consumed[self.theta] != l {
            return broken("every desired fresh bit must be consumed exactly once".into());
        }

        let expected = bounds::query_cardinality(s, k);
        let mut by_id = HashMap::new();
        for (src, set) in self.query_sets.iter().enumerate() {
            if num_bigint::BigUint::from(set.len()) != expected {
                return broken(format!("source {src} holds {} elements, expected {expected}", set.len()));
            }
            for shape_count in canonical_shape(set).iter() {
                let want = (s - 1).pow(shape_count.0.len() as u32 - 1);
                if shape_count.1 != want {
                    return broken(format!(
                        "source {src} has {} elements over {:?}, expected {want}",
                        shape_count.1, shape_count.0
                    ));
                }
            }
            for e in set {
                if e.terms().iter().any(|t| t.message >= k || t.position >= l) {
                    return broken(format!("element {} addresses bits outside the store", e.id()));
                }
                if by_id.insert(e.id(), (src, e)).is_some() {
                    return broken(format!("duplicate element id {}", e.id()));
                }
            }
        }

        if self.ledger.len() != l {
            return broken(format!("ledger has {} entries, expected {l}", self.ledger.len()));
        }
        let mut carriers = std::collections::HashSet::new();
        for (i, entry) in self.ledger.entries.iter().enumerate() {
            let Some(&(carrier_src, carrier)) = by_id.get(&entry.carrier) else {
                return broken(format!("ledger entry {i} names unknown carrier {}", entry.carrier));
            };
            if !carriers.insert(entry.carrier) {
                return broken(format!("carrier {} used twice", entry.carrier));
            }
            let desired = BitRef::new(self.theta, self.permutations[self.theta][i]);
            if carrier.term_for(self.theta) != Some(desired) {
                return broken(format!("carrier {} does not hold fresh bit {i}", entry.carrier));
            }
            match (carrier.round(), entry.side_info.as_slice()) {
                (1, []) => {}
                (1, _) => return broken(format!("singleton carrier {} has side info", entry.carrier)),
                (_, [side]) => {
                    let Some(&(side_src, side_el)) = by_id.get(side) else {
                        return broken(format!("ledger entry {i} names unknown side info {side}"));
                    };
                    let rest: Vec<BitRef> =
                        carrier.terms().iter().copied().filter(|t| *t != desired).collect();
                    if side_src == carrier_src || side_el.terms() != rest.as_slice() {
                        return broken(format!("side info {side} does not cancel carrier {}", entry.carrier));
                    }
                }
                _ => return broken(format!("carrier {} needs exactly one side-info element", entry.carrier)),
            }
        }

        let mut seen = vec![false; l];
        for e in by_id.values().map(|(_, e)| e) {
            if let Some(t) = e.term_for(self.theta) {
                if std::mem::replace(&mut seen[t.position], true) {
                    return broken(format!("desired position {} referenced twice", t.position));
                }
            }
        }
        Ok(())
    }
}

fn is_permutation(p: &[usize], len: usize) -> bool {
    if p.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    p.iter().all(|&x| x < len && !std::mem::replace(&mut seen[x], true))
}

fn checked_block_length(config: &SystemConfig) -> Result<usize> {
    let (s, k) = (config.sources(), config.messages());
    let l = bounds::block_length(s, k)?;
    if l > MAX_BLOCK_LENGTH {
        return Err(Error::TooLarge { length: l as u128, max: MAX_BLOCK_LENGTH });
    }
    Ok(l)
}

/// Draws fresh permutations and a within-source ordering from `rng` and
/// builds the plan for desired message `theta`.
pub fn generate_plan<R: Rng + ?Sized>(
    config: &SystemConfig,
    theta: usize,
    rng: &mut R,
) -> Result<RetrievalPlan> {
    config.check_message(theta)?;
    let l = checked_block_length(config)?;
    let permutations = (0..config.messages())
        .map(|_| {
            let mut p: Vec<usize> = (0..l).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let mut plan = build_plan(config, theta, permutations)?;
    for set in &mut plan.query_sets {
        set.shuffle(rng);
    }
    Ok(plan)
}

/// Builds the plan for explicit permutations, leaving elements in generation
/// order. Used for exhaustive enumeration and reproducible examples.
pub fn generate_plan_with_permutations(
    config: &SystemConfig,
    theta: usize,
    permutations: Vec<Vec<usize>>,
) -> Result<RetrievalPlan> {
    config.check_message(theta)?;
    let l = checked_block_length(config)?;
    if permutations.len() != config.messages() || permutations.iter().any(|p| !is_permutation(p, l)) {
        return Err(Error::Config(format!(
            "need {} permutations of 0..{l}",
            config.messages()
        )));
    }
    build_plan(config, theta, permutations)
}

/// A pure undesired sum available as side information.
struct PureSum {
    id: ElementId,
    terms: Vec<BitRef>,
}

struct Builder<'a> {
    permutations: &'a [Vec<usize>],
    fresh: Vec<usize>,
    next_id: u32,
    sets: Vec<Vec<QueryElement>>,
}

impl Builder<'_> {
    fn fresh_bit(&mut self, message: usize) -> Result<BitRef> {
        let i = self.fresh[message];
        let position = *self.permutations[message]
            .get(i)
            .ok_or_else(|| Error::Invariant(format!("message {message} ran out of fresh bits")))?;
        self.fresh[message] += 1;
        Ok(BitRef::new(message, position))
    }

    fn push(&mut self, source: usize, terms: Vec<BitRef>) -> Result<ElementId> {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        self.sets[source].push(QueryElement::new(id, terms)?);
        Ok(id)
    }
}

fn build_plan(config: &SystemConfig, theta: usize, permutations: Vec<Vec<usize>>) -> Result<RetrievalPlan> {
    let k = config.messages();
    let s = config.sources();
    let l = permutations[0].len();

    let mut b = Builder {
        permutations: &permutations,
        fresh: vec![0; k],
        next_id: 0,
        sets: vec![Vec::new(); s],
    };
    let mut ledger: Vec<Option<LedgerEntry>> = vec![None; l];
    let mut record = |desired_index: usize, carrier: ElementId, side_info: Vec<ElementId>| {
        ledger[desired_index] = Some(LedgerEntry { carrier, side_info });
    };

    // pure[source][message subset] = pure sums generated in the previous round
    let mut pure: Vec<BTreeMap<Vec<usize>, Vec<PureSum>>> = (0..s).map(|_| BTreeMap::new()).collect();

    for (src, pure_src) in pure.iter_mut().enumerate() {
        for m in 0..k {
            let index = b.fresh[m];
            let bit = b.fresh_bit(m)?;
            let id = b.push(src, vec![bit])?;
            if m == theta {
                record(index, id, Vec::new());
            } else {
                pure_src.entry(vec![m]).or_default().push(PureSum { id, terms: vec![bit] });
            }
        }
    }

    for round in 2..=k {
        if s == 1 {
            break;
        }
        let instances = (s - 1).pow(round as u32 - 1);
        let mut next: Vec<BTreeMap<Vec<usize>, Vec<PureSum>>> = (0..s).map(|_| BTreeMap::new()).collect();
        for (src, next_src) in next.iter_mut().enumerate() {
            for subset in (0..k).combinations(round) {
                if subset.contains(&theta) {
                    let undesired: Vec<usize> = subset.iter().copied().filter(|&m| m != theta).collect();
                    let mut made = 0;
                    for other in (0..s).filter(|&o| o != src) {
                        for side in pure[other].get(&undesired).into_iter().flatten() {
                            let index = b.fresh[theta];
                            let mut terms = side.terms.clone();
                            terms.push(b.fresh_bit(theta)?);
                            let id = b.push(src, terms)?;
                            record(index, id, vec![side.id]);
                            made += 1;
                        }
                    }
                    if made != instances {
                        return Err(Error::Invariant(format!(
                            "round {round}: source {src} paired {made} side sums for {subset:?}, expected {instances}"
                        )));
                    }
                } else {
                    for _ in 0..instances {
                        let terms = subset.iter().map(|&m| b.fresh_bit(m)).collect::<Result<Vec<_>>>()?;
                        let id = b.push(src, terms.clone())?;
                        next_src.entry(subset.clone()).or_default().push(PureSum { id, terms });
                    }
                }
            }
        }
        pure = next;
    }

    let ledger = ledger
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| Error::Invariant(format!("desired fresh bit {i} never requested"))))
        .collect::<Result<Vec<_>>>()?;

    let fresh_consumed = b.fresh;
    let query_sets = b.sets;
    Ok(RetrievalPlan {
        config: *config,
        theta,
        permutations,
        query_sets,
        ledger: DecodeLedger { entries: ledger },
        fresh_consumed,
    })
}

/// Answers a source's query set: each bit is the XOR of the addressed stored bits.
pub fn evaluate_answers(messages: &MessageSet, source: usize, elements: &[QueryElement]) -> Result<AnswerSheet> {
    let mut bits = BTreeMap::new();
    for e in elements {
        let mut acc = false;
        for &t in e.terms() {
            acc ^= messages.bit(t)?;
        }
        bits.insert(e.id(), acc);
    }
    Ok(AnswerSheet { source, bits })
}

/// Recovers the desired message from one answer sheet per source.
pub fn decode(plan: &RetrievalPlan, sheets: &[AnswerSheet]) -> Result<Bits> {
    let s = plan.config.sources();
    let mut answers: HashMap<ElementId, bool> = HashMap::with_capacity(plan.downloaded_bits());
    for src in 0..s {
        let sheet = sheets
            .iter()
            .find(|sh| sh.source == src)
            .ok_or_else(|| Error::Incomplete(format!("no answer sheet from source {src}")))?;
        for e in &plan.query_sets[src] {
            let bit = sheet
                .bits
                .get(&e.id())
                .ok_or_else(|| Error::Incomplete(format!("source {src} did not answer element {}", e.id())))?;
            answers.insert(e.id(), *bit);
        }
    }

    let perm = &plan.permutations[plan.theta];
    let mut out = Bits::zeros(perm.len());
    for (i, entry) in plan.ledger.entries.iter().enumerate() {
        let lookup = |id: &ElementId| {
            answers
                .get(id)
                .copied()
                .ok_or_else(|| Error::Invariant(format!("ledger references unknown element {id}")))
        };
        let mut bit = lookup(&entry.carrier)?;
        for side in &entry.side_info {
            bit ^= lookup(side)?;
        }
        out.set(perm[i], bit);
    }
    Ok(out)
}

/// Count of elements per message subset; positions, order and ids are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<(Vec<usize>, usize)>", into = "Vec<(Vec<usize>, usize)>")]
pub struct Shape(BTreeMap<Vec<usize>, usize>);

impl Shape {
    pub fn count(&self, subset: &[usize]) -> usize {
        self.0.get(subset).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, usize)> {
        self.0.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<(Vec<usize>, usize)>> for Shape {
    fn from(v: Vec<(Vec<usize>, usize)>) -> Self {
        Shape(v.into_iter().collect())
    }
}

impl From<Shape> for Vec<(Vec<usize>, usize)> {
    fn from(s: Shape) -> Self {
        s.0.into_iter().collect()
    }
}

pub fn canonical_shape(elements: &[QueryElement]) -> Shape {
    let mut counts = BTreeMap::new();
    for e in elements {
        *counts.entry(e.message_set()).or_insert(0) += 1;
    }
    Shape(counts)
}
