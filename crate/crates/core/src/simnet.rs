//! In-process simulation of one retrieval among the requester, its helpers
//! and the databases.
//!
//! Parties exchange envelopes through a single FIFO queue, so a run is a
//! deterministic sequential event loop: the requester sends one query set per
//! source, helpers forward theirs verbatim to the database they picked,
//! databases answer whoever presented the set, helpers relay answers back,
//! and the requester decodes.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scheme::{self, AnswerSheet, RetrievalPlan};
use crate::types::{Bits, MessageSet, QueryElement, SystemConfig};

/// Identity a database sees on an incoming connection. `0` is the requester,
/// helper `h` is `h + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl UserId {
    pub const REQUESTER: UserId = UserId(0);

    pub fn helper(index: usize) -> UserId {
        UserId(index as u32 + 1)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "user{}", self.0)
    }
}

/// How one source's query set reaches a database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    Direct { database: usize },
    ViaHelper { helper: usize, database: usize },
}

impl Channel {
    pub fn database(&self) -> usize {
        match *self {
            Channel::Direct { database } | Channel::ViaHelper { database, .. } => database,
        }
    }

    pub fn presenter(&self) -> UserId {
        match *self {
            Channel::Direct { .. } => UserId::REQUESTER,
            Channel::ViaHelper { helper, .. } => UserId::helper(helper),
        }
    }
}

/// One channel per source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoutingTable {
    channels: Vec<Channel>,
}

impl RoutingTable {
    /// Builds a table and checks it against `config`: `N` direct channels,
    /// one per database, and `U - 1` helper channels, one per helper.
    pub fn new(config: &SystemConfig, channels: Vec<Channel>) -> Result<Self> {
        let table = RoutingTable { channels };
        table.validate(config)?;
        Ok(table)
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        let (n, helpers) = (config.databases(), config.helpers());
        if self.channels.len() != config.sources() {
            return Err(Error::Routing(format!(
                "{} channels for {} sources",
                self.channels.len(),
                config.sources()
            )));
        }
        let mut direct = vec![false; n];
        let mut helper_seen = vec![false; helpers];
        for c in &self.channels {
            if c.database() >= n {
                return Err(Error::Routing(format!("database {} does not exist", c.database())));
            }
            let slot = match *c {
                Channel::Direct { database } => &mut direct[database],
                Channel::ViaHelper { helper, .. } => helper_seen
                    .get_mut(helper)
                    .ok_or_else(|| Error::Routing(format!("helper {helper} does not exist")))?,
            };
            if std::mem::replace(slot, true) {
                return Err(Error::Routing(format!("channel {c:?} duplicated")));
            }
        }
        if direct.iter().any(|d| !d) {
            return Err(Error::Routing("every database needs exactly one direct channel".into()));
        }
        Ok(())
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, source: usize) -> Channel {
        self.channels[source]
    }

    /// Sources `0..N` go straight to their database; each helper picks a
    /// database uniformly at random.
    pub fn uniform<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        let n = config.databases();
        let channels = (0..config.sources())
            .map(|s| {
                if s < n {
                    Channel::Direct { database: s }
                } else {
                    Channel::ViaHelper { helper: s - n, database: rng.random_range(0..n) }
                }
            })
            .collect();
        RoutingTable { channels }
    }

    /// Every helper forwards to database `target`.
    pub fn all_helpers_to(config: &SystemConfig, target: usize) -> Result<Self> {
        let n = config.databases();
        let channels = (0..config.sources())
            .map(|s| {
                if s < n {
                    Channel::Direct { database: s }
                } else {
                    Channel::ViaHelper { helper: s - n, database: target }
                }
            })
            .collect();
        RoutingTable::new(config, channels)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoutingPolicy {
    Uniform,
    Fixed(RoutingTable),
}

/// A query set as a database received it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub user: UserId,
    pub source: usize,
    pub elements: Vec<QueryElement>,
}

/// Complete record of one protocol run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTranscript", into = "RawTranscript")]
pub struct Transcript {
    config: SystemConfig,
    theta: usize,
    block_length: usize,
    routing: RoutingTable,
    deliveries: Vec<Vec<Delivery>>,
    sheets: Vec<AnswerSheet>,
    downloaded_bits: usize,
    recovered: Bits,
    rate: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawTranscript {
    config: SystemConfig,
    theta: usize,
    block_length: usize,
    routing: RoutingTable,
    deliveries: Vec<Vec<Delivery>>,
    sheets: Vec<AnswerSheet>,
    downloaded_bits: usize,
    recovered: String,
    rate: Rational,
}

impl TryFrom<RawTranscript> for Transcript {
    type Error = Error;

    fn try_from(raw: RawTranscript) -> Result<Self> {
        raw.config.check_message(raw.theta)?;
        raw.routing.validate(&raw.config)?;
        let t = Transcript {
            recovered: Bits::from_hex(&raw.recovered, raw.block_length)?,
            config: raw.config,
            theta: raw.theta,
            block_length: raw.block_length,
            routing: raw.routing,
            deliveries: raw.deliveries,
            sheets: raw.sheets,
            downloaded_bits: raw.downloaded_bits,
            rate: raw.rate,
        };
        t.check_accounting()?;
        Ok(t)
    }
}

impl From<Transcript> for RawTranscript {
    fn from(t: Transcript) -> Self {
        RawTranscript {
            config: t.config,
            theta: t.theta,
            block_length: t.block_length,
            routing: t.routing,
            deliveries: t.deliveries,
            sheets: t.sheets,
            downloaded_bits: t.downloaded_bits,
            recovered: t.recovered.to_hex(),
            rate: t.rate,
        }
    }
}

impl Transcript {
    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn routing(&self) -> &RoutingTable {
        &self.routing
    }

    /// Per database, the sets it received in arrival order.
    pub fn deliveries(&self) -> &[Vec<Delivery>] {
        &self.deliveries
    }

    pub fn sheets(&self) -> &[AnswerSheet] {
        &self.sheets
    }

    /// `D`: answer bits only, uploads are not counted.
    pub fn downloaded_bits(&self) -> usize {
        self.downloaded_bits
    }

    pub fn recovered(&self) -> &Bits {
        &self.recovered
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    fn check_accounting(&self) -> Result<()> {
        let delivered: usize = self.deliveries.iter().flatten().map(|d| d.elements.len()).sum();
        let answered: usize = self.sheets.iter().map(|s| s.bits.len()).sum();
        if delivered != self.downloaded_bits || answered != self.downloaded_bits {
            return Err(Error::Invariant(format!(
                "D = {} but {delivered} elements delivered and {answered} answered",
                self.downloaded_bits
            )));
        }
        if self.deliveries.len() != self.config.databases() {
            return Err(Error::Invariant("one delivery list per database expected".into()));
        }
        let rate = bounds::rate_of(self.block_length as u64, self.downloaded_bits as u64)?;
        if rate != self.rate {
            return Err(Error::Invariant(format!("rate {} but L/D = {rate}", self.rate)));
        }
        if self.recovered.len() != self.block_length {
            return Err(Error::Invariant("recovered message has the wrong length".into()));
        }
        Ok(())
    }
}

/// The sets database `database` received, attributed to the presenting user.
/// Empty when the database does not exist.
pub fn observed_sets(transcript: &Transcript, database: usize) -> Vec<(UserId, Vec<QueryElement>)> {
    transcript
        .deliveries
        .get(database)
        .map(|ds| ds.iter().map(|d| (d.user, d.elements.clone())).collect())
        .unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Party {
    Requester,
    Helper(usize),
    Database(usize),
}

#[derive(Debug)]
enum Payload {
    Query { source: usize, elements: Vec<QueryElement> },
    Answer(AnswerSheet),
}

#[derive(Debug)]
struct Envelope {
    from: Party,
    to: Party,
    payload: Payload,
}

/// Runs one retrieval end to end under `seed`.
pub fn run_retrieval(
    config: &SystemConfig,
    theta: usize,
    messages: &MessageSet,
    seed: u64,
    policy: &RoutingPolicy,
) -> Result<Transcript> {
    run_retrieval_with_plan(config, theta, messages, seed, policy).map(|(_, t)| t)
}

/// Like [`run_retrieval`], also returning the requester's private plan.
pub fn run_retrieval_with_plan(
    config: &SystemConfig,
    theta: usize,
    messages: &MessageSet,
    seed: u64,
    policy: &RoutingPolicy,
) -> Result<(RetrievalPlan, Transcript)> {
    let l = bounds::block_length(config.sources(), config.messages())?;
    if messages.count() != config.messages() || messages.block_length() != l {
        return Err(Error::Config(format!(
            "expected {} messages of {l} bits, got {} of {}",
            config.messages(),
            messages.count(),
            messages.block_length()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = scheme::generate_plan(config, theta, &mut rng)?;
    let routing = match policy {
        RoutingPolicy::Uniform => RoutingTable::uniform(config, &mut rng),
        RoutingPolicy::Fixed(table) => {
            table.validate(config)?;
            table.clone()
        }
    };

    let mut queue = VecDeque::new();
    for (source, elements) in plan.query_sets().iter().enumerate() {
        let to = match routing.channel(source) {
            Channel::Direct { database } => Party::Database(database),
            Channel::ViaHelper { helper, .. } => Party::Helper(helper),
        };
        queue.push_back(Envelope {
            from: Party::Requester,
            to,
            payload: Payload::Query { source, elements: elements.clone() },
        });
    }

    let mut deliveries: Vec<Vec<Delivery>> = vec![Vec::new(); config.databases()];
    let mut sheets: Vec<Option<AnswerSheet>> = vec![None; config.sources()];

    while let Some(Envelope { from, to, payload }) = queue.pop_front() {
        match (to, payload) {
            (Party::Helper(h), Payload::Query { source, elements }) => {
                let database = routing.channel(source).database();
                queue.push_back(Envelope {
                    from: Party::Helper(h),
                    to: Party::Database(database),
                    payload: Payload::Query { source, elements },
                });
            }
            (Party::Helper(h), Payload::Answer(sheet)) => {
                queue.push_back(Envelope { from: Party::Helper(h), to: Party::Requester, payload: Payload::Answer(sheet) });
            }
            (Party::Database(n), Payload::Query { source, elements }) => {
                let user = match from {
                    Party::Requester => UserId::REQUESTER,
                    Party::Helper(h) => UserId::helper(h),
                    Party::Database(_) => return Err(Error::Protocol("databases do not query each other".into())),
                };
                let sheet = scheme::evaluate_answers(messages, source, &elements)?;
                deliveries[n].push(Delivery { user, source, elements });
                queue.push_back(Envelope { from: to, to: from, payload: Payload::Answer(sheet) });
            }
            (Party::Requester, Payload::Answer(sheet)) => {
                let slot = sheets
                    .get_mut(sheet.source)
                    .ok_or_else(|| Error::Protocol(format!("answer for unknown source {}", sheet.source)))?;
                if slot.replace(sheet).is_some() {
                    return Err(Error::Protocol("source answered twice".into()));
                }
            }
            (to, payload) => {
                return Err(Error::Protocol(format!("{to:?} cannot handle {payload:?}")));
            }
        }
    }

    let sheets = sheets
        .into_iter()
        .enumerate()
        .map(|(s, sh)| sh.ok_or_else(|| Error::Incomplete(format!("source {s} never answered"))))
        .collect::<Result<Vec<_>>>()?;
    let recovered = scheme::decode(&plan, &sheets)?;
    let downloaded_bits: usize = sheets.iter().map(|s| s.bits.len()).sum();
    let rate = bounds::rate_of(l as u64, downloaded_bits as u64)?;

    let transcript = Transcript {
        config: *config,
        theta,
        block_length: l,
        routing,
        deliveries,
        sheets,
        downloaded_bits,
        recovered,
        rate,
    };
    transcript.check_accounting()?;
    Ok((plan, transcript))
}
