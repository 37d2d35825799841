//! Domain types shared by every stage of the protocol.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};

/// Number of messages `K`, databases `N` and users `U`.
///
/// Sources are numbered `0..S` with `S = N + U - 1`. All indices in the
/// library (messages, positions, sources, databases, users) are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct SystemConfig {
    messages: usize,
    databases: usize,
    users: usize,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    #[serde(rename = "K")]
    messages: usize,
    #[serde(rename = "N")]
    databases: usize,
    #[serde(rename = "U")]
    users: usize,
}

impl SystemConfig {
    pub fn new(messages: usize, databases: usize, users: usize) -> Result<Self> {
        if messages == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        bounds::source_count(databases, users)?;
        Ok(SystemConfig { messages, databases, users })
    }

    /// A single-database configuration with `sources` users, the cheapest
    /// way to get a given `S`.
    pub fn single_database(messages: usize, sources: usize) -> Result<Self> {
        Self::new(messages, 1, sources)
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn databases(&self) -> usize {
        self.databases
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn helpers(&self) -> usize {
        self.users - 1
    }

    pub fn sources(&self) -> usize {
        self.databases + self.users - 1
    }

    pub fn check_message(&self, index: usize) -> Result<()> {
        if index < self.messages {
            Ok(())
        } else {
            Err(Error::MessageOutOfRange { index, messages: self.messages })
        }
    }
}

impl TryFrom<RawConfig> for SystemConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        SystemConfig::new(raw.messages, raw.databases, raw.users)
    }
}

impl From<SystemConfig> for RawConfig {
    fn from(c: SystemConfig) -> Self {
        RawConfig { messages: c.messages, databases: c.databases, users: c.users }
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={} N={} U={} S={}", self.messages, self.databases, self.users, self.sources())
    }
}

/// A fixed-length bit vector.
///
/// Hex form puts position 0 in the most significant bit of the first digit;
/// a trailing partial digit is zero-padded on the right.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, position: usize) -> Option<bool> {
        self.0.get(position).copied()
    }

    pub fn set(&mut self, position: usize, value: bool) {
        self.0[position] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Positions at which `self` and `other` differ. Both must have equal length.
    pub fn diff_positions(&self, other: &Bits) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }

    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|nibble| {
                let v = nibble
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Parses exactly `len` bits; padding bits in the final digit must be zero.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Bits(format!(
                "expected {} hex digits for {len} bits, found {}",
                len.div_ceil(4),
                hex.len()
            )));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::Bits(format!("invalid hex digit {c:?}")))?;
            bits.extend((0..4).map(|i| v & (1 << (3 - i)) != 0));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Bits("nonzero padding bits".into()));
        }
        bits.truncate(len);
        Ok(Bits(bits))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// The `K` stored messages, each `L` bits long.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMessageSet", into = "RawMessageSet")]
pub struct MessageSet {
    block_length: usize,
    messages: Vec<Bits>,
}

#[derive(Serialize, Deserialize)]
struct RawMessageSet {
    block_length: usize,
    messages: Vec<String>,
}

impl MessageSet {
    pub fn new(messages: Vec<Bits>) -> Result<Self> {
        let block_length = messages
            .first()
            .map(Bits::len)
            .ok_or_else(|| Error::Config("message set must hold at least one message".into()))?;
        if messages.iter().any(|m| m.len() != block_length) {
            return Err(Error::Config("all messages must have the same length".into()));
        }
        Ok(MessageSet { block_length, messages })
    }

    /// Draws `count` uniformly random messages of `block_length` bits.
    pub fn random<R: rand::Rng + ?Sized>(count: usize, block_length: usize, rng: &mut R) -> Self {
        let messages = (0..count)
            .map(|_| Bits((0..block_length).map(|_| rng.random()).collect()))
            .collect();
        MessageSet { block_length, messages }
    }

    pub fn from_hex<S: AsRef<str>>(hex: &[S], block_length: usize) -> Result<Self> {
        let messages = hex
            .iter()
            .map(|h| Bits::from_hex(h.as_ref(), block_length))
            .collect::<Result<Vec<_>>>()?;
        MessageSet::new(messages)
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn count(&self) -> usize {
        self.messages.len()
    }

    pub fn message(&self, index: usize) -> Option<&Bits> {
        self.messages.get(index)
    }

    pub fn messages(&self) -> &[Bits] {
        &self.messages
    }

    /// The stored bit a [`BitRef`] addresses.
    pub fn bit(&self, r: BitRef) -> Result<bool> {
        self.messages
            .get(r.message)
            .and_then(|m| m.get(r.position))
            .ok_or_else(|| {
                Error::Protocol(format!(
                    "{r} outside K={} L={}",
                    self.messages.len(),
                    self.block_length
                ))
            })
    }
}

impl TryFrom<RawMessageSet> for MessageSet {
    type Error = Error;

    fn try_from(raw: RawMessageSet) -> Result<Self> {
        MessageSet::from_hex(&raw.messages, raw.block_length)
    }
}

impl From<MessageSet> for RawMessageSet {
    fn from(m: MessageSet) -> Self {
        RawMessageSet {
            block_length: m.block_length,
            messages: m.messages.iter().map(Bits::to_hex).collect(),
        }
    }
}

/// One stored bit: message index and physical storage position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct BitRef {
    pub message: usize,
    pub position: usize,
}

impl BitRef {
    pub fn new(message: usize, position: usize) -> Self {
        BitRef { message, position }
    }
}

impl From<(usize, usize)> for BitRef {
    fn from((message, position): (usize, usize)) -> Self {
        BitRef { message, position }
    }
}

impl From<BitRef> for (usize, usize) {
    fn from(r: BitRef) -> Self {
        (r.message, r.position)
    }
}

impl fmt::Display for BitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}[{}]", self.message, self.position)
    }
}

/// Plan-local identifier of a query element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A k-sum: the XOR of one bit from each of `k` distinct messages.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct QueryElement {
    id: ElementId,
    terms: Vec<BitRef>,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    id: ElementId,
    round: usize,
    terms: Vec<BitRef>,
}

impl QueryElement {
    /// Terms are stored sorted; they must be nonempty and touch distinct messages.
    pub fn new(id: ElementId, mut terms: Vec<BitRef>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Protocol(format!("element {id} has no terms")));
        }
        terms.sort_unstable();
        if terms.windows(2).any(|w| w[0].message == w[1].message) {
            return Err(Error::Protocol(format!(
                "element {id} references a message twice"
            )));
        }
        Ok(QueryElement { id, terms })
    }

    pub fn id(&self) -> ElementId {
        self.id
    }

    pub fn terms(&self) -> &[BitRef] {
        &self.terms
    }

    /// Number of distinct messages touched.
    pub fn round(&self) -> usize {
        self.terms.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.terms.len() == 1
    }

    /// Sorted message indices touched by this element.
    pub fn message_set(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.message).collect()
    }

    pub fn term_for(&self, message: usize) -> Option<BitRef> {
        self.terms.iter().copied().find(|t| t.message == message)
    }
}

impl TryFrom<RawElement> for QueryElement {
    type Error = Error;

    fn try_from(raw: RawElement) -> Result<Self> {
        let e = QueryElement::new(raw.id, raw.terms)?;
        if e.round() != raw.round {
            return Err(Error::Protocol(format!(
                "element {} declares round {} but has {} terms",
                raw.id,
                raw.round,
                e.round()
            )));
        }
        Ok(e)
    }
}

impl From<QueryElement> for RawElement {
    fn from(e: QueryElement) -> Self {
        RawElement { id: e.id, round: e.terms.len(), terms: e.terms }
    }
}

impl fmt::Display for QueryElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_zero_counts() {
        assert!(SystemConfig::new(0, 1, 1).is_err());
        assert!(SystemConfig::new(1, 0, 1).is_err());
        assert!(SystemConfig::new(1, 1, 0).is_err());
        let c = SystemConfig::new(2, 1, 2).unwrap();
        assert_eq!(c.sources(), 2);
    }

    #[test]
    fn config_json_uses_upper_case_keys() {
        let c = SystemConfig::new(3, 2, 2).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"K":3,"N":2,"U":2}"#);
        assert!(serde_json::from_str::<SystemConfig>(r#"{"K":0,"N":1,"U":1}"#).is_err());
    }

    #[test]
    fn hex_puts_first_position_in_msb() {
        let b = Bits::from_bools(vec![true, false, true, true]);
        assert_eq!(b.to_hex(), "b");
        let b = Bits::from_bools(vec![true, false, false, false, false, true]);
        assert_eq!(b.to_hex(), "84");
        assert_eq!(Bits::from_hex("84", 6).unwrap(), b);
        assert!(Bits::from_hex("85", 6).is_err());
        assert!(Bits::from_hex("8", 6).is_err());
        assert!(Bits::from_hex("zz", 8).is_err());
    }

    #[test]
    fn element_rejects_repeated_message() {
        let id = ElementId(0);
        assert!(QueryElement::new(id, vec![]).is_err());
        assert!(QueryElement::new(id, vec![BitRef::new(0, 1), BitRef::new(0, 2)]).is_err());
        let e = QueryElement::new(id, vec![BitRef::new(1, 0), BitRef::new(0, 3)]).unwrap();
        assert_eq!(e.round(), 2);
        assert_eq!(e.message_set(), vec![0, 1]);
    }

    #[test]
    fn element_json_shape() {
        let e = QueryElement::new(ElementId(4), vec![BitRef::new(0, 2), BitRef::new(1, 1)]).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"id":4,"round":2,"terms":[[0,2],[1,1]]}"#);
        let bad = r#"{"id":4,"round":3,"terms":[[0,2],[1,1]]}"#;
        assert!(serde_json::from_str::<QueryElement>(bad).is_err());
    }

    #[test]
    fn message_set_bit_lookup() {
        let m = MessageSet::from_hex(&["a", "4"], 4).unwrap();
        assert!(m.bit(BitRef::new(0, 0)).unwrap());
        assert!(!m.bit(BitRef::new(0, 1)).unwrap());
        assert!(m.bit(BitRef::new(1, 1)).unwrap());
        assert!(m.bit(BitRef::new(2, 0)).is_err());
        assert!(m.bit(BitRef::new(0, 4)).is_err());
    }
}
