//! Multi-user private information retrieval.
//!
//! A requester wants message `theta` out of `K` stored messages while hiding
//! `theta`. It talks to `N` replicated databases directly and to `U - 1`
//! helper users who forward queries, `S = N + U - 1` sources in total. The
//! [`scheme`] builds query plans whose rate `L / D` equals
//! `(1 + 1/S + ... + 1/S^(K-1))^-1`, [`simnet`] runs them end to end,
//! [`adversary`] implements the brute-force index-inference attacks a
//! database could mount, and [`privacylab`] checks that each source's view
//! is independent of `theta`.

pub mod adversary;
pub mod bounds;
pub mod error;
pub mod json;
pub mod privacylab;
pub mod rational;
pub mod scheme;
pub mod simnet;
pub mod types;

pub use bounds::{block_length, capacity, query_cardinality, rate_of, source_count};
pub use error::{Error, Result};
pub use rational::Rational;
pub use scheme::{
    canonical_shape, decode, evaluate_answers, generate_plan, AnswerSheet, DecodeLedger, LedgerEntry,
    RetrievalPlan, Shape,
};
pub use types::{BitRef, Bits, ElementId, MessageSet, QueryElement, SystemConfig};
