//! Core of a self-hosted statistical data commons.
//!
//! The crate is split along the data path:
//!
//! * [`kg`] holds places, variables and their relationships as triples and
//!   resolves entities by description.
//! * [`stat_store`] keeps observations with provenance and renders the
//!   download CSV.
//! * [`etl`] fetches declared sources, normalizes them into observations and
//!   ingests them incrementally behind a content-hash ledger.
//! * [`privacy`] measures disclosure risk of microdata and decides whether a
//!   table may be published.
//! * [`commons`] ties the stores together with on-disk persistence.

pub mod commons;
pub mod date;
pub mod etl;
pub mod kg;
pub mod privacy;
pub mod stat_store;

pub use commons::{Commons, CommonsError};
pub use date::ObsDate;
pub use kg::{EntityDescriptor, KnowledgeGraph, LiteralValue, NodeId, Object, PlaceLevel, Resolution, Triple};
pub use stat_store::{Observation, Provenance, Series, StatStore, StatisticalVariable};
