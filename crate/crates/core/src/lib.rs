//! Prioritized maximal scheduling for multi-hop wireless networks.
//!
//! The crate models pairwise interference between links as an undirected
//! conflict graph and studies schedulers that pick a maximal independent
//! set each slot by greedily admitting links in priority order. It
//! provides:
//!
//! * exact combinatorial primitives on interference graphs ([`graph`]),
//! * geometric network generation and interference-model construction
//!   ([`geometry`]),
//! * bounded arrival processes with closed-form log moment generating
//!   functions ([`traffic`]),
//! * a slotted queueing simulator with fixed, randomized, longest-queue
//!   -first and max-weight priorities ([`engine`]),
//! * stability-region tests and priority synthesis, including randomized
//!   priorities obtained from convex decompositions over maximal
//!   independent sets ([`synth`]),
//! * queue-overflow exponents in the large deviations regime and
//!   delay-aware priority assignment ([`delay`]).
//!
//! Link indices are `0..n` throughout the API; all text formats emitted or
//! parsed by this crate use 1-based link ids.

pub mod delay;
pub mod engine;
pub mod geometry;
pub mod graph;
pub mod synth;
pub mod traffic;

mod simplex;
pub(crate) mod streams;

pub use engine::{Priority, PriorityDistribution, PrioritySpec, RunStats, SimState, Simulation};
pub use graph::{IndependentSet, InterferenceGraph, LinkId, RemovalSequence};
pub use synth::Decomposition;
pub use traffic::ArrivalModel;
