//! Black-hole search by mobile agents on dynamic graphs in which at most one
//! edge is missing per round and every snapshot stays connected.
//!
//! [`tvg`] holds the port-labeled footprint and snapshot legality, [`engine`]
//! the synchronous round loop, [`dfs`] and [`explore`] the traversal
//! building blocks, [`onehop`] and [`global`] the two search algorithms,
//! [`adversary`] the edge-removal strategies and lower-bound constructions,
//! and [`harness`] scenarios, generators, batch runs and trace replay.

pub mod adversary;
pub mod dfs;
pub mod engine;
pub mod explore;
pub mod global;
pub mod harness;
pub mod onehop;
pub mod tvg;
