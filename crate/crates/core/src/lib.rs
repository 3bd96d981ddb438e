//! Content-centric forwarding over delay-tolerant networks.
//!
//! Nodes exchange interest and response bundles during opportunistic
//! contacts. Each node runs a small content-centric engine (pending
//! requester table, opportunistic cache, nonce-based duplicate suppression)
//! underneath a pluggable DTN routing strategy. The [`sim`] module drives
//! many such nodes through a deterministic discrete-event loop.

pub mod bundle;
pub mod config;
pub mod metrics;
pub mod mobility;
pub mod node;
pub mod routing;
pub mod sim;
pub mod sweep;
pub mod workload;
