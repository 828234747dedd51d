//! Single-port execution: multi-port protocols whose rounds are spread over
//! windows of sp-rounds in which every node sends at most one message and
//! polls at most one port.
//!
//! Each link set used by a protocol round is edge-colored; in the k-th
//! sp-round of a window a node sends to, and polls, its partner along the
//! color-k edge. Both endpoints of an edge agree on the sp-round, so no
//! message is lost to a mismatched poll. Local computation runs at the end
//! of the window's last sp-round.

mod adapter;
mod coloring;
mod linear;
mod lower_bound;

use thiserror::Error;

use crate::protocols_crash::ConfigError;
use crate::simnet::SimError;

pub use adapter::{MpProtocol, SinglePort, SpSchedule, Window};
pub use coloring::{edge_coloring, EdgeColoring};
pub use linear::{linear_consensus_plan, singleport_gossip, LinearPlan, SpGossip};
pub use lower_bound::{gossip_lower_bound_experiment, influence_profile, InfluenceRow, LowerBoundReport};

#[derive(Debug, Error)]
pub enum SpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
