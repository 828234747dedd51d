//! Crash-tolerant protocols: local probing, almost-everywhere agreement,
//! spreading a common value, consensus for few and many crashes, gossip and
//! checkpointing.
//!
//! All protocols are scheduled by global round arithmetic that every node can
//! compute from `(n, t)`, so parts and phases need no synchronization
//! messages.

mod config;
mod few_crashes;
mod gossip;
mod lanes;
mod many_crashes;
mod probe;

pub use config::{ConfigError, GraphMode, ProtocolConfig};
pub use few_crashes::{
    aea_programs, few_crashes_programs, few_crashes_with_plan, scv_programs, scv_flood_rounds, FcMsg, FcPlan, FewCrashes, Sized, Stages,
};
pub use gossip::{
    checkpointing_programs, checkpointing_with_plans, gossip_programs, gossip_with_plan,
    Checkpointing, CheckpointMsg, ExtantSet, Gossip, GossipMsg, GossipPayload, GossipPlan,
};
pub use lanes::{LaneBits, LaneValues};
pub use many_crashes::{many_crashes_programs, many_crashes_with_plan, ManyCrashes, McMsg, McPlan};
pub use probe::{local_probe_programs, ProbeNode, ProbeState};

/// Little nodes are `0..5t`; node `j` is related to little node `j mod 5t`.
pub fn little_count(t: usize) -> usize {
    5 * t
}

pub fn is_little(node: usize, t: usize) -> bool {
    node < little_count(t)
}

/// Non-little nodes related to little node `i`, ascending.
pub fn related_nodes(i: usize, n: usize, t: usize) -> impl Iterator<Item = usize> {
    let m = little_count(t);
    (i + m..n).step_by(m.max(1))
}

/// The link set a round's messages travel on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Links {
    Little,
    Related,
    Flood,
    /// Every node to every little node.
    ToLittle,
    Phase(usize),
    Idle,
}
