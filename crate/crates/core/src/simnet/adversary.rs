//! Fault schedules: static and adaptive crash adversaries and Byzantine
//! assignments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{NodeId, Round, SimError};

/// Adaptive crash strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum CrashStrategy {
    /// Each round, every running node crashes with probability `rate` while budget remains.
    UniformRandom { rate: f64 },
    /// All `t` crashes in rounds `1..=max(1, horizon / 10)`.
    FrontLoaded { horizon: Round },
    /// All `t` crashes in rounds `[3 horizon / 4, horizon]`.
    BackLoaded { horizon: Round },
    /// Crashes only nodes with id `< little`, spread over rounds `1..=horizon`.
    TargetLittleNodes { little: usize, horizon: Round },
    /// Each round, crashes the (at most two) nodes `target` would exchange a
    /// message with, before they act.
    PortIsolator { target: NodeId },
}

/// Byzantine misbehaviors. Their concrete effect is defined by the protocol
/// whose messages the faulty node imitates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ByzantineStrategy {
    Silent,
    Equivocate,
    SelectiveSend,
    ReplayOldSignatures,
    FloodInquiries,
    RandomNoise(u64),
}

fn parse_arg<T: FromStr>(name: &str, arg: Option<&str>) -> Result<T, SimError> {
    arg.and_then(|a| a.parse().ok())
        .ok_or_else(|| SimError::UnknownStrategy(format!("{name}: missing or malformed argument")))
}

impl FromStr for CrashStrategy {
    type Err = SimError;

    /// Accepts `uniform:RATE`, `front-loaded:H`, `back-loaded:H`,
    /// `target-little:LITTLE:H` and `port-isolator:NODE`.
    fn from_str(s: &str) -> Result<Self, SimError> {
        let mut it = s.split(':');
        let name = it.next().unwrap_or_default();
        let a = it.next();
        let b = it.next();
        Ok(match name {
            "uniform" => Self::UniformRandom { rate: parse_arg(name, a)? },
            "front-loaded" => Self::FrontLoaded { horizon: parse_arg(name, a)? },
            "back-loaded" => Self::BackLoaded { horizon: parse_arg(name, a)? },
            "target-little" => Self::TargetLittleNodes {
                little: parse_arg(name, a)?,
                horizon: parse_arg(name, b)?,
            },
            "port-isolator" => Self::PortIsolator { target: parse_arg(name, a)? },
            _ => return Err(SimError::UnknownStrategy(s.to_string())),
        })
    }
}

impl fmt::Display for CrashStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformRandom { rate } => write!(f, "uniform:{rate}"),
            Self::FrontLoaded { horizon } => write!(f, "front-loaded:{horizon}"),
            Self::BackLoaded { horizon } => write!(f, "back-loaded:{horizon}"),
            Self::TargetLittleNodes { little, horizon } => {
                write!(f, "target-little:{little}:{horizon}")
            }
            Self::PortIsolator { target } => write!(f, "port-isolator:{target}"),
        }
    }
}

impl FromStr for ByzantineStrategy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        Ok(match name {
            "silent" => Self::Silent,
            "equivocate" => Self::Equivocate,
            "selective-send" => Self::SelectiveSend,
            "replay" => Self::ReplayOldSignatures,
            "flood-inquiries" => Self::FloodInquiries,
            "random-noise" => Self::RandomNoise(parse_arg(name, arg)?),
            _ => return Err(SimError::UnknownStrategy(s.to_string())),
        })
    }
}

impl fmt::Display for ByzantineStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Silent => f.write_str("silent"),
            Self::Equivocate => f.write_str("equivocate"),
            Self::SelectiveSend => f.write_str("selective-send"),
            Self::ReplayOldSignatures => f.write_str("replay"),
            Self::FloodInquiries => f.write_str("flood-inquiries"),
            Self::RandomNoise(seed) => write!(f, "random-noise:{seed}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum AdversaryKind {
    #[default]
    None,
    /// Node to crash round. Round 0 means the node is crashed from the start
    /// and never sends anything.
    CrashStatic(BTreeMap<NodeId, Round>),
    CrashAdaptive(CrashStrategy),
    Byzantine(BTreeMap<NodeId, ByzantineStrategy>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdversarySchedule {
    pub bound_t: usize,
    pub kind: AdversaryKind,
}

impl AdversarySchedule {
    pub fn none(bound_t: usize) -> Self {
        Self { bound_t, kind: AdversaryKind::None }
    }

    pub fn crash_static(bound_t: usize, crashes: impl IntoIterator<Item = (NodeId, Round)>) -> Self {
        Self {
            bound_t,
            kind: AdversaryKind::CrashStatic(crashes.into_iter().collect()),
        }
    }

    pub fn adaptive(bound_t: usize, strategy: CrashStrategy) -> Self {
        Self { bound_t, kind: AdversaryKind::CrashAdaptive(strategy) }
    }

    pub fn byzantine(
        bound_t: usize,
        nodes: impl IntoIterator<Item = (NodeId, ByzantineStrategy)>,
    ) -> Self {
        Self {
            bound_t,
            kind: AdversaryKind::Byzantine(nodes.into_iter().collect()),
        }
    }

    pub fn byzantine_nodes(&self) -> BTreeMap<NodeId, ByzantineStrategy> {
        match &self.kind {
            AdversaryKind::Byzantine(map) => map.clone(),
            _ => BTreeMap::new(),
        }
    }
}

/// A crash chosen for the current round. Silent crashes happen before the
/// node sends anything in that round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Crash {
    pub node: NodeId,
    pub silent: bool,
}

/// Per-run crash decision state.
#[derive(Debug)]
pub(crate) struct CrashPlanner {
    planned: BTreeMap<Round, Vec<NodeId>>,
    uniform_rate: Option<f64>,
}

impl CrashPlanner {
    pub fn new(kind: &AdversaryKind, n: usize, t: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut planned: BTreeMap<Round, Vec<NodeId>> = BTreeMap::new();
        let mut uniform_rate = None;
        let mut plan = |pool: Vec<NodeId>, lo: Round, hi: Round, rng: &mut ChaCha8Rng| {
            let hi = hi.max(lo);
            let victims: Vec<NodeId> = pool.choose_multiple(rng, t.min(pool.len())).copied().collect();
            for v in victims {
                planned.entry(rng.gen_range(lo..=hi)).or_default().push(v);
            }
        };
        match kind {
            AdversaryKind::CrashStatic(map) => {
                for (&node, &round) in map {
                    if round > 0 {
                        planned.entry(round).or_default().push(node);
                    }
                }
            }
            AdversaryKind::CrashAdaptive(strategy) => match *strategy {
                CrashStrategy::UniformRandom { rate } => uniform_rate = Some(rate),
                CrashStrategy::FrontLoaded { horizon } => {
                    plan((0..n).collect(), 1, (horizon / 10).max(1), rng)
                }
                CrashStrategy::BackLoaded { horizon } => {
                    plan((0..n).collect(), (3 * horizon / 4).max(1), horizon.max(1), rng)
                }
                CrashStrategy::TargetLittleNodes { little, horizon } => {
                    plan((0..little.min(n)).collect(), 1, horizon.max(1), rng)
                }
                CrashStrategy::PortIsolator { .. } => {}
            },
            _ => {}
        }
        for nodes in planned.values_mut() {
            nodes.sort_unstable();
        }
        Self { planned, uniform_rate }
    }

    /// Crashes for `round` among nodes for which `eligible` holds, at most `budget`.
    pub fn crashes(
        &mut self,
        round: Round,
        eligible: &dyn Fn(NodeId) -> bool,
        n: usize,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Crash> {
        let mut out = Vec::new();
        if let Some(nodes) = self.planned.remove(&round) {
            for node in nodes {
                if eligible(node) && out.len() < budget {
                    out.push(Crash { node, silent: false });
                }
            }
        }
        if let Some(rate) = self.uniform_rate {
            for node in 0..n {
                if out.len() < budget && eligible(node) && rate > 0.0 && rng.gen_bool(rate.min(1.0)) {
                    out.push(Crash { node, silent: false });
                }
            }
        }
        out
    }
}
