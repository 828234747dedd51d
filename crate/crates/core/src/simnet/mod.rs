//! Deterministic synchronous round engine.
//!
//! Every round has a send phase, delivery, and a receive phase: messages sent
//! in round `r` are seen by their receivers in the same round `r`. The engine
//! enforces port discipline, applies crash and Byzantine faults, simulates
//! unforgeable signatures and records metrics.

mod adversary;
mod engine;
mod metrics;
mod signature;

pub use adversary::{AdversaryKind, AdversarySchedule, ByzantineStrategy, CrashStrategy};
pub use engine::{
    default_max_rounds, run, run_multiport, run_singleport, CrashDelivery, PortModel, RunConfig,
    RunOutcome,
};
pub use metrics::{Event, PartMetrics, RunMetrics, TranscriptRecord};
pub use signature::{digest_of, Signature, SignatureRegistry};

use thiserror::Error;

pub type NodeId = usize;
pub type Round = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("round limit {max_rounds} reached with non-faulty nodes still running")]
    RoundLimitExceeded {
        max_rounds: Round,
        metrics: Box<RunMetrics>,
    },
    #[error("node {node} violated the port discipline at round {round}: {reason}")]
    ProtocolViolation {
        node: NodeId,
        round: Round,
        reason: String,
    },
    #[error("node {node} changed its decision at round {round}")]
    IrrevocabilityViolation { node: NodeId, round: Round },
    #[error("{faulty} faulty nodes exceed the bound {bound}")]
    FaultBudgetExceeded { faulty: usize, bound: usize },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("signature audit failed")]
    SignatureAudit,
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
}

/// Accounting weight of a payload.
pub trait Payload {
    fn bit_size(&self) -> u64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<M> {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub round_sent: Round,
    pub bit_size: u64,
    pub payload: M,
}

/// What a node emits in a send phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbox<M> {
    pub sends: Vec<(NodeId, M)>,
    /// The port polled this round; only used in single-port runs.
    pub poll: Option<NodeId>,
}

impl<M> Default for Outbox<M> {
    fn default() -> Self {
        Self { sends: Vec::new(), poll: None }
    }
}

impl<M> Outbox<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, to: NodeId, msg: M) {
        self.sends.push((to, msg));
    }

    pub fn with_poll(mut self, from: Option<NodeId>) -> Self {
        self.poll = from;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status<O> {
    Running,
    /// Decided and still participating.
    Decided(O),
    /// Stopped for good, possibly with a decision.
    Halted(Option<O>),
}

/// Per-call capabilities handed to a node by the engine.
pub struct Ctx<'a> {
    id: NodeId,
    n: usize,
    registry: &'a mut SignatureRegistry,
}

impl<'a> Ctx<'a> {
    pub(crate) fn new(id: NodeId, n: usize, registry: &'a mut SignatureRegistry) -> Self {
        Self { id, n, registry }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sign(&mut self, digest: u64) -> Signature {
        self.registry.mint(self.id, self.id, digest)
    }

    /// Tries to sign for another node. The engine records the attempt and
    /// returns a signature that fails verification.
    pub fn sign_as(&mut self, signer: NodeId, digest: u64) -> Signature {
        self.registry.mint(self.id, signer, digest)
    }

    pub fn verify(&mut self, sig: &Signature) -> bool {
        self.registry.verify(sig)
    }
}

/// A node's deterministic state machine.
pub trait NodeProgram: Clone {
    type Msg: Payload + Clone;
    type Output: Clone + PartialEq + std::fmt::Display;

    fn on_send(&mut self, round: Round, ctx: &mut Ctx<'_>) -> Outbox<Self::Msg>;

    /// `inbox` is sorted by sender id.
    fn on_receive(
        &mut self,
        round: Round,
        inbox: &[Envelope<Self::Msg>],
        ctx: &mut Ctx<'_>,
    ) -> Status<Self::Output>;

    /// Label of the protocol part that `round` belongs to.
    fn part(&self, _round: Round) -> &'static str {
        "main"
    }
}
