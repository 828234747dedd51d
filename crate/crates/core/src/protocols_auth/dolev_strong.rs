use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::simnet::{digest_of, ByzantineStrategy, Ctx, Envelope, NodeId, NodeProgram, Outbox, Round, Signature, Status};

use super::byzantine::Misbehavior;
use super::{AuthMsg, SIGNATURE_BITS, VALUE_BITS};

pub fn ds_digest(origin: NodeId, value: u64) -> u64 {
    digest_of(&("ds", origin, value))
}

/// A value with its signature chain, origin first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedValue {
    pub origin: NodeId,
    pub value: u64,
    pub chain: Vec<Signature>,
}

impl SignedValue {
    /// Acceptance rule: at least `min_len` distinct participant signatures
    /// over this value, the origin's first, all valid.
    pub fn verify(&self, participants: usize, min_len: usize, mut check: impl FnMut(&Signature) -> bool) -> bool {
        if self.chain.len() < min_len.max(1) || self.chain[0].signer != self.origin {
            return false;
        }
        let digest = ds_digest(self.origin, self.value);
        let mut signers: Vec<NodeId> = self.chain.iter().map(|s| s.signer).collect();
        signers.sort_unstable();
        signers.dedup();
        signers.len() == self.chain.len()
            && signers.last().is_some_and(|&s| s < participants)
            && self.chain.iter().all(|s| s.digest == digest && check(s))
    }

    pub fn signed_by(&self, node: NodeId) -> bool {
        self.chain.iter().any(|s| s.signer == node)
    }

    pub fn bit_size(&self) -> u64 {
        32 + VALUE_BITS + self.chain.len() as u64 * SIGNATURE_BITS
    }
}

/// Per-node state of parallel Dolev-Strong instances among nodes
/// `0..participants`, one instance per origin.
#[derive(Debug, Clone)]
pub struct DsCore {
    participants: usize,
    t: usize,
    id: NodeId,
    /// Distinct accepted values per origin, at most two kept.
    accepted: Vec<Vec<u64>>,
    relay: Vec<SignedValue>,
}

impl DsCore {
    pub fn new(participants: usize, t: usize, id: NodeId) -> Self {
        Self { participants, t, id, accepted: vec![Vec::new(); participants], relay: Vec::new() }
    }

    /// The source signs its own value for round 1.
    pub fn start(&mut self, value: u64, ctx: &mut Ctx<'_>) {
        let sig = ctx.sign(ds_digest(self.id, value));
        self.accepted[self.id] = vec![value];
        self.relay.push(SignedValue { origin: self.id, value, chain: vec![sig] });
    }

    /// Pending relays grouped per receiver; a chain is not sent back to its signers.
    pub fn take_sends(&mut self) -> Vec<(NodeId, Vec<SignedValue>)> {
        let relay = std::mem::take(&mut self.relay);
        if relay.is_empty() {
            return Vec::new();
        }
        (0..self.participants)
            .filter(|&r| r != self.id)
            .filter_map(|r| {
                let batch: Vec<SignedValue> = relay.iter().filter(|c| !c.signed_by(r)).cloned().collect();
                (!batch.is_empty()).then_some((r, batch))
            })
            .collect()
    }

    /// Applies the acceptance rule to chains received in `round` (1-based).
    pub fn receive<'a>(&mut self, round: Round, chains: impl IntoIterator<Item = &'a SignedValue>, ctx: &mut Ctx<'_>) {
        for c in chains {
            if c.origin >= self.participants || round as usize > self.t + 1 {
                continue;
            }
            let known = &self.accepted[c.origin];
            if known.contains(&c.value) || known.len() >= 2 {
                continue;
            }
            if !c.verify(self.participants, round as usize, |s| ctx.verify(s)) {
                continue;
            }
            self.accepted[c.origin].push(c.value);
            if (round as usize) <= self.t && !c.signed_by(self.id) {
                let mut chain = c.chain.clone();
                chain.push(ctx.sign(ds_digest(c.origin, c.value)));
                self.relay.push(SignedValue { origin: c.origin, value: c.value, chain });
            }
        }
    }

    /// Unique accepted value per origin, or null.
    pub fn outputs(&self) -> Vec<Option<u64>> {
        self.accepted.iter().map(|a| if a.len() == 1 { Some(a[0]) } else { None }).collect()
    }

    pub fn output(&self, origin: NodeId) -> Option<u64> {
        (self.accepted[origin].len() == 1).then(|| self.accepted[origin][0])
    }
}

/// Result of one broadcast: the source's value or null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DsOutput(pub Option<u64>);

impl fmt::Display for DsOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "null"),
        }
    }
}

/// A participant of a single Dolev-Strong broadcast lasting `t + 1` rounds.
#[derive(Debug, Clone)]
pub struct DolevStrong {
    core: DsCore,
    source: NodeId,
    input: u64,
    t: usize,
    byz: Option<Misbehavior>,
}

/// Programs for `n` participants broadcasting `input` from `source`.
/// Nodes in `byzantine` run the given misbehavior.
pub fn dolev_strong_programs(
    n: usize,
    t: usize,
    source: NodeId,
    input: u64,
    byzantine: &BTreeMap<NodeId, ByzantineStrategy>,
    seed: u64,
) -> Vec<DolevStrong> {
    (0..n)
        .map(|id| DolevStrong {
            core: DsCore::new(n, t, id),
            source,
            input,
            t,
            byz: byzantine.get(&id).map(|&s| Misbehavior::new(s, id, n, n, seed)),
        })
        .collect()
}

impl DolevStrong {
    pub fn output(&self) -> DsOutput {
        DsOutput(self.core.output(self.source))
    }
}

impl NodeProgram for DolevStrong {
    type Msg = AuthMsg;
    type Output = DsOutput;

    fn on_send(&mut self, round: Round, ctx: &mut Ctx<'_>) -> Outbox<AuthMsg> {
        if round == 1 && ctx.id() == self.source {
            self.core.start(self.input, ctx);
        }
        let honest: Vec<(NodeId, AuthMsg)> = self.core.take_sends().into_iter().map(|(to, b)| (to, AuthMsg::Ds(b))).collect();
        let sends = match &mut self.byz {
            Some(b) => b.mangle(honest, round, ctx),
            None => honest,
        };
        Outbox { sends, poll: None }
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<AuthMsg>], ctx: &mut Ctx<'_>) -> Status<DsOutput> {
        if let Some(b) = &mut self.byz {
            b.remember(inbox);
        }
        let chains = inbox.iter().filter_map(|e| match &e.payload {
            AuthMsg::Ds(batch) => Some(batch.iter()),
            _ => None,
        });
        self.core.receive(round, chains.flatten(), ctx);
        if round as usize > self.t {
            Status::Halted(Some(self.output()))
        } else {
            Status::Running
        }
    }

    fn part(&self, _: Round) -> &'static str {
        "dolev-strong"
    }
}
