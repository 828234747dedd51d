//! Message-level Byzantine behaviors. A faulty node runs the honest state
//! machine and its outbox is rewritten according to its strategy.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::simnet::{ByzantineStrategy, Ctx, Envelope, NodeId, Round, Signature};

use super::{ds_digest, endorse_digest, inquiry_digest, AuthMsg, Endorsement, SignedValue};

const MEMORY: usize = 16;

#[derive(Debug, Clone)]
pub(crate) struct Misbehavior {
    strategy: ByzantineStrategy,
    id: NodeId,
    n: usize,
    little: usize,
    rng: ChaCha8Rng,
    memory: Vec<AuthMsg>,
}

fn flip(v: Option<u64>) -> Option<u64> {
    Some(v.map_or(0, |x| x ^ 1))
}

impl Misbehavior {
    pub(crate) fn new(strategy: ByzantineStrategy, id: NodeId, n: usize, little: usize, seed: u64) -> Self {
        let stream = match strategy {
            ByzantineStrategy::RandomNoise(s) => s,
            _ => 0,
        };
        Self {
            strategy,
            id,
            n,
            little,
            rng: crate::seed::rng(crate::seed::mix(seed, id as u64), stream),
            memory: Vec::new(),
        }
    }

    pub(crate) fn remember(&mut self, inbox: &[Envelope<AuthMsg>]) {
        if self.strategy != ByzantineStrategy::ReplayOldSignatures {
            return;
        }
        self.memory.extend(inbox.iter().map(|e| e.payload.clone()));
        let excess = self.memory.len().saturating_sub(MEMORY);
        self.memory.drain(..excess);
    }

    fn little_peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.little).filter(move |&p| p != self.id)
    }

    /// Signs a conflicting version of the node's own statements.
    fn equivocate(&self, msg: AuthMsg, ctx: &mut Ctx<'_>) -> AuthMsg {
        match msg {
            AuthMsg::Ds(batch) => AuthMsg::Ds(
                batch
                    .into_iter()
                    .map(|c| {
                        if c.origin == self.id && c.chain.len() == 1 {
                            let value = c.value ^ 1;
                            SignedValue { origin: c.origin, value, chain: vec![ctx.sign(ds_digest(c.origin, value))] }
                        } else {
                            c
                        }
                    })
                    .collect(),
            ),
            AuthMsg::Endorse(es) => AuthMsg::Endorse(
                es.into_iter()
                    .map(|e| {
                        let value = flip(e.value);
                        Endorsement { origin: e.origin, value, sig: ctx.sign(endorse_digest(e.origin, value)) }
                    })
                    .collect(),
            ),
            other => other,
        }
    }

    /// Alters a previously seen message while keeping its old signatures.
    fn tamper(msg: &AuthMsg) -> AuthMsg {
        match msg {
            AuthMsg::Ds(batch) => AuthMsg::Ds(
                batch.iter().map(|c| SignedValue { value: c.value ^ 1, ..c.clone() }).collect(),
            ),
            AuthMsg::Endorse(es) => AuthMsg::Endorse(
                es.iter().map(|e| Endorsement { value: flip(e.value), ..*e }).collect(),
            ),
            AuthMsg::Set(set) => {
                let mut set = (**set).clone();
                for e in &mut set.entries {
                    e.value = flip(e.value);
                }
                AuthMsg::Set(set.into())
            }
            other => other.clone(),
        }
    }

    pub(crate) fn mangle(&mut self, honest: Vec<(NodeId, AuthMsg)>, round: Round, ctx: &mut Ctx<'_>) -> Vec<(NodeId, AuthMsg)> {
        match self.strategy {
            ByzantineStrategy::Silent => Vec::new(),
            ByzantineStrategy::Equivocate => honest
                .into_iter()
                .map(|(to, m)| if to % 2 == 1 { (to, self.equivocate(m, ctx)) } else { (to, m) })
                .collect(),
            ByzantineStrategy::SelectiveSend => {
                honest.into_iter().filter(|&(to, _)| (to as u64 + round).is_multiple_of(2)).collect()
            }
            ByzantineStrategy::ReplayOldSignatures => {
                let mut out = honest;
                let replays: Vec<AuthMsg> = self.memory.iter().rev().take(3).map(Self::tamper).collect();
                let peers: Vec<NodeId> = self.little_peers().collect();
                for m in replays {
                    out.extend(peers.iter().map(|&p| (p, m.clone())));
                }
                if self.little > 1 {
                    let victim = (self.id + 1) % self.little;
                    let forged = SignedValue { origin: victim, value: 0, chain: vec![ctx.sign_as(victim, ds_digest(victim, 0))] };
                    out.extend(peers.iter().map(|&p| (p, AuthMsg::Ds(vec![forged.clone()]))));
                }
                out
            }
            ByzantineStrategy::FloodInquiries => {
                let mut out = honest;
                let own = ctx.sign(inquiry_digest(self.id));
                let other = (self.id + 1) % self.n;
                let forged = ctx.sign_as(other, inquiry_digest(other));
                let peers: Vec<NodeId> = self.little_peers().collect();
                for p in peers {
                    out.push((p, AuthMsg::Inquiry(own)));
                    out.push((p, AuthMsg::Inquiry(forged)));
                }
                out
            }
            ByzantineStrategy::RandomNoise(_) => {
                if self.n < 2 {
                    return Vec::new();
                }
                let count = self.rng.gen_range(1..=3);
                (0..count)
                    .map(|_| {
                        let mut to = self.rng.gen_range(0..self.n - 1);
                        if to >= self.id {
                            to += 1;
                        }
                        let bogus = Signature {
                            signer: self.rng.gen_range(0..self.n),
                            digest: self.rng.gen(),
                            token: self.rng.gen(),
                        };
                        let msg = match self.rng.gen_range(0..3) {
                            0 => AuthMsg::Noise(self.rng.gen()),
                            1 => AuthMsg::Inquiry(bogus),
                            _ => AuthMsg::Ds(vec![SignedValue { origin: bogus.signer, value: self.rng.gen_range(0..2), chain: vec![bogus] }]),
                        };
                        (to, msg)
                    })
                    .collect()
            }
        }
    }
}
