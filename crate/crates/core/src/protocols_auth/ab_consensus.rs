use std::collections::BTreeMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::overlay::OverlayGraph;
use crate::protocols_crash::{scv_flood_rounds, ConfigError, ProtocolConfig};
use crate::simnet::{ByzantineStrategy, Ctx, Envelope, NodeId, NodeProgram, Outbox, Round, Status};

use super::byzantine::Misbehavior;
use super::{endorse_digest, inquiry_digest, AuthCommonSet, AuthEntry, AuthMsg, DsCore, Endorsement};

/// Size of the group running the broadcasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LittleGroup {
    /// `2t + 1` nodes.
    #[default]
    TwoTPlusOne,
    /// `min(5t, n)` nodes.
    FiveT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbConfig {
    pub n: usize,
    pub t: usize,
    pub group: LittleGroup,
    pub graph_seed: u64,
}

impl AbConfig {
    pub fn new(n: usize, t: usize) -> Self {
        Self { n, t, group: LittleGroup::default(), graph_seed: 0 }
    }

    pub fn with_group(mut self, group: LittleGroup) -> Self {
        self.group = group;
        self
    }

    pub fn with_graph_seed(mut self, seed: u64) -> Self {
        self.graph_seed = seed;
        self
    }

    pub fn little(&self) -> usize {
        match self.group {
            LittleGroup::TwoTPlusOne => 2 * self.t + 1,
            LittleGroup::FiveT => (5 * self.t).min(self.n).max(1),
        }
    }

    /// Endorsements required per entry: four fifths of the group, capped at
    /// the number of honest group members.
    pub fn threshold(&self) -> usize {
        let l = self.little();
        (4 * l).div_ceil(5).min(l - self.t.min(l))
    }
}

#[derive(Debug)]
pub struct AbPlan {
    pub n: usize,
    pub t: usize,
    pub little: usize,
    pub threshold: usize,
    pub flood: OverlayGraph,
    pub flood_rounds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Broadcast,
    Endorse,
    Notify,
    Flood(u64),
    Inquire,
    Respond,
    After,
}

impl AbPlan {
    pub fn new(cfg: &AbConfig) -> Result<Self, ConfigError> {
        if cfg.n == 0 || 2 * cfg.t >= cfg.n {
            return Err(ConfigError::Precondition("t < n/2 required".into()));
        }
        let little = cfg.little();
        if little > cfg.n {
            return Err(ConfigError::Precondition(format!("group of {little} exceeds n = {}", cfg.n)));
        }
        let flood = ProtocolConfig::new(cfg.n, cfg.t).with_graph_seed(cfg.graph_seed).flood_graph(2)?;
        Ok(Self {
            n: cfg.n,
            t: cfg.t,
            little,
            threshold: cfg.threshold(),
            flood,
            flood_rounds: scv_flood_rounds(cfg.n, cfg.t),
        })
    }

    pub fn total_rounds(&self) -> Round {
        self.t as Round + 1 + 2 + self.flood_rounds + 2
    }

    fn step(&self, round: Round) -> Step {
        let ds = self.t as Round + 1;
        match round {
            0 => Step::After,
            r if r <= ds => Step::Broadcast,
            r if r == ds + 1 => Step::Endorse,
            r if r == ds + 2 => Step::Notify,
            r if r <= ds + 2 + self.flood_rounds => Step::Flood(r - ds - 2),
            r if r == ds + 3 + self.flood_rounds => Step::Inquire,
            r if r == ds + 4 + self.flood_rounds => Step::Respond,
            _ => Step::After,
        }
    }

    fn label(&self, round: Round) -> &'static str {
        match self.step(round) {
            Step::Broadcast | Step::Endorse => "broadcast",
            Step::Notify => "notify",
            Step::Flood(_) => "flood",
            Step::Inquire | Step::Respond => "inquiry",
            Step::After => "idle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AbConsensus {
    plan: Arc<AbPlan>,
    id: NodeId,
    input: u64,
    ds: Option<DsCore>,
    endorsements: Vec<Vec<crate::simnet::Signature>>,
    /// The adopted authenticated common set.
    pub set: Option<Arc<AuthCommonSet>>,
    fresh: bool,
    answered: FixedBitSet,
    pending: Vec<NodeId>,
    byz: Option<Misbehavior>,
}

/// One program per node; nodes in `byzantine` misbehave.
pub fn ab_consensus_programs(
    cfg: &AbConfig,
    inputs: &[u64],
    byzantine: &BTreeMap<NodeId, ByzantineStrategy>,
    seed: u64,
) -> Result<Vec<AbConsensus>, ConfigError> {
    if inputs.len() != cfg.n {
        return Err(ConfigError::Precondition(format!("{} inputs for {} nodes", inputs.len(), cfg.n)));
    }
    let plan = Arc::new(AbPlan::new(cfg)?);
    Ok((0..cfg.n)
        .map(|id| AbConsensus {
            ds: (id < plan.little).then(|| DsCore::new(plan.little, plan.t, id)),
            endorsements: vec![Vec::new(); plan.little],
            set: None,
            fresh: false,
            answered: FixedBitSet::with_capacity(cfg.n),
            pending: Vec::new(),
            byz: byzantine.get(&id).map(|&s| Misbehavior::new(s, id, cfg.n, plan.little, seed)),
            input: inputs[id],
            id,
            plan: plan.clone(),
        })
        .collect())
}

impl AbConsensus {
    pub fn plan(&self) -> &Arc<AbPlan> {
        &self.plan
    }

    fn little(&self) -> bool {
        self.id < self.plan.little
    }

    fn valid(&self, set: &AuthCommonSet, ctx: &mut Ctx<'_>) -> bool {
        set.verify(self.plan.little, self.plan.threshold, |s| ctx.verify(s))
    }

    fn adopt_first<'a>(&mut self, sets: impl IntoIterator<Item = &'a Arc<AuthCommonSet>>, ctx: &mut Ctx<'_>) -> bool {
        if self.set.is_some() {
            return false;
        }
        for s in sets {
            if self.valid(s, ctx) {
                self.set = Some(s.clone());
                return true;
            }
        }
        false
    }

    fn honest_sends(&mut self, round: Round, ctx: &mut Ctx<'_>) -> Vec<(NodeId, AuthMsg)> {
        let plan = self.plan.clone();
        let mut out = Vec::new();
        match plan.step(round) {
            Step::Broadcast => {
                if let Some(ds) = &mut self.ds {
                    if round == 1 {
                        ds.start(self.input, ctx);
                    }
                    out.extend(ds.take_sends().into_iter().map(|(to, b)| (to, AuthMsg::Ds(b))));
                }
            }
            Step::Endorse => {
                if let Some(ds) = &self.ds {
                    let es: Vec<Endorsement> = ds
                        .outputs()
                        .into_iter()
                        .enumerate()
                        .map(|(origin, value)| Endorsement { origin, value, sig: ctx.sign(endorse_digest(origin, value)) })
                        .collect();
                    for (e, sigs) in es.iter().zip(&mut self.endorsements) {
                        sigs.push(e.sig);
                    }
                    for p in (0..plan.little).filter(|&p| p != self.id) {
                        out.push((p, AuthMsg::Endorse(es.clone())));
                    }
                }
            }
            Step::Notify => {
                if let (true, Some(set)) = (self.little(), &self.set) {
                    for j in (self.id + plan.little..plan.n).step_by(plan.little) {
                        out.push((j, AuthMsg::Set(set.clone())));
                    }
                }
            }
            Step::Flood(k) => {
                if let Some(set) = &self.set {
                    if k == 1 || self.fresh {
                        for &w in plan.flood.neighbors(self.id) {
                            out.push((w, AuthMsg::Set(set.clone())));
                        }
                    }
                }
                self.fresh = false;
            }
            Step::Inquire => {
                if self.set.is_none() {
                    let sig = ctx.sign(inquiry_digest(self.id));
                    for p in (0..plan.little).filter(|&p| p != self.id) {
                        out.push((p, AuthMsg::Inquiry(sig)));
                    }
                }
            }
            Step::Respond => {
                if let Some(set) = &self.set {
                    for q in std::mem::take(&mut self.pending) {
                        out.push((q, AuthMsg::Set(set.clone())));
                    }
                }
            }
            Step::After => {}
        }
        out
    }
}

impl NodeProgram for AbConsensus {
    type Msg = AuthMsg;
    type Output = u64;

    fn on_send(&mut self, round: Round, ctx: &mut Ctx<'_>) -> Outbox<AuthMsg> {
        let honest = self.honest_sends(round, ctx);
        let sends = match &mut self.byz {
            Some(b) => b.mangle(honest, round, ctx),
            None => honest,
        };
        Outbox { sends, poll: None }
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<AuthMsg>], ctx: &mut Ctx<'_>) -> Status<u64> {
        if let Some(b) = &mut self.byz {
            b.remember(inbox);
        }
        let plan = self.plan.clone();
        let sets = || {
            inbox.iter().filter_map(|e| match &e.payload {
                AuthMsg::Set(s) => Some((e.sender, s)),
                _ => None,
            })
        };
        match plan.step(round) {
            Step::Broadcast => {
                if let Some(ds) = &mut self.ds {
                    let chains = inbox.iter().filter_map(|e| match &e.payload {
                        AuthMsg::Ds(b) if e.sender < plan.little => Some(b.iter()),
                        _ => None,
                    });
                    ds.receive(round, chains.flatten(), ctx);
                }
            }
            Step::Endorse => {
                if let Some(ds) = &self.ds {
                    let outputs = ds.outputs();
                    for e in inbox {
                        let AuthMsg::Endorse(es) = &e.payload else { continue };
                        if e.sender >= plan.little {
                            continue;
                        }
                        for en in es {
                            let ok = en.origin < plan.little
                                && en.sig.signer == e.sender
                                && en.value == outputs[en.origin]
                                && en.sig.digest == endorse_digest(en.origin, en.value)
                                && !self.endorsements[en.origin].iter().any(|s| s.signer == e.sender)
                                && ctx.verify(&en.sig);
                            if ok {
                                self.endorsements[en.origin].push(en.sig);
                            }
                        }
                    }
                    if self.endorsements.iter().all(|s| s.len() >= plan.threshold) {
                        let entries = outputs
                            .into_iter()
                            .zip(&self.endorsements)
                            .map(|(value, sigs)| AuthEntry { value, signatures: sigs.clone() })
                            .collect();
                        self.set = Some(Arc::new(AuthCommonSet { entries }));
                    }
                }
            }
            Step::Notify => {
                if !self.little() {
                    let related = self.id % plan.little;
                    let from_related: Vec<&Arc<AuthCommonSet>> =
                        sets().filter(|&(s, _)| s == related).map(|(_, set)| set).collect();
                    self.adopt_first(from_related, ctx);
                }
            }
            Step::Flood(_) => {
                let received: Vec<&Arc<AuthCommonSet>> = sets().map(|(_, s)| s).collect();
                self.fresh = self.adopt_first(received, ctx);
            }
            Step::Inquire => {
                if self.little() {
                    for e in inbox {
                        let AuthMsg::Inquiry(sig) = &e.payload else { continue };
                        let q = e.sender;
                        if sig.signer == q
                            && sig.digest == inquiry_digest(q)
                            && !self.answered.contains(q)
                            && ctx.verify(sig)
                        {
                            self.answered.insert(q);
                            self.pending.push(q);
                        }
                    }
                }
            }
            Step::Respond => {
                let received: Vec<&Arc<AuthCommonSet>> = sets().map(|(_, s)| s).collect();
                self.adopt_first(received, ctx);
            }
            Step::After => {}
        }
        if round >= plan.total_rounds() {
            Status::Halted(self.set.as_ref().map(|s| s.decision()))
        } else {
            Status::Running
        }
    }

    fn part(&self, round: Round) -> &'static str {
        self.plan.label(round)
    }
}
