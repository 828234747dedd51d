//! Gossip of per-node rumors via extant sets, and checkpointing built on it.

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::overlay::{build_gi_graph, ceil_log2, GiMode, OverlayGraph};
use crate::simnet::{Ctx, Envelope, NodeId, NodeProgram, Outbox, Payload, Round, Status};

use super::config::ProbeGraph;
use super::few_crashes::{FcMsg, FcPlan, FewCrashes, Sized, Stages};
use super::lanes::LaneValues;
use super::probe::ProbeState;
use super::{is_little, little_count, ConfigError, Links, ProtocolConfig};

/// Per-node rumors known to a node; absent entries are nil.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtantSet {
    present: FixedBitSet,
    rumors: Vec<u64>,
}

impl ExtantSet {
    pub fn new(n: usize) -> Self {
        Self { present: FixedBitSet::with_capacity(n), rumors: vec![0; n] }
    }

    pub fn get(&self, q: NodeId) -> Option<u64> {
        self.present.contains(q).then(|| self.rumors[q])
    }

    pub fn is_present(&self, q: NodeId) -> bool {
        self.present.contains(q)
    }

    pub fn present(&self) -> &FixedBitSet {
        &self.present
    }

    pub fn present_ids(&self) -> Vec<NodeId> {
        self.present.ones().collect()
    }

    pub fn count(&self) -> usize {
        self.present.count_ones(..)
    }

    /// Sets nil entry `q` to `x`. Returns `Err` if `q` already holds a different rumor.
    pub fn update(&mut self, q: NodeId, x: u64) -> Result<bool, u64> {
        if self.present.contains(q) {
            return if self.rumors[q] == x { Ok(false) } else { Err(self.rumors[q]) };
        }
        self.present.insert(q);
        self.rumors[q] = x;
        Ok(true)
    }

    /// Copies every proper pair of `other` that is nil here. Returns the number
    /// of conflicting pairs offered (kept at their first value).
    pub fn merge(&mut self, other: &ExtantSet) -> usize {
        let mut conflicts = 0;
        for q in other.present.ones() {
            if self.update(q, other.rumors[q]).is_err() {
                conflicts += 1;
            }
        }
        conflicts
    }

    /// Canonical encoding size: one presence bit per node plus the rumor bits
    /// of each proper pair.
    pub fn bit_size(&self, rumor_bits: u64) -> u64 {
        self.rumors.len() as u64 + self.count() as u64 * rumor_bits
    }
}

impl fmt::Display for ExtantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self.present.ones().map(|q| format!("{q}:{}", self.rumors[q])).collect();
        write!(f, "{{{}}}", pairs.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GossipMsg {
    Inquiry,
    /// The responder's own pair.
    Response(u64),
    /// Extant set flooded during Part 1 probing.
    Extant(Arc<ExtantSet>),
    /// Extant set delivered over a phase graph in Part 2.
    Completed(Arc<ExtantSet>),
    Completion(Arc<FixedBitSet>),
}

#[derive(Debug, Clone)]
pub struct GossipPayload {
    pub msg: GossipMsg,
    rumor_bits: u64,
}

impl Payload for GossipPayload {
    fn bit_size(&self) -> u64 {
        match &self.msg {
            GossipMsg::Inquiry => 1,
            GossipMsg::Response(_) => self.rumor_bits,
            GossipMsg::Extant(e) | GossipMsg::Completed(e) => e.bit_size(self.rumor_bits),
            GossipMsg::Completion(c) => c.len() as u64,
        }
    }
}

#[derive(Debug)]
pub struct GossipPlan {
    pub n: usize,
    pub t: usize,
    pub little: usize,
    pub probe: ProbeGraph,
    pub phase_graphs: Vec<OverlayGraph>,
    pub rumor_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Ask { part: u8, phase: usize },
    Answer { part: u8, phase: usize },
    Probe { part: u8, phase: usize, k: u64 },
    After,
}

impl GossipPlan {
    pub fn new(cfg: &ProtocolConfig, rumor_bits: u64) -> Result<Self, ConfigError> {
        cfg.require_few()?;
        let (n, t) = (cfg.n, cfg.t);
        let little = little_count(t);
        let probe = cfg.probe_graph(little, 5f64.powi(8), t, 21)?;
        let phases = ceil_log2(n).max(1) as u32;
        let phase_graphs = (1..=phases)
            .map(|i| build_gi_graph(n, i, GiMode::Scv, crate::seed::mix(cfg.graph_seed, 22)).base)
            .collect();
        Ok(Self { n, t, little, probe, phase_graphs, rumor_bits })
    }

    pub fn phases(&self) -> usize {
        self.phase_graphs.len()
    }

    fn phase_len(&self) -> u64 {
        2 + self.probe.gamma
    }

    pub fn total_rounds(&self) -> u64 {
        2 * self.phases() as u64 * self.phase_len()
    }

    pub(crate) fn links(&self, round: Round) -> Links {
        match self.step(round) {
            Step::Ask { phase, .. } | Step::Answer { phase, .. } => Links::Phase(phase),
            Step::Probe { .. } => Links::Little,
            Step::After => Links::Idle,
        }
    }

    pub(crate) fn link_edges(&self, links: Links) -> Vec<(NodeId, NodeId)> {
        match links {
            Links::Little => self.probe.graph.edges().collect(),
            Links::Phase(i) => self.phase_graphs[i - 1].edges().collect(),
            _ => Vec::new(),
        }
    }

    fn step(&self, round: Round) -> Step {
        if round == 0 || round > self.total_rounds() {
            return Step::After;
        }
        let idx = round - 1;
        let per_part = self.phases() as u64 * self.phase_len();
        let part = if idx < per_part { 1 } else { 2 };
        let within = idx % per_part;
        let phase = (within / self.phase_len()) as usize + 1;
        match within % self.phase_len() {
            0 => Step::Ask { part, phase },
            1 => Step::Answer { part, phase },
            k => Step::Probe { part, phase, k: k - 1 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Gossip {
    plan: Arc<GossipPlan>,
    id: NodeId,
    rumor: u64,
    pub extant: Arc<ExtantSet>,
    pub completion: FixedBitSet,
    probe: ProbeState,
    survived_last: bool,
    /// Holds the pair of every node that was operational when inquired in
    /// the final, complete inquiry phase (or received such a set).
    pub complete: bool,
    inquired: bool,
    pending: Vec<NodeId>,
    /// Proper pairs offered with a rumor different from the stored one.
    pub conflicts: usize,
}

pub fn gossip_programs(cfg: &ProtocolConfig, rumors: &[u64]) -> Result<Vec<Gossip>, ConfigError> {
    let plan = Arc::new(GossipPlan::new(cfg, 64)?);
    gossip_with_plan(&plan, rumors)
}

/// Programs sharing an already built plan.
pub fn gossip_with_plan(plan: &Arc<GossipPlan>, rumors: &[u64]) -> Result<Vec<Gossip>, ConfigError> {
    if rumors.len() != plan.n {
        return Err(ConfigError::Precondition(format!("{} rumors for {} nodes", rumors.len(), plan.n)));
    }
    Ok((0..plan.n).map(|id| Gossip::new(plan.clone(), id, rumors[id])).collect())
}

impl Gossip {
    fn new(plan: Arc<GossipPlan>, id: NodeId, rumor: u64) -> Self {
        let mut extant = ExtantSet::new(plan.n);
        extant.update(id, rumor).expect("fresh set");
        Self {
            completion: FixedBitSet::with_capacity(plan.n),
            plan,
            id,
            rumor,
            extant: Arc::new(extant),
            probe: ProbeState::default(),
            survived_last: true,
            complete: false,
            inquired: false,
            pending: Vec::new(),
            conflicts: 0,
        }
    }

    pub fn plan(&self) -> &Arc<GossipPlan> {
        &self.plan
    }

    fn little(&self) -> bool {
        is_little(self.id, self.plan.t)
    }

    fn wrap(&self, msg: GossipMsg) -> GossipPayload {
        GossipPayload { msg, rumor_bits: self.plan.rumor_bits }
    }

    fn merge(&mut self, other: &ExtantSet) {
        let mut missing = other.present.clone();
        missing.difference_with(&self.extant.present);
        let conflicts = other
            .present
            .ones()
            .filter(|&q| self.extant.present.contains(q) && self.extant.rumors[q] != other.rumors[q])
            .count();
        self.conflicts += conflicts;
        if missing.count_ones(..) > 0 {
            let e = Arc::make_mut(&mut self.extant);
            for q in missing.ones() {
                let _ = e.update(q, other.rumors[q]);
            }
        }
    }

    pub(crate) fn send_step(&mut self, round: Round) -> Vec<(NodeId, GossipPayload)> {
        let plan = self.plan.clone();
        let mut out = Vec::new();
        match plan.step(round) {
            Step::Ask { part: 1, phase } => {
                self.inquired = false;
                if self.little() && self.survived_last {
                    self.inquired = true;
                    for &u in plan.phase_graphs[phase - 1].neighbors(self.id) {
                        if !self.extant.is_present(u) {
                            out.push((u, self.wrap(GossipMsg::Inquiry)));
                        }
                    }
                }
            }
            Step::Ask { phase, .. } => {
                if phase == 1 && (self.complete || !self.little()) {
                    self.completion.insert(self.id);
                }
                if self.little() && self.complete && self.survived_last {
                    for &q in plan.phase_graphs[phase - 1].neighbors(self.id) {
                        if !self.completion.contains(q) {
                            self.completion.insert(q);
                            out.push((q, self.wrap(GossipMsg::Completed(self.extant.clone()))));
                        }
                    }
                }
            }
            Step::Answer { part: 1, .. } => {
                for q in std::mem::take(&mut self.pending) {
                    out.push((q, self.wrap(GossipMsg::Response(self.rumor))));
                }
            }
            Step::Probe { part, .. } if self.little() && self.probe.sending() => {
                let msg = if part == 1 {
                    GossipMsg::Extant(self.extant.clone())
                } else {
                    GossipMsg::Completion(Arc::new(self.completion.clone()))
                };
                for &w in plan.probe.graph.neighbors(self.id) {
                    out.push((w, self.wrap(msg.clone())));
                }
            }
            _ => {}
        }
        out
    }

    pub(crate) fn receive_step(&mut self, round: Round, inbox: &[(NodeId, &GossipMsg)]) -> Status<ExtantSet> {
        let plan = self.plan.clone();
        match plan.step(round) {
            Step::Ask { part: 1, .. } => {
                self.pending = inbox.iter().filter(|(_, m)| matches!(m, GossipMsg::Inquiry)).map(|&(s, _)| s).collect();
            }
            Step::Answer { part: 1, phase } => {
                for &(q, msg) in inbox {
                    if let GossipMsg::Response(x) = msg {
                        if Arc::make_mut(&mut self.extant).update(q, *x).is_err() {
                            self.conflicts += 1;
                        }
                    }
                }
                if phase == plan.phases() && self.inquired && plan.phase_graphs[phase - 1].is_complete() {
                    self.complete = true;
                }
            }
            Step::Ask { .. } => {
                let mut got = false;
                for &(_, msg) in inbox {
                    if let GossipMsg::Completed(e) = msg {
                        self.merge(e);
                        got = true;
                    }
                }
                if got {
                    self.complete = true;
                    self.completion.insert(self.id);
                }
            }
            Step::Probe { part, k, .. } if self.little() => {
                let mut received = 0;
                for &(_, msg) in inbox {
                    match msg {
                        GossipMsg::Extant(e) if part == 1 => {
                            received += 1;
                            self.merge(e);
                        }
                        GossipMsg::Completion(c) if part == 2 => {
                            received += 1;
                            self.completion.union_with(c);
                        }
                        _ => {}
                    }
                }
                self.probe.record(received, plan.probe.delta, plan.probe.gamma);
                if k == plan.probe.gamma {
                    self.survived_last = self.probe.survived;
                    self.probe = ProbeState::default();
                }
            }
            _ => {}
        }
        if round >= plan.total_rounds() {
            Status::Halted(Some((*self.extant).clone()))
        } else {
            Status::Running
        }
    }

    /// Fingerprint of the node's protocol state.
    pub(crate) fn state_digest(&self) -> u64 {
        crate::simnet::digest_of(&(
            &self.extant.present,
            &self.extant.rumors,
            &self.completion,
            self.probe,
            self.survived_last,
            self.complete,
            &self.pending,
        ))
    }

    pub(crate) fn label(&self, round: Round) -> &'static str {
        match self.plan.step(round) {
            Step::Ask { part: 1, .. } | Step::Answer { part: 1, .. } => "gossip-extant-inquiry",
            Step::Probe { part: 1, .. } => "gossip-extant-probing",
            Step::Ask { .. } | Step::Answer { .. } => "gossip-completion-send",
            Step::Probe { .. } => "gossip-completion-probing",
            Step::After => "idle",
        }
    }
}

impl NodeProgram for Gossip {
    type Msg = GossipPayload;
    type Output = ExtantSet;

    fn on_send(&mut self, round: Round, _: &mut Ctx<'_>) -> Outbox<GossipPayload> {
        Outbox { sends: self.send_step(round), poll: None }
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<GossipPayload>], _: &mut Ctx<'_>) -> Status<ExtantSet> {
        let msgs: Vec<(NodeId, &GossipMsg)> = inbox.iter().map(|e| (e.sender, &e.payload.msg)).collect();
        self.receive_step(round, &msgs)
    }

    fn part(&self, round: Round) -> &'static str {
        self.label(round)
    }
}

#[derive(Debug, Clone)]
pub enum CheckpointMsg {
    Gossip(GossipPayload),
    Consensus(Sized<FcMsg>),
}

impl Payload for CheckpointMsg {
    fn bit_size(&self) -> u64 {
        match self {
            CheckpointMsg::Gossip(m) => m.bit_size(),
            CheckpointMsg::Consensus(m) => m.bit_size(),
        }
    }
}

/// Gossip with a dummy rumor, then one consensus instance per node.
#[derive(Debug, Clone)]
pub struct Checkpointing {
    pub gossip: Gossip,
    fc_plan: Arc<FcPlan>,
    pub consensus: Option<FewCrashes>,
}

pub fn checkpointing_programs(cfg: &ProtocolConfig) -> Result<Vec<Checkpointing>, ConfigError> {
    let gossip = Arc::new(GossipPlan::new(cfg, 1)?);
    let fc = Arc::new(FcPlan::new(cfg, cfg.n, Stages::Full, gossip.total_rounds())?);
    Ok(checkpointing_with_plans(&gossip, &fc))
}

/// Programs sharing already built plans.
pub fn checkpointing_with_plans(gossip: &Arc<GossipPlan>, fc: &Arc<FcPlan>) -> Vec<Checkpointing> {
    (0..gossip.n)
        .map(|id| Checkpointing {
            gossip: Gossip::new(gossip.clone(), id, 1),
            fc_plan: fc.clone(),
            consensus: None,
        })
        .collect()
}

impl Checkpointing {
    pub fn gossip_rounds(&self) -> Round {
        self.gossip.plan.total_rounds()
    }

    /// Extant-set membership after gossip (the consensus inputs).
    pub fn gathered(&self) -> &ExtantSet {
        &self.gossip.extant
    }
}

impl NodeProgram for Checkpointing {
    type Msg = CheckpointMsg;
    type Output = LaneValues;

    fn on_send(&mut self, round: Round, _: &mut Ctx<'_>) -> Outbox<CheckpointMsg> {
        let sends = if round <= self.gossip_rounds() {
            self.gossip.send_step(round).into_iter().map(|(to, m)| (to, CheckpointMsg::Gossip(m))).collect()
        } else {
            let fc = self.consensus.as_mut().expect("consensus starts after gossip");
            fc.send_step(round).into_iter().map(|(to, m)| (to, CheckpointMsg::Consensus(m))).collect()
        };
        Outbox { sends, poll: None }
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<CheckpointMsg>], _: &mut Ctx<'_>) -> Status<LaneValues> {
        if round <= self.gossip_rounds() {
            let msgs: Vec<(NodeId, &GossipMsg)> = inbox
                .iter()
                .filter_map(|e| match &e.payload {
                    CheckpointMsg::Gossip(m) => Some((e.sender, &m.msg)),
                    CheckpointMsg::Consensus(_) => None,
                })
                .collect();
            self.gossip.receive_step(round, &msgs);
            if round == self.gossip_rounds() {
                let inputs = self.gossip.extant.present().clone();
                self.consensus = Some(FewCrashes::new(self.fc_plan.clone(), self.gossip.id, inputs, None));
            }
            return Status::Running;
        }
        let msgs: Vec<(NodeId, &FcMsg)> = inbox
            .iter()
            .filter_map(|e| match &e.payload {
                CheckpointMsg::Consensus(m) => Some((e.sender, &m.msg)),
                CheckpointMsg::Gossip(_) => None,
            })
            .collect();
        let fc = self.consensus.as_mut().expect("consensus starts after gossip");
        fc.receive_step(round, &msgs)
    }

    fn part(&self, round: Round) -> &'static str {
        if round <= self.gossip_rounds() {
            self.gossip.label(round)
        } else {
            self.fc_plan.label(round)
        }
    }
}
