//! Almost-everywhere agreement, spreading a common value, and their
//! composition into consensus for `t < n/5`.
//!
//! The state machine runs `lanes` independent binary instances in lock step.
//! Consensus uses one lane; checkpointing uses one lane per node and so gets
//! the per-pair message combining for free.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::overlay::{build_gi_graph, ceil_log2, GiMode, OverlayGraph};
use crate::simnet::{Ctx, Envelope, NodeId, NodeProgram, Outbox, Payload, Round, Status};

use super::config::ProbeGraph;
use super::lanes::{LaneBits, LaneValues};
use super::probe::ProbeState;
use super::{is_little, little_count, related_nodes, ConfigError, Links, ProtocolConfig};

/// Which parts of the composition to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stages {
    /// Almost-everywhere agreement followed by spreading the common value.
    Full,
    AeaOnly,
    ScvOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FcMsg {
    Rumor(LaneBits),
    Probe(LaneBits),
    Notify(LaneBits),
    Common(LaneBits),
    Inquiry(FixedBitSet),
    Response(LaneBits),
}

#[derive(Debug, Clone)]
pub struct Sized<M> {
    pub msg: M,
    header: u64,
}

impl Payload for Sized<FcMsg> {
    fn bit_size(&self) -> u64 {
        match &self.msg {
            FcMsg::Rumor(b) | FcMsg::Probe(b) | FcMsg::Notify(b) | FcMsg::Common(b) | FcMsg::Response(b) => {
                b.bit_size(self.header)
            }
            FcMsg::Inquiry(mask) if mask.len() == 1 => 1,
            FcMsg::Inquiry(mask) => mask.count_ones(..) as u64 + self.header,
        }
    }
}

/// Round-level position inside the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    Broadcast(u64),
    Probe(u64),
    Notify,
    Flood(u64),
    Inquire(usize),
    Respond(usize),
    After,
}

/// Everything the nodes share: parameters, overlays and the round layout.
#[derive(Debug)]
pub struct FcPlan {
    pub n: usize,
    pub t: usize,
    pub little: usize,
    pub lanes: usize,
    pub stages: Stages,
    /// Rounds before the first round of this protocol.
    pub offset: Round,
    pub probe: ProbeGraph,
    pub flood: OverlayGraph,
    /// Inquiry graphs; empty when `t^2 <= n` (inquiries go to every little node).
    pub phase_graphs: Vec<OverlayGraph>,
    pub broadcast_rounds: u64,
    pub flood_rounds: u64,
    header: u64,
}

/// `max(1, ceil(log_{3/2}((2n/5) / max(t, n/t))))`.
pub fn scv_flood_rounds(n: usize, t: usize) -> u64 {
    if t == 0 {
        return 1;
    }
    let denom = (t as f64).max(n as f64 / t as f64);
    let ratio = (2.0 * n as f64 / 5.0) / denom;
    if ratio <= 1.0 {
        1
    } else {
        (ratio.ln() / 1.5f64.ln()).ceil().max(1.0) as u64
    }
}

impl FcPlan {
    pub fn new(cfg: &ProtocolConfig, lanes: usize, stages: Stages, offset: Round) -> Result<Self, ConfigError> {
        if stages == Stages::ScvOnly {
            if 5 * cfg.t >= cfg.n {
                return Err(ConfigError::Precondition("t < n/5 required".into()));
            }
        } else {
            cfg.require_few()?;
        }
        let (n, t) = (cfg.n, cfg.t);
        let little = little_count(t);
        let probe = if little > 0 {
            cfg.probe_graph(little, 5f64.powi(8), t, 1)?
        } else {
            ProbeGraph { graph: OverlayGraph::complete(0), delta: 0.0, gamma: 0 }
        };
        let flood = cfg.flood_graph(2)?;
        let phase_graphs = if t * t <= n {
            Vec::new()
        } else {
            (1..=ceil_log2(t + 1) as u32)
                .map(|i| build_gi_graph(n, i, GiMode::Scv, crate::seed::mix(cfg.graph_seed, 3)).base)
                .collect()
        };
        let aea = stages != Stages::ScvOnly;
        Ok(Self {
            n,
            t,
            little,
            lanes,
            stages,
            offset,
            broadcast_rounds: if aea { little as u64 - 1 } else { 0 },
            flood_rounds: scv_flood_rounds(n, t),
            probe,
            flood,
            phase_graphs,
            header: if lanes > 1 { ceil_log2(n) as u64 } else { 0 },
        })
    }

    fn gamma(&self) -> u64 {
        if self.stages == Stages::ScvOnly { 0 } else { self.probe.gamma }
    }

    fn aea_rounds(&self) -> u64 {
        if self.stages == Stages::ScvOnly { 0 } else { self.broadcast_rounds + self.gamma() + 1 }
    }

    fn inquiry_phases(&self) -> usize {
        self.phase_graphs.len().max(1)
    }

    fn scv_rounds(&self) -> u64 {
        if self.stages == Stages::AeaOnly {
            0
        } else {
            self.flood_rounds + 2 * self.inquiry_phases() as u64
        }
    }

    /// Number of rounds the protocol occupies.
    pub fn total_rounds(&self) -> u64 {
        self.aea_rounds() + self.scv_rounds()
    }

    pub(crate) fn step(&self, round: Round) -> Step {
        if round <= self.offset {
            return Step::After;
        }
        let mut k = round - self.offset;
        if self.stages != Stages::ScvOnly {
            if k <= self.broadcast_rounds {
                return Step::Broadcast(k);
            }
            k -= self.broadcast_rounds;
            if k <= self.gamma() {
                return Step::Probe(k);
            }
            k -= self.gamma();
            if k == 1 {
                return Step::Notify;
            }
            k -= 1;
        }
        if self.stages == Stages::AeaOnly {
            return Step::After;
        }
        if k <= self.flood_rounds {
            return Step::Flood(k);
        }
        k -= self.flood_rounds;
        let phase = k.div_ceil(2) as usize;
        if phase > self.inquiry_phases() {
            Step::After
        } else if k % 2 == 1 {
            Step::Inquire(phase)
        } else {
            Step::Respond(phase)
        }
    }

    pub fn label(&self, round: Round) -> &'static str {
        match self.step(round) {
            Step::Broadcast(_) => "aea-broadcast",
            Step::Probe(_) => "aea-probing",
            Step::Notify => "aea-notify",
            Step::Flood(_) => "scv-flood",
            Step::Inquire(_) | Step::Respond(_) => "scv-inquiry",
            Step::After => "idle",
        }
    }

    /// Nodes `node` inquires in `phase`.
    pub(crate) fn inquiry_targets(&self, node: NodeId, phase: usize) -> Vec<NodeId> {
        if self.phase_graphs.is_empty() {
            (0..self.little).filter(|&j| j != node).collect()
        } else {
            self.phase_graphs[phase - 1].neighbors(node).to_vec()
        }
    }

    pub fn last_round(&self) -> Round {
        self.offset + self.total_rounds()
    }

    /// Replaces the inquiry phase graphs.
    pub(crate) fn with_phase_graphs(mut self, graphs: Vec<OverlayGraph>) -> Self {
        self.phase_graphs = graphs;
        self
    }

    pub(crate) fn links(&self, round: Round) -> Links {
        match self.step(round) {
            Step::Broadcast(_) | Step::Probe(_) => Links::Little,
            Step::Notify => Links::Related,
            Step::Flood(_) => Links::Flood,
            Step::Inquire(i) | Step::Respond(i) if !self.phase_graphs.is_empty() => Links::Phase(i),
            Step::Inquire(_) | Step::Respond(_) => Links::ToLittle,
            Step::After => Links::Idle,
        }
    }

    pub(crate) fn link_edges(&self, links: Links) -> Vec<(NodeId, NodeId)> {
        match links {
            Links::Little => self.probe.graph.edges().collect(),
            Links::Related => (0..self.little).flat_map(|i| related_nodes(i, self.n, self.t).map(move |j| (i, j))).collect(),
            Links::Flood => self.flood.edges().collect(),
            Links::ToLittle => (0..self.little).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).collect(),
            Links::Phase(i) => self.phase_graphs[i - 1].edges().collect(),
            Links::Idle => Vec::new(),
        }
    }
}

/// Node state for one or more lock-step instances.
#[derive(Debug, Clone)]
pub struct FewCrashes {
    plan: Arc<FcPlan>,
    id: NodeId,
    /// AEA candidate decision per lane.
    pub candidate: FixedBitSet,
    fresh: FixedBitSet,
    pub probe: ProbeState,
    /// Decided in AEA (survived probing, or notified by the related little node).
    pub aea_decided: bool,
    /// Candidate changed 0 -> 1 during probing, in some lane.
    pub flipped_in_probing: bool,
    pub common_has: FixedBitSet,
    pub common_val: FixedBitSet,
    scv_fresh: FixedBitSet,
    pending: Vec<(NodeId, FixedBitSet)>,
    /// Undecided lanes at the start of SCV inquiries (diagnostic).
    pub undecided_after_flood: bool,
}

fn full(lanes: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(lanes);
    b.insert_range(..);
    b
}

fn minus(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
    let mut d = a.clone();
    d.difference_with(b);
    d
}

impl FewCrashes {
    pub(crate) fn new(plan: Arc<FcPlan>, id: NodeId, inputs: FixedBitSet, common: Option<(FixedBitSet, FixedBitSet)>) -> Self {
        let lanes = plan.lanes;
        let (common_has, common_val) = common.unwrap_or_else(|| (FixedBitSet::with_capacity(lanes), FixedBitSet::with_capacity(lanes)));
        Self {
            id,
            candidate: inputs,
            fresh: FixedBitSet::with_capacity(lanes),
            probe: ProbeState::default(),
            aea_decided: false,
            flipped_in_probing: false,
            scv_fresh: FixedBitSet::with_capacity(lanes),
            pending: Vec::new(),
            undecided_after_flood: false,
            common_has,
            common_val,
            plan,
        }
    }

    pub fn plan(&self) -> &Arc<FcPlan> {
        &self.plan
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    fn little(&self) -> bool {
        is_little(self.id, self.plan.t)
    }

    fn wrap(&self, msg: FcMsg) -> Sized<FcMsg> {
        Sized { msg, header: self.plan.header }
    }

    fn complete(&self) -> bool {
        self.common_has.count_ones(..) == self.plan.lanes
    }

    /// Decision vector once every lane has a common value.
    pub fn decision(&self) -> Option<LaneValues> {
        self.complete().then(|| LaneValues(self.common_val.clone()))
    }

    /// The AEA outcome, if this node decided in AEA.
    pub fn aea_decision(&self) -> Option<LaneValues> {
        self.aea_decided.then(|| LaneValues(self.candidate.clone()))
    }

    pub(crate) fn send_step(&mut self, round: Round) -> Vec<(NodeId, Sized<FcMsg>)> {
        let plan = self.plan.clone();
        let lanes = plan.lanes;
        let mut out = Vec::new();
        let to_all = |targets: &[NodeId], msg: FcMsg, me: &Self, out: &mut Vec<(NodeId, Sized<FcMsg>)>| {
            for &w in targets {
                out.push((w, me.wrap(msg.clone())));
            }
        };
        match plan.step(round) {
            Step::Broadcast(k) if self.little() => {
                let lanesend = if k == 1 { self.candidate.clone() } else { std::mem::replace(&mut self.fresh, FixedBitSet::with_capacity(lanes)) };
                if lanesend.count_ones(..) > 0 {
                    let msg = FcMsg::Rumor(LaneBits::new(lanesend.clone(), lanesend));
                    to_all(plan.probe.graph.neighbors(self.id), msg, self, &mut out);
                }
            }
            Step::Probe(_) if self.little() && self.probe.sending() => {
                let msg = FcMsg::Probe(LaneBits::new(full(lanes), self.candidate.clone()));
                to_all(plan.probe.graph.neighbors(self.id), msg, self, &mut out);
            }
            Step::Notify if self.little() && self.aea_decided => {
                let msg = FcMsg::Notify(LaneBits::new(full(lanes), self.candidate.clone()));
                let targets: Vec<NodeId> = related_nodes(self.id, plan.n, plan.t).collect();
                to_all(&targets, msg, self, &mut out);
            }
            Step::Flood(k) => {
                let lanesend = if k == 1 { self.common_has.clone() } else { std::mem::replace(&mut self.scv_fresh, FixedBitSet::with_capacity(lanes)) };
                if lanesend.count_ones(..) > 0 {
                    let mut values = self.common_val.clone();
                    values.intersect_with(&lanesend);
                    to_all(plan.flood.neighbors(self.id), FcMsg::Common(LaneBits::new(lanesend, values)), self, &mut out);
                }
            }
            Step::Inquire(phase) => {
                let missing = minus(&full(lanes), &self.common_has);
                if missing.count_ones(..) > 0 {
                    to_all(&plan.inquiry_targets(self.id, phase), FcMsg::Inquiry(missing), self, &mut out);
                }
            }
            Step::Respond(_) => {
                for (inquirer, mut asked) in std::mem::take(&mut self.pending) {
                    asked.intersect_with(&self.common_has);
                    if asked.count_ones(..) > 0 {
                        let mut values = self.common_val.clone();
                        values.intersect_with(&asked);
                        out.push((inquirer, self.wrap(FcMsg::Response(LaneBits::new(asked, values)))));
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn adopt(&mut self, bits: &LaneBits) -> FixedBitSet {
        let new = minus(&bits.mask, &self.common_has);
        let mut values = bits.values.clone();
        values.intersect_with(&new);
        self.common_has.union_with(&new);
        self.common_val.union_with(&values);
        new
    }

    /// Fingerprint of the node's protocol state.
    pub(crate) fn state_digest(&self) -> u64 {
        crate::simnet::digest_of(&(
            &self.candidate,
            &self.fresh,
            self.probe,
            self.aea_decided,
            &self.common_has,
            &self.common_val,
            &self.scv_fresh,
            &self.pending,
        ))
    }

    pub(crate) fn receive_step(&mut self, round: Round, inbox: &[(NodeId, &FcMsg)]) -> Status<LaneValues> {
        let plan = self.plan.clone();
        let step = plan.step(round);
        match step {
            Step::Broadcast(_) => {
                for (_, msg) in inbox {
                    if let FcMsg::Rumor(bits) = msg {
                        let new = minus(&bits.mask, &self.candidate);
                        self.candidate.union_with(&new);
                        self.fresh.union_with(&new);
                    }
                }
            }
            Step::Probe(k) if self.little() => {
                let mut received = 0;
                for (_, msg) in inbox {
                    if let FcMsg::Probe(bits) = msg {
                        received += 1;
                        if !bits.values.is_subset(&self.candidate) {
                            self.flipped_in_probing = true;
                            self.candidate.union_with(&bits.values);
                        }
                    }
                }
                self.probe.record(received, plan.probe.delta, plan.probe.gamma);
                if k == plan.probe.gamma && self.probe.survived {
                    self.aea_decided = true;
                }
            }
            Step::Notify => {
                if !self.little() {
                    if let Some((_, FcMsg::Notify(bits))) = inbox.iter().find(|(_, m)| matches!(m, FcMsg::Notify(_))) {
                        self.candidate = bits.values.clone();
                        self.aea_decided = true;
                    }
                }
                if plan.stages == Stages::AeaOnly {
                    return Status::Halted(self.aea_decision());
                }
                if self.aea_decided {
                    self.common_has = full(plan.lanes);
                    self.common_val = self.candidate.clone();
                }
            }
            Step::Flood(k) => {
                for (_, msg) in inbox {
                    if let FcMsg::Common(bits) = msg {
                        let new = self.adopt(bits);
                        self.scv_fresh.union_with(&new);
                    }
                }
                if k == plan.flood_rounds {
                    self.undecided_after_flood = !self.complete();
                }
            }
            Step::Inquire(_) => {
                for (sender, msg) in inbox {
                    if let FcMsg::Inquiry(mask) = msg {
                        self.pending.push((*sender, mask.clone()));
                    }
                }
            }
            Step::Respond(_) => {
                for (_, msg) in inbox {
                    if let FcMsg::Response(bits) = msg {
                        self.adopt(bits);
                    }
                }
            }
            _ => {}
        }
        if round >= plan.last_round() {
            return Status::Halted(self.decision());
        }
        match self.decision() {
            Some(d) if plan.stages != Stages::AeaOnly => Status::Decided(d),
            _ => Status::Running,
        }
    }
}

impl NodeProgram for FewCrashes {
    type Msg = Sized<FcMsg>;
    type Output = LaneValues;

    fn on_send(&mut self, round: Round, _: &mut Ctx<'_>) -> Outbox<Self::Msg> {
        Outbox { sends: self.send_step(round), poll: None }
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<Self::Msg>], _: &mut Ctx<'_>) -> Status<LaneValues> {
        let msgs: Vec<(NodeId, &FcMsg)> = inbox.iter().map(|e| (e.sender, &e.payload.msg)).collect();
        self.receive_step(round, &msgs)
    }

    fn part(&self, round: Round) -> &'static str {
        self.plan.label(round)
    }
}

fn single(bit: bool) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(1);
    b.set(0, bit);
    b
}

/// Consensus programs for `t < n/5`, one per node, with `inputs[i]` for node `i`.
pub fn few_crashes_programs(cfg: &ProtocolConfig, inputs: &[bool]) -> Result<Vec<FewCrashes>, ConfigError> {
    check_inputs(cfg, inputs)?;
    let plan = Arc::new(FcPlan::new(cfg, 1, Stages::Full, 0)?);
    Ok((0..cfg.n).map(|i| FewCrashes::new(plan.clone(), i, single(inputs[i]), None)).collect())
}

/// Consensus programs sharing a prebuilt single-lane plan.
pub fn few_crashes_with_plan(plan: &Arc<FcPlan>, inputs: &[bool]) -> Result<Vec<FewCrashes>, ConfigError> {
    if plan.lanes != 1 || inputs.len() != plan.n {
        return Err(ConfigError::Precondition(format!("{} inputs for a {}-lane plan on {} nodes", inputs.len(), plan.lanes, plan.n)));
    }
    Ok((0..plan.n).map(|i| FewCrashes::new(plan.clone(), i, single(inputs[i]), None)).collect())
}

/// Almost-everywhere agreement alone; undecided nodes halt without a decision.
pub fn aea_programs(cfg: &ProtocolConfig, inputs: &[bool]) -> Result<Vec<FewCrashes>, ConfigError> {
    check_inputs(cfg, inputs)?;
    let plan = Arc::new(FcPlan::new(cfg, 1, Stages::AeaOnly, 0)?);
    Ok((0..cfg.n).map(|i| FewCrashes::new(plan.clone(), i, single(inputs[i]), None)).collect())
}

/// Spreading a common value alone; `common[i]` is node `i`'s initial value or `None`.
pub fn scv_programs(cfg: &ProtocolConfig, common: &[Option<bool>]) -> Result<Vec<FewCrashes>, ConfigError> {
    if common.len() != cfg.n {
        return Err(ConfigError::Precondition(format!("{} initial values for {} nodes", common.len(), cfg.n)));
    }
    let plan = Arc::new(FcPlan::new(cfg, 1, Stages::ScvOnly, 0)?);
    Ok((0..cfg.n)
        .map(|i| {
            let c = common[i].map(|v| (single(true), single(v)));
            FewCrashes::new(plan.clone(), i, single(false), c)
        })
        .collect())
}

pub(crate) fn check_inputs(cfg: &ProtocolConfig, inputs: &[bool]) -> Result<(), ConfigError> {
    if inputs.len() != cfg.n {
        return Err(ConfigError::Precondition(format!("{} inputs for {} nodes", inputs.len(), cfg.n)));
    }
    Ok(())
}
