//! Consensus for up to `n - 1` crashes.

use std::sync::Arc;

use crate::overlay::{build_gi_graph, ceil_log2, GiMode, OverlayGraph};
use crate::simnet::{Ctx, Envelope, NodeId, NodeProgram, Outbox, Payload, Round, Status};

use super::config::ProbeGraph;
use super::few_crashes::check_inputs;
use super::probe::ProbeState;
use super::{ConfigError, ProtocolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMsg {
    Rumor(bool),
    Inquiry,
    Response(bool),
}

impl Payload for McMsg {
    fn bit_size(&self) -> u64 {
        1
    }
}

#[derive(Debug)]
pub struct McPlan {
    pub n: usize,
    pub t: usize,
    pub alpha: f64,
    pub probe: ProbeGraph,
    pub phase_graphs: Vec<OverlayGraph>,
}

impl McPlan {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self, ConfigError> {
        cfg.require_many()?;
        let (n, t) = (cfg.n, cfg.t);
        let alpha = t as f64 / n as f64;
        let degree = (4.0 / (1.0 - alpha)).powi(8);
        let mut probe = cfg.probe_graph(n, degree, t, 11)?;
        probe.gamma = 2 + ceil_log2(n) as u64;
        let m = (1.0 + 3.0 * alpha) * n as f64 / 4.0;
        let lg_m = if m <= 1.0 { 0 } else { m.log2().ceil() as u32 };
        let phase_graphs = (1..=1 + lg_m)
            .map(|i| build_gi_graph(n, i, GiMode::ManyCrashes { alpha }, crate::seed::mix(cfg.graph_seed, 12)).base)
            .collect();
        Ok(Self { n, t, alpha, probe, phase_graphs })
    }

    pub fn broadcast_rounds(&self) -> u64 {
        self.n as u64 - 1
    }

    pub fn total_rounds(&self) -> u64 {
        self.broadcast_rounds() + self.probe.gamma + 2 * self.phase_graphs.len() as u64
    }

    /// `n + 3 (1 + ceil(lg n))`.
    pub fn round_bound(&self) -> u64 {
        self.n as u64 + 3 * (1 + ceil_log2(self.n) as u64)
    }

    /// `(5 / (1 - alpha))^8 n ceil(lg n)`.
    pub fn message_bound(&self) -> f64 {
        (5.0 / (1.0 - self.alpha)).powi(8) * self.n as f64 * ceil_log2(self.n) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Broadcast(u64),
    Probe(u64),
    Inquire(usize),
    Respond(usize),
    After,
}

impl McPlan {
    fn step(&self, round: Round) -> Step {
        let b = self.broadcast_rounds();
        if round <= b {
            return Step::Broadcast(round);
        }
        let k = round - b;
        if k <= self.probe.gamma {
            return Step::Probe(k);
        }
        let k = k - self.probe.gamma;
        let phase = k.div_ceil(2) as usize;
        if phase > self.phase_graphs.len() {
            Step::After
        } else if k % 2 == 1 {
            Step::Inquire(phase)
        } else {
            Step::Respond(phase)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManyCrashes {
    plan: Arc<McPlan>,
    id: NodeId,
    pub rumor: bool,
    fresh: bool,
    pub probe: ProbeState,
    pub decided: Option<bool>,
    pending: Vec<NodeId>,
}

pub fn many_crashes_programs(cfg: &ProtocolConfig, inputs: &[bool]) -> Result<Vec<ManyCrashes>, ConfigError> {
    check_inputs(cfg, inputs)?;
    let plan = Arc::new(McPlan::new(cfg)?);
    Ok(many_crashes_with_plan(&plan, inputs))
}

/// Programs sharing an already built plan.
pub fn many_crashes_with_plan(plan: &Arc<McPlan>, inputs: &[bool]) -> Vec<ManyCrashes> {
    (0..plan.n)
        .map(|id| ManyCrashes {
            plan: plan.clone(),
            id,
            rumor: inputs[id],
            fresh: false,
            probe: ProbeState::default(),
            decided: None,
            pending: Vec::new(),
        })
        .collect()
}

impl ManyCrashes {
    pub fn plan(&self) -> &Arc<McPlan> {
        &self.plan
    }
}

impl NodeProgram for ManyCrashes {
    type Msg = McMsg;
    type Output = u8;

    fn on_send(&mut self, round: Round, _: &mut Ctx<'_>) -> Outbox<McMsg> {
        let plan = self.plan.clone();
        let mut out = Outbox::new();
        match plan.step(round) {
            Step::Broadcast(k) => {
                if (k == 1 && self.rumor) || std::mem::take(&mut self.fresh) {
                    for &w in plan.probe.graph.neighbors(self.id) {
                        out.send(w, McMsg::Rumor(true));
                    }
                }
            }
            Step::Probe(_) if self.probe.sending() => {
                for &w in plan.probe.graph.neighbors(self.id) {
                    out.send(w, McMsg::Rumor(self.rumor));
                }
            }
            Step::Inquire(phase) if self.decided.is_none() => {
                for &w in plan.phase_graphs[phase - 1].neighbors(self.id) {
                    out.send(w, McMsg::Inquiry);
                }
            }
            Step::Respond(_) => {
                if let Some(v) = self.decided {
                    for w in std::mem::take(&mut self.pending) {
                        out.send(w, McMsg::Response(v));
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn on_receive(&mut self, round: Round, inbox: &[Envelope<McMsg>], _: &mut Ctx<'_>) -> Status<u8> {
        let plan = self.plan.clone();
        match plan.step(round) {
            Step::Broadcast(_) => {
                if !self.rumor && inbox.iter().any(|e| e.payload == McMsg::Rumor(true)) {
                    self.rumor = true;
                    self.fresh = true;
                }
            }
            Step::Probe(k) => {
                self.rumor |= inbox.iter().any(|e| e.payload == McMsg::Rumor(true));
                self.probe.record(inbox.len(), plan.probe.delta, plan.probe.gamma);
                if k == plan.probe.gamma && self.probe.survived {
                    self.decided = Some(self.rumor);
                }
            }
            Step::Inquire(_) => {
                self.pending = inbox.iter().filter(|e| e.payload == McMsg::Inquiry).map(|e| e.sender).collect();
            }
            Step::Respond(_) => {
                if self.decided.is_none() {
                    self.decided = inbox.iter().find_map(|e| match e.payload {
                        McMsg::Response(v) => Some(v),
                        _ => None,
                    });
                }
            }
            Step::After => {}
        }
        let d = self.decided.map(u8::from);
        if round >= plan.total_rounds() {
            Status::Halted(d)
        } else {
            d.map_or(Status::Running, Status::Decided)
        }
    }

    fn part(&self, round: Round) -> &'static str {
        match self.plan.step(round) {
            Step::Broadcast(_) => "broadcast",
            Step::Probe(_) => "probing",
            Step::Inquire(_) | Step::Respond(_) => "inquiry",
            Step::After => "idle",
        }
    }
}
