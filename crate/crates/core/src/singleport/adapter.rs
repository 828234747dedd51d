use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::protocols_crash::{FcMsg, FewCrashes, Gossip, GossipPayload, LaneValues, Links, ExtantSet, Sized};
use crate::simnet::{digest_of, Ctx, Envelope, NodeId, NodeProgram, Outbox, Payload, Round, Status};

use super::coloring::{edge_coloring, EdgeColoring};

/// A protocol written in mp-rounds whose messages travel on known link sets.
pub trait MpProtocol: Clone {
    type Msg: Payload + Clone;
    type Output: Clone + PartialEq + fmt::Display;

    fn mp_rounds(&self) -> Round;
    fn links(&self, round: Round) -> Links;
    fn link_edges(&self, links: Links) -> Vec<(NodeId, NodeId)>;
    fn mp_send(&mut self, round: Round) -> Vec<(NodeId, Self::Msg)>;
    fn mp_receive(&mut self, round: Round, inbox: &[(NodeId, &Self::Msg)]) -> Status<Self::Output>;
    fn mp_label(&self, round: Round) -> &'static str;
    fn state_digest(&self) -> u64;
}

impl MpProtocol for FewCrashes {
    type Msg = Sized<FcMsg>;
    type Output = LaneValues;

    fn mp_rounds(&self) -> Round {
        self.plan().last_round()
    }
    fn links(&self, round: Round) -> Links {
        self.plan().links(round)
    }
    fn link_edges(&self, links: Links) -> Vec<(NodeId, NodeId)> {
        self.plan().link_edges(links)
    }
    fn mp_send(&mut self, round: Round) -> Vec<(NodeId, Self::Msg)> {
        self.send_step(round)
    }
    fn mp_receive(&mut self, round: Round, inbox: &[(NodeId, &Self::Msg)]) -> Status<LaneValues> {
        let msgs: Vec<(NodeId, &FcMsg)> = inbox.iter().map(|&(s, m)| (s, &m.msg)).collect();
        self.receive_step(round, &msgs)
    }
    fn mp_label(&self, round: Round) -> &'static str {
        self.plan().label(round)
    }
    fn state_digest(&self) -> u64 {
        FewCrashes::state_digest(self)
    }
}

impl MpProtocol for Gossip {
    type Msg = GossipPayload;
    type Output = ExtantSet;

    fn mp_rounds(&self) -> Round {
        self.plan().total_rounds()
    }
    fn links(&self, round: Round) -> Links {
        self.plan().links(round)
    }
    fn link_edges(&self, links: Links) -> Vec<(NodeId, NodeId)> {
        self.plan().link_edges(links)
    }
    fn mp_send(&mut self, round: Round) -> Vec<(NodeId, Self::Msg)> {
        self.send_step(round)
    }
    fn mp_receive(&mut self, round: Round, inbox: &[(NodeId, &Self::Msg)]) -> Status<ExtantSet> {
        let msgs: Vec<_> = inbox.iter().map(|&(s, m)| (s, &m.msg)).collect();
        self.receive_step(round, &msgs)
    }
    fn mp_label(&self, round: Round) -> &'static str {
        self.label(round)
    }
    fn state_digest(&self) -> u64 {
        Gossip::state_digest(self)
    }
}

/// The sp-rounds implementing one mp-round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub mp_round: Round,
    /// First sp-round of the window (1-based).
    pub first: Round,
    pub len: u64,
    #[serde(skip)]
    pub links: Links,
}

/// Per mp-round windows and the edge colorings they follow.
#[derive(Debug)]
pub struct SpSchedule {
    n: usize,
    windows: Vec<Window>,
    colorings: HashMap<Links, EdgeColoring>,
}

#[derive(Serialize)]
struct ActionRow {
    sp_round: Round,
    mp_round: Round,
    node: NodeId,
    send_to: Option<NodeId>,
    poll_from: Option<NodeId>,
    compute: bool,
}

impl SpSchedule {
    /// Builds the schedule for the protocol run by `program` on `n` nodes.
    pub fn build<P: MpProtocol>(n: usize, program: &P) -> Self {
        let mut colorings: HashMap<Links, EdgeColoring> = HashMap::new();
        let mut windows = Vec::new();
        let mut first = 1;
        for mp_round in 1..=program.mp_rounds() {
            let links = program.links(mp_round);
            let coloring = colorings.entry(links).or_insert_with(|| edge_coloring(n, program.link_edges(links)));
            let len = coloring.colors().max(1) as u64;
            windows.push(Window { mp_round, first, len, links });
            first += len;
        }
        Self { n, windows, colorings }
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn total_sp_rounds(&self) -> Round {
        self.windows.last().map_or(0, |w| w.first + w.len - 1)
    }

    /// The window containing `sp_round`, with the offset inside it.
    pub fn locate(&self, sp_round: Round) -> Option<(&Window, u64)> {
        let i = self.windows.partition_point(|w| w.first + w.len <= sp_round);
        let w = self.windows.get(i)?;
        (sp_round >= w.first).then(|| (w, sp_round - w.first))
    }

    pub fn coloring(&self, links: Links) -> &EdgeColoring {
        &self.colorings[&links]
    }

    /// Partner of `node` in sp-round `sp_round`: the only node it may send to or poll.
    pub fn partner(&self, node: NodeId, sp_round: Round) -> Option<NodeId> {
        let (w, k) = self.locate(sp_round)?;
        self.colorings[&w.links].partner(node, k as usize)
    }

    /// Writes one row per (sp-round, node) for the given nodes.
    pub fn write_csv<W: Write>(&self, out: W, nodes: &[NodeId]) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for win in &self.windows {
            for k in 0..win.len {
                for &node in nodes.iter().filter(|&&v| v < self.n) {
                    let partner = self.colorings[&win.links].partner(node, k as usize);
                    w.serialize(ActionRow {
                        sp_round: win.first + k,
                        mp_round: win.mp_round,
                        node,
                        send_to: partner,
                        poll_from: partner,
                        compute: k + 1 == win.len,
                    })?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs an [`MpProtocol`] under the single-port rule.
#[derive(Debug, Clone)]
pub struct SinglePort<P: MpProtocol> {
    pub inner: P,
    id: NodeId,
    schedule: Arc<SpSchedule>,
    outgoing: Vec<(NodeId, P::Msg)>,
    incoming: Vec<(NodeId, P::Msg)>,
}

impl<P: MpProtocol> SinglePort<P> {
    pub fn wrap(programs: Vec<P>, schedule: &Arc<SpSchedule>) -> Vec<Self> {
        programs
            .into_iter()
            .enumerate()
            .map(|(id, inner)| Self { inner, id, schedule: schedule.clone(), outgoing: Vec::new(), incoming: Vec::new() })
            .collect()
    }

    pub fn schedule(&self) -> &Arc<SpSchedule> {
        &self.schedule
    }

    pub fn state_digest(&self) -> u64 {
        let senders: Vec<NodeId> = self.incoming.iter().map(|&(s, _)| s).collect();
        let targets: Vec<NodeId> = self.outgoing.iter().map(|&(s, _)| s).collect();
        digest_of(&(self.inner.state_digest(), senders, targets))
    }
}

impl<P: MpProtocol> NodeProgram for SinglePort<P> {
    type Msg = P::Msg;
    type Output = P::Output;

    fn on_send(&mut self, sp_round: Round, _: &mut Ctx<'_>) -> Outbox<P::Msg> {
        let schedule = self.schedule.clone();
        let Some((w, k)) = schedule.locate(sp_round) else {
            return Outbox::new();
        };
        let coloring = schedule.coloring(w.links);
        if k == 0 {
            self.outgoing = self.inner.mp_send(w.mp_round);
            for &(to, _) in &self.outgoing {
                assert!(
                    coloring.color_of(self.id, to).is_some(),
                    "mp-round {} sends {} -> {to} off its link set",
                    w.mp_round,
                    self.id
                );
            }
        }
        let partner = coloring.partner(self.id, k as usize);
        let mut out = Outbox::new().with_poll(partner);
        if let Some(p) = partner {
            if let Some(i) = self.outgoing.iter().position(|&(to, _)| to == p) {
                let (to, msg) = self.outgoing.swap_remove(i);
                out.send(to, msg);
            }
        }
        out
    }

    fn on_receive(&mut self, sp_round: Round, inbox: &[Envelope<P::Msg>], _: &mut Ctx<'_>) -> Status<P::Output> {
        let schedule = self.schedule.clone();
        let Some((w, k)) = schedule.locate(sp_round) else {
            return Status::Halted(None);
        };
        self.incoming.extend(inbox.iter().map(|e| (e.sender, e.payload.clone())));
        if k + 1 < w.len {
            return Status::Running;
        }
        debug_assert!(self.outgoing.is_empty(), "unsent messages at the end of a window");
        let mut incoming = std::mem::take(&mut self.incoming);
        incoming.sort_by_key(|&(s, _)| s);
        let refs: Vec<(NodeId, &P::Msg)> = incoming.iter().map(|(s, m)| (*s, m)).collect();
        self.inner.mp_receive(w.mp_round, &refs)
    }

    fn part(&self, sp_round: Round) -> &'static str {
        self.schedule.locate(sp_round).map_or("idle", |(w, _)| self.inner.mp_label(w.mp_round))
    }
}
