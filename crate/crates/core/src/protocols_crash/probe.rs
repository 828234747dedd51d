//! Local probing: a `gamma`-round flood in which a node receiving fewer than
//! `delta` messages in a round pauses for the rest of the instance.

use std::sync::Arc;

use crate::overlay::OverlayGraph;
use crate::simnet::{Ctx, Envelope, NodeProgram, Outbox, Round, Status};

use super::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ProbeState {
    pub rounds_done: u64,
    pub paused: bool,
    /// Set when the instance completes without pausing.
    pub survived: bool,
}

impl ProbeState {
    /// Whether the node sends in the current probing round.
    pub fn sending(&self) -> bool {
        !self.paused
    }

    /// Accounts one probing round in which `received` messages arrived.
    pub fn record(&mut self, received: usize, delta: f64, gamma: u64) {
        if (received as f64) < delta {
            self.paused = true;
        }
        self.rounds_done += 1;
        if self.rounds_done == gamma {
            self.survived = !self.paused;
        }
    }
}

#[derive(Debug)]
struct ProbeSetup {
    graph: OverlayGraph,
    gamma: u64,
    delta: f64,
}

/// A node running one standalone probing instance with an OR-merged bit.
#[derive(Debug, Clone)]
pub struct ProbeNode {
    setup: Arc<ProbeSetup>,
    id: usize,
    pub rumor: bool,
    pub state: ProbeState,
}

/// One probing program per vertex of `graph`.
pub fn local_probe_programs(
    graph: OverlayGraph,
    gamma: u64,
    delta: f64,
    rumors: &[bool],
) -> Result<Vec<ProbeNode>, ConfigError> {
    if gamma == 0 {
        return Err(ConfigError::Precondition("gamma >= 1 required".into()));
    }
    if delta > graph.degree() as f64 {
        return Err(ConfigError::Precondition(format!(
            "delta {delta} exceeds the graph degree {}",
            graph.degree()
        )));
    }
    let n = graph.node_count();
    let setup = Arc::new(ProbeSetup { graph, gamma, delta });
    Ok((0..n)
        .map(|id| ProbeNode {
            setup: setup.clone(),
            id,
            rumor: rumors.get(id).copied().unwrap_or(false),
            state: ProbeState::default(),
        })
        .collect())
}

impl NodeProgram for ProbeNode {
    type Msg = bool;
    type Output = bool;

    fn on_send(&mut self, _: Round, _: &mut Ctx<'_>) -> Outbox<bool> {
        let mut out = Outbox::new();
        if self.state.sending() {
            for &w in self.setup.graph.neighbors(self.id) {
                out.send(w, self.rumor);
            }
        }
        out
    }

    fn on_receive(&mut self, _: Round, inbox: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<bool> {
        self.rumor |= inbox.iter().any(|e| e.payload);
        self.state.record(inbox.len(), self.setup.delta, self.setup.gamma);
        if self.state.rounds_done == self.setup.gamma {
            Status::Halted(Some(self.state.survived))
        } else {
            Status::Running
        }
    }

    fn part(&self, _: Round) -> &'static str {
        "probing"
    }
}
