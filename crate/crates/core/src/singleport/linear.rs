use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::overlay::{build_gi_graph, ceil_log2, GiMode, OverlayGraph};
use crate::protocols_crash::{gossip_with_plan, ConfigError, FcPlan, FewCrashes, Gossip, GossipPlan, ProtocolConfig, Stages};

use super::adapter::{SinglePort, SpSchedule};

/// Consensus for few crashes laid out for single-port execution.
#[derive(Debug, Clone)]
pub struct LinearPlan {
    pub fc: Arc<FcPlan>,
    pub schedule: Arc<SpSchedule>,
}

/// Inquiry phase graphs, stopping at the first one whose degree exceeds `3t`.
fn inquiry_graphs(cfg: &ProtocolConfig) -> Vec<OverlayGraph> {
    let mut graphs = Vec::new();
    for i in 1..=ceil_log2(cfg.n).max(1) as u32 + 1 {
        let g = build_gi_graph(cfg.n, i, GiMode::Scv, crate::seed::mix(cfg.graph_seed, 3)).base;
        let done = g.min_degree() > 3 * cfg.t || g.is_complete();
        graphs.push(g);
        if done {
            break;
        }
    }
    graphs
}

pub fn linear_consensus_plan(cfg: &ProtocolConfig) -> Result<LinearPlan, ConfigError> {
    let fc = Arc::new(FcPlan::new(cfg, 1, Stages::Full, 0)?.with_phase_graphs(inquiry_graphs(cfg)));
    let probe = FewCrashes::new(fc.clone(), 0, FixedBitSet::with_capacity(1), None);
    let schedule = Arc::new(SpSchedule::build(cfg.n, &probe));
    Ok(LinearPlan { fc, schedule })
}

fn single(bit: bool) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(1);
    b.set(0, bit);
    b
}

impl LinearPlan {
    /// The same protocol in mp-rounds, for multi-port comparison runs.
    pub fn multiport_programs(&self, inputs: &[bool]) -> Result<Vec<FewCrashes>, ConfigError> {
        if inputs.len() != self.fc.n {
            return Err(ConfigError::Precondition(format!("{} inputs for {} nodes", inputs.len(), self.fc.n)));
        }
        Ok(inputs.iter().enumerate().map(|(i, &b)| FewCrashes::new(self.fc.clone(), i, single(b), None)).collect())
    }

    pub fn programs(&self, inputs: &[bool]) -> Result<Vec<SinglePort<FewCrashes>>, ConfigError> {
        Ok(SinglePort::wrap(self.multiport_programs(inputs)?, &self.schedule))
    }

    pub fn sp_rounds(&self) -> u64 {
        self.schedule.total_sp_rounds()
    }
}

/// Gossip laid out for single-port execution.
#[derive(Debug, Clone)]
pub struct SpGossip {
    pub plan: Arc<GossipPlan>,
    pub schedule: Arc<SpSchedule>,
}

pub fn singleport_gossip(cfg: &ProtocolConfig) -> Result<SpGossip, ConfigError> {
    let plan = Arc::new(GossipPlan::new(cfg, 64)?);
    let probe: Vec<Gossip> = gossip_with_plan(&plan, &vec![0; cfg.n])?;
    let schedule = Arc::new(SpSchedule::build(cfg.n, &probe[0]));
    Ok(SpGossip { plan, schedule })
}

impl SpGossip {
    pub fn programs(&self, rumors: &[u64]) -> Result<Vec<SinglePort<Gossip>>, ConfigError> {
        Ok(SinglePort::wrap(gossip_with_plan(&self.plan, rumors)?, &self.schedule))
    }
}
