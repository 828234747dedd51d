use serde::Serialize;

use crate::protocols_crash::{GraphMode, ProtocolConfig};
use crate::simnet::{run, AdversarySchedule, CrashStrategy, NodeId, NodeProgram, Round, RunConfig, SimError};

use super::linear::singleport_gossip;
use super::SpError;

/// Outcome of running the port-isolating adversary against single-port gossip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub t: usize,
    pub victim: NodeId,
    /// Crash tolerance the gossip instance was built for.
    pub protocol_t: usize,
    pub halt_round: Option<Round>,
    /// `floor(t / 2)`.
    pub bound: Round,
    pub max_crashes_per_round: usize,
    pub total_crashes: usize,
}

impl LowerBoundReport {
    pub fn holds(&self) -> bool {
        self.halt_round.is_some_and(|r| r >= self.bound)
    }
}

/// Runs single-port gossip (built for the largest tolerance below `n/5`)
/// against the port isolator with budget `t` aimed at `victim`.
pub fn gossip_lower_bound_experiment(n: usize, t: usize, victim: NodeId, seed: u64) -> Result<LowerBoundReport, SpError> {
    let protocol_t = n.div_ceil(5).saturating_sub(1).max(1);
    let cfg = ProtocolConfig::new(n, protocol_t).with_mode(GraphMode::scaled()).with_graph_seed(seed);
    let gossip = singleport_gossip(&cfg)?;
    let programs = gossip.programs(&(0..n as u64).collect::<Vec<_>>())?;
    let adversary = AdversarySchedule::adaptive(t, CrashStrategy::PortIsolator { target: victim });
    let config = RunConfig::singleport(n, seed).with_max_rounds(gossip.schedule.total_sp_rounds() + 1);
    let out = run(programs, &adversary, &config)?;
    let mut per_round = std::collections::BTreeMap::<Round, usize>::new();
    for r in out.crash_round.iter().flatten() {
        *per_round.entry(*r).or_default() += 1;
    }
    Ok(LowerBoundReport {
        n,
        t,
        victim,
        protocol_t,
        halt_round: out.halt_round[victim],
        bound: (t / 2) as Round,
        max_crashes_per_round: per_round.values().copied().max().unwrap_or(0),
        total_crashes: per_round.values().sum(),
    })
}

/// Nodes whose states differ between two crash-free runs after each round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InfluenceRow {
    pub round: Round,
    pub divergent: usize,
    /// `3^round`: the most nodes a single-port run can have influenced.
    pub bound: u64,
}

/// Runs `a` and `b` (typically inputs differing at one node) for
/// `0..=rounds` rounds and counts nodes in different states. Diagnostic
/// only: a count above the bound signals a single-port violation.
pub fn influence_profile<P: NodeProgram>(
    a: Vec<P>,
    b: Vec<P>,
    rounds: Round,
    config: &RunConfig,
    digest: impl Fn(&P) -> u64,
) -> Result<Vec<InfluenceRow>, SimError> {
    let n = a.len();
    let diverge = |x: &[P], y: &[P]| x.iter().zip(y).filter(|(p, q)| digest(p) != digest(q)).count();
    let mut rows = vec![InfluenceRow { round: 0, divergent: diverge(&a, &b), bound: 1 }];
    let none = AdversarySchedule::none(0);
    for r in 1..=rounds {
        let cfg = config.clone().with_stop_after(r);
        let x = run(a.clone(), &none, &cfg)?;
        let y = run(b.clone(), &none, &cfg)?;
        rows.push(InfluenceRow {
            round: r,
            divergent: diverge(&x.programs, &y.programs),
            bound: 3u64.saturating_pow(r as u32).min(n as u64),
        });
    }
    Ok(rows)
}
