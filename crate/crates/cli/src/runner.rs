//! Executes scenario repetitions and evaluates the hard invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use expanderquorum::protocols_auth::{ab_consensus_programs, dolev_strong_programs, AbConfig, AbConsensus, AbPlan};
use expanderquorum::protocols_crash::{
    checkpointing_with_plans, few_crashes_with_plan, gossip_with_plan, many_crashes_with_plan, ConfigError, FcPlan,
    GossipPlan, McPlan, ProtocolConfig, Stages,
};
use expanderquorum::seed;
use expanderquorum::simnet::{
    default_max_rounds, run, AdversarySchedule, ByzantineStrategy, NodeId, NodeProgram, Round, RunConfig,
    RunMetrics, RunOutcome, SimError,
};
use expanderquorum::singleport::{linear_consensus_plan, singleport_gossip, LinearPlan, SpGossip};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Values;
use crate::scenario::{byzantine_strategy, AdversarySpec, InputSpec, Port, Protocol, Scenario};
use crate::CliError;

// Seed streams derived from the per-repetition seed.
const INPUT_STREAM: u64 = 5;
const CRASH_STREAM: u64 = 6;
const BYZANTINE_STREAM: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

fn check(name: &str, pass: bool) -> Check {
    Check { name: name.to_string(), pass }
}

/// Everything recorded about one repetition. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub repetition: u64,
    /// `seed::mix(scenario.seed, repetition)`.
    pub seed: u64,
    /// `ok`, `round-limit`, or the engine error.
    pub status: String,
    pub faulty: usize,
    pub checks: Vec<Check>,
    pub metrics: RunMetrics,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// Plans shared by every repetition of a scenario.
pub enum Prepared {
    Few(Arc<FcPlan>),
    FewSingle(LinearPlan),
    Many(Arc<McPlan>),
    Gossip(Arc<GossipPlan>),
    GossipSingle(SpGossip),
    Checkpointing(Arc<GossipPlan>, Arc<FcPlan>),
    DolevStrong,
    Ab(AbConfig, Arc<AbPlan>),
}

fn precondition(e: ConfigError) -> CliError {
    match e {
        ConfigError::Precondition(rule) => CliError::Precondition(rule),
        other => CliError::Precondition(other.to_string()),
    }
}

impl Prepared {
    pub fn new(s: &Scenario) -> Result<Self, CliError> {
        s.validate()?;
        let cfg = ProtocolConfig::new(s.n, s.t).with_mode(s.graph.mode()).with_graph_seed(s.seed);
        Ok(match (s.protocol, s.port) {
            (Protocol::FewCrashes, Port::Multi) => {
                Prepared::Few(Arc::new(FcPlan::new(&cfg, 1, Stages::Full, 0).map_err(precondition)?))
            }
            (Protocol::FewCrashes, Port::Single) => Prepared::FewSingle(linear_consensus_plan(&cfg).map_err(precondition)?),
            (Protocol::ManyCrashes, _) => Prepared::Many(Arc::new(McPlan::new(&cfg).map_err(precondition)?)),
            (Protocol::Gossip, Port::Multi) => Prepared::Gossip(Arc::new(GossipPlan::new(&cfg, 64).map_err(precondition)?)),
            (Protocol::Gossip, Port::Single) => Prepared::GossipSingle(singleport_gossip(&cfg).map_err(precondition)?),
            (Protocol::Checkpointing, _) => {
                let gossip = Arc::new(GossipPlan::new(&cfg, 1).map_err(precondition)?);
                let fc = FcPlan::new(&cfg, s.n, Stages::Full, gossip.total_rounds()).map_err(precondition)?;
                Prepared::Checkpointing(gossip, Arc::new(fc))
            }
            (Protocol::DolevStrong, _) => Prepared::DolevStrong,
            (Protocol::AbConsensus, _) => {
                let ab = AbConfig::new(s.n, s.t).with_graph_seed(s.seed);
                let plan = Arc::new(AbPlan::new(&ab).map_err(precondition)?);
                Prepared::Ab(ab, plan)
            }
        })
    }

    /// Scheduled length in engine rounds.
    pub fn horizon(&self, s: &Scenario) -> Round {
        match self {
            Prepared::Few(p) => p.total_rounds(),
            Prepared::FewSingle(p) => p.sp_rounds(),
            Prepared::Many(p) => p.total_rounds(),
            Prepared::Gossip(p) => p.total_rounds(),
            Prepared::GossipSingle(p) => p.schedule.total_sp_rounds(),
            Prepared::Checkpointing(g, f) => g.total_rounds() + f.total_rounds(),
            Prepared::DolevStrong => s.t as Round + 1,
            Prepared::Ab(_, p) => p.total_rounds(),
        }
    }
}

fn inputs(s: &Scenario, rep_seed: u64) -> Vec<u64> {
    match &s.inputs {
        InputSpec::Unanimous { value } => vec![*value; s.n],
        InputSpec::Split { fraction } => {
            let ones = (fraction * s.n as f64).round() as usize;
            (0..s.n).map(|i| u64::from(i < ones)).collect()
        }
        InputSpec::List { values } => values.clone(),
        InputSpec::Random => {
            let mut rng = seed::rng(rep_seed, INPUT_STREAM);
            (0..s.n).map(|_| u64::from(rng.gen_bool(0.5))).collect()
        }
    }
}

fn byzantine_nodes(s: &Scenario, strategies: &[String], group: usize, rep_seed: u64) -> Result<BTreeMap<NodeId, ByzantineStrategy>, CliError> {
    let mut rng = seed::rng(rep_seed, BYZANTINE_STREAM);
    let mut ids: Vec<NodeId> = (0..group.min(s.n)).collect();
    ids.shuffle(&mut rng);
    ids.iter()
        .take(s.t)
        .enumerate()
        .map(|(k, &id)| Ok((id, byzantine_strategy(&strategies[k % strategies.len()], seed::mix(rep_seed, id as u64))?)))
        .collect()
}

fn adversary(s: &Scenario, horizon: Round, group: usize, rep_seed: u64) -> Result<AdversarySchedule, CliError> {
    Ok(match &s.adversary {
        AdversarySpec::None => AdversarySchedule::none(s.t),
        AdversarySpec::Static { crashes } => AdversarySchedule::crash_static(s.t, crashes.iter().copied()),
        AdversarySpec::StaticRandom { horizon: h } => {
            let h = h.unwrap_or(horizon);
            let mut rng = seed::rng(rep_seed, CRASH_STREAM);
            let mut ids: Vec<NodeId> = (0..s.n).collect();
            ids.shuffle(&mut rng);
            let crashes: Vec<(NodeId, Round)> = ids[..s.t].iter().map(|&v| (v, rng.gen_range(0..=h))).collect();
            AdversarySchedule::crash_static(s.t, crashes)
        }
        AdversarySpec::Byzantine { strategies } => {
            AdversarySchedule::byzantine(s.t, byzantine_nodes(s, strategies, group, rep_seed)?)
        }
        spec => AdversarySchedule::adaptive(s.t, spec.crash_strategy(s.t, horizon).expect("adaptive strategy")),
    })
}

/// Engine failures that end a run without an outcome.
fn failed_run(e: SimError) -> (String, Vec<Check>, RunMetrics) {
    match e {
        SimError::RoundLimitExceeded { metrics, .. } => ("round-limit".into(), vec![check("termination", false)], *metrics),
        other => (other.to_string(), vec![check("engine", false)], RunMetrics::default()),
    }
}

struct Evaluated {
    status: String,
    faulty: usize,
    checks: Vec<Check>,
    metrics: RunMetrics,
}

fn evaluate<P: NodeProgram>(
    result: Result<RunOutcome<P>, SimError>,
    checks: impl FnOnce(&RunOutcome<P>) -> Vec<Check>,
) -> Evaluated {
    match result {
        Ok(out) => Evaluated {
            status: "ok".into(),
            faulty: (0..out.programs.len()).filter(|&i| out.is_faulty(i)).count(),
            checks: checks(&out),
            metrics: out.metrics,
        },
        Err(e) => {
            let (status, checks, metrics) = failed_run(e);
            Evaluated { status, faulty: 0, checks, metrics }
        }
    }
}

/// Termination, agreement and validity (every decision is some node's input).
fn consensus_checks<P: NodeProgram>(out: &RunOutcome<P>, inputs: &[u64], value: impl Fn(&P::Output) -> u64) -> Vec<Check> {
    let decided: Vec<Option<u64>> = out.nonfaulty().map(|i| out.decisions[i].as_ref().map(&value)).collect();
    let values: BTreeSet<u64> = decided.iter().flatten().copied().collect();
    vec![
        check("termination", decided.iter().all(Option::is_some)),
        check("agreement", values.len() <= 1),
        check("validity", values.iter().all(|v| inputs.contains(v))),
    ]
}

/// Gossip conditions (1) and (2); `present(output, q)` reads membership.
fn gossip_checks<P: NodeProgram>(out: &RunOutcome<P>, present: impl Fn(&P::Output, NodeId) -> bool) -> Vec<Check> {
    let n = out.programs.len();
    let outputs: Vec<Option<&P::Output>> = out.nonfaulty().map(|i| out.decisions[i].as_ref()).collect();
    let silent: Vec<NodeId> = (0..n).filter(|&q| out.is_faulty(q) && out.sent[q] == 0).collect();
    let operational: Vec<NodeId> = out.nonfaulty().collect();
    let decided: Vec<&P::Output> = outputs.iter().flatten().copied().collect();
    vec![
        check("termination", outputs.iter().all(Option::is_some)),
        check("condition-1", decided.iter().all(|d| silent.iter().all(|&q| !present(d, q)))),
        check("condition-2", decided.iter().all(|d| operational.iter().all(|&q| present(d, q)))),
    ]
}

fn ab_checks(out: &RunOutcome<AbConsensus>, inputs: &[u64], little: usize) -> Vec<Check> {
    let honest: Vec<NodeId> = out.nonfaulty().collect();
    let sets: BTreeSet<Option<Vec<Option<u64>>>> =
        honest.iter().map(|&i| out.programs[i].set.as_ref().map(|s| s.values())).collect();
    let decisions: BTreeSet<Option<u64>> = honest.iter().map(|&i| out.decisions[i]).collect();
    let mut validity = false;
    if let [Some(values)] = sets.iter().collect::<Vec<_>>()[..] {
        let expected = values.iter().flatten().copied().max().unwrap_or(0);
        validity = values.len() == little
            && (0..little).all(|o| out.byzantine[o] || values[o] == Some(inputs[o]))
            && decisions.iter().all(|d| *d == Some(expected));
    }
    vec![
        check("termination", honest.iter().all(|&i| out.decisions[i].is_some())),
        check("agreement", decisions.len() <= 1),
        check("validity", validity),
    ]
}

/// Runs repetition `rep` of `s`.
pub fn run_repetition(s: &Scenario, prepared: &Prepared, rep: u64) -> Result<RunRecord, CliError> {
    let rep_seed = seed::mix(s.seed, rep);
    let horizon = prepared.horizon(s);
    let max_rounds = s.max_rounds.unwrap_or_else(|| default_max_rounds(s.n).max(2 * horizon + 2));
    let mut cfg = RunConfig::multiport(s.n, rep_seed).with_max_rounds(max_rounds);
    if s.port == Port::Single {
        cfg = RunConfig::singleport(s.n, rep_seed).with_max_rounds(max_rounds);
    }
    let x = inputs(s, rep_seed);
    let bits: Vec<bool> = x.iter().map(|&v| v != 0).collect();
    let group = match prepared {
        Prepared::Ab(_, plan) => plan.little,
        _ => s.n,
    };
    let adv = adversary(s, horizon, group, rep_seed)?;
    let to_u64 = |b: bool| u64::from(b);
    let binary: Vec<u64> = bits.iter().map(|&b| to_u64(b)).collect();
    let ev = match prepared {
        Prepared::Few(plan) => {
            let programs = few_crashes_with_plan(plan, &bits).map_err(precondition)?;
            evaluate(run(programs, &adv, &cfg), |o| consensus_checks(o, &binary, |d| to_u64(d.bit())))
        }
        Prepared::FewSingle(plan) => {
            let programs = plan.programs(&bits).map_err(precondition)?;
            evaluate(run(programs, &adv, &cfg), |o| consensus_checks(o, &binary, |d| to_u64(d.bit())))
        }
        Prepared::Many(plan) => {
            let bound = plan.round_bound();
            evaluate(run(many_crashes_with_plan(plan, &bits), &adv, &cfg), |o| {
                let mut c = consensus_checks(o, &binary, |&d| u64::from(d));
                c.push(check("round-bound", o.metrics.rounds <= bound));
                c
            })
        }
        Prepared::Gossip(plan) => {
            let programs = gossip_with_plan(plan, &x).map_err(precondition)?;
            evaluate(run(programs, &adv, &cfg), |o| gossip_checks(o, |e, q| e.is_present(q)))
        }
        Prepared::GossipSingle(sp) => {
            let programs = sp.programs(&x).map_err(precondition)?;
            evaluate(run(programs, &adv, &cfg), |o| gossip_checks(o, |e, q| e.is_present(q)))
        }
        Prepared::Checkpointing(g, f) => evaluate(run(checkpointing_with_plans(g, f), &adv, &cfg), |o| {
            let mut c = gossip_checks(o, |d, q| d.lane(q));
            let sets: BTreeSet<Vec<usize>> = o.nonfaulty().filter_map(|i| o.decisions[i].as_ref().map(|d| d.ones())).collect();
            c.push(check("condition-3", sets.len() <= 1));
            c
        }),
        Prepared::DolevStrong => {
            let byz = adv.byzantine_nodes();
            let programs = dolev_strong_programs(s.n, s.t, 0, x[0], &byz, rep_seed);
            evaluate(run(programs, &adv, &cfg), |o| {
                let outputs: Vec<Option<Option<u64>>> = o.nonfaulty().map(|i| o.decisions[i].map(|d| d.0)).collect();
                let distinct: BTreeSet<&Option<Option<u64>>> = outputs.iter().collect();
                vec![
                    check("termination", outputs.iter().all(Option::is_some)),
                    check("agreement", distinct.len() <= 1),
                    check("validity", o.byzantine[0] || outputs.iter().all(|d| *d == Some(Some(x[0])))),
                ]
            })
        }
        Prepared::Ab(ab, plan) => {
            let byz = adv.byzantine_nodes();
            let programs = ab_consensus_programs(ab, &x, &byz, rep_seed).map_err(precondition)?;
            evaluate(run(programs, &adv, &cfg), |o| ab_checks(o, &x, plan.little))
        }
    };
    Ok(RunRecord {
        scenario: s.clone(),
        repetition: rep,
        seed: rep_seed,
        status: ev.status,
        faulty: ev.faulty,
        checks: ev.checks,
        metrics: ev.metrics,
    })
}

/// All repetitions of `s`, in repetition order. Runs on the current rayon pool.
pub fn run_scenario(s: &Scenario) -> Result<Vec<RunRecord>, CliError> {
    let prepared = Prepared::new(s)?;
    (0..s.repetitions).into_par_iter().map(|rep| run_repetition(s, &prepared, rep)).collect()
}

/// Command-line overrides applied before sweep expansion.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_rounds: Option<Round>,
    pub port: Option<Port>,
}

impl Overrides {
    pub fn apply(&self, values: &mut Values) {
        if let Some(s) = self.seed {
            values.insert("seed".into(), s.to_string());
        }
        if let Some(r) = self.max_rounds {
            values.insert("max_rounds".into(), r.to_string());
        }
        if let Some(p) = self.port {
            values.insert("port".into(), p.to_string());
        }
    }
}

/// Sweep axes in expansion order; `adversary` values are separated by `|`,
/// the others by `,`.
pub const AXES: [&str; 4] = ["n", "t", "adversary", "seed"];

/// Expands the Cartesian product of the `sweep.*` axes into scenarios. With no
/// axes the result is the single scenario described by the plain keys.
pub fn sweep_cells(values: &Values) -> Result<Vec<Scenario>, CliError> {
    if let Some(k) = values.keys().find(|k| k.strip_prefix("sweep.").is_some_and(|a| !AXES.contains(&a))) {
        return Err(CliError::value(k, "unknown sweep axis"));
    }
    let mut cells = vec![values.clone()];
    for axis in AXES {
        let Some(raw) = values.get(&format!("sweep.{axis}")) else { continue };
        let sep = if axis == "adversary" { '|' } else { ',' };
        let items: Vec<&str> = raw.split(sep).map(str::trim).filter(|x| !x.is_empty()).collect();
        if items.is_empty() {
            continue;
        }
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                items.iter().map(move |item| {
                    let mut c = cell.clone();
                    c.insert(axis.to_string(), item.to_string());
                    c
                })
            })
            .collect();
    }
    cells.iter().map(Scenario::from_values).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_str;

    #[test]
    fn sweep_without_axes_is_one_cell() {
        let v = parse_str("protocol = gossip\nn = 20\nt = 1\n").unwrap();
        let cells = sweep_cells(&v).unwrap();
        assert_eq!(cells, vec![Scenario::from_values(&v).unwrap()]);
    }

    #[test]
    fn sweep_is_cartesian_and_resolves_t_per_cell() {
        let v = parse_str("protocol = few-crashes\nn = 0\nt = n/5-1\nsweep.n = 50,100\nsweep.adversary = none | uniform:0.1\n").unwrap();
        let cells = sweep_cells(&v).unwrap();
        let got: Vec<(usize, usize, String)> = cells.iter().map(|c| (c.n, c.t, c.adversary.to_string())).collect();
        assert_eq!(
            got,
            vec![
                (50, 9, "none".to_string()),
                (50, 9, "uniform:0.1".to_string()),
                (100, 19, "none".to_string()),
                (100, 19, "uniform:0.1".to_string()),
            ]
        );
    }

    #[test]
    fn repetition_seeds_are_mixed() {
        let v = parse_str("protocol = many-crashes\nn = 8\nt = 4\nrepetitions = 3\nseed = 9\n").unwrap();
        let records = run_scenario(&Scenario::from_values(&v).unwrap()).unwrap();
        let seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![seed::mix(9, 0), seed::mix(9, 1), seed::mix(9, 2)]);
        assert!(records.iter().all(RunRecord::passed));
    }
}
