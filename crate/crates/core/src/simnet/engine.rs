//! The lock-step executor.

use rand::Rng;

use super::adversary::{AdversaryKind, AdversarySchedule, Crash, CrashPlanner, CrashStrategy};
use super::metrics::{Event, RunMetrics, TranscriptRecord};
use super::{Ctx, Envelope, NodeId, NodeProgram, Outbox, Payload, Round, SignatureRegistry, SimError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortModel {
    MultiPort,
    SinglePort,
}

/// Which messages a node crashing mid-round still gets out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrashDelivery {
    Nothing,
    Everything,
    /// Each message independently with probability 1/2.
    #[default]
    RandomSubset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub port: PortModel,
    pub max_rounds: Round,
    pub seed: u64,
    pub crash_delivery: CrashDelivery,
    /// Stop after this many rounds and return the intermediate state.
    pub stop_after: Option<Round>,
}

impl RunConfig {
    pub fn multiport(n: usize, seed: u64) -> Self {
        Self {
            port: PortModel::MultiPort,
            max_rounds: default_max_rounds(n),
            seed,
            crash_delivery: CrashDelivery::default(),
            stop_after: None,
        }
    }

    pub fn singleport(n: usize, seed: u64) -> Self {
        Self { port: PortModel::SinglePort, ..Self::multiport(n, seed) }
    }

    pub fn with_max_rounds(mut self, max_rounds: Round) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn with_stop_after(mut self, rounds: Round) -> Self {
        self.stop_after = Some(rounds);
        self
    }
}

/// `4 (n + 10 ceil(lg(n + 1)))`.
pub fn default_max_rounds(n: usize) -> Round {
    let lg = crate::overlay::ceil_log2(n + 1) as Round;
    4 * (n as Round + 10 * lg)
}

/// Final state of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome<P: NodeProgram> {
    pub metrics: RunMetrics,
    pub programs: Vec<P>,
    /// Round in which each node crashed (0 means before the first round).
    pub crash_round: Vec<Option<Round>>,
    pub byzantine: Vec<bool>,
    pub decisions: Vec<Option<P::Output>>,
    pub halt_round: Vec<Option<Round>>,
    /// Delivered messages per sender.
    pub sent: Vec<u64>,
    /// Number of attempts to sign for another node.
    pub forgery_attempts: usize,
}

impl<P: NodeProgram> RunOutcome<P> {
    pub fn is_faulty(&self, node: NodeId) -> bool {
        self.crash_round[node].is_some() || self.byzantine[node]
    }

    pub fn nonfaulty(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.programs.len()).filter(|&i| !self.is_faulty(i))
    }

    /// Decisions of non-faulty nodes, in id order.
    pub fn nonfaulty_decisions(&self) -> Vec<Option<P::Output>> {
        self.nonfaulty().map(|i| self.decisions[i].clone()).collect()
    }
}

pub fn run_multiport<P: NodeProgram>(
    programs: Vec<P>,
    adversary: &AdversarySchedule,
    max_rounds: Round,
    seed: u64,
) -> Result<RunOutcome<P>, SimError> {
    let n = programs.len();
    run(programs, adversary, &RunConfig::multiport(n, seed).with_max_rounds(max_rounds))
}

pub fn run_singleport<P: NodeProgram>(
    programs: Vec<P>,
    adversary: &AdversarySchedule,
    max_rounds: Round,
    seed: u64,
) -> Result<RunOutcome<P>, SimError> {
    let n = programs.len();
    run(programs, adversary, &RunConfig::singleport(n, seed).with_max_rounds(max_rounds))
}

fn record(metrics: &mut RunMetrics, node: NodeId, round: Round, event: Event, value: String) {
    metrics.transcript.push(TranscriptRecord { node, round, event, value });
}

/// Runs `programs` (node `i` is `programs[i]`) until every non-faulty node has halted.
pub fn run<P: NodeProgram>(
    mut programs: Vec<P>,
    adversary: &AdversarySchedule,
    config: &RunConfig,
) -> Result<RunOutcome<P>, SimError> {
    let n = programs.len();
    if n == 0 {
        return Err(SimError::InvalidSetup("no nodes".into()));
    }
    let t = adversary.bound_t;
    let mut adv_rng = crate::seed::rng(config.seed, 1);
    let mut delivery_rng = crate::seed::rng(config.seed, 3);
    let mut registry = SignatureRegistry::new(crate::seed::mix(config.seed, 2));
    let mut metrics = RunMetrics::default();

    let mut crash_round: Vec<Option<Round>> = vec![None; n];
    let mut byzantine = vec![false; n];
    let mut decisions: Vec<Option<P::Output>> = vec![None; n];
    let mut halt_round: Vec<Option<Round>> = vec![None; n];
    let mut sent_by = vec![0u64; n];

    let check = |node: NodeId| -> Result<(), SimError> {
        if node >= n {
            Err(SimError::InvalidSetup(format!("node {node} outside 0..{n}")))
        } else {
            Ok(())
        }
    };
    match &adversary.kind {
        AdversaryKind::Byzantine(map) => {
            for (&node, strategy) in map {
                check(node)?;
                byzantine[node] = true;
                record(&mut metrics, node, 0, Event::ByzAssign, strategy.to_string());
            }
        }
        AdversaryKind::CrashStatic(map) => {
            for (&node, &round) in map {
                check(node)?;
                if round == 0 {
                    crash_round[node] = Some(0);
                    record(&mut metrics, node, 0, Event::Crash, String::new());
                }
            }
        }
        AdversaryKind::CrashAdaptive(CrashStrategy::PortIsolator { target }) => check(*target)?,
        _ => {}
    }
    let faulty_planned = match &adversary.kind {
        AdversaryKind::Byzantine(map) => map.len(),
        AdversaryKind::CrashStatic(map) => map.len(),
        _ => 0,
    };
    if faulty_planned > t {
        return Err(SimError::FaultBudgetExceeded { faulty: faulty_planned, bound: t });
    }
    let mut planner = CrashPlanner::new(&adversary.kind, n, t, &mut adv_rng);
    let isolate = match &adversary.kind {
        AdversaryKind::CrashAdaptive(CrashStrategy::PortIsolator { target }) => Some(*target),
        _ => None,
    };

    let mut round: Round = 0;
    loop {
        let done = (0..n).all(|i| crash_round[i].is_some() || byzantine[i] || halt_round[i].is_some());
        if done || config.stop_after.is_some_and(|r| round >= r) {
            break;
        }
        if round >= config.max_rounds {
            finish_nonfaulty(&mut metrics, &sent_by, &crash_round, &byzantine);
            return Err(SimError::RoundLimitExceeded {
                max_rounds: config.max_rounds,
                metrics: Box::new(metrics),
            });
        }
        round += 1;

        // Crash decisions for this round.
        let faulty_now = (0..n).filter(|&i| crash_round[i].is_some() || byzantine[i]).count();
        let budget = t.saturating_sub(faulty_now);
        let mut crashes = {
            let eligible = |i: NodeId| crash_round[i].is_none() && !byzantine[i] && halt_round[i].is_none();
            let mut c = planner.crashes(round, &eligible, n, budget, &mut adv_rng);
            if let Some(target) = isolate.filter(|&v| eligible(v)) {
                let mut scratch = SignatureRegistry::new(0);
                let mut preview = programs[target].clone();
                let outbox = preview.on_send(round, &mut Ctx::new(target, n, &mut scratch));
                let mut partners: Vec<NodeId> = outbox.sends.iter().map(|&(to, _)| to).collect();
                partners.extend(outbox.poll);
                partners.sort_unstable();
                partners.dedup();
                for p in partners {
                    if p != target && p < n && eligible(p) && c.len() < budget.min(2) {
                        c.push(Crash { node: p, silent: true });
                    }
                }
            }
            c
        };
        crashes.sort_by_key(|c| c.node);
        crashes.dedup_by_key(|c| c.node);
        let mut crashing = vec![None; n];
        for c in &crashes {
            crash_round[c.node] = Some(round);
            crashing[c.node] = Some(c.silent);
            record(&mut metrics, c.node, round, Event::Crash, String::new());
        }

        let active = |i: NodeId, crash_round: &[Option<Round>], halt_round: &[Option<Round>]| {
            halt_round[i].is_none() && crash_round[i].is_none_or(|r| r == round)
        };
        let label = (0..n)
            .find(|&i| crash_round[i].is_none())
            .map_or("idle", |i| programs[i].part(round));

        // Send phase.
        let mut polls: Vec<Option<NodeId>> = vec![None; n];
        let mut inboxes: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
        let mut round_messages = 0u64;
        let mut round_bits = 0u64;
        for i in 0..n {
            if !active(i, &crash_round, &halt_round) || crashing[i] == Some(true) {
                continue;
            }
            let Outbox { sends, poll } = programs[i].on_send(round, &mut Ctx::new(i, n, &mut registry));
            if config.port == PortModel::SinglePort && sends.len() > 1 {
                return Err(SimError::ProtocolViolation {
                    node: i,
                    round,
                    reason: format!("{} messages sent in one single-port round", sends.len()),
                });
            }
            polls[i] = poll;
            for (to, payload) in sends {
                if to >= n || to == i {
                    return Err(SimError::ProtocolViolation {
                        node: i,
                        round,
                        reason: format!("invalid receiver {to}"),
                    });
                }
                if crashing[i].is_some() {
                    let keep = match config.crash_delivery {
                        CrashDelivery::Nothing => false,
                        CrashDelivery::Everything => true,
                        CrashDelivery::RandomSubset => delivery_rng.gen_bool(0.5),
                    };
                    if !keep {
                        continue;
                    }
                }
                let bit_size = payload.bit_size().max(1);
                round_messages += 1;
                round_bits += bit_size;
                sent_by[i] += 1;
                inboxes[to].push(Envelope { sender: i, receiver: to, round_sent: round, bit_size, payload });
            }
        }
        metrics.charge(label, round_messages, round_bits);

        // Receive phase. Senders were visited in id order, so inboxes are sorted.
        for i in 0..n {
            if !active(i, &crash_round, &halt_round) || crashing[i].is_some() {
                continue;
            }
            let mut inbox = std::mem::take(&mut inboxes[i]);
            if config.port == PortModel::SinglePort {
                inbox.retain(|e| polls[i] == Some(e.sender));
            }
            let status = programs[i].on_receive(round, &inbox, &mut Ctx::new(i, n, &mut registry));
            let (decided, halted) = match status {
                Status::Running => (None, false),
                Status::Decided(v) => (Some(v), false),
                Status::Halted(v) => (v, true),
            };
            if let Some(v) = decided {
                match &decisions[i] {
                    None => {
                        record(&mut metrics, i, round, Event::Decide, v.to_string());
                        decisions[i] = Some(v);
                    }
                    Some(prev) if *prev != v && !byzantine[i] => {
                        return Err(SimError::IrrevocabilityViolation { node: i, round });
                    }
                    Some(_) => {}
                }
            }
            if halted {
                halt_round[i] = Some(round);
                record(&mut metrics, i, round, Event::Halt, String::new());
            }
        }
        metrics.tick(label);

        let faulty = (0..n).filter(|&i| crash_round[i].is_some() || byzantine[i]).count();
        if faulty > t {
            return Err(SimError::FaultBudgetExceeded { faulty, bound: t });
        }
    }

    if !registry.audit() {
        return Err(SimError::SignatureAudit);
    }
    finish_nonfaulty(&mut metrics, &sent_by, &crash_round, &byzantine);
    Ok(RunOutcome {
        metrics,
        programs,
        crash_round,
        byzantine,
        decisions,
        halt_round,
        sent: sent_by,
        forgery_attempts: registry.denied().len(),
    })
}

fn finish_nonfaulty(metrics: &mut RunMetrics, sent_by: &[u64], crash_round: &[Option<Round>], byzantine: &[bool]) {
    metrics.messages_nonfaulty = (0..sent_by.len())
        .filter(|&i| crash_round[i].is_none() && !byzantine[i])
        .map(|i| sent_by[i])
        .sum();
}

impl Payload for bool {
    fn bit_size(&self) -> u64 {
        1
    }
}

impl Payload for () {
    fn bit_size(&self) -> u64 {
        1
    }
}
