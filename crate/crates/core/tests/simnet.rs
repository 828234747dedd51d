use std::collections::BTreeMap;

use expanderquorum::simnet::{
    run, AdversarySchedule, ByzantineStrategy, CrashDelivery, CrashStrategy, Ctx, Envelope, Event,
    NodeProgram, Outbox, PortModel, Round, RunConfig, SimError, Status,
};
use proptest::prelude::*;

/// Halts immediately.
#[derive(Clone, Debug)]
struct Idle;

impl NodeProgram for Idle {
    type Msg = bool;
    type Output = u8;
    fn on_send(&mut self, _: Round, _: &mut Ctx<'_>) -> Outbox<bool> {
        Outbox::new()
    }
    fn on_receive(&mut self, _: Round, _: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<u8> {
        Status::Halted(Some(1))
    }
}

/// Node 0 sends one bit in round 1; node 1 answers in round 2.
#[derive(Clone, Debug)]
struct Echo {
    id: usize,
    got: bool,
}

impl NodeProgram for Echo {
    type Msg = bool;
    type Output = u8;
    fn on_send(&mut self, round: Round, _: &mut Ctx<'_>) -> Outbox<bool> {
        let mut out = Outbox::new();
        if (self.id == 0 && round == 1) || (self.id == 1 && self.got) {
            out.send(1 - self.id, true);
        }
        out
    }
    fn on_receive(&mut self, round: Round, inbox: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<u8> {
        match (self.id, round) {
            (0, 2) if !inbox.is_empty() => Status::Halted(Some(1)),
            (1, _) if self.got => Status::Halted(Some(1)),
            _ => {
                self.got |= !inbox.is_empty();
                Status::Running
            }
        }
    }
}

/// Sends a bit to every other node for `rounds` rounds, then halts.
#[derive(Clone, Debug)]
struct Flood {
    rounds: Round,
    heard: Vec<(Round, usize)>,
}

impl NodeProgram for Flood {
    type Msg = bool;
    type Output = usize;
    fn on_send(&mut self, _: Round, ctx: &mut Ctx<'_>) -> Outbox<bool> {
        let mut out = Outbox::new();
        for j in (0..ctx.n()).filter(|&j| j != ctx.id()) {
            out.send(j, true);
        }
        out
    }
    fn on_receive(&mut self, round: Round, inbox: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<usize> {
        assert!(inbox.windows(2).all(|w| w[0].sender <= w[1].sender));
        assert!(inbox.iter().all(|e| e.round_sent == round));
        self.heard.push((round, inbox.len()));
        if round >= self.rounds {
            Status::Halted(Some(self.heard.len()))
        } else {
            Status::Running
        }
    }
    fn part(&self, round: Round) -> &'static str {
        if round == 1 { "first" } else { "rest" }
    }
}

fn flood(n: usize, rounds: Round) -> Vec<Flood> {
    vec![Flood { rounds, heard: Vec::new() }; n]
}

#[test]
fn single_node_halts_in_one_round() {
    let out = run(vec![Idle], &AdversarySchedule::none(0), &RunConfig::multiport(1, 0)).unwrap();
    assert_eq!(out.metrics.rounds, 1);
    assert_eq!(out.metrics.messages, 0);
}

#[test]
fn echo_pair_counts() {
    let progs = vec![Echo { id: 0, got: false }, Echo { id: 1, got: false }];
    let out = run(progs, &AdversarySchedule::none(0), &RunConfig::multiport(2, 0)).unwrap();
    assert_eq!((out.metrics.rounds, out.metrics.messages, out.metrics.bits), (2, 2, 2));
    assert_eq!(out.metrics.messages_nonfaulty, 2);
}

#[test]
fn flood_accounting_and_parts() {
    let out = run(flood(5, 3), &AdversarySchedule::none(0), &RunConfig::multiport(5, 1)).unwrap();
    assert_eq!(out.metrics.messages, 3 * 5 * 4);
    let first = out.metrics.part("first").unwrap();
    assert_eq!((first.rounds, first.messages), (1, 20));
    assert_eq!(out.metrics.part("rest").unwrap().rounds, 2);
    assert_eq!(out.metrics.decisions().count(), 5);
}

#[test]
fn replay_is_byte_identical() {
    let adv = AdversarySchedule::adaptive(3, CrashStrategy::UniformRandom { rate: 0.1 });
    let a = run(flood(12, 6), &adv, &RunConfig::multiport(12, 77)).unwrap();
    let b = run(flood(12, 6), &adv, &RunConfig::multiport(12, 77)).unwrap();
    assert_eq!(a.metrics.to_json(), b.metrics.to_json());
}

#[test]
fn round_limit_carries_partial_metrics() {
    let err = run(flood(3, 50), &AdversarySchedule::none(0), &RunConfig::multiport(3, 0).with_max_rounds(4))
        .unwrap_err();
    match err {
        SimError::RoundLimitExceeded { max_rounds, metrics } => {
            assert_eq!(max_rounds, 4);
            assert_eq!(metrics.rounds, 4);
            assert_eq!(metrics.messages, 4 * 6);
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn single_port_rejects_two_sends() {
    let err = run(flood(3, 2), &AdversarySchedule::none(0), &RunConfig::singleport(3, 0)).unwrap_err();
    assert!(matches!(err, SimError::ProtocolViolation { node: 0, round: 1, .. }));
}

/// Node 0 sends to node 1; node 1 polls `poll`.
#[derive(Clone, Debug)]
struct Port {
    id: usize,
    poll: usize,
    got: usize,
}

impl NodeProgram for Port {
    type Msg = bool;
    type Output = usize;
    fn on_send(&mut self, _: Round, _: &mut Ctx<'_>) -> Outbox<bool> {
        let mut out = Outbox::new();
        if self.id == 0 {
            out.send(1, true);
        }
        out.with_poll((self.id == 1).then_some(self.poll))
    }
    fn on_receive(&mut self, _: Round, inbox: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<usize> {
        self.got += inbox.len();
        Status::Halted(Some(self.got))
    }
}

#[test]
fn single_port_drops_unpolled_messages() {
    let progs = |poll| {
        (0..3)
            .map(|id| Port { id, poll, got: 0 })
            .collect::<Vec<_>>()
    };
    let lost = run(progs(2), &AdversarySchedule::none(0), &RunConfig::singleport(3, 0)).unwrap();
    assert_eq!(lost.decisions[1], Some(0));
    assert_eq!(lost.metrics.messages, 1);
    let kept = run(progs(0), &AdversarySchedule::none(0), &RunConfig::singleport(3, 0)).unwrap();
    assert_eq!(kept.decisions[1], Some(1));
}

/// Signs a value, tries to forge node 0's signature, and verifies both.
#[derive(Clone, Debug)]
struct Forger {
    results: Option<(bool, bool)>,
}

impl NodeProgram for Forger {
    type Msg = bool;
    type Output = String;
    fn on_send(&mut self, _: Round, ctx: &mut Ctx<'_>) -> Outbox<bool> {
        let own = ctx.sign(5);
        let forged = ctx.sign_as(0, 5);
        let genuine = ctx.id() == 0;
        self.results = Some((ctx.verify(&own), ctx.verify(&forged) || genuine));
        Outbox::new()
    }
    fn on_receive(&mut self, _: Round, _: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<String> {
        let (a, b) = self.results.unwrap();
        Status::Halted(Some(format!("{a}{b}")))
    }
}

#[test]
fn forgeries_never_verify() {
    let out = run(vec![Forger { results: None }; 3], &AdversarySchedule::none(0), &RunConfig::multiport(3, 4)).unwrap();
    assert_eq!(out.decisions[0].as_deref(), Some("truetrue"));
    assert_eq!(out.decisions[1].as_deref(), Some("truefalse"));
    assert_eq!(out.decisions[2].as_deref(), Some("truefalse"));
    assert_eq!(out.forgery_attempts, 2);
}

#[test]
fn crashed_from_start_sends_nothing() {
    let adv = AdversarySchedule::crash_static(1, [(2, 0)]);
    let out = run(flood(4, 2), &adv, &RunConfig::multiport(4, 0)).unwrap();
    assert_eq!(out.metrics.messages, 2 * 3 * 3);
    assert_eq!(out.metrics.messages_nonfaulty, out.metrics.messages);
    assert_eq!(out.crash_round[2], Some(0));
    assert!(out.decisions[2].is_none());
}

#[test]
fn budget_is_enforced() {
    let adv = AdversarySchedule::crash_static(1, [(0, 1), (1, 1)]);
    assert!(matches!(
        run(flood(4, 2), &adv, &RunConfig::multiport(4, 0)),
        Err(SimError::FaultBudgetExceeded { faulty: 2, bound: 1 })
    ));
}

#[test]
fn zero_rate_crashes_nobody() {
    let adv = AdversarySchedule::adaptive(5, CrashStrategy::UniformRandom { rate: 0.0 });
    let out = run(flood(10, 5), &adv, &RunConfig::multiport(10, 9)).unwrap();
    assert!(out.crash_round.iter().all(Option::is_none));
}

#[test]
fn little_node_targeting() {
    let n = 40;
    let t = n / 5 - 1;
    let adv = AdversarySchedule::adaptive(t, CrashStrategy::TargetLittleNodes { little: 5 * t, horizon: 3 });
    let out = run(flood(n, 4), &adv, &RunConfig::multiport(n, 2)).unwrap();
    let crashed: Vec<usize> = (0..n).filter(|&i| out.crash_round[i].is_some()).collect();
    assert_eq!(crashed.len(), t);
    assert!(crashed.iter().all(|&i| i < 5 * t));
}

#[test]
fn byzantine_nodes_are_marked_and_excluded() {
    let adv = AdversarySchedule::byzantine(1, [(3, ByzantineStrategy::Silent)]);
    let out = run(flood(4, 2), &adv, &RunConfig::multiport(4, 0)).unwrap();
    assert!(out.is_faulty(3));
    assert_eq!(out.metrics.messages_nonfaulty, 2 * 3 * 3);
    assert_eq!(out.metrics.transcript[0].event, Event::ByzAssign);
}

/// Decides its round number, which changes.
#[derive(Clone, Debug)]
struct Fickle;

impl NodeProgram for Fickle {
    type Msg = bool;
    type Output = Round;
    fn on_send(&mut self, _: Round, _: &mut Ctx<'_>) -> Outbox<bool> {
        Outbox::new()
    }
    fn on_receive(&mut self, round: Round, _: &[Envelope<bool>], _: &mut Ctx<'_>) -> Status<Round> {
        Status::Decided(round)
    }
}

#[test]
fn decisions_are_irrevocable() {
    assert_eq!(
        run(vec![Fickle], &AdversarySchedule::none(0), &RunConfig::multiport(1, 0)).unwrap_err(),
        SimError::IrrevocabilityViolation { node: 0, round: 2 }
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Message totals match a direct count under all-or-nothing crash delivery,
    /// and crashed nodes never act after their crash round.
    #[test]
    fn accounting_matches_oracle(
        n in 2usize..9,
        rounds in 1u64..6,
        crashes in proptest::collection::btree_map(0usize..9, 0u64..7, 0..4),
        everything in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let crashes: BTreeMap<usize, u64> = crashes.into_iter().filter(|&(v, _)| v < n).collect();
        let t = crashes.len();
        let mut config = RunConfig::multiport(n, seed);
        config.crash_delivery = if everything { CrashDelivery::Everything } else { CrashDelivery::Nothing };
        let out = run(flood(n, rounds), &AdversarySchedule::crash_static(t, crashes.clone()), &config).unwrap();

        let live_at = |r: u64| (0..n).filter(|i| crashes.get(i).is_none_or(|&c| c > r)).count();
        let mut expected = 0;
        let mut nonfaulty = 0;
        for r in 1..=out.metrics.rounds {
            let senders = live_at(r) + if everything {
                crashes.values().filter(|&&c| c == r).count()
            } else { 0 };
            expected += senders * (n - 1);
            let faulty = crashes.values().filter(|&&c| c <= out.metrics.rounds).count();
            nonfaulty += (n - faulty) * (n - 1);
        }
        prop_assert_eq!(out.metrics.messages as usize, expected);
        prop_assert_eq!(out.metrics.messages_nonfaulty as usize, nonfaulty);
        prop_assert!(out.metrics.messages_nonfaulty <= out.metrics.messages);
        for (&v, &c) in &crashes {
            let heard = &out.programs[v].heard;
            prop_assert!(heard.iter().all(|&(r, _)| r < c));
        }
        prop_assert_eq!(config.port, PortModel::MultiPort);
    }
}
