//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{dense_neighborhood_brute, greedy_peel, random_graph, random_subset};
use expanderquorum::overlay::{
    build_regular_expander, ceil_log2, compactness_check, dense_neighborhood_exists, mixing_check, ramanujan_bound,
    survival_subset, DeltaVariant, GraphParams, OverlayGraph,
};
use expanderquorum::protocols_auth::{ab_consensus_programs, dolev_strong_programs, AbConfig, AbConsensus, DolevStrong};
use expanderquorum::protocols_crash::{
    checkpointing_with_plans, few_crashes_with_plan, gossip_with_plan, many_crashes_with_plan, FcPlan, GossipPlan,
    GraphMode, McPlan, ProtocolConfig, Stages,
};
use expanderquorum::seed;
use expanderquorum::simnet::{
    run, AdversarySchedule, ByzantineStrategy, CrashStrategy, NodeId, NodeProgram, Round, RunConfig, RunOutcome,
};
use expanderquorum::singleport::{gossip_lower_bound_experiment, linear_consensus_plan};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

// Pinned tolerances.
const C1_SIZES: [(usize, usize); 4] = [(64, 8), (128, 8), (128, 12), (256, 12)];
const C1_SLACK: f64 = 0.1;
const C1_RETRIES: usize = 100;
const C1_PAIRS: usize = 1000;
const C1_TIME: Duration = Duration::from_secs(30);
const C2_INSTANCES: usize = 500;
const C2_MAX_N: usize = 64;
const C3_MIN_CASES: usize = 200;
const C3_MAX_N: usize = 12;
const C4_TRIALS: usize = 100;
const C5_SIZES: [usize; 3] = [50, 100, 200];
const C5_SEEDS: u64 = 100;
const C5_BUDGET: u64 = 64;
const C5_TIME: Duration = Duration::from_secs(300);
const C6_SIZES: [usize; 3] = [32, 64, 128];
const C6_SEEDS: u64 = 100;
const C7_SEEDS: u64 = 200;
const C8_ROUND_CONSTANT: f64 = 8.0;
const C9_AB_SEEDS: u64 = 200;
const C9_DS_SEEDS: u64 = 200;
const C9_BUDGET: u64 = 16;
const C10_MAX_C: f64 = 64.0;
const C10_LOWER_BOUND: [(usize, usize); 2] = [(32, 16), (64, 32)];
const C10_LOWER_BOUND_SEEDS: u64 = 20;
const GRAPH_SEED: u64 = 1;

struct Line {
    pass: bool,
    detail: String,
}

/// Metrics and oracle artifacts, compared across two identical passes.
type Artifacts = Vec<String>;

fn lg(x: usize) -> u64 {
    ceil_log2(x) as u64
}

fn random_bits(n: usize, s: u64) -> Vec<bool> {
    let mut rng = seed::rng(s, 5);
    (0..n).map(|_| rng.gen_bool(0.5)).collect()
}

/// Agreement, validity and termination of a binary consensus run.
fn consensus_ok<P: NodeProgram>(out: &RunOutcome<P>, inputs: &[bool], bit: impl Fn(&P::Output) -> bool) -> bool {
    let decided: Vec<Option<bool>> = out.nonfaulty().map(|i| out.decisions[i].as_ref().map(&bit)).collect();
    let values: BTreeSet<bool> = decided.iter().flatten().copied().collect();
    decided.iter().all(Option::is_some) && values.len() <= 1 && values.iter().all(|v| inputs.contains(v))
}

fn crash_suite(n: usize, t: usize, horizon: Round) -> Vec<CrashStrategy> {
    vec![
        CrashStrategy::UniformRandom { rate: 2.0 * t as f64 / (n as f64 * horizon as f64) },
        CrashStrategy::FrontLoaded { horizon },
        CrashStrategy::BackLoaded { horizon },
        CrashStrategy::TargetLittleNodes { little: 5 * t, horizon },
    ]
}

fn scaled(n: usize, t: usize) -> ProtocolConfig {
    ProtocolConfig::new(n, t).with_mode(GraphMode::scaled()).with_graph_seed(GRAPH_SEED)
}

fn c1(art: &mut Artifacts) -> Line {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for (k, &(n, d)) in C1_SIZES.iter().enumerate() {
        let Ok(g) = build_regular_expander(n, d, C1_SLACK, k as u64, C1_RETRIES) else {
            ok = false;
            continue;
        };
        let bound = ramanujan_bound(d) * (1.0 + C1_SLACK);
        worst = worst.max(g.lambda() / bound);
        ok &= g.lambda() <= bound;
        let mut rng = seed::rng(k as u64, 1);
        for _ in 0..C1_PAIRS {
            let a = rng.gen_range(1..=n / 2);
            let b = rng.gen_range(1..=n - a);
            let picked = random_subset(n, a + b, &mut rng);
            let (x, y) = picked.split_at(a);
            ok &= mixing_check(&g, x, y).unwrap_or(false);
        }
        art.push(g.to_text());
    }
    let elapsed = start.elapsed();
    Line {
        pass: ok && elapsed < C1_TIME,
        detail: format!("4 graphs, max lambda/bound {worst:.3}, {C1_PAIRS} mixing pairs each, {:.1}s (< {}s)", elapsed.as_secs_f64(), C1_TIME.as_secs()),
    }
}

fn c2(art: &mut Artifacts) -> Line {
    let mut rng = seed::rng(2, 0);
    let mut mismatches = 0;
    for k in 0..C2_INSTANCES {
        let n = rng.gen_range(2..=C2_MAX_N);
        let g = if k % 2 == 0 {
            random_graph(n, rng.gen_range(0.05..0.5), &mut rng)
        } else {
            let d = rng.gen_range(2..=8).min(n - 1);
            let d = if n * d % 2 == 1 { d - 1 } else { d };
            build_regular_expander(n, d.max(1), 10.0, rng.gen(), 1).unwrap_or_else(|_| OverlayGraph::complete(n))
        };
        let b = random_subset(n, rng.gen_range(0..=n), &mut rng);
        let delta = rng.gen_range(0.0..6.0);
        let got = survival_subset(&g, &b, delta);
        if got != greedy_peel(&g, &b, delta) {
            mismatches += 1;
        }
        art.push(format!("{got:?}"));
    }
    Line { pass: mismatches == 0, detail: format!("{C2_INSTANCES} instances (n <= {C2_MAX_N}), {mismatches} mismatches (tolerance 0)") }
}

fn c3(art: &mut Artifacts) -> Line {
    let mut rng = seed::rng(3, 0);
    let (mut cases, mut mismatches) = (0, 0);
    for n in 1..=C3_MAX_N {
        for _ in 0..25 {
            let g = random_graph(n, rng.gen_range(0.15..0.85), &mut rng);
            let alive = random_subset(n, rng.gen_range(1..=n), &mut rng);
            let v = alive[rng.gen_range(0..alive.len())];
            let gamma = rng.gen_range(1..=3);
            let delta = f64::from(rng.gen_range(1..=8)) / 2.0;
            let got = dense_neighborhood_exists(&g, v, gamma, delta, &alive);
            if got != dense_neighborhood_brute(&g, v, gamma, delta, &alive) {
                mismatches += 1;
            }
            cases += 1;
            art.push(got.to_string());
        }
    }
    Line {
        pass: mismatches == 0 && cases >= C3_MIN_CASES,
        detail: format!("{cases} cases (n <= {C3_MAX_N}, need >= {C3_MIN_CASES}), {mismatches} mismatches (tolerance 0)"),
    }
}

/// Certified overlays of the protocol runs in criteria 5, 8, 9 and 10.
fn protocol_graphs() -> Vec<(String, OverlayGraph, f64)> {
    let flood_delta = |g: &OverlayGraph| DeltaVariant::default().delta(g.degree() as f64).min(g.min_degree() as f64);
    let mut out = Vec::new();
    for n in C5_SIZES {
        let plan = FcPlan::new(&scaled(n, n / 5 - 1), 1, Stages::Full, 0).expect("plan");
        out.push((format!("few-crashes n={n} probe"), plan.probe.graph.clone(), plan.probe.delta));
        out.push((format!("few-crashes n={n} flood"), plan.flood.clone(), flood_delta(&plan.flood)));
        let lin = linear_consensus_plan(&scaled(n, n / 5 - 1)).expect("plan");
        out.push((format!("linear n={n} probe"), lin.fc.probe.graph.clone(), lin.fc.probe.delta));
    }
    let gossip = GossipPlan::new(&ProtocolConfig::new(100, 19), 64).expect("plan");
    out.push(("gossip n=100 probe".into(), gossip.probe.graph.clone(), gossip.probe.delta));
    for t in [2, 4] {
        let ab = expanderquorum::protocols_auth::AbPlan::new(&AbConfig::new(40, t).with_graph_seed(GRAPH_SEED)).expect("plan");
        out.push((format!("ab n=40 t={t} flood"), ab.flood.clone(), flood_delta(&ab.flood)));
    }
    out.into_iter().filter(|(_, g, _)| g.certificate().is_certified() && !g.is_complete()).collect()
}

fn c4(art: &mut Artifacts) -> Line {
    let graphs = protocol_graphs();
    let mut failed = Vec::new();
    for (k, (name, g, delta)) in graphs.iter().enumerate() {
        let ell = GraphParams::from_formula(g.node_count(), g.degree() as f64, DeltaVariant::default()).ell;
        let size = (ell.ceil() as usize).min(g.node_count());
        let ok = compactness_check(g, size, *delta, C4_TRIALS, seed::mix(4, k as u64));
        if !ok {
            failed.push(name.clone());
        }
        art.push(format!("{name} {ok}"));
    }
    Line {
        pass: failed.is_empty() && !graphs.is_empty(),
        detail: format!("{} certified protocol graphs x {C4_TRIALS} sets |B| = ceil(ell), survivors >= ceil(3|B|/4); failing: {failed:?}", graphs.len()),
    }
}

/// Few-Crashes property suite, multi-port (`single == false`) or single-port.
/// Returns (runs, failures, max messages / budget, max rounds / (t + lg n), elapsed).
fn consensus_suite(single: bool, art: &mut Artifacts) -> (usize, usize, f64, f64, Duration) {
    let start = Instant::now();
    let (mut runs, mut failures, mut msg_ratio, mut c) = (0, 0, 0.0f64, 0.0f64);
    for n in C5_SIZES {
        let t = n / 5 - 1;
        let cfg = scaled(n, t);
        let (fc, lin) = if single {
            let lin = linear_consensus_plan(&cfg).expect("plan");
            (lin.fc.clone(), Some(lin))
        } else {
            (Arc::new(FcPlan::new(&cfg, 1, Stages::Full, 0).expect("plan")), None)
        };
        let horizon = lin.as_ref().map_or(fc.total_rounds(), |l| l.sp_rounds());
        let budget = C5_BUDGET * (n as u64 + t as u64 * lg(t + 1));
        let cells: Vec<(CrashStrategy, u64)> =
            crash_suite(n, t, horizon).into_iter().flat_map(|s| (0..C5_SEEDS).map(move |k| (s.clone(), k))).collect();
        let results: Vec<(bool, u64, u64, String)> = cells
            .par_iter()
            .map(|(strategy, k)| {
                let s = seed::mix(n as u64, *k);
                let inputs = random_bits(n, s);
                let adv = AdversarySchedule::adaptive(t, strategy.clone());
                let base = if single { RunConfig::singleport(n, s) } else { RunConfig::multiport(n, s) };
                let cfg = base.with_max_rounds(2 * horizon + 2);
                let res = match &lin {
                    Some(l) => run(l.programs(&inputs).expect("inputs"), &adv, &cfg)
                        .map(|o| (consensus_ok(&o, &inputs, |d| d.bit()), o.metrics)),
                    None => run(few_crashes_with_plan(&fc, &inputs).expect("inputs"), &adv, &cfg)
                        .map(|o| (consensus_ok(&o, &inputs, |d| d.bit()), o.metrics)),
                };
                match res {
                    Ok((ok, m)) => (ok, m.messages, m.rounds, m.to_json()),
                    Err(e) => (false, 0, 0, e.to_string()),
                }
            })
            .collect();
        for (ok, messages, rounds, json) in results {
            runs += 1;
            failures += usize::from(!ok || (!single && messages > budget));
            msg_ratio = msg_ratio.max(messages as f64 / budget as f64 * C5_BUDGET as f64);
            c = c.max(rounds as f64 / (t as u64 + lg(n)) as f64);
            art.push(json);
        }
    }
    (runs, failures, msg_ratio, c, start.elapsed())
}

fn c5(art: &mut Artifacts) -> Line {
    let (runs, failures, worst, c, elapsed) = consensus_suite(false, art);
    Line {
        pass: failures == 0 && elapsed < C5_TIME,
        detail: format!(
            "{runs} runs, {failures} failures; max messages = {worst:.1} (n + t ceil(lg(t+1))) (budget {C5_BUDGET}); rounds constant {c:.1}; {:.1}s (< {}s)",
            elapsed.as_secs_f64(),
            C5_TIME.as_secs()
        ),
    }
}

fn c6(art: &mut Artifacts) -> Line {
    let (mut runs, mut failures, mut slack) = (0, 0, u64::MAX);
    for n in C6_SIZES {
        for t in [n / 2, n - 1] {
            let plan = Arc::new(McPlan::new(&ProtocolConfig::new(n, t).with_graph_seed(GRAPH_SEED)).expect("plan"));
            let bound = plan.round_bound();
            let horizon = plan.total_rounds();
            let results: Vec<(bool, u64, String)> = (0..C6_SEEDS)
                .into_par_iter()
                .map(|k| {
                    let s = seed::mix(n as u64 * 1000 + t as u64, k);
                    let inputs = random_bits(n, s);
                    let strategy = crash_suite(n, t, horizon)[(k % 4) as usize].clone();
                    let adv = AdversarySchedule::adaptive(t, strategy);
                    let cfg = RunConfig::multiport(n, s).with_max_rounds(2 * bound);
                    match run(many_crashes_with_plan(&plan, &inputs), &adv, &cfg) {
                        Ok(o) => (consensus_ok(&o, &inputs, |&d| d == 1) && o.metrics.rounds <= bound, o.metrics.rounds, o.metrics.to_json()),
                        Err(e) => (false, u64::MAX, e.to_string()),
                    }
                })
                .collect();
            for (ok, rounds, json) in results {
                runs += 1;
                failures += usize::from(!ok);
                slack = slack.min(bound.saturating_sub(rounds));
                art.push(json);
            }
        }
    }
    Line {
        pass: failures == 0,
        detail: format!("{runs} runs, {failures} failures; rounds <= n + 3(1 + ceil(lg n)) with min slack {slack}"),
    }
}

/// `t` crashes: a quarter before sending anything, the rest mid-send at
/// uniform rounds of the schedule.
fn crash_at_send(n: usize, t: usize, horizon: Round, s: u64) -> AdversarySchedule {
    let mut rng = seed::rng(s, 6);
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(&mut rng);
    let silent = t.div_ceil(4);
    let crashes: Vec<(NodeId, Round)> =
        ids[..t].iter().enumerate().map(|(k, &v)| (v, if k < silent { 0 } else { rng.gen_range(1..=horizon) })).collect();
    AdversarySchedule::crash_static(t, crashes)
}

/// Gossip conditions (1) and (2).
fn gossip_ok<P: NodeProgram>(out: &RunOutcome<P>, present: impl Fn(&P::Output, NodeId) -> bool) -> bool {
    let n = out.programs.len();
    out.nonfaulty().all(|i| {
        out.decisions[i].as_ref().is_some_and(|d| {
            (0..n).all(|q| {
                let silent = out.is_faulty(q) && out.sent[q] == 0;
                (!silent || !present(d, q)) && (out.is_faulty(q) || present(d, q))
            })
        })
    })
}

fn c7(art: &mut Artifacts) -> Line {
    let (n, t) = (100, 19);
    let plan = Arc::new(GossipPlan::new(&ProtocolConfig::new(n, t).with_graph_seed(GRAPH_SEED), 64).expect("plan"));
    let horizon = plan.total_rounds();
    let results: Vec<(bool, usize, String)> = (0..C7_SEEDS)
        .into_par_iter()
        .map(|k| {
            let s = seed::mix(7, k);
            let rumors: Vec<u64> = (0..n as u64).map(|i| seed::mix(s, i)).collect();
            let adv = crash_at_send(n, t, horizon, s);
            let cfg = RunConfig::multiport(n, s).with_max_rounds(2 * horizon);
            match run(gossip_with_plan(&plan, &rumors).expect("rumors"), &adv, &cfg) {
                Ok(o) => {
                    let silent = (0..n).filter(|&q| o.is_faulty(q) && o.sent[q] == 0).count();
                    let ok = gossip_ok(&o, |e, q| e.get(q).is_none_or(|x| x == rumors[q]) && e.is_present(q));
                    (ok && o.programs.iter().all(|p| p.conflicts == 0), silent, o.metrics.to_json())
                }
                Err(e) => (false, 0, e.to_string()),
            }
        })
        .collect();
    let failures = results.iter().filter(|r| !r.0).count();
    let silent: usize = results.iter().map(|r| r.1).sum();
    art.extend(results.into_iter().map(|r| r.2));
    Line {
        pass: failures == 0,
        detail: format!("{C7_SEEDS} runs (n=100, t=19), {failures} failures; {silent} pre-send crashers in total"),
    }
}

fn c8(art: &mut Artifacts) -> Line {
    let (n, t) = (100, 19);
    let cfg = ProtocolConfig::new(n, t).with_graph_seed(GRAPH_SEED);
    let gossip = Arc::new(GossipPlan::new(&cfg, 1).expect("plan"));
    let fc = Arc::new(FcPlan::new(&cfg, n, Stages::Full, gossip.total_rounds()).expect("plan"));
    let horizon = gossip.total_rounds() + fc.total_rounds();
    let scale = (t as u64 + lg(n) * lg(t + 1)) as f64;
    let results: Vec<(bool, u64, String)> = (0..C7_SEEDS)
        .into_par_iter()
        .map(|k| {
            let s = seed::mix(8, k);
            let adv = crash_at_send(n, t, horizon, s);
            let rc = RunConfig::multiport(n, s).with_max_rounds(2 * horizon);
            match run(checkpointing_with_plans(&gossip, &fc), &adv, &rc) {
                Ok(o) => {
                    let sets: BTreeSet<Vec<usize>> =
                        o.nonfaulty().filter_map(|i| o.decisions[i].as_ref().map(|d| d.ones())).collect();
                    let ok = gossip_ok(&o, |d, q| d.lane(q)) && sets.len() == 1;
                    (ok, o.metrics.rounds, o.metrics.to_json())
                }
                Err(e) => (false, u64::MAX, e.to_string()),
            }
        })
        .collect();
    let failures = results.iter().filter(|r| !r.0).count();
    let max_rounds = results.iter().map(|r| r.1).max().unwrap_or(0);
    let constant = max_rounds as f64 / scale;
    art.extend(results.into_iter().map(|r| r.2));
    Line {
        pass: failures == 0 && constant <= C8_ROUND_CONSTANT,
        detail: format!(
            "{C7_SEEDS} runs, {failures} failures; max rounds {max_rounds} = {constant:.2} (t + ceil(lg n) ceil(lg(t+1))) (limit {C8_ROUND_CONSTANT})"
        ),
    }
}

const DS_STRATEGIES: [ByzantineStrategy; 3] =
    [ByzantineStrategy::Silent, ByzantineStrategy::Equivocate, ByzantineStrategy::SelectiveSend];

fn ds_ok(out: &RunOutcome<DolevStrong>, input: u64) -> bool {
    let outputs: BTreeSet<Option<Option<u64>>> = out.nonfaulty().map(|i| out.decisions[i].map(|d| d.0)).collect();
    outputs.len() == 1 && !outputs.contains(&None) && (out.byzantine[0] || outputs.contains(&Some(Some(input))))
}

fn run_ds(n: usize, t: usize, byz: BTreeMap<NodeId, ByzantineStrategy>, s: u64) -> (bool, String) {
    let input = s % 2 + 1;
    let programs = dolev_strong_programs(n, t, 0, input, &byz, s);
    match run(programs, &AdversarySchedule::byzantine(t, byz), &RunConfig::multiport(n, s).with_max_rounds(t as u64 + 5)) {
        Ok(o) => (ds_ok(&o, input), o.metrics.to_json()),
        Err(e) => (false, e.to_string()),
    }
}

fn mixed_strategy(rng: &mut impl Rng) -> ByzantineStrategy {
    match rng.gen_range(0..6) {
        0 => ByzantineStrategy::Silent,
        1 => ByzantineStrategy::Equivocate,
        2 => ByzantineStrategy::SelectiveSend,
        3 => ByzantineStrategy::ReplayOldSignatures,
        4 => ByzantineStrategy::FloodInquiries,
        _ => ByzantineStrategy::RandomNoise(rng.gen()),
    }
}

fn ab_ok(out: &RunOutcome<AbConsensus>, inputs: &[u64], little: usize) -> bool {
    let honest: Vec<NodeId> = out.nonfaulty().collect();
    let sets: BTreeSet<Option<Vec<Option<u64>>>> = honest.iter().map(|&i| out.programs[i].set.as_ref().map(|s| s.values())).collect();
    let [Some(values)] = sets.iter().collect::<Vec<_>>()[..] else { return false };
    let expected = values.iter().flatten().copied().max().unwrap_or(0);
    values.len() == little
        && (0..little).all(|o| out.byzantine[o] || values[o] == Some(inputs[o]))
        && honest.iter().all(|&i| out.decisions[i] == Some(expected))
}

fn c9(art: &mut Artifacts) -> Line {
    // Dolev-Strong: exhaustive for n = 4, 7; seeded for n = 10.
    let mut ds_cases: Vec<(usize, usize, BTreeMap<NodeId, ByzantineStrategy>, u64)> = Vec::new();
    for (n, t) in [(4usize, 1usize), (7, 2)] {
        for mask in (0u32..1 << n).filter(|m| m.count_ones() as usize == t) {
            let set: Vec<NodeId> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            for code in 0..3usize.pow(t as u32) {
                let byz = set.iter().enumerate().map(|(k, &v)| (v, DS_STRATEGIES[code / 3usize.pow(k as u32) % 3])).collect();
                ds_cases.push((n, t, byz, mask as u64 * 31 + code as u64));
            }
        }
    }
    for k in 0..C9_DS_SEEDS {
        let mut rng = seed::rng(9, k);
        let mut ids: Vec<NodeId> = (0..10).collect();
        ids.shuffle(&mut rng);
        let byz = ids[..3].iter().map(|&v| (v, DS_STRATEGIES[rng.gen_range(0..3)])).collect();
        ds_cases.push((10, 3, byz, k));
    }
    let ds: Vec<(bool, String)> = ds_cases.into_par_iter().map(|(n, t, byz, s)| run_ds(n, t, byz, s)).collect();
    let ds_fail = ds.iter().filter(|r| !r.0).count();

    // AB-Consensus.
    let n = 40;
    let mut ab_fail = 0;
    let mut worst_ratio = 0.0f64;
    let mut denied = 0;
    let mut ab_runs = 0;
    for t in [2usize, 4] {
        let cfg = AbConfig::new(n, t).with_graph_seed(GRAPH_SEED);
        let little = cfg.little();
        let budget = C9_BUDGET * (t * t + n) as u64;
        let results: Vec<(bool, u64, usize, String)> = (0..C9_AB_SEEDS)
            .into_par_iter()
            .map(|k| {
                let s = seed::mix(90 + t as u64, k);
                let mut rng = seed::rng(s, 0);
                let inputs: Vec<u64> = (0..n).map(|_| rng.gen_range(0..8)).collect();
                let mut ids: Vec<NodeId> = (0..n).collect();
                ids[..little].shuffle(&mut rng);
                let byz: BTreeMap<NodeId, ByzantineStrategy> = ids[..t].iter().map(|&v| (v, mixed_strategy(&mut rng))).collect();
                let programs = ab_consensus_programs(&cfg, &inputs, &byz, s).expect("programs");
                match run(programs, &AdversarySchedule::byzantine(t, byz), &RunConfig::multiport(n, s).with_max_rounds(200)) {
                    Ok(o) => (ab_ok(&o, &inputs, little), o.metrics.messages_nonfaulty, o.forgery_attempts, o.metrics.to_json()),
                    Err(e) => (false, u64::MAX, 0, e.to_string()),
                }
            })
            .collect();
        for (ok, msgs, forged, json) in results {
            ab_runs += 1;
            ab_fail += usize::from(!ok || msgs > budget);
            worst_ratio = worst_ratio.max(msgs as f64 / (t * t + n) as f64);
            denied += forged;
            art.push(json);
        }
    }
    art.extend(ds.iter().map(|r| r.1.clone()));
    Line {
        pass: ds_fail == 0 && ab_fail == 0,
        detail: format!(
            "Dolev-Strong {} runs, {ds_fail} failures; AB-Consensus {ab_runs} runs, {ab_fail} failures, max non-faulty messages = {worst_ratio:.2} (t^2 + n) (budget {C9_BUDGET}); {denied} forgery attempts, all denied",
            ds.len()
        ),
    }
}

fn c10(art: &mut Artifacts) -> Line {
    let (runs, failures, _, c, _) = consensus_suite(true, art);
    let mut lb_fail = 0;
    let mut min_halt = u64::MAX;
    for (n, t) in C10_LOWER_BOUND {
        let reports: Vec<_> = (0..C10_LOWER_BOUND_SEEDS)
            .into_par_iter()
            .map(|k| gossip_lower_bound_experiment(n, t, (k as usize * 7) % n, k))
            .collect();
        for r in reports {
            match r {
                Ok(r) => {
                    lb_fail += usize::from(!r.holds());
                    min_halt = min_halt.min(r.halt_round.unwrap_or(0));
                    art.push(format!("{r:?}"));
                }
                Err(e) => {
                    lb_fail += 1;
                    art.push(e.to_string());
                }
            }
        }
    }
    Line {
        pass: failures == 0 && c <= C10_MAX_C && lb_fail == 0,
        detail: format!(
            "single-port suite {runs} runs, {failures} failures, c = {c:.1} (<= {C10_MAX_C}); port isolation {} runs, {lb_fail} below floor(t/2), earliest victim halt {min_halt}",
            2 * C10_LOWER_BOUND_SEEDS
        ),
    }
}

type Criterion = fn(&mut Artifacts) -> Line;

const CRITERIA: [Criterion; 10] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10];

fn main() {
    // Cargo passes harness flags such as `--nocapture`; only `--list` matters.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut first = Artifacts::new();
    let mut lines = Vec::new();
    for (k, criterion) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let line = criterion(&mut first);
        println!(
            "criterion {:>2}: {} {} [{:.0}s]",
            k + 1,
            if line.pass { "PASS" } else { "FAIL" },
            line.detail,
            start.elapsed().as_secs_f64()
        );
        lines.push(line);
    }
    let mut second = Artifacts::new();
    for criterion in CRITERIA {
        criterion(&mut second);
    }
    let differing = first.iter().zip(&second).filter(|(a, b)| a != b).count();
    let same = first.len() == second.len() && differing == 0;
    println!(
        "criterion 11: {} {} artifacts from criteria 1-10 regenerated with identical seeds, {differing} differ",
        if same { "PASS" } else { "FAIL" },
        first.len()
    );
    lines.push(Line { pass: same, detail: String::new() });
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
