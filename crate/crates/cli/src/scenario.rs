//! Typed scenarios built from config values.

use std::fmt;
use std::str::FromStr;

use expanderquorum::protocols_crash::GraphMode;
use expanderquorum::simnet::{ByzantineStrategy, CrashStrategy, NodeId, Round};
use serde::{Deserialize, Serialize};

use crate::config::Values;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    FewCrashes,
    ManyCrashes,
    Gossip,
    Checkpointing,
    DolevStrong,
    AbConsensus,
}

impl Protocol {
    pub const ALL: [Protocol; 6] = [
        Protocol::FewCrashes,
        Protocol::ManyCrashes,
        Protocol::Gossip,
        Protocol::Checkpointing,
        Protocol::DolevStrong,
        Protocol::AbConsensus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::FewCrashes => "few-crashes",
            Protocol::ManyCrashes => "many-crashes",
            Protocol::Gossip => "gossip",
            Protocol::Checkpointing => "checkpointing",
            Protocol::DolevStrong => "dolev-strong",
            Protocol::AbConsensus => "ab-consensus",
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Port {
    Multi,
    Single,
}

impl FromStr for Port {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "multi" => Ok(Port::Multi),
            "single" => Ok(Port::Single),
            _ => Err(format!("unknown port mode `{s}` (multi|single)")),
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Port::Multi => "multi",
            Port::Single => "single",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum GraphSpec {
    Faithful,
    Scaled {
        degree: Option<usize>,
        delta: Option<f64>,
        gamma: Option<u64>,
    },
}

impl GraphSpec {
    pub fn mode(&self) -> GraphMode {
        match *self {
            GraphSpec::Faithful => GraphMode::Faithful,
            GraphSpec::Scaled { degree, delta, gamma } => GraphMode::Scaled { degree, delta, gamma },
        }
    }
}

/// Fault model of a scenario. Crash horizons default to the protocol length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AdversarySpec {
    None,
    /// Fixed `(node, round)` crashes; round 0 crashes before the first send.
    Static { crashes: Vec<(NodeId, Round)> },
    /// `t` distinct random nodes crash at uniform rounds in `0..=horizon`.
    StaticRandom { horizon: Option<Round> },
    Uniform { rate: f64 },
    FrontLoaded { horizon: Option<Round> },
    BackLoaded { horizon: Option<Round> },
    TargetLittle { horizon: Option<Round> },
    PortIsolator { target: NodeId },
    /// `t` Byzantine nodes, strategies assigned round-robin.
    Byzantine { strategies: Vec<String> },
}

fn opt_num<T: FromStr>(key: &str, arg: Option<&str>) -> Result<Option<T>, CliError> {
    arg.map(|a| a.parse().map_err(|_| CliError::value(key, format!("bad number `{a}`"))))
        .transpose()
}

fn num<T: FromStr>(key: &str, arg: Option<&str>) -> Result<T, CliError> {
    opt_num(key, arg)?.ok_or_else(|| CliError::value(key, "missing argument"))
}

impl AdversarySpec {
    /// Accepts `none`, `static:N@R,N@R`, `static-random[:H]`, `uniform:RATE`,
    /// `front-loaded[:H]`, `back-loaded[:H]`, `target-little[:H]`,
    /// `port-isolator:NODE` and `byzantine:S1,S2,...`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        const KEY: &str = "adversary";
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        Ok(match name {
            "none" => AdversarySpec::None,
            "static" => {
                let mut crashes = Vec::new();
                for item in arg.unwrap_or_default().split(',').filter(|x| !x.trim().is_empty()) {
                    let (node, round) = item
                        .split_once('@')
                        .ok_or_else(|| CliError::value(KEY, format!("expected NODE@ROUND, got `{item}`")))?;
                    crashes.push((num(KEY, Some(node.trim()))?, num(KEY, Some(round.trim()))?));
                }
                AdversarySpec::Static { crashes }
            }
            "static-random" => AdversarySpec::StaticRandom { horizon: opt_num(KEY, arg)? },
            "uniform" => AdversarySpec::Uniform { rate: num(KEY, arg)? },
            "front-loaded" => AdversarySpec::FrontLoaded { horizon: opt_num(KEY, arg)? },
            "back-loaded" => AdversarySpec::BackLoaded { horizon: opt_num(KEY, arg)? },
            "target-little" => AdversarySpec::TargetLittle { horizon: opt_num(KEY, arg)? },
            "port-isolator" => AdversarySpec::PortIsolator { target: num(KEY, arg)? },
            "byzantine" => {
                let strategies: Vec<String> = arg
                    .unwrap_or_default()
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(String::from)
                    .collect();
                if strategies.is_empty() {
                    return Err(CliError::value(KEY, "byzantine needs at least one strategy"));
                }
                for s in &strategies {
                    byzantine_strategy(s, 0)?;
                }
                AdversarySpec::Byzantine { strategies }
            }
            _ => return Err(CliError::value(KEY, format!("unknown adversary `{s}`"))),
        })
    }

    pub fn is_byzantine(&self) -> bool {
        matches!(self, AdversarySpec::Byzantine { .. })
    }

    /// Adaptive crash strategy, if this is one.
    pub fn crash_strategy(&self, t: usize, horizon: Round) -> Option<CrashStrategy> {
        let h = |x: Option<Round>| x.unwrap_or(horizon).max(1);
        Some(match *self {
            AdversarySpec::Uniform { rate } => CrashStrategy::UniformRandom { rate },
            AdversarySpec::FrontLoaded { horizon } => CrashStrategy::FrontLoaded { horizon: h(horizon) },
            AdversarySpec::BackLoaded { horizon } => CrashStrategy::BackLoaded { horizon: h(horizon) },
            AdversarySpec::TargetLittle { horizon } => CrashStrategy::TargetLittleNodes {
                little: 5 * t,
                horizon: h(horizon),
            },
            AdversarySpec::PortIsolator { target } => CrashStrategy::PortIsolator { target },
            _ => return None,
        })
    }
}

/// `random-noise` without an argument draws its seed from `seed`.
pub fn byzantine_strategy(name: &str, seed: u64) -> Result<ByzantineStrategy, CliError> {
    let name = if name == "random-noise" { format!("random-noise:{seed}") } else { name.to_string() };
    name.parse().map_err(|e: expanderquorum::simnet::SimError| CliError::value("adversary", e.to_string()))
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: &Option<Round>| x.map(|h| format!(":{h}")).unwrap_or_default();
        match self {
            AdversarySpec::None => f.write_str("none"),
            AdversarySpec::Static { crashes } => {
                let items: Vec<String> = crashes.iter().map(|(n, r)| format!("{n}@{r}")).collect();
                write!(f, "static:{}", items.join(","))
            }
            AdversarySpec::StaticRandom { horizon } => write!(f, "static-random{}", opt(horizon)),
            AdversarySpec::Uniform { rate } => write!(f, "uniform:{rate}"),
            AdversarySpec::FrontLoaded { horizon } => write!(f, "front-loaded{}", opt(horizon)),
            AdversarySpec::BackLoaded { horizon } => write!(f, "back-loaded{}", opt(horizon)),
            AdversarySpec::TargetLittle { horizon } => write!(f, "target-little{}", opt(horizon)),
            AdversarySpec::PortIsolator { target } => write!(f, "port-isolator:{target}"),
            AdversarySpec::Byzantine { strategies } => write!(f, "byzantine:{}", strategies.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InputSpec {
    Unanimous { value: u64 },
    /// The first `round(fraction * n)` nodes get 1, the rest 0.
    Split { fraction: f64 },
    List { values: Vec<u64> },
    /// Independent fair bits per repetition.
    Random,
}

impl InputSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        const KEY: &str = "inputs";
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        Ok(match name {
            "unanimous" => InputSpec::Unanimous { value: num(KEY, arg)? },
            "split" => {
                let fraction: f64 = num(KEY, arg)?;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(CliError::value(KEY, "split fraction must lie in [0, 1]"));
                }
                InputSpec::Split { fraction }
            }
            "list" => InputSpec::List {
                values: arg
                    .unwrap_or_default()
                    .split(',')
                    .map(|x| num(KEY, Some(x.trim())))
                    .collect::<Result<_, _>>()?,
            },
            "random" => InputSpec::Random,
            _ => return Err(CliError::value(KEY, format!("unknown input assignment `{s}`"))),
        })
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::Unanimous { value } => write!(f, "unanimous:{value}"),
            InputSpec::Split { fraction } => write!(f, "split:{fraction}"),
            InputSpec::List { values } => {
                let v: Vec<String> = values.iter().map(u64::to_string).collect();
                write!(f, "list:{}", v.join(","))
            }
            InputSpec::Random => f.write_str("random"),
        }
    }
}

/// One fully resolved experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub protocol: Protocol,
    pub n: usize,
    pub t: usize,
    pub port: Port,
    pub graph: GraphSpec,
    pub adversary: AdversarySpec,
    pub inputs: InputSpec,
    pub seed: u64,
    pub repetitions: u64,
    pub max_rounds: Option<Round>,
}

/// Evaluates `t` expressions: an integer or `[k]n[/d][+c|-c]`, e.g. `n/5-1`,
/// `3n/4`, `n-1`. Division rounds down.
pub fn eval_t(expr: &str, n: usize) -> Result<usize, CliError> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::value("t", format!("cannot evaluate `{expr}`"));
    if let Ok(v) = s.parse() {
        return Ok(v);
    }
    let (coef, rest) = s.split_once('n').ok_or_else(bad)?;
    let k: i64 = if coef.is_empty() { 1 } else { coef.parse().map_err(|_| bad())? };
    let split = rest.find(['+', '-']).unwrap_or(rest.len());
    let (div, off) = rest.split_at(split);
    let d: i64 = match div.strip_prefix('/') {
        Some(x) => x.parse().map_err(|_| bad())?,
        None if div.is_empty() => 1,
        None => return Err(bad()),
    };
    let c: i64 = if off.is_empty() { 0 } else { off.parse().map_err(|_| bad())? };
    if d <= 0 {
        return Err(bad());
    }
    let v = k * n as i64 / d + c;
    usize::try_from(v).map_err(|_| CliError::value("t", format!("`{expr}` is negative for n = {n}")))
}

const KNOWN_KEYS: [&str; 13] = [
    "protocol",
    "n",
    "t",
    "port",
    "graph",
    "graph.degree",
    "graph.delta",
    "graph.gamma",
    "adversary",
    "inputs",
    "seed",
    "repetitions",
    "max_rounds",
];

fn get<'a>(values: &'a Values, key: &str) -> Result<&'a str, CliError> {
    values.get(key).map(String::as_str).ok_or_else(|| CliError::value(key, "missing"))
}

fn parse_key<T: FromStr>(values: &Values, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    values
        .get(key)
        .map(|v| v.parse().map_err(|e: T::Err| CliError::value(key, e.to_string())))
        .transpose()
}

impl Scenario {
    /// Builds a scenario; `sweep.*` keys are ignored here.
    pub fn from_values(values: &Values) -> Result<Self, CliError> {
        if let Some(k) = values.keys().find(|k| !k.starts_with("sweep.") && !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::value(k, "unknown key"));
        }
        let protocol = get(values, "protocol")?.parse().map_err(|e| CliError::value("protocol", e))?;
        let n: usize = parse_key(values, "n")?.ok_or_else(|| CliError::value("n", "missing"))?;
        let t = eval_t(get(values, "t")?, n)?;
        let graph = match values.get("graph").map(String::as_str).unwrap_or("faithful") {
            "faithful" => GraphSpec::Faithful,
            "scaled" => GraphSpec::Scaled {
                degree: parse_key(values, "graph.degree")?,
                delta: parse_key(values, "graph.delta")?,
                gamma: parse_key(values, "graph.gamma")?,
            },
            other => return Err(CliError::value("graph", format!("unknown mode `{other}` (faithful|scaled)"))),
        };
        Ok(Scenario {
            protocol,
            n,
            t,
            port: parse_key(values, "port")?.unwrap_or(Port::Multi),
            graph,
            adversary: AdversarySpec::parse(values.get("adversary").map(String::as_str).unwrap_or("none"))?,
            inputs: InputSpec::parse(values.get("inputs").map(String::as_str).unwrap_or("random"))?,
            seed: parse_key(values, "seed")?.unwrap_or(0),
            repetitions: parse_key(values, "repetitions")?.unwrap_or(1),
            max_rounds: parse_key(values, "max_rounds")?,
        })
    }

    /// Checks the rules shared by every protocol and the port-mode support.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Precondition("n >= 1 required".into()));
        }
        if self.t >= self.n {
            return Err(CliError::Precondition("t < n required".into()));
        }
        if self.port == Port::Single && !matches!(self.protocol, Protocol::FewCrashes | Protocol::Gossip) {
            return Err(CliError::Precondition(format!(
                "single-port mode supports few-crashes and gossip, not {}",
                self.protocol.name()
            )));
        }
        let byz_protocol = matches!(self.protocol, Protocol::DolevStrong | Protocol::AbConsensus);
        if self.adversary.is_byzantine() && !byz_protocol {
            return Err(CliError::Precondition(format!(
                "{} tolerates crash faults only",
                self.protocol.name()
            )));
        }
        if byz_protocol && !matches!(self.adversary, AdversarySpec::None | AdversarySpec::Byzantine { .. }) {
            return Err(CliError::Precondition(format!(
                "{} takes `none` or `byzantine:` adversaries",
                self.protocol.name()
            )));
        }
        if let AdversarySpec::Static { crashes } = &self.adversary {
            if crashes.len() > self.t {
                return Err(CliError::Precondition("at most t static crashes".into()));
            }
            if let Some((node, _)) = crashes.iter().find(|(node, _)| *node >= self.n) {
                return Err(CliError::Precondition(format!("crash target {node} must be < n")));
            }
        }
        if let AdversarySpec::PortIsolator { target } = self.adversary {
            if target >= self.n {
                return Err(CliError::Precondition(format!("isolated node {target} must be < n")));
            }
        }
        if let InputSpec::List { values } = &self.inputs {
            if values.len() != self.n {
                return Err(CliError::Precondition(format!("{} listed inputs for n = {}", values.len(), self.n)));
            }
        }
        Ok(())
    }
}
