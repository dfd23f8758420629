//! Text configuration for experiments.
//!
//! The format is line-based `key = value` with `[strategy <name>]`
//! sections; `#` starts a comment. Top-level keys describe the shared arm
//! model and run parameters; each strategy section names a communication
//! schedule and may override the policy.
//!
//! ```text
//! means = 0.9, 0.8
//! players = 2
//! horizon = 65536
//! policy = ucb
//! exploration = ln2t
//! replications = 1000
//!
//! [strategy full]
//! schedule = full
//!
//! [strategy sparse]
//! schedule = doubleexp:2,1
//! policy = dklucb
//! exploration = standard
//! ```
//!
//! A top-level `schedule` defines a strategy called `main`. `preset =
//! figure1` loads the Figure-1 experiment first; later keys override it.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use crate::arms::BernoulliArmModel;
use crate::error::{Error, Result};
use crate::exploration::ExplorationKind;
use crate::policy::{PolicyRule, PolicySpec};
use crate::schedule::CommunicationSchedule;
use crate::sim::{default_checkpoints, RunConfig};

pub const DEFAULT_REPLICATIONS: u32 = 1000;
pub const DEFAULT_FLAG_THRESHOLD: f64 = 1.5;

/// One problem found while parsing; `line` is 1-based, 0 for whole-document
/// problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub name: String,
    pub schedule: CommunicationSchedule,
    pub policy: PolicySpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arms: BernoulliArmModel,
    pub players: u32,
    pub horizon: u64,
    pub seed: u64,
    pub replications: u32,
    pub checkpoints: Vec<u64>,
    pub bounds: bool,
    pub flag_threshold: f64,
    pub out_dir: Option<PathBuf>,
    pub strategies: Vec<Strategy>,
}

impl ExperimentConfig {
    pub fn run_config(&self, strategy: &Strategy) -> RunConfig {
        RunConfig {
            arms: self.arms.clone(),
            players: self.players,
            horizon: self.horizon,
            schedule: strategy.schedule.clone(),
            policy: strategy.policy,
            seed: self.seed,
            checkpoints: self.checkpoints.clone(),
            replications: self.replications,
        }
    }

    pub fn strategy(&self, name: &str) -> Option<&Strategy> {
        self.strategies.iter().find(|s| s.name == name)
    }
}

/// The `figure1` preset: two players, arms `(0.9, 0.8)`, `T = 2^16`, UCB
/// with `ln(2t)` exploration, and five communication strategies.
pub fn figure1_preset() -> ExperimentConfig {
    let policy = PolicySpec::ucb(ExplorationKind::Ln2t);
    let strategy = |name: &str, schedule: CommunicationSchedule| Strategy {
        name: name.to_string(),
        schedule,
        policy,
    };
    let explicit =
        |rounds: Vec<u64>| CommunicationSchedule::explicit(rounds).expect("valid rounds");
    ExperimentConfig {
        arms: BernoulliArmModel::new(vec![0.9, 0.8]).expect("valid means"),
        players: 2,
        horizon: 1 << 16,
        seed: 0,
        replications: DEFAULT_REPLICATIONS,
        checkpoints: (4..=16).map(|k| 1u64 << k).collect(),
        bounds: false,
        flag_threshold: DEFAULT_FLAG_THRESHOLD,
        out_dir: None,
        strategies: vec![
            strategy("none", CommunicationSchedule::none()),
            strategy("full", CommunicationSchedule::full()),
            strategy("A", explicit(vec![1 << 12])),
            strategy("B", explicit(vec![1 << 4, 1 << 8, 1 << 12])),
            strategy("C", explicit((1..=1 << 12).collect())),
        ],
    }
}

#[derive(Debug, Default, Clone)]
struct PolicyKeys {
    policy: Option<(usize, PolicyRule)>,
    exploration: Option<(usize, ExplorationKind)>,
    alpha: Option<(usize, f64)>,
}

#[derive(Debug)]
struct Section {
    line: usize,
    name: String,
    schedule: Option<(usize, CommunicationSchedule)>,
    keys: PolicyKeys,
}

struct Parser {
    errors: Vec<ConfigError>,
}

impl Parser {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn value<T>(&mut self, line: usize, key: &str, r: std::result::Result<T, String>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.err(line, format!("`{key}`: {e}"));
                None
            }
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| format!("`{}` is not a valid number", x.trim()))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>()
        .map_err(|_| format!("`{v}` is not a valid value"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Parses a config document, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut p = Parser { errors: Vec::new() };

    let mut means: Option<(usize, Vec<f64>)> = None;
    let mut players: Option<u32> = None;
    let mut horizon: Option<u64> = None;
    let mut seed: Option<u64> = None;
    let mut replications: Option<u32> = None;
    let mut checkpoints: Option<(usize, Vec<u64>)> = None;
    let mut bounds: Option<bool> = None;
    let mut flag_threshold: Option<f64> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut preset: Option<ExperimentConfig> = None;
    let mut top_keys = PolicyKeys::default();
    let mut top_schedule: Option<(usize, CommunicationSchedule)> = None;
    let mut sections: Vec<Section> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                p.err(line, format!("malformed section header `{content}`"));
                continue;
            };
            let mut words = header.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("strategy"), Some(name), None) if valid_name(name) => {
                    sections.push(Section {
                        line,
                        name: name.to_string(),
                        schedule: None,
                        keys: PolicyKeys::default(),
                    });
                }
                _ => p.err(
                    line,
                    format!("expected `[strategy <name>]` with a name of letters, digits, `_` or `-`, got `{content}`"),
                ),
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            p.err(line, format!("expected `key = value`, got `{content}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());

        // Keys valid in both scopes.
        let keys = match sections.last_mut() {
            Some(s) => &mut s.keys,
            None => &mut top_keys,
        };
        match key {
            "policy" => {
                let r = value.parse::<PolicyRule>().map_err(|e| e.to_string());
                if let Some(v) = p.value(line, key, r) {
                    keys.policy = Some((line, v));
                }
                continue;
            }
            "exploration" => {
                let r = value.parse::<ExplorationKind>().map_err(|e| e.to_string());
                if let Some(v) = p.value(line, key, r) {
                    keys.exploration = Some((line, v));
                }
                continue;
            }
            "alpha" => {
                let r = parse_one::<f64>(value).and_then(|a| {
                    if (0.0..=1.0).contains(&a) {
                        Ok(a)
                    } else {
                        Err(format!("{a} is outside [0, 1]"))
                    }
                });
                if let Some(v) = p.value(line, key, r) {
                    keys.alpha = Some((line, v));
                }
                continue;
            }
            "schedule" => {
                let r = value
                    .parse::<CommunicationSchedule>()
                    .map_err(|e| e.to_string());
                if let Some(v) = p.value(line, key, r) {
                    match sections.last_mut() {
                        Some(s) => s.schedule = Some((line, v)),
                        None => top_schedule = Some((line, v)),
                    }
                }
                continue;
            }
            _ => {}
        }

        if let Some(s) = sections.last() {
            p.err(
                line,
                format!("unknown key `{key}` in strategy `{}` (allowed: schedule, policy, exploration, alpha)", s.name),
            );
            continue;
        }

        match key {
            "preset" => {
                if value == "figure1" {
                    preset = Some(figure1_preset());
                } else {
                    p.err(
                        line,
                        format!("unknown preset `{value}` (available: figure1)"),
                    );
                }
            }
            "means" => {
                let r = parse_list::<f64>(value).and_then(|ms| {
                    match ms.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                        Some(bad) => Err(format!("mean {bad} is outside [0, 1]")),
                        None if ms.is_empty() => Err("at least one arm is required".into()),
                        None => Ok(ms),
                    }
                });
                means = p.value(line, key, r).map(|v| (line, v));
            }
            "players" => {
                let r = parse_one::<u32>(value).and_then(|m| {
                    if m >= 1 {
                        Ok(m)
                    } else {
                        Err("at least one player is required".into())
                    }
                });
                players = p.value(line, key, r);
            }
            "horizon" => {
                let r = parse_one::<u64>(value).and_then(|t| {
                    if t >= 1 {
                        Ok(t)
                    } else {
                        Err("horizon must be at least 1".into())
                    }
                });
                horizon = p.value(line, key, r);
            }
            "seed" => seed = p.value(line, key, parse_one(value)),
            "replications" => {
                let r = parse_one::<u32>(value).and_then(|n| {
                    if n >= 1 {
                        Ok(n)
                    } else {
                        Err("at least one replication is required".into())
                    }
                });
                replications = p.value(line, key, r);
            }
            "checkpoints" => {
                let r = parse_list::<u64>(value).and_then(|cs| {
                    if cs.windows(2).any(|w| w[0] >= w[1]) {
                        Err("checkpoints must be strictly increasing".into())
                    } else if cs.first() == Some(&0) {
                        Err("checkpoints start at round 1".into())
                    } else {
                        Ok(cs)
                    }
                });
                checkpoints = p.value(line, key, r).map(|v| (line, v));
            }
            "bounds" => bounds = p.value(line, key, parse_bool(value)),
            "flag_threshold" => flag_threshold = p.value(line, key, parse_one(value)),
            "out" => out_dir = Some(PathBuf::from(value)),
            _ => p.err(line, format!("unknown key `{key}`")),
        }
    }

    let base = preset.as_ref();
    let arms = match means {
        Some((line, ms)) => match BernoulliArmModel::new(ms) {
            Ok(m) => Some(m),
            Err(e) => {
                p.err(line, e.to_string());
                None
            }
        },
        None => base.map(|b| b.arms.clone()),
    };
    if arms.is_none() && p.errors.iter().all(|e| !e.message.starts_with("`means`")) {
        p.err(0, "missing required key `means`");
    }
    let players = players.or(base.map(|b| b.players));
    if players.is_none() {
        p.err(0, "missing required key `players`");
    }
    let horizon = horizon.or(base.map(|b| b.horizon));
    if horizon.is_none() {
        p.err(0, "missing required key `horizon`");
    }
    let checkpoints = match (checkpoints, horizon) {
        (Some((line, cs)), Some(t)) => {
            if let Some(c) = cs.iter().find(|&&c| c > t) {
                p.err(line, format!("checkpoint {c} is beyond the horizon {t}"));
            }
            cs
        }
        (Some((_, cs)), None) => cs,
        (None, Some(t)) => match base {
            Some(b) if b.horizon == t => b.checkpoints.clone(),
            _ => default_checkpoints(t),
        },
        (None, None) => Vec::new(),
    };

    // Strategies: preset ones first (top-level policy keys override them),
    // then the top-level schedule, then sections. Same-named sections
    // replace preset strategies.
    let mut strategies: Vec<Strategy> = Vec::new();
    let resolve = |p: &mut Parser,
                   name: &str,
                   line: usize,
                   schedule: CommunicationSchedule,
                   local: &PolicyKeys,
                   inherited: Option<PolicySpec>|
     -> Option<Strategy> {
        let rule = local
            .policy
            .or(top_keys.policy)
            .map(|x| x.1)
            .or(inherited.map(|s| s.rule()))
            .unwrap_or(PolicyRule::KlUcb);
        let exploration = local
            .exploration
            .or(top_keys.exploration)
            .map(|x| x.1)
            .or(inherited.map(|s| s.exploration()))
            .unwrap_or_default();
        let spec = match rule {
            PolicyRule::Ucb => Ok(PolicySpec::ucb(exploration)),
            PolicyRule::KlUcb => Ok(PolicySpec::klucb(exploration)),
            PolicyRule::Dklucb => {
                let alpha = local.alpha.or(top_keys.alpha).map(|x| x.1).or_else(|| {
                    schedule
                        .density()
                        .ok()
                        .filter(|d| !d.estimated)
                        .map(|d| d.value)
                });
                match alpha {
                    Some(a) => PolicySpec::dklucb(a, exploration),
                    None => {
                        p.err(
                            line,
                            format!("strategy `{name}`: dklucb on `{schedule}` needs an explicit `alpha` (its density is not known in closed form)"),
                        );
                        return None;
                    }
                }
            }
        };
        match spec {
            Ok(policy) => Some(Strategy {
                name: name.to_string(),
                schedule,
                policy,
            }),
            Err(e) => {
                p.err(line, format!("strategy `{name}`: {e}"));
                None
            }
        }
    };

    if let Some(b) = base {
        for s in &b.strategies {
            if sections.iter().any(|sec| sec.name == s.name) {
                continue;
            }
            if let Some(st) = resolve(
                &mut p,
                &s.name,
                0,
                s.schedule.clone(),
                &PolicyKeys::default(),
                Some(s.policy),
            ) {
                strategies.push(st);
            }
        }
    }
    if let Some((line, schedule)) = top_schedule {
        if let Some(st) = resolve(&mut p, "main", line, schedule, &PolicyKeys::default(), None) {
            strategies.push(st);
        }
    }
    let mut seen: HashSet<String> = HashSet::new();
    for sec in &sections {
        if !seen.insert(sec.name.clone()) {
            p.err(sec.line, format!("duplicate strategy `{}`", sec.name));
            continue;
        }
        if sec.name == "main" && strategies.iter().any(|s| s.name == "main") {
            p.err(
                sec.line,
                "strategy name `main` is taken by the top-level schedule",
            );
            continue;
        }
        match &sec.schedule {
            Some((line, schedule)) => {
                if let Some(st) =
                    resolve(&mut p, &sec.name, *line, schedule.clone(), &sec.keys, None)
                {
                    strategies.push(st);
                }
            }
            None => p.err(
                sec.line,
                format!("strategy `{}` has no `schedule`", sec.name),
            ),
        }
    }
    if strategies.is_empty() && p.errors.is_empty() {
        p.err(
            0,
            "no strategy defined: add `schedule = ...` or a `[strategy <name>]` section",
        );
    }

    if !p.errors.is_empty() {
        p.errors.sort_by_key(|e| e.line);
        return Err(Error::Config(p.errors));
    }
    Ok(ExperimentConfig {
        arms: arms.expect("checked"),
        players: players.expect("checked"),
        horizon: horizon.expect("checked"),
        seed: seed.or(base.map(|b| b.seed)).unwrap_or(0),
        replications: replications
            .or(base.map(|b| b.replications))
            .unwrap_or(DEFAULT_REPLICATIONS),
        checkpoints,
        bounds: bounds.or(base.map(|b| b.bounds)).unwrap_or(false),
        flag_threshold: flag_threshold.unwrap_or(DEFAULT_FLAG_THRESHOLD),
        out_dir,
        strategies,
    })
}
