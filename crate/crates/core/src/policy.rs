//! Per-player arm selection: the UCB and KL-UCB index adaptations and the
//! DKLUCB count-prediction policy.
//!
//! Every rule reads only a [`PlayerView`], i.e. the per-arm sufficient
//! statistics of the rewards a player currently knows about, plus (for
//! DKLUCB) the global counts frozen at the last communication round.

use std::fmt;
use std::str::FromStr;

use crate::divergence::kl_unchecked;
use crate::error::{Error, Result};
use crate::exploration::{dklucb_scale, ExplorationFunction, ExplorationKind};

/// Absolute tolerance of the KL-UCB bisection on `q`.
pub const KLUCB_TOLERANCE: f64 = 1e-9;
/// Iteration cap of the KL-UCB bisection.
pub const KLUCB_MAX_ITERATIONS: u32 = 64;

/// One player's knowledge about every arm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerView {
    counts: Vec<u64>,
    sums: Vec<u64>,
    snapshot: Vec<u64>,
    total: u64,
}

impl PlayerView {
    /// A view with no observations on `num_arms` arms.
    pub fn new(num_arms: usize) -> Self {
        Self {
            counts: vec![0; num_arms],
            sums: vec![0; num_arms],
            snapshot: vec![0; num_arms],
            total: 0,
        }
    }

    /// Builds a view from explicit statistics, checking
    /// `sum ≤ count` and `snapshot ≤ count` per arm.
    pub fn from_parts(counts: Vec<u64>, sums: Vec<u64>, snapshot: Vec<u64>) -> Result<Self> {
        if counts.len() != sums.len() || counts.len() != snapshot.len() {
            return Err(Error::ShapeMismatch(
                "counts, sums and snapshot must have one entry per arm".into(),
            ));
        }
        for a in 0..counts.len() {
            if sums[a] > counts[a] || snapshot[a] > counts[a] {
                return Err(Error::InvalidRun(format!(
                    "arm {a}: need sum <= count and snapshot <= count, got count={} sum={} snapshot={}",
                    counts[a], sums[a], snapshot[a]
                )));
            }
        }
        let total = counts.iter().sum();
        Ok(Self {
            counts,
            sums,
            snapshot,
            total,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn known_count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn known_sum(&self, arm: usize) -> u64 {
        self.sums[arm]
    }

    pub fn snapshot_count(&self, arm: usize) -> u64 {
        self.snapshot[arm]
    }

    pub fn total_known(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    pub fn snapshot(&self) -> &[u64] {
        &self.snapshot
    }

    /// `μ̃(a)`; `None` for an arm with no known rewards.
    pub fn empirical_mean(&self, arm: usize) -> Option<f64> {
        match self.counts[arm] {
            0 => None,
            n => Some(self.sums[arm] as f64 / n as f64),
        }
    }

    pub(crate) fn record(&mut self, arm: usize, reward: bool) {
        self.counts[arm] += 1;
        self.sums[arm] += u64::from(reward);
        self.total += 1;
    }

    /// Replaces the view with the global statistics and refreshes the snapshot.
    pub(crate) fn merge_from(&mut self, counts: &[u64], sums: &[u64]) {
        self.counts.copy_from_slice(counts);
        self.sums.copy_from_slice(sums);
        self.snapshot.copy_from_slice(counts);
        self.total = counts.iter().sum();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyRule {
    Ucb,
    KlUcb,
    Dklucb,
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyRule::Ucb => "ucb",
            PolicyRule::KlUcb => "klucb",
            PolicyRule::Dklucb => "dklucb",
        })
    }
}

impl FromStr for PolicyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ucb" => Ok(PolicyRule::Ucb),
            "klucb" => Ok(PolicyRule::KlUcb),
            "dklucb" => Ok(PolicyRule::Dklucb),
            other => Err(Error::InvalidPolicy {
                input: other.to_string(),
                reason: "policy must be one of `ucb`, `klucb`, `dklucb`".into(),
            }),
        }
    }
}

/// Index rule, exploration function and (for DKLUCB) the density `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    rule: PolicyRule,
    exploration: ExplorationKind,
    alpha: f64,
}

impl PolicySpec {
    pub fn new(rule: PolicyRule, exploration: ExplorationKind) -> Result<Self> {
        if rule == PolicyRule::Dklucb {
            return Self::dklucb(1.0, exploration);
        }
        Ok(Self {
            rule,
            exploration,
            alpha: 1.0,
        })
    }

    pub fn ucb(exploration: ExplorationKind) -> Self {
        Self {
            rule: PolicyRule::Ucb,
            exploration,
            alpha: 1.0,
        }
    }

    pub fn klucb(exploration: ExplorationKind) -> Self {
        Self {
            rule: PolicyRule::KlUcb,
            exploration,
            alpha: 1.0,
        }
    }

    /// DKLUCB scales the standard exploration function, so `ln2t` is rejected.
    pub fn dklucb(alpha: f64, exploration: ExplorationKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidPolicy {
                input: format!("alpha = {alpha}"),
                reason: "DKLUCB needs a density in [0, 1]".into(),
            });
        }
        if exploration != ExplorationKind::Standard {
            return Err(Error::InvalidPolicy {
                input: format!("dklucb with exploration = {exploration}"),
                reason: "DKLUCB is defined on the standard exploration function".into(),
            });
        }
        Ok(Self {
            rule: PolicyRule::Dklucb,
            exploration,
            alpha,
        })
    }

    pub fn rule(&self) -> PolicyRule {
        self.rule
    }

    pub fn exploration(&self) -> ExplorationKind {
        self.exploration
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The exploration function the rule evaluates for `players` players.
    pub fn exploration_function(&self, players: u32) -> ExplorationFunction {
        match (self.rule, self.exploration) {
            (PolicyRule::Dklucb, _) => ExplorationFunction::Dklucb {
                players,
                alpha: self.alpha,
            },
            (_, ExplorationKind::Standard) => ExplorationFunction::Standard,
            (_, ExplorationKind::Ln2t) => ExplorationFunction::Approximate,
        }
    }

    /// `𝓕` for the player deciding round `round`. The standard function is
    /// evaluated at the number of known rewards; `ln2t` at the round itself.
    pub fn exploration_at(&self, view: &PlayerView, players: u32, round: u64) -> f64 {
        let f = self.exploration_function(players);
        match f {
            ExplorationFunction::Approximate => f.value(round as f64),
            _ => f.value(view.total_known() as f64),
        }
    }
}

/// `μ̃(a) + √(𝓕 / 2N(a))`. Requires `N(a) ≥ 1`.
pub fn ucb_index(view: &PlayerView, arm: usize, f_value: f64) -> f64 {
    let n = view.known_count(arm) as f64;
    let mean = view.sums[arm] as f64 / n;
    mean + (f_value / (2.0 * n)).sqrt()
}

/// `sup{q : 𝒦′(μ̂(a), q) ≤ 𝓕 / denom}`. Requires `N(a) ≥ 1`, `denom > 0`.
pub fn klucb_index(view: &PlayerView, arm: usize, f_value: f64, denom: f64) -> f64 {
    let n = view.known_count(arm) as f64;
    klucb_upper_bound(view.sums[arm] as f64 / n, f_value / denom)
}

/// Largest `q ∈ [mean, 1]` with `𝒦(mean, q) ≤ budget`, by bisection.
pub fn klucb_upper_bound(mean: f64, budget: f64) -> f64 {
    if mean >= 1.0 || budget.is_infinite() {
        return 1.0;
    }
    if budget.is_nan() || budget <= 0.0 {
        return mean;
    }
    // Pinsker: 𝒦(p, q) ≥ 2(q − p)², so the supremum is below p + √(budget/2).
    let mut lo = mean;
    let mut hi = (mean + (budget / 2.0).sqrt()).min(1.0);
    if hi < 1.0 && kl_unchecked(mean, hi) <= budget {
        return hi;
    }
    for _ in 0..KLUCB_MAX_ITERATIONS {
        if hi - lo <= KLUCB_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kl_unchecked(mean, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest `q ∈ [0, mean]` with `𝒦(mean, q) ≤ budget`, using
/// `𝒦(p, q) = 𝒦(1 − p, 1 − q)` and the upper-bound bisection.
pub fn kl_lower_bound(mean: f64, budget: f64) -> f64 {
    1.0 - klucb_upper_bound(1.0 - mean, budget)
}

/// `N′(a) =N(a) + (M − 1) min(N(a) − N_ℓ(a), u(a))` with
/// `u(a) = N_ℓ(a)/M · (1/α − 1)`, and `u = ∞` when `α = 0`.
pub fn count_prediction(view: &PlayerView, arm: usize, players: u32, alpha: f64) -> f64 {
    let n = view.known_count(arm) as f64;
    let snap = view.snapshot_count(arm) as f64;
    let m = f64::from(players);
    let local = n - snap;
    let u = if alpha == 0.0 {
        f64::INFINITY
    } else {
        snap / m * (1.0 / alpha - 1.0)
    };
    n + (m - 1.0) * local.min(u)
}

/// Upper bound `M / (1 + (M − 1) α) · N(a)` that every count prediction obeys.
pub fn count_prediction_bound(view: &PlayerView, arm: usize, players: u32, alpha: f64) -> f64 {
    dklucb_scale(players, alpha) * view.known_count(arm) as f64
}

/// The arm player decides to pull in round `round` (1-based) given its view.
///
/// Unpulled arms go first in ascending order. Otherwise the argmax of the
/// rule's index is returned, ties going to the lowest arm.
pub fn select_arm(view: &PlayerView, spec: &PolicySpec, players: u32, round: u64) -> Result<usize> {
    if view.num_arms() == 0 {
        return Err(Error::EmptyArmSet);
    }
    if let Some(arm) = view.counts.iter().position(|&n| n == 0) {
        return Ok(arm);
    }
    let f_value = spec.exploration_at(view, players, round);
    let index = |arm: usize| match spec.rule {
        PolicyRule::Ucb => ucb_index(view, arm, f_value),
        PolicyRule::KlUcb => klucb_index(view, arm, f_value, view.known_count(arm) as f64),
        PolicyRule::Dklucb => klucb_index(
            view,
            arm,
            f_value,
            count_prediction(view, arm, players, spec.alpha),
        ),
    };
    let mut best = 0;
    let mut best_value = index(0);
    for arm in 1..view.num_arms() {
        let value = index(arm);
        if value > best_value {
            best = arm;
            best_value = value;
        }
    }
    Ok(best)
}
