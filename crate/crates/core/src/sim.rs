//! Round-based execution of the distributed bandit process.
//!
//! Within a round every player selects from its view as it stood at the end
//! of the previous round, then all rewards are drawn and recorded, then, if
//! the round is in `𝒞`, all views are merged. Rewards are kept as per-arm
//! `(count, sum)` statistics since every implemented rule reads only those.
//!
//! Each `(replication, player)` pair owns an independent ChaCha8 stream
//! seeded by [`stream_seed`], so a run is a pure function of the
//! configuration and the replication index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arms::BernoulliArmModel;
use crate::error::{Error, Result};
use crate::policy::{
    count_prediction, count_prediction_bound, select_arm, PlayerView, PolicyRule, PolicySpec,
};
use crate::schedule::CommunicationSchedule;

/// Everything that determines a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub arms: BernoulliArmModel,
    pub players: u32,
    pub horizon: u64,
    pub schedule: CommunicationSchedule,
    pub policy: PolicySpec,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub replications: u32,
}

/// Powers of two up to and including `horizon`.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |&c| c.checked_mul(2))
        .take_while(|&c| c <= horizon)
        .collect()
}

impl RunConfig {
    /// Seed 0, one replication, power-of-two checkpoints.
    pub fn new(
        arms: BernoulliArmModel,
        players: u32,
        horizon: u64,
        schedule: CommunicationSchedule,
        policy: PolicySpec,
    ) -> Result<Self> {
        let cfg = Self {
            arms,
            players,
            horizon,
            schedule,
            policy,
            seed: 0,
            checkpoints: default_checkpoints(horizon),
            replications: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: u32) -> Result<Self> {
        self.replications = replications;
        self.validate()?;
        Ok(self)
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Result<Self> {
        self.checkpoints = checkpoints;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidRun(msg));
        if self.players == 0 {
            return fail("at least one player is required".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.replications == 0 {
            return fail("at least one replication is required".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return fail("checkpoints must be strictly increasing".into());
        }
        if let Some(&c) = self
            .checkpoints
            .iter()
            .find(|&&c| c == 0 || c > self.horizon)
        {
            return fail(format!("checkpoint {c} is outside [1, {}]", self.horizon));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the reward stream owned by `player` in `replication`.
pub fn stream_seed(seed: u64, replication: u64, player: u32) -> u64 {
    mix64(mix64(mix64(seed) ^ replication) ^ u64::from(player))
}

/// Full state of one replication at the end of round [`WorldState::round`].
#[derive(Debug, Clone)]
pub struct WorldState {
    round: u64,
    views: Vec<PlayerView>,
    global_counts: Vec<u64>,
    global_sums: Vec<u64>,
    selections: Vec<usize>,
    rngs: Vec<ChaCha8Rng>,
}

impl WorldState {
    pub fn new(cfg: &RunConfig, replication: u64) -> Self {
        let k = cfg.arms.num_arms();
        let m = cfg.players as usize;
        Self {
            round: 0,
            views: vec![PlayerView::new(k); m],
            global_counts: vec![0; k],
            global_sums: vec![0; k],
            selections: Vec::with_capacity(m),
            rngs: (0..cfg.players)
                .map(|p| ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, replication, p)))
                .collect(),
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn views(&self) -> &[PlayerView] {
        &self.views
    }

    pub fn view(&self, player: usize) -> &PlayerView {
        &self.views[player]
    }

    /// `N_t(a)` over all players.
    pub fn global_counts(&self) -> &[u64] {
        &self.global_counts
    }

    pub fn global_sums(&self) -> &[u64] {
        &self.global_sums
    }

    /// Arms pulled in the last completed round, by player.
    pub fn last_selections(&self) -> &[usize] {
        &self.selections
    }

    /// Plays round `t + 1`.
    pub fn step(&mut self, cfg: &RunConfig) -> Result<()> {
        if self.round >= cfg.horizon {
            return Err(Error::InvalidRun(format!(
                "round {} already reached the horizon",
                self.round
            )));
        }
        let t = self.round + 1;
        self.selections.clear();
        for view in &self.views {
            self.selections
                .push(select_arm(view, &cfg.policy, cfg.players, t)?);
        }
        for (p, &arm) in self.selections.iter().enumerate() {
            let reward = self.rngs[p].gen::<f64>() < cfg.arms.mean(arm);
            self.views[p].record(arm, reward);
            self.global_counts[arm] += 1;
            self.global_sums[arm] += u64::from(reward);
        }
        self.round = t;
        if cfg.schedule.is_comm_round(t) {
            self.merge_views();
        }
        Ok(())
    }

    /// Every player learns the global statistics; the snapshot is refreshed.
    pub fn merge_views(&mut self) {
        for view in &mut self.views {
            view.merge_from(&self.global_counts, &self.global_sums);
        }
    }

    /// Builds a state from per-player views holding disjoint samples (no
    /// snapshot yet); the global totals are their sums. Used by tests and
    /// tooling that need a hand-made state.
    pub fn from_views(cfg: &RunConfig, round: u64, views: Vec<PlayerView>) -> Result<Self> {
        let k = cfg.arms.num_arms();
        if views.len() != cfg.players as usize || views.iter().any(|v| v.num_arms() != k) {
            return Err(Error::ShapeMismatch(format!(
                "expected {} views over {k} arms",
                cfg.players
            )));
        }
        if views.iter().any(|v| v.snapshot().iter().any(|&s| s != 0)) {
            return Err(Error::InvalidRun(
                "hand-made states must not carry a snapshot".into(),
            ));
        }
        let mut state = Self::new(cfg, 0);
        state.round = round;
        for a in 0..k {
            state.global_counts[a] = views.iter().map(|v| v.known_count(a)).sum();
            state.global_sums[a] = views.iter().map(|v| v.known_sum(a)).sum();
        }
        state.views = views;
        Ok(state)
    }
}

/// Hook called after every completed round.
pub trait RoundObserver {
    fn on_round(&mut self, cfg: &RunConfig, state: &WorldState);
}

impl<F: FnMut(&RunConfig, &WorldState)> RoundObserver for F {
    fn on_round(&mut self, cfg: &RunConfig, state: &WorldState) {
        self(cfg, state)
    }
}

/// `N_t(a)` recorded at each checkpoint of one replication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointCounts {
    pub checkpoints: Vec<u64>,
    /// `counts[i][a]` is `N_{checkpoints[i]}(a)`.
    pub counts: Vec<Vec<u64>>,
}

pub fn run_once(cfg: &RunConfig, replication: u64) -> Result<CheckpointCounts> {
    run_once_observed(cfg, replication, &mut |_: &RunConfig, _: &WorldState| {})
}

pub fn run_once_observed(
    cfg: &RunConfig,
    replication: u64,
    observer: &mut dyn RoundObserver,
) -> Result<CheckpointCounts> {
    cfg.validate()?;
    let mut state = WorldState::new(cfg, replication);
    let mut counts = Vec::with_capacity(cfg.checkpoints.len());
    let mut next = cfg.checkpoints.iter().peekable();
    while state.round < cfg.horizon {
        state.step(cfg)?;
        observer.on_round(cfg, &state);
        if next.peek() == Some(&&state.round) {
            counts.push(state.global_counts.clone());
            next.next();
        }
    }
    Ok(CheckpointCounts {
        checkpoints: cfg.checkpoints.clone(),
        counts,
    })
}

/// Exact integer moments; merging is associative and commutative.
#[derive(Debug, Clone)]
struct Moments {
    n: u64,
    sum: Vec<Vec<u128>>,
    sum_sq: Vec<Vec<u128>>,
}

impl Moments {
    fn zero(checkpoints: usize, arms: usize) -> Self {
        Self {
            n: 0,
            sum: vec![vec![0; arms]; checkpoints],
            sum_sq: vec![vec![0; arms]; checkpoints],
        }
    }

    fn add(mut self, run: &CheckpointCounts) -> Self {
        self.n += 1;
        for (i, row) in run.counts.iter().enumerate() {
            for (a, &c) in row.iter().enumerate() {
                let c = u128::from(c);
                self.sum[i][a] += c;
                self.sum_sq[i][a] += c * c;
            }
        }
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        for (i, row) in other.sum.iter().enumerate() {
            for (a, &s) in row.iter().enumerate() {
                self.sum[i][a] += s;
                self.sum_sq[i][a] += other.sum_sq[i][a];
            }
        }
        self
    }
}

/// Monte Carlo summary of `N_t(a)` at each checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAggregate {
    pub checkpoints: Vec<u64>,
    pub replications: u64,
    /// `mean[i][a]`: mean of `N_{checkpoints[i]}(a)`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of `mean[i][a]` (unbiased variance; 0 for one replication).
    pub stderr: Vec<Vec<f64>>,
    /// `Σ_a Δ_a mean[i][a]`.
    pub regret: Vec<f64>,
}

impl RunAggregate {
    fn from_moments(checkpoints: Vec<u64>, arms: &BernoulliArmModel, m: &Moments) -> Self {
        let n = m.n as f64;
        let mut mean = Vec::with_capacity(checkpoints.len());
        let mut stderr = Vec::with_capacity(checkpoints.len());
        for (sums, sqs) in m.sum.iter().zip(&m.sum_sq) {
            mean.push(sums.iter().map(|&s| s as f64 / n).collect::<Vec<_>>());
            stderr.push(
                sums.iter()
                    .zip(sqs)
                    .map(|(&s, &q)| {
                        if m.n < 2 {
                            return 0.0;
                        }
                        // n Σx² − (Σx)² is exact in integers
                        let scaled = u128::from(m.n) * q - s * s;
                        let var = scaled as f64 / (n * (n - 1.0));
                        (var / n).sqrt()
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let regret = mean.iter().map(|row| arms.regret_from_pulls(row)).collect();
        Self {
            checkpoints,
            replications: m.n,
            mean,
            stderr,
            regret,
        }
    }

    fn index_of(&self, t: u64) -> Result<usize> {
        self.checkpoints
            .binary_search(&t)
            .map_err(|_| Error::UnknownCheckpoint(t))
    }

    pub fn num_arms(&self) -> usize {
        self.mean.first().map_or(0, Vec::len)
    }

    pub fn mean_pulls(&self, t: u64, arm: usize) -> Result<f64> {
        Ok(self.mean[self.index_of(t)?][arm])
    }

    pub fn stderr_pulls(&self, t: u64, arm: usize) -> Result<f64> {
        Ok(self.stderr[self.index_of(t)?][arm])
    }

    pub fn regret_at(&self, t: u64) -> Result<f64> {
        Ok(self.regret[self.index_of(t)?])
    }
}

/// `Σ_a Δ_a · mean N_t(a)` recomputed from an aggregate.
pub fn regret(aggregate: &RunAggregate, arms: &BernoulliArmModel, t: u64) -> Result<f64> {
    let i = aggregate.index_of(t)?;
    Ok(arms.regret_from_pulls(&aggregate.mean[i]))
}

/// Aggregates `run_once` over all replications in parallel.
pub fn run_monte_carlo(cfg: &RunConfig) -> Result<RunAggregate> {
    cfg.validate()?;
    let (c, k) = (cfg.checkpoints.len(), cfg.arms.num_arms());
    let moments = (0..u64::from(cfg.replications))
        .into_par_iter()
        .map(|r| run_once(cfg, r))
        .try_fold(
            || Moments::zero(c, k),
            |acc, run| run.map(|run| acc.add(&run)),
        )
        .try_reduce(|| Moments::zero(c, k), |a, b| Ok(a.merge(b)))?;
    Ok(RunAggregate::from_moments(
        cfg.checkpoints.clone(),
        &cfg.arms,
        &moments,
    ))
}

/// Serial aggregation of an explicit list of runs.
pub fn aggregate_runs(cfg: &RunConfig, runs: &[CheckpointCounts]) -> RunAggregate {
    let moments = runs.iter().fold(
        Moments::zero(cfg.checkpoints.len(), cfg.arms.num_arms()),
        Moments::add,
    );
    RunAggregate::from_moments(cfg.checkpoints.clone(), &cfg.arms, &moments)
}

/// Counts violations of the DKLUCB count-prediction claims on every round:
/// `N′_p(a) ≤ M/(1+(M−1)α) · N_p(a)` per player and arm, and
/// `Σ_p N′_p(a) ≤ M · N_t(a)` per arm.
#[derive(Debug, Clone, Default)]
pub struct ClaimMonitor {
    pub rounds: u64,
    pub per_player_checks: u64,
    pub per_arm_checks: u64,
    pub bound_violations: u64,
    pub sum_violations: u64,
}

/// Relative slack for floating-point comparisons in the claim checks.
const CLAIM_SLACK: f64 = 1e-9;

impl RoundObserver for ClaimMonitor {
    fn on_round(&mut self, cfg: &RunConfig, state: &WorldState) {
        let alpha = match cfg.policy.rule() {
            PolicyRule::Dklucb => cfg.policy.alpha(),
            _ => 1.0,
        };
        self.rounds += 1;
        for (a, &global) in state.global_counts().iter().enumerate() {
            let mut total = 0.0;
            for view in state.views() {
                let predicted = count_prediction(view, a, cfg.players, alpha);
                let bound = count_prediction_bound(view, a, cfg.players, alpha);
                self.per_player_checks += 1;
                if predicted > bound * (1.0 + CLAIM_SLACK) {
                    self.bound_violations += 1;
                }
                total += predicted;
            }
            self.per_arm_checks += 1;
            let cap = f64::from(cfg.players) * global as f64;
            if total > cap * (1.0 + CLAIM_SLACK) {
                self.sum_violations += 1;
            }
        }
    }
}

/// Checks conservation, monotone knowledge and post-merge equality.
#[derive(Debug, Clone, Default)]
pub struct ConservationMonitor {
    pub rounds: u64,
    pub conservation_violations: u64,
    pub knowledge_violations: u64,
    pub merge_violations: u64,
    previous: Option<(Vec<u64>, Vec<Vec<u64>>)>,
}

impl RoundObserver for ConservationMonitor {
    fn on_round(&mut self, cfg: &RunConfig, state: &WorldState) {
        self.rounds += 1;
        let global = state.global_counts();
        let pulled: u64 = global.iter().sum();
        if pulled != u64::from(cfg.players) * state.round() {
            self.conservation_violations += 1;
        }
        for view in state.views() {
            let consistent = (0..global.len()).all(|a| {
                view.snapshot_count(a) <= view.known_count(a) && view.known_count(a) <= global[a]
            });
            if !consistent {
                self.knowledge_violations += 1;
            }
        }
        let known: Vec<Vec<u64>> = state.views().iter().map(|v| v.counts().to_vec()).collect();
        if let Some((prev_global, prev_known)) = &self.previous {
            let shrunk = prev_global.iter().zip(global).any(|(p, c)| c < p)
                || prev_known
                    .iter()
                    .zip(&known)
                    .any(|(p, c)| p.iter().zip(c).any(|(x, y)| y < x));
            if shrunk {
                self.knowledge_violations += 1;
            }
        }
        if cfg.schedule.is_comm_round(state.round()) {
            let merged = state.views().iter().all(|v| {
                v.counts() == global && v.sums() == state.global_sums() && v.snapshot() == global
            });
            if !merged {
                self.merge_violations += 1;
            }
        }
        self.previous = Some((global.to_vec(), known));
    }
}

impl ConservationMonitor {
    pub fn violations(&self) -> u64 {
        self.conservation_violations + self.knowledge_violations + self.merge_violations
    }
}
