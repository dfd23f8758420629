use dbandit::divergence::kl_bernoulli;
use dbandit::exploration::ExplorationKind;
use dbandit::sim::{
    aggregate_runs, run_monte_carlo, run_once, run_once_observed, ClaimMonitor,
    ConservationMonitor, WorldState,
};
use dbandit::{BernoulliArmModel, CommunicationSchedule, PolicySpec, RunConfig};
use proptest::prelude::*;

fn config(
    means: &[f64],
    players: u32,
    horizon: u64,
    schedule: &str,
    policy: PolicySpec,
) -> RunConfig {
    RunConfig::new(
        BernoulliArmModel::new(means.to_vec()).unwrap(),
        players,
        horizon,
        schedule.parse().unwrap(),
        policy,
    )
    .unwrap()
}

fn schedule_strategy() -> impl Strategy<Value = CommunicationSchedule> {
    prop_oneof![
        Just(CommunicationSchedule::none()),
        Just(CommunicationSchedule::full()),
        (1u64..64).prop_map(|r| CommunicationSchedule::one_shot(r).unwrap()),
        (1u64..40).prop_map(|d| CommunicationSchedule::linear(d).unwrap()),
        (1.2f64..4.0).prop_map(|q| CommunicationSchedule::exponential(q).unwrap()),
        (1.5f64..3.0, 0.1f64..2.0)
            .prop_map(|(q, e)| CommunicationSchedule::double_exponential(q, e).unwrap()),
        prop::collection::btree_set(1u64..200, 1..8)
            .prop_map(|s| CommunicationSchedule::explicit(s.into_iter().collect()).unwrap()),
    ]
}

fn policy_strategy() -> impl Strategy<Value = PolicySpec> {
    prop_oneof![
        Just(PolicySpec::ucb(ExplorationKind::Standard)),
        Just(PolicySpec::ucb(ExplorationKind::Ln2t)),
        Just(PolicySpec::klucb(ExplorationKind::Standard)),
        Just(PolicySpec::klucb(ExplorationKind::Ln2t)),
        (0.0f64..=1.0).prop_map(|a| PolicySpec::dklucb(a, ExplorationKind::Standard).unwrap()),
    ]
}

fn run_config_strategy() -> impl Strategy<Value = RunConfig> {
    (
        prop::collection::vec(0.0f64..=1.0, 1..5),
        1u32..5,
        1u64..200,
        schedule_strategy(),
        policy_strategy(),
        any::<u64>(),
    )
        .prop_map(|(means, players, horizon, schedule, policy, seed)| {
            RunConfig::new(
                BernoulliArmModel::new(means).unwrap(),
                players,
                horizon,
                schedule,
                policy,
            )
            .unwrap()
            .with_seed(seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conservation_and_merge_hold(cfg in run_config_strategy()) {
        let mut monitor = ConservationMonitor::default();
        run_once_observed(&cfg, 0, &mut monitor).unwrap();
        prop_assert_eq!(monitor.rounds, cfg.horizon);
        prop_assert_eq!(monitor.violations(), 0);
    }

    #[test]
    fn claims_hold_on_random_runs(cfg in run_config_strategy()) {
        let mut monitor = ClaimMonitor::default();
        run_once_observed(&cfg, 0, &mut monitor).unwrap();
        prop_assert_eq!(monitor.bound_violations, 0);
        prop_assert_eq!(monitor.sum_violations, 0);
    }

    #[test]
    fn merge_is_idempotent(cfg in run_config_strategy(), stop in 1u64..200) {
        let mut state = WorldState::new(&cfg, 0);
        for _ in 0..stop.min(cfg.horizon) {
            state.step(&cfg).unwrap();
        }
        let mut once = state.clone();
        once.merge_views();
        let mut twice = once.clone();
        twice.merge_views();
        prop_assert_eq!(once.views(), twice.views());
        for v in once.views() {
            prop_assert_eq!(v.counts(), once.global_counts());
            prop_assert_eq!(v.sums(), once.global_sums());
            prop_assert_eq!(v.snapshot(), once.global_counts());
        }
    }

    #[test]
    fn replications_are_reproducible(cfg in run_config_strategy(), rep in 0u64..1000) {
        prop_assert_eq!(run_once(&cfg, rep).unwrap(), run_once(&cfg, rep).unwrap());
    }
}

/// Straightforward re-statement of the protocol for deterministic arms, where
/// rewards do not depend on the random stream.
fn brute_force(
    means: &[f64],
    players: usize,
    horizon: u64,
    schedule: &CommunicationSchedule,
    klucb: bool,
) -> Vec<Vec<usize>> {
    let k = means.len();
    let mut counts = vec![vec![0u64; k]; players];
    let mut sums = vec![vec![0u64; k]; players];
    let mut global = (vec![0u64; k], vec![0u64; k]);
    let mut trace = Vec::new();
    for t in 1..=horizon {
        let mut picks = Vec::new();
        for p in 0..players {
            let pick = if let Some(a) = (0..k).find(|&a| counts[p][a] == 0) {
                a
            } else {
                let total: u64 = counts[p].iter().sum();
                let f = if klucb {
                    let x = total as f64;
                    if x <= 1.0 {
                        0.0
                    } else {
                        (x.ln() + 3.0 * x.ln().ln().max(0.0)).max(0.0)
                    }
                } else {
                    (2.0 * t as f64).ln()
                };
                let index = |a: usize| {
                    let n = counts[p][a] as f64;
                    let mean = sums[p][a] as f64 / n;
                    if klucb {
                        let budget = f / n;
                        // scan from the top: first q with kl(mean, q) <= budget
                        let mut lo = mean;
                        let mut hi = 1.0;
                        if kl_bernoulli(mean, 1.0).unwrap() <= budget {
                            return 1.0;
                        }
                        for _ in 0..200 {
                            let mid = 0.5 * (lo + hi);
                            if kl_bernoulli(mean, mid).unwrap() <= budget {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        lo
                    } else {
                        mean + (f / (2.0 * n)).sqrt()
                    }
                };
                let mut best = 0;
                for a in 1..k {
                    if index(a) > index(best) {
                        best = a;
                    }
                }
                best
            };
            picks.push(pick);
        }
        for (p, &a) in picks.iter().enumerate() {
            let r = u64::from(means[a] == 1.0);
            counts[p][a] += 1;
            sums[p][a] += r;
            global.0[a] += 1;
            global.1[a] += r;
        }
        if schedule.is_comm_round(t) {
            for p in 0..players {
                counts[p] = global.0.clone();
                sums[p] = global.1.clone();
            }
        }
        trace.push(picks);
    }
    trace
}

#[test]
fn degenerate_arms_match_brute_force() {
    let means = [1.0, 0.0];
    for schedule in ["none", "full", "exp:2", "linear:5", "explicit:3,7,20"] {
        for (klucb, policy) in [
            (false, PolicySpec::ucb(ExplorationKind::Ln2t)),
            (true, PolicySpec::klucb(ExplorationKind::Standard)),
        ] {
            let cfg = config(&means, 2, 32, schedule, policy);
            let expected = brute_force(&means, 2, 32, &cfg.schedule, klucb);
            let mut state = WorldState::new(&cfg, 0);
            for picks in &expected {
                state.step(&cfg).unwrap();
                assert_eq!(
                    state.last_selections(),
                    picks.as_slice(),
                    "{schedule}, round {}",
                    state.round()
                );
            }
            assert_eq!(state.global_sums()[1], 0);
            assert_eq!(state.global_sums()[0], state.global_counts()[0]);
        }
    }
}

#[test]
fn pooled_reward_estimate_is_unbiased() {
    let means = [0.7, 0.4];
    let cfg = config(
        &means,
        2,
        200,
        "exp:2",
        PolicySpec::klucb(ExplorationKind::Standard),
    );
    let mut counts = [0u64; 2];
    let mut sums = [0u64; 2];
    for rep in 0..400 {
        let mut state = WorldState::new(&cfg, rep);
        while state.round() < cfg.horizon {
            state.step(&cfg).unwrap();
        }
        state.merge_views();
        let v = state.view(1);
        for a in 0..2 {
            counts[a] += v.known_count(a);
            sums[a] += v.known_sum(a);
        }
    }
    for a in 0..2 {
        let n = counts[a] as f64;
        let estimate = sums[a] as f64 / n;
        let se = (means[a] * (1.0 - means[a]) / n).sqrt();
        assert!(
            (estimate - means[a]).abs() < 3.0 * se,
            "arm {a}: {estimate} vs {} (se {se})",
            means[a]
        );
    }
}

#[test]
fn stderr_shrinks_with_replications() {
    let base = config(
        &[0.9, 0.8],
        2,
        512,
        "exp:2",
        PolicySpec::klucb(ExplorationKind::Standard),
    );
    let small = run_monte_carlo(&base.clone().with_replications(300).unwrap()).unwrap();
    let large = run_monte_carlo(&base.with_replications(600).unwrap()).unwrap();
    let last = small.checkpoints.len() - 1;
    let ratio = large.stderr[last][1] / small.stderr[last][1];
    assert!(
        (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.1,
        "ratio {ratio}"
    );
}

#[test]
fn parallel_aggregate_matches_serial() {
    let cfg = config(
        &[0.9, 0.8, 0.5],
        3,
        300,
        "doubleexp:2,1",
        PolicySpec::dklucb(0.5, ExplorationKind::Standard).unwrap(),
    )
    .with_seed(17)
    .with_replications(24)
    .unwrap();
    let runs: Vec<_> = (0..24).map(|r| run_once(&cfg, r).unwrap()).collect();
    assert_eq!(run_monte_carlo(&cfg).unwrap(), aggregate_runs(&cfg, &runs));
}

#[test]
fn seeds_change_outcomes() {
    let cfg = config(
        &[0.6, 0.5],
        2,
        400,
        "none",
        PolicySpec::klucb(ExplorationKind::Standard),
    );
    let a = run_once(&cfg.clone().with_seed(1), 0).unwrap();
    let b = run_once(&cfg.clone().with_seed(2), 0).unwrap();
    let c = run_once(&cfg.with_seed(1), 1).unwrap();
    assert_ne!(a, b);
    assert_ne!(a, c);
}

#[test]
fn one_replication_has_zero_stderr() {
    let cfg = config(
        &[0.6, 0.5],
        2,
        64,
        "full",
        PolicySpec::ucb(ExplorationKind::Ln2t),
    );
    let agg = run_monte_carlo(&cfg).unwrap();
    assert!(agg.stderr.iter().flatten().all(|&s| s == 0.0));
}
