//! Leading-term constants of the asymptotic regret bounds and comparison of
//! simulated pull counts against them.
//!
//! Only the `coefficient · ln t` leading terms are materialised; the
//! `o(ln t)` remainders have no finite-time constants and are left out.

use std::fmt;
use std::io::Write;

use crate::arms::BernoulliArmModel;
use crate::divergence::d_inf_bernoulli;
use crate::error::{Error, Result};
use crate::exploration::dklucb_scale;
use crate::sim::RunAggregate;

/// `M / (1 + (M − 1) α) · 1 / D_inf(μ_a, μ*)`.
pub fn lower_bound_coefficient(players: u32, alpha: f64, mu_a: f64, mu_star: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if players == 0 {
        return Err(Error::InvalidRun("at least one player is required".into()));
    }
    Ok(dklucb_scale(players, alpha) / d_inf_bernoulli(mu_a, mu_star)?)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "alpha",
            value: alpha,
        })
    }
}

/// Which upper bound a configuration falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperBound {
    /// KL-UCB adaptation with the single round `⌈T^{1/M}⌉`.
    OverExploration,
    /// KL-UCB adaptation on a density-one communication set.
    DenseSchedule,
    /// DKLUCB on a communication set of density `α`.
    Dklucb,
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpperBound::OverExploration => "over-exploration",
            UpperBound::DenseSchedule => "dense-schedule",
            UpperBound::Dklucb => "dklucb",
        })
    }
}

/// Leading coefficient of `ln T` in the upper bound; `alpha` is only read
/// for [`UpperBound::Dklucb`].
pub fn upper_bound_coefficient(
    bound: UpperBound,
    players: u32,
    alpha: f64,
    mu_a: f64,
    mu_star: f64,
) -> Result<f64> {
    let d = d_inf_bernoulli(mu_a, mu_star)?;
    match bound {
        UpperBound::OverExploration | UpperBound::DenseSchedule => Ok(1.0 / d),
        UpperBound::Dklucb => {
            check_alpha(alpha)?;
            Ok(dklucb_scale(players, alpha) / d)
        }
    }
}

/// `coefficient · ln t` at each checkpoint.
pub fn upper_bound_curve(
    bound: UpperBound,
    players: u32,
    alpha: f64,
    mu_a: f64,
    mu_star: f64,
    checkpoints: &[u64],
) -> Result<Vec<f64>> {
    let c = upper_bound_coefficient(bound, players, alpha, mu_a, mu_star)?;
    Ok(checkpoints.iter().map(|&t| c * (t as f64).ln()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmBound {
    pub arm: usize,
    pub lower_coefficient: f64,
    pub upper_coefficient: f64,
    /// Upper-bound leading term at each checkpoint.
    pub curve: Vec<f64>,
}

/// Bound constants for every suboptimal arm of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound: UpperBound,
    pub players: u32,
    pub alpha: f64,
    pub checkpoints: Vec<u64>,
    pub arms: Vec<ArmBound>,
}

impl BoundReport {
    pub fn new(
        model: &BernoulliArmModel,
        bound: UpperBound,
        players: u32,
        alpha: f64,
        checkpoints: &[u64],
    ) -> Result<Self> {
        let mu_star = model.best_mean();
        let arms = model
            .suboptimal_arms()
            .map(|arm| {
                let mu_a = model.mean(arm);
                Ok(ArmBound {
                    arm,
                    lower_coefficient: lower_bound_coefficient(players, alpha, mu_a, mu_star)?,
                    upper_coefficient: upper_bound_coefficient(
                        bound, players, alpha, mu_a, mu_star,
                    )?,
                    curve: upper_bound_curve(bound, players, alpha, mu_a, mu_star, checkpoints)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bound,
            players,
            alpha,
            checkpoints: checkpoints.to_vec(),
            arms,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub t: u64,
    pub arm: usize,
    pub empirical_mean: f64,
    pub leading_term: f64,
    /// `None` where the leading term vanishes (`t = 1`).
    pub ratio: Option<f64>,
    pub flagged: bool,
}

/// Empirical mean pulls against the leading term, per checkpoint and arm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Rows whose ratio exceeds `flag_threshold` are flagged (informational).
pub fn compare(
    aggregate: &RunAggregate,
    report: &BoundReport,
    flag_threshold: f64,
) -> Result<ComparisonTable> {
    if aggregate.checkpoints != report.checkpoints {
        return Err(Error::ShapeMismatch(format!(
            "aggregate has checkpoints {:?}, bound report has {:?}",
            aggregate.checkpoints, report.checkpoints
        )));
    }
    let mut rows = Vec::new();
    for (i, &t) in aggregate.checkpoints.iter().enumerate() {
        for arm in &report.arms {
            let empirical_mean = *aggregate.mean[i]
                .get(arm.arm)
                .ok_or_else(|| Error::ShapeMismatch(format!("aggregate has no arm {}", arm.arm)))?;
            let leading_term = arm.curve[i];
            let ratio = (leading_term > 0.0).then(|| empirical_mean / leading_term);
            rows.push(ComparisonRow {
                t,
                arm: arm.arm,
                empirical_mean,
                leading_term,
                ratio,
                flagged: ratio.is_some_and(|r| r > flag_threshold),
            });
        }
    }
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    /// CSV with columns `t, arm, empirical_mean, leading_term, ratio`; arms
    /// are numbered from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "arm", "empirical_mean", "leading_term", "ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                (r.arm + 1).to_string(),
                r.empirical_mean.to_string(),
                r.leading_term.to_string(),
                r.ratio.map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>4} {:>14} {:>14} {:>8}  (leading term only)",
            "t", "arm", "empirical", "leading_term", "ratio"
        )?;
        for r in &self.rows {
            let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
            writeln!(
                f,
                "{:>10} {:>4} {:>14.3} {:>14.3} {:>8}{}",
                r.t,
                r.arm + 1,
                r.empirical_mean,
                r.leading_term,
                ratio,
                if r.flagged { "  *" } else { "" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // 1/𝒦(0.8, 0.9) and derived values, from 50-digit arithmetic (mpmath).
    const INV_KL: f64 = 22.520_996_985_245_29;
    const LOWER_M2_HALF: f64 = 30.027_995_980_327_054;
    const DKLUCB_M2_HALF_2_16: f64 = 333.021_132_026_065_1;

    #[test]
    fn lower_bound_examples() {
        let single = lower_bound_coefficient(1, 0.3, 0.8, 0.9).unwrap();
        assert_relative_eq!(single, INV_KL, max_relative = 1e-13);
        assert_eq!(lower_bound_coefficient(2, 1.0, 0.8, 0.9).unwrap(), single);
        assert_relative_eq!(
            lower_bound_coefficient(5, 0.0, 0.8, 0.9).unwrap(),
            5.0 * INV_KL,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            lower_bound_coefficient(2, 0.5, 0.8, 0.9).unwrap(),
            LOWER_M2_HALF,
            max_relative = 1e-13
        );
        assert!(lower_bound_coefficient(2, 0.5, 0.9, 0.9).is_err());
        assert!(lower_bound_coefficient(2, 1.5, 0.8, 0.9).is_err());
    }

    #[test]
    fn curves() {
        let e = std::f64::consts::E;
        let c = upper_bound_coefficient(UpperBound::DenseSchedule, 3, 0.2, 0.8, 0.9).unwrap();
        assert_relative_eq!(c * e.ln(), c);
        let cps = [16, 256, 65536];
        let dense = upper_bound_curve(UpperBound::DenseSchedule, 2, 0.0, 0.8, 0.9, &cps).unwrap();
        let dk = upper_bound_curve(UpperBound::Dklucb, 2, 1.0, 0.8, 0.9, &cps).unwrap();
        assert_eq!(dense, dk);
        let dk = upper_bound_curve(UpperBound::Dklucb, 2, 0.5, 0.8, 0.9, &[65536]).unwrap();
        assert_relative_eq!(dk[0], DKLUCB_M2_HALF_2_16, max_relative = 1e-13);
    }

    fn aggregate_from(checkpoints: Vec<u64>, mean: Vec<Vec<f64>>) -> RunAggregate {
        let n = checkpoints.len();
        let arms = mean.first().map_or(0, Vec::len);
        RunAggregate {
            checkpoints,
            replications: 1,
            stderr: vec![vec![0.0; arms]; n],
            regret: vec![0.0; n],
            mean,
        }
    }

    #[test]
    fn self_comparison_is_one() {
        let model = BernoulliArmModel::new(vec![0.9, 0.8]).unwrap();
        let cps = vec![2, 64, 4096];
        let report = BoundReport::new(&model, UpperBound::DenseSchedule, 2, 1.0, &cps).unwrap();
        let mean = report.arms[0].curve.iter().map(|&x| vec![0.0, x]).collect();
        let table = compare(&aggregate_from(cps, mean), &report, 1.5).unwrap();
        assert_eq!(table.rows.len(), 3);
        for r in &table.rows {
            assert_eq!(r.ratio, Some(1.0));
            assert!(!r.flagged);
        }
    }

    #[test]
    fn empty_and_mismatched() {
        let model = BernoulliArmModel::new(vec![0.9, 0.8]).unwrap();
        let report = BoundReport::new(&model, UpperBound::DenseSchedule, 2, 1.0, &[]).unwrap();
        let table = compare(&aggregate_from(vec![], vec![]), &report, 1.5).unwrap();
        assert!(table.rows.is_empty());
        let other = aggregate_from(vec![4], vec![vec![1.0, 1.0]]);
        assert!(matches!(
            compare(&other, &report, 1.5),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn figure1_preset_full_communication_ratio() {
        let model = BernoulliArmModel::new(vec![0.9, 0.8]).unwrap();
        let report = BoundReport::new(&model, UpperBound::DenseSchedule, 2, 1.0, &[65536]).unwrap();
        let table = compare(
            &aggregate_from(vec![65536], vec![vec![0.0, 507.7024]]),
            &report,
            1.5,
        )
        .unwrap();
        let r = table.rows[0].ratio.unwrap();
        assert!((r - 2.03).abs() < 0.01, "{r}");
        assert!(table.rows[0].flagged);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,arm,empirical_mean,leading_term,ratio\n65536,2,507.7024,"));
    }

    proptest! {
        #[test]
        fn lower_coefficient_monotone(m in 1u32..20, a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0, mu_a in 0.05f64..0.5, gap in 0.01f64..0.45) {
            let mu_star = mu_a + gap;
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let at = |m, a| lower_bound_coefficient(m, a, mu_a, mu_star).unwrap();
            prop_assert!(at(m, hi) <= at(m, lo) * (1.0 + 1e-12));
            prop_assert!(at(m, lo) <= at(m + 1, lo) * (1.0 + 1e-12));
            prop_assert!(at(m, lo).is_finite() && at(m, lo) > 0.0);
        }

        #[test]
        fn single_player_dklucb_curve_is_dense(alpha in 0.0f64..=1.0, mu_a in 0.05f64..0.5, gap in 0.01f64..0.45, t in 1u64..1_000_000) {
            let a = upper_bound_curve(UpperBound::Dklucb, 1, alpha, mu_a, mu_a + gap, &[t]).unwrap();
            let b = upper_bound_curve(UpperBound::DenseSchedule, 1, alpha, mu_a, mu_a + gap, &[t]).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
