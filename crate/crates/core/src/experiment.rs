//! Runs every strategy of an [`ExperimentConfig`] and writes the results.
//!
//! Files written to the output directory:
//!
//! * `<strategy>.csv`: `t,arm,mean_pulls,stderr,regret`
//! * `combined.csv`: the same rows in long format with a leading `strategy`
//!   column, for log-x plotting
//! * `<strategy>_bounds.csv` when bounds are requested:
//!   `t,arm,empirical_mean,leading_term,ratio`
//!
//! Arms are numbered from 1 in every file. Each file is written to a
//! temporary file in the same directory and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::{compare, BoundReport, ComparisonTable, UpperBound};
use crate::config::{ExperimentConfig, Strategy};
use crate::error::{Error, Result};
use crate::policy::PolicyRule;
use crate::schedule::{CommunicationSchedule, ScheduleKind};
use crate::sim::{run_monte_carlo, RunAggregate};

#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub name: String,
    pub schedule: String,
    pub density: String,
    pub aggregate: RunAggregate,
    pub comparison: Option<ComparisonTable>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub results: Vec<StrategyResult>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn result(&self, name: &str) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

/// Density as shown to users; finite sets have none.
pub fn density_label(schedule: &CommunicationSchedule) -> String {
    if schedule.is_finite() && !matches!(schedule.kind(), ScheduleKind::None) {
        return "n/a (finite set)".to_string();
    }
    match schedule.density() {
        Ok(d) if d.estimated => format!("{} (estimated)", d.value),
        Ok(d) => d.value.to_string(),
        Err(_) => "n/a".to_string(),
    }
}

/// The bound a strategy is compared against, and the density it assumes.
/// Finite schedules are treated as density 0 for the lower coefficient.
pub fn bound_for(strategy: &Strategy) -> (UpperBound, f64) {
    let density = if strategy.schedule.is_finite() {
        0.0
    } else {
        strategy.schedule.density().map_or(0.0, |d| d.value)
    };
    match (strategy.policy.rule(), strategy.schedule.kind()) {
        (PolicyRule::Dklucb, _) => (UpperBound::Dklucb, strategy.policy.alpha()),
        (_, ScheduleKind::OneShot(_)) => (UpperBound::OverExploration, density),
        _ => (UpperBound::DenseSchedule, density),
    }
}

/// Runs all strategies without touching the filesystem.
pub fn run_strategies(cfg: &ExperimentConfig) -> Result<Vec<StrategyResult>> {
    cfg.strategies
        .iter()
        .map(|strategy| {
            let aggregate = run_monte_carlo(&cfg.run_config(strategy))?;
            let comparison = if cfg.bounds {
                let (bound, alpha) = bound_for(strategy);
                let report =
                    BoundReport::new(&cfg.arms, bound, cfg.players, alpha, &cfg.checkpoints)?;
                Some(compare(&aggregate, &report, cfg.flag_threshold)?)
            } else {
                None
            };
            Ok(StrategyResult {
                name: strategy.name.clone(),
                schedule: strategy.schedule.to_string(),
                density: density_label(&strategy.schedule),
                aggregate,
                comparison,
            })
        })
        .collect()
}

/// Runs all strategies and writes their CSV files under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results = run_strategies(cfg)?;
    let mut files = Vec::new();
    for r in &results {
        let path = out_dir.join(format!("{}.csv", r.name));
        write_atomic(&path, |w| write_strategy_csv(w, &r.aggregate))?;
        files.push(path);
        if let Some(table) = &r.comparison {
            let path = out_dir.join(format!("{}_bounds.csv", r.name));
            write_atomic(&path, |w| table.write_csv(w))?;
            files.push(path);
        }
    }
    let path = out_dir.join("combined.csv");
    write_atomic(&path, |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["strategy", "t", "arm", "mean_pulls", "stderr", "regret"])?;
        for r in &results {
            write_rows(&mut w, &r.aggregate, Some(&r.name))?;
        }
        w.flush()?;
        Ok(())
    })?;
    files.push(path);
    Ok(ExperimentOutcome { results, files })
}

/// Per-strategy CSV: `t,arm,mean_pulls,stderr,regret`.
pub fn write_strategy_csv<W: Write>(out: W, aggregate: &RunAggregate) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "arm", "mean_pulls", "stderr", "regret"])?;
    write_rows(&mut w, aggregate, None)?;
    w.flush()?;
    Ok(())
}

fn write_rows<W: Write>(
    w: &mut csv::Writer<W>,
    aggregate: &RunAggregate,
    strategy: Option<&str>,
) -> csv::Result<()> {
    for (i, &t) in aggregate.checkpoints.iter().enumerate() {
        for arm in 0..aggregate.mean[i].len() {
            let mut record: Vec<String> = Vec::with_capacity(6);
            if let Some(name) = strategy {
                record.push(name.to_string());
            }
            record.push(t.to_string());
            record.push((arm + 1).to_string());
            record.push(aggregate.mean[i][arm].to_string());
            record.push(aggregate.stderr[i][arm].to_string());
            record.push(aggregate.regret[i].to_string());
            w.write_record(&record)?;
        }
    }
    Ok(())
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> csv::Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    body(&mut tmp).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn density_labels() {
        assert_eq!(
            density_label(&"explicit:1,2,3".parse().unwrap()),
            "n/a (finite set)"
        );
        assert_eq!(
            density_label(&"oneshot:5".parse().unwrap()),
            "n/a (finite set)"
        );
        assert_eq!(density_label(&"none".parse().unwrap()), "0");
        assert_eq!(density_label(&"doubleexp:2,1".parse().unwrap()), "0.5");
        assert_eq!(density_label(&"linear:3".parse().unwrap()), "1");
    }

    #[test]
    fn bound_selection() {
        let cfg = parse_config(
            "means = 0.9,0.8\nplayers = 2\nhorizon = 64\n[strategy a]\nschedule = oneshot:8\n[strategy b]\nschedule = exp:2\n[strategy c]\nschedule = doubleexp:2,1\npolicy = dklucb\n",
        )
        .unwrap();
        assert_eq!(
            bound_for(&cfg.strategies[0]),
            (UpperBound::OverExploration, 0.0)
        );
        assert_eq!(
            bound_for(&cfg.strategies[1]),
            (UpperBound::DenseSchedule, 1.0)
        );
        assert_eq!(bound_for(&cfg.strategies[2]), (UpperBound::Dklucb, 0.5));
    }

    #[test]
    fn writes_files_and_conserves() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "means = 0.5\nplayers = 3\nhorizon = 8\nreplications = 1\nschedule = full\n",
        )
        .unwrap();
        let outcome = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.files.len(), 2);
        let text = fs::read_to_string(dir.path().join("main.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,arm,mean_pulls,stderr,regret"));
        for (line, t) in lines.zip([1u64, 2, 4, 8]) {
            assert_eq!(line, format!("{t},1,{},0,0", 3 * t));
        }
        let combined = fs::read_to_string(dir.path().join("combined.csv")).unwrap();
        assert!(combined.starts_with("strategy,t,arm,mean_pulls,stderr,regret\nmain,1,1,3,0,0\n"));
        // no temp files left behind
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let cfg = parse_config(
            "means = 0.5\nplayers = 1\nhorizon = 4\nreplications = 1\nschedule = none\n",
        )
        .unwrap();
        let err = run_experiment(&cfg, &blocker.join("sub")).unwrap_err();
        assert!(!err.is_config_error());
        assert!(err.to_string().contains("file"));
    }
}
