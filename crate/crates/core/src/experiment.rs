//! Runs and sweeps driven by an [`ExperimentConfig`], plus writing their
//! outputs to a directory.

use std::fs;
use std::path::Path;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::Result;
use crate::output::{write_graph_file, write_slots_file, write_summary_file, SummaryEntry};
use crate::sim::{run_network, Network, RunOutput};

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub sweep: Option<(SweepAxis, f64)>,
    pub network: Network,
    pub output: RunOutput,
}

impl ExperimentRun {
    /// Directory-safe label, e.g. `fov-96_rep2`.
    pub fn label(&self) -> String {
        let rep = self.output.summary.rep;
        match self.sweep {
            Some((axis, v)) => format!("{}-{}_rep{}", axis.tag(), v, rep),
            None => format!("rep{rep}"),
        }
    }
}

/// One run for each replication of one configuration.
pub fn run_reps(config: &ExperimentConfig, reps: u64) -> Result<Vec<ExperimentRun>> {
    (0..reps)
        .map(|rep| {
            let settings = config.settings(rep)?;
            let network = Network::build(config.scenario(rep)?, &settings.scheduler)?;
            let output = run_network(&network, &settings)?;
            Ok(ExperimentRun {
                sweep: None,
                network,
                output,
            })
        })
        .collect()
}

/// One run per (value, rep), value-major.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[f64], reps: u64) -> Result<Vec<ExperimentRun>> {
    let mut out = Vec::with_capacity(values.len() * reps as usize);
    for &v in values {
        let c = config.with_axis(axis, v)?;
        for mut r in run_reps(&c, reps)? {
            r.sweep = Some((axis, v));
            out.push(r);
        }
    }
    Ok(out)
}

/// Everything the config asks for: its sweep if present, otherwise `reps`
/// plain runs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRun>> {
    config.validate()?;
    match config.sweep()? {
        Some(spec) => sweep(config, spec.axis, &spec.values, config.run.reps),
        None => run_reps(config, config.run.reps),
    }
}

/// Writes `summary.csv` for all runs. A lone run also gets `slots.csv` and
/// `graph.txt` at the top level; otherwise each run gets them under
/// `runs/<label>/`.
pub fn write_experiment(dir: &Path, runs: &[ExperimentRun]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let entries: Vec<SummaryEntry<'_>> = runs
        .iter()
        .map(|r| SummaryEntry {
            summary: &r.output.summary,
            sweep: r.sweep,
        })
        .collect();
    write_summary_file(&dir.join("summary.csv"), &entries)?;
    if let [only] = runs {
        if only.sweep.is_none() {
            let bw = only.network.scenario.phys.bandwidth;
            write_slots_file(&dir.join("slots.csv"), &only.output.records, bw)?;
            write_graph_file(&dir.join("graph.txt"), &only.network.graph)?;
            return Ok(());
        }
    }
    for r in runs {
        let sub = dir.join("runs").join(r.label());
        fs::create_dir_all(&sub)?;
        write_slots_file(
            &sub.join("slots.csv"),
            &r.output.records,
            r.network.scenario.phys.bandwidth,
        )?;
        write_graph_file(&sub.join("graph.txt"), &r.network.graph)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
            [room]
            length_m = 6.0
            width_m = 6.0
            [layout]
            aps_per_side = 3
            users = 4
            [pso]
            swarm_size = 6
            max_iters = 5
            [run]
            slots = 8
            "#,
        )
        .unwrap()
    }

    #[test]
    fn single_value_sweep_equals_plain_run() {
        let c = small();
        let plain = run_reps(&c, 1).unwrap();
        let swept = sweep(&c, SweepAxis::Beta, &[c.channel.unblocked_prob], 1).unwrap();
        assert_eq!(plain[0].output.records, swept[0].output.records);
        assert_eq!(plain[0].output.summary, swept[0].output.summary);
    }

    #[test]
    fn sweep_cardinality_and_files() {
        let c = small();
        let runs = sweep(&c, SweepAxis::UserCount, &[2.0, 3.0], 2).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(runs[3].output.summary.num_users, 3);
        assert_eq!(runs[3].output.summary.rep, 1);
        let dir = tempfile::tempdir().unwrap();
        write_experiment(dir.path(), &runs).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 5);
        assert!(dir.path().join("runs/user_count-3_rep1/slots.csv").exists());
    }

    #[test]
    fn lone_run_writes_top_level_files() {
        let runs = run_experiment(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_experiment(dir.path(), &runs).unwrap();
        let slots = std::fs::read_to_string(dir.path().join("slots.csv")).unwrap();
        assert_eq!(slots.lines().count(), 1 + 8 * 4);
        assert!(dir.path().join("graph.txt").exists());
    }
}
