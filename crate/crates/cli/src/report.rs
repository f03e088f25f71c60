//! Metrics, summary and plot-data files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::experiments::ExperimentReport;
use crate::train::RunReport;
use crate::CliError;

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,test_loss,test_acc,epoch_seconds";

/// `metrics.csv` contents; floats use the shortest exact decimal form.
pub fn metrics_csv(run: &RunReport) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for e in &run.epochs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6}",
            e.epoch, e.train_loss, e.train_acc, e.test_loss, e.test_acc, e.epoch_seconds
        );
    }
    s
}

/// Long-format accuracy and loss curves over all runs.
pub fn plotdata_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("run,epoch,train_loss,train_acc,test_loss,test_acc\n");
    for run in &report.runs {
        for e in &run.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                run.name, e.epoch, e.train_loss, e.train_acc, e.test_loss, e.test_acc
            );
        }
    }
    s
}

/// Run summaries without timings, so the file is reproducible.
pub fn summary_json(report: &ExperimentReport) -> String {
    let runs: Vec<_> = report
        .runs
        .iter()
        .map(|r| {
            let last = r.last();
            json!({
                "name": r.name,
                "meta": r.meta,
                "param_count": r.param_count,
                "epochs": r.epochs.len(),
                "final": {
                    "train_loss": last.train_loss,
                    "train_acc": last.train_acc,
                    "test_loss": last.test_loss,
                    "test_acc": last.test_acc,
                },
            })
        })
        .collect();
    let mut v = json!({
        "experiment": report.kind,
        "seed": report.config.seed,
        "runs": runs,
    });
    if !report.grid.is_empty() {
        v["grid"] = json!(report.grid);
    }
    serde_json::to_string_pretty(&v).expect("summary serialises") + "\n"
}

/// Activation × transform grid, one row per cell.
pub fn grid_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("activation,transform,train_acc,test_acc\n");
    for g in &report.grid {
        let _ = writeln!(s, "{},{},{},{}", g.activation, g.transform, g.train_acc, g.test_acc);
    }
    s
}

/// Writes `config.json`, `summary.json`, `plotdata.csv`, the sweep grid when
/// present, and `<run>/metrics.csv` plus `<run>/checkpoint.cvnn` per run.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    let unwritable = |e: std::io::Error| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display())));
    fs::create_dir_all(dir).map_err(unwritable)?;
    fs::write(dir.join("config.json"), report.config.to_json() + "\n").map_err(unwritable)?;
    fs::write(dir.join("summary.json"), summary_json(report)).map_err(unwritable)?;
    fs::write(dir.join("plotdata.csv"), plotdata_csv(report)).map_err(unwritable)?;
    if !report.grid.is_empty() {
        fs::write(dir.join("summary.csv"), grid_csv(report)).map_err(unwritable)?;
    }
    for run in &report.runs {
        let sub = dir.join(&run.name);
        fs::create_dir_all(&sub).map_err(unwritable)?;
        fs::write(sub.join("metrics.csv"), metrics_csv(run)).map_err(unwritable)?;
        run.checkpoint.save(sub.join("checkpoint.cvnn"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};
    use crate::experiments::GridRow;
    use crate::train::EpochMetrics;
    use cvnn_core::checkpoint::Checkpoint;

    fn report(epochs: usize) -> ExperimentReport {
        let rows = (1..=epochs)
            .map(|e| EpochMetrics {
                epoch: e,
                train_loss: 1.0 / e as f64,
                train_acc: 0.5,
                test_loss: 0.25,
                test_acc: 0.75,
                epoch_seconds: 0.01,
            })
            .collect();
        ExperimentReport {
            kind: ExperimentKind::Exp1ActivationSweep,
            config: ExperimentConfig::defaults_for(ExperimentKind::Exp1ActivationSweep),
            runs: vec![RunReport {
                name: "crelu_none".into(),
                meta: Default::default(),
                param_count: 3,
                epochs: rows,
                checkpoint: Checkpoint::new(),
            }],
            grid: vec![GridRow {
                activation: "crelu".into(),
                transform: "none".into(),
                train_acc: 0.5,
                test_acc: 0.75,
            }],
        }
    }

    #[test]
    fn five_epochs_give_five_rows() {
        let r = report(5);
        let csv = metrics_csv(&r.runs[0]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], METRICS_HEADER);
        assert_eq!(lines[2], "2,0.5,0.5,0.25,0.75,0.010000");
    }

    #[test]
    fn emit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(2), dir.path()).unwrap();
        for f in ["config.json", "summary.json", "plotdata.csv", "summary.csv", "crelu_none/metrics.csv", "crelu_none/checkpoint.cvnn"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["runs"][0]["final"]["test_acc"], 0.75);
        assert_eq!(summary["experiment"], "exp1_activation_sweep");
        assert!(!fs::read_to_string(dir.path().join("summary.json")).unwrap().contains("seconds"));
    }
}
