use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lagcons::claws::{audit, AuditTolerances, LawId, LedgerRecord};
use lagcons::snapshot::{write_snapshot, SnapshotError};
use lagcons::{step, GridLayer, SchemeParams, StepError, TwoLayerView};
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_FAILURE: i32 = 1;
pub const EXIT_BUDGET_VIOLATION: i32 = 2;

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("writing ledger: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Whole-run budget of one law: change of the total between the first and
/// last layer plus the time-integrated boundary flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDrift {
    pub law: LawId,
    pub expected_to_hold: bool,
    pub initial_total: f64,
    pub final_total: f64,
    pub integrated_boundary_flux: f64,
    pub defect: f64,
    pub relative_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub t_final: f64,
    pub retries: u32,
    pub violations: Vec<String>,
    pub failure: Option<String>,
    pub drift: Vec<RunDrift>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub final_layer: GridLayer,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

#[derive(Debug, Default)]
struct DriftAcc {
    expected: bool,
    initial: Option<f64>,
    last: f64,
    flux: f64,
    scale: f64,
}

/// Audits one accepted step; returns the ledger lines.
pub fn audit_step(
    step_no: u64,
    view: &TwoLayerView<'_>,
    params: &SchemeParams,
    laws: &[LawId],
    tol: &AuditTolerances,
) -> Vec<(LedgerRecord, Option<lagcons::ConservationBudget>)> {
    laws.iter()
        .map(|&law| {
            let outcome = audit(law, view, params);
            (LedgerRecord::new(step_no, view, law, &outcome, tol), outcome.ok())
        })
        .collect()
}

/// Largest step not overshooting `t_end`; a sliver shorter than a millionth
/// of the nominal step is merged into the current one.
fn next_tau(nominal: f64, t: f64, t_end: f64) -> Option<f64> {
    let remaining = t_end - t;
    if remaining <= 1e-12 * t_end.abs().max(nominal) {
        return None;
    }
    if remaining <= nominal * (1.0 + 1e-6) {
        Some(remaining)
    } else {
        Some(nominal)
    }
}

pub fn run(cfg: &RunConfig, out_override: Option<&Path>) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let params = cfg.scheme_params()?;
    let tol = cfg.tolerances()?;
    let laws = cfg.audit.laws();
    let out = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out).map_err(io_err(&out))?;

    let mut layer = cfg.initial_layer()?;
    write_snapshot(&out, 0, &layer, params.gamma, None)?;
    let ledger_path = out.join(LEDGER_FILE);
    let mut ledger = BufWriter::new(File::create(&ledger_path).map_err(io_err(&ledger_path))?);

    let mut step_no = 0u64;
    let mut retries = 0u32;
    let mut failure = None;
    let mut violations = Vec::new();
    let mut drift: BTreeMap<LawId, DriftAcc> = BTreeMap::new();

    'time: while let Some(mut tau) = next_tau(cfg.tau.at(layer.t), layer.t, cfg.t_end) {
        let mut halvings = 0;
        let hi = loop {
            match step(&layer, tau, &params) {
                Ok((hi, report)) => {
                    debug!(
                        "step {} t={} tau={} newton={}",
                        step_no + 1,
                        layer.t,
                        tau,
                        report.iterations
                    );
                    break hi;
                }
                Err(e) if e.is_retryable() && halvings < cfg.max_halvings => {
                    warn!("step {} rejected at tau={tau}: {e}; halving", step_no + 1);
                    tau *= 0.5;
                    halvings += 1;
                    retries += 1;
                }
                Err(e) => {
                    failure = Some(describe_failure(step_no + 1, layer.t, tau, &e));
                    break 'time;
                }
            }
        };
        step_no += 1;
        let view = TwoLayerView::new(&layer, &hi, tau).expect("step keeps mesh and geometry");
        for (rec, budget) in audit_step(step_no, &view, &params, &laws, &tol) {
            if rec.is_violation() {
                violations.push(format!(
                    "step {step_no}: {} cell {:e} relative {:e}",
                    rec.law,
                    rec.per_cell_residual_max.unwrap_or(f64::NAN),
                    rec.relative_defect.unwrap_or(f64::NAN)
                ));
            }
            if let Some(b) = budget {
                let acc = drift.entry(b.law).or_default();
                acc.expected = b.expected_to_hold;
                acc.initial.get_or_insert(b.density_sum_lo);
                acc.last = b.density_sum_hi;
                acc.flux += b.tau * b.boundary_flux_sum;
                acc.scale = acc.scale.max(0.5 * b.defect_scale);
            }
            serde_json::to_writer(&mut ledger, &rec)?;
            ledger.write_all(b"\n").map_err(io_err(&ledger_path))?;
        }
        layer = hi;
        let done = next_tau(cfg.tau.at(layer.t), layer.t, cfg.t_end).is_none();
        if step_no.is_multiple_of(cfg.snapshot_every) || done {
            write_snapshot(&out, step_no, &layer, params.gamma, Some(tau))?;
        }
    }
    ledger.flush().map_err(io_err(&ledger_path))?;

    let drift: Vec<RunDrift> = drift
        .into_iter()
        .map(|(law, acc)| {
            let initial = acc.initial.unwrap_or(0.0);
            let defect = acc.last - initial + acc.flux;
            let relative = if defect == 0.0 { 0.0 } else { defect.abs() / acc.scale };
            RunDrift {
                law,
                expected_to_hold: acc.expected,
                initial_total: initial,
                final_total: acc.last,
                integrated_boundary_flux: acc.flux,
                defect,
                relative_defect: relative,
            }
        })
        .collect();
    for d in &drift {
        if d.expected_to_hold && (d.relative_defect > tol.budget_relative || d.relative_defect.is_nan()) {
            violations.push(format!("run total: {} relative drift {:e}", d.law, d.relative_defect));
        }
    }

    let exit_code = if failure.is_some() {
        EXIT_SOLVER_FAILURE
    } else if !violations.is_empty() {
        EXIT_BUDGET_VIOLATION
    } else {
        EXIT_OK
    };
    let summary = RunSummary {
        steps: step_no,
        t_final: layer.t,
        retries,
        violations,
        failure,
        drift,
        exit_code,
    };
    let summary_path = out.join(SUMMARY_FILE);
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n").map_err(io_err(&summary_path))?;
    info!("{} steps to t={}, exit {}", summary.steps, summary.t_final, exit_code);
    Ok(RunOutcome {
        summary,
        final_layer: layer,
        output_dir: out,
    })
}

/// Time loop without audits or output, for studies.
pub fn advance(mut layer: GridLayer, cfg: &RunConfig, params: &SchemeParams) -> Result<GridLayer, String> {
    let mut step_no = 0u64;
    while let Some(mut tau) = next_tau(cfg.tau.at(layer.t), layer.t, cfg.t_end) {
        let mut halvings = 0;
        layer = loop {
            match step(&layer, tau, params) {
                Ok((hi, _)) => break hi,
                Err(e) if e.is_retryable() && halvings < cfg.max_halvings => {
                    tau *= 0.5;
                    halvings += 1;
                }
                Err(e) => return Err(describe_failure(step_no + 1, layer.t, tau, &e)),
            }
        };
        step_no += 1;
    }
    Ok(layer)
}

fn describe_failure(step_no: u64, t: f64, tau: f64, e: &StepError) -> String {
    let mut msg = format!("step {step_no} from t={t} with tau={tau} failed: {e}");
    if let Some(r) = e.report() {
        msg.push_str(&format!(
            " (newton iterations {}, last residual {:e})",
            r.iterations, r.final_residual_norm
        ));
    }
    msg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_step_lands_on_t_end() {
        assert_eq!(next_tau(0.1, 0.0, 1.0), Some(0.1));
        assert_eq!(next_tau(0.1, 0.95, 1.0), Some(1.0 - 0.95));
        assert_eq!(next_tau(0.1, 1.0, 1.0), None);
        assert_eq!(next_tau(0.1, 1.0 - 1e-16, 1.0), None);
    }

    #[test]
    fn uniform_run_succeeds() {
        let dir = tempfile::tempdir().unwrap();
        let cfg: RunConfig = serde_json::from_str(
            r#"{"problem":{"name":"uniform","cells":10},"t_end":0.1,"tau":0.01,"snapshot_every":5}"#,
        )
        .unwrap();
        let out = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(out.exit_code(), EXIT_OK);
        assert_eq!(out.summary.steps, 10);
        let ledger = fs::read_to_string(dir.path().join(LEDGER_FILE)).unwrap();
        // six laws, additional ones recorded as not applicable in pointwise mode
        assert_eq!(ledger.lines().count(), 60);
        let snaps = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .ends_with("_meta.json")
            })
            .count();
        assert_eq!(snaps, 3);
    }

    #[test]
    fn solver_failure_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg: RunConfig = serde_json::from_str(
            r#"{"problem":{"name":"sod","cells":20,"visc_nu":0.0},"params":{"newton_max_iter":1},
                "t_end":0.1,"tau":0.05,"max_halvings":1}"#,
        )
        .unwrap();
        let out = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(out.exit_code(), EXIT_SOLVER_FAILURE);
        assert!(out.summary.failure.as_deref().unwrap().contains("step 1"));
    }

    #[test]
    fn tight_tolerance_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let cfg: RunConfig = serde_json::from_str(
            r#"{"problem":{"name":"smooth_pulse","cells":20},"t_end":0.02,"tau":0.01,
                "tolerances":{"per_cell":1e-300}}"#,
        )
        .unwrap();
        let out = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(out.exit_code(), EXIT_BUDGET_VIOLATION);
        assert!(!out.summary.violations.is_empty());
    }
}
