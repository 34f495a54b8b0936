use std::io::Write;
use std::path::PathBuf;

use lagcons::claws::LedgerRecord;
use lagcons::snapshot::{read_layer, read_meta, SnapshotError, SnapshotPaths};
use lagcons::TwoLayerView;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::run::audit_step;

#[derive(Debug, Error)]
pub enum AuditCmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("snapshots are on different meshes")]
    MeshMismatch,
    #[error("snapshots have different geometry")]
    GeometryMismatch,
    #[error("no step length: pass --tau or use a snapshot with a sidecar")]
    NoTau,
    #[error("step length must be positive and finite, got {0}")]
    BadTau(f64),
    #[error("writing ledger: {0}")]
    Write(#[from] std::io::Error),
}

/// `prefix` or `nodes.csv,cells.csv`.
pub fn parse_snapshot_arg(arg: &str) -> SnapshotPaths {
    match arg.split_once(',') {
        Some((nodes, cells)) => SnapshotPaths::from_pair(nodes.trim(), cells.trim()),
        None => SnapshotPaths::from_prefix(arg.trim_end_matches("_nodes.csv")),
    }
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub records: Vec<LedgerRecord>,
    pub violations: usize,
}

/// Audits the step `lo -> hi` offline, producing the same ledger lines as the inline run.
pub fn audit_command(
    lo: &SnapshotPaths,
    hi: &SnapshotPaths,
    tau: Option<f64>,
    cfg: &RunConfig,
) -> Result<AuditOutcome, AuditCmdError> {
    let params = cfg.scheme_params()?;
    params.validate().map_err(ConfigError::from)?;
    let tol = cfg.tolerances()?;
    let meta_lo = read_meta(&lo.meta).ok();
    let meta_hi = read_meta(&hi.meta).ok();
    let tau = tau
        .or_else(|| meta_hi.as_ref().and_then(|m| m.tau))
        .ok_or(AuditCmdError::NoTau)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(AuditCmdError::BadTau(tau));
    }
    let g_lo = meta_lo.as_ref().map_or(params.geometry, |m| m.n);
    let g_hi = meta_hi.as_ref().map_or(params.geometry, |m| m.n);
    if g_lo != g_hi {
        return Err(AuditCmdError::GeometryMismatch);
    }
    let t_lo = meta_lo.as_ref().map_or(0.0, |m| m.t);
    let t_hi = meta_hi.as_ref().map_or(t_lo + tau, |m| m.t);
    let layer_lo = read_layer(lo, g_lo, t_lo)?;
    let layer_hi = read_layer(hi, g_hi, t_hi)?;
    if layer_lo.mesh() != layer_hi.mesh() {
        return Err(AuditCmdError::MeshMismatch);
    }
    let view = TwoLayerView::new(&layer_lo, &layer_hi, tau).map_err(|_| AuditCmdError::MeshMismatch)?;
    let step_no = meta_hi.as_ref().map_or(1, |m| m.step);
    let records: Vec<LedgerRecord> = audit_step(step_no, &view, &params, &cfg.audit.laws(), &tol)
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    let violations = records.iter().filter(|r| r.is_violation()).count();
    Ok(AuditOutcome { records, violations })
}

pub fn write_ledger(records: &[LedgerRecord], out: Option<&PathBuf>) -> Result<(), AuditCmdError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(std::io::Error::from)?;
        buf.push(b'\n');
    }
    match out {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lagcons::snapshot::write_snapshot;
    use lagcons::state::GridLayer;

    fn cfg() -> RunConfig {
        serde_json::from_str(r#"{"problem":{"name":"uniform","cells":6},"t_end":1.0,"tau":0.1}"#).unwrap()
    }

    #[test]
    fn argument_forms() {
        let a = parse_snapshot_arg("out/snap_000003_t3e-1");
        let b = parse_snapshot_arg("out/snap_000003_t3e-1_nodes.csv,out/snap_000003_t3e-1_cells.csv");
        assert_eq!(a, b);
    }

    #[test]
    fn identical_static_snapshots_have_zero_defects() {
        let dir = tempfile::tempdir().unwrap();
        let layer: GridLayer = cfg().initial_layer().unwrap();
        let p = write_snapshot(dir.path(), 0, &layer, 3.0, None).unwrap();
        for tau in [1e-3, 7.5] {
            let out = audit_command(&p, &p, Some(tau), &cfg()).unwrap();
            assert_eq!(out.violations, 0);
            for r in out.records.iter().filter(|r| r.applicable) {
                assert_eq!(r.identity_defect, Some(0.0), "{:?}", r.law);
                assert_eq!(r.per_cell_residual_max, Some(0.0), "{:?}", r.law);
            }
        }
        assert!(matches!(audit_command(&p, &p, None, &cfg()), Err(AuditCmdError::NoTau)));
    }

    #[test]
    fn different_meshes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = cfg().initial_layer().unwrap();
        let mut c = cfg();
        c.problem = c.problem.with_cells(7);
        let b = c.initial_layer().unwrap();
        let pa = write_snapshot(dir.path(), 0, &a, 3.0, None).unwrap();
        let pb = write_snapshot(dir.path(), 1, &b, 3.0, Some(0.1)).unwrap();
        assert!(matches!(
            audit_command(&pa, &pb, None, &cfg()),
            Err(AuditCmdError::MeshMismatch)
        ));
    }
}
