use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lagcons::{MeshSpec, SchemeParams};
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::run::advance;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("a study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("level {level}: {msg}")]
    Solver { level: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// `h / 2^k` with `tau / 4^k`.
    Spatial,
    /// Fixed mesh, `tau / 2^k`.
    Temporal,
}

impl FromStr for StudyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spatial" => Ok(StudyKind::Spatial),
            "temporal" => Ok(StudyKind::Temporal),
            _ => Err(format!("unknown study kind `{s}` (spatial, temporal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub level: usize,
    pub cells: usize,
    /// Nominal step at `t = 0`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub levels: Vec<StudyLevel>,
    /// RMS of `u` between levels `k` and `k+1` at the coarsest nodes.
    pub differences: Vec<f64>,
    /// `log2(d_k / d_{k+1})`.
    pub orders: Vec<f64>,
    /// All differences vanish.
    pub exact: bool,
    /// False when the problem has discontinuous data and the orders mean little.
    pub smooth: bool,
}

impl StudyReport {
    /// Order from the finest pair of differences.
    pub fn observed_order(&self) -> Option<f64> {
        if self.exact {
            None
        } else {
            self.orders.last().copied()
        }
    }

    pub fn to_dat(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {:?} self-convergence of u", self.kind);
        let _ = writeln!(s, "# level cells tau rms_diff_to_next order");
        for (k, l) in self.levels.iter().enumerate() {
            let d = self.differences.get(k).map_or("nan".to_string(), |v| format!("{v:e}"));
            let o = self.orders.get(k).map_or("nan".to_string(), |v| format!("{v}"));
            let _ = writeln!(s, "{} {} {:e} {} {}", l.level, l.cells, l.tau, d, o);
        }
        s
    }

    pub fn describe(&self) -> String {
        if self.exact {
            return format!("{:?}: exact (all differences zero)", self.kind);
        }
        let mut s = format!(
            "{:?}: observed order {:.3}",
            self.kind,
            self.observed_order().unwrap_or(f64::NAN)
        );
        if !self.smooth {
            s.push_str(" (non-smooth problem, order claim void)");
        }
        s
    }
}

fn level_config(cfg: &RunConfig, kind: StudyKind, k: usize) -> RunConfig {
    let mut c = cfg.clone();
    match kind {
        StudyKind::Spatial => {
            c.problem = cfg.problem.clone().with_cells(cfg.problem.cells() << k);
            if let Some(spec) = &cfg.mesh {
                let mut m = spec.build().expect("validated mesh");
                for _ in 0..k {
                    m = m.refined();
                }
                c.mesh = Some(MeshSpec::Nodes(m.nodes().to_vec()));
            }
            c.tau = cfg.tau.scaled(0.25f64.powi(k as i32));
        }
        StudyKind::Temporal => c.tau = cfg.tau.scaled(0.5f64.powi(k as i32)),
    }
    c
}

fn solve_level(cfg: &RunConfig, params: &SchemeParams, level: usize) -> Result<(StudyLevel, Vec<f64>), StudyError> {
    let layer = cfg.initial_layer()?;
    let cells = layer.cells();
    let end = advance(layer, cfg, params).map_err(|msg| StudyError::Solver { level, msg })?;
    Ok((
        StudyLevel {
            level,
            cells,
            tau: cfg.tau.at(0.0),
        },
        end.u.into_inner(),
    ))
}

/// Runs all levels (concurrently) and compares the final velocities.
pub fn convergence_study(cfg: &RunConfig, levels: usize, kind: StudyKind) -> Result<StudyReport, StudyError> {
    if levels < 3 {
        return Err(StudyError::TooFewLevels(levels));
    }
    cfg.validate()?;
    let smooth = cfg.problem.is_smooth();
    if !smooth {
        warn!(
            "problem `{}` is not smooth; observed orders are not meaningful",
            cfg.problem.name()
        );
    }
    let params = cfg.scheme_params()?;
    let configs: Vec<RunConfig> = (0..levels).map(|k| level_config(cfg, kind, k)).collect();
    let results: Vec<Result<(StudyLevel, Vec<f64>), StudyError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let params = &params;
                scope.spawn(move || solve_level(c, params, k))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(levels);
    let mut fields = Vec::with_capacity(levels);
    for r in results {
        let (row, u) = r?;
        rows.push(row);
        fields.push(u);
    }
    let coarse_nodes = fields[0].len();
    let sample = |k: usize, i: usize| {
        let stride = match kind {
            StudyKind::Spatial => 1usize << k,
            StudyKind::Temporal => 1,
        };
        fields[k][i * stride]
    };
    let differences: Vec<f64> = (0..levels - 1)
        .map(|k| {
            let ss: f64 = (0..coarse_nodes)
                .map(|i| (sample(k + 1, i) - sample(k, i)).powi(2))
                .sum();
            (ss / coarse_nodes as f64).sqrt()
        })
        .collect();
    let orders = differences.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(StudyReport {
        kind,
        levels: rows,
        exact: differences.iter().all(|&d| d == 0.0),
        differences,
        orders,
        smooth,
    })
}

pub fn write_dat(report: &StudyReport, dir: &Path) -> Result<PathBuf, StudyError> {
    let name = match report.kind {
        StudyKind::Spatial => "convergence_spatial.dat",
        StudyKind::Temporal => "convergence_temporal.dat",
    };
    std::fs::create_dir_all(dir).map_err(|source| StudyError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, report.to_dat()).map_err(|source| StudyError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
