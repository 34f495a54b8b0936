use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lagcons::claws::{AuditTolerances, LawId};
use lagcons::scheme::{BoundaryCondition, SchemeParams};
use lagcons::setup::{make_initial_layer, make_layer_on_mass_mesh, Problem, SetupError};
use lagcons::{Alpha, EosMode, Geometry, GridLayer, MeshSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("t_end must be positive and finite, got {0}")]
    TEnd(f64),
    #[error("tau schedule is empty or has a non-positive step")]
    Tau,
    #[error("snapshot_every must be at least 1")]
    SnapshotEvery,
    #[error("max_halvings must be at most 10, got {0}")]
    Halvings(u32),
    #[error(transparent)]
    Scheme(#[from] lagcons::scheme::ConfigError),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Mesh(#[from] lagcons::mesh::MeshError),
}

/// Overrides applied on top of the problem's parameter template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default = "planar")]
    pub n: Geometry,
    pub gamma: Option<f64>,
    pub alpha: Option<Alpha>,
    pub eos_mode: Option<EosMode>,
    pub bc_left: Option<BoundaryCondition>,
    pub bc_right: Option<BoundaryCondition>,
    pub visc_nu: Option<f64>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
}

impl Default for ParamOverrides {
    fn default() -> Self {
        Self {
            n: Geometry::Planar,
            gamma: None,
            alpha: None,
            eos_mode: None,
            bc_left: None,
            bc_right: None,
            visc_nu: None,
            newton_tol: None,
            newton_max_iter: None,
        }
    }
}

fn planar() -> Geometry {
    Geometry::Planar
}

/// Fixed step, or `[t_from, tau]` pairs: `tau` applies from `t_from` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Fixed(f64),
    Schedule(Vec<(f64, f64)>),
}

impl TauSpec {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TauSpec::Fixed(tau) => *tau,
            TauSpec::Schedule(points) => {
                points
                    .iter()
                    .take_while(|(from, _)| *from <= t)
                    .last()
                    .unwrap_or(&points[0])
                    .1
            }
        }
    }

    fn valid(&self) -> bool {
        match self {
            TauSpec::Fixed(tau) => tau.is_finite() && *tau > 0.0,
            TauSpec::Schedule(points) => {
                !points.is_empty()
                    && points
                        .iter()
                        .all(|(t, tau)| t.is_finite() && tau.is_finite() && *tau > 0.0)
                    && points.windows(2).all(|w| w[1].0 > w[0].0)
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            TauSpec::Fixed(tau) => TauSpec::Fixed(tau * factor),
            TauSpec::Schedule(points) => TauSpec::Schedule(points.iter().map(|(t, tau)| (*t, tau * factor)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AuditSelection {
    All(AllLaws),
    Laws(Vec<LawId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllLaws {
    All,
}

impl Default for AuditSelection {
    fn default() -> Self {
        AuditSelection::All(AllLaws::All)
    }
}

impl AuditSelection {
    pub fn laws(&self) -> Vec<LawId> {
        match self {
            AuditSelection::All(_) => LawId::ALL.to_vec(),
            AuditSelection::Laws(laws) => laws.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub per_cell: Option<f64>,
    pub budget_relative: Option<f64>,
}

fn default_halvings() -> u32 {
    10
}
fn default_every() -> u64 {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    /// Explicit mass mesh; Euler nodes are placed to match it.
    #[serde(default)]
    pub mesh: Option<MeshSpec>,
    #[serde(default)]
    pub params: ParamOverrides,
    pub t_end: f64,
    pub tau: TauSpec,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
    #[serde(default = "default_every")]
    pub snapshot_every: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub audit: AuditSelection,
    #[serde(default)]
    pub tolerances: Option<ToleranceOverrides>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(ConfigError::TEnd(self.t_end));
        }
        if !self.tau.valid() {
            return Err(ConfigError::Tau);
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::SnapshotEvery);
        }
        if self.max_halvings > 10 {
            return Err(ConfigError::Halvings(self.max_halvings));
        }
        self.scheme_params()?.validate()?;
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        self.params.n
    }

    pub fn scheme_params(&self) -> Result<SchemeParams, ConfigError> {
        let (_, mut p) = self.problem.build(self.geometry());
        let o = &self.params;
        if let Some(v) = o.gamma {
            p.gamma = v;
        }
        if let Some(v) = o.alpha {
            p.alpha = v;
        }
        if let Some(v) = o.eos_mode {
            p.eos_mode = v;
        }
        if let Some(v) = &o.bc_left {
            p.bc_left = v.clone();
        }
        if let Some(v) = &o.bc_right {
            p.bc_right = v.clone();
        }
        if let Some(v) = o.visc_nu {
            p.visc_nu = v;
        }
        if let Some(v) = o.newton_tol {
            p.newton_tol = v;
        }
        if let Some(v) = o.newton_max_iter {
            p.newton_max_iter = v;
        }
        Ok(p)
    }

    /// Initial layer. The profile's energy uses the configured `gamma`.
    pub fn initial_layer(&self) -> Result<GridLayer, ConfigError> {
        let g = self.geometry();
        let (mut profile, _) = self.problem.build(g);
        profile.gamma = self.scheme_params()?.gamma;
        Ok(match &self.mesh {
            None => make_initial_layer(&profile, g)?,
            Some(spec) => make_layer_on_mass_mesh(&profile, g, &spec.build()?)?,
        })
    }

    pub fn tolerances(&self) -> Result<AuditTolerances, ConfigError> {
        let mut tol = AuditTolerances::for_params(&self.scheme_params()?);
        if let Some(o) = self.tolerances {
            if let Some(v) = o.per_cell {
                tol.per_cell = v;
            }
            if let Some(v) = o.budget_relative {
                tol.budget_relative = v;
            }
        }
        Ok(tol)
    }
}
