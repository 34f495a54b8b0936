//! Initial layers from Eulerian profiles, and a small library of standard problems.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{MassMesh, MeshError};
use crate::scheme::{BoundaryCondition, SchemeParams};
use crate::state::{CellField, Geometry, GridLayer, NodeField, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetupError {
    #[error("Euler nodes must be strictly increasing (node {0})")]
    NotIncreasing(usize),
    #[error("radial profile has negative radius {value} at node {node}")]
    NegativeRadius { node: usize, value: f64 },
    #[error("density must be positive, got {value} in cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },
    #[error("profile sample `{field}` has length {len}, expected {expected}")]
    SampleLength {
        field: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("cannot place mass node {0}: target mass not reached")]
    Inversion(usize),
    #[error("an explicit mass mesh needs an analytic profile")]
    SampledInversion,
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    State(#[from] StateError),
}

pub type Field = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ProfileFields {
    Analytic {
        rho: Field,
        u: Field,
        p: Field,
    },
    /// `u` per node, `rho` and `p` per cell.
    Sampled {
        u: Vec<f64>,
        rho: Vec<f64>,
        p: Vec<f64>,
    },
}

impl fmt::Debug for ProfileFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileFields::Analytic { .. } => f.write_str("Analytic"),
            ProfileFields::Sampled { u, rho, p } => f
                .debug_struct("Sampled")
                .field("u", u)
                .field("rho", rho)
                .field("p", p)
                .finish(),
        }
    }
}

/// Flow state in Euler coordinates, on the nodes `r_nodes`.
#[derive(Debug, Clone)]
pub struct EulerProfile {
    pub r_nodes: Vec<f64>,
    pub fields: ProfileFields,
    pub gamma: f64,
}

impl EulerProfile {
    pub fn analytic(
        r_nodes: Vec<f64>,
        gamma: f64,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            r_nodes,
            fields: ProfileFields::Analytic {
                rho: Arc::new(rho),
                u: Arc::new(u),
                p: Arc::new(p),
            },
            gamma,
        }
    }

    pub fn cells(&self) -> usize {
        self.r_nodes.len().saturating_sub(1)
    }

    fn midpoint(&self, cell: usize) -> f64 {
        0.5 * (self.r_nodes[cell] + self.r_nodes[cell + 1])
    }

    /// Cell densities: the profile value at the Euler midpoint.
    pub fn cell_density(&self) -> Result<Vec<f64>, SetupError> {
        let n = self.cells();
        match &self.fields {
            ProfileFields::Analytic { rho, .. } => Ok((0..n).map(|c| rho(self.midpoint(c))).collect()),
            ProfileFields::Sampled { rho, .. } => {
                check_len("rho", rho.len(), n)?;
                Ok(rho.clone())
            }
        }
    }

    pub fn cell_pressure(&self) -> Result<Vec<f64>, SetupError> {
        let n = self.cells();
        match &self.fields {
            ProfileFields::Analytic { p, .. } => Ok((0..n).map(|c| p(self.midpoint(c))).collect()),
            ProfileFields::Sampled { p, .. } => {
                check_len("p", p.len(), n)?;
                Ok(p.clone())
            }
        }
    }

    pub fn node_velocity(&self) -> Result<Vec<f64>, SetupError> {
        match &self.fields {
            ProfileFields::Analytic { u, .. } => Ok(self.r_nodes.iter().map(|&r| u(r)).collect()),
            ProfileFields::Sampled { u, .. } => {
                check_len("u", u.len(), self.r_nodes.len())?;
                Ok(u.clone())
            }
        }
    }

    fn validate_nodes(&self, g: Geometry) -> Result<(), SetupError> {
        if self.r_nodes.len() < 3 {
            return Err(MeshError::TooFewNodes(self.r_nodes.len()).into());
        }
        if let Some(i) = self.r_nodes.windows(2).position(|w| w[1] <= w[0] || w[1].is_nan()) {
            return Err(SetupError::NotIncreasing(i + 1));
        }
        if g.is_radial() && self.r_nodes[0] < 0.0 {
            return Err(SetupError::NegativeRadius {
                node: 0,
                value: self.r_nodes[0],
            });
        }
        Ok(())
    }
}

fn check_len(field: &'static str, len: usize, expected: usize) -> Result<(), SetupError> {
    if len == expected {
        Ok(())
    } else {
        Err(SetupError::SampleLength { field, len, expected })
    }
}

fn check_density(rho: &[f64]) -> Result<(), SetupError> {
    match rho.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        Some(cell) => Err(SetupError::NonPositiveDensity { cell, value: rho[cell] }),
        None => Ok(()),
    }
}

/// `s_0 = 0`, `s_{i+1} = s_i + rho_{i+1/2} (r_{i+1}^{n+1} - r_i^{n+1}) / (n+1)`.
pub fn mass_coordinate(profile: &EulerProfile, g: Geometry) -> Result<MassMesh, SetupError> {
    profile.validate_nodes(g)?;
    let rho = profile.cell_density()?;
    check_density(&rho)?;
    Ok(MassMesh::new(cumulative_mass(0.0, &profile.r_nodes, &rho, g))?)
}

fn cumulative_mass(s0: f64, r: &[f64], rho: &[f64], g: Geometry) -> Vec<f64> {
    let mut s = Vec::with_capacity(r.len());
    s.push(s0);
    for (c, d) in rho.iter().enumerate() {
        let last = s[c];
        s.push(last + d * (g.volume_potential(r[c + 1]) - g.volume_potential(r[c])));
    }
    s
}

/// Layer at `t = 0` with `eps = p / ((gamma - 1) rho)`; mass consistent by construction.
pub fn make_initial_layer(profile: &EulerProfile, g: Geometry) -> Result<GridLayer, SetupError> {
    let mesh = mass_coordinate(profile, g)?;
    layer_on(Arc::new(mesh), profile, g)
}

fn layer_on(mesh: Arc<MassMesh>, profile: &EulerProfile, g: Geometry) -> Result<GridLayer, SetupError> {
    let rho = profile.cell_density()?;
    let p = profile.cell_pressure()?;
    let u = profile.node_velocity()?;
    let eps: Vec<f64> = p
        .iter()
        .zip(&rho)
        .map(|(p, d)| p / ((profile.gamma - 1.0) * d))
        .collect();
    let layer = GridLayer::new(
        mesh,
        g,
        0.0,
        NodeField::new(profile.r_nodes.clone()),
        NodeField::new(u),
        CellField::new(rho),
        CellField::new(p),
        CellField::new(eps),
    )?;
    layer.check_mass_consistency(crate::state::DEFAULT_CONSISTENCY_TOL)?;
    Ok(layer)
}

/// Places Euler nodes so that the cell masses match `target` (offsets from
/// `target[0]`), starting at `r_start`. The density is the profile value at
/// the Euler midpoint, as in [`mass_coordinate`]; the returned mesh is
/// recomputed from the placed nodes so consistency is exact.
pub fn invert_mass_mesh(
    profile: &EulerProfile,
    g: Geometry,
    r_start: f64,
    target: &MassMesh,
) -> Result<(EulerProfile, MassMesh), SetupError> {
    let ProfileFields::Analytic { rho, .. } = &profile.fields else {
        return Err(SetupError::SampledInversion);
    };
    let mut r = vec![r_start];
    for c in 0..target.cells() {
        let left = r[c];
        let h = target.width(c);
        let mass = |x: f64| rho(0.5 * (left + x)) * (g.volume_potential(x) - g.volume_potential(left));
        let mut step = (r_start.abs() + 1.0) * 1e-3;
        let mut hi = left + step;
        let mut guard = 0;
        while mass(hi) < h {
            step *= 2.0;
            hi = left + step;
            guard += 1;
            if guard > 200 {
                return Err(SetupError::Inversion(c + 1));
            }
        }
        let mut lo = left;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mass(mid) < h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        r.push(hi);
    }
    let placed = EulerProfile {
        r_nodes: r,
        fields: profile.fields.clone(),
        gamma: profile.gamma,
    };
    placed.validate_nodes(g)?;
    let rho_cells = placed.cell_density()?;
    check_density(&rho_cells)?;
    let mesh = MassMesh::new(cumulative_mass(target.nodes()[0], &placed.r_nodes, &rho_cells, g))?;
    Ok((placed, mesh))
}

/// Layer on a prescribed mass mesh (up to round-off in the node positions).
pub fn make_layer_on_mass_mesh(
    profile: &EulerProfile,
    g: Geometry,
    target: &MassMesh,
) -> Result<GridLayer, SetupError> {
    let (placed, mesh) = invert_mass_mesh(profile, g, profile.r_nodes[0], target)?;
    layer_on(Arc::new(mesh), &placed, g)
}

/// `(1 - x^2)^3` on `|x| < 1`, zero outside; twice continuously differentiable.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let w = 1.0 - x * x;
        w * w * w
    }
}

fn default_cells() -> usize {
    50
}
fn default_length() -> f64 {
    1.0
}
fn one() -> f64 {
    1.0
}
fn default_amp() -> f64 {
    0.1
}
fn default_center() -> f64 {
    0.5
}
fn default_half_width() -> f64 {
    0.25
}
fn default_sod_cells() -> usize {
    100
}
fn default_sod_visc() -> f64 {
    1.0
}
fn default_outside() -> f64 {
    0.5
}

/// Standard problems. All live on `r in [0, length]`; radial cases start at
/// the origin, which then acts as a wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    /// Gas at rest, constant state.
    Uniform {
        #[serde(default = "default_cells")]
        cells: usize,
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        p: f64,
    },
    /// Compactly supported `C^2` bump in velocity and pressure on a gas at
    /// rest with unit density and pressure; walls at both ends.
    SmoothPulse {
        #[serde(default = "default_cells")]
        cells: usize,
        #[serde(default = "default_length")]
        length: f64,
        /// Peak velocity.
        #[serde(default = "default_amp")]
        amplitude: f64,
        /// Peak pressure excess.
        #[serde(default = "default_amp")]
        pressure_amplitude: f64,
        #[serde(default = "default_center")]
        center: f64,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    /// Shock tube `(rho, p) = (1, 1) | (0.125, 0.1)` at rest, split at mid-length, `gamma = 1.4`.
    Sod {
        #[serde(default = "default_sod_cells")]
        cells: usize,
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_sod_visc")]
        visc_nu: f64,
    },
    /// Unit gas at rest released into a lower outside pressure through the right end.
    Expansion {
        #[serde(default = "default_cells")]
        cells: usize,
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_outside")]
        outside_pressure: f64,
    },
}

impl Problem {
    pub fn by_name(name: &str) -> Result<Self, SetupError> {
        let json = format!(r#"{{"name":"{name}"}}"#);
        serde_json::from_str(&json).map_err(|_| SetupError::UnknownProblem(name.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Uniform { .. } => "uniform",
            Problem::SmoothPulse { .. } => "smooth_pulse",
            Problem::Sod { .. } => "sod",
            Problem::Expansion { .. } => "expansion",
        }
    }

    /// Whether the initial data are smooth enough for order studies.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Problem::Sod { .. })
    }

    pub fn cells(&self) -> usize {
        match self {
            Problem::Uniform { cells, .. }
            | Problem::SmoothPulse { cells, .. }
            | Problem::Sod { cells, .. }
            | Problem::Expansion { cells, .. } => *cells,
        }
    }

    pub fn with_cells(mut self, n: usize) -> Self {
        match &mut self {
            Problem::Uniform { cells, .. }
            | Problem::SmoothPulse { cells, .. }
            | Problem::Sod { cells, .. }
            | Problem::Expansion { cells, .. } => *cells = n,
        }
        self
    }

    fn length(&self) -> f64 {
        match self {
            Problem::Uniform { length, .. }
            | Problem::SmoothPulse { length, .. }
            | Problem::Sod { length, .. }
            | Problem::Expansion { length, .. } => *length,
        }
    }

    /// Profile on `cells` equal Euler cells, plus a parameter template. The
    /// template uses `gamma = 1 + 2/(n+1)` except for the shock tube.
    pub fn build(&self, g: Geometry) -> (EulerProfile, SchemeParams) {
        let n = self.cells();
        let length = self.length();
        let r_nodes: Vec<f64> = (0..=n)
            .map(|i| if i == n { length } else { length * i as f64 / n as f64 })
            .collect();
        let gamma_star = g.special_gamma();
        match *self {
            Problem::Uniform { rho, p, .. } => (
                EulerProfile::analytic(r_nodes, gamma_star, move |_| rho, |_| 0.0, move |_| p),
                SchemeParams::new(g, gamma_star),
            ),
            Problem::SmoothPulse {
                amplitude,
                pressure_amplitude,
                center,
                half_width,
                ..
            } => {
                let x0 = center * length;
                let w = half_width * length;
                (
                    EulerProfile::analytic(
                        r_nodes,
                        gamma_star,
                        |_| 1.0,
                        move |r| amplitude * bump((r - x0) / w),
                        move |r| 1.0 + pressure_amplitude * bump((r - x0) / w),
                    ),
                    SchemeParams::new(g, gamma_star),
                )
            }
            Problem::Sod { visc_nu, .. } => {
                let split = 0.5 * length;
                (
                    EulerProfile::analytic(
                        r_nodes,
                        1.4,
                        move |r| if r < split { 1.0 } else { 0.125 },
                        |_| 0.0,
                        move |r| if r < split { 1.0 } else { 0.1 },
                    ),
                    SchemeParams::new(g, 1.4).with_viscosity(visc_nu),
                )
            }
            Problem::Expansion { outside_pressure, .. } => (
                EulerProfile::analytic(r_nodes, gamma_star, |_| 1.0, |_| 0.0, |_| 1.0),
                SchemeParams::new(g, gamma_star)
                    .with_boundaries(BoundaryCondition::WALL, BoundaryCondition::pressure(outside_pressure)),
            ),
        }
    }
}

/// Library lookup with default problem settings.
pub fn problem_library(name: &str, g: Geometry) -> Result<(EulerProfile, SchemeParams), SetupError> {
    Ok(Problem::by_name(name)?.build(g))
}
