use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{weighted, Alpha, Geometry, GridLayer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("adiabatic exponent must be finite and differ from 0 and 1, got {0}")]
    InvalidGamma(f64),
    #[error("artificial viscosity coefficient must be finite and >= 0, got {0}")]
    InvalidViscosity(f64),
    #[error("newton_tol must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("newton_max_iter must be at least 1")]
    NoIterations,
    #[error("pressure boundary trace is empty or not finite")]
    InvalidTrace,
    #[error("wall velocity must be finite, got {0}")]
    InvalidWallVelocity(f64),
}

/// How the closing equation of state is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EosMode {
    /// `eps = p / ((gamma - 1) rho)` on each time layer; momentum and energy use `p^{(alpha)}`.
    #[default]
    Pointwise,
    /// Two-layer equation of state chosen so that the two extra laws hold at
    /// `gamma = 1 + 2/(n+1)`; the cell pressure unknown is the mid-step value.
    Conservative,
}

/// External pressure `p_b(t)` applied at an open boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PressureTrace {
    Constant(f64),
    /// `(t, p)` samples, linearly interpolated and held constant outside the range.
    Table(Vec<(f64, f64)>),
}

impl PressureTrace {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            PressureTrace::Constant(p) => *p,
            PressureTrace::Table(points) => {
                let first = points[0];
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, p0), (t1, p1)) = (w[0], w[1]);
                    if t <= t1 {
                        if t1 == t0 {
                            return p1;
                        }
                        return p0 + (p1 - p0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let ok = match self {
            PressureTrace::Constant(p) => p.is_finite(),
            PressureTrace::Table(points) => {
                !points.is_empty()
                    && points.iter().all(|(t, p)| t.is_finite() && p.is_finite())
                    && points.windows(2).all(|w| w[1].0 >= w[0].0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ConfigError::InvalidTrace)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// Prescribed boundary velocity.
    Wall {
        #[serde(default)]
        velocity: f64,
    },
    /// Prescribed external pressure.
    Pressure { trace: PressureTrace },
}

impl BoundaryCondition {
    pub const WALL: BoundaryCondition = BoundaryCondition::Wall { velocity: 0.0 };

    pub fn pressure(p: f64) -> Self {
        BoundaryCondition::Pressure {
            trace: PressureTrace::Constant(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    #[serde(rename = "n")]
    pub geometry: Geometry,
    pub gamma: f64,
    #[serde(default = "default_alpha")]
    pub alpha: Alpha,
    #[serde(default)]
    pub eos_mode: EosMode,
    #[serde(default = "default_wall")]
    pub bc_left: BoundaryCondition,
    #[serde(default = "default_wall")]
    pub bc_right: BoundaryCondition,
    #[serde(default)]
    pub visc_nu: f64,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub newton_max_iter: usize,
}

fn default_alpha() -> Alpha {
    Alpha::HALF
}

fn default_wall() -> BoundaryCondition {
    BoundaryCondition::WALL
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    50
}

impl SchemeParams {
    /// Pointwise equation of state, `alpha = 0.5`, walls, no viscosity.
    pub fn new(geometry: Geometry, gamma: f64) -> Self {
        Self {
            geometry,
            gamma,
            alpha: default_alpha(),
            eos_mode: EosMode::Pointwise,
            bc_left: default_wall(),
            bc_right: default_wall(),
            visc_nu: 0.0,
            newton_tol: default_tol(),
            newton_max_iter: default_max_iter(),
        }
    }

    pub fn with_eos_mode(mut self, mode: EosMode) -> Self {
        self.eos_mode = mode;
        self
    }

    pub fn with_alpha(mut self, alpha: Alpha) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_boundaries(mut self, left: BoundaryCondition, right: BoundaryCondition) -> Self {
        self.bc_left = left;
        self.bc_right = right;
        self
    }

    pub fn with_viscosity(mut self, nu: f64) -> Self {
        self.visc_nu = nu;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = self.gamma;
        if !g.is_finite() || g == 0.0 || g == 1.0 {
            return Err(ConfigError::InvalidGamma(g));
        }
        if !(self.visc_nu.is_finite() && self.visc_nu >= 0.0) {
            return Err(ConfigError::InvalidViscosity(self.visc_nu));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(ConfigError::InvalidTolerance(self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return Err(ConfigError::NoIterations);
        }
        for bc in [&self.bc_left, &self.bc_right] {
            match bc {
                BoundaryCondition::Wall { velocity } if !velocity.is_finite() => {
                    return Err(ConfigError::InvalidWallVelocity(*velocity))
                }
                BoundaryCondition::Pressure { trace } => trace.validate()?,
                _ => {}
            }
        }
        Ok(())
    }

    /// The pressure time weight actually used: `alpha` for the pointwise
    /// closure, one half for the conservative one.
    pub fn effective_alpha(&self) -> Alpha {
        match self.eos_mode {
            EosMode::Pointwise => self.alpha,
            EosMode::Conservative => Alpha::HALF,
        }
    }

    /// Whether `gamma` equals `1 + 2/(n+1)` (to a relative 1e-12).
    pub fn gamma_is_special(&self) -> bool {
        let star = self.geometry.special_gamma();
        (self.gamma - star).abs() <= 1e-12 * star
    }

    pub fn boundary(&self, side: Side) -> &BoundaryCondition {
        match side {
            Side::Left => &self.bc_left,
            Side::Right => &self.bc_right,
        }
    }

    /// Boundary condition in force for a layer. A radial boundary sitting on
    /// the origin is always a fixed wall.
    pub fn effective_boundary(&self, layer: &GridLayer, side: Side) -> BoundaryCondition {
        if side == Side::Left && self.geometry.is_radial() && layer.r[0] == 0.0 {
            return BoundaryCondition::WALL;
        }
        self.boundary(side).clone()
    }

    /// `p_b^{(alpha)}` over the step `[t, t + tau]`.
    pub fn boundary_pressure(trace: &PressureTrace, alpha: Alpha, t: f64, tau: f64) -> f64 {
        weighted(trace.at(t), trace.at(t + tau), alpha)
    }
}
