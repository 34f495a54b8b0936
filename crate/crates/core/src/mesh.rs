//! Fixed mass-Lagrangian mesh and per-step time bookkeeping.
//!
//! The mass coordinate is a material label: once a [`MassMesh`] is built it
//! never changes. Cell widths are derived from the node array at
//! construction and are not independently settable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least 3 nodes (2 cells), got {0}")]
    TooFewNodes(usize),
    #[error("mass coordinates must be strictly increasing: s[{index}] = {value} does not exceed s[{}] = {previous}", index - 1)]
    NotIncreasing { index: usize, value: f64, previous: f64 },
    #[error("mass coordinate s[{0}] is not finite")]
    NonFinite(usize),
    #[error("invalid uniform mesh range: s_min = {s_min}, s_max = {s_max}")]
    InvalidRange { s_min: f64, s_max: f64 },
    #[error("uniform mesh needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTau(f64),
}

/// Nonuniform mesh in the mass coordinate `s`, nodes `s_0 < s_1 < ... < s_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMesh {
    s: Vec<f64>,
    h: Vec<f64>,
}

impl MassMesh {
    pub fn new(s: Vec<f64>) -> Result<Self, MeshError> {
        if s.len() < 3 {
            return Err(MeshError::TooFewNodes(s.len()));
        }
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        for i in 1..s.len() {
            if s[i] <= s[i - 1] {
                return Err(MeshError::NotIncreasing {
                    index: i,
                    value: s[i],
                    previous: s[i - 1],
                });
            }
        }
        let h = s.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { s, h })
    }

    /// `cells + 1` equispaced nodes on `[s_min, s_max]`; the last node is `s_max` exactly.
    pub fn uniform(s_min: f64, s_max: f64, cells: usize) -> Result<Self, MeshError> {
        if cells < 2 {
            return Err(MeshError::TooFewCells(cells));
        }
        if !(s_min.is_finite() && s_max.is_finite() && s_max > s_min) {
            return Err(MeshError::InvalidRange { s_min, s_max });
        }
        let width = s_max - s_min;
        let s = (0..=cells)
            .map(|i| {
                if i == cells {
                    s_max
                } else {
                    s_min + width * (i as f64) / (cells as f64)
                }
            })
            .collect();
        Self::new(s)
    }

    /// Bisects every cell. Nodes of `self` are kept at even indices.
    pub fn refined(&self) -> Self {
        let mut s = Vec::with_capacity(2 * self.s.len() - 1);
        for (i, &node) in self.s.iter().enumerate() {
            s.push(node);
            if i + 1 < self.s.len() {
                s.push(self.midpoint(i));
            }
        }
        Self::new(s).expect("bisecting an increasing mesh keeps it increasing")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn widths(&self) -> &[f64] {
        &self.h
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.h.len()
    }

    pub fn node_count(&self) -> usize {
        self.s.len()
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.h[cell]
    }

    /// `s_{i+1/2}`.
    pub fn midpoint(&self, cell: usize) -> f64 {
        0.5 * (self.s[cell] + self.s[cell + 1])
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.midpoint(i)).collect()
    }

    /// Half-sum of the widths around an interior node, `(h_{i-1} + h_i) / 2`.
    pub fn dual_width(&self, node: usize) -> f64 {
        debug_assert!(node >= 1 && node < self.cells());
        0.5 * (self.h[node - 1] + self.h[node])
    }

    /// Mass carried by a node: the dual width inside, `h/2` at the two ends.
    pub fn nodal_mass(&self, node: usize) -> f64 {
        let n = self.cells();
        match node {
            0 => 0.5 * self.h[0],
            i if i == n => 0.5 * self.h[n - 1],
            i => self.dual_width(i),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.s[self.s.len() - 1] - self.s[0]
    }
}

/// Specification of a mass mesh as it appears in run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Nodes(Vec<f64>),
    Uniform { s_min: f64, s_max: f64, cells: usize },
}

impl MeshSpec {
    pub fn build(&self) -> Result<MassMesh, MeshError> {
        match self {
            MeshSpec::Nodes(s) => MassMesh::new(s.clone()),
            MeshSpec::Uniform { s_min, s_max, cells } => MassMesh::uniform(*s_min, *s_max, *cells),
        }
    }
}

/// One step of the time mesh: `t_j` and `tau_j = t_{j+1} - t_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLayer {
    t: f64,
    tau: f64,
}

impl TimeLayer {
    pub fn new(t: f64, tau: f64) -> Result<Self, MeshError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(MeshError::InvalidTau(tau));
        }
        Ok(Self { t, tau })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t_next(&self) -> f64 {
        self.t + self.tau
    }

    /// `t^{(0.5)} = t + tau/2`.
    pub fn t_half(&self) -> f64 {
        self.t + 0.5 * self.tau
    }

    /// `(t^2)^{(0.5)}`, the time-average of `t^2` over the step (not the square of `t_half`).
    pub fn t_sq_half(&self) -> f64 {
        let next = self.t_next();
        0.5 * (self.t * self.t + next * next)
    }
}
