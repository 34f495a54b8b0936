//! Grid functions on one time layer and the staggered difference operators.
//!
//! Kinematic quantities (`r`, `u`) live on mesh nodes and are stored as
//! [`NodeField`]; thermodynamic quantities (`rho`, `p`, `eps`) live on cell
//! midpoints and are stored as [`CellField`]. Operators take the field kind
//! they are defined on, so a nodal field cannot be differenced as if it were
//! cell-centred.

use std::ops::{Deref, Index};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::MassMesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("{what}: index {index} outside valid range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },
    #[error("time weight alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("field `{field}` has length {len}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("density must be positive and finite, cell {cell} has {value}")]
    NonPositiveDensity { cell: usize, value: f64 },
    #[error("field `{field}` is not finite at index {index}")]
    NonFinite { field: &'static str, index: usize },
    #[error("Euler coordinate not strictly increasing at node {node}")]
    NotOrdered { node: usize },
    #[error("radial coordinate negative at node {node}: {value}")]
    NegativeRadius { node: usize, value: f64 },
    #[error("mass-consistency defect {defect:e} in cell {cell} exceeds {tol:e}")]
    MassInconsistent { cell: usize, defect: f64, tol: f64 },
    #[error("layers are not defined on the same mass mesh")]
    MeshMismatch,
    #[error("layers carry different geometries")]
    GeometryMismatch,
    #[error("time step must be positive and finite, got {0}")]
    InvalidTau(f64),
}

/// Symmetry of the flow; `r` is a Cartesian coordinate for `Planar` and a
/// radius otherwise. The exponent `n` appears as `r^n` in the equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Geometry {
    Planar,
    Cylindrical,
    Spherical,
}

impl Geometry {
    pub fn exponent(self) -> u8 {
        match self {
            Geometry::Planar => 0,
            Geometry::Cylindrical => 1,
            Geometry::Spherical => 2,
        }
    }

    /// `r^{n+1} / (n+1)`, the volume potential.
    pub fn volume_potential(self, r: f64) -> f64 {
        match self {
            Geometry::Planar => r,
            Geometry::Cylindrical => 0.5 * r * r,
            Geometry::Spherical => r * r * r / 3.0,
        }
    }

    /// `1 + 2/(n+1)`: 3, 2 and 5/3.
    pub fn special_gamma(self) -> f64 {
        match self {
            Geometry::Planar => 3.0,
            Geometry::Cylindrical => 2.0,
            Geometry::Spherical => 5.0 / 3.0,
        }
    }

    pub fn is_radial(self) -> bool {
        !matches!(self, Geometry::Planar)
    }
}

impl TryFrom<u8> for Geometry {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            0 => Ok(Geometry::Planar),
            1 => Ok(Geometry::Cylindrical),
            2 => Ok(Geometry::Spherical),
            other => Err(format!("geometry exponent n must be 0, 1 or 2, got {other}")),
        }
    }
}

impl From<Geometry> for u8 {
    fn from(g: Geometry) -> u8 {
        g.exponent()
    }
}

macro_rules! grid_field {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn from_fn(len: usize, f: impl FnMut(usize) -> f64) -> Self {
                Self((0..len).map(f).collect())
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

grid_field!(NodeField, "Values at the `N + 1` mesh nodes `s_i`.");
grid_field!(CellField, "Values at the `N` cell midpoints `s_{i+1/2}`.");

/// Time weight `alpha` of `y^{(alpha)} = alpha * y_hat + (1 - alpha) * y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const HALF: Alpha = Alpha(0.5);

    pub fn new(alpha: f64) -> Result<Self, StateError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(StateError::InvalidAlpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = StateError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// `y_t = (y_hat - y) / tau`.
pub fn time_diff(lo: f64, hi: f64, tau: f64) -> f64 {
    debug_assert!(tau > 0.0);
    (hi - lo) / tau
}

/// `y^{(alpha)}`.
pub fn weighted(lo: f64, hi: f64, alpha: Alpha) -> f64 {
    let a = alpha.value();
    if a == 0.0 {
        lo
    } else if a == 1.0 {
        hi
    } else {
        a * hi + (1.0 - a) * lo
    }
}

/// Forward difference of a nodal field onto cell `i + 1/2`: `(f_{i+1} - f_i) / h_i`.
pub fn forward_s(f: &NodeField, mesh: &MassMesh, cell: usize) -> Result<f64, StateError> {
    let n = mesh.cells();
    if cell >= n {
        return Err(StateError::IndexOutOfRange {
            what: "forward_s cell",
            index: cell,
            lo: 0,
            hi: n - 1,
        });
    }
    Ok((f[cell + 1] - f[cell]) / mesh.width(cell))
}

fn check_interior(what: &'static str, mesh: &MassMesh, node: usize) -> Result<(), StateError> {
    let n = mesh.cells();
    if node == 0 || node >= n {
        return Err(StateError::IndexOutOfRange {
            what,
            index: node,
            lo: 1,
            hi: n - 1,
        });
    }
    Ok(())
}

/// Backward difference of a cell field onto interior node `i`:
/// `(g_{i+1/2} - g_{i-1/2}) / ((h_i + h_{i-1}) / 2)`.
pub fn backward_s_cellfield(g: &CellField, mesh: &MassMesh, node: usize) -> Result<f64, StateError> {
    check_interior("backward_s node", mesh, node)?;
    Ok((g[node] - g[node - 1]) / mesh.dual_width(node))
}

/// Width-weighted interpolation of a cell field to interior node `i`:
/// `(h_i g_{i-1/2} + h_{i-1} g_{i+1/2}) / (h_i + h_{i-1})`.
pub fn interp_nodal_pressure(p: &CellField, mesh: &MassMesh, node: usize) -> Result<f64, StateError> {
    check_interior("nodal pressure node", mesh, node)?;
    let hl = mesh.width(node - 1);
    let hr = mesh.width(node);
    Ok((hr * p[node - 1] + hl * p[node]) / (hl + hr))
}

/// `<f>` on cell `i + 1/2`: mean of a nodal expression at nodes `i` and `i + 1`.
pub fn cell_average(cell: usize, f: impl Fn(usize) -> f64) -> f64 {
    0.5 * (f(cell) + f(cell + 1))
}

/// All field values on one time layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayer {
    mesh: Arc<MassMesh>,
    geometry: Geometry,
    pub t: f64,
    pub r: NodeField,
    pub u: NodeField,
    pub rho: CellField,
    pub p: CellField,
    pub eps: CellField,
}

/// Default bound on the relative mass-consistency defect of a layer.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-10;

impl GridLayer {
    /// Builds a layer and checks lengths, positivity and ordering.
    /// Mass consistency is checked separately by [`GridLayer::check_mass_consistency`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: Arc<MassMesh>,
        geometry: Geometry,
        t: f64,
        r: NodeField,
        u: NodeField,
        rho: CellField,
        p: CellField,
        eps: CellField,
    ) -> Result<Self, StateError> {
        let layer = Self::from_parts(mesh, geometry, t, r, u, rho, p, eps);
        layer.check_shape()?;
        layer.check_physical()?;
        Ok(layer)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        mesh: Arc<MassMesh>,
        geometry: Geometry,
        t: f64,
        r: NodeField,
        u: NodeField,
        rho: CellField,
        p: CellField,
        eps: CellField,
    ) -> Self {
        Self {
            mesh,
            geometry,
            t,
            r,
            u,
            rho,
            p,
            eps,
        }
    }

    pub fn mesh(&self) -> &MassMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<MassMesh> {
        &self.mesh
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    fn check_shape(&self) -> Result<(), StateError> {
        let nodes = self.mesh.node_count();
        let cells = self.mesh.cells();
        let lens: [(&'static str, usize, usize); 5] = [
            ("r", self.r.len(), nodes),
            ("u", self.u.len(), nodes),
            ("rho", self.rho.len(), cells),
            ("p", self.p.len(), cells),
            ("eps", self.eps.len(), cells),
        ];
        for (field, len, expected) in lens {
            if len != expected {
                return Err(StateError::LengthMismatch { field, len, expected });
            }
        }
        Ok(())
    }

    /// Finiteness, `rho > 0`, ordered `r` and (radial geometry) `r >= 0`.
    pub fn check_physical(&self) -> Result<(), StateError> {
        let fields: [(&'static str, &[f64]); 5] = [
            ("r", &self.r),
            ("u", &self.u),
            ("rho", &self.rho),
            ("p", &self.p),
            ("eps", &self.eps),
        ];
        for (field, values) in fields {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(StateError::NonFinite { field, index });
            }
        }
        if let Some(cell) = self.rho.iter().position(|&v| v <= 0.0) {
            return Err(StateError::NonPositiveDensity {
                cell,
                value: self.rho[cell],
            });
        }
        if self.geometry.is_radial() {
            if let Some(node) = self.r.iter().position(|&v| v < 0.0) {
                return Err(StateError::NegativeRadius {
                    node,
                    value: self.r[node],
                });
            }
        }
        if let Some(i) = self.r.windows(2).position(|w| w[1] <= w[0]) {
            return Err(StateError::NotOrdered { node: i + 1 });
        }
        Ok(())
    }

    /// Largest relative defect of `(r_{i+1}^{n+1} - r_i^{n+1}) / (n+1) = h_i / rho_{i+1/2}`,
    /// with the cell where it occurs.
    pub fn mass_consistency_defect(&self) -> (usize, f64) {
        let g = self.geometry;
        let mut worst = (0, 0.0);
        for i in 0..self.cells() {
            let volume = self.mesh.width(i) / self.rho[i];
            let swept = g.volume_potential(self.r[i + 1]) - g.volume_potential(self.r[i]);
            let defect = (swept - volume).abs() / volume;
            if defect > worst.1 || defect.is_nan() {
                worst = (i, defect);
            }
        }
        worst
    }

    pub fn check_mass_consistency(&self, tol: f64) -> Result<(), StateError> {
        let (cell, defect) = self.mass_consistency_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(StateError::MassInconsistent { cell, defect, tol })
        }
    }

    /// Specific volume `1 / rho` per cell.
    pub fn specific_volume(&self) -> CellField {
        CellField::from_fn(self.cells(), |i| 1.0 / self.rho[i])
    }
}

/// Two neighbouring layers `t_j`, `t_{j+1}` on one mesh.
#[derive(Debug, Clone, Copy)]
pub struct TwoLayerView<'a> {
    pub lo: &'a GridLayer,
    pub hi: &'a GridLayer,
    pub tau: f64,
}

impl<'a> TwoLayerView<'a> {
    pub fn new(lo: &'a GridLayer, hi: &'a GridLayer, tau: f64) -> Result<Self, StateError> {
        if !(Arc::ptr_eq(&lo.mesh, &hi.mesh) || lo.mesh == hi.mesh) {
            return Err(StateError::MeshMismatch);
        }
        if lo.geometry != hi.geometry {
            return Err(StateError::GeometryMismatch);
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(StateError::InvalidTau(tau));
        }
        Ok(Self { lo, hi, tau })
    }

    pub fn mesh(&self) -> &'a MassMesh {
        &self.lo.mesh
    }

    pub fn geometry(&self) -> Geometry {
        self.lo.geometry
    }

    pub fn cells(&self) -> usize {
        self.lo.cells()
    }

    pub fn t(&self) -> f64 {
        self.lo.t
    }

    pub fn t_hat(&self) -> f64 {
        self.lo.t + self.tau
    }

    pub fn t_half(&self) -> f64 {
        self.lo.t + 0.5 * self.tau
    }

    pub fn t_sq_half(&self) -> f64 {
        let a = self.t();
        let b = self.t_hat();
        0.5 * (a * a + b * b)
    }

    /// `u^{(0.5)}` at a node.
    pub fn u_half(&self, node: usize) -> f64 {
        0.5 * (self.lo.u[node] + self.hi.u[node])
    }

    /// `r^{(0.5)}` at a node.
    pub fn r_half(&self, node: usize) -> f64 {
        0.5 * (self.lo.r[node] + self.hi.r[node])
    }

    /// Nodal `u_t`.
    pub fn u_t(&self, node: usize) -> f64 {
        time_diff(self.lo.u[node], self.hi.u[node], self.tau)
    }

    /// `<(u_t)^2>` on a cell: nodal time differences, squared, then averaged.
    pub fn u_t_sq_avg(&self, cell: usize) -> f64 {
        cell_average(cell, |j| {
            let d = self.u_t(j);
            d * d
        })
    }

    /// `(1/rho)_t` on a cell.
    pub fn volume_t(&self, cell: usize) -> f64 {
        time_diff(1.0 / self.lo.rho[cell], 1.0 / self.hi.rho[cell], self.tau)
    }
}
