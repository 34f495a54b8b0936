//! Residuals of the implicit scheme on a pair of layers.
//!
//! All residuals are written in rate form (divided by `tau`) except the
//! equation of state, which is an algebraic relation in energy units. Every
//! function reads raw layer data only; nothing is cached between calls.

use crate::state::{Geometry, TwoLayerView};

use super::params::{BoundaryCondition, EosMode, SchemeParams, Side};

/// `R = (r_hat^{n+1} - r^{n+1}) / ((n+1)(r_hat - r))` in closed form.
pub fn r_factor(r_lo: f64, r_hi: f64, geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Planar => 1.0,
        Geometry::Cylindrical => 0.5 * (r_hi + r_lo),
        Geometry::Spherical => (r_hi * r_hi + r_hi * r_lo + r_lo * r_lo) / 3.0,
    }
}

/// `r^{(0.5)} R - (r^{n+1})^{(0.5)}` at a node, in closed form.
pub fn volume_bracket(r_lo: f64, r_hi: f64, geometry: Geometry) -> f64 {
    let d = r_hi - r_lo;
    match geometry {
        Geometry::Planar => 0.0,
        Geometry::Cylindrical => -0.25 * d * d,
        Geometry::Spherical => -(r_hi + r_lo) * d * d / 3.0,
    }
}

/// `R_i u^{(0.5)}_i`, the nodal volume flux.
pub fn nodal_flux(view: &TwoLayerView<'_>, node: usize) -> f64 {
    let r = r_factor(view.lo.r[node], view.hi.r[node], view.geometry());
    r * view.u_half(node)
}

/// `(R u^{(0.5)})_s` on a cell.
pub fn volume_rate(view: &TwoLayerView<'_>, cell: usize) -> f64 {
    (nodal_flux(view, cell + 1) - nodal_flux(view, cell)) / view.mesh().width(cell)
}

/// Compression-switched quadratic artificial pressure on a cell.
pub fn viscous_pressure(view: &TwoLayerView<'_>, visc_nu: f64, cell: usize) -> f64 {
    if visc_nu == 0.0 {
        return 0.0;
    }
    if volume_rate(view, cell) >= 0.0 {
        return 0.0;
    }
    let du = view.u_half(cell + 1) - view.u_half(cell);
    let rho_half = 0.5 * (view.lo.rho[cell] + view.hi.rho[cell]);
    visc_nu * rho_half * du * du
}

/// `P + omega` on a cell.
pub fn effective_pressure(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64], cell: usize) -> f64 {
    pressure[cell] + viscous_pressure(view, params.visc_nu, cell)
}

pub fn residual_mass(view: &TwoLayerView<'_>, cell: usize) -> f64 {
    view.volume_t(cell) - volume_rate(view, cell)
}

/// Interior momentum residual. `None` for boundary nodes, whose equation is
/// the closure in [`boundary_closure`].
pub fn residual_momentum(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64], node: usize) -> Option<f64> {
    let n = view.cells();
    if node == 0 || node >= n {
        return None;
    }
    let mesh = view.mesh();
    let q_left = effective_pressure(view, params, pressure, node - 1);
    let q_right = effective_pressure(view, params, pressure, node);
    let r = r_factor(view.lo.r[node], view.hi.r[node], view.geometry());
    Some(view.u_t(node) + r * (q_right - q_left) / mesh.dual_width(node))
}

/// Residual of the boundary equation at node 0 or node N.
///
/// Wall: `(u_hat - u_wall) / tau`. Pressure: one-sided momentum balance
/// against `p_b^{(alpha)}` over half a cell.
pub fn boundary_closure(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64], side: Side) -> f64 {
    let n = view.cells();
    let (node, cell) = match side {
        Side::Left => (0, 0),
        Side::Right => (n, n - 1),
    };
    match params.effective_boundary(view.lo, side) {
        BoundaryCondition::Wall { velocity } => (view.hi.u[node] - velocity) / view.tau,
        BoundaryCondition::Pressure { trace } => {
            let pb = SchemeParams::boundary_pressure(&trace, params.effective_alpha(), view.t(), view.tau);
            let q = effective_pressure(view, params, pressure, cell);
            let r = r_factor(view.lo.r[node], view.hi.r[node], view.geometry());
            let half = 0.5 * view.mesh().width(cell);
            let gradient = match side {
                Side::Left => (q - pb) / half,
                Side::Right => (pb - q) / half,
            };
            view.u_t(node) + r * gradient
        }
    }
}

pub fn residual_energy(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64], cell: usize) -> f64 {
    let eps_t = (view.hi.eps[cell] - view.lo.eps[cell]) / view.tau;
    eps_t + effective_pressure(view, params, pressure, cell) * volume_rate(view, cell)
}

pub fn residual_trajectory(view: &TwoLayerView<'_>, node: usize) -> f64 {
    (view.hi.r[node] - view.lo.r[node]) / view.tau - view.u_half(node)
}

/// Equation-of-state residual on a cell.
///
/// Pointwise: `eps_hat - p_hat / ((gamma - 1) rho_hat)`. Conservative:
/// `eps^{(0.5)}` minus the two-layer closure evaluated with the mid-step
/// pressure `P`.
pub fn residual_eos(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64], cell: usize) -> f64 {
    let gm1 = params.gamma - 1.0;
    match params.eos_mode {
        EosMode::Pointwise => view.hi.eps[cell] - view.hi.p[cell] / (gm1 * view.hi.rho[cell]),
        EosMode::Conservative => {
            let g = view.geometry();
            let p = pressure[cell];
            let eps_half = 0.5 * (view.hi.eps[cell] + view.lo.eps[cell]);
            let vol_half = 0.5 * (1.0 / view.hi.rho[cell] + 1.0 / view.lo.rho[cell]);
            // tau^2/8 <(u_t)^2> = <(u_hat - u)^2> / 8
            let du = |j: usize| {
                let d = view.hi.u[j] - view.lo.u[j];
                d * d
            };
            let kinetic = 0.0625 * (du(cell) + du(cell + 1));
            let bracket = |j: usize| volume_bracket(view.lo.r[j], view.hi.r[j], g);
            let bracket_s = (bracket(cell + 1) - bracket(cell)) / view.mesh().width(cell);
            eps_half - (p / gm1 * vol_half - kinetic + 0.5 * p * bracket_s)
        }
    }
}

/// Per-equation residual fields of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub mass: Vec<f64>,
    /// Node-indexed; entries 0 and N hold the boundary closures.
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub trajectory: Vec<f64>,
    pub eos: Vec<f64>,
}

impl Residuals {
    pub fn evaluate(view: &TwoLayerView<'_>, params: &SchemeParams, pressure: &[f64]) -> Self {
        let n = view.cells();
        let momentum = (0..=n)
            .map(|i| match i {
                0 => boundary_closure(view, params, pressure, Side::Left),
                i if i == n => boundary_closure(view, params, pressure, Side::Right),
                i => residual_momentum(view, params, pressure, i).expect("interior node"),
            })
            .collect();
        Self {
            mass: (0..n).map(|c| residual_mass(view, c)).collect(),
            momentum,
            energy: (0..n).map(|c| residual_energy(view, params, pressure, c)).collect(),
            trajectory: (0..=n).map(|i| residual_trajectory(view, i)).collect(),
            eos: (0..n).map(|c| residual_eos(view, params, pressure, c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MassMesh;
    use crate::state::{CellField, GridLayer, NodeField};
    use std::sync::Arc;

    #[test]
    fn r_factor_closed_forms() {
        assert_eq!(r_factor(0.3, 7.0, Geometry::Planar), 1.0);
        assert!((r_factor(1.0, 1.2, Geometry::Cylindrical) - 1.1).abs() < 1e-15);
        assert_eq!(r_factor(1.0, 1.0, Geometry::Spherical), 1.0);
        assert!((r_factor(1.0, 2.0, Geometry::Spherical) - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(r_factor(0.0, 0.0, Geometry::Spherical), 0.0);
    }

    #[test]
    fn r_factor_matches_divided_difference() {
        for g in [Geometry::Planar, Geometry::Cylindrical, Geometry::Spherical] {
            let (a, b) = (0.7f64, 1.3f64);
            let k = g.exponent() as i32 + 1;
            let dd = (b.powi(k) - a.powi(k)) / (k as f64 * (b - a));
            assert!((r_factor(a, b, g) - dd).abs() < 1e-14);
            let near = r_factor(a, a * (1.0 + 1e-9), g);
            assert!((near - a.powi(k - 1)).abs() < 1e-8);
        }
    }

    #[test]
    fn volume_bracket_matches_definition() {
        for g in [Geometry::Planar, Geometry::Cylindrical, Geometry::Spherical] {
            let (a, b) = (0.4f64, 0.9f64);
            let k = g.exponent() as i32 + 1;
            let direct = 0.5 * (a + b) * r_factor(a, b, g) - 0.5 * (a.powi(k) + b.powi(k));
            assert!((volume_bracket(a, b, g) - direct).abs() < 1e-15);
        }
    }

    fn two_layers(
        mesh: &[f64],
        r: [Vec<f64>; 2],
        u: [Vec<f64>; 2],
        rho: [Vec<f64>; 2],
        p: [Vec<f64>; 2],
        eps: [Vec<f64>; 2],
    ) -> (GridLayer, GridLayer) {
        let m = Arc::new(MassMesh::new(mesh.to_vec()).unwrap());
        let mk = |k: usize| {
            GridLayer::new(
                m.clone(),
                Geometry::Planar,
                0.0,
                NodeField::new(r[k].clone()),
                NodeField::new(u[k].clone()),
                CellField::new(rho[k].clone()),
                CellField::new(p[k].clone()),
                CellField::new(eps[k].clone()),
            )
            .unwrap()
        };
        (mk(0), mk(1))
    }

    #[test]
    fn viscous_pressure_examples() {
        // compressing cell: u^{(0.5)} = [0.5, 0.0], rho^{(0.5)} = 1
        let (lo, hi) = two_layers(
            &[0.0, 1.0, 2.0],
            [vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]],
            [vec![0.5, 0.0, 0.0], vec![0.5, 0.0, 0.0]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
        );
        let v = TwoLayerView::new(&lo, &hi, 0.1).unwrap();
        assert_eq!(viscous_pressure(&v, 2.0, 0), 0.5);
        assert_eq!(viscous_pressure(&v, 0.0, 0), 0.0);
        // cell 1 neither compresses nor expands
        assert_eq!(viscous_pressure(&v, 2.0, 1), 0.0);
        let (lo, hi) = two_layers(
            &[0.0, 1.0, 2.0],
            [vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]],
            [vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
        );
        let v = TwoLayerView::new(&lo, &hi, 0.1).unwrap();
        assert_eq!(viscous_pressure(&v, 2.0, 0), 0.0);
    }

    #[test]
    fn momentum_balances_pressure_gradient() {
        // n = 0, P = [1, 2], h = [1, 1], u_hat = u - tau  =>  u_t = -1 = -p_sbar
        let tau = 0.25;
        let (lo, hi) = two_layers(
            &[0.0, 1.0, 2.0],
            [vec![0.0, 1.0, 2.0], vec![0.0, 1.0 - 0.875 * tau, 2.0]],
            [vec![0.0, 1.0, 0.0], vec![0.0, 1.0 - tau, 0.0]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0, 2.0], vec![1.0, 2.0]],
            [vec![1.0; 2], vec![1.0; 2]],
        );
        let v = TwoLayerView::new(&lo, &hi, tau).unwrap();
        let params = SchemeParams::new(Geometry::Planar, 1.4);
        assert_eq!(residual_momentum(&v, &params, &[1.0, 2.0], 1), Some(0.0));
        assert_eq!(residual_momentum(&v, &params, &[1.0, 2.0], 0), None);
        assert_eq!(residual_momentum(&v, &params, &[1.0, 2.0], 2), None);
    }

    #[test]
    fn trajectory_midpoint_rule() {
        let (lo, hi) = two_layers(
            &[0.0, 1.0, 2.0],
            [vec![0.0, 1.0, 2.0], vec![2.0, 3.0, 4.0]],
            [vec![1.0; 3], vec![3.0; 3]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
            [vec![1.0; 2], vec![1.0; 2]],
        );
        let v = TwoLayerView::new(&lo, &hi, 1.0).unwrap();
        for i in 0..3 {
            assert_eq!(residual_trajectory(&v, i), 0.0);
        }
        // uniform translation: R = 1, (R u)_s = 0, no volume change
        for c in 0..2 {
            assert_eq!(volume_rate(&v, c), 0.0);
            assert_eq!(residual_mass(&v, c), 0.0);
        }
    }

    #[test]
    fn static_gas_has_zero_residuals_in_both_modes() {
        let gamma: f64 = 1.4;
        let eps = 1.0 / ((gamma - 1.0) * 2.0);
        let (lo, hi) = two_layers(
            &[0.0, 0.5, 1.0, 1.5],
            [vec![0.0, 0.25, 0.5, 0.75], vec![0.0, 0.25, 0.5, 0.75]],
            [vec![0.0; 4], vec![0.0; 4]],
            [vec![2.0; 3], vec![2.0; 3]],
            [vec![1.0; 3], vec![1.0; 3]],
            [vec![eps; 3], vec![eps; 3]],
        );
        let v = TwoLayerView::new(&lo, &hi, 0.3).unwrap();
        for mode in [EosMode::Pointwise, EosMode::Conservative] {
            let params = SchemeParams::new(Geometry::Planar, gamma).with_eos_mode(mode);
            let res = Residuals::evaluate(&v, &params, &[1.0; 3]);
            for field in [&res.mass, &res.momentum, &res.energy, &res.trajectory, &res.eos] {
                assert!(field.iter().all(|x| x.abs() < 1e-15), "{mode:?}: {field:?}");
            }
        }
    }
}
