//! One implicit time step of the conservative Lagrangian scheme.
//!
//! Unknowns are the new nodal velocities `u_hat` and one pressure unknown per
//! cell. Given those, the new coordinates follow from the trajectory
//! equation, the new density from the mass equation and the new internal
//! energy from the energy equation, all explicitly. What remains is a square
//! system of momentum rows (one per node, boundary closures included) and
//! equation-of-state rows (one per cell), interleaved node/cell so that the
//! Jacobian has two sub- and two super-diagonals. Newton's method solves it
//! with a finite-difference Jacobian and a banded LU.
//!
//! The per-cell pressure unknown is `p_hat` for the pointwise closure (the
//! weighted `p^{(alpha)}` enters the dynamics) and the mid-step pressure `P`
//! for the conservative closure, in which case `p_hat = 2P - p` is stored.

mod params;
pub mod residual;

use std::sync::Arc;

use thiserror::Error;

use crate::banded::{BandError, BandMatrix};
use crate::state::{weighted, CellField, GridLayer, NodeField, StateError, TwoLayerView, DEFAULT_CONSISTENCY_TOL};

pub use params::{BoundaryCondition, ConfigError, EosMode, PressureTrace, SchemeParams, Side};
pub use residual::{
    boundary_closure, effective_pressure, nodal_flux, r_factor, residual_energy, residual_eos, residual_mass,
    residual_momentum, residual_trajectory, viscous_pressure, volume_bracket, volume_rate, Residuals,
};

const BAND: usize = 2;
const FD_STEP: f64 = 1.4901161193847656e-8; // sqrt(f64::EPSILON)

/// Largest absolute residual per equation class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualMaxima {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub trajectory: f64,
    pub eos: f64,
}

impl ResidualMaxima {
    fn from_residuals(res: &Residuals) -> Self {
        let max = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        Self {
            mass: max(&res.mass),
            momentum: max(&res.momentum),
            energy: max(&res.energy),
            trajectory: max(&res.trajectory),
            eos: max(&res.eos),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Newton passes, counting the one that found the residual converged.
    pub iterations: usize,
    /// Scaled max norm of the Newton system at the returned state.
    pub final_residual_norm: f64,
    /// Scaled norm after each pass.
    pub history: Vec<f64>,
    pub maxima: ResidualMaxima,
    pub accepted: bool,
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid input layer: {0}")]
    InvalidInput(StateError),
    #[error("time step must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("Newton did not converge in {} iterations (last residual {:e})", report.iterations, report.final_residual_norm)]
    NotConverged { report: Box<StepReport> },
    #[error("Newton produced non-finite values after {} iterations", report.iterations)]
    NonFinite { report: Box<StepReport> },
    #[error("Jacobian singular: {source}")]
    Singular { source: BandError, report: Box<StepReport> },
    #[error("positivity/ordering failure: {source}")]
    Positivity {
        source: StateError,
        report: Box<StepReport>,
    },
}

impl StepError {
    /// Failures that a smaller time step may cure.
    pub fn is_retryable(&self) -> bool {
        !matches!(
            self,
            StepError::Config(_) | StepError::InvalidInput(_) | StepError::InvalidTau(_)
        )
    }

    pub fn report(&self) -> Option<&StepReport> {
        match self {
            StepError::NotConverged { report }
            | StepError::NonFinite { report }
            | StepError::Singular { report, .. }
            | StepError::Positivity { report, .. } => Some(report),
            _ => None,
        }
    }
}

/// Scale of each residual class, `max(1, |field|)` taken over the old layer.
#[derive(Debug, Clone, Copy)]
struct Scales {
    momentum: f64,
    eos: f64,
}

impl Scales {
    fn of(lo: &GridLayer) -> Self {
        let amax = |v: &[f64]| v.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        Self {
            momentum: amax(&lo.u),
            eos: amax(&lo.eps),
        }
    }
}

struct Newton<'a> {
    lo: &'a GridLayer,
    tau: f64,
    params: &'a SchemeParams,
    scales: Scales,
}

impl<'a> Newton<'a> {
    fn cells(&self) -> usize {
        self.lo.cells()
    }

    fn unknowns(&self) -> usize {
        2 * self.cells() + 1
    }

    fn initial_guess(&self) -> Vec<f64> {
        let n = self.cells();
        let mut x = vec![0.0; 2 * n + 1];
        for i in 0..=n {
            x[2 * i] = self.lo.u[i];
        }
        for c in 0..n {
            x[2 * c + 1] = self.lo.p[c];
        }
        x
    }

    /// New layer and cell pressure `P` implied by the unknowns.
    fn candidate(&self, x: &[f64]) -> (GridLayer, CellField) {
        let lo = self.lo;
        let n = self.cells();
        let tau = self.tau;
        let g = lo.geometry();
        let mesh = lo.mesh();
        let u_hat = NodeField::from_fn(n + 1, |i| x[2 * i]);
        let r_hat = NodeField::from_fn(n + 1, |i| lo.r[i] + tau * (0.5 * (u_hat[i] + lo.u[i])));
        let flux: Vec<f64> = (0..=n)
            .map(|i| r_factor(lo.r[i], r_hat[i], g) * (0.5 * (lo.u[i] + u_hat[i])))
            .collect();
        let rate: Vec<f64> = (0..n).map(|c| (flux[c + 1] - flux[c]) / mesh.width(c)).collect();
        let rho_hat = CellField::from_fn(n, |c| lo.rho[c] / (1.0 + tau * lo.rho[c] * rate[c]));
        let alpha = self.params.alpha;
        let (p_hat, pressure) = match self.params.eos_mode {
            EosMode::Pointwise => {
                let p_hat = CellField::from_fn(n, |c| x[2 * c + 1]);
                let pressure = CellField::from_fn(n, |c| weighted(lo.p[c], p_hat[c], alpha));
                (p_hat, pressure)
            }
            EosMode::Conservative => {
                let pressure = CellField::from_fn(n, |c| x[2 * c + 1]);
                let p_hat = CellField::from_fn(n, |c| 2.0 * pressure[c] - lo.p[c]);
                (p_hat, pressure)
            }
        };
        let nu = self.params.visc_nu;
        let eps_hat = CellField::from_fn(n, |c| {
            let omega = if nu != 0.0 && rate[c] < 0.0 {
                let du = 0.5 * (u_hat[c + 1] + lo.u[c + 1]) - 0.5 * (u_hat[c] + lo.u[c]);
                nu * (0.5 * (lo.rho[c] + rho_hat[c])) * du * du
            } else {
                0.0
            };
            lo.eps[c] - tau * (pressure[c] + omega) * rate[c]
        });
        let hi = GridLayer::from_parts(
            Arc::clone(lo.mesh_arc()),
            g,
            lo.t + tau,
            r_hat,
            u_hat,
            rho_hat,
            p_hat,
            eps_hat,
        );
        (hi, pressure)
    }

    /// Newton rows, interleaved: row `2i` is node `i`, row `2c + 1` is cell `c`.
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (hi, pressure) = self.candidate(x);
        let view = TwoLayerView {
            lo: self.lo,
            hi: &hi,
            tau: self.tau,
        };
        let n = self.cells();
        let mut f = vec![0.0; 2 * n + 1];
        f[0] = boundary_closure(&view, self.params, &pressure, Side::Left);
        f[2 * n] = boundary_closure(&view, self.params, &pressure, Side::Right);
        for i in 1..n {
            f[2 * i] = residual_momentum(&view, self.params, &pressure, i).expect("interior node");
        }
        for c in 0..n {
            f[2 * c + 1] = residual_eos(&view, self.params, &pressure, c);
        }
        f
    }

    fn norm(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().fold(0.0f64, |acc, (k, v)| {
            let scale = if k % 2 == 0 {
                self.scales.momentum
            } else {
                self.scales.eos
            };
            let s = v.abs() / scale;
            if s.is_nan() || acc.is_nan() {
                f64::NAN
            } else {
                acc.max(s)
            }
        })
    }

    /// Forward-difference Jacobian; columns five apart share one residual evaluation.
    fn jacobian(&self, x: &[f64], f0: &[f64]) -> BandMatrix {
        let m = self.unknowns();
        let mut jac = BandMatrix::zeros(m, BAND, BAND);
        let pressure_scale = self.lo.p.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let stride = 2 * BAND + 1;
        let mut xp = x.to_vec();
        for color in 0..stride.min(m) {
            let cols: Vec<usize> = (color..m).step_by(stride).collect();
            let steps: Vec<f64> = cols
                .iter()
                .map(|&j| {
                    let typical = if j % 2 == 0 {
                        self.scales.momentum
                    } else {
                        pressure_scale
                    };
                    let h = FD_STEP * (x[j].abs() + typical);
                    // make the step exactly representable
                    (x[j] + h) - x[j]
                })
                .collect();
            for (&j, &h) in cols.iter().zip(&steps) {
                xp[j] = x[j] + h;
            }
            let fp = self.residual(&xp);
            for (&j, &h) in cols.iter().zip(&steps) {
                xp[j] = x[j];
                let lo = j.saturating_sub(BAND);
                let hi = (j + BAND).min(m - 1);
                for i in lo..=hi {
                    jac.set(i, j, (fp[i] - f0[i]) / h);
                }
            }
        }
        jac
    }

    fn solve(&self) -> Result<(GridLayer, CellField, StepReport), StepError> {
        let mut x = self.initial_guess();
        let mut report = StepReport::default();
        for pass in 1..=self.params.newton_max_iter {
            let f = self.residual(&x);
            let norm = self.norm(&f);
            report.iterations = pass;
            report.final_residual_norm = norm;
            report.history.push(norm);
            if !norm.is_finite() {
                return Err(StepError::NonFinite {
                    report: Box::new(report),
                });
            }
            if norm <= self.params.newton_tol {
                let (hi, pressure) = self.candidate(&x);
                return Ok((hi, pressure, report));
            }
            let jac = self.jacobian(&x, &f);
            let lu = match jac.factor() {
                Ok(lu) => lu,
                Err(source) => {
                    return Err(StepError::Singular {
                        source,
                        report: Box::new(report),
                    })
                }
            };
            let mut dx: Vec<f64> = f.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut dx).map_err(|source| StepError::Singular {
                source,
                report: Box::new(report.clone()),
            })?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Err(StepError::NotConverged {
            report: Box::new(report),
        })
    }
}

/// Advances `lo` by `tau`.
///
/// On success the new layer satisfies every scheme equation to
/// `params.newton_tol` (scaled max norm of the Newton system) and passes the
/// positivity, ordering and mass-consistency checks. No partially solved
/// state is returned on failure.
pub fn step(lo: &GridLayer, tau: f64, params: &SchemeParams) -> Result<(GridLayer, StepReport), StepError> {
    params.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(StepError::InvalidTau(tau));
    }
    lo.check_physical().map_err(StepError::InvalidInput)?;
    lo.check_mass_consistency(DEFAULT_CONSISTENCY_TOL)
        .map_err(StepError::InvalidInput)?;
    let newton = Newton {
        lo,
        tau,
        params,
        scales: Scales::of(lo),
    };
    let (hi, pressure, mut report) = newton.solve()?;
    if let Err(source) = hi
        .check_physical()
        .and_then(|_| hi.check_mass_consistency(DEFAULT_CONSISTENCY_TOL))
    {
        return Err(StepError::Positivity {
            source,
            report: Box::new(report),
        });
    }
    let view = TwoLayerView { lo, hi: &hi, tau };
    report.maxima = ResidualMaxima::from_residuals(&Residuals::evaluate(&view, params, &pressure));
    report.accepted = true;
    Ok((hi, report))
}

/// The cell pressure `P` that entered the dynamics of a step, recovered from
/// the two layers: `p^{(alpha)}` (pointwise) or `(p + p_hat) / 2` (conservative).
pub fn step_pressure(view: &TwoLayerView<'_>, params: &SchemeParams) -> CellField {
    let alpha = params.effective_alpha();
    CellField::from_fn(view.cells(), |c| weighted(view.lo.p[c], view.hi.p[c], alpha))
}
