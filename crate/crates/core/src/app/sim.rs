//! Model construction, initial conditions and per-step diagnostics.

use std::f64::consts::PI;
use std::sync::Arc;

use super::config::{InitialCondition, ModelKind, RunConfig};
use super::expr::Expr;
use crate::assembly::kernels::test_v0;
use crate::assembly::DeRhamComplex;
use crate::error::{Error, Result};
use crate::euler2d::{Euler2d, EulerState};
use crate::fespace::{Family, Field};
use crate::linalg::{NewtonConfig, SolverConfig};
use crate::swe_linear::{LinearParams, LinearState, LinearSwe};
use crate::swe_nonlinear::{ShallowWater, StepHistory, SweParams, SweState};

/// Scalars recorded after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub mass: f64,
    pub total_vorticity: f64,
    pub div_l2: f64,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

impl DiagnosticsRecord {
    pub const HEADER: [&'static str; 9] = [
        "step",
        "time",
        "energy",
        "enstrophy",
        "mass",
        "total_vorticity",
        "div_l2",
        "newton_iters",
        "residual_norm",
    ];

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.energy,
            self.enstrophy,
            self.mass,
            self.total_vorticity,
            self.div_l2,
            self.residual_norm,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn to_row(&self) -> [String; 9] {
        [
            self.step.to_string(),
            format!("{:e}", self.time),
            format!("{:e}", self.energy),
            format!("{:e}", self.enstrophy),
            format!("{:e}", self.mass),
            format!("{:e}", self.total_vorticity),
            format!("{:e}", self.div_l2),
            self.newton_iters.to_string(),
            format!("{:e}", self.residual_norm),
        ]
    }
}

enum Model {
    Euler { model: Euler2d, state: EulerState },
    Linear { model: LinearSwe, state: LinearState },
    Nonlinear {
        model: Box<ShallowWater>,
        state: SweState,
        history: StepHistory,
    },
}

/// A configured model with its current state.
pub struct Simulation {
    dc: Arc<DeRhamComplex>,
    model: Model,
    dt: f64,
    step: usize,
}

/// `ψ` of the zonal jet `U(y) = u0 (sin⁴(πy/Ly) - 3/8)`, whose velocity
/// `∇⊥ψ` has zero mean.
pub fn jet_stream_function(dc: &DeRhamComplex, u0: f64) -> Result<Field> {
    let ly = dc.mesh().ly();
    dc.v0.interpolate_scalar(|_, y| {
        let s = y / ly;
        -(u0 * ly / 8.0) * (-4.0 * (2.0 * PI * s).sin() / (2.0 * PI) + (4.0 * PI * s).sin() / (4.0 * PI))
    })
}

/// Gaussian `ψ` centred in the domain with the minimum-image distance.
pub fn vortex_stream_function(dc: &DeRhamComplex, amplitude: f64, radius: f64) -> Result<Field> {
    let (lx, ly) = (dc.mesh().lx(), dc.mesh().ly());
    let wrap = |d: f64, l: f64| d - l * (d / l).round();
    dc.v0.interpolate_scalar(|x, y| {
        let (rx, ry) = (wrap(x - 0.5 * lx, lx), wrap(y - 0.5 * ly, ly));
        amplitude * (-(rx * rx + ry * ry) / (2.0 * radius * radius)).exp()
    })
}

fn stream_function(dc: &DeRhamComplex, ic: &InitialCondition) -> Result<Option<Field>> {
    Ok(match ic {
        InitialCondition::GeostrophicJet { u0 } => Some(jet_stream_function(dc, *u0)?),
        InitialCondition::GaussianVortex { amplitude, radius } => {
            Some(vortex_stream_function(dc, *amplitude, *radius)?)
        }
        _ => None,
    })
}

fn custom_velocity(dc: &DeRhamComplex, u: &Option<Expr>, v: &Option<Expr>) -> Result<Field> {
    dc.v1.interpolate_vector(|x, y| {
        [
            u.as_ref().map_or(0.0, |e| e.eval(x, y)),
            v.as_ref().map_or(0.0, |e| e.eval(x, y)),
        ]
    })
}

/// `⟨γ_i, v⟩` for cellwise constants `v`.
fn test_v0_cellwise(dc: &DeRhamComplex, v: &[f64]) -> Vec<f64> {
    let nq = dc.tab.num_points();
    let expanded: Vec<f64> = (0..v.len() * nq).map(|k| v[k / nq]).collect();
    test_v0(dc, &expanded)
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let m = &config.mesh;
        let dc = DeRhamComplex::build(m.nx, m.ny, m.lx, m.ly)?;
        let linear = SolverConfig {
            rtol: config.linear_rtol,
            atol: 1e-300,
            max_iter: 2000,
            restart: 40,
            verbose: false,
        };
        let newton = NewtonConfig {
            rtol: config.newton_rtol,
            max_iter: config.newton_max_iter,
            ..NewtonConfig::default()
        };
        let psi = stream_function(&dc, &config.initial)?;
        let model = match config.model {
            ModelKind::Euler2d => {
                let tau = match config.stabilization {
                    crate::swe_nonlinear::Stabilization::None => 0.0,
                    _ => config.tau.unwrap_or(Euler2d::default_tau(config.dt)),
                };
                let model = Euler2d::new(dc.clone(), tau)?.with_newton(newton);
                let omega = match (&config.initial, &psi) {
                    (_, Some(psi)) => {
                        // ⟨γ, ω⟩ = -⟨∇γ, ∇ψ⟩
                        let rhs: Vec<f64> = dc.stiffness.matvec(psi.coeffs()).iter().map(|v| -v).collect();
                        Field::new(Family::V0, dc.solve_m0(&rhs)?)
                    }
                    (InitialCondition::Custom { omega: Some(e), .. }, _) => dc.v0.interpolate_scalar(|x, y| e.eval(x, y))?,
                    _ => dc.v0.zero_field(),
                };
                let state = model.state(omega)?;
                Model::Euler { model, state }
            }
            ModelKind::SweLinear => {
                let f = config.f.constant().ok_or_else(|| Error::Config("the linear model needs a constant f".into()))?;
                let params = LinearParams {
                    f,
                    g: config.g,
                    h: config.h,
                    dt: config.dt,
                };
                let model = LinearSwe::new(dc.clone(), params)?.with_solver(linear);
                let state = match (&config.initial, &psi) {
                    (_, Some(psi)) => model.geostrophic_state(psi)?,
                    (InitialCondition::Custom { u, v, h, .. }, _) => LinearState {
                        u: custom_velocity(&dc, u, v)?,
                        eta: match h {
                            Some(e) => dc.v2.interpolate_scalar(|x, y| e.eval(x, y))?,
                            None => dc.v2.zero_field(),
                        },
                    },
                    _ => model.rest_state(),
                };
                Model::Linear { model, state }
            }
            ModelKind::SweNonlinear => {
                let f = dc.v0.interpolate_scalar(|x, y| config.f.eval(x, y))?;
                let b = dc.v2.interpolate_scalar(|x, y| config.b.eval(x, y))?;
                let mut params = SweParams::new(&dc, 0.0, config.g, config.dt)
                    .with_coriolis_field(f.clone())
                    .with_topography(b)
                    .with_integrator(config.integrator)
                    .with_k_max(config.k_max)
                    .with_velocity_transport(config.velocity_transport)
                    .with_upwind(config.upwind)
                    .with_newton(newton)
                    .with_stabilization(config.stabilization, config.tau.unwrap_or(0.5 * config.dt));
                params.linear = linear;
                let model = ShallowWater::new(dc.clone(), params)?;
                let state = match (&config.initial, &psi) {
                    (_, Some(psi)) => {
                        let fbar = dc.integral_v0(f.coeffs()) / (dc.mesh().lx() * dc.mesh().ly());
                        let p2 = dc.project_v0_to_v2(psi.coeffs());
                        SweState {
                            u: Field::new(Family::V1, dc.grad_perp.matvec(psi.coeffs())),
                            d: Field::new(Family::V2, p2.iter().map(|p| config.h + fbar / config.g * p).collect()),
                        }
                    }
                    (InitialCondition::Custom { u, v, h, .. }, _) => SweState {
                        u: custom_velocity(&dc, u, v)?,
                        d: match h {
                            Some(e) => dc.v2.interpolate_scalar(|x, y| e.eval(x, y))?,
                            None => Field::constant(Family::V2, dc.n2(), config.h),
                        },
                    },
                    _ => model.rest_state(config.h),
                };
                model.check_state(&state)?;
                Model::Nonlinear {
                    model: Box::new(model),
                    state,
                    history: StepHistory::default(),
                }
            }
        };
        Ok(Self {
            dc,
            model,
            dt: config.dt,
            step: 0,
        })
    }

    pub fn complex(&self) -> &Arc<DeRhamComplex> {
        &self.dc
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// Diagnostics of the current state with the given solver statistics.
    pub fn record(&self, newton_iters: usize, residual_norm: f64) -> Result<DiagnosticsRecord> {
        let dc = &*self.dc;
        let (energy, enstrophy, mass, total_vorticity, div_l2) = match &self.model {
            Model::Euler { model, state } => (
                model.energy(state),
                model.enstrophy(state),
                dc.mesh().lx() * dc.mesh().ly(),
                model.total_vorticity(state),
                model.div_l2(state),
            ),
            Model::Linear { model, state } => {
                let p = model.params();
                // linear PV q' with ⟨γ, q'⟩ = -⟨∇⊥γ, u⟩ - (f/H)⟨γ, η⟩
                let mu = dc.m1.matvec(state.u.coeffs());
                let mut rhs = dc.grad_perp.matvec_transpose(&mu);
                let eta = test_v0_cellwise(dc, state.eta.coeffs());
                for (r, e) in rhs.iter_mut().zip(&eta) {
                    *r = -*r - p.f / p.h * e;
                }
                let q = dc.solve_m0(&rhs)?;
                let d = dc.div.matvec(state.u.coeffs());
                (
                    model.energy(state),
                    dc.inner_v0(&q, &q),
                    model.mass(state),
                    dc.integral_v0(&q),
                    dc.inner_v2(&d, &d).sqrt(),
                )
            }
            Model::Nonlinear { model, state, .. } => (
                model.energy(state),
                model.enstrophy(state)?,
                model.mass(state),
                model.total_vorticity(state)?,
                model.div_l2(state),
            ),
        };
        let r = DiagnosticsRecord {
            step: self.step,
            time: self.step as f64 * self.dt,
            energy,
            enstrophy,
            mass,
            total_vorticity,
            div_l2,
            newton_iters,
            residual_norm,
        };
        if !r.is_finite() {
            return Err(Error::Invariant(format!("non-finite diagnostics at step {}", self.step)));
        }
        Ok(r)
    }

    /// Advance one step; returns (nonlinear or Krylov iterations, residual).
    pub fn advance(&mut self) -> Result<(usize, f64)> {
        let out = match &mut self.model {
            Model::Euler { model, state } => {
                let (next, r) = model.step_midpoint(state, self.dt)?;
                *state = next;
                (r.iterations, r.residual_norm)
            }
            Model::Linear { model, state } => {
                let (next, r) = model.step_midpoint(state)?;
                *state = next;
                (r.iterations, r.residual_norm)
            }
            Model::Nonlinear { model, state, history } => {
                let (next, r) = model.step(state, history)?;
                *state = next;
                (r.iterations, r.residual_norm)
            }
        };
        self.step += 1;
        Ok(out)
    }

    /// Named fields of the current state.
    pub fn fields(&self) -> Result<Vec<(&'static str, Field)>> {
        Ok(match &self.model {
            Model::Euler { state, .. } => vec![("omega", state.omega.clone()), ("psi", state.psi.clone())],
            Model::Linear { state, .. } => vec![("u", state.u.clone()), ("eta", state.eta.clone())],
            Model::Nonlinear { model, state, .. } => vec![
                ("u", state.u.clone()),
                ("d", state.d.clone()),
                ("q", model.diagnose_q(&state.u, &state.d)?),
            ],
        })
    }
}
