//! Nonlinear rotating shallow water in the energy–enstrophy conserving
//! bracket form.
//!
//! With `u ∈ V1`, `D ∈ V2`, diagnostic potential vorticity `q ∈ V0` and
//! mass flux `m ∈ V1`:
//!
//! ```text
//! ⟨w, u_t⟩ + ⟨q* w, m⊥⟩ - ⟨∇·w, ½|u|² + g(D + b)⟩ = 0
//! D_t + ∇·m = 0
//! ⟨γ, qD⟩ + ⟨∇⊥γ, u⟩ - ⟨γ, f⟩ = 0
//! ⟨v, m - Du⟩ = 0
//! ```
//!
//! `q*` is `q` itself or an upstream-shifted value (APVM or SUPG-q); any
//! choice leaves the energy identity intact because `m·(q* m⊥) = 0`.
//!
//! The Hamiltonian is `H = ∫ ½D|u|² + ½gD² + gDb`. The reported enstrophy is
//! `C2 = ∫ D q²` and the total vorticity `C1 = ∫ D q`.

mod implicit;
mod pv;
mod semi_implicit;
pub mod transport;

pub use pv::{pv_consistency_check, PvReport};
pub use semi_implicit::SemiImplicitReport;
pub use transport::{flux_operator, mass_flux_reconstruct, upwind_values, vector_invariant_operator};

use std::sync::Arc;

use crate::assembly::kernels::{dot2, integrate_qp, perp, qp_v0, qp_v0_grad, qp_v1, test_v1};
use crate::assembly::{check_positive, coriolis_matrix, weighted_v0_mass, Coefficient, DeRhamComplex, SparseOperator};
use crate::error::{Error, Result};
use crate::fespace::{Family, Field};
use crate::linalg::{pcg, JacobiPreconditioner, NewtonConfig, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilization {
    None,
    /// `q* = q - τ (m/D)·∇q`.
    Apvm,
    /// `q* = q - τ (q_t + (m/D)·∇q)` with `q_t` lagged from the previous step.
    SupgQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Implicit midpoint rule on the bracket tendencies.
    Midpoint,
    /// Energy-conserving Poisson integrator (exact time average of the
    /// cubic Hamiltonian's derivatives).
    Poisson,
    /// Fixed number of Picard sweeps with upwind transport and a
    /// rest-state linearized correction.
    SemiImplicit,
}

/// Velocity transport inside a semi-implicit sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityTransport {
    /// Upwinded vector-invariant form plus Coriolis, implicit midpoint in `u`.
    VectorInvariant,
    /// Potential-vorticity flux `q* m⊥` with the reconstructed mass flux;
    /// preserves a constant `q` exactly.
    PvFlux,
}

#[derive(Debug, Clone)]
pub struct SweParams {
    /// Coriolis parameter in V0.
    pub f: Field,
    pub g: f64,
    /// Topography in V2.
    pub b: Field,
    pub tau: f64,
    pub stabilization: Stabilization,
    pub dt: f64,
    pub integrator: Integrator,
    /// Picard sweeps of the semi-implicit scheme.
    pub k_max: usize,
    pub velocity_transport: VelocityTransport,
    /// Upwind (true) or centred (false) edge values in semi-implicit transport.
    pub upwind: bool,
    pub newton: NewtonConfig,
    /// Linear solves of the semi-implicit scheme.
    pub linear: SolverConfig,
}

impl SweParams {
    /// Constant Coriolis parameter, flat bottom, no stabilization, Poisson
    /// integrator, `τ = Δt/2`, four Picard sweeps.
    pub fn new(dc: &DeRhamComplex, f: f64, g: f64, dt: f64) -> Self {
        Self {
            f: Field::constant(Family::V0, dc.n0(), f),
            g,
            b: dc.v2.zero_field(),
            tau: 0.5 * dt,
            stabilization: Stabilization::None,
            dt,
            integrator: Integrator::Poisson,
            k_max: 4,
            velocity_transport: VelocityTransport::PvFlux,
            upwind: true,
            newton: NewtonConfig::default(),
            linear: SolverConfig {
                rtol: 1e-13,
                atol: 1e-300,
                max_iter: 1000,
                restart: 40,
                verbose: false,
            },
        }
    }

    pub fn with_coriolis_field(mut self, f: Field) -> Self {
        self.f = f;
        self
    }

    pub fn with_topography(mut self, b: Field) -> Self {
        self.b = b;
        self
    }

    pub fn with_stabilization(mut self, mode: Stabilization, tau: f64) -> Self {
        self.stabilization = mode;
        self.tau = tau;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_velocity_transport(mut self, vt: VelocityTransport) -> Self {
        self.velocity_transport = vt;
        self
    }

    pub fn with_upwind(mut self, upwind: bool) -> Self {
        self.upwind = upwind;
        self
    }

    pub fn with_newton(mut self, newton: NewtonConfig) -> Self {
        self.newton = newton;
        self
    }

    pub fn validate(&self, dc: &DeRhamComplex) -> Result<()> {
        dc.v0.check(&self.f)?;
        dc.v2.check(&self.b)?;
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidArgument(format!("g = {} must be positive", self.g)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("τ = {} must be finite and >= 0", self.tau)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {} must be positive", self.dt)));
        }
        if self.integrator == Integrator::SemiImplicit && self.k_max == 0 {
            return Err(Error::InvalidArgument("Picard count must be at least 1".into()));
        }
        if !self.f.is_finite() || !self.b.is_finite() {
            return Err(Error::InvalidArgument("f and b must be finite".into()));
        }
        self.linear.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweState {
    pub u: Field,
    pub d: Field,
}

impl SweState {
    /// Concatenated `[u, D]` coefficients.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.u.coeffs().to_vec();
        v.extend_from_slice(self.d.coeffs());
        v
    }

    pub fn from_slice(x: &[f64], n1: usize) -> Self {
        Self {
            u: Field::new(Family::V1, x[..n1].to_vec()),
            d: Field::new(Family::V2, x[n1..].to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxFields {
    pub q: Field,
    pub m: Field,
}

/// `(u̇, Ḋ)` coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SweTendency {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Newton iterations or Picard sweeps.
    pub iterations: usize,
    pub linear_iterations: usize,
    pub residual_norm: f64,
    /// The step was redone as two half steps after a depth failure.
    pub retried: bool,
}

/// State carried between steps: the lagged `q_t` used by SUPG-q.
#[derive(Debug, Clone, Default)]
pub struct StepHistory {
    pub q_t: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ShallowWater {
    dc: Arc<DeRhamComplex>,
    params: SweParams,
    /// `⟨w, f u⊥⟩` with the V0 Coriolis field.
    coriolis: SparseOperator,
    q_solver: SolverConfig,
}

impl ShallowWater {
    pub fn new(dc: Arc<DeRhamComplex>, params: SweParams) -> Result<Self> {
        params.validate(&dc)?;
        let coriolis = coriolis_matrix(&dc.v1, Coefficient::Field(&dc.v0, &params.f))?;
        Ok(Self {
            dc,
            params,
            coriolis,
            q_solver: SolverConfig {
                rtol: 1e-14,
                atol: 1e-300,
                max_iter: 2000,
                restart: 30,
                verbose: false,
            },
        })
    }

    pub fn complex(&self) -> &Arc<DeRhamComplex> {
        &self.dc
    }

    pub fn params(&self) -> &SweParams {
        &self.params
    }

    pub fn coriolis(&self) -> &SparseOperator {
        &self.coriolis
    }

    /// Fluid at rest with uniform depth `h`.
    pub fn rest_state(&self, h: f64) -> SweState {
        SweState {
            u: self.dc.v1.zero_field(),
            d: Field::constant(Family::V2, self.dc.n2(), h),
        }
    }

    pub fn check_state(&self, s: &SweState) -> Result<()> {
        self.dc.v1.check(&s.u)?;
        check_positive(&self.dc.v2, &s.d)?;
        if !s.u.is_finite() {
            return Err(Error::InvalidArgument("velocity has non-finite coefficients".into()));
        }
        Ok(())
    }

    /// Solve `⟨γ, D q⟩ = rhs` for `q`.
    fn solve_weighted_v0(&self, d: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let m = weighted_v0_mass(&self.dc.v0, &self.dc.v2, &Field::new(Family::V2, d.to_vec()))?;
        WeightedSolver::new(m, self.q_solver.clone())?.solve(rhs)
    }

    /// `-Gᵀ M1 u + M0 f`, the right-hand side of the PV definition.
    fn q_rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut r = self.dc.m0.matvec(self.params.f.coeffs());
        let mu = self.dc.m1.matvec(u);
        let gt = self.dc.grad_perp.matvec_transpose(&mu);
        for (ri, gi) in r.iter_mut().zip(&gt) {
            *ri -= gi;
        }
        r
    }

    /// Potential vorticity `q ∈ V0` from `⟨γ, qD⟩ = -⟨∇⊥γ, u⟩ + ⟨γ, f⟩`.
    pub fn diagnose_q(&self, u: &Field, d: &Field) -> Result<Field> {
        self.dc.v1.check(u)?;
        check_positive(&self.dc.v2, d)?;
        let q = self.solve_weighted_v0(d.coeffs(), &self.q_rhs(u.coeffs()))?;
        Ok(Field::new(Family::V0, q))
    }

    /// Mass flux `m = P1(D u)`.
    pub fn diagnose_m(&self, u: &Field, d: &Field) -> Result<Field> {
        self.dc.v1.check(u)?;
        self.dc.v2.check(d)?;
        let m = self.dc.solve_m1(&self.depth_weighted(u.coeffs(), d.coeffs()))?;
        Ok(Field::new(Family::V1, m))
    }

    /// `⟨w_i, D u⟩`.
    fn depth_weighted(&self, u: &[f64], d: &[f64]) -> Vec<f64> {
        let uq = qp_v1(&self.dc, u);
        let nq = self.dc.tab.num_points();
        let du: Vec<[f64; 2]> = uq
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let dc = d[k / nq];
                [dc * v[0], dc * v[1]]
            })
            .collect();
        test_v1(&self.dc, &du)
    }

    pub fn aux(&self, s: &SweState) -> Result<AuxFields> {
        Ok(AuxFields {
            q: self.diagnose_q(&s.u, &s.d)?,
            m: self.diagnose_m(&s.u, &s.d)?,
        })
    }

    /// Stabilized PV at quadrature points.
    fn q_star(&self, q: &[f64], m_qp: &[[f64; 2]], d: &[f64], q_t: Option<&[f64]>) -> Vec<f64> {
        let dc = &*self.dc;
        let mut qs = qp_v0(dc, q);
        let tau = self.params.tau;
        if self.params.stabilization == Stabilization::None || tau == 0.0 {
            return qs;
        }
        let nq = dc.tab.num_points();
        let gq = qp_v0_grad(dc, q);
        for (k, v) in qs.iter_mut().enumerate() {
            let dk = d[k / nq];
            *v -= tau * dot2(m_qp[k], gq[k]) / dk;
        }
        if self.params.stabilization == Stabilization::SupgQ {
            if let Some(qt) = q_t {
                for (v, t) in qs.iter_mut().zip(qp_v0(dc, qt)) {
                    *v -= tau * t;
                }
            }
        }
        qs
    }

    /// `Q_i = ⟨q* w_i, m⊥⟩`.
    fn vorticity_flux(&self, qs: &[f64], m_qp: &[[f64; 2]]) -> Vec<f64> {
        let v: Vec<[f64; 2]> = qs
            .iter()
            .zip(m_qp)
            .map(|(q, m)| {
                let p = perp(*m);
                [q * p[0], q * p[1]]
            })
            .collect();
        test_v1(&self.dc, &v)
    }

    /// Cell means of quadrature-point values.
    fn cell_means(&self, v: &[f64]) -> Vec<f64> {
        let tab = &self.dc.tab;
        let inv = 1.0 / self.dc.area();
        v.chunks(tab.num_points())
            .map(|cv| cv.iter().zip(&tab.jxw).map(|(a, w)| a * w).sum::<f64>() * inv)
            .collect()
    }

    /// Cell means of `½|u|² + g(D + b)`.
    pub fn bernoulli(&self, u: &[f64], d: &[f64]) -> Vec<f64> {
        let uq = qp_v1(&self.dc, u);
        let ke: Vec<f64> = uq.iter().map(|v| 0.5 * dot2(*v, *v)).collect();
        let g = self.params.g;
        self.cell_means(&ke)
            .into_iter()
            .zip(d.iter().zip(self.params.b.coeffs()))
            .map(|(k, (d, b))| k + g * (d + b))
            .collect()
    }

    /// Semidiscrete tendencies. `q_t` is the lagged PV tendency used by
    /// SUPG-q and ignored otherwise.
    pub fn tendency(&self, s: &SweState, q_t: Option<&[f64]>) -> Result<SweTendency> {
        self.check_state(s)?;
        let (u, d) = (s.u.coeffs(), s.d.coeffs());
        let q = self.diagnose_q(&s.u, &s.d)?;
        let m = self.diagnose_m(&s.u, &s.d)?;
        let m_qp = qp_v1(&self.dc, m.coeffs());
        let qs = self.q_star(q.coeffs(), &m_qp, d, q_t);
        let mut rhs = self.vorticity_flux(&qs, &m_qp);
        rhs.iter_mut().for_each(|v| *v = -*v);
        self.dc.incidence_t.matvec_add(1.0, &self.bernoulli(u, d), &mut rhs);
        let ut = self.dc.solve_m1(&rhs)?;
        let dt = self.dc.div.matvec(m.coeffs()).into_iter().map(|v| -v).collect();
        Ok(SweTendency { u: ut, d: dt })
    }

    /// `H = ∫ ½D|u|² + ½gD² + gDb`.
    pub fn energy(&self, s: &SweState) -> f64 {
        let uq = qp_v1(&self.dc, s.u.coeffs());
        let ke: Vec<f64> = uq.iter().map(|v| 0.5 * dot2(*v, *v)).collect();
        let g = self.params.g;
        self.cell_means(&ke)
            .iter()
            .zip(s.d.coeffs().iter().zip(self.params.b.coeffs()))
            .map(|(k, (d, b))| d * k + g * d * (0.5 * d + b))
            .sum::<f64>()
            * self.dc.area()
    }

    /// Dual vectors `(⟨w_i, Du⟩, ⟨φ_c, ½|u|² + g(D+b)⟩)` of the
    /// variational derivatives of `H`.
    pub fn energy_derivatives(&self, s: &SweState) -> (Vec<f64>, Vec<f64>) {
        let du = self.depth_weighted(s.u.coeffs(), s.d.coeffs());
        let area = self.dc.area();
        let pi = self.bernoulli(s.u.coeffs(), s.d.coeffs()).into_iter().map(|v| area * v).collect();
        (du, pi)
    }

    /// `C2 = ∫ D q²`.
    pub fn enstrophy(&self, s: &SweState) -> Result<f64> {
        let q = self.diagnose_q(&s.u, &s.d)?;
        Ok(self.enstrophy_of(q.coeffs(), s.d.coeffs()))
    }

    fn enstrophy_of(&self, q: &[f64], d: &[f64]) -> f64 {
        let q2: Vec<f64> = qp_v0(&self.dc, q).iter().map(|v| v * v).collect();
        self.cell_means(&q2).iter().zip(d).map(|(a, b)| a * b).sum::<f64>() * self.dc.area()
    }

    /// Dual vectors of the variational derivatives of `C2`:
    /// `(-2 M1 G q, -⟨φ_c, q²⟩)`.
    pub fn enstrophy_derivatives(&self, s: &SweState) -> Result<(Vec<f64>, Vec<f64>)> {
        let q = self.diagnose_q(&s.u, &s.d)?;
        let gq = self.dc.grad_perp.matvec(q.coeffs());
        let du = self.dc.m1.matvec(&gq).into_iter().map(|v| -2.0 * v).collect();
        let q2: Vec<f64> = qp_v0(&self.dc, q.coeffs()).iter().map(|v| v * v).collect();
        let area = self.dc.area();
        let dd = self.cell_means(&q2).into_iter().map(|v| -area * v).collect();
        Ok((du, dd))
    }

    pub fn mass(&self, s: &SweState) -> f64 {
        self.dc.integral_v2(s.d.coeffs())
    }

    /// `C1 = ∫ D q`.
    pub fn total_vorticity(&self, s: &SweState) -> Result<f64> {
        let q = self.diagnose_q(&s.u, &s.d)?;
        Ok(self.total_vorticity_of(q.coeffs(), s.d.coeffs()))
    }

    fn total_vorticity_of(&self, q: &[f64], d: &[f64]) -> f64 {
        let qm = self.cell_means(&qp_v0(&self.dc, q));
        qm.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() * self.dc.area()
    }

    pub fn div_l2(&self, s: &SweState) -> f64 {
        let d = self.dc.div.matvec(s.u.coeffs());
        self.dc.inner_v2(&d, &d).sqrt()
    }

    /// Streamwise-diffusion term `-τ ∫ D ((m/D)·∇q)²` of the stabilized
    /// enstrophy budget; zero without stabilization.
    pub fn streamwise_diffusion(&self, s: &SweState) -> Result<f64> {
        if self.params.stabilization == Stabilization::None {
            return Ok(0.0);
        }
        let q = self.diagnose_q(&s.u, &s.d)?;
        let m = self.diagnose_m(&s.u, &s.d)?;
        let mq = qp_v1(&self.dc, m.coeffs());
        let gq = qp_v0_grad(&self.dc, q.coeffs());
        let nq = self.dc.tab.num_points();
        let d = s.d.coeffs();
        let v: Vec<f64> = (0..mq.len())
            .map(|k| {
                let a = dot2(mq[k], gq[k]) / d[k / nq];
                d[k / nq] * a * a
            })
            .collect();
        Ok(-self.params.tau * integrate_qp(&self.dc, &v))
    }

    /// Advance one step with the configured integrator. A failure caused by
    /// non-positive depth is retried once as two half steps.
    pub fn step(&self, s: &SweState, history: &mut StepHistory) -> Result<(SweState, StepReport)> {
        self.check_state(s)?;
        let q0 = if self.params.stabilization == Stabilization::SupgQ {
            Some(self.diagnose_q(&s.u, &s.d)?)
        } else {
            None
        };
        let dt = self.params.dt;
        let (next, report) = match self.step_dt(s, dt, history.q_t.as_deref()) {
            Ok(r) => r,
            Err(Error::NonPositiveDepth { .. }) => {
                let (mid, a) = self.step_dt(s, 0.5 * dt, history.q_t.as_deref())?;
                let (end, b) = self.step_dt(&mid, 0.5 * dt, history.q_t.as_deref())?;
                (
                    end,
                    StepReport {
                        iterations: a.iterations + b.iterations,
                        linear_iterations: a.linear_iterations + b.linear_iterations,
                        residual_norm: b.residual_norm,
                        retried: true,
                    },
                )
            }
            Err(e) => return Err(e),
        };
        if let Some(q0) = q0 {
            let q1 = self.diagnose_q(&next.u, &next.d)?;
            history.q_t = Some(
                q1.coeffs()
                    .iter()
                    .zip(q0.coeffs())
                    .map(|(a, b)| (a - b) / dt)
                    .collect(),
            );
        }
        Ok((next, report))
    }

    fn step_dt(&self, s: &SweState, dt: f64, q_t: Option<&[f64]>) -> Result<(SweState, StepReport)> {
        let (next, report) = match self.params.integrator {
            Integrator::Poisson | Integrator::Midpoint => {
                let (n, r) = self.step_implicit(s, dt, self.params.integrator, q_t)?;
                (
                    n,
                    StepReport {
                        iterations: r.iterations,
                        linear_iterations: r.linear_iterations,
                        residual_norm: r.residual_norm,
                        retried: false,
                    },
                )
            }
            Integrator::SemiImplicit => {
                let (n, r) = self.step_semi_implicit_dt(s, dt, q_t)?;
                (
                    n,
                    StepReport {
                        iterations: r.sweeps,
                        linear_iterations: r.linear_iterations,
                        residual_norm: r.increments.last().copied().unwrap_or(0.0),
                        retried: false,
                    },
                )
            }
        };
        check_positive(&self.dc.v2, &next.d)?;
        Ok((next, report))
    }
}

/// Jacobi-preconditioned CG for a depth-weighted V0 mass matrix.
struct WeightedSolver {
    matrix: SparseOperator,
    pc: JacobiPreconditioner,
    config: SolverConfig,
}

impl WeightedSolver {
    fn new(matrix: SparseOperator, config: SolverConfig) -> Result<Self> {
        let pc = JacobiPreconditioner::new(&matrix)?;
        Ok(Self { matrix, pc, config })
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        Ok(pcg(&self.matrix, &self.pc, rhs, None, &self.config)?.0)
    }
}

#[cfg(test)]
mod tests;
