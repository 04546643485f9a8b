//! Vorticity–streamfunction scheme for 2D incompressible Euler.
//!
//! The prognostic variable is `ω ∈ V0`. The stream function solves
//! `⟨γ, ω⟩ + ⟨∇γ, ∇ψ⟩ = 0` (so `ω = ∇²ψ`) with zero mean, the velocity is
//! `u = ∇⊥ψ ∈ V1`, and vorticity is advected with optional SUPG test
//! functions `γ + τ u·∇γ`:
//!
//! ```text
//! ⟨γ + τ u·∇γ, ω_t + u·∇ω⟩ = 0.
//! ```
//!
//! With `τ = 0` the tendency is orthogonal to both `ψ` and `ω`, so the
//! energy `½‖∇ψ‖² = -½⟨ψ, ω⟩` and the enstrophy `½⟨ω, ω⟩` are conserved;
//! the implicit midpoint rule keeps both exactly (up to solver tolerance).

use std::sync::Arc;

use crate::assembly::kernels::{dot2, integrate_qp, qp_v0, qp_v0_grad, qp_v1, test_v0, test_v0_grad};
use crate::assembly::DeRhamComplex;
use crate::error::{Error, Result};
use crate::fespace::{Family, Field};
use crate::hodge::solve_pinned_laplacian;
use crate::linalg::{
    gmres, newton, FnOperator, FnPreconditioner, NewtonConfig, NewtonReport, NonlinearSystem,
    SolverConfig,
};

#[derive(Debug, Clone)]
pub struct EulerState {
    pub omega: Field,
    /// Zero-mean stream function diagnosed from `omega`.
    pub psi: Field,
}

#[derive(Debug, Clone)]
pub struct Euler2d {
    dc: Arc<DeRhamComplex>,
    tau: f64,
    newton: NewtonConfig,
}

impl Euler2d {
    pub fn new(dc: Arc<DeRhamComplex>, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("SUPG timescale {tau} must be >= 0")));
        }
        Ok(Self {
            dc,
            tau,
            newton: NewtonConfig::default(),
        })
    }

    /// Default SUPG timescale for a given step.
    pub fn default_tau(dt: f64) -> f64 {
        0.5 * dt
    }

    pub fn with_newton(mut self, newton: NewtonConfig) -> Self {
        self.newton = newton;
        self
    }

    pub fn complex(&self) -> &Arc<DeRhamComplex> {
        &self.dc
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Zero-mean `ψ` with `⟨γ, ω⟩ + ⟨∇γ, ∇ψ⟩ = 0` for all `γ`; the mean of
    /// `ω` is discarded.
    pub fn elliptic_solve(&self, omega: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.dc.m0.matvec(omega).iter().map(|v| -v).collect();
        solve_pinned_laplacian(&self.dc, &rhs)
    }

    pub fn state(&self, omega: Field) -> Result<EulerState> {
        self.dc.v0.check(&omega)?;
        let psi = Field::new(Family::V0, self.elliptic_solve(omega.coeffs())?);
        Ok(EulerState { omega, psi })
    }

    pub fn velocity(&self, state: &EulerState) -> Field {
        Field::new(Family::V1, self.dc.grad_perp.matvec(state.psi.coeffs()))
    }

    /// Solve `⟨γ + τ u·∇γ, ω_t⟩ = -⟨γ + τ u·∇γ, u·∇ω⟩` for `ω_t`.
    pub fn tendency(&self, state: &EulerState) -> Result<Vec<f64>> {
        let dc = &*self.dc;
        let u = qp_v1(dc, &dc.grad_perp.matvec(state.psi.coeffs()));
        let gw = qp_v0_grad(dc, state.omega.coeffs());
        let adv: Vec<f64> = u.iter().zip(&gw).map(|(a, b)| -dot2(*a, *b)).collect();
        let rhs = self.supg_test(&u, &adv);
        if self.tau == 0.0 {
            return dc.solve_m0(&rhs);
        }
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        let op = FnOperator::new(dc.n0(), |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&self.supg_test(&u, &qp_v0(dc, x)));
            Ok(())
        });
        let pc = FnPreconditioner(|r: &[f64], z: &mut [f64]| {
            z.copy_from_slice(&dc.solve_m0(r)?);
            Ok(())
        });
        let cfg = SolverConfig {
            rtol: 1e-13,
            atol: 1e-300,
            ..SolverConfig::default()
        };
        Ok(gmres(&op, &pc, &rhs, &cfg)?.0)
    }

    /// `∫ (γ_i + τ a·∇γ_i) v` for quadrature-point data.
    fn supg_test(&self, a: &[[f64; 2]], v: &[f64]) -> Vec<f64> {
        let mut out = test_v0(&self.dc, v);
        if self.tau != 0.0 {
            let av: Vec<[f64; 2]> = a.iter().zip(v).map(|(a, s)| [a[0] * s, a[1] * s]).collect();
            let shift = test_v0_grad(&self.dc, &av);
            for (o, s) in out.iter_mut().zip(&shift) {
                *o += self.tau * s;
            }
        }
        out
    }

    /// One implicit midpoint step solved by Newton–Krylov.
    pub fn step_midpoint(&self, state: &EulerState, dt: f64) -> Result<(EulerState, NewtonReport)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let mut system = MidpointSystem {
            model: self,
            omega0: state.omega.coeffs().to_vec(),
            dt,
            lin: None,
        };
        let (omega1, report) = newton(&mut system, state.omega.coeffs(), &self.newton)?;
        Ok((self.state(Field::new(Family::V0, omega1))?, report))
    }

    /// `½‖∇ψ‖² = -½⟨ψ, ω⟩`.
    pub fn energy(&self, state: &EulerState) -> f64 {
        -0.5 * self.dc.inner_v0(state.psi.coeffs(), state.omega.coeffs())
    }

    /// `½⟨ω, ω⟩`.
    pub fn enstrophy(&self, state: &EulerState) -> f64 {
        0.5 * self.dc.inner_v0(state.omega.coeffs(), state.omega.coeffs())
    }

    pub fn total_vorticity(&self, state: &EulerState) -> f64 {
        self.dc.integral_v0(state.omega.coeffs())
    }

    /// SUPG streamwise-diffusion contribution `-τ ‖u·∇ω‖²` to the enstrophy
    /// budget.
    pub fn streamwise_diffusion(&self, state: &EulerState) -> f64 {
        let dc = &*self.dc;
        let u = qp_v1(dc, &dc.grad_perp.matvec(state.psi.coeffs()));
        let gw = qp_v0_grad(dc, state.omega.coeffs());
        let sq: Vec<f64> = u.iter().zip(&gw).map(|(a, b)| dot2(*a, *b).powi(2)).collect();
        -self.tau * integrate_qp(dc, &sq)
    }

    /// `‖div u‖` in L2; zero up to round-off since `u = ∇⊥ψ`.
    pub fn div_l2(&self, state: &EulerState) -> f64 {
        let d = self.dc.div.matvec(&self.dc.grad_perp.matvec(state.psi.coeffs()));
        self.dc.inner_v2(&d, &d).sqrt()
    }

    /// Residual of the midpoint equations at `omega1`, exposed for
    /// Jacobian consistency checks.
    pub fn midpoint_residual(&self, omega0: &[f64], omega1: &[f64], dt: f64) -> Result<Vec<f64>> {
        let sys = MidpointSystem {
            model: self,
            omega0: omega0.to_vec(),
            dt,
            lin: None,
        };
        let mut r = vec![0.0; omega1.len()];
        sys.residual(omega1, &mut r)?;
        Ok(r)
    }

    /// Jacobian action of [`midpoint_residual`](Self::midpoint_residual).
    pub fn midpoint_jacobian(
        &self,
        omega0: &[f64],
        omega1: &[f64],
        dt: f64,
        v: &[f64],
    ) -> Result<Vec<f64>> {
        let mut sys = MidpointSystem {
            model: self,
            omega0: omega0.to_vec(),
            dt,
            lin: None,
        };
        sys.linearize(omega1)?;
        let mut jv = vec![0.0; v.len()];
        sys.jacobian_action(v, &mut jv)?;
        Ok(jv)
    }
}

struct Linearization {
    u: Vec<[f64; 2]>,
    grad_wbar: Vec<[f64; 2]>,
    /// `(ω1 - ω0) + Δt ū·∇ω̄` at quadrature points.
    s: Vec<f64>,
}

/// `R(ω1) = ⟨γ + τ ū·∇γ, (ω1 - ω0) + Δt ū·∇ω̄⟩` with `ω̄ = (ω0 + ω1)/2` and
/// `ū = ∇⊥ψ(ω̄)`.
struct MidpointSystem<'a> {
    model: &'a Euler2d,
    omega0: Vec<f64>,
    dt: f64,
    lin: Option<Linearization>,
}

impl MidpointSystem<'_> {
    fn evaluate(&self, omega1: &[f64]) -> Result<Linearization> {
        let dc = &*self.model.dc;
        let wbar: Vec<f64> = self.omega0.iter().zip(omega1).map(|(a, b)| 0.5 * (a + b)).collect();
        let psi = self.model.elliptic_solve(&wbar)?;
        let u = qp_v1(dc, &dc.grad_perp.matvec(&psi));
        let grad_wbar = qp_v0_grad(dc, &wbar);
        let diff: Vec<f64> = omega1.iter().zip(&self.omega0).map(|(a, b)| a - b).collect();
        let d = qp_v0(dc, &diff);
        let s = d
            .iter()
            .zip(u.iter().zip(&grad_wbar))
            .map(|(d, (u, g))| d + self.dt * dot2(*u, *g))
            .collect();
        Ok(Linearization { u, grad_wbar, s })
    }
}

impl NonlinearSystem for MidpointSystem<'_> {
    fn dim(&self) -> usize {
        self.omega0.len()
    }

    fn residual(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let l = self.evaluate(x)?;
        r.copy_from_slice(&self.model.supg_test(&l.u, &l.s));
        Ok(())
    }

    fn linearize(&mut self, x: &[f64]) -> Result<()> {
        self.lin = Some(self.evaluate(x)?);
        Ok(())
    }

    fn jacobian_action(&self, v: &[f64], jv: &mut [f64]) -> Result<()> {
        let model = self.model;
        let dc = &*model.dc;
        let l = self.lin.as_ref().ok_or(Error::Breakdown("Jacobian before linearization"))?;
        let half: Vec<f64> = v.iter().map(|x| 0.5 * x).collect();
        let dpsi = model.elliptic_solve(&half)?;
        let du = qp_v1(dc, &dc.grad_perp.matvec(&dpsi));
        let dw = qp_v0(dc, v);
        let gdw = qp_v0_grad(dc, &half);
        let ds: Vec<f64> = (0..dw.len())
            .map(|k| dw[k] + self.dt * (dot2(du[k], l.grad_wbar[k]) + dot2(l.u[k], gdw[k])))
            .collect();
        let mut out = model.supg_test(&l.u, &ds);
        if model.tau != 0.0 {
            let shifted: Vec<[f64; 2]> = du
                .iter()
                .zip(&l.s)
                .map(|(a, s)| [a[0] * s, a[1] * s])
                .collect();
            let extra = test_v0_grad(dc, &shifted);
            for (o, e) in out.iter_mut().zip(&extra) {
                *o += model.tau * e;
            }
        }
        jv.copy_from_slice(&out);
        Ok(())
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(&self.model.dc.solve_m0(r)?);
        Ok(())
    }
}
