//! Linear rotating shallow water on the f-plane.
//!
//! ```text
//! ⟨w, u_t⟩ + ⟨w, f u⊥⟩ - g⟨∇·w, η⟩ = 0      for all w ∈ V1
//! η_t + H ∇·u = 0                          pointwise in V2
//! ```
//!
//! In coefficients `M1 u̇ = -W u + g Bᵀ η` and `A η̇ = -H B u`, with `B` the
//! signed incidence and `A = area·I` the V2 mass.

mod dispersion;

pub use dispersion::{coriolis_kernel_dimension, dispersion, BlochSymbol, DispersionParams};

use std::sync::Arc;

use crate::assembly::{coriolis_matrix, Coefficient, DeRhamComplex, SparseOperator};
use crate::error::{Error, Result};
use crate::fespace::{Family, Field};
use crate::linalg::{gmres_with_guess, FnOperator, SchurPreconditioner, SolveReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub dt: f64,
}

impl LinearParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "g = {} and H = {} must be positive",
                self.g, self.h
            )));
        }
        if !self.f.is_finite() {
            return Err(Error::InvalidArgument("Coriolis parameter must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {} must be positive", self.dt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    pub u: Field,
    pub eta: Field,
}

#[derive(Debug, Clone)]
pub struct LinearSwe {
    dc: Arc<DeRhamComplex>,
    params: LinearParams,
    coriolis: SparseOperator,
    solver: SolverConfig,
}

impl LinearSwe {
    pub fn new(dc: Arc<DeRhamComplex>, params: LinearParams) -> Result<Self> {
        params.validate()?;
        let coriolis = coriolis_matrix(&dc.v1, Coefficient::Constant(params.f))?;
        Ok(Self {
            dc,
            params,
            coriolis,
            solver: SolverConfig {
                rtol: 1e-13,
                atol: 1e-300,
                max_iter: 1000,
                restart: 30,
                verbose: false,
            },
        })
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn params(&self) -> &LinearParams {
        &self.params
    }

    pub fn complex(&self) -> &Arc<DeRhamComplex> {
        &self.dc
    }

    pub fn coriolis(&self) -> &SparseOperator {
        &self.coriolis
    }

    pub fn rest_state(&self) -> LinearState {
        LinearState {
            u: self.dc.v1.zero_field(),
            eta: self.dc.v2.zero_field(),
        }
    }

    fn check(&self, s: &LinearState) -> Result<()> {
        self.dc.v1.check(&s.u)?;
        self.dc.v2.check(&s.eta)
    }

    /// Exactly balanced state `u = ∇⊥ψ`, `η = (f/g) P2 ψ`.
    pub fn geostrophic_state(&self, psi: &Field) -> Result<LinearState> {
        self.dc.v0.check(psi)?;
        if self.params.f == 0.0 {
            return Err(Error::InvalidArgument(
                "geostrophic balance needs a non-zero Coriolis parameter".into(),
            ));
        }
        let u = self.dc.grad_perp.matvec(psi.coeffs());
        let scale = self.params.f / self.params.g;
        let eta = self
            .dc
            .project_v0_to_v2(psi.coeffs())
            .into_iter()
            .map(|v| scale * v)
            .collect();
        Ok(LinearState {
            u: Field::new(Family::V1, u),
            eta: Field::new(Family::V2, eta),
        })
    }

    /// Right-hand side `(-W u + g Bᵀ η, -H B u / area)` before the velocity
    /// mass solve.
    pub fn tendency_rhs(&self, s: &LinearState) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(s)?;
        let LinearParams { g, h, .. } = self.params;
        let mut ru = self.coriolis.matvec(s.u.coeffs());
        ru.iter_mut().for_each(|v| *v = -*v);
        self.dc.incidence_t.matvec_add(g, s.eta.coeffs(), &mut ru);
        let eta_t = self.dc.div.matvec(s.u.coeffs()).into_iter().map(|d| -h * d).collect();
        Ok((ru, eta_t))
    }

    pub fn tendency(&self, s: &LinearState) -> Result<LinearState> {
        let (ru, eta_t) = self.tendency_rhs(s)?;
        Ok(LinearState {
            u: Field::new(Family::V1, self.dc.solve_m1(&ru)?),
            eta: Field::new(Family::V2, eta_t),
        })
    }

    /// `½ (H ⟨u, u⟩ + g ⟨η, η⟩)`.
    pub fn energy(&self, s: &LinearState) -> f64 {
        0.5 * (self.params.h * self.dc.inner_v1(s.u.coeffs(), s.u.coeffs())
            + self.params.g * self.dc.inner_v2(s.eta.coeffs(), s.eta.coeffs()))
    }

    pub fn mass(&self, s: &LinearState) -> f64 {
        self.dc.integral_v2(s.eta.coeffs())
    }

    /// Block operator of the implicit midpoint update,
    /// `[M1 + αW, -αg Bᵀ; αH B, A]` with `α = Δt/2`.
    pub fn midpoint_operator(&self) -> impl crate::linalg::LinearOperator + '_ {
        let n1 = self.dc.n1();
        let alpha = 0.5 * self.params.dt;
        let LinearParams { g, h, .. } = self.params;
        let area = self.dc.area();
        let bt = &self.dc.incidence_t;
        FnOperator::new(n1 + self.dc.n2(), move |x: &[f64], y: &mut [f64]| {
            let (xu, xe) = x.split_at(n1);
            let (yu, ye) = y.split_at_mut(n1);
            self.dc.m1.matvec_into(xu, yu);
            self.coriolis.matvec_add(alpha, xu, yu);
            bt.matvec_add(-alpha * g, xe, yu);
            for (yi, xi) in ye.iter_mut().zip(xe) {
                *yi = area * xi;
            }
            self.dc.incidence.matvec_add(alpha * h, xu, ye);
            Ok(())
        })
    }

    pub fn preconditioner(&self) -> Result<SchurPreconditioner> {
        let alpha = 0.5 * self.params.dt;
        SchurPreconditioner::new(
            &self.dc.m1_lumped,
            &self.dc.incidence,
            alpha * self.params.g,
            alpha * self.params.h,
            &vec![self.dc.area(); self.dc.n2()],
        )
    }

    /// Right-hand side of the midpoint update for the state `s`.
    pub fn midpoint_rhs(&self, s: &LinearState) -> Result<Vec<f64>> {
        self.check(s)?;
        let n1 = self.dc.n1();
        let alpha = 0.5 * self.params.dt;
        let LinearParams { g, h, .. } = self.params;
        let mut rhs = vec![0.0; n1 + self.dc.n2()];
        let (ru, re) = rhs.split_at_mut(n1);
        self.dc.m1.matvec_into(s.u.coeffs(), ru);
        self.coriolis.matvec_add(-alpha, s.u.coeffs(), ru);
        self.dc.incidence_t.matvec_add(alpha * g, s.eta.coeffs(), ru);
        for (r, e) in re.iter_mut().zip(s.eta.coeffs()) {
            *r = self.dc.area() * e;
        }
        self.dc.incidence.matvec_add(-alpha * h, s.u.coeffs(), re);
        Ok(rhs)
    }

    /// One implicit midpoint step by Schur-preconditioned GMRES.
    pub fn step_midpoint(&self, s: &LinearState) -> Result<(LinearState, SolveReport)> {
        let rhs = self.midpoint_rhs(s)?;
        let n1 = self.dc.n1();
        let mut guess = s.u.coeffs().to_vec();
        guess.extend_from_slice(s.eta.coeffs());
        let op = self.midpoint_operator();
        let pc = self.preconditioner()?;
        let (x, report) = gmres_with_guess(&op, &pc, &rhs, Some(&guess), &self.solver)?;
        let (u, eta) = x.split_at(n1);
        Ok((
            LinearState {
                u: Field::new(Family::V1, u.to_vec()),
                eta: Field::new(Family::V2, eta.to_vec()),
            },
            report,
        ))
    }
}
