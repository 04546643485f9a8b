//! Semi-implicit Picard scheme.
//!
//! Each sweep `k` freezes `ū = (uⁿ + vᵏ)/2`, `D̄ = (Dⁿ + Dᵏ)/2` and
//!
//! 1. transports `D` by Crank–Nicolson upwind fluxes, then rewrites the
//!    result in flux form `D* = Dⁿ - Δt ∇·m̄`;
//! 2. transports `u` either by the PV flux `q̄* m̄⊥` (explicit in the frozen
//!    fields) or by the upwinded vector-invariant operator (Crank–Nicolson);
//! 3. corrects `(vᵏ, Dᵏ)` with the linear rotating system about rest depth
//!    `H = mean Dⁿ` and `f̄ = mean f`, driven by the residuals
//!    `(vᵏ - u*, Dᵏ - D*)`.
//!
//! With the PV flux, a constant `q` is preserved to round-off: every update
//! keeps `⟨γ, D⟩ + ⟨∇⊥γ, u⟩ = ⟨γ, f⟩`, the correction included because
//! `f̄ = q H` when `q` is constant.

use super::{ShallowWater, SweState, VelocityTransport};
use crate::assembly::kernels::qp_v1;
use crate::assembly::{check_positive, SparseOperator};
use crate::error::Result;
use crate::fespace::{Family, Field};
use crate::linalg::{gmres_with_guess, norm, JacobiPreconditioner};
use crate::swe_linear::{LinearParams, LinearSwe};

use super::transport::{flux_operator, vector_invariant_operator};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SemiImplicitReport {
    pub sweeps: usize,
    /// 2-norm of the correction `(Δu, ΔD)` of every sweep.
    pub increments: Vec<f64>,
    pub linear_iterations: usize,
}

impl ShallowWater {
    /// One semi-implicit step with the configured `Δt`.
    pub fn step_semi_implicit(&self, s: &SweState) -> Result<(SweState, SemiImplicitReport)> {
        self.step_semi_implicit_dt(s, self.params.dt, None)
    }

    pub(super) fn step_semi_implicit_dt(
        &self,
        s: &SweState,
        dt: f64,
        q_t: Option<&[f64]>,
    ) -> Result<(SweState, SemiImplicitReport)> {
        self.check_state(s)?;
        let dc = &*self.dc;
        let (n1, n2) = (dc.n1(), dc.n2());
        let area = dc.area();
        let g = self.params.g;
        let cfg = &self.params.linear;
        let (un, dn) = (s.u.coeffs(), s.d.coeffs());

        let domain = area * n2 as f64;
        let h = dn.iter().sum::<f64>() / n2 as f64;
        let fbar = dc.integral_v0(self.params.f.coeffs()) / domain;
        let corrector = LinearSwe::new(self.dc.clone(), LinearParams { f: fbar, g, h, dt })?
            .with_solver(cfg.clone());
        let corr_op = corrector.midpoint_operator();
        let corr_pc = corrector.preconditioner()?;

        let mut v = un.to_vec();
        let mut dk = dn.to_vec();
        let mut report = SemiImplicitReport::default();
        for _ in 0..self.params.k_max {
            let ubar: Vec<f64> = un.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            let dbar: Vec<f64> = dn.iter().zip(&dk).map(|(a, b)| 0.5 * (a + b)).collect();

            // depth transport
            let flux = flux_operator(dc, &ubar, self.params.upwind);
            let bf = dc.incidence.matmul(&flux)?;
            let lhs = SparseOperator::identity(n2).scaled(area).add_scaled(0.5 * dt, &bf)?;
            let mut rhs: Vec<f64> = dn.iter().map(|d| area * d).collect();
            bf.matvec_add(-0.5 * dt, dn, &mut rhs);
            let pc = JacobiPreconditioner::new(&lhs)?;
            let (dstar, r) = gmres_with_guess(&lhs, &pc, &rhs, Some(dn), cfg)?;
            report.linear_iterations += r.iterations;
            let dmid: Vec<f64> = dn.iter().zip(&dstar).map(|(a, b)| 0.5 * (a + b)).collect();
            let mbar = flux.matvec(&dmid);
            let mut dstar = dn.to_vec();
            dc.div.matvec_add(-dt, &mbar, &mut dstar);
            check_positive(&dc.v2, &Field::new(Family::V2, dstar.clone()))?;

            // velocity transport
            let bern = self.bernoulli(&ubar, &dbar);
            let ustar = match self.params.velocity_transport {
                VelocityTransport::PvFlux => {
                    let q = self.solve_weighted_v0(&dbar, &self.q_rhs(&ubar))?;
                    let m_qp = qp_v1(dc, &mbar);
                    let qs = self.q_star(&q, &m_qp, &dbar, q_t);
                    let mut rhs = self.vorticity_flux(&qs, &m_qp);
                    rhs.iter_mut().for_each(|x| *x = -*x);
                    dc.incidence_t.matvec_add(1.0, &bern, &mut rhs);
                    let ut = dc.solve_m1(&rhs)?;
                    un.iter().zip(&ut).map(|(a, b)| a + dt * b).collect::<Vec<f64>>()
                }
                VelocityTransport::VectorInvariant => {
                    let a = vector_invariant_operator(dc, &ubar, self.params.upwind).add_scaled(1.0, &self.coriolis)?;
                    let lhs = dc.m1.add_scaled(0.5 * dt, &a)?;
                    let mut rhs = dc.m1.matvec(un);
                    a.matvec_add(-0.5 * dt, un, &mut rhs);
                    dc.incidence_t.matvec_add(dt, &bern, &mut rhs);
                    let pc = JacobiPreconditioner::new(&lhs)?;
                    let (x, r) = gmres_with_guess(&lhs, &pc, &rhs, Some(un), cfg)?;
                    report.linear_iterations += r.iterations;
                    x
                }
            };

            // linear correction
            let ru: Vec<f64> = v.iter().zip(&ustar).map(|(a, b)| a - b).collect();
            let mut rhs = dc.m1.matvec(&ru);
            rhs.iter_mut().for_each(|x| *x = -*x);
            rhs.extend(dk.iter().zip(&dstar).map(|(a, b)| -area * (a - b)));
            let (delta, r) = gmres_with_guess(&corr_op, &corr_pc, &rhs, None, cfg)?;
            report.linear_iterations += r.iterations;
            let (du, dd) = delta.split_at(n1);
            v.iter_mut().zip(du).for_each(|(a, b)| *a += b);
            dk.iter_mut().zip(dd).for_each(|(a, b)| *a += b);
            report.increments.push(norm(&delta));
            report.sweeps += 1;
        }
        Ok((
            SweState {
                u: Field::new(Family::V1, v),
                d: Field::new(Family::V2, dk),
            },
            report,
        ))
    }

}
