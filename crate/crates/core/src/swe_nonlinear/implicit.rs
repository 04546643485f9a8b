//! Fully implicit steps solved by Newton–Krylov: the implicit midpoint rule
//! and the energy-conserving Poisson integrator.
//!
//! Both solve, for `z1 = (u1, D1)`,
//!
//! ```text
//! R_u = M1 (u1 - u0) + Δt (⟨q̄* w, m̄⊥⟩ - ⟨∇·w, π̄⟩) = 0
//! R_D = A (D1 - D0) + Δt B m̄ = 0
//! ```
//!
//! with `q̄` diagnosed from `(ū, D̄)`. The midpoint rule takes
//! `m̄ = P1(D̄ū)` and `π̄ = ½|ū|² + g(D̄ + b)`. The Poisson integrator uses the
//! exact time averages of `Du` and `½|u|² + gD` along the linear path from
//! `z0` to `z1`, which makes the energy change vanish identically.

use super::{Integrator, ShallowWater, SweState, WeightedSolver};
use crate::assembly::kernels::{dot2, perp, qp_v0, qp_v0_grad, qp_v1, test_v0, test_v0_grad, test_v1};
use crate::assembly::weighted_v0_mass;
use crate::error::{Error, Result};
use crate::fespace::{Family, Field};
use crate::linalg::{newton, NewtonReport, NonlinearSystem, Preconditioner, SchurPreconditioner};

use super::Stabilization;

struct Linearization {
    d1: Vec<f64>,
    dbar: Vec<f64>,
    u1_qp: Vec<[f64; 2]>,
    ubar_qp: Vec<[f64; 2]>,
    q_qp: Vec<f64>,
    gq_qp: Vec<[f64; 2]>,
    qs: Vec<f64>,
    m: Vec<f64>,
    m_qp: Vec<[f64; 2]>,
    q_solver: WeightedSolver,
}

pub(super) struct ImplicitSystem<'a> {
    model: &'a ShallowWater,
    kind: Integrator,
    u0: Vec<f64>,
    d0: Vec<f64>,
    u0_qp: Vec<[f64; 2]>,
    dt: f64,
    q_t: Option<Vec<f64>>,
    lin: Option<Linearization>,
    pc: Option<SchurPreconditioner>,
}

impl<'a> ImplicitSystem<'a> {
    pub(super) fn new(
        model: &'a ShallowWater,
        kind: Integrator,
        s0: &SweState,
        dt: f64,
        q_t: Option<&[f64]>,
    ) -> Result<Self> {
        if kind == Integrator::SemiImplicit {
            return Err(Error::InvalidArgument("not a fully implicit integrator".into()));
        }
        model.check_state(s0)?;
        let dc = &*model.dc;
        Ok(Self {
            model,
            kind,
            u0: s0.u.coeffs().to_vec(),
            d0: s0.d.coeffs().to_vec(),
            u0_qp: qp_v1(dc, s0.u.coeffs()),
            dt,
            q_t: q_t.map(<[f64]>::to_vec),
            lin: None,
            pc: None,
        })
    }

    fn n1(&self) -> usize {
        self.u0.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Linearization> {
        let model = self.model;
        let dc = &*model.dc;
        let (u1, d1) = x.split_at(self.n1());
        let ubar: Vec<f64> = self.u0.iter().zip(u1).map(|(a, b)| 0.5 * (a + b)).collect();
        let dbar: Vec<f64> = self.d0.iter().zip(d1).map(|(a, b)| 0.5 * (a + b)).collect();
        let nq = dc.tab.num_points();
        let u1_qp = qp_v1(dc, u1);
        let ubar_qp = qp_v1(dc, &ubar);

        let wm = weighted_v0_mass(&dc.v0, &dc.v2, &Field::new(Family::V2, dbar.clone()))?;
        let q_solver = WeightedSolver::new(wm, model.q_solver.clone())?;
        let q = q_solver.solve(&model.q_rhs(&ubar))?;

        let m_dual: Vec<[f64; 2]> = match self.kind {
            Integrator::Poisson => (0..u1_qp.len())
                .map(|k| {
                    let (a, b) = (self.u0_qp[k], u1_qp[k]);
                    let (p, r) = (self.d0[k / nq], d1[k / nq]);
                    let t = 1.0 / 3.0;
                    [
                        t * (p * (a[0] + 0.5 * b[0]) + r * (0.5 * a[0] + b[0])),
                        t * (p * (a[1] + 0.5 * b[1]) + r * (0.5 * a[1] + b[1])),
                    ]
                })
                .collect(),
            _ => ubar_qp
                .iter()
                .enumerate()
                .map(|(k, v)| [dbar[k / nq] * v[0], dbar[k / nq] * v[1]])
                .collect(),
        };
        let m = dc.solve_m1(&test_v1(dc, &m_dual))?;
        let m_qp = qp_v1(dc, &m);
        let qs = model.q_star(&q, &m_qp, &dbar, self.q_t.as_deref());
        Ok(Linearization {
            d1: d1.to_vec(),
            dbar,
            u1_qp,
            ubar_qp,
            q_qp: qp_v0(dc, &q),
            gq_qp: qp_v0_grad(dc, &q),
            qs,
            m,
            m_qp,
            q_solver,
        })
    }

    /// Cell means of the time-averaged Bernoulli function.
    fn bernoulli(&self, l: &Linearization) -> Vec<f64> {
        let model = self.model;
        let g = model.params.g;
        let b = model.params.b.coeffs();
        match self.kind {
            Integrator::Poisson => {
                let ke: Vec<f64> = self
                    .u0_qp
                    .iter()
                    .zip(&l.u1_qp)
                    .map(|(a, c)| (dot2(*a, *a) + dot2(*a, *c) + dot2(*c, *c)) / 6.0)
                    .collect();
                model
                    .cell_means(&ke)
                    .into_iter()
                    .enumerate()
                    .map(|(c, k)| k + 0.5 * g * (self.d0[c] + l.d1[c]) + g * b[c])
                    .collect()
            }
            _ => {
                let ke: Vec<f64> = l.ubar_qp.iter().map(|a| 0.5 * dot2(*a, *a)).collect();
                model
                    .cell_means(&ke)
                    .into_iter()
                    .enumerate()
                    .map(|(c, k)| k + g * (l.dbar[c] + b[c]))
                    .collect()
            }
        }
    }

    fn residual_of(&self, x: &[f64], l: &Linearization, r: &mut [f64]) {
        let dc = &*self.model.dc;
        let n1 = self.n1();
        let (u1, d1) = x.split_at(n1);
        let (ru, rd) = r.split_at_mut(n1);
        let du: Vec<f64> = u1.iter().zip(&self.u0).map(|(a, b)| a - b).collect();
        dc.m1.matvec_into(&du, ru);
        let flux = self.model.vorticity_flux(&l.qs, &l.m_qp);
        for (ri, fi) in ru.iter_mut().zip(&flux) {
            *ri += self.dt * fi;
        }
        dc.incidence_t.matvec_add(-self.dt, &self.bernoulli(l), ru);
        let area = dc.area();
        for (c, ri) in rd.iter_mut().enumerate() {
            *ri = area * (d1[c] - self.d0[c]);
        }
        dc.incidence.matvec_add(self.dt, &l.m, rd);
    }

    fn preconditioner(&self) -> Result<SchurPreconditioner> {
        let dc = &*self.model.dc;
        let h = self.d0.iter().sum::<f64>() / self.d0.len() as f64;
        let half = 0.5 * self.dt;
        SchurPreconditioner::new(
            &dc.m1_lumped,
            &dc.incidence,
            half * self.model.params.g,
            half * h,
            &vec![dc.area(); dc.n2()],
        )
    }
}

impl NonlinearSystem for ImplicitSystem<'_> {
    fn dim(&self) -> usize {
        self.u0.len() + self.d0.len()
    }

    fn residual(&self, x: &[f64], r: &mut [f64]) -> Result<()> {
        let l = self.evaluate(x)?;
        self.residual_of(x, &l, r);
        Ok(())
    }

    fn linearize(&mut self, x: &[f64]) -> Result<()> {
        self.lin = Some(self.evaluate(x)?);
        if self.pc.is_none() {
            self.pc = Some(self.preconditioner()?);
        }
        Ok(())
    }

    fn jacobian_action(&self, v: &[f64], jv: &mut [f64]) -> Result<()> {
        let model = self.model;
        let dc = &*model.dc;
        let l = self.lin.as_ref().ok_or(Error::Breakdown("Jacobian before linearization"))?;
        let n1 = self.n1();
        let nq = dc.tab.num_points();
        let g = model.params.g;
        let (du1, dd1) = v.split_at(n1);
        let dubar: Vec<f64> = du1.iter().map(|x| 0.5 * x).collect();
        let ddbar: Vec<f64> = dd1.iter().map(|x| 0.5 * x).collect();
        let du1_qp = qp_v1(dc, du1);

        // ⟨γ, δq D̄⟩ = -⟨∇⊥γ, δū⟩ - ⟨γ, q̄ δD̄⟩
        let mu = dc.m1.matvec(&dubar);
        let mut qr = dc.grad_perp.matvec_transpose(&mu);
        qr.iter_mut().for_each(|x| *x = -*x);
        let qd: Vec<f64> = l.q_qp.iter().enumerate().map(|(k, q)| q * ddbar[k / nq]).collect();
        for (a, b) in qr.iter_mut().zip(test_v0(dc, &qd)) {
            *a -= b;
        }
        let dq = l.q_solver.solve(&qr)?;

        let dm_dual: Vec<[f64; 2]> = match self.kind {
            Integrator::Poisson => (0..du1_qp.len())
                .map(|k| {
                    let (a, b, e) = (self.u0_qp[k], l.u1_qp[k], du1_qp[k]);
                    let (p, r, s) = (self.d0[k / nq], l.d1[k / nq], dd1[k / nq]);
                    let t = 1.0 / 3.0;
                    [
                        t * (0.5 * p * e[0] + s * (0.5 * a[0] + b[0]) + r * e[0]),
                        t * (0.5 * p * e[1] + s * (0.5 * a[1] + b[1]) + r * e[1]),
                    ]
                })
                .collect(),
            _ => (0..du1_qp.len())
                .map(|k| {
                    let (a, e) = (l.ubar_qp[k], du1_qp[k]);
                    let (r, s) = (l.dbar[k / nq], ddbar[k / nq]);
                    [s * a[0] + r * 0.5 * e[0], s * a[1] + r * 0.5 * e[1]]
                })
                .collect(),
        };
        let dm = dc.solve_m1(&test_v1(dc, &dm_dual))?;
        let dm_qp = qp_v1(dc, &dm);

        let mut dqs = qp_v0(dc, &dq);
        let tau = model.params.tau;
        if model.params.stabilization != Stabilization::None && tau != 0.0 {
            let gdq = qp_v0_grad(dc, &dq);
            for k in 0..dqs.len() {
                let d = l.dbar[k / nq];
                let dd = ddbar[k / nq];
                let a = dot2(dm_qp[k], l.gq_qp[k]) / d - dd * dot2(l.m_qp[k], l.gq_qp[k]) / (d * d)
                    + dot2(l.m_qp[k], gdq[k]) / d;
                dqs[k] -= tau * a;
            }
        }
        let dflux: Vec<[f64; 2]> = (0..dqs.len())
            .map(|k| {
                let a = perp(l.m_qp[k]);
                let b = perp(dm_qp[k]);
                [dqs[k] * a[0] + l.qs[k] * b[0], dqs[k] * a[1] + l.qs[k] * b[1]]
            })
            .collect();
        let dq_flux = test_v1(dc, &dflux);

        let dke: Vec<f64> = match self.kind {
            Integrator::Poisson => (0..du1_qp.len())
                .map(|k| (dot2(self.u0_qp[k], du1_qp[k]) + 2.0 * dot2(l.u1_qp[k], du1_qp[k])) / 6.0)
                .collect(),
            _ => (0..du1_qp.len())
                .map(|k| 0.5 * dot2(l.ubar_qp[k], du1_qp[k]))
                .collect(),
        };
        let dpi: Vec<f64> = model
            .cell_means(&dke)
            .into_iter()
            .zip(dd1)
            .map(|(k, d)| k + 0.5 * g * d)
            .collect();

        let (ju, jd) = jv.split_at_mut(n1);
        dc.m1.matvec_into(du1, ju);
        for (a, b) in ju.iter_mut().zip(&dq_flux) {
            *a += self.dt * b;
        }
        dc.incidence_t.matvec_add(-self.dt, &dpi, ju);
        let area = dc.area();
        for (a, b) in jd.iter_mut().zip(dd1) {
            *a = area * b;
        }
        dc.incidence.matvec_add(self.dt, &dm, jd);
        Ok(())
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        match &self.pc {
            Some(pc) => pc.apply(r, z),
            None => {
                z.copy_from_slice(r);
                Ok(())
            }
        }
    }
}

impl ShallowWater {
    pub(super) fn step_implicit(
        &self,
        s: &SweState,
        dt: f64,
        kind: Integrator,
        q_t: Option<&[f64]>,
    ) -> Result<(SweState, NewtonReport)> {
        let mut sys = ImplicitSystem::new(self, kind, s, dt, q_t)?;
        let (x, report) = newton(&mut sys, &s.to_vec(), &self.params.newton)?;
        Ok((SweState::from_slice(&x, self.dc.n1()), report))
    }

    /// One Poisson-integrator step with the configured `Δt`.
    pub fn step_poisson(&self, s: &SweState, q_t: Option<&[f64]>) -> Result<(SweState, NewtonReport)> {
        self.step_implicit(s, self.params.dt, Integrator::Poisson, q_t)
    }

    /// One implicit midpoint step with the configured `Δt`.
    pub fn step_midpoint(&self, s: &SweState, q_t: Option<&[f64]>) -> Result<(SweState, NewtonReport)> {
        self.step_implicit(s, self.params.dt, Integrator::Midpoint, q_t)
    }

    /// Residual of a fully implicit step at `z1 = [u1, D1]`, exposed for
    /// Jacobian consistency checks.
    pub fn implicit_residual(
        &self,
        kind: Integrator,
        s0: &SweState,
        z1: &[f64],
        q_t: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let sys = ImplicitSystem::new(self, kind, s0, self.params.dt, q_t)?;
        let mut r = vec![0.0; z1.len()];
        sys.residual(z1, &mut r)?;
        Ok(r)
    }

    /// Jacobian action of [`implicit_residual`](Self::implicit_residual).
    pub fn implicit_jacobian(
        &self,
        kind: Integrator,
        s0: &SweState,
        z1: &[f64],
        v: &[f64],
        q_t: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let mut sys = ImplicitSystem::new(self, kind, s0, self.params.dt, q_t)?;
        sys.linearize(z1)?;
        let mut jv = vec![0.0; v.len()];
        sys.jacobian_action(v, &mut jv)?;
        Ok(jv)
    }

    /// `⟨γ, q1 D1 - q0 D0⟩ - Δt ⟨∇γ, q̄* m̄⟩` for an implicit step `s0 → s1`;
    /// zero up to the Newton tolerance.
    pub(super) fn implicit_pv_residual(
        &self,
        kind: Integrator,
        s0: &SweState,
        s1: &SweState,
        q_t: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let dc = &*self.dc;
        let sys = ImplicitSystem::new(self, kind, s0, self.params.dt, q_t)?;
        let l = sys.evaluate(&s1.to_vec())?;
        let q0 = self.diagnose_q(&s0.u, &s0.d)?;
        let q1 = self.diagnose_q(&s1.u, &s1.d)?;
        let nq = dc.tab.num_points();
        let (a, b) = (qp_v0(dc, q1.coeffs()), qp_v0(dc, q0.coeffs()));
        let (d0, d1) = (s0.d.coeffs(), s1.d.coeffs());
        let qd: Vec<f64> = (0..a.len()).map(|k| a[k] * d1[k / nq] - b[k] * d0[k / nq]).collect();
        let mut r = test_v0(dc, &qd);
        let qm: Vec<[f64; 2]> = l.qs.iter().zip(&l.m_qp).map(|(q, m)| [q * m[0], q * m[1]]).collect();
        let flux = test_v0_grad(dc, &qm);
        for (ri, fi) in r.iter_mut().zip(&flux) {
            *ri -= self.params.dt * fi;
        }
        Ok(r)
    }
}
