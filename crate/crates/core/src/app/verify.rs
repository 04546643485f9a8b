//! Built-in invariant checks on a ladder of meshes.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sim::jet_stream_function;
use crate::assembly::{DeRhamComplex, SparseOperator};
use crate::error::Result;
use crate::euler2d::Euler2d;
use crate::fespace::{Family, Field};
use crate::hodge::harmonic_basis;
use crate::linalg::dot;
use crate::swe_linear::{LinearParams, LinearSwe};
use crate::swe_nonlinear::{ShallowWater, Stabilization, SweParams, SweState};

pub const MESH_LADDER: [usize; 3] = [8, 16, 32];

/// Test hooks that deliberately break an operator before checking it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FaultInjection {
    /// Add a small perturbation to one entry of the divergence matrix.
    pub perturb_div: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub mesh: usize,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, mesh: usize, value: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name,
            mesh,
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        });
    }

    fn push_exact(&mut self, name: &'static str, mesh: usize, value: f64, expected: f64) {
        self.checks.push(CheckResult {
            name,
            mesh,
            value,
            tolerance: expected,
            passed: value == expected,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:>6} {:>12} {:>12}  result", "check", "mesh", "value", "tolerance")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<28} {:>6} {:>12.3e} {:>12.3e}  {}",
                c.name,
                format!("{0}x{0}", c.mesh),
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Smooth pseudo-random shallow water state with depth near one.
pub fn smooth_random_state(dc: &DeRhamComplex, seed: u64) -> Result<SweState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (lx, ly) = (dc.mesh().lx(), dc.mesh().ly());
    let u = dc.v1.interpolate_vector(|x, y| {
        let (a, b) = (2.0 * PI * x / lx, 2.0 * PI * y / ly);
        [
            0.5 * (c[0] * b.sin() + c[1] * b.cos() + c[2] * a.sin() * b.cos() + c[3]),
            0.5 * (c[4] * a.sin() + c[5] * a.cos() + c[6] * a.cos() * b.sin()),
        ]
    })?;
    let d = dc.v2.interpolate_scalar(|x, y| {
        let (a, b) = (2.0 * PI * x / lx, 2.0 * PI * y / ly);
        1.0 + 0.1 * (c[7] * a.sin() + c[8] * b.cos() + c[9] * (a + b).sin())
    })?;
    Ok(SweState { u, d })
}

/// Number of connected components of the graph whose vertices are the
/// columns of `a` and whose edges join columns sharing a row.
fn column_components(a: &SparseOperator) -> usize {
    let n = a.ncols();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..a.nrows() {
        let cols: Vec<usize> = a.row(i).filter(|(_, v)| *v != 0.0).map(|(j, _)| j).collect();
        for w in cols.windows(2) {
            let (r0, r1) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[r0] = r1;
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// `dim V1 - rank G - rank B`, with the ranks from the kernels of `G`
/// (constants per component) and of `Bᵀ`.
pub fn harmonic_dimension(dc: &DeRhamComplex) -> usize {
    let rank_g = dc.n0() - column_components(&dc.grad_perp);
    let rank_b = dc.n2() - column_components(&dc.incidence_t);
    dc.n1() - rank_g - rank_b
}

/// Distance of the harmonic basis from the span of the two constant fields,
/// relative to the basis norm.
fn harmonic_constant_defect(dc: &DeRhamComplex) -> Result<f64> {
    let ex = dc.v1.interpolate_vector(|_, _| [1.0, 0.0])?;
    let ey = dc.v1.interpolate_vector(|_, _| [0.0, 1.0])?;
    let mut worst = 0.0f64;
    for h in harmonic_basis(dc)? {
        let h = h.coeffs();
        // M1-orthogonal projection onto span{ex, ey}; the two are M1-orthogonal
        let px = dc.inner_v1(h, ex.coeffs()) / dc.inner_v1(ex.coeffs(), ex.coeffs());
        let py = dc.inner_v1(h, ey.coeffs()) / dc.inner_v1(ey.coeffs(), ey.coeffs());
        let r: Vec<f64> = (0..h.len())
            .map(|i| h[i] - px * ex.coeffs()[i] - py * ey.coeffs()[i])
            .collect();
        worst = worst.max((dc.inner_v1(&r, &r) / dc.inner_v1(h, h)).sqrt());
    }
    Ok(worst)
}

pub fn verify(faults: FaultInjection) -> Result<VerifyReport> {
    verify_on(&MESH_LADDER, faults)
}

pub fn verify_on(meshes: &[usize], faults: FaultInjection) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for &n in meshes {
        let dc = DeRhamComplex::build(n, n, 1.0, 1.0)?;

        let div = if faults.perturb_div {
            let mut t = dc.div.triplets();
            t[0].2 += 1e-3 * t[0].2.abs().max(1.0);
            SparseOperator::from_triplets(dc.div.nrows(), dc.div.ncols(), t)?
        } else {
            dc.div.clone()
        };
        let dg = div.matmul(&dc.grad_perp)?;
        report.push(
            "div_grad_perp_zero",
            n,
            dg.max_abs() / (div.max_abs() * dc.grad_perp.max_abs()),
            1e-15,
        );

        report.push_exact("harmonic_dimension", n, harmonic_dimension(&dc) as f64, 2.0);
        report.push("harmonic_basis_constant", n, harmonic_constant_defect(&dc)?, 1e-12);

        let lin = LinearSwe::new(
            dc.clone(),
            LinearParams {
                f: 10.0,
                g: 10.0,
                h: 1.0,
                dt: 0.01,
            },
        )?;
        let psi = jet_stream_function(&dc, 0.1)?;
        let s = lin.geostrophic_state(&psi)?;
        let (ru, re) = lin.tendency_rhs(&s)?;
        let wu = lin.coriolis().matvec(s.u.coeffs());
        let scale = dot(&wu, &wu).sqrt();
        report.push(
            "geostrophic_tendency",
            n,
            (dot(&ru, &ru) + dot(&re, &re)).sqrt() / scale,
            1e-12,
        );

        let mut energy: f64 = 0.0;
        let mut energy_apvm: f64 = 0.0;
        let mut enstrophy: f64 = 0.0;
        for seed in 0..3 {
            let s = smooth_random_state(&dc, seed)?;
            for (mode, slot) in [(Stabilization::None, &mut energy), (Stabilization::Apvm, &mut energy_apvm)] {
                let p = SweParams::new(&dc, 10.0, 10.0, 0.01).with_stabilization(mode, 0.005);
                let m = ShallowWater::new(dc.clone(), p)?;
                let t = m.tendency(&s, None)?;
                let (hu, hd) = m.energy_derivatives(&s);
                let (a, b) = (dot(&hu, &t.u), dot(&hd, &t.d));
                *slot = slot.max((a + b).abs() / (a.abs() + b.abs()));
                if mode == Stabilization::None {
                    let (cu, cd) = m.enstrophy_derivatives(&s)?;
                    let (a, b) = (dot(&cu, &t.u), dot(&cd, &t.d));
                    enstrophy = enstrophy.max((a + b).abs() / (a.abs() + b.abs()));
                }
            }
        }
        report.push("swe_energy_rate", n, energy, 1e-10);
        report.push("swe_energy_rate_apvm", n, energy_apvm, 1e-10);
        report.push("swe_enstrophy_rate", n, enstrophy, 1e-10);

        let euler = Euler2d::new(dc.clone(), 0.0)?;
        let omega = dc.v0.interpolate_scalar(|x, y| {
            (2.0 * PI * x).sin() * (4.0 * PI * y).cos() + 0.5 * (2.0 * PI * (x + y)).cos()
        })?;
        let st = euler.state(Field::new(Family::V0, omega.into_coeffs()))?;
        let wt = euler.tendency(&st)?;
        let mwt = dc.m0.matvec(&wt);
        let (a, b) = (dot(st.psi.coeffs(), &mwt), dot(st.omega.coeffs(), &mwt));
        let nrm = dot(&mwt, &mwt).sqrt();
        report.push(
            "euler_energy_rate",
            n,
            a.abs() / (nrm * dot(st.psi.coeffs(), st.psi.coeffs()).sqrt()),
            1e-10,
        );
        report.push(
            "euler_enstrophy_rate",
            n,
            b.abs() / (nrm * dot(st.omega.coeffs(), st.omega.coeffs()).sqrt()),
            1e-10,
        );
    }
    Ok(report)
}
