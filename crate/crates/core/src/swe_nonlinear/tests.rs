use super::*;
use crate::linalg::{dot, norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn complex(n: usize) -> Arc<DeRhamComplex> {
    DeRhamComplex::build(n, n, 1.0, 1.0).unwrap()
}

/// Random smooth state: low-wavenumber trigonometric velocity and a
/// depth of order one.
fn smooth_state(dc: &DeRhamComplex, seed: u64, amp: f64) -> SweState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = [0.0; 12];
    c.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    let u = dc
        .v1
        .interpolate_vector(|x, y| {
            let (sx, cx, sy, cy) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos(), (2.0 * PI * y).sin(), (2.0 * PI * y).cos());
            [
                amp * (c[0] * sy + c[1] * cy + c[2] * sx * cy + c[3]),
                amp * (c[4] * sx + c[5] * cx + c[6] * cx * sy + c[7]),
            ]
        })
        .unwrap();
    let d = dc
        .v2
        .interpolate_scalar(|x, y| {
            1.0 + 0.1 * (c[8] * (2.0 * PI * x).sin() + c[9] * (2.0 * PI * y).cos() + c[10] * (2.0 * PI * (x + y)).sin())
        })
        .unwrap();
    SweState { u, d }
}

fn model(dc: &Arc<DeRhamComplex>, f: f64, dt: f64) -> ShallowWater {
    ShallowWater::new(dc.clone(), SweParams::new(dc, f, 10.0, dt)).unwrap()
}

fn tight(p: SweParams) -> SweParams {
    p.with_newton(NewtonConfig::default().with_rtol(1e-13))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn q_of_resting_uniform_layer() {
    let dc = complex(8);
    let m = model(&dc, 5.0, 0.1);
    let s = m.rest_state(2.0);
    let q = m.diagnose_q(&s.u, &s.d).unwrap();
    assert!(q.coeffs().iter().all(|v| (v - 2.5).abs() < 1e-12));
}

#[test]
fn q_of_stream_function_flow_is_its_vorticity() {
    let dc = complex(12);
    let m = model(&dc, 0.0, 0.1);
    let psi = dc.v0.interpolate_scalar(|x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).unwrap();
    let u = Field::new(Family::V1, dc.grad_perp.matvec(psi.coeffs()));
    let d = Field::constant(Family::V2, dc.n2(), 1.0);
    let q = m.diagnose_q(&u, &d).unwrap();
    // discrete vorticity: M0 ω = -Gᵀ M1 G ψ
    let k = dc.m1.matvec(u.coeffs());
    let rhs: Vec<f64> = dc.grad_perp.matvec_transpose(&k).iter().map(|v| -v).collect();
    let omega = dc.solve_m0(&rhs).unwrap();
    assert!(max_abs_diff(q.coeffs(), &omega) < 1e-10 * norm(&omega).max(1.0));
    assert!(dc.integral_v0(q.coeffs()).abs() < 1e-12);
}

#[test]
fn total_vorticity_equals_integrated_coriolis() {
    let dc = complex(8);
    let f = dc.v0.interpolate_scalar(|x, y| 3.0 + (2.0 * PI * x).cos() * y).unwrap();
    let p = SweParams::new(&dc, 0.0, 10.0, 0.1).with_coriolis_field(f.clone());
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    for seed in 0..3 {
        let s = smooth_state(&dc, seed, 1.0);
        let c1 = m.total_vorticity(&s).unwrap();
        let want = dc.integral_v0(f.coeffs());
        assert!((c1 - want).abs() < 1e-12 * want.abs().max(1.0), "{c1} {want}");
    }
}

#[test]
fn q_rejects_non_positive_depth() {
    let dc = complex(4);
    let m = model(&dc, 1.0, 0.1);
    let mut d = Field::constant(Family::V2, dc.n2(), 1.0);
    d.coeffs_mut()[5] = -0.5;
    assert!(matches!(
        m.diagnose_q(&dc.v1.zero_field(), &d),
        Err(Error::NonPositiveDepth { .. })
    ));
}

#[test]
fn mass_flux_examples() {
    let dc = complex(8);
    let m = model(&dc, 1.0, 0.1);
    let s = smooth_state(&dc, 7, 1.0);
    let one = Field::constant(Family::V2, dc.n2(), 1.0);
    let two = Field::constant(Family::V2, dc.n2(), 2.0);
    let m1 = m.diagnose_m(&s.u, &one).unwrap();
    assert!(max_abs_diff(m1.coeffs(), s.u.coeffs()) < 1e-12);
    let m2 = m.diagnose_m(&s.u, &two).unwrap();
    let twice: Vec<f64> = s.u.coeffs().iter().map(|v| 2.0 * v).collect();
    assert!(max_abs_diff(m2.coeffs(), &twice) < 1e-12);
    let m0 = m.diagnose_m(&dc.v1.zero_field(), &s.d).unwrap();
    assert!(m0.coeffs().iter().all(|&v| v == 0.0));
}

#[test]
fn rest_state_has_zero_tendency() {
    let dc = complex(8);
    let m = model(&dc, 7.0, 0.1);
    let t = m.tendency(&m.rest_state(1.5), None).unwrap();
    assert!(t.u.iter().chain(&t.d).all(|v| v.abs() < 1e-13));
}

fn energy_rate(m: &ShallowWater, s: &SweState, q_t: Option<&[f64]>) -> (f64, f64) {
    let t = m.tendency(s, q_t).unwrap();
    let (hu, hd) = m.energy_derivatives(s);
    let rate = dot(&hu, &t.u) + dot(&hd, &t.d);
    let scale = dot(&hu, &t.u).abs() + dot(&hd, &t.d).abs();
    (rate, scale)
}

#[test]
fn energy_tendency_vanishes_with_and_without_stabilization() {
    let dc = complex(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mode in [Stabilization::None, Stabilization::Apvm, Stabilization::SupgQ] {
        let p = SweParams::new(&dc, 5.0, 10.0, 0.05)
            .with_stabilization(mode, 0.05)
            .with_topography(dc.v2.interpolate_scalar(|x, _| 0.05 * (2.0 * PI * x).cos()).unwrap());
        let m = ShallowWater::new(dc.clone(), p).unwrap();
        let q_t: Vec<f64> = (0..dc.n0()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for seed in 0..4 {
            let s = smooth_state(&dc, seed, 0.5);
            let (rate, scale) = energy_rate(&m, &s, Some(&q_t));
            assert!(scale > 1e-3);
            assert!(rate.abs() < 1e-11 * scale, "{mode:?}: {rate} vs {scale}");
        }
    }
}

#[test]
fn casimir_tendencies_vanish_without_stabilization() {
    let dc = complex(8);
    let m = model(&dc, 5.0, 0.05);
    for seed in 10..14 {
        let s = smooth_state(&dc, seed, 0.5);
        let t = m.tendency(&s, None).unwrap();
        let (cu, cd) = m.enstrophy_derivatives(&s).unwrap();
        let rate = dot(&cu, &t.u) + dot(&cd, &t.d);
        let scale = dot(&cu, &t.u).abs() + dot(&cd, &t.d).abs();
        assert!(scale > 1e-3);
        assert!(rate.abs() < 1e-10 * scale, "{rate} vs {scale}");
        assert!(t.d.iter().sum::<f64>().abs() < 1e-12 * norm(&t.d));
    }
}

#[test]
fn enstrophy_derivatives_match_finite_differences() {
    let dc = complex(6);
    let m = model(&dc, 3.0, 0.05);
    let s = smooth_state(&dc, 1, 0.5);
    let (cu, cd) = m.enstrophy_derivatives(&s).unwrap();
    let mut dir = smooth_state(&dc, 2, 0.3);
    dir.d = Field::new(Family::V2, dir.d.coeffs().iter().map(|v| v - 1.0).collect());
    let eps = 1e-6;
    let shift = |a: f64| SweState {
        u: s.u.add(&dir.u.scaled(a)).unwrap(),
        d: s.d.add(&dir.d.scaled(a)).unwrap(),
    };
    let fd = (m.enstrophy(&shift(eps)).unwrap() - m.enstrophy(&shift(-eps)).unwrap()) / (2.0 * eps);
    let an = dot(&cu, dir.u.coeffs()) + dot(&cd, dir.d.coeffs());
    assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} {an}");
}

#[test]
fn streamwise_diffusion_is_non_positive() {
    let dc = complex(8);
    let p = SweParams::new(&dc, 5.0, 10.0, 0.05).with_stabilization(Stabilization::Apvm, 0.05);
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    for seed in 0..3 {
        assert!(m.streamwise_diffusion(&smooth_state(&dc, seed, 0.5)).unwrap() < 0.0);
    }
    assert_eq!(model(&dc, 5.0, 0.05).streamwise_diffusion(&smooth_state(&dc, 0, 0.5)).unwrap(), 0.0);
}

#[test]
fn rest_state_is_a_fixed_point_of_every_integrator() {
    let dc = complex(6);
    for integrator in [Integrator::Poisson, Integrator::Midpoint, Integrator::SemiImplicit] {
        for k in [1, 3] {
            let p = SweParams::new(&dc, 4.0, 10.0, 0.1).with_integrator(integrator).with_k_max(k);
            let m = ShallowWater::new(dc.clone(), p).unwrap();
            let s = m.rest_state(2.0);
            let (n, _) = m.step(&s, &mut StepHistory::default()).unwrap();
            assert!(max_abs_diff(&n.to_vec(), &s.to_vec()) < 1e-14, "{integrator:?}");
        }
    }
}

#[test]
fn poisson_step_conserves_energy_mass_and_vorticity() {
    let dc = complex(8);
    let p = tight(SweParams::new(&dc, 5.0, 10.0, 0.02));
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    let mut s = smooth_state(&dc, 5, 0.5);
    let (h0, m0, c0) = (m.energy(&s), m.mass(&s), m.total_vorticity(&s).unwrap());
    let mut traj = vec![s.clone()];
    for _ in 0..5 {
        s = m.step(&s, &mut StepHistory::default()).unwrap().0;
        traj.push(s.clone());
    }
    assert!(((m.energy(&s) - h0) / h0).abs() < 1e-12);
    assert!(((m.mass(&s) - m0) / m0).abs() < 1e-13);
    assert!(((m.total_vorticity(&s).unwrap() - c0) / c0).abs() < 1e-12);
    let report = pv_consistency_check(&m, &traj).unwrap();
    assert!(report.max_weak_residual().unwrap() < 1e-10);
    assert!(report.constant_deviation.is_none());
}

#[test]
fn poisson_step_with_apvm_still_conserves_energy() {
    let dc = complex(8);
    let p = tight(SweParams::new(&dc, 5.0, 10.0, 0.02)).with_stabilization(Stabilization::Apvm, 0.01);
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    let mut s = smooth_state(&dc, 6, 0.5);
    let h0 = m.energy(&s);
    for _ in 0..3 {
        s = m.step(&s, &mut StepHistory::default()).unwrap().0;
    }
    assert!(((m.energy(&s) - h0) / h0).abs() < 1e-12);
}

#[test]
fn midpoint_energy_drift_is_second_order() {
    let dc = complex(8);
    let s0 = smooth_state(&dc, 4, 1.0);
    let drift = |dt: f64, steps: usize| {
        let p = tight(SweParams::new(&dc, 2.0, 10.0, dt)).with_integrator(Integrator::Midpoint);
        let m = ShallowWater::new(dc.clone(), p).unwrap();
        let mut s = s0.clone();
        for _ in 0..steps {
            s = m.step(&s, &mut StepHistory::default()).unwrap().0;
        }
        assert!(((m.mass(&s) - m.mass(&s0)) / m.mass(&s0)).abs() < 1e-13);
        (m.energy(&s) - m.energy(&s0)).abs()
    };
    let (a, b) = (drift(0.005, 40), drift(0.0025, 80));
    let ratio = a / b;
    assert!(ratio > 3.5 && ratio < 4.5, "drift {a} {b} ratio {ratio}");
}

#[test]
fn implicit_jacobians_match_finite_differences() {
    let dc = complex(6);
    for mode in [Stabilization::None, Stabilization::Apvm] {
        let p = SweParams::new(&dc, 5.0, 10.0, 0.05).with_stabilization(mode, 0.05);
        let m = ShallowWater::new(dc.clone(), p).unwrap();
        let s0 = smooth_state(&dc, 8, 0.5);
        let z1 = smooth_state(&dc, 9, 0.5).to_vec();
        let v = smooth_state(&dc, 10, 0.3).to_vec();
        for kind in [Integrator::Poisson, Integrator::Midpoint] {
            let r0 = m.implicit_residual(kind, &s0, &z1, None).unwrap();
            let jv = m.implicit_jacobian(kind, &s0, &z1, &v, None).unwrap();
            let err = |h: f64| {
                let z: Vec<f64> = z1.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let r = m.implicit_residual(kind, &s0, &z, None).unwrap();
                let fd: Vec<f64> = r.iter().zip(&r0).zip(&jv).map(|((a, b), j)| (a - b) / h - j).collect();
                norm(&fd)
            };
            let (e1, e2) = (err(1e-3), err(5e-4));
            let ratio = e1 / e2;
            assert!(ratio > 1.6 && ratio < 2.4, "{mode:?} {kind:?}: {e1} {e2}");
        }
    }
}

#[test]
fn semi_implicit_preserves_constant_pv() {
    let dc = complex(8);
    let s0 = smooth_state(&dc, 12, 0.3);
    let f = Field::new(Family::V0, dc.solve_m0(&test_v0_of_depth(&dc, s0.d.coeffs())).unwrap());
    let s0 = SweState {
        u: dc.v1.zero_field(),
        d: s0.d,
    };
    let p = SweParams::new(&dc, 0.0, 10.0, 0.05)
        .with_coriolis_field(f)
        .with_integrator(Integrator::SemiImplicit);
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    let mut traj = vec![s0.clone()];
    let mut s = s0;
    for _ in 0..10 {
        s = m.step(&s, &mut StepHistory::default()).unwrap().0;
        traj.push(s.clone());
    }
    assert!(norm(s.u.coeffs()) > 1e-3);
    let report = pv_consistency_check(&m, &traj).unwrap();
    assert!(report.weak_residuals.is_none());
    assert!(report.constant_deviation.unwrap() < 1e-10, "{report:?}");
}

fn test_v0_of_depth(dc: &DeRhamComplex, d: &[f64]) -> Vec<f64> {
    let nq = dc.tab.num_points();
    let v: Vec<f64> = (0..d.len() * nq).map(|k| d[k / nq]).collect();
    crate::assembly::kernels::test_v0(dc, &v)
}

#[test]
fn semi_implicit_preserves_zero_pv_of_irrotational_flow() {
    let dc = complex(8);
    let phi = dc.v2.interpolate_scalar(|x, y| 0.05 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()).unwrap();
    let u = dc.solve_m1(&dc.incidence_t.matvec(phi.coeffs())).unwrap();
    let m = ShallowWater::new(
        dc.clone(),
        SweParams::new(&dc, 0.0, 10.0, 0.05).with_integrator(Integrator::SemiImplicit),
    )
    .unwrap();
    let mut traj = vec![SweState {
        u: Field::new(Family::V1, u),
        d: Field::constant(Family::V2, dc.n2(), 1.0),
    }];
    for _ in 0..5 {
        let next = m.step(traj.last().unwrap(), &mut StepHistory::default()).unwrap().0;
        traj.push(next);
    }
    let dev = pv_consistency_check(&m, &traj).unwrap().constant_deviation.unwrap();
    assert!(dev < 1e-12, "{dev}");
}

#[test]
fn picard_sweeps_contract_towards_the_midpoint_solution() {
    let dc = complex(8);
    let p = SweParams::new(&dc, 5.0, 10.0, 0.02)
        .with_integrator(Integrator::SemiImplicit)
        .with_velocity_transport(VelocityTransport::VectorInvariant)
        .with_upwind(false)
        .with_k_max(10);
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    let (_, report) = m.step_semi_implicit(&smooth_state(&dc, 2, 0.5)).unwrap();
    let inc = &report.increments;
    assert_eq!(inc.len(), 10);
    assert!(inc[9] < 1e-3 * inc[1], "{inc:?}");
    for w in inc[1..].windows(2) {
        assert!(w[1] < w[0] || w[1] < 1e-12, "{inc:?}");
    }
}

#[test]
fn semi_implicit_conserves_mass() {
    let dc = complex(8);
    for vt in [VelocityTransport::PvFlux, VelocityTransport::VectorInvariant] {
        let p = SweParams::new(&dc, 5.0, 10.0, 0.05)
            .with_integrator(Integrator::SemiImplicit)
            .with_velocity_transport(vt);
        let m = ShallowWater::new(dc.clone(), p).unwrap();
        let s = smooth_state(&dc, 3, 0.5);
        let (n, r) = m.step(&s, &mut StepHistory::default()).unwrap();
        assert_eq!(r.iterations, 4);
        assert!(((m.mass(&n) - m.mass(&s)) / m.mass(&s)).abs() < 1e-13);
    }
}

#[test]
fn supg_history_is_updated() {
    let dc = complex(6);
    let p = SweParams::new(&dc, 5.0, 10.0, 0.05).with_stabilization(Stabilization::SupgQ, 0.02);
    let m = ShallowWater::new(dc.clone(), p).unwrap();
    let mut h = StepHistory::default();
    let s = smooth_state(&dc, 1, 0.5);
    let (s1, _) = m.step(&s, &mut h).unwrap();
    let qt = h.q_t.clone().unwrap();
    let (q0, q1) = (m.diagnose_q(&s.u, &s.d).unwrap(), m.diagnose_q(&s1.u, &s1.d).unwrap());
    let want: Vec<f64> = q1.coeffs().iter().zip(q0.coeffs()).map(|(a, b)| (a - b) / 0.05).collect();
    assert!(max_abs_diff(&qt, &want) < 1e-12);
}

