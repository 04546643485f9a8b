//! Quadrature-point kernels shared by the nonlinear residuals.
//!
//! Local coefficient arrays returned here already carry the V1 orientation
//! signs, so they pair directly with the outward-oriented tables of
//! [`CellTabulation`].

use super::DeRhamComplex;
use crate::fespace::{CellTabulation, FunctionSpace};
use crate::mesh::CellId;

#[inline]
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

#[inline]
pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Signed local coefficients of a 4-DOF space (V0 or V1) on cell `c`.
#[inline]
pub fn gather(space: &FunctionSpace, coeffs: &[f64], c: CellId) -> [f64; 4] {
    let dofs = space.cell_dofs(c);
    let signs = space.cell_signs(c);
    [
        signs[0] * coeffs[dofs[0]],
        signs[1] * coeffs[dofs[1]],
        signs[2] * coeffs[dofs[2]],
        signs[3] * coeffs[dofs[3]],
    ]
}

/// Add signed local contributions into a global vector.
#[inline]
pub fn scatter(space: &FunctionSpace, c: CellId, local: &[f64; 4], out: &mut [f64]) {
    let dofs = space.cell_dofs(c);
    let signs = space.cell_signs(c);
    for k in 0..4 {
        out[dofs[k]] += signs[k] * local[k];
    }
}

#[inline]
pub fn v0_value(tab: &CellTabulation, q: usize, local: &[f64; 4]) -> f64 {
    let n = &tab.v0[q];
    n[0] * local[0] + n[1] * local[1] + n[2] * local[2] + n[3] * local[3]
}

#[inline]
pub fn v0_gradient(tab: &CellTabulation, q: usize, local: &[f64; 4]) -> [f64; 2] {
    let g = &tab.v0_grad[q];
    let mut out = [0.0; 2];
    for k in 0..4 {
        out[0] += g[k][0] * local[k];
        out[1] += g[k][1] * local[k];
    }
    out
}

#[inline]
pub fn v1_value(tab: &CellTabulation, q: usize, local: &[f64; 4]) -> [f64; 2] {
    let p = &tab.v1[q];
    let mut out = [0.0; 2];
    for k in 0..4 {
        out[0] += p[k][0] * local[k];
        out[1] += p[k][1] * local[k];
    }
    out
}

/// Cellwise divergence of a V1 field from its signed local coefficients.
#[inline]
pub fn v1_divergence(tab: &CellTabulation, local: &[f64; 4]) -> f64 {
    (0..4).map(|k| tab.v1_div[k] * local[k]).sum()
}

/// Values of a V0 field at every quadrature point, indexed `cell * nq + q`.
pub fn qp_v0(dc: &DeRhamComplex, x: &[f64]) -> Vec<f64> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = Vec::with_capacity(dc.n2() * nq);
    for c in dc.mesh().cells() {
        let loc = gather(&dc.v0, x, c);
        out.extend((0..nq).map(|q| v0_value(tab, q, &loc)));
    }
    out
}

/// Gradients of a V0 field at every quadrature point.
pub fn qp_v0_grad(dc: &DeRhamComplex, x: &[f64]) -> Vec<[f64; 2]> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = Vec::with_capacity(dc.n2() * nq);
    for c in dc.mesh().cells() {
        let loc = gather(&dc.v0, x, c);
        out.extend((0..nq).map(|q| v0_gradient(tab, q, &loc)));
    }
    out
}

/// Values of a V1 field at every quadrature point.
pub fn qp_v1(dc: &DeRhamComplex, u: &[f64]) -> Vec<[f64; 2]> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = Vec::with_capacity(dc.n2() * nq);
    for c in dc.mesh().cells() {
        let loc = gather(&dc.v1, u, c);
        out.extend((0..nq).map(|q| v1_value(tab, q, &loc)));
    }
    out
}

/// `∫ γ_i v` for quadrature-point values `v`.
pub fn test_v0(dc: &DeRhamComplex, v: &[f64]) -> Vec<f64> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = vec![0.0; dc.n0()];
    for c in dc.mesh().cells() {
        let mut loc = [0.0; 4];
        for q in 0..nq {
            let w = tab.jxw[q] * v[c.0 * nq + q];
            for k in 0..4 {
                loc[k] += w * tab.v0[q][k];
            }
        }
        scatter(&dc.v0, c, &loc, &mut out);
    }
    out
}

/// `∫ ∇γ_i · v` for quadrature-point vectors `v`.
pub fn test_v0_grad(dc: &DeRhamComplex, v: &[[f64; 2]]) -> Vec<f64> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = vec![0.0; dc.n0()];
    for c in dc.mesh().cells() {
        let mut loc = [0.0; 4];
        for q in 0..nq {
            let vq = v[c.0 * nq + q];
            for k in 0..4 {
                loc[k] += tab.jxw[q] * dot2(tab.v0_grad[q][k], vq);
            }
        }
        scatter(&dc.v0, c, &loc, &mut out);
    }
    out
}

/// `∫ w_i · v` for quadrature-point vectors `v`.
pub fn test_v1(dc: &DeRhamComplex, v: &[[f64; 2]]) -> Vec<f64> {
    let tab = &dc.tab;
    let nq = tab.num_points();
    let mut out = vec![0.0; dc.n1()];
    for c in dc.mesh().cells() {
        let mut loc = [0.0; 4];
        for q in 0..nq {
            let vq = v[c.0 * nq + q];
            for k in 0..4 {
                loc[k] += tab.jxw[q] * dot2(tab.v1[q][k], vq);
            }
        }
        scatter(&dc.v1, c, &loc, &mut out);
    }
    out
}

/// `∫ v` over the domain for quadrature-point values `v`.
pub fn integrate_qp(dc: &DeRhamComplex, v: &[f64]) -> f64 {
    let tab = &dc.tab;
    let nq = tab.num_points();
    v.chunks(nq)
        .map(|cv| cv.iter().zip(&tab.jxw).map(|(a, w)| a * w).sum::<f64>())
        .sum()
}
