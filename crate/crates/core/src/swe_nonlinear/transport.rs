//! Upwind transport operators on the lowest-order complex.
//!
//! For DG0 depth the broken volume term vanishes and the upwind DG update
//! reduces to edge fluxes `u_e D̃_e`, where `u_e` is the V1 edge-flux DOF.
//! The same numbers are the DOFs of the reconstructed mass flux, so the
//! DG update is `Ḋ = -∇·m` exactly in every cell.

use crate::assembly::kernels::{dot2, gather, perp};
use crate::assembly::{DeRhamComplex, SparseOperator};
use crate::fespace::{Family, Field};
use crate::mesh::{EdgeId, LocalEdge};

/// Edge values `D̃` of a cellwise depth. With `upwind` the value comes from
/// the cell the flux `u_e` leaves; otherwise (or for `u_e = 0`) it is the
/// average of both sides.
pub fn upwind_values(dc: &DeRhamComplex, u: &[f64], d: &[f64], upwind: bool) -> Vec<f64> {
    let mesh = dc.mesh();
    mesh.edges()
        .map(|e| {
            let (plus, minus) = mesh.edge_cells(e).expect("edge ids come from the mesh");
            let [wp, wm] = upwind_weights(u[e.0], upwind);
            wp * d[plus.0] + wm * d[minus.0]
        })
        .collect()
}

/// Weights of the plus and minus cell in the edge value.
fn upwind_weights(flux: f64, upwind: bool) -> [f64; 2] {
    if upwind && flux > 0.0 {
        [1.0, 0.0]
    } else if upwind && flux < 0.0 {
        [0.0, 1.0]
    } else {
        [0.5, 0.5]
    }
}

/// Mass flux `m ∈ V1` with edge DOFs `u_e D̃_e`.
pub fn mass_flux_reconstruct(u: &Field, d_tilde: &[f64]) -> Field {
    Field::new(
        Family::V1,
        u.coeffs().iter().zip(d_tilde).map(|(a, b)| a * b).collect(),
    )
}

/// Sparse map `D ↦ u_e D̃_e(D)` (V2 to V1) for a frozen advecting flux `u`.
pub fn flux_operator(dc: &DeRhamComplex, u: &[f64], upwind: bool) -> SparseOperator {
    let mesh = dc.mesh();
    let mut t = Vec::with_capacity(2 * dc.n1());
    for e in mesh.edges() {
        let (plus, minus) = mesh.edge_cells(e).expect("edge ids come from the mesh");
        let [wp, wm] = upwind_weights(u[e.0], upwind);
        t.push((e.0, plus.0, u[e.0] * wp));
        t.push((e.0, minus.0, u[e.0] * wm));
    }
    SparseOperator::from_triplets(dc.n1(), dc.n2(), t).expect("indices are in range")
}

fn opposite(edge: LocalEdge) -> LocalEdge {
    match edge {
        LocalEdge::West => LocalEdge::East,
        LocalEdge::East => LocalEdge::West,
        LocalEdge::South => LocalEdge::North,
        LocalEdge::North => LocalEdge::South,
    }
}

fn other_cell(dc: &DeRhamComplex, e: EdgeId, c: crate::mesh::CellId) -> crate::mesh::CellId {
    let (plus, minus) = dc.mesh().edge_cells(e).expect("edge ids come from the mesh");
    if plus == c {
        minus
    } else {
        plus
    }
}

/// Vorticity part of the vector-invariant advection operator for a frozen
/// advecting velocity `ubar`:
///
/// ```text
/// V_ij = Σ_K -∫_K ∇⊥(w_i·ū⊥)·w_j + ∮_∂K (w_i·ū⊥)(n⊥·w̃_j)
/// ```
///
/// where `w̃_j` is taken from the upwind side of each edge (average when
/// `upwind` is false). For smooth fields `V(u) u ≈ ⟨w, ζ u⊥⟩`.
pub fn vector_invariant_operator(dc: &DeRhamComplex, ubar: &[f64], upwind: bool) -> SparseOperator {
    let mesh = dc.mesh();
    let tab = &dc.tab;
    let v1 = &dc.v1;
    let mut t = Vec::with_capacity(48 * mesh.num_cells());
    for c in mesh.cells() {
        let ub = gather(v1, ubar, c);
        let dof = v1.cell_dofs(c);
        let sgn = v1.cell_signs(c);
        let dux: f64 = (0..4).map(|k| tab.v1_dxx[k] * ub[k]).sum();
        let duy: f64 = (0..4).map(|k| tab.v1_dyy[k] * ub[k]).sum();

        let mut a = [[0.0; 4]; 4];
        for q in 0..tab.num_points() {
            let phi = &tab.v1[q];
            let uq = (0..4).fold([0.0; 2], |s, k| [s[0] + ub[k] * phi[k][0], s[1] + ub[k] * phi[k][1]]);
            for i in 0..4 {
                // Φ = φ_i·ū⊥ = -φx ūy + φy ūx
                let px = -tab.v1_dxx[i] * uq[1] + phi[i][1] * dux;
                let py = -phi[i][0] * duy + tab.v1_dyy[i] * uq[0];
                let curl = [-py, px];
                for j in 0..4 {
                    a[i][j] -= tab.jxw[q] * dot2(curl, phi[j]);
                }
            }
        }
        for k in 0..4 {
            for l in 0..4 {
                t.push((dof[k], dof[l], sgn[k] * sgn[l] * a[k][l]));
            }
        }

        let edges = mesh.cell_edges(c);
        for (slot, et) in LocalEdge::ALL.iter().zip(&tab.edges) {
            let e = edges[*slot as usize];
            let nb = other_cell(dc, e, c);
            let nt = &tab.edges[opposite(*slot) as usize];
            let n = slot.outward_normal();
            let tangent = perp(n);
            // outward flux of ū through this edge, in cell-local orientation
            let flux = ub[*slot as usize];
            let [wk, wn] = upwind_weights(flux, upwind);
            let nb_dof = v1.cell_dofs(nb);
            let nb_sgn = v1.cell_signs(nb);
            let mut own = [[0.0; 4]; 4];
            let mut across = [[0.0; 4]; 4];
            for p in 0..et.jxw.len() {
                let phi = &et.v1[p];
                let uq = (0..4).fold([0.0; 2], |s, k| [s[0] + ub[k] * phi[k][0], s[1] + ub[k] * phi[k][1]]);
                let up = perp(uq);
                for i in 0..4 {
                    let big_phi = et.jxw[p] * dot2(phi[i], up);
                    for j in 0..4 {
                        own[i][j] += wk * big_phi * dot2(tangent, phi[j]);
                        across[i][j] += wn * big_phi * dot2(tangent, nt.v1[p][j]);
                    }
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    t.push((dof[i], dof[j], sgn[i] * sgn[j] * own[i][j]));
                    t.push((dof[i], nb_dof[j], sgn[i] * nb_sgn[j] * across[i][j]));
                }
            }
        }
    }
    SparseOperator::from_triplets(dc.n1(), dc.n1(), t).expect("indices are in range")
}
