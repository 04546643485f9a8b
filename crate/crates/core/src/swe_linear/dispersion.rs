//! Bloch-wave analysis of the semidiscrete linear system.
//!
//! Translation invariance of the periodic lattice reduces the global
//! operators to a 3x3 symbol per wavenumber (x-edge flux, y-edge flux,
//! cell height). In energy-weighted form the system reads
//! `E ż = S z`, with `E = diag(H M1, g A)` Hermitian positive definite and
//! `S` skew-Hermitian, so `z ∝ exp(-iωt)` gives the Hermitian generalized
//! eigenproblem `ω E ẑ = i S ẑ` with real frequencies.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};

use crate::assembly::{coriolis_matrix, Coefficient, DeRhamComplex};
use crate::error::{Error, Result};
use crate::hodge::harmonic_basis;
use crate::mesh::{EdgeAxis, PeriodicQuadMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionParams {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Couplings from a reference DOF of type `row` to every DOF of type `col`:
/// `(displacement, value)` pairs.
type Couplings = Vec<([f64; 2], f64)>;

/// Precomputed lattice couplings of `E` and `S` for one mesh spacing.
#[derive(Debug, Clone)]
pub struct BlochSymbol {
    dx: f64,
    dy: f64,
    e: [[Couplings; 3]; 3],
    s: [[Couplings; 3]; 3],
}

/// Sub-lattice size used to read off the couplings; stencils reach at most
/// one cell, so four cells per direction keep every image distinct.
const LATTICE: usize = 4;

impl BlochSymbol {
    pub fn new(params: &DispersionParams, dx: f64, dy: f64) -> Result<Self> {
        if !(params.g > 0.0 && params.h > 0.0) {
            return Err(Error::InvalidArgument("g and H must be positive".into()));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::InvalidArgument("mesh spacing must be positive".into()));
        }
        let mesh = PeriodicQuadMesh::build(LATTICE, LATTICE, LATTICE as f64 * dx, LATTICE as f64 * dy)?;
        let dc = DeRhamComplex::new(mesh)?;
        let mesh = dc.mesh().clone();
        let n1 = dc.n1();
        let DispersionParams { f, g, h } = *params;
        let w = coriolis_matrix(&dc.v1, Coefficient::Constant(f))?;
        let area = dc.area();

        // global index -> (type, position)
        let locate = |idx: usize| -> (usize, [f64; 2]) {
            if idx < n1 {
                let e = crate::mesh::EdgeId(idx);
                let (axis, i, j) = mesh.edge_coords(e);
                let (i, j) = (i as f64, j as f64);
                match axis {
                    EdgeAxis::X => (0, [(i + 1.0) * dx, (j + 0.5) * dy]),
                    EdgeAxis::Y => (1, [(i + 0.5) * dx, (j + 1.0) * dy]),
                }
            } else {
                let (i, j) = mesh.cell_coords(crate::mesh::CellId(idx - n1));
                (2, [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy])
            }
        };
        let refs = [
            mesh.edge(EdgeAxis::X, 1, 1).0,
            mesh.edge(EdgeAxis::Y, 1, 1).0,
            n1 + mesh.cell(1, 1).0,
        ];
        let (lx, ly) = (mesh.lx(), mesh.ly());
        let wrap = |d: f64, l: f64| {
            let mut d = d.rem_euclid(l);
            if d > 0.5 * l {
                d -= l;
            }
            d
        };

        let mut e: [[Couplings; 3]; 3] = Default::default();
        let mut s: [[Couplings; 3]; 3] = Default::default();
        for (l, &row) in refs.iter().enumerate() {
            let (_, p0) = locate(row);
            let push = |target: &mut [[Couplings; 3]; 3], col: usize, v: f64| {
                if v != 0.0 {
                    let (m, p) = locate(col);
                    target[l][m].push(([wrap(p[0] - p0[0], lx), wrap(p[1] - p0[1], ly)], v));
                }
            };
            if l < 2 {
                for (col, v) in dc.m1.row(row) {
                    push(&mut e, col, h * v);
                }
                for (col, v) in w.row(row) {
                    push(&mut s, col, -h * v);
                }
                for (c, v) in dc.incidence_t.row(row) {
                    push(&mut s, n1 + c, g * h * v);
                }
            } else {
                let c = row - n1;
                push(&mut e, row, g * area);
                for (col, v) in dc.incidence.row(c) {
                    push(&mut s, col, -g * h * v);
                }
            }
        }
        Ok(Self { dx, dy, e, s })
    }

    fn symbol(couplings: &[[Couplings; 3]; 3], k: [f64; 2]) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(3, 3, |l, m| {
            couplings[l][m]
                .iter()
                .map(|(d, v)| Complex::from_polar(*v, k[0] * d[0] + k[1] * d[1]))
                .sum()
        })
    }

    /// Frequencies at wavenumber `(kx, ky)`, ascending.
    pub fn frequencies(&self, kx: f64, ky: f64) -> Result<[f64; 3]> {
        let (nx, ny) = (std::f64::consts::PI / self.dx, std::f64::consts::PI / self.dy);
        if !(kx.abs() <= nx * (1.0 + 1e-12) && ky.abs() <= ny * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "wavenumber ({kx}, {ky}) outside the first Brillouin zone [±{nx}, ±{ny}]"
            )));
        }
        let k = [kx, ky];
        let e = Self::symbol(&self.e, k);
        let s = Self::symbol(&self.s, k);
        let defect = (&s + s.adjoint()).norm() / s.norm().max(f64::MIN_POSITIVE);
        if defect > 1e-12 {
            return Err(Error::NonRealFrequency { kx, ky, defect });
        }
        let is = s * Complex::new(0.0, 1.0);
        let chol = nalgebra::Cholesky::new(e.clone())
            .ok_or(Error::Breakdown("dispersion: energy matrix is not positive definite"))?;
        let l = chol.l();
        let y = l
            .solve_lower_triangular(&is)
            .ok_or(Error::Breakdown("dispersion: triangular solve"))?;
        let z = l
            .solve_lower_triangular(&y.adjoint())
            .ok_or(Error::Breakdown("dispersion: triangular solve"))?;
        let c = z.adjoint();
        let c = (&c + c.adjoint()) * Complex::new(0.5, 0.0);
        let eig = SymmetricEigen::new(c);
        let mut w = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        w.sort_by(f64::total_cmp);
        Ok(w)
    }
}

/// Sorted real frequency triple at `(kx, ky)` for mesh spacing `(dx, dy)`.
pub fn dispersion(kx: f64, ky: f64, params: &DispersionParams, dx: f64, dy: f64) -> Result<[f64; 3]> {
    BlochSymbol::new(params, dx, dy)?.frequencies(kx, ky)
}

/// Dimension of `{u ∈ V1 : ∇·u = 0, ⟨w, f u⊥⟩ = 0 ∀w}` computed densely.
/// Intended for small meshes.
pub fn coriolis_kernel_dimension(dc: &DeRhamComplex, f: f64) -> Result<usize> {
    let w = coriolis_matrix(&dc.v1, Coefficient::Constant(f))?;
    let basis = harmonic_basis(dc)?;
    let (n0, n1) = (dc.n0(), dc.n1());
    let g = dc.grad_perp.to_dense();
    let z = DMatrix::from_fn(n1, n0 + 2, |i, j| {
        if j < n0 {
            g[i][j]
        } else {
            basis[j - n0].coeffs()[i]
        }
    });
    // orthonormal basis of the divergence-free subspace
    let svd = SVD::new(z, true, false);
    let smax = svd.singular_values.max();
    let u = svd.u.ok_or(Error::Breakdown("coriolis kernel: SVD"))?;
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    let q = DMatrix::from_fn(n1, cols.len(), |i, j| u[(i, cols[j])]);
    let wd = DMatrix::from_fn(n1, n1, |i, j| w.get(i, j));
    let wq = wd * &q;
    let sv = SVD::new(wq, false, false).singular_values;
    let wmax = sv.max().max(f64::MIN_POSITIVE);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * wmax).count();
    Ok(cols.len() - rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: DispersionParams = DispersionParams { f: 10.0, g: 10.0, h: 1.0 };

    #[test]
    fn inertial_frequencies_at_zero_wavenumber() {
        let w = dispersion(0.0, 0.0, &P, 1.0 / 16.0, 1.0 / 16.0).unwrap();
        assert!((w[0] + 10.0).abs() < 1e-10 && w[1].abs() < 1e-10 && (w[2] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn one_dimensional_symbol() {
        // along x the gravity branch solves ω² = gH (4 sin²(θ/2)/dx²) / ((2 + cos θ)/3)
        let p = DispersionParams { f: 0.0, ..P };
        let dx = 1.0 / 16.0;
        let sym = BlochSymbol::new(&p, dx, dx).unwrap();
        for kx in [0.5, 3.0, 20.0, 40.0] {
            let th: f64 = kx * dx;
            let w2 = p.g * p.h * 4.0 * (th / 2.0).sin().powi(2) / (dx * dx) / ((2.0 + th.cos()) / 3.0);
            let w = sym.frequencies(kx, 0.0).unwrap();
            assert!((w[2] - w2.sqrt()).abs() < 1e-9 * w2.sqrt(), "{kx}: {w:?}");
            assert!((w[0] + w2.sqrt()).abs() < 1e-9 * w2.sqrt());
            assert!(w[1].abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_wavenumbers_outside_the_zone() {
        assert!(dispersion(100.0, 0.0, &P, 1.0 / 16.0, 1.0 / 16.0).is_err());
    }

    #[test]
    fn geostrophic_branch_is_zero_everywhere() {
        let sym = BlochSymbol::new(&P, 0.1, 0.125).unwrap();
        for (kx, ky) in [(1.0, 2.0), (-7.0, 3.0), (20.0, -15.0)] {
            let w = sym.frequencies(kx, ky).unwrap();
            assert!(w[1].abs() < 1e-10, "{w:?}");
            assert!(w[2] > 10.0 && w[0] < -10.0);
        }
    }
}
