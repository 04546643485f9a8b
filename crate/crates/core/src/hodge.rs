//! Discrete Hodge–Helmholtz decomposition of V1 fields.
//!
//! Every `u ∈ V1` splits uniquely and L2-orthogonally as
//! `u = ∇⊥ψ + h + c`, with `ψ ∈ V0` of zero mean, `h` harmonic (zero
//! divergence and zero weak curl) and `c` in the range of the weak gradient
//! `M1⁻¹ Bᵀ` of V2.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::DeRhamComplex;
use crate::error::{Error, Result};
use crate::fespace::{Family, Field};
use crate::linalg::{dot, norm, pcg, FnOperator, FnPreconditioner, SolverConfig};

/// Dimension of the harmonic space of the flat torus.
pub const HARMONIC_DIM: usize = 2;

const CANDIDATES: usize = 4;
const SEED: u64 = 0x5eed_4a7d;

#[derive(Debug, Clone)]
pub struct HelmholtzParts {
    /// Zero-mean stream function of the rotational part.
    pub psi: Field,
    pub rotational: Field,
    pub harmonic: Field,
    pub divergent: Field,
}

fn poisson_config() -> SolverConfig {
    SolverConfig {
        rtol: 1e-13,
        atol: 1e-300,
        max_iter: 5000,
        restart: 30,
        verbose: false,
    }
}

/// Zero-mean solution of `K ψ = rhs` for the V0 stiffness `K`.
///
/// The constant kernel is removed with the rank-one shift
/// `K + α 1 1ᵀ`; the mean of `rhs` is discarded first so the system is
/// consistent.
pub fn solve_pinned_laplacian(dc: &DeRhamComplex, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_pinned_laplacian_with(dc, rhs, &poisson_config())
}

pub fn solve_pinned_laplacian_with(
    dc: &DeRhamComplex,
    rhs: &[f64],
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = dc.n0();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let mean = rhs.iter().sum::<f64>() / n as f64;
    let b: Vec<f64> = rhs.iter().map(|r| r - mean).collect();
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let diag = dc.stiffness.diagonal_entries();
    let alpha = diag.iter().sum::<f64>() / (n * n) as f64;
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        dc.stiffness.matvec_into(x, y);
        let s = alpha * x.iter().sum::<f64>();
        y.iter_mut().for_each(|v| *v += s);
        Ok(())
    });
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / (d + alpha)).collect();
    let pc = FnPreconditioner(|r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] * inv[i];
        }
        Ok(())
    });
    let (mut psi, _) = pcg(&op, &pc, &b, None, config)?;
    let m = psi.iter().sum::<f64>() / n as f64;
    psi.iter_mut().for_each(|v| *v -= m);
    Ok(psi)
}

/// Stream function of the rotational part: `Gᵀ M1 G ψ = Gᵀ M1 u`.
pub fn stream_function(dc: &DeRhamComplex, u: &[f64]) -> Result<Vec<f64>> {
    let rhs = dc.grad_perp.matvec_transpose(&dc.m1.matvec(u));
    solve_pinned_laplacian(dc, &rhs)
}

/// Divergent part `c = M1⁻¹ Bᵀ φ` with `B M1⁻¹ Bᵀ φ = B u`.
pub fn divergent_part(dc: &DeRhamComplex, u: &[f64]) -> Result<Vec<f64>> {
    divergent_part_with(dc, u, &poisson_config())
}

fn divergent_part_with(dc: &DeRhamComplex, u: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    let b = &dc.incidence;
    let rhs = b.matvec(u);
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; u.len()]);
    }
    let n2 = dc.n2();
    let op = FnOperator::new(n2, |phi: &[f64], y: &mut [f64]| {
        let w = dc.solve_m1(&b.matvec_transpose(phi))?;
        b.matvec_into(&w, y);
        Ok(())
    });
    // B Ml⁻¹ Bᵀ is spectrally equivalent and diagonal-dominant; Jacobi of it
    let lumped_inv: Vec<f64> = dc.m1_lumped.iter().map(|m| 1.0 / m).collect();
    let diag: Vec<f64> = (0..n2)
        .map(|c| b.row(c).map(|(e, v)| v * v * lumped_inv[e]).sum())
        .collect();
    let pc = FnPreconditioner(|r: &[f64], z: &mut [f64]| {
        for i in 0..r.len() {
            z[i] = r[i] / diag[i];
        }
        Ok(())
    });
    let (phi, _) = pcg(&op, &pc, &rhs, None, config)?;
    dc.solve_m1(&b.matvec_transpose(&phi))
}

/// M1-orthonormal basis of the harmonic space.
///
/// Random candidates are stripped of their rotational and divergent parts;
/// the rank of the M1-Gram matrix of the remainders measures the dimension.
pub fn harmonic_basis(dc: &DeRhamComplex) -> Result<[Field; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cands: Vec<Vec<f64>> = Vec::with_capacity(CANDIDATES);
    for _ in 0..CANDIDATES {
        let v: Vec<f64> = (0..dc.n1()).map(|_| rng.random_range(-1.0..1.0)).collect();
        cands.push(harmonic_component(dc, &v)?);
    }
    let gram = DMatrix::from_fn(CANDIDATES, CANDIDATES, |i, j| dc.inner_v1(&cands[i], &cands[j]));
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..CANDIDATES).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let dim = order
        .iter()
        .filter(|&&k| eig.eigenvalues[k] > 1e-12 * lmax)
        .count();
    if dim != HARMONIC_DIM {
        return Err(Error::Invariant(format!(
            "harmonic space has dimension {dim}, expected {HARMONIC_DIM}"
        )));
    }
    let make = |k: usize| {
        let scale = 1.0 / eig.eigenvalues[k].sqrt();
        let mut h = vec![0.0; dc.n1()];
        for (j, c) in cands.iter().enumerate() {
            let w = scale * eig.eigenvectors[(j, k)];
            for (hi, ci) in h.iter_mut().zip(c) {
                *hi += w * ci;
            }
        }
        Field::new(Family::V1, h)
    };
    let mut h0 = make(order[0]);
    let mut h1 = make(order[1]);
    // one Gram–Schmidt sweep to clean round-off from the eigenvectors
    let n0 = dc.inner_v1(h0.coeffs(), h0.coeffs()).sqrt();
    h0.coeffs_mut().iter_mut().for_each(|v| *v /= n0);
    let p = dc.inner_v1(h0.coeffs(), h1.coeffs());
    let h0c = h0.coeffs().to_vec();
    h1.coeffs_mut().iter_mut().zip(&h0c).for_each(|(v, a)| *v -= p * a);
    let n1 = dc.inner_v1(h1.coeffs(), h1.coeffs()).sqrt();
    h1.coeffs_mut().iter_mut().for_each(|v| *v /= n1);
    Ok([h0, h1])
}

fn harmonic_component(dc: &DeRhamComplex, v: &[f64]) -> Result<Vec<f64>> {
    let base = poisson_config();
    let rot_rhs = norm(&dc.grad_perp.matvec_transpose(&dc.m1.matvec(v)));
    let div_rhs = norm(&dc.incidence.matvec(v));
    let strip = |v: &[f64], rot: &SolverConfig, div: &SolverConfig| -> Result<Vec<f64>> {
        let rhs = dc.grad_perp.matvec_transpose(&dc.m1.matvec(v));
        let psi = solve_pinned_laplacian_with(dc, &rhs, rot)?;
        let g = dc.grad_perp.matvec(&psi);
        let w: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a - b).collect();
        let c = divergent_part_with(dc, &w, div)?;
        Ok(w.iter().zip(&c).map(|(a, b)| a - b).collect())
    };
    let h = strip(v, &base, &base)?;
    // refinement pass on what the first solves left, down to round-off of
    // the original right-hand sides
    let rot = base.clone().with_rtol(1e-6).with_atol(1e-15 * rot_rhs);
    let div = base.with_rtol(1e-6).with_atol(1e-15 * div_rhs);
    strip(&h, &rot, &div)
}

/// Decomposition with a precomputed harmonic basis.
#[derive(Debug, Clone)]
pub struct HodgeDecomposer<'a> {
    dc: &'a DeRhamComplex,
    basis: [Field; 2],
}

impl<'a> HodgeDecomposer<'a> {
    pub fn new(dc: &'a DeRhamComplex) -> Result<Self> {
        Ok(Self {
            dc,
            basis: harmonic_basis(dc)?,
        })
    }

    pub fn basis(&self) -> &[Field; 2] {
        &self.basis
    }

    pub fn decompose(&self, u: &Field) -> Result<HelmholtzParts> {
        let dc = self.dc;
        dc.v1.check(u)?;
        if !u.is_finite() {
            return Err(Error::InvalidArgument("field has non-finite coefficients".into()));
        }
        let psi = stream_function(dc, u.coeffs())?;
        let rotational = dc.grad_perp.matvec(&psi);
        let mut harmonic = vec![0.0; dc.n1()];
        let mu = dc.m1.matvec(u.coeffs());
        for h in &self.basis {
            let a = dot(h.coeffs(), &mu);
            for (hi, v) in harmonic.iter_mut().zip(h.coeffs()) {
                *hi += a * v;
            }
        }
        let divergent = u
            .coeffs()
            .iter()
            .zip(&rotational)
            .zip(&harmonic)
            .map(|((u, r), h)| u - r - h)
            .collect();
        Ok(HelmholtzParts {
            psi: Field::new(Family::V0, psi),
            rotational: Field::new(Family::V1, rotational),
            harmonic: Field::new(Family::V1, harmonic),
            divergent: Field::new(Family::V1, divergent),
        })
    }
}

pub fn decompose(dc: &DeRhamComplex, u: &Field) -> Result<HelmholtzParts> {
    HodgeDecomposer::new(dc)?.decompose(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn basis_spans_constants_on_small_torus() {
        let dc = DeRhamComplex::build(4, 4, 1.0, 1.0).unwrap();
        let basis = harmonic_basis(&dc).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                let g = dc.inner_v1(basis[k].coeffs(), basis[l].coeffs());
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-12);
            }
        }
        for c in [[1.0, 0.0], [0.0, 1.0]] {
            let u = dc.v1.interpolate_vector(|_, _| c).unwrap();
            let mu = dc.m1.matvec(u.coeffs());
            let mut r = u.coeffs().to_vec();
            for h in &basis {
                let a = dot(h.coeffs(), &mu);
                for (ri, hi) in r.iter_mut().zip(h.coeffs()) {
                    *ri -= a * hi;
                }
            }
            assert!(norm(&r) < 1e-12 * norm(u.coeffs()));
        }
    }

    #[test]
    fn dimension_two_on_small_meshes() {
        for nx in 3..=8 {
            for ny in [3, 5, 8] {
                let dc = DeRhamComplex::build(nx, ny, 1.0, 1.0).unwrap();
                assert!(harmonic_basis(&dc).is_ok(), "{nx}x{ny}");
            }
        }
    }

    #[test]
    fn gradient_perp_recovers_stream_function() {
        let dc = DeRhamComplex::build(8, 8, 1.0, 1.0).unwrap();
        let mut psi = dc
            .v0
            .interpolate_scalar(|x, y| (2.0 * std::f64::consts::PI * x).sin() + (y - 0.5).powi(2))
            .unwrap()
            .into_coeffs();
        let m = psi.iter().sum::<f64>() / psi.len() as f64;
        psi.iter_mut().for_each(|v| *v -= m);
        let u = Field::new(Family::V1, dc.grad_perp.matvec(&psi));
        let parts = decompose(&dc, &u).unwrap();
        for (a, b) in parts.psi.coeffs().iter().zip(&psi) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(norm(parts.harmonic.coeffs()) < 1e-10 * norm(u.coeffs()));
        assert!(norm(parts.divergent.coeffs()) < 1e-10 * norm(u.coeffs()));
    }

    #[test]
    fn constant_field_is_harmonic() {
        let dc = DeRhamComplex::build(6, 6, 1.0, 1.0).unwrap();
        let u = dc.v1.interpolate_vector(|_, _| [2.0, -1.0]).unwrap();
        let parts = decompose(&dc, &u).unwrap();
        let err: Vec<f64> = parts
            .harmonic
            .coeffs()
            .iter()
            .zip(u.coeffs())
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&err) < 1e-10 * norm(u.coeffs()));
    }
}
