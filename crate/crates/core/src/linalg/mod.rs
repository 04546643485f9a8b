//! Krylov solvers, preconditioners and nonlinear drivers.

mod cg;
mod gmres;
mod newton;
mod schur;

pub use cg::{cg, pcg};
pub use gmres::{gmres, gmres_with_guess};
pub use newton::{newton, picard, NewtonConfig, NewtonReport, NonlinearSystem};
pub use schur::SchurPreconditioner;

use crate::assembly::SparseOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_iter: 2000,
            restart: 30,
            verbose: false,
        }
    }
}

impl SolverConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) || !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerances must be positive (rtol {}, atol {})",
                self.rtol, self.atol
            )));
        }
        if self.restart == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "restart length and iteration cap must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn target(&self, rhs_norm: f64) -> f64 {
        (self.rtol * rhs_norm).max(self.atol)
    }
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_norm: f64,
    /// Residual 2-norm after every iteration (including the initial one).
    pub residual_history: Vec<f64>,
    /// CG only: values of `x'Ax/2 - b'x`, which decrease with the A-norm error.
    pub energy_history: Vec<f64>,
}

/// Square linear map `x -> A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.matvec_into(x, y);
        Ok(())
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply(x, y)
    }
}

impl<T: Preconditioner + ?Sized> Preconditioner for &T {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        (**self).apply(r, z)
    }
}

/// Operator defined by a closure.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) -> Result<()>> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) -> Result<()>> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (self.f)(x, y)
    }
}

/// Preconditioner defined by a closure.
pub struct FnPreconditioner<F>(pub F);

impl<F: Fn(&[f64], &mut [f64]) -> Result<()>> Preconditioner for FnPreconditioner<F> {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        (self.0)(r, z)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

/// Diagonal scaling by the inverse of a given diagonal.
#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let inv_diag = diag
            .iter()
            .map(|&d| {
                if d == 0.0 || !d.is_finite() {
                    Err(Error::InvalidArgument(format!("Jacobi diagonal entry {d}")))
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }

    pub fn new(a: &SparseOperator) -> Result<Self> {
        Self::from_diagonal(&a.diagonal_entries())
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Solve an SPD system with Jacobi-preconditioned CG.
pub fn solve_spd(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    let pc = JacobiPreconditioner::new(a)?;
    pcg(a, &pc, b, None, config).map(|(x, _)| x)
}
