use super::{gmres, norm, FnOperator, FnPreconditioner, SolverConfig};
use crate::error::{Error, Result};

/// A nonlinear system `R(x) = 0` with a matrix-free Jacobian.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;

    fn residual(&self, x: &[f64], r: &mut [f64]) -> Result<()>;

    /// Make `x` the linearization point for subsequent Jacobian and
    /// preconditioner applications.
    fn linearize(&mut self, x: &[f64]) -> Result<()>;

    /// `jv = R'(x) v` at the current linearization point.
    fn jacobian_action(&self, v: &[f64], jv: &mut [f64]) -> Result<()>;

    /// Approximate inverse of the Jacobian; identity by default.
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    /// Inner GMRES settings; its `rtol` is relative to the current residual.
    pub linear: SolverConfig,
    /// A residual that stops decreasing by this factor is treated as the
    /// round-off floor once it is already below `floor_rtol` relative.
    pub stall_ratio: f64,
    pub floor_rtol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_iter: 20,
            linear: SolverConfig {
                rtol: 1e-9,
                atol: 1e-300,
                max_iter: 500,
                restart: 30,
                verbose: false,
            },
            stall_ratio: 0.5,
            floor_rtol: 1e-9,
        }
    }
}

impl NewtonConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub linear_iterations: usize,
}

/// Inexact Newton–Krylov.
///
/// Stops when `|R| <= max(rtol |R(x0)|, atol)`. When the residual has already
/// dropped below `floor_rtol |R(x0)|` and a further step fails to reduce it
/// by `stall_ratio`, the round-off floor has been reached and the iterate is
/// accepted. A growing or non-finite residual is reported as divergence.
pub fn newton(
    system: &mut impl NonlinearSystem,
    x0: &[f64],
    config: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)> {
    let n = system.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    system.residual(&x, &mut r)?;
    let r0 = norm(&r);
    let target = (config.rtol * r0).max(config.atol);
    let mut report = NewtonReport {
        residual_norm: r0,
        ..Default::default()
    };
    let mut rnorm = r0;
    if !rnorm.is_finite() {
        return Err(Error::Diverged {
            solver: "newton",
            residual: rnorm,
        });
    }
    while rnorm > target {
        if report.iterations >= config.max_iter {
            return Err(Error::NotConverged {
                solver: "newton",
                iterations: report.iterations,
                residual: rnorm,
                target,
            });
        }
        system.linearize(&x)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut lin = config.linear.clone();
        // no point solving the correction more accurately than needed
        lin.atol = lin.atol.max(0.1 * target);
        let (dx, lrep) = {
            let sys = &*system;
            let op = FnOperator::new(n, |v: &[f64], y: &mut [f64]| sys.jacobian_action(v, y));
            let pc = FnPreconditioner(|v: &[f64], z: &mut [f64]| sys.precondition(v, z));
            gmres(&op, &pc, &rhs, &lin)?
        };
        report.linear_iterations += lrep.iterations;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        system.residual(&x, &mut r)?;
        let new_norm = norm(&r);
        report.iterations += 1;
        report.residual_norm = new_norm;
        if !new_norm.is_finite() || new_norm > 1e3 * r0.max(config.atol) {
            return Err(Error::Diverged {
                solver: "newton",
                residual: new_norm,
            });
        }
        let stalled = new_norm > config.stall_ratio * rnorm;
        rnorm = new_norm;
        if stalled && rnorm <= config.floor_rtol * r0 {
            break;
        }
    }
    report.converged = true;
    Ok((x, report))
}

/// Apply `update` exactly `k_max` times starting from `x0`.
pub fn picard<F>(mut update: F, x0: &[f64], k_max: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if k_max == 0 {
        return Err(Error::InvalidArgument("Picard count must be at least 1".into()));
    }
    let mut x = x0.to_vec();
    for _ in 0..k_max {
        x = update(&x)?;
    }
    Ok(x)
}
