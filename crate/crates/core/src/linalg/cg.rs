use super::{axpy, dot, norm, LinearOperator, Preconditioner, SolveReport, SolverConfig};
use crate::assembly::SparseOperator;
use crate::error::{Error, Result};

/// Unpreconditioned CG on an assembled SPD matrix.
pub fn cg(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    pcg(a, &super::IdentityPreconditioner, b, None, config).map(|(x, _)| x)
}

/// Preconditioned conjugate gradients.
///
/// Converged when the true residual satisfies `|b - Ax| <= max(rtol |b|, atol)`.
/// The recursively updated residual is re-synchronised with the true one
/// whenever it claims convergence.
pub fn pcg(
    a: &impl LinearOperator,
    pc: &impl Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
            })
        }
        None => vec![0.0; n],
    };
    let target = config.target(norm(b));
    let mut report = SolveReport::default();

    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut [f64], ap: &mut [f64]| -> Result<()> {
        a.apply(x, ap)?;
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        Ok(())
    };
    true_residual(&x, &mut r, &mut ap)?;
    let mut energy = -0.5 * (dot(&x, b) + dot(&x, &r));
    let mut rnorm = norm(&r);
    report.residual_history.push(rnorm);
    report.energy_history.push(energy);

    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut resyncs = 0;
    let mut fresh = true;
    let mut rz = 0.0;
    let mut it = 0;
    loop {
        if rnorm <= target {
            // confirm against the true residual
            true_residual(&x, &mut r, &mut ap)?;
            let true_norm = norm(&r);
            if true_norm <= target || resyncs >= 3 {
                report.iterations = it;
                report.residual_norm = true_norm;
                if true_norm <= target {
                    return Ok((x, report));
                }
                return Err(Error::Stagnation {
                    solver: "cg",
                    iterations: it,
                    residual: true_norm,
                });
            }
            resyncs += 1;
            rnorm = true_norm;
            fresh = true;
        }
        if it >= config.max_iter {
            return Err(Error::NotConverged {
                solver: "cg",
                iterations: it,
                residual: rnorm,
                target,
            });
        }
        pc.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        if fresh {
            p.copy_from_slice(&z);
            fresh = false;
        } else {
            let beta = rz_new / rz;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        rz = rz_new;
        a.apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::Breakdown("cg: operator is not positive definite"));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        energy -= 0.5 * alpha * rz;
        rnorm = norm(&r);
        it += 1;
        report.residual_history.push(rnorm);
        report.energy_history.push(energy);
        if config.verbose {
            eprintln!("cg {it:4} {rnorm:.3e}");
        }
    }
}
