use super::{axpy, dot, norm, LinearOperator, Preconditioner, SolveReport, SolverConfig};
use crate::error::{Error, Result};

/// Minimum relative residual reduction a restart cycle must achieve.
const CYCLE_PROGRESS: f64 = 1e-3;

pub fn gmres(
    a: &impl LinearOperator,
    pc: &impl Preconditioner,
    b: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    gmres_with_guess(a, pc, b, None, config)
}

/// Flexible restarted GMRES with right preconditioning.
///
/// The preconditioner may change between iterations (inner Krylov solves),
/// so the preconditioned directions are stored alongside the Arnoldi basis.
/// A restart cycle that fails to reduce the true residual is reported as
/// [`Error::Stagnation`]; exhausting `max_iter` as [`Error::NotConverged`].
pub fn gmres_with_guess(
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
    let m = config.restart;
    let target = config.target(norm(b));
    let mut report = SolveReport::default();
    let mut total = 0usize;
    let mut previous_beta = f64::INFINITY;

    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(m);
    // Hessenberg matrix stored by columns
    let mut h = vec![vec![0.0; m + 1]; m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];

    loop {
        a.apply(&x, &mut w)?;
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        let beta = norm(&r);
        if !beta.is_finite() {
            return Err(Error::Diverged {
                solver: "gmres",
                residual: beta,
            });
        }
        report.residual_history.push(beta);
        report.iterations = total;
        report.residual_norm = beta;
        if beta <= target {
            return Ok((x, report));
        }
        if total >= config.max_iter {
            return Err(Error::NotConverged {
                solver: "gmres",
                iterations: total,
                residual: beta,
                target,
            });
        }
        if beta > (1.0 - CYCLE_PROGRESS) * previous_beta {
            return Err(Error::Stagnation {
                solver: "gmres",
                iterations: total,
                residual: beta,
            });
        }
        previous_beta = beta;

        basis.clear();
        dirs.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            let mut z = vec![0.0; n];
            pc.apply(&basis[j], &mut z)?;
            a.apply(&z, &mut w)?;
            dirs.push(z);
            // modified Gram-Schmidt, two passes
            let col = &mut h[j];
            col.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let hn = norm(&w);
            col[j + 1] = hn;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[j].hypot(col[j + 1]);
            if rho == 0.0 {
                return Err(Error::Breakdown("gmres: singular Hessenberg matrix"));
            }
            cs[j] = col[j] / rho;
            sn[j] = col[j + 1] / rho;
            col[j] = rho;
            col[j + 1] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            total += 1;
            k = j + 1;
            let est = g[j + 1].abs();
            report.residual_history.push(est);
            if config.verbose {
                eprintln!("gmres {total:4} {est:.3e}");
            }
            if est <= target || hn <= 1e-300 || total >= config.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }

        // back substitution on the triangular k x k system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= h[l][i] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&dirs) {
            axpy(*yi, z, &mut x);
        }
    }
}
