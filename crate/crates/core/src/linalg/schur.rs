use super::{pcg, JacobiPreconditioner, Preconditioner, SolverConfig};
use crate::assembly::SparseOperator;
use crate::error::{Error, Result};

/// Approximate block inverse for saddle-point systems of the form
///
/// ```text
/// [ M1 + (rotation)   -c Bᵀ   ] [u]   [r_u]
/// [ d B                diag(a) ] [η] = [r_η]
/// ```
///
/// with `u` ordered first. The velocity mass is replaced by its row-sum
/// lumping `Ml` and the rotation term is dropped, so that eliminating `u`
/// leaves the Helmholtz problem `(diag(a) + c d B Ml⁻¹ Bᵀ) η = r_η - d B Ml⁻¹ r_u`,
/// solved with Jacobi-preconditioned CG; `u` follows by back-substitution.
#[derive(Debug, Clone)]
pub struct SchurPreconditioner {
    inv_lumped: Vec<f64>,
    b: SparseOperator,
    bt: SparseOperator,
    c: f64,
    d: f64,
    helmholtz: SparseOperator,
    helmholtz_pc: JacobiPreconditioner,
    inner: SolverConfig,
}

impl SchurPreconditioner {
    /// `lumped_m1`: row sums of the velocity mass; `b`: the `V2 x V1`
    /// integrated divergence (incidence) matrix; `a`: the height-row diagonal.
    pub fn new(lumped_m1: &[f64], b: &SparseOperator, c: f64, d: f64, a: &[f64]) -> Result<Self> {
        if b.ncols() != lumped_m1.len() || b.nrows() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: b.ncols(),
                actual: lumped_m1.len(),
            });
        }
        if let Some(bad) = lumped_m1.iter().find(|&&m| !(m > 0.0)) {
            return Err(Error::InvalidArgument(format!("lumped mass entry {bad} is not positive")));
        }
        if !(c * d >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling coefficients c = {c}, d = {d} give an indefinite Schur complement"
            )));
        }
        let inv_lumped: Vec<f64> = lumped_m1.iter().map(|m| 1.0 / m).collect();
        let bt = b.transpose();
        let laplacian = b.scale_rows_cols(None, Some(&inv_lumped)).matmul(&bt)?;
        let helmholtz = SparseOperator::diagonal(a).add_scaled(c * d, &laplacian)?;
        let helmholtz_pc = JacobiPreconditioner::new(&helmholtz)?;
        Ok(Self {
            inv_lumped,
            b: b.clone(),
            bt,
            c,
            d,
            helmholtz,
            helmholtz_pc,
            inner: SolverConfig {
                rtol: 1e-10,
                atol: 1e-300,
                max_iter: 1000,
                restart: 30,
                verbose: false,
            },
        })
    }

    pub fn with_inner_config(mut self, inner: SolverConfig) -> Self {
        self.inner = inner;
        self
    }

    pub fn velocity_dim(&self) -> usize {
        self.inv_lumped.len()
    }

    pub fn dim(&self) -> usize {
        self.inv_lumped.len() + self.b.nrows()
    }

    pub fn helmholtz(&self) -> &SparseOperator {
        &self.helmholtz
    }
}

impl Preconditioner for SchurPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let nu = self.velocity_dim();
        if r.len() != self.dim() || z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: r.len(),
            });
        }
        let (ru, reta) = r.split_at(nu);
        let mlr: Vec<f64> = ru.iter().zip(&self.inv_lumped).map(|(a, b)| a * b).collect();
        let mut rhs = reta.to_vec();
        self.b.matvec_add(-self.d, &mlr, &mut rhs);
        let eta = if rhs.iter().all(|&v| v == 0.0) {
            vec![0.0; rhs.len()]
        } else {
            pcg(&self.helmholtz, &self.helmholtz_pc, &rhs, None, &self.inner)?.0
        };
        let mut tu = ru.to_vec();
        self.bt.matvec_add(self.c, &eta, &mut tu);
        let (zu, zeta) = z.split_at_mut(nu);
        for i in 0..nu {
            zu[i] = tu[i] * self.inv_lumped[i];
        }
        zeta.copy_from_slice(&eta);
        Ok(())
    }
}
