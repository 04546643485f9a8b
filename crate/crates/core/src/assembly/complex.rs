use std::sync::Arc;

use super::{
    div_matrix, grad_perp, incidence_matrix, mass_matrix, mass_solve_config, stiffness_matrix,
    SparseOperator,
};
use crate::error::Result;
use crate::fespace::{CellTabulation, Family, FunctionSpace, Quadrature};
use crate::linalg::{dot, pcg, JacobiPreconditioner, SolverConfig};
use crate::mesh::PeriodicQuadMesh;

/// The three spaces of the complex on one mesh together with the operators
/// every model needs. Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone)]
pub struct DeRhamComplex {
    pub v0: FunctionSpace,
    pub v1: FunctionSpace,
    pub v2: FunctionSpace,
    pub tab: CellTabulation,
    pub m0: SparseOperator,
    pub m1: SparseOperator,
    /// Row sums of `m1`.
    pub m1_lumped: Vec<f64>,
    pub stiffness: SparseOperator,
    pub grad_perp: SparseOperator,
    pub div: SparseOperator,
    /// Signed incidence, `area * div`.
    pub incidence: SparseOperator,
    pub incidence_t: SparseOperator,
    m0_pc: JacobiPreconditioner,
    m1_pc: JacobiPreconditioner,
    mass_config: SolverConfig,
}

impl DeRhamComplex {
    pub fn new(mesh: PeriodicQuadMesh) -> Result<Self> {
        let mesh = Arc::new(mesh);
        let v0 = FunctionSpace::new(mesh.clone(), Family::V0);
        let v1 = FunctionSpace::new(mesh.clone(), Family::V1);
        let v2 = FunctionSpace::new(mesh.clone(), Family::V2);
        let tab = CellTabulation::new(&mesh, Quadrature::DEFAULT_ORDER)?;
        let m0 = mass_matrix(&v0);
        let m1 = mass_matrix(&v1);
        let m1_lumped = m1.row_sums();
        let stiffness = stiffness_matrix(&v0)?;
        let grad_perp = grad_perp(&v0, &v1)?;
        let div = div_matrix(&v1, &v2)?;
        let incidence = incidence_matrix(&v1, &v2)?;
        let incidence_t = incidence.transpose();
        let m0_pc = JacobiPreconditioner::new(&m0)?;
        let m1_pc = JacobiPreconditioner::new(&m1)?;
        Ok(Self {
            v0,
            v1,
            v2,
            tab,
            m0,
            m1,
            m1_lumped,
            stiffness,
            grad_perp,
            div,
            incidence,
            incidence_t,
            m0_pc,
            m1_pc,
            mass_config: mass_solve_config(),
        })
    }

    pub fn build(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(PeriodicQuadMesh::build(nx, ny, lx, ly)?)?))
    }

    pub fn mesh(&self) -> &PeriodicQuadMesh {
        self.v0.mesh()
    }

    pub fn area(&self) -> f64 {
        self.mesh().cell_area()
    }

    pub fn n0(&self) -> usize {
        self.v0.ndofs()
    }

    pub fn n1(&self) -> usize {
        self.v1.ndofs()
    }

    pub fn n2(&self) -> usize {
        self.v2.ndofs()
    }

    pub fn space(&self, family: Family) -> &FunctionSpace {
        match family {
            Family::V0 => &self.v0,
            Family::V1 => &self.v1,
            Family::V2 => &self.v2,
        }
    }

    /// Solve `M1 x = rhs`.
    pub fn solve_m1(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        Ok(pcg(&self.m1, &self.m1_pc, rhs, None, &self.mass_config)?.0)
    }

    /// Solve `M0 x = rhs`.
    pub fn solve_m0(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        Ok(pcg(&self.m0, &self.m0_pc, rhs, None, &self.mass_config)?.0)
    }

    /// `⟨a, b⟩` for V1 coefficient vectors.
    pub fn inner_v1(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.m1.matvec(b))
    }

    /// `⟨a, b⟩` for V0 coefficient vectors.
    pub fn inner_v0(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.m0.matvec(b))
    }

    /// `⟨a, b⟩` for V2 coefficient vectors.
    pub fn inner_v2(&self, a: &[f64], b: &[f64]) -> f64 {
        self.area() * dot(a, b)
    }

    /// `∫ a` of a V0 coefficient vector; every Q1 basis function on the
    /// uniform torus integrates to one cell area.
    pub fn integral_v0(&self, a: &[f64]) -> f64 {
        self.area() * a.iter().sum::<f64>()
    }

    /// `∫ a` of a V2 coefficient vector.
    pub fn integral_v2(&self, a: &[f64]) -> f64 {
        self.area() * a.iter().sum::<f64>()
    }

    /// Cell means `P2 ψ` of a V0 field.
    pub fn project_v0_to_v2(&self, psi: &[f64]) -> Vec<f64> {
        let mesh = self.mesh();
        mesh.cells()
            .map(|c| {
                mesh.cell_vertices(c).iter().map(|v| psi[v.0]).sum::<f64>() * 0.25
            })
            .collect()
    }

    /// Mass solve settings used by [`solve_m0`](Self::solve_m0) and
    /// [`solve_m1`](Self::solve_m1).
    pub fn mass_config(&self) -> &SolverConfig {
        &self.mass_config
    }
}
