//! Assembled bilinear forms and exact maps of the complex.

mod complex;
pub mod kernels;
mod sparse;

pub use complex::DeRhamComplex;
pub use sparse::SparseOperator;

use crate::error::{Error, Result};
use crate::fespace::{CellTabulation, Family, Field, FunctionSpace, Quadrature};
use crate::linalg::{pcg, JacobiPreconditioner, SolverConfig};
use crate::mesh::{EdgeAxis, PeriodicQuadMesh};

use kernels::{dot2, perp};

/// A scalar coefficient: either one constant or a field in V0/V2.
#[derive(Debug, Clone, Copy)]
pub enum Coefficient<'a> {
    Constant(f64),
    Field(&'a FunctionSpace, &'a Field),
}

impl Coefficient<'_> {
    fn check(&self) -> Result<()> {
        if let Coefficient::Field(space, field) = self {
            space.check(field)?;
            if space.family() == Family::V1 {
                return Err(Error::InvalidArgument("coefficient must be scalar".into()));
            }
        }
        Ok(())
    }

    fn at(&self, tab: &CellTabulation, c: crate::mesh::CellId, q: usize) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Field(space, field) => match space.family() {
                Family::V2 => field.coeffs()[c.0],
                _ => kernels::v0_value(tab, q, &kernels::gather(space, field.coeffs(), c)),
            },
        }
    }
}

fn same_mesh(a: &FunctionSpace, b: &FunctionSpace) -> Result<()> {
    if a.mesh() != b.mesh() {
        return Err(Error::InvalidArgument("spaces live on different meshes".into()));
    }
    Ok(())
}

fn expect_family(space: &FunctionSpace, family: Family) -> Result<()> {
    if space.family() != family {
        return Err(Error::InvalidArgument(format!(
            "expected a {} space, got {}",
            family.name(),
            space.family().name()
        )));
    }
    Ok(())
}

fn tabulate(mesh: &PeriodicQuadMesh) -> CellTabulation {
    CellTabulation::new(mesh, Quadrature::DEFAULT_ORDER).expect("default quadrature order is valid")
}

/// Assemble a 4x4-per-cell form on (V0 or V1) x (V0 or V1), applying the
/// orientation signs of both spaces.
fn assemble_local(
    rows: &FunctionSpace,
    cols: &FunctionSpace,
    mut local: impl FnMut(crate::mesh::CellId, &mut [[f64; 4]; 4]),
) -> SparseOperator {
    let mesh = rows.mesh();
    let mut t = Vec::with_capacity(16 * mesh.num_cells());
    for c in mesh.cells() {
        let mut a = [[0.0; 4]; 4];
        local(c, &mut a);
        let (rd, rs) = (rows.cell_dofs(c), rows.cell_signs(c));
        let (cd, cs) = (cols.cell_dofs(c), cols.cell_signs(c));
        for k in 0..4 {
            for l in 0..4 {
                t.push((rd[k], cd[l], rs[k] * cs[l] * a[k][l]));
            }
        }
    }
    SparseOperator::from_triplets(rows.ndofs(), cols.ndofs(), t).expect("DOF maps are in range")
}

pub fn mass_matrix(space: &FunctionSpace) -> SparseOperator {
    match space.family() {
        Family::V2 => SparseOperator::diagonal(&vec![space.mesh().cell_area(); space.ndofs()]),
        Family::V0 => weighted_mass_unchecked(space, Coefficient::Constant(1.0)),
        Family::V1 => weighted_mass_unchecked(space, Coefficient::Constant(1.0)),
    }
}

fn weighted_mass_unchecked(space: &FunctionSpace, w: Coefficient) -> SparseOperator {
    let tab = tabulate(space.mesh());
    let vector = space.family() == Family::V1;
    assemble_local(space, space, |c, a| {
        for q in 0..tab.num_points() {
            let wq = tab.jxw[q] * w.at(&tab, c, q);
            for k in 0..4 {
                for l in 0..4 {
                    a[k][l] += wq
                        * if vector {
                            dot2(tab.v1[q][k], tab.v1[q][l])
                        } else {
                            tab.v0[q][k] * tab.v0[q][l]
                        };
                }
            }
        }
    })
}

/// `⟨γ_i, D γ_j⟩` on V0 for a cellwise depth `D ∈ V2`.
pub fn weighted_v0_mass(v0: &FunctionSpace, v2: &FunctionSpace, depth: &Field) -> Result<SparseOperator> {
    expect_family(v0, Family::V0)?;
    expect_family(v2, Family::V2)?;
    same_mesh(v0, v2)?;
    check_positive(v2, depth)?;
    Ok(weighted_mass_unchecked(v0, Coefficient::Field(v2, depth)))
}

/// `⟨w_i, D w_j⟩` on V1 for a cellwise depth `D ∈ V2`.
pub fn weighted_v1_mass(v1: &FunctionSpace, v2: &FunctionSpace, depth: &Field) -> Result<SparseOperator> {
    expect_family(v1, Family::V1)?;
    expect_family(v2, Family::V2)?;
    same_mesh(v1, v2)?;
    v2.check(depth)?;
    Ok(weighted_mass_unchecked(v1, Coefficient::Field(v2, depth)))
}

pub(crate) fn check_positive(v2: &FunctionSpace, depth: &Field) -> Result<()> {
    v2.check(depth)?;
    if let Some((cell, &value)) = depth
        .coeffs()
        .iter()
        .enumerate()
        .find(|(_, &d)| !(d > 0.0 && d.is_finite()))
    {
        return Err(Error::NonPositiveDepth { cell, value });
    }
    Ok(())
}

/// `⟨∇γ_i, ∇γ_j⟩` on V0.
pub fn stiffness_matrix(v0: &FunctionSpace) -> Result<SparseOperator> {
    expect_family(v0, Family::V0)?;
    let tab = tabulate(v0.mesh());
    Ok(assemble_local(v0, v0, |_, a| {
        for q in 0..tab.num_points() {
            for k in 0..4 {
                for l in 0..4 {
                    a[k][l] += tab.jxw[q] * dot2(tab.v0_grad[q][k], tab.v0_grad[q][l]);
                }
            }
        }
    }))
}

/// Exact `∇⊥ : V0 -> V1` on coefficients.
///
/// The flux of `∇⊥ψ = (-∂yψ, ∂xψ)` through an edge is the difference of the
/// vertex values at its ends.
pub fn grad_perp(v0: &FunctionSpace, v1: &FunctionSpace) -> Result<SparseOperator> {
    expect_family(v0, Family::V0)?;
    expect_family(v1, Family::V1)?;
    same_mesh(v0, v1)?;
    let mesh = v0.mesh();
    let mut t = Vec::with_capacity(2 * mesh.num_edges());
    for e in mesh.edges() {
        let (axis, i, j) = mesh.edge_coords(e);
        let (i, j) = (i as isize, j as isize);
        let (start, end) = match axis {
            // x-normal edge from (i+1, j) up to (i+1, j+1)
            EdgeAxis::X => (mesh.vertex(i + 1, j), mesh.vertex(i + 1, j + 1)),
            // y-normal edge from (i, j+1) right to (i+1, j+1)
            EdgeAxis::Y => (mesh.vertex(i + 1, j + 1), mesh.vertex(i, j + 1)),
        };
        t.push((e.0, start.0, 1.0));
        t.push((e.0, end.0, -1.0));
    }
    SparseOperator::from_triplets(v1.ndofs(), v0.ndofs(), t)
}

/// Signed edge-cell incidence `B`: `(B u)_c` is the net outward flux of `u`
/// from cell `c`. Equals `⟨φ_c, ∇·w_e⟩` for the unit cell indicators `φ_c`.
pub fn incidence_matrix(v1: &FunctionSpace, v2: &FunctionSpace) -> Result<SparseOperator> {
    expect_family(v1, Family::V1)?;
    expect_family(v2, Family::V2)?;
    same_mesh(v1, v2)?;
    let mesh = v1.mesh();
    let mut t = Vec::with_capacity(2 * mesh.num_edges());
    for e in mesh.edges() {
        let (plus, minus) = mesh.edge_cells(e)?;
        t.push((plus.0, e.0, 1.0));
        t.push((minus.0, e.0, -1.0));
    }
    SparseOperator::from_triplets(v2.ndofs(), v1.ndofs(), t)
}

/// Exact `∇· : V1 -> V2` on coefficients (cell means of the divergence).
pub fn div_matrix(v1: &FunctionSpace, v2: &FunctionSpace) -> Result<SparseOperator> {
    Ok(incidence_matrix(v1, v2)?.scaled(1.0 / v1.mesh().cell_area()))
}

/// `W_ij = ⟨w_i, f w_j⊥⟩` with `v⊥ = (-v_y, v_x)`, so that the Coriolis
/// term of the momentum equation reads `M1 u̇ = -W u + ...`.
pub fn coriolis_matrix(v1: &FunctionSpace, f: Coefficient) -> Result<SparseOperator> {
    expect_family(v1, Family::V1)?;
    f.check()?;
    if let Coefficient::Field(space, _) = f {
        same_mesh(v1, space)?;
    }
    let tab = tabulate(v1.mesh());
    Ok(assemble_local(v1, v1, |c, a| {
        for q in 0..tab.num_points() {
            let wq = tab.jxw[q] * f.at(&tab, c, q);
            if wq == 0.0 {
                continue;
            }
            for k in 0..4 {
                for l in 0..4 {
                    a[k][l] += wq * dot2(tab.v1[q][k], perp(tab.v1[q][l]));
                }
            }
        }
    }))
}

fn mass_solve_config() -> SolverConfig {
    SolverConfig {
        rtol: 1e-14,
        atol: 1e-300,
        max_iter: 2000,
        restart: 30,
        verbose: false,
    }
}

/// L2 projection of `field ∈ source` into `target`.
///
/// Supported pairs: any scalar space into V0 or V2, and V1 into V1.
pub fn l2_project(source: &FunctionSpace, field: &Field, target: &FunctionSpace) -> Result<Field> {
    source.check(field)?;
    same_mesh(source, target)?;
    if source.family() == target.family() {
        return Ok(field.clone());
    }
    if source.family() == Family::V1 || target.family() == Family::V1 {
        return Err(Error::InvalidArgument(format!(
            "cannot project {} into {}",
            source.family().name(),
            target.family().name()
        )));
    }
    let mesh = source.mesh();
    let tab = tabulate(mesh);
    let coefficient = Coefficient::Field(source, field);
    // right-hand side ⟨φ_i, field⟩
    let mut rhs = vec![0.0; target.ndofs()];
    for c in mesh.cells() {
        for q in 0..tab.num_points() {
            let v = tab.jxw[q] * coefficient.at(&tab, c, q);
            match target.family() {
                Family::V2 => rhs[c.0] += v,
                _ => {
                    let mut loc = [0.0; 4];
                    for (k, l) in loc.iter_mut().enumerate() {
                        *l = v * tab.v0[q][k];
                    }
                    kernels::scatter(target, c, &loc, &mut rhs);
                }
            }
        }
    }
    let coeffs = match target.family() {
        Family::V2 => {
            let area = mesh.cell_area();
            rhs.iter().map(|r| r / area).collect()
        }
        _ => {
            let m = mass_matrix(target);
            let pc = JacobiPreconditioner::new(&m)?;
            pcg(&m, &pc, &rhs, None, &mass_solve_config())?.0
        }
    };
    Ok(Field::new(target.family(), coeffs))
}
