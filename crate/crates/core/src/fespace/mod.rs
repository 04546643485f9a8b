//! Function spaces of the discrete de Rham complex `V0 -> V1 -> V2` and
//! the coefficient fields that live on them.
//!
//! Degrees of freedom:
//! - V0: vertex values,
//! - V1: total normal flux through each edge along its global normal,
//! - V2: cell means.

pub mod quadrature;
pub mod reference;
pub mod tabulation;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{CellId, EdgeAxis, EdgeId, PeriodicQuadMesh};

pub use quadrature::{GaussRule1d, Quadrature};
pub use reference::{Family, ReferenceElement};
pub use tabulation::CellTabulation;

use reference::{q1_values, rt0_values};

#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<PeriodicQuadMesh>,
    family: Family,
    ndofs: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
}

pub fn make_space(mesh: Arc<PeriodicQuadMesh>, family: Family) -> FunctionSpace {
    FunctionSpace::new(mesh, family)
}

impl FunctionSpace {
    pub fn new(mesh: Arc<PeriodicQuadMesh>, family: Family) -> Self {
        let ld = family.local_dofs();
        let mut dofs = Vec::with_capacity(mesh.num_cells() * ld);
        let mut signs = Vec::with_capacity(mesh.num_cells() * ld);
        for c in mesh.cells() {
            match family {
                Family::V0 => {
                    dofs.extend(mesh.cell_vertices(c).iter().map(|v| v.0));
                    signs.extend([1.0; 4]);
                }
                Family::V1 => {
                    dofs.extend(mesh.cell_edges(c).iter().map(|e| e.0));
                    signs.extend(crate::mesh::LocalEdge::ALL.map(|e| e.orientation()));
                }
                Family::V2 => {
                    dofs.push(c.0);
                    signs.push(1.0);
                }
            }
        }
        let ndofs = match family {
            Family::V0 => mesh.num_vertices(),
            Family::V1 => mesh.num_edges(),
            Family::V2 => mesh.num_cells(),
        };
        Self {
            mesh,
            family,
            ndofs,
            dofs,
            signs,
        }
    }

    pub fn mesh(&self) -> &PeriodicQuadMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<PeriodicQuadMesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn local_dofs(&self) -> usize {
        self.family.local_dofs()
    }

    pub fn cell_dofs(&self, c: CellId) -> &[usize] {
        let ld = self.local_dofs();
        &self.dofs[c.0 * ld..(c.0 + 1) * ld]
    }

    /// Orientation signs of the local basis relative to the global one;
    /// only V1 has non-trivial signs.
    pub fn cell_signs(&self, c: CellId) -> &[f64] {
        let ld = self.local_dofs();
        &self.signs[c.0 * ld..(c.0 + 1) * ld]
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(self.family, self.ndofs)
    }

    pub fn check(&self, field: &Field) -> Result<()> {
        if field.family != self.family {
            return Err(Error::InvalidArgument(format!(
                "field lives in {} but the space is {}",
                field.family.name(),
                self.family.name()
            )));
        }
        if field.coeffs.len() != self.ndofs {
            return Err(Error::DimensionMismatch {
                expected: self.ndofs,
                actual: field.coeffs.len(),
            });
        }
        Ok(())
    }

    /// Interpolate a scalar function (V0 nodal values, V2 cell means).
    pub fn interpolate_scalar(&self, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.interpolate_scalar_with_order(f, Quadrature::DEFAULT_ORDER)
    }

    pub fn interpolate_scalar_with_order(
        &self,
        f: impl Fn(f64, f64) -> f64,
        order: usize,
    ) -> Result<Field> {
        let mesh = &*self.mesh;
        match self.family {
            Family::V0 => {
                let coeffs = (0..mesh.num_vertices())
                    .map(|v| {
                        let p = mesh.vertex_position(crate::mesh::VertexId(v));
                        f(p[0], p[1])
                    })
                    .collect();
                Ok(Field::new(Family::V0, coeffs))
            }
            Family::V2 => {
                let quad = Quadrature::tensor(order)?;
                let coeffs = mesh
                    .cells()
                    .map(|c| {
                        quad.points
                            .iter()
                            .zip(&quad.weights)
                            .map(|(&xi, &w)| {
                                let p = mesh.map_point(c, xi);
                                w * f(p[0], p[1])
                            })
                            .sum()
                    })
                    .collect();
                Ok(Field::new(Family::V2, coeffs))
            }
            Family::V1 => Err(Error::InvalidArgument(
                "V1 interpolation needs a vector-valued function".into(),
            )),
        }
    }

    /// Interpolate a vector function into V1 by edge flux quadrature.
    pub fn interpolate_vector(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Field> {
        self.interpolate_vector_with_order(f, Quadrature::DEFAULT_ORDER)
    }

    pub fn interpolate_vector_with_order(
        &self,
        f: impl Fn(f64, f64) -> [f64; 2],
        order: usize,
    ) -> Result<Field> {
        if self.family != Family::V1 {
            return Err(Error::InvalidArgument(format!(
                "vector interpolation into {}",
                self.family.name()
            )));
        }
        let rule = GaussRule1d::new(order)?;
        let mesh = &*self.mesh;
        let coeffs = mesh
            .edges()
            .map(|e| edge_flux(mesh, e, &rule, &f))
            .collect();
        Ok(Field::new(Family::V1, coeffs))
    }

    /// Evaluate a field at a point of the (periodically folded) domain.
    pub fn evaluate(&self, field: &Field, point: [f64; 2]) -> Result<Value> {
        self.check(field)?;
        let (c, xi) = self.mesh.locate(point);
        Ok(self.evaluate_in_cell(field, c, xi))
    }

    pub fn evaluate_in_cell(&self, field: &Field, c: CellId, xi: [f64; 2]) -> Value {
        let dofs = self.cell_dofs(c);
        let signs = self.cell_signs(c);
        match self.family {
            Family::V0 => {
                let n = q1_values(xi);
                Value::Scalar((0..4).map(|k| n[k] * field.coeffs[dofs[k]]).sum())
            }
            Family::V1 => {
                let phi = tabulation::piola(rt0_values(xi), self.mesh.dx(), self.mesh.dy());
                let mut v = [0.0; 2];
                for k in 0..4 {
                    let a = signs[k] * field.coeffs[dofs[k]];
                    v[0] += a * phi[k][0];
                    v[1] += a * phi[k][1];
                }
                Value::Vector(v)
            }
            Family::V2 => Value::Scalar(field.coeffs[dofs[0]]),
        }
    }
}

fn edge_flux(
    mesh: &PeriodicQuadMesh,
    e: EdgeId,
    rule: &GaussRule1d,
    f: &impl Fn(f64, f64) -> [f64; 2],
) -> f64 {
    let (axis, i, j) = mesh.edge_coords(e);
    let (i, j) = (i as f64, j as f64);
    match axis {
        EdgeAxis::X => {
            let x = (i + 1.0) * mesh.dx();
            rule.integrate(j * mesh.dy(), (j + 1.0) * mesh.dy(), |y| f(x, y)[0])
        }
        EdgeAxis::Y => {
            let y = (j + 1.0) * mesh.dy();
            rule.integrate(i * mesh.dx(), (i + 1.0) * mesh.dx(), |x| f(x, y)[1])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector([f64; 2]),
}

impl Value {
    pub fn scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(s) => Some(s),
            Value::Vector(_) => None,
        }
    }

    pub fn vector(self) -> Option<[f64; 2]> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }
}

/// Coefficient vector tagged with the family of the space it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    family: Family,
    coeffs: Vec<f64>,
}

impl Field {
    pub fn new(family: Family, coeffs: Vec<f64>) -> Self {
        Self { family, coeffs }
    }

    pub fn zeros(family: Family, n: usize) -> Self {
        Self::new(family, vec![0.0; n])
    }

    pub fn constant(family: Family, n: usize, value: f64) -> Self {
        Self::new(family, vec![value; n])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::new(self.family, self.coeffs.iter().map(|c| a * c).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.family != other.family || self.len() != other.len() {
            return Err(Error::InvalidArgument(format!(
                "incompatible fields {}[{}] and {}[{}]",
                self.family.name(),
                self.len(),
                other.family.name(),
                other.len()
            )));
        }
        Ok(Field::new(
            self.family,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Arc<PeriodicQuadMesh> {
        Arc::new(PeriodicQuadMesh::build(nx, ny, lx, ly).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m3 = mesh(3, 3, 1.0, 1.0);
        assert_eq!(make_space(m3, Family::V1).ndofs(), 18);
        let m4 = mesh(4, 4, 1.0, 1.0);
        assert_eq!(make_space(m4.clone(), Family::V0).ndofs(), 16);
        assert_eq!(make_space(m4, Family::V2).ndofs(), 16);
    }

    #[test]
    fn interpolate_constants() {
        let m = mesh(4, 4, 1.0, 1.0);
        let v0 = make_space(m.clone(), Family::V0);
        assert!(v0.interpolate_scalar(|_, _| 1.0).unwrap().coeffs().iter().all(|&c| c == 1.0));

        // unit-length edges make the edge flux equal the normal component
        let m = mesh(3, 3, 3.0, 3.0);
        let v1 = make_space(m.clone(), Family::V1);
        let u = v1.interpolate_vector(|_, _| [1.0, 0.0]).unwrap();
        for e in m.edges() {
            let expected = match m.edge_axis(e) {
                EdgeAxis::X => 1.0,
                EdgeAxis::Y => 0.0,
            };
            assert!((u.coeffs()[e.0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn v2_interpolation_matches_cell_means() {
        let m = mesh(4, 4, 1.0, 1.0);
        let v2 = make_space(m.clone(), Family::V2);
        // oracle: cell mean of sin(2 pi x) over [a, a + h] by a 20-point rule
        let oracle = GaussRule1d::new(20).unwrap();
        let high = v2.interpolate_scalar_with_order(|x, _| (2.0 * PI * x).sin(), 10).unwrap();
        let default = v2.interpolate_scalar(|x, _| (2.0 * PI * x).sin()).unwrap();
        for c in m.cells() {
            let a = m.cell_origin(c)[0];
            let mean = oracle.integrate(a, a + 0.25, |x| (2.0 * PI * x).sin()) / 0.25;
            assert!((high.coeffs()[c.0] - mean).abs() < 1e-13);
            assert!((default.coeffs()[c.0] - mean).abs() < 1e-4);
        }
    }

    #[test]
    fn evaluation_reproduces_interpolants() {
        let m = mesh(5, 4, 1.0, 2.0);
        let v2 = make_space(m.clone(), Family::V2);
        let mut f = v2.zero_field();
        let c = m.cell(2, 1);
        f.coeffs_mut()[c.0] = 3.0;
        let p = m.cell_center(c);
        assert_eq!(v2.evaluate(&f, p).unwrap().scalar(), Some(3.0));

        let v0 = make_space(m.clone(), Family::V0);
        let x = v0.interpolate_scalar(|x, _| x).unwrap();
        let v = m.vertex(3, 2);
        let pos = m.vertex_position(v);
        let val = v0.evaluate(&x, pos).unwrap().scalar().unwrap();
        assert!((val - pos[0]).abs() < 1e-14);

        let v1 = make_space(m, Family::V1);
        let u = v1.interpolate_vector(|_, _| [1.0, 2.0]).unwrap();
        for p in [[0.13, 0.71], [0.99, 1.99], [-0.4, 3.3], [0.5, 0.25]] {
            let w = v1.evaluate(&u, p).unwrap().vector().unwrap();
            assert!((w[0] - 1.0).abs() < 1e-13 && (w[1] - 2.0).abs() < 1e-13, "{w:?}");
        }
    }

    #[test]
    fn evaluate_rejects_foreign_field() {
        let m = mesh(3, 3, 1.0, 1.0);
        let v0 = make_space(m.clone(), Family::V0);
        let v1 = make_space(m, Family::V1);
        assert!(v0.evaluate(&v1.zero_field(), [0.1, 0.1]).is_err());
    }
}
