//! Physical basis tables shared by every cell of a uniform mesh.
//!
//! The mesh is affine with the same Jacobian `diag(dx, dy)` in every cell,
//! so one set of tables serves the whole mesh. V1 values are Piola mapped:
//! `phi = (phi_ref_x / dy, phi_ref_y / dx)`, which preserves edge fluxes.

use super::quadrature::{GaussRule1d, Quadrature};
use super::reference::{q1_gradients, q1_values, rt0_values};
use crate::error::Result;
use crate::mesh::{LocalEdge, PeriodicQuadMesh};

#[derive(Debug, Clone)]
pub struct EdgeTabulation {
    pub edge: LocalEdge,
    /// Edge-parameter weights times edge length.
    pub jxw: Vec<f64>,
    pub ref_points: Vec<[f64; 2]>,
    pub v0: Vec<[f64; 4]>,
    pub v1: Vec<[[f64; 2]; 4]>,
}

#[derive(Debug, Clone)]
pub struct CellTabulation {
    pub quadrature: Quadrature,
    /// Quadrature weights times cell area.
    pub jxw: Vec<f64>,
    pub v0: Vec<[f64; 4]>,
    pub v0_grad: Vec<[[f64; 2]; 4]>,
    /// Outward-oriented local RT0 functions (multiply by the DOF sign).
    pub v1: Vec<[[f64; 2]; 4]>,
    pub v1_div: [f64; 4],
    /// `d(phi_x)/dx` of each V1 function; `d(phi_x)/dy` vanishes.
    pub v1_dxx: [f64; 4],
    /// `d(phi_y)/dy` of each V1 function; `d(phi_y)/dx` vanishes.
    pub v1_dyy: [f64; 4],
    pub edges: [EdgeTabulation; 4],
    pub dx: f64,
    pub dy: f64,
}

impl CellTabulation {
    pub fn new(mesh: &PeriodicQuadMesh, order: usize) -> Result<Self> {
        let quadrature = Quadrature::tensor(order)?;
        let rule = GaussRule1d::new(order)?;
        let (dx, dy) = (mesh.dx(), mesh.dy());
        let area = dx * dy;

        let jxw = quadrature.weights.iter().map(|w| w * area).collect();
        let mut v0 = Vec::with_capacity(quadrature.len());
        let mut v0_grad = Vec::with_capacity(quadrature.len());
        let mut v1 = Vec::with_capacity(quadrature.len());
        for &xi in &quadrature.points {
            v0.push(q1_values(xi));
            let g = q1_gradients(xi);
            v0_grad.push(g.map(|d| [d[0] / dx, d[1] / dy]));
            v1.push(piola(rt0_values(xi), dx, dy));
        }
        let inv_area = 1.0 / area;
        let edges = LocalEdge::ALL.map(|edge| {
            let length = match edge {
                LocalEdge::West | LocalEdge::East => dy,
                LocalEdge::South | LocalEdge::North => dx,
            };
            let ref_points: Vec<[f64; 2]> =
                rule.points.iter().map(|&t| edge.reference_point(t)).collect();
            EdgeTabulation {
                edge,
                jxw: rule.weights.iter().map(|w| w * length).collect(),
                v0: ref_points.iter().map(|&p| q1_values(p)).collect(),
                v1: ref_points
                    .iter()
                    .map(|&p| piola(rt0_values(p), dx, dy))
                    .collect(),
                ref_points,
            }
        });
        Ok(Self {
            quadrature,
            jxw,
            v0,
            v0_grad,
            v1,
            v1_div: [inv_area; 4],
            v1_dxx: [inv_area, inv_area, 0.0, 0.0],
            v1_dyy: [0.0, 0.0, inv_area, inv_area],
            edges,
            dx,
            dy,
        })
    }

    pub fn num_points(&self) -> usize {
        self.jxw.len()
    }
}

pub(crate) fn piola(v: [[f64; 2]; 4], dx: f64, dy: f64) -> [[f64; 2]; 4] {
    v.map(|c| [c[0] / dy, c[1] / dx])
}
