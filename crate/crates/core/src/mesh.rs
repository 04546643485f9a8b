//! Uniform doubly periodic quadrilateral mesh (flat torus).
//!
//! Cells, vertices and edges are indexed row-major (`j * nx + i`). Edge
//! normals are fixed to the global axes: x-normal edges carry the normal
//! `+x`, y-normal edges the normal `+y`. Edge `(i, j)` of either axis is the
//! east (resp. north) face of cell `(i, j)`, so that cell is the "plus" side
//! (the normal points out of it) and its east (resp. north) neighbour is the
//! "minus" side.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeId(pub usize);

/// Direction of an edge's global normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeAxis {
    /// Vertical edge, normal along `+x`.
    X,
    /// Horizontal edge, normal along `+y`.
    Y,
}

impl EdgeAxis {
    pub fn normal(self) -> [f64; 2] {
        match self {
            EdgeAxis::X => [1.0, 0.0],
            EdgeAxis::Y => [0.0, 1.0],
        }
    }
}

/// Local edge slots of a cell, in the order used by the RT0 reference element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalEdge {
    West = 0,
    East = 1,
    South = 2,
    North = 3,
}

impl LocalEdge {
    pub const ALL: [LocalEdge; 4] = [
        LocalEdge::West,
        LocalEdge::East,
        LocalEdge::South,
        LocalEdge::North,
    ];

    /// Outward unit normal of the local edge.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            LocalEdge::West => [-1.0, 0.0],
            LocalEdge::East => [1.0, 0.0],
            LocalEdge::South => [0.0, -1.0],
            LocalEdge::North => [0.0, 1.0],
        }
    }

    /// Sign relating the outward normal to the global edge normal.
    pub fn orientation(self) -> f64 {
        match self {
            LocalEdge::West | LocalEdge::South => -1.0,
            LocalEdge::East | LocalEdge::North => 1.0,
        }
    }

    /// Reference coordinates of the point at parameter `t` along the edge.
    pub fn reference_point(self, t: f64) -> [f64; 2] {
        match self {
            LocalEdge::West => [0.0, t],
            LocalEdge::East => [1.0, t],
            LocalEdge::South => [t, 0.0],
            LocalEdge::North => [t, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicQuadMesh {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
}

impl PeriodicQuadMesh {
    pub fn build(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "extents must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn num_vertices(&self) -> usize {
        self.nx * self.ny
    }
    pub fn num_edges(&self) -> usize {
        2 * self.nx * self.ny
    }

    fn wrap(&self, i: isize, j: isize) -> (usize, usize) {
        (
            i.rem_euclid(self.nx as isize) as usize,
            j.rem_euclid(self.ny as isize) as usize,
        )
    }

    pub fn cell(&self, i: isize, j: isize) -> CellId {
        let (i, j) = self.wrap(i, j);
        CellId(j * self.nx + i)
    }

    pub fn vertex(&self, i: isize, j: isize) -> VertexId {
        let (i, j) = self.wrap(i, j);
        VertexId(j * self.nx + i)
    }

    pub fn edge(&self, axis: EdgeAxis, i: isize, j: isize) -> EdgeId {
        let (i, j) = self.wrap(i, j);
        let base = match axis {
            EdgeAxis::X => 0,
            EdgeAxis::Y => self.num_cells(),
        };
        EdgeId(base + j * self.nx + i)
    }

    pub fn cell_coords(&self, c: CellId) -> (usize, usize) {
        (c.0 % self.nx, c.0 / self.nx)
    }

    pub fn vertex_coords(&self, v: VertexId) -> (usize, usize) {
        (v.0 % self.nx, v.0 / self.nx)
    }

    pub fn edge_coords(&self, e: EdgeId) -> (EdgeAxis, usize, usize) {
        let n = self.num_cells();
        let (axis, k) = if e.0 < n {
            (EdgeAxis::X, e.0)
        } else {
            (EdgeAxis::Y, e.0 - n)
        };
        (axis, k % self.nx, k / self.nx)
    }

    fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e.0 >= self.num_edges() {
            return Err(Error::OutOfRange {
                what: "edge",
                index: e.0,
                count: self.num_edges(),
            });
        }
        Ok(())
    }

    fn check_cell(&self, c: CellId) -> Result<()> {
        if c.0 >= self.num_cells() {
            return Err(Error::OutOfRange {
                what: "cell",
                index: c.0,
                count: self.num_cells(),
            });
        }
        Ok(())
    }

    /// The two cells sharing an edge: `plus` is the cell the global normal
    /// points out of, `minus` the one it points into.
    pub fn edge_cells(&self, e: EdgeId) -> Result<(CellId, CellId)> {
        self.check_edge(e)?;
        let (axis, i, j) = self.edge_coords(e);
        let (i, j) = (i as isize, j as isize);
        let plus = self.cell(i, j);
        let minus = match axis {
            EdgeAxis::X => self.cell(i + 1, j),
            EdgeAxis::Y => self.cell(i, j + 1),
        };
        Ok((plus, minus))
    }

    pub fn edge_axis(&self, e: EdgeId) -> EdgeAxis {
        self.edge_coords(e).0
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        match self.edge_axis(e) {
            EdgeAxis::X => self.dy,
            EdgeAxis::Y => self.dx,
        }
    }

    /// Edges of a cell in [`LocalEdge`] order.
    pub fn cell_edges(&self, c: CellId) -> [EdgeId; 4] {
        let (i, j) = self.cell_coords(c);
        let (i, j) = (i as isize, j as isize);
        [
            self.edge(EdgeAxis::X, i - 1, j),
            self.edge(EdgeAxis::X, i, j),
            self.edge(EdgeAxis::Y, i, j - 1),
            self.edge(EdgeAxis::Y, i, j),
        ]
    }

    /// Vertices of a cell in reference order `(0,0), (1,0), (0,1), (1,1)`.
    pub fn cell_vertices(&self, c: CellId) -> [VertexId; 4] {
        let (i, j) = self.cell_coords(c);
        let (i, j) = (i as isize, j as isize);
        [
            self.vertex(i, j),
            self.vertex(i + 1, j),
            self.vertex(i, j + 1),
            self.vertex(i + 1, j + 1),
        ]
    }

    /// Affine map of the reference square onto the cell: origin and the
    /// (diagonal) Jacobian `(dx, dy)`.
    pub fn cell_geometry(&self, c: CellId) -> Result<([f64; 2], f64, f64)> {
        self.check_cell(c)?;
        let (i, j) = self.cell_coords(c);
        Ok(([i as f64 * self.dx, j as f64 * self.dy], self.dx, self.dy))
    }

    pub fn cell_origin(&self, c: CellId) -> [f64; 2] {
        let (i, j) = self.cell_coords(c);
        [i as f64 * self.dx, j as f64 * self.dy]
    }

    pub fn vertex_position(&self, v: VertexId) -> [f64; 2] {
        let (i, j) = self.vertex_coords(v);
        [i as f64 * self.dx, j as f64 * self.dy]
    }

    pub fn cell_center(&self, c: CellId) -> [f64; 2] {
        let o = self.cell_origin(c);
        [o[0] + 0.5 * self.dx, o[1] + 0.5 * self.dy]
    }

    /// Physical point of reference coordinates `xi` in cell `c`.
    pub fn map_point(&self, c: CellId, xi: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(c);
        [o[0] + xi[0] * self.dx, o[1] + xi[1] * self.dy]
    }

    /// Fold a point into the periodic domain and locate its cell and
    /// reference coordinates.
    pub fn locate(&self, p: [f64; 2]) -> (CellId, [f64; 2]) {
        let x = p[0].rem_euclid(self.lx) / self.dx;
        let y = p[1].rem_euclid(self.ly) / self.dy;
        let i = (x.floor() as usize).min(self.nx - 1);
        let j = (y.floor() as usize).min(self.ny - 1);
        let c = CellId(j * self.nx + i);
        (c, [(x - i as f64).clamp(0.0, 1.0), (y - j as f64).clamp(0.0, 1.0)])
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.num_cells()).map(CellId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.num_edges()).map(EdgeId)
    }

    pub fn euler_characteristic(&self) -> isize {
        self.num_vertices() as isize - self.num_edges() as isize + self.num_cells() as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_smallest_torus() {
        let m = PeriodicQuadMesh::build(3, 3, 1.0, 1.0).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_edges(), 18);
        assert_eq!(m.num_cells(), 9);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn rejects_degenerate_meshes() {
        assert!(PeriodicQuadMesh::build(2, 3, 1.0, 1.0).is_err());
        assert!(PeriodicQuadMesh::build(3, 2, 1.0, 1.0).is_err());
        assert!(PeriodicQuadMesh::build(3, 3, 0.0, 1.0).is_err());
        assert!(PeriodicQuadMesh::build(3, 3, 1.0, -2.0).is_err());
    }

    #[test]
    fn uniform_cell_area() {
        let m = PeriodicQuadMesh::build(4, 3, 2.0, 1.0).unwrap();
        for c in m.cells() {
            let (_, dx, dy) = m.cell_geometry(c).unwrap();
            assert!((dx * dy - 1.0 / 6.0).abs() < 1e-15);
        }
        let total: f64 = m.cells().map(|_| m.cell_area()).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn edge_cells_wrap() {
        let m = PeriodicQuadMesh::build(3, 3, 1.0, 1.0).unwrap();
        let e = m.edge(EdgeAxis::X, 0, 0);
        let (p, q) = m.edge_cells(e).unwrap();
        assert_ne!(p, q);
        let (pi, pj) = m.cell_coords(p);
        let (qi, qj) = m.cell_coords(q);
        assert_eq!(pj, qj);
        assert_eq!((pi + 1) % 3, qi);

        let e = m.edge(EdgeAxis::Y, 2, 2);
        let (p, q) = m.edge_cells(e).unwrap();
        assert_eq!(m.cell_coords(p), (2, 2));
        assert_eq!(m.cell_coords(q), (2, 0));

        let e = m.edge(EdgeAxis::X, 2, 1);
        let (_, q) = m.edge_cells(e).unwrap();
        assert_eq!(m.cell_coords(q), (0, 1));

        assert!(m.edge_cells(EdgeId(18)).is_err());
    }

    #[test]
    fn every_edge_has_two_cells_and_each_cell_four_edges() {
        let m = PeriodicQuadMesh::build(4, 5, 1.0, 1.0).unwrap();
        let mut seen = vec![0usize; m.num_edges()];
        for c in m.cells() {
            let edges = m.cell_edges(c);
            for (slot, e) in LocalEdge::ALL.iter().zip(edges) {
                seen[e.0] += 1;
                let (plus, minus) = m.edge_cells(e).unwrap();
                match slot.orientation() > 0.0 {
                    true => assert_eq!(plus, c),
                    false => assert_eq!(minus, c),
                }
            }
        }
        assert!(seen.iter().all(|&n| n == 2));
    }

    #[test]
    fn geometry_of_interior_cell() {
        let m = PeriodicQuadMesh::build(4, 4, 1.0, 1.0).unwrap();
        let (o, dx, dy) = m.cell_geometry(m.cell(1, 1)).unwrap();
        assert_eq!(o, [0.25, 0.25]);
        assert_eq!(dx * dy, 1.0 / 16.0);
    }

    #[test]
    fn locate_folds_points() {
        let m = PeriodicQuadMesh::build(4, 4, 1.0, 1.0).unwrap();
        let (c, xi) = m.locate([1.3, -0.1]);
        assert_eq!(m.cell_coords(c), (1, 3));
        assert!((xi[0] - 0.2).abs() < 1e-12);
        assert!((xi[1] - 0.6).abs() < 1e-12);
    }
}
