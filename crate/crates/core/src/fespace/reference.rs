//! Reference elements of the lowest-order quadrilateral complex
//! Q1 -> RT0 -> DQ0 on the unit square.
//!
//! Local vertex order is `(0,0), (1,0), (0,1), (1,1)`. Local edges follow
//! [`LocalEdge`](crate::mesh::LocalEdge): west, east, south, north. RT0
//! basis functions carry outward orientation and are normalized so that
//! function `k` has unit outward flux through edge `k` and zero flux through
//! the other three.

use super::quadrature::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous bilinear (H1).
    V0,
    /// Lowest-order Raviart–Thomas (H(div)).
    V1,
    /// Piecewise constant (L2).
    V2,
}

impl Family {
    pub fn local_dofs(self) -> usize {
        match self {
            Family::V0 | Family::V1 => 4,
            Family::V2 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::V0 => "V0",
            Family::V1 => "V1",
            Family::V2 => "V2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "V0" => Some(Family::V0),
            "V1" => Some(Family::V1),
            "V2" => Some(Family::V2),
            _ => None,
        }
    }

    pub fn is_vector(self) -> bool {
        self == Family::V1
    }
}

pub fn q1_values(xi: [f64; 2]) -> [f64; 4] {
    let [x, y] = xi;
    [(1.0 - x) * (1.0 - y), x * (1.0 - y), (1.0 - x) * y, x * y]
}

/// Reference gradients `(d/dxi, d/deta)` of the Q1 basis.
pub fn q1_gradients(xi: [f64; 2]) -> [[f64; 2]; 4] {
    let [x, y] = xi;
    [
        [-(1.0 - y), -(1.0 - x)],
        [1.0 - y, -x],
        [-y, 1.0 - x],
        [y, x],
    ]
}

pub fn rt0_values(xi: [f64; 2]) -> [[f64; 2]; 4] {
    let [x, y] = xi;
    [[x - 1.0, 0.0], [x, 0.0], [0.0, y - 1.0], [0.0, y]]
}

/// Reference divergence of each RT0 basis function (constant).
pub const RT0_DIVERGENCE: [f64; 4] = [1.0; 4];

/// Reference tables of one family at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub family: Family,
    /// `values[q][k]` components (scalar families use component 0).
    pub values: Vec<[[f64; 2]; 4]>,
    /// Gradient for V0, `[div, 0]` for V1, zero for V2.
    pub derivatives: Vec<[[f64; 2]; 4]>,
}

impl ReferenceElement {
    pub fn tabulate(family: Family, quad: &Quadrature) -> Self {
        let mut values = Vec::with_capacity(quad.len());
        let mut derivatives = Vec::with_capacity(quad.len());
        for &xi in &quad.points {
            let mut v = [[0.0; 2]; 4];
            let mut d = [[0.0; 2]; 4];
            match family {
                Family::V0 => {
                    let n = q1_values(xi);
                    let g = q1_gradients(xi);
                    for k in 0..4 {
                        v[k][0] = n[k];
                        d[k] = g[k];
                    }
                }
                Family::V1 => {
                    v = rt0_values(xi);
                    for k in 0..4 {
                        d[k][0] = RT0_DIVERGENCE[k];
                    }
                }
                Family::V2 => {
                    v[0][0] = 1.0;
                }
            }
            values.push(v);
            derivatives.push(d);
        }
        Self {
            family,
            values,
            derivatives,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::quadrature::GaussRule1d;
    use crate::mesh::LocalEdge;

    #[test]
    fn q1_partition_of_unity() {
        for &xi in &[[0.0, 0.0], [0.3, 0.7], [1.0, 0.25], [0.5, 0.5]] {
            let s: f64 = q1_values(xi).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let g = q1_gradients(xi);
            let gs = g.iter().fold([0.0, 0.0], |a, b| [a[0] + b[0], a[1] + b[1]]);
            assert!(gs[0].abs() < 1e-15 && gs[1].abs() < 1e-15);
        }
    }

    #[test]
    fn rt0_unit_flux_on_own_edge() {
        let rule = GaussRule1d::new(3).unwrap();
        for (k, edge) in LocalEdge::ALL.iter().enumerate() {
            for (l, other) in LocalEdge::ALL.iter().enumerate() {
                let n = other.outward_normal();
                let flux = rule.integrate(0.0, 1.0, |t| {
                    let v = rt0_values(other.reference_point(t))[k];
                    v[0] * n[0] + v[1] * n[1]
                });
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((flux - expected).abs() < 1e-15, "{edge:?} on {other:?}");
            }
        }
    }

    #[test]
    fn v2_is_constant_one() {
        let q = Quadrature::default();
        let t = ReferenceElement::tabulate(Family::V2, &q);
        assert!(t.values.iter().all(|v| v[0][0] == 1.0));
    }
}
