//! Gauss–Legendre rules on the unit interval and their tensor products on
//! the unit square.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule1d {
    /// `n`-point rule on `[0, 1]`; exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
        }
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Newton iteration on P_n from the Chebyshev-like initial guesses,
        // using the symmetry of the roots on [-1, 1].
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            points[i] = 0.5 * (1.0 - z);
            points[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss rule on the reference square.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub rule_1d: GaussRule1d,
}

impl Quadrature {
    /// Default rule of the library: 3 points per direction, exact to
    /// degree 5 in each variable.
    pub const DEFAULT_ORDER: usize = 3;

    pub fn tensor(n: usize) -> Result<Self> {
        let rule = GaussRule1d::new(n)?;
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (j, &y) in rule.points.iter().enumerate() {
            for (i, &x) in rule.points.iter().enumerate() {
                points.push([x, y]);
                weights.push(rule.weights[i] * rule.weights[j]);
            }
        }
        Ok(Self {
            points,
            weights,
            rule_1d: rule,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::tensor(Self::DEFAULT_ORDER).expect("default quadrature")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=12 {
            let r = GaussRule1d::new(n).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}: {s}");
            let q = Quadrature::tensor(n).unwrap();
            assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_to_degree_2n_minus_1() {
        for n in 1..=8 {
            let r = GaussRule1d::new(n).unwrap();
            for deg in 0..=(2 * n - 1) {
                let approx = r.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
            let too_high = r.integrate(0.0, 1.0, |x| x.powi(2 * n as i32));
            assert!((too_high - 1.0 / (2.0 * n as f64 + 1.0)).abs() > 1e-16);
        }
    }

    #[test]
    fn points_are_symmetric_and_sorted() {
        let r = GaussRule1d::new(5).unwrap();
        for i in 0..5 {
            assert!((r.points[i] + r.points[4 - i] - 1.0).abs() < 1e-15);
        }
        assert!(r.points.windows(2).all(|w| w[0] < w[1]));
        assert!((r.points[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_points_is_an_error() {
        assert!(GaussRule1d::new(0).is_err());
    }
}
