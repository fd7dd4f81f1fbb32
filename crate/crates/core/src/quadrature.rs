//! Quadrature rules: Gauss–Legendre on intervals, periodic trapezoid on
//! circles, and product rules on the unit spheres S⁰, S¹, S².

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term recurrence, from the Chebyshev
    /// initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Equispaced periodic trapezoid nodes `2πj/n` with weight `2π/n`.
pub fn periodic_nodes(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(move |j| (j as f64 * h, h))
}

/// A node on the unit sphere `S^{k-1}` of ℝᵏ with its weight.
#[derive(Debug, Clone)]
pub struct SphereNode {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Product rule on `S^{k-1}` for `k ∈ {1, 2, 3}`: the two points of S⁰
/// (counting measure), trapezoid on S¹, Gauss–Legendre in the height
/// times trapezoid in the azimuth on S².
pub fn sphere_rule(k: usize, polar: usize, azimuth: usize) -> Option<Vec<SphereNode>> {
    match k {
        1 => Some(vec![
            SphereNode {
                point: vec![1.0],
                weight: 1.0,
            },
            SphereNode {
                point: vec![-1.0],
                weight: 1.0,
            },
        ]),
        2 => Some(
            periodic_nodes(azimuth)
                .map(|(t, w)| SphereNode {
                    point: vec![t.cos(), t.sin()],
                    weight: w,
                })
                .collect(),
        ),
        3 => {
            let gl = GaussLegendre::cached(polar);
            let mut out = Vec::with_capacity(polar * azimuth);
            for (c, wc) in gl.on_interval(-1.0, 1.0) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for (t, wt) in periodic_nodes(azimuth) {
                    out.push(SphereNode {
                        point: vec![s * t.cos(), s * t.sin(), c],
                        weight: wc * wt,
                    });
                }
            }
            Some(out)
        }
        _ => None,
    }
}

/// Volume of the Euclidean unit ball in ℝᵏ.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * PI / k as f64,
    }
}

/// Area of the unit sphere `S^{n-1}` in ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is exact
        let exact = 2.0 / 15.0 + 2.0 / 3.0;
        let got = gl.integrate(-1.0, 1.0, |x| x.powi(14) + x.powi(15) + x * x);
        assert_abs_diff_eq!(got, exact, epsilon = 1e-14);
        assert_abs_diff_eq!(gl.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_high_order() {
        let gl = GaussLegendre::new(64);
        assert_abs_diff_eq!(gl.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_rules_have_correct_area() {
        let s1: f64 = sphere_rule(2, 0, 32).unwrap().iter().map(|n| n.weight).sum();
        assert_abs_diff_eq!(s1, 2.0 * PI, epsilon = 1e-13);
        let s2: f64 = sphere_rule(3, 12, 24).unwrap().iter().map(|n| n.weight).sum();
        assert_abs_diff_eq!(s2, 4.0 * PI, epsilon = 1e-12);
        // ∫ z² over S² = 4π/3
        let z2: f64 = sphere_rule(3, 12, 24)
            .unwrap()
            .iter()
            .map(|n| n.weight * n.point[2] * n.point[2])
            .sum();
        assert_abs_diff_eq!(z2, 4.0 * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ball_volumes() {
        assert_abs_diff_eq!(unit_ball_volume(2), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(4), PI * PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_sphere_area(3), 4.0 * PI, epsilon = 1e-14);
    }
}
