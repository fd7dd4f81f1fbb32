//! Parametrized curves in ℝⁿ with first and second derivatives.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Debug;

pub trait Curve: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// Parameter interval `[t₀, t₁]`.
    fn interval(&self) -> (f64, f64);

    fn point(&self, t: f64) -> DVector<f64>;

    fn velocity(&self, t: f64) -> DVector<f64>;

    fn acceleration(&self, t: f64) -> DVector<f64>;

    /// Parameters splitting the curve into smooth pieces, endpoints included.
    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.interval();
        vec![a, b]
    }

    /// Pieces that are straight segments need no refinement.
    fn is_piecewise_linear(&self) -> bool {
        false
    }
}

/// Serializable curve description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schemars", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Segment {
        start: Vec<f64>,
        end: Vec<f64>,
    },
    Polyline {
        points: Vec<Vec<f64>>,
    },
    /// Arc `center + radius (cos t · u + sin t · w)` for `t ∈ [t0, t1]`;
    /// `u`, `w` are orthonormalized.
    Arc {
        center: Vec<f64>,
        radius: f64,
        u: Vec<f64>,
        w: Vec<f64>,
        t0: f64,
        t1: f64,
    },
    /// `start + t·direction + amplitude·sin²(πt)·normal`, `t ∈ [0, 1]`.
    LinePlusBump {
        start: Vec<f64>,
        direction: Vec<f64>,
        normal: Vec<f64>,
        amplitude: f64,
    },
}

impl CurveSpec {
    pub fn build(&self) -> Result<Box<dyn Curve>, String> {
        let vec = |x: &Vec<f64>| DVector::from_vec(x.clone());
        let same_dim = |xs: &[&Vec<f64>]| xs.windows(2).all(|w| w[0].len() == w[1].len());
        match self {
            CurveSpec::Segment { start, end } => {
                if !same_dim(&[start, end]) || start.is_empty() {
                    return Err("segment endpoints must have equal, positive dimension".into());
                }
                Ok(Box::new(Polyline::new(vec![vec(start), vec(end)])?))
            }
            CurveSpec::Polyline { points } => Ok(Box::new(Polyline::new(points.iter().map(vec).collect())?)),
            CurveSpec::Arc {
                center,
                radius,
                u,
                w,
                t0,
                t1,
            } => {
                if !same_dim(&[center, u, w]) {
                    return Err("arc vectors must have equal dimension".into());
                }
                Ok(Box::new(Arc::new(vec(center), *radius, vec(u), vec(w), *t0, *t1)?))
            }
            CurveSpec::LinePlusBump {
                start,
                direction,
                normal,
                amplitude,
            } => {
                if !same_dim(&[start, direction, normal]) {
                    return Err("curve vectors must have equal dimension".into());
                }
                Ok(Box::new(LinePlusBump {
                    start: vec(start),
                    direction: vec(direction),
                    normal: vec(normal),
                    amplitude: *amplitude,
                }))
            }
        }
    }
}

/// Piecewise linear curve through `points`, piece `i` on `[i, i + 1]`.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<DVector<f64>>,
}

impl Polyline {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self, String> {
        if points.len() < 2 {
            return Err("a polyline needs at least two points".into());
        }
        let n = points[0].len();
        if points.iter().any(|p| p.len() != n) {
            return Err("polyline points must have equal dimension".into());
        }
        Ok(Self { points })
    }

    pub fn segment(a: DVector<f64>, b: DVector<f64>) -> Self {
        Self::new(vec![a, b]).expect("two points of equal dimension")
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    fn piece(&self, t: f64) -> (usize, f64) {
        let last = self.points.len() - 2;
        let i = (t.floor().max(0.0) as usize).min(last);
        (i, t - i as f64)
    }
}

impl Curve for Polyline {
    fn dim(&self) -> usize {
        self.points[0].len()
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, (self.points.len() - 1) as f64)
    }

    fn point(&self, t: f64) -> DVector<f64> {
        let (i, s) = self.piece(t);
        &self.points[i] * (1.0 - s) + &self.points[i + 1] * s
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        let (i, _) = self.piece(t);
        &self.points[i + 1] - &self.points[i]
    }

    fn acceleration(&self, _t: f64) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    fn breakpoints(&self) -> Vec<f64> {
        (0..self.points.len()).map(|i| i as f64).collect()
    }

    fn is_piecewise_linear(&self) -> bool {
        true
    }
}

/// Circular arc `center + R(cos t · u + sin t · w)`.
#[derive(Debug, Clone)]
pub struct Arc {
    center: DVector<f64>,
    radius: f64,
    u: DVector<f64>,
    w: DVector<f64>,
    t0: f64,
    t1: f64,
}

impl Arc {
    pub fn new(center: DVector<f64>, radius: f64, u: DVector<f64>, w: DVector<f64>, t0: f64, t1: f64) -> Result<Self, String> {
        if !(radius > 0.0) || !(t1 > t0) {
            return Err("arc needs positive radius and t1 > t0".into());
        }
        let un = u.norm();
        if un == 0.0 {
            return Err("arc direction u is zero".into());
        }
        let u = u / un;
        let w = &w - &u * u.dot(&w);
        let wn = w.norm();
        if wn < 1e-12 {
            return Err("arc directions are parallel".into());
        }
        Ok(Self {
            center,
            radius,
            u,
            w: w / wn,
            t0,
            t1,
        })
    }

    pub fn full_circle(center: DVector<f64>, radius: f64, u: DVector<f64>, w: DVector<f64>) -> Result<Self, String> {
        Self::new(center, radius, u, w, 0.0, 2.0 * PI)
    }
}

impl Curve for Arc {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn point(&self, t: f64) -> DVector<f64> {
        &self.center + (&self.u * t.cos() + &self.w * t.sin()) * self.radius
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        (&self.w * t.cos() - &self.u * t.sin()) * self.radius
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        (&self.u * t.cos() + &self.w * t.sin()) * (-self.radius)
    }
}

/// `start + t·direction + amplitude·sin²(πt)·normal` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LinePlusBump {
    pub start: DVector<f64>,
    pub direction: DVector<f64>,
    pub normal: DVector<f64>,
    pub amplitude: f64,
}

impl Curve for LinePlusBump {
    fn dim(&self) -> usize {
        self.start.len()
    }

    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn point(&self, t: f64) -> DVector<f64> {
        let s = (PI * t).sin();
        &self.start + &self.direction * t + &self.normal * (self.amplitude * s * s)
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        &self.direction + &self.normal * (self.amplitude * PI * (2.0 * PI * t).sin())
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        &self.normal * (self.amplitude * 2.0 * PI * PI * (2.0 * PI * t).cos())
    }
}

/// The same curve traversed backwards.
#[derive(Debug)]
pub struct Reversed<C: Curve>(pub C);

impl<C: Curve> Curve for Reversed<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn interval(&self) -> (f64, f64) {
        self.0.interval()
    }

    fn point(&self, t: f64) -> DVector<f64> {
        let (a, b) = self.0.interval();
        self.0.point(a + b - t)
    }

    fn velocity(&self, t: f64) -> DVector<f64> {
        let (a, b) = self.0.interval();
        -self.0.velocity(a + b - t)
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        let (a, b) = self.0.interval();
        self.0.acceleration(a + b - t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.0.interval();
        let mut bp: Vec<f64> = self.0.breakpoints().iter().map(|t| a + b - t).collect();
        bp.reverse();
        bp
    }

    fn is_piecewise_linear(&self) -> bool {
        self.0.is_piecewise_linear()
    }
}

/// Vertices of a polyline approximation with `per_piece` segments on each
/// smooth piece (one per piece for piecewise linear curves).
pub fn refine(curve: &dyn Curve, per_piece: usize) -> Vec<DVector<f64>> {
    let bp = curve.breakpoints();
    let m = if curve.is_piecewise_linear() { 1 } else { per_piece.max(1) };
    let mut out = vec![curve.point(bp[0])];
    for w in bp.windows(2) {
        for j in 1..=m {
            let t = w[0] + (w[1] - w[0]) * j as f64 / m as f64;
            out.push(curve.point(t));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivatives_match_finite_differences() {
        let curves: Vec<Box<dyn Curve>> = vec![
            Box::new(
                Arc::new(
                    DVector::from_vec(vec![0.0, 1.0, 0.0]),
                    2.0,
                    DVector::from_vec(vec![1.0, 0.0, 0.0]),
                    DVector::from_vec(vec![0.3, 0.0, 1.0]),
                    0.0,
                    3.0,
                )
                .unwrap(),
            ),
            Box::new(LinePlusBump {
                start: DVector::from_vec(vec![0.0, 0.0]),
                direction: DVector::from_vec(vec![1.0, 0.0]),
                normal: DVector::from_vec(vec![0.0, 1.0]),
                amplitude: 0.2,
            }),
        ];
        let h = 1e-5;
        for c in &curves {
            for t in [0.2, 0.5, 0.9] {
                let fd = (c.point(t + h) - c.point(t - h)) / (2.0 * h);
                assert_abs_diff_eq!(c.velocity(t), fd, epsilon = 1e-8);
                let fd2 = (c.velocity(t + h) - c.velocity(t - h)) / (2.0 * h);
                assert_abs_diff_eq!(c.acceleration(t), fd2, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn reversed_polyline() {
        let p = Polyline::new(vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![2.0, 0.0]),
        ])
        .unwrap();
        let r = Reversed(p.clone());
        assert_abs_diff_eq!(r.point(0.0), DVector::from_vec(vec![2.0, 0.0]));
        assert_abs_diff_eq!(r.velocity(0.5), DVector::from_vec(vec![-1.0, 1.0]));
        assert_eq!(refine(&r, 10).len(), 3);
    }
}
