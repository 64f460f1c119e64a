//! Gauss-Legendre rules on intervals, collapsed tensor rules on triangles and
//! centroid-fan rules on polygons.

use crate::error::{Error, Result};
use crate::mesh::{polygon_geometry, Point};

/// Largest supported number of Gauss-Legendre points.
pub const MAX_LINE_POINTS: usize = 20;

/// A one-dimensional rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A two-dimensional rule with weights carrying the area element.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre rule with `n` points, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<LineRule> {
    if !(1..=MAX_LINE_POINTS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "gauss-legendre rule needs 1..={MAX_LINE_POINTS} points, got {n}"
        )));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(LineRule { points, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Number of Gauss points for exactness `degree` on a line.
pub fn line_points_for_degree(degree: usize) -> usize {
    (degree / 2 + 1).min(MAX_LINE_POINTS)
}

/// Rule on the segment `a -> b` exact for polynomials of `degree`; returns
/// physical points with weights scaled by the length.
pub fn segment_rule(a: &Point, b: &Point, degree: usize) -> QuadratureRule {
    let line = gauss_legendre(line_points_for_degree(degree)).expect("degree within range");
    let half = 0.5 * (b - a).norm();
    let mid = (a + b) * 0.5;
    let dir = (b - a) * 0.5;
    QuadratureRule {
        points: line.points.iter().map(|&t| mid + dir * t).collect(),
        weights: line.weights.iter().map(|&w| w * half).collect(),
    }
}

/// Collapsed (Duffy) Gauss rule on the triangle `a, b, c`, exact for
/// polynomials of total degree `degree`.
pub fn triangle_rule(a: &Point, b: &Point, c: &Point, degree: usize) -> QuadratureRule {
    // The collapse adds one degree in the first direction.
    let n = line_points_for_degree(degree + 1);
    let line = gauss_legendre(n).expect("degree within range");
    let e1 = b - a;
    let e2 = c - a;
    let jac = (e1.x * e2.y - e1.y * e2.x).abs();
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * n),
        weights: Vec::with_capacity(n * n),
    };
    for (&xu, &wu) in line.points.iter().zip(&line.weights) {
        let u = 0.5 * (xu + 1.0);
        for (&xv, &wv) in line.points.iter().zip(&line.weights) {
            let v = 0.5 * (xv + 1.0);
            // (u, v) in the unit square maps to (u, (1 - u) v) on the reference triangle.
            let (r, s) = (u, (1.0 - u) * v);
            rule.points.push(a + e1 * r + e2 * s);
            rule.weights.push(0.25 * wu * wv * (1.0 - u) * jac);
        }
    }
    rule
}

/// Rule on a simple counter-clockwise polygon exact for `degree`, built by
/// fanning triangles from the area centroid. Triangles are integrated directly.
pub fn polygon_rule(pts: &[Point], degree: usize) -> Result<QuadratureRule> {
    if pts.len() < 3 {
        return Err(Error::InvalidArgument("polygon needs at least 3 vertices".into()));
    }
    let g = polygon_geometry(pts);
    if g.area.abs() <= f64::EPSILON * g.diameter * g.diameter || !g.area.is_finite() {
        return Err(Error::InvalidArgument(format!("degenerate polygon (area {:.3e})", g.area)));
    }
    if pts.len() == 3 {
        return Ok(triangle_rule(&pts[0], &pts[1], &pts[2], degree));
    }
    let mut rule = QuadratureRule::default();
    for k in 0..pts.len() {
        let sub = triangle_rule(&g.centroid, &pts[k], &pts[(k + 1) % pts.len()], degree);
        rule.points.extend(sub.points);
        rule.weights.extend(sub.weights);
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_rule_basics() {
        for n in 1..=MAX_LINE_POINTS {
            let r = gauss_legendre(n).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n} sum={s}");
            for k in (1..2 * n).step_by(2) {
                let odd: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!(odd.abs() < 1e-14);
            }
            // Even monomials up to 2n - 2.
            for k in (0..2 * n).step_by(2) {
                let v: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((v - 2.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
            }
        }
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(21).is_err());
    }

    #[test]
    fn cubic_on_unit_interval() {
        let r = segment_rule(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), 3);
        assert_eq!(r.len(), 2);
        let v = r.integrate(|p| p.x.powi(3));
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn polygon_examples() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let r = polygon_rule(&sq, 2).unwrap();
        assert!((r.integrate(|_| 1.0) - 1.0).abs() < 1e-15);
        assert!((r.integrate(|p| p.x) - 0.5).abs() < 1e-15);
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let r = polygon_rule(&tri, 2).unwrap();
        assert!((r.integrate(|p| p.x * p.x) - 1.0 / 12.0).abs() < 1e-15);
        assert!(r.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn triangle_monomial_exactness() {
        // Reference triangle: int x^a y^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        for degree in 0..=16usize {
            let r = triangle_rule(&tri[0], &tri[1], &tri[2], degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let v = r.integrate(|p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    assert!((v - exact).abs() < 1e-14 * exact.max(1e-3), "deg {degree} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn degenerate_polygon_rejected() {
        let flat = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert!(polygon_rule(&flat, 2).is_err());
    }
}
