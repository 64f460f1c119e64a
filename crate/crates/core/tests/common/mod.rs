#![allow(dead_code)]

use ncvem::Point;
use rand::Rng;

/// Convex polygon with `n` vertices on a jittered ellipse, counter-clockwise.
pub fn random_convex_polygon<R: Rng>(rng: &mut R, n: usize) -> Vec<Point> {
    let mut angles: Vec<f64> = (0..n)
        .map(|k| (k as f64 + 0.35 * (rng.random::<f64>() - 0.5)) * std::f64::consts::TAU / n as f64)
        .collect();
    angles.sort_by(f64::total_cmp);
    let (a, b) = (0.6 + 0.8 * rng.random::<f64>(), 0.6 + 0.8 * rng.random::<f64>());
    let rot = rng.random::<f64>() * std::f64::consts::PI;
    let (cx, cy) = (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    angles
        .into_iter()
        .map(|t| {
            let (x, y) = (a * t.cos(), b * t.sin());
            Point::new(cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos())
        })
        .collect()
}

/// Polynomial `sum c_ab x^a y^b` with exact derivatives.
#[derive(Debug, Clone)]
pub struct Poly {
    pub terms: Vec<(i32, i32, f64)>,
}

impl Poly {
    pub fn random<R: Rng>(rng: &mut R, order: i32) -> Self {
        let mut terms = Vec::new();
        for d in 0..=order {
            for b in 0..=d {
                terms.push((d - b, b, rng.random::<f64>() * 2.0 - 1.0));
            }
        }
        Self { terms }
    }

    fn sum(&self, p: &Point, f: impl Fn(i32, i32, f64, f64, f64) -> f64) -> f64 {
        self.terms.iter().map(|&(a, b, c)| f(a, b, c, p.x, p.y)).sum()
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.sum(p, |a, b, c, x, y| c * x.powi(a) * y.powi(b))
    }

    pub fn gradient(&self, p: &Point) -> [f64; 2] {
        [
            self.sum(p, |a, b, c, x, y| if a > 0 { c * a as f64 * x.powi(a - 1) * y.powi(b) } else { 0.0 }),
            self.sum(p, |a, b, c, x, y| if b > 0 { c * b as f64 * x.powi(a) * y.powi(b - 1) } else { 0.0 }),
        ]
    }

    pub fn hessian(&self, p: &Point) -> [[f64; 2]; 2] {
        let xx = self.sum(p, |a, b, c, x, y| {
            if a > 1 { c * (a * (a - 1)) as f64 * x.powi(a - 2) * y.powi(b) } else { 0.0 }
        });
        let yy = self.sum(p, |a, b, c, x, y| {
            if b > 1 { c * (b * (b - 1)) as f64 * x.powi(a) * y.powi(b - 2) } else { 0.0 }
        });
        let xy = self.sum(p, |a, b, c, x, y| {
            if a > 0 && b > 0 { c * (a * b) as f64 * x.powi(a - 1) * y.powi(b - 1) } else { 0.0 }
        });
        [[xx, xy], [xy, yy]]
    }
}
