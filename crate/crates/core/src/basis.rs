//! Scaled monomial bases.
//!
//! On a cell with center `x_K` and diameter `h_K` the basis of `P_l` is
//! `m_(a,b)(x) = ((x - x_K) / h_K)^(a,b)` for `a + b <= l`, ordered by total
//! degree and, within a degree, by decreasing power of `x`:
//! `1, x, y, x^2, xy, y^2, x^3, ...`. Every module uses this ordering.

use nalgebra::DMatrix;

use crate::mesh::Point;

/// Dimension of `P_order` in two variables; zero for negative orders.
pub fn poly_dim(order: isize) -> usize {
    if order < 0 {
        0
    } else {
        let l = order as usize;
        (l + 1) * (l + 2) / 2
    }
}

/// Dimension of `P_order` on an edge; zero for negative orders.
pub fn edge_dim(order: isize) -> usize {
    if order < 0 {
        0
    } else {
        order as usize + 1
    }
}

/// Exponents `(a, b)` of the basis in the fixed order.
pub fn multi_indices(order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(poly_dim(order as isize));
    for d in 0..=order {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Position of the exponent `(a, b)` in the ordering.
pub fn index_of(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMonomialBasis {
    pub center: Point,
    pub h: f64,
    pub order: usize,
}

impl ScaledMonomialBasis {
    pub fn new(center: Point, h: f64, order: usize) -> Self {
        Self { center, h, order }
    }

    pub fn dim(&self) -> usize {
        poly_dim(self.order as isize)
    }

    fn powers(&self, p: &Point, order: usize) -> (Vec<f64>, Vec<f64>) {
        let xi = (p.x - self.center.x) / self.h;
        let eta = (p.y - self.center.y) / self.h;
        let mut px = vec![1.0; order + 1];
        let mut py = vec![1.0; order + 1];
        for k in 1..=order {
            px[k] = px[k - 1] * xi;
            py[k] = py[k - 1] * eta;
        }
        (px, py)
    }

    /// Values of the first `poly_dim(order)` basis functions.
    pub fn eval_order(&self, p: &Point, order: usize) -> Vec<f64> {
        let (px, py) = self.powers(p, order);
        let mut out = Vec::with_capacity(poly_dim(order as isize));
        for d in 0..=order {
            for b in 0..=d {
                out.push(px[d - b] * py[b]);
            }
        }
        out
    }

    pub fn eval(&self, p: &Point) -> Vec<f64> {
        self.eval_order(p, self.order)
    }

    pub fn eval_gradients(&self, p: &Point) -> Vec<[f64; 2]> {
        let (px, py) = self.powers(p, self.order);
        let inv_h = 1.0 / self.h;
        multi_indices(self.order)
            .into_iter()
            .map(|(a, b)| {
                let dx = if a > 0 { a as f64 * px[a - 1] * py[b] * inv_h } else { 0.0 };
                let dy = if b > 0 { b as f64 * px[a] * py[b - 1] * inv_h } else { 0.0 };
                [dx, dy]
            })
            .collect()
    }

    pub fn eval_hessians(&self, p: &Point) -> Vec<[[f64; 2]; 2]> {
        let (px, py) = self.powers(p, self.order);
        let inv_h2 = 1.0 / (self.h * self.h);
        multi_indices(self.order)
            .into_iter()
            .map(|(a, b)| {
                let (af, bf) = (a as f64, b as f64);
                let dxx = if a > 1 { af * (af - 1.0) * px[a - 2] * py[b] } else { 0.0 };
                let dyy = if b > 1 { bf * (bf - 1.0) * px[a] * py[b - 2] } else { 0.0 };
                let dxy = if a > 0 && b > 0 { af * bf * px[a - 1] * py[b - 1] } else { 0.0 };
                [[dxx * inv_h2, dxy * inv_h2], [dxy * inv_h2, dyy * inv_h2]]
            })
            .collect()
    }

    /// Map from coefficients in `P_from` to the coefficients of the partial
    /// derivative (`dir` 0 for x, 1 for y) in `P_(from - 1)`.
    pub fn derivative_matrix(&self, from: usize, dir: usize) -> DMatrix<f64> {
        let rows = poly_dim(from as isize - 1);
        let mut d = DMatrix::zeros(rows, poly_dim(from as isize));
        for (col, (a, b)) in multi_indices(from).into_iter().enumerate() {
            match dir {
                0 if a > 0 => d[(index_of(a - 1, b), col)] = a as f64 / self.h,
                1 if b > 0 => d[(index_of(a, b - 1), col)] = b as f64 / self.h,
                _ => {}
            }
        }
        d
    }
}

/// Scaled monomials `((x - x_e) . t / h_e)^j` on an edge with midpoint `x_e`,
/// unit tangent `t` and length `h_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBasis {
    pub midpoint: Point,
    pub tangent: Point,
    pub h: f64,
}

impl EdgeBasis {
    pub fn new(a: &Point, b: &Point) -> Self {
        let d = b - a;
        let h = d.norm();
        Self {
            midpoint: (a + b) * 0.5,
            tangent: d / h,
            h,
        }
    }

    /// Local coordinate in `[-1/2, 1/2]`.
    pub fn coordinate(&self, p: &Point) -> f64 {
        (p - self.midpoint).dot(&self.tangent) / self.h
    }

    pub fn eval_at(&self, s: f64, order: isize) -> Vec<f64> {
        let n = edge_dim(order);
        let mut out = Vec::with_capacity(n);
        let mut v = 1.0;
        for _ in 0..n {
            out.push(v);
            v *= s;
        }
        out
    }

    pub fn eval(&self, p: &Point, order: isize) -> Vec<f64> {
        self.eval_at(self.coordinate(p), order)
    }

    /// Arc-length derivatives `d/ds m_j = j / h_e * m_(j-1)`.
    pub fn eval_derivative_at(&self, s: f64, order: isize) -> Vec<f64> {
        let vals = self.eval_at(s, order - 1);
        let mut out = vec![0.0; edge_dim(order)];
        for j in 1..out.len() {
            out[j] = j as f64 * vals[j - 1] / self.h;
        }
        out
    }
}
