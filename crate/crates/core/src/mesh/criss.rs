use super::{BoundingBox, Mesh, Point};
use crate::error::{Error, Result};

/// Structured "criss" triangulation of the unit square: `n x n` squares, each
/// split along its lower-left to upper-right diagonal.
pub fn generate_criss(n: usize) -> Result<Mesh> {
    generate_criss_in(n, BoundingBox::unit_square())
}

pub fn generate_criss_in(n: usize, bbox: BoundingBox) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("criss grid needs n >= 1".into()));
    }
    let dx = bbox.width() / n as f64;
    let dy = bbox.height() / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Snap the last row/column to the box so the tiling is exact.
            let x = if i == n { bbox.max.x } else { bbox.min.x + i as f64 * dx };
            let y = if j == n { bbox.max.y } else { bbox.min.y + j as f64 * dy };
            vertices.push(Point::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }
    Mesh::new(vertices, cells, Some(bbox))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criss_counts() {
        let m = generate_criss(5).unwrap();
        let s = m.stats();
        assert_eq!((s.n_cells, s.n_vertices, s.n_edges), (50, 36, 85));
        assert!((s.h - 0.2828).abs() < 5e-5);

        let m = generate_criss(1).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_edges()), (2, 4, 5));

        let s = generate_criss(15).unwrap().stats();
        assert_eq!(s.n_cells, 450);
        assert!((s.h - 0.0943).abs() < 5e-5);
    }

    #[test]
    fn criss_h_formula_and_tiling() {
        for n in [1, 2, 3, 7, 10, 20] {
            let m = generate_criss(n).unwrap();
            let s = m.stats();
            assert!((s.h - 2f64.sqrt() / n as f64).abs() < 1e-14);
            assert!((m.total_area() - 1.0).abs() < 1e-12);
            assert_eq!(s.n_vertices as i64 - s.n_edges as i64 + s.n_cells as i64, 1);
        }
        let b = BoundingBox::new(-1.0, -1.0, 1.0, 1.0);
        let m = generate_criss_in(8, b).unwrap();
        assert!((m.total_area() - 4.0).abs() < 4e-12);
        assert!((m.stats().h - 2.0 * 2f64.sqrt() / 8.0).abs() < 1e-14);
    }

    #[test]
    fn criss_zero_rejected() {
        assert!(generate_criss(0).is_err());
    }
}
