//! Global numbering of the degrees of freedom.
//!
//! Global dofs are laid out in blocks: vertex values, then edge value moments
//! (edge-major), then edge normal moments, then interior moments (cell-major).
//! Edge dofs refer to the global edge orientation, so a cell's local dof
//! vector is a plain gather of the global one.

use crate::basis::poly_dim;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    order: usize,
    n_vertices: usize,
    n_edges: usize,
    n_cells: usize,
    cell_dofs: Vec<Vec<usize>>,
    constrained: Vec<bool>,
}

/// Number of edge value moments per edge.
pub fn edge_value_count(order: usize) -> usize {
    order - 2
}

/// Number of edge normal moments per edge.
pub fn edge_normal_count(order: usize) -> usize {
    order - 1
}

pub fn interior_count(order: usize) -> usize {
    poly_dim(order as isize - 4)
}

/// Local dof count of a polygon with `n_vertices` vertices.
pub fn local_dof_count(n_vertices: usize, order: usize) -> usize {
    n_vertices * (1 + edge_value_count(order) + edge_normal_count(order)) + interior_count(order)
}

/// Offsets of the four local dof blocks of a polygon with `n` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalOffsets {
    pub edge_value: usize,
    pub edge_normal: usize,
    pub interior: usize,
    pub total: usize,
}

impl LocalOffsets {
    pub fn new(n: usize, order: usize) -> Self {
        let edge_value = n;
        let edge_normal = edge_value + n * edge_value_count(order);
        let interior = edge_normal + n * edge_normal_count(order);
        Self {
            edge_value,
            edge_normal,
            interior,
            total: interior + interior_count(order),
        }
    }
}

pub fn build_dof_layout(mesh: &Mesh, order: usize) -> Result<DofLayout> {
    DofLayout::new(mesh, order)
}

impl DofLayout {
    pub fn new(mesh: &Mesh, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!("order must be at least 2, got {order}")));
        }
        let mut layout = Self {
            order,
            n_vertices: mesh.n_vertices(),
            n_edges: mesh.n_edges(),
            n_cells: mesh.n_cells(),
            cell_dofs: Vec::with_capacity(mesh.n_cells()),
            constrained: Vec::new(),
        };
        let nv = edge_value_count(order);
        let nn = edge_normal_count(order);
        for c in 0..mesh.n_cells() {
            let cell = mesh.cell(c);
            let edges = mesh.cell_edges(c);
            let mut dofs = Vec::with_capacity(local_dof_count(cell.len(), order));
            dofs.extend_from_slice(cell);
            for &e in edges {
                dofs.extend((0..nv).map(|j| layout.edge_value_dof(e, j)));
            }
            for &e in edges {
                dofs.extend((0..nn).map(|j| layout.edge_normal_dof(e, j)));
            }
            dofs.extend((0..interior_count(order)).map(|k| layout.interior_dof(c, k)));
            layout.cell_dofs.push(dofs);
        }
        let mut constrained = vec![false; layout.n_dofs()];
        for (e, edge) in mesh.edges().iter().enumerate() {
            if edge.is_boundary() {
                for j in 0..nn {
                    constrained[layout.edge_normal_dof(e, j)] = true;
                }
            }
        }
        layout.constrained = constrained;
        Ok(layout)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.n_vertices
            + self.n_edges * (edge_value_count(self.order) + edge_normal_count(self.order))
            + self.n_cells * interior_count(self.order)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        v
    }

    pub fn edge_value_dof(&self, e: usize, j: usize) -> usize {
        self.n_vertices + e * edge_value_count(self.order) + j
    }

    pub fn edge_normal_dof(&self, e: usize, j: usize) -> usize {
        self.n_vertices + self.n_edges * edge_value_count(self.order) + e * edge_normal_count(self.order) + j
    }

    pub fn interior_dof(&self, c: usize, k: usize) -> usize {
        self.n_vertices
            + self.n_edges * (edge_value_count(self.order) + edge_normal_count(self.order))
            + c * interior_count(self.order)
            + k
    }

    /// Global indices of the local dofs of cell `c`, in local order.
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c]
    }

    pub fn all_cell_dofs(&self) -> &[Vec<usize>] {
        &self.cell_dofs
    }

    /// Flags of the boundary normal dofs, which are fixed to zero.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    pub fn gather(&self, c: usize, global: &[f64]) -> Vec<f64> {
        self.cell_dofs[c].iter().map(|&i| global[i]).collect()
    }

    pub fn apply_constraints(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_criss;

    #[test]
    fn criss_counts() {
        for (n, l, want) in [(5, 2, 121), (5, 4, 511), (10, 2, 441), (15, 4, 4231)] {
            let m = generate_criss(n).unwrap();
            assert_eq!(DofLayout::new(&m, l).unwrap().n_dofs(), want, "n={n} l={l}");
        }
    }

    #[test]
    fn triangle_local_count() {
        assert_eq!(local_dof_count(3, 4), 19);
        assert_eq!(local_dof_count(3, 2), 6);
        let o = LocalOffsets::new(3, 4);
        assert_eq!((o.edge_value, o.edge_normal, o.interior, o.total), (3, 9, 18, 19));
    }

    #[test]
    fn every_dof_owned_once() {
        let m = generate_criss(3).unwrap();
        let layout = DofLayout::new(&m, 4).unwrap();
        let mut seen = vec![false; layout.n_dofs()];
        for c in 0..m.n_cells() {
            for &d in layout.cell_dofs(c) {
                seen[d] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        // 4 boundary edges per side, 3 normal moments each.
        assert_eq!(layout.n_constrained(), 12 * 3);
    }

    #[test]
    fn rejects_low_order() {
        let m = generate_criss(1).unwrap();
        assert!(DofLayout::new(&m, 1).is_err());
    }
}
