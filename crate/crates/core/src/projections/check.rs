//! Runtime self-check of the projections on a mesh.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ElementProjections, LocalCell};
use crate::basis::poly_dim;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::par::Execution;

/// Largest deviations found by [`self_check`]. Deviations are relative to the
/// largest magnitude of the exact quantity on the cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub cells: usize,
    pub polynomials: usize,
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
    /// Largest `|S D c| / |D c|` over the sampled polynomials.
    pub stabilization_residual: f64,
    /// Cells whose stabilization kernel dimension differs from `dim P_l`.
    pub kernel_mismatches: Vec<usize>,
}

impl CheckReport {
    pub fn max_deviation(&self) -> f64 {
        self.value.max(self.gradient).max(self.hessian)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation() <= tol && self.stabilization_residual <= tol && self.kernel_mismatches.is_empty()
    }
}

struct CellCheck {
    dev: [f64; 4],
    kernel_ok: bool,
}

fn check_cell(mesh: &Mesh, c: usize, order: usize, per_cell: usize, seed: u64) -> Result<CellCheck> {
    let proj = ElementProjections::build(LocalCell::from_mesh(mesh, c, order, 2 * order)?)?;
    let basis = &proj.cell.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut dev = [0.0f64; 4];
    for _ in 0..per_cell {
        let coef = DVector::from_fn(basis.dim(), |_, _| rng.random_range(-1.0..1.0));
        let v = &proj.dofs * &coef;
        let sv = &proj.stabilization * &v;
        dev[3] = dev[3].max(sv.norm() / v.norm().max(f64::MIN_POSITIVE));
        let mut scale = [f64::MIN_POSITIVE; 3];
        let mut err = [0.0f64; 3];
        for p in &proj.cell.quad.points {
            let (m, g, hs) = (basis.eval(p), basis.eval_gradients(p), basis.eval_hessians(p));
            let mut exact = (0.0, [0.0; 2], [[0.0; 2]; 2]);
            for k in 0..basis.dim() {
                exact.0 += coef[k] * m[k];
                for i in 0..2 {
                    exact.1[i] += coef[k] * g[k][i];
                    for j in 0..2 {
                        exact.2[i][j] += coef[k] * hs[k][i][j];
                    }
                }
            }
            let (pv, pg, ph) = (proj.value(v.as_slice(), p), proj.gradient(v.as_slice(), p), proj.hessian(v.as_slice(), p));
            scale[0] = scale[0].max(exact.0.abs());
            err[0] = err[0].max((pv - exact.0).abs());
            for i in 0..2 {
                scale[1] = scale[1].max(exact.1[i].abs());
                err[1] = err[1].max((pg[i] - exact.1[i]).abs());
                for j in 0..2 {
                    scale[2] = scale[2].max(exact.2[i][j].abs());
                    err[2] = err[2].max((ph[i][j] - exact.2[i][j]).abs());
                }
            }
        }
        for k in 0..3 {
            dev[k] = dev[k].max(err[k] / scale[k]);
        }
    }
    let eig = SymmetricEigen::new(proj.stabilization.clone()).eigenvalues;
    // Nonzero eigenvalues of S are O(1); S vanishes when N_K = dim P_l.
    let top = eig.amax().max(1.0);
    let kernel = eig.iter().filter(|&&l| l <= 1e-10 * top).count();
    Ok(CellCheck {
        dev,
        kernel_ok: kernel == poly_dim(order as isize),
    })
}

/// Check polynomial reproduction of `Pi_0`, `Pi_1`, `Pi_2` with
/// `per_cell` random polynomials of degree `order` per cell, and the kernel
/// of the stabilization.
pub fn self_check(mesh: &Mesh, order: usize, per_cell: usize, seed: u64, exec: Execution) -> Result<CheckReport> {
    let cells = exec.try_map(mesh.n_cells(), |c| check_cell(mesh, c, order, per_cell, seed))?;
    let mut report = CheckReport {
        cells: cells.len(),
        polynomials: cells.len() * per_cell,
        ..Default::default()
    };
    for (c, r) in cells.iter().enumerate() {
        report.value = report.value.max(r.dev[0]);
        report.gradient = report.gradient.max(r.dev[1]);
        report.hessian = report.hessian.max(r.dev[2]);
        report.stabilization_residual = report.stabilization_residual.max(r.dev[3]);
        if !r.kernel_ok {
            report.kernel_mismatches.push(c);
        }
    }
    Ok(report)
}
