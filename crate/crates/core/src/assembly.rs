//! Global assembly of the discrete forms.
//!
//! All cell integrals run through the cell basis evaluated at cached
//! quadrature points; projected functions are evaluated as polynomials, so
//! per-cell work scales with the polynomial dimension rather than with the
//! number of local dofs. Local contributions may be computed in parallel but
//! are always scattered in cell order, which keeps every assembled value
//! bit-identical between execution policies.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::poly_dim;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, SparsityPattern};
use crate::mesh::{Mesh, Point};
use crate::par::Execution;
use crate::projections::{build_dof_layout, build_projections, DofLayout, ElementProjections};
use crate::quadrature::polygon_rule;

/// Quadrature points of a cell with the cell basis evaluated on them.
#[derive(Debug, Clone)]
pub struct CellQuadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `values[(q, a)] = m_a(x_q)` for the full basis of `P_order`.
    pub values: DMatrix<f64>,
}

impl CellQuadrature {
    fn new(proj: &ElementProjections, degree: usize) -> Result<Self> {
        let rule = polygon_rule(&proj.cell.points, degree)?;
        let np = proj.cell.basis.dim();
        let mut values = DMatrix::zeros(rule.len(), np);
        for (q, p) in rule.points.iter().enumerate() {
            for (a, v) in proj.cell.basis.eval(p).into_iter().enumerate() {
                values[(q, a)] = v;
            }
        }
        Ok(Self {
            points: rule.points,
            weights: rule.weights,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Values at the points of the polynomial with the leading coefficients `c`.
    pub fn eval(&self, c: &DVector<f64>) -> DVector<f64> {
        self.values.columns(0, c.len()) * c
    }

    /// `sum_q w_q f_q m(x_q) m(x_q)^T` over the first `n` basis functions.
    pub fn weighted_gram(&self, n: usize, f: &[f64]) -> DMatrix<f64> {
        let v = self.values.columns(0, n);
        let mut scaled = v.clone_owned();
        for (q, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.weights[q] * f[q];
        }
        v.transpose() * scaled
    }
}

/// Quadrature and sizing options of a [`DiscreteSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpaceOptions {
    /// Exactness of the rule used for the semilinear forms and loads;
    /// defaults to `4 order - 2`.
    pub assembly_degree: Option<usize>,
    /// Exactness of the rule used for energies and errors; defaults to `4 order`.
    pub fine_degree: Option<usize>,
    pub execution: Execution,
}

/// A mesh with its dof layout, per-cell projections, quadrature caches and
/// the sparsity pattern of the global matrices.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    mesh: Mesh,
    layout: DofLayout,
    projections: Vec<ElementProjections>,
    assembly_quad: Vec<CellQuadrature>,
    fine_quad: Vec<CellQuadrature>,
    pattern: Arc<SparsityPattern>,
    positions: Vec<Vec<usize>>,
    execution: Execution,
}

impl DiscreteSpace {
    pub fn new(mesh: Mesh, order: usize, options: SpaceOptions) -> Result<Self> {
        let layout = build_dof_layout(&mesh, order)?;
        let exec = options.execution;
        let projections = build_projections(&mesh, &layout, exec)?;
        let ad = options.assembly_degree.unwrap_or(4 * order - 2);
        let fd = options.fine_degree.unwrap_or(4 * order);
        let assembly_quad = exec.try_map(mesh.n_cells(), |c| CellQuadrature::new(&projections[c], ad))?;
        let fine_quad = exec.try_map(mesh.n_cells(), |c| CellQuadrature::new(&projections[c], fd))?;
        let pattern = Arc::new(SparsityPattern::from_blocks(layout.n_dofs(), layout.all_cell_dofs()));
        let positions = (0..mesh.n_cells())
            .map(|c| pattern.block_positions(layout.cell_dofs(c)))
            .collect();
        Ok(Self {
            mesh,
            layout,
            projections,
            assembly_quad,
            fine_quad,
            pattern,
            positions,
            execution: exec,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }

    pub fn projections(&self) -> &[ElementProjections] {
        &self.projections
    }

    pub fn assembly_quadrature(&self, c: usize) -> &CellQuadrature {
        &self.assembly_quad[c]
    }

    pub fn fine_quadrature(&self, c: usize) -> &CellQuadrature {
        &self.fine_quad[c]
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.execution = execution;
    }

    pub fn zero_matrix(&self) -> SparseMatrix {
        SparseMatrix::zeros(self.pattern.clone())
    }

    /// Scatter local matrices (in cell order) into a matrix on the space pattern.
    pub fn scatter_matrix(&self, blocks: &[DMatrix<f64>]) -> SparseMatrix {
        let mut m = self.zero_matrix();
        for (c, b) in blocks.iter().enumerate() {
            m.add_block(&self.positions[c], b);
        }
        m
    }

    /// Scatter local vectors (in cell order) into a global vector.
    pub fn scatter_vector(&self, blocks: &[DVector<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (c, b) in blocks.iter().enumerate() {
            for (&i, v) in self.layout.cell_dofs(c).iter().zip(b.iter()) {
                out[i] += v;
            }
        }
        out
    }

    pub fn local(&self, c: usize, u: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.layout.gather(c, u))
    }

    /// Map a local computation over the cells with the configured policy.
    pub fn map_cells<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        self.execution.map(self.mesh.n_cells(), f)
    }

    pub fn domain_area(&self) -> f64 {
        self.mesh.total_area()
    }
}

/// Assembled linear forms. `a` already carries the factor `epsilon^2`.
#[derive(Debug, Clone)]
pub struct GlobalForms {
    /// `m_h`, including `h_K^2 S^K`.
    pub m: SparseMatrix,
    /// `epsilon^2 a_h`, including `epsilon^2 h_K^-2 S^K`.
    pub a: SparseMatrix,
    /// Gradient Gram `sum_K int Pi_1 v . Pi_1 w`, the expansive form.
    pub k1: SparseMatrix,
    /// `sum_K S^K`.
    pub s: SparseMatrix,
    pub epsilon: f64,
}

/// Local `(m, a_h / epsilon^2, gradient Gram)` of one cell.
pub fn local_linear_forms(proj: &ElementProjections) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let order = proj.order();
    let h = proj.cell.diameter();
    let n1 = poly_dim(order as isize - 1);
    let n2 = poly_dim(order as isize - 2);
    let g1 = proj.gram.view((0, 0), (n1, n1));
    let g2 = proj.gram.view((0, 0), (n2, n2));
    let s = &proj.stabilization;
    let m = proj.p0.transpose() * &proj.gram * &proj.p0 + s * (h * h);
    let mut a = s / (h * h);
    for row in &proj.p2 {
        for p in row {
            a += p.transpose() * g2 * p;
        }
    }
    let mut k = DMatrix::zeros(proj.n_dofs(), proj.n_dofs());
    for p in &proj.p1 {
        k += p.transpose() * g1 * p;
    }
    (m, a, k)
}

pub fn assemble_mass_and_stiffness(space: &DiscreteSpace, epsilon: f64) -> Result<GlobalForms> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let local = space.map_cells(|c| local_linear_forms(&space.projections[c]));
    let mut ms = Vec::with_capacity(local.len());
    let mut as_ = Vec::with_capacity(local.len());
    let mut ks = Vec::with_capacity(local.len());
    for (m, a, k) in local {
        ms.push(m);
        as_.push(a * (epsilon * epsilon));
        ks.push(k);
    }
    let ss: Vec<_> = space.projections.iter().map(|p| p.stabilization.clone()).collect();
    Ok(GlobalForms {
        m: space.scatter_matrix(&ms),
        a: space.scatter_matrix(&as_),
        k1: space.scatter_matrix(&ks),
        s: space.scatter_matrix(&ss),
        epsilon,
    })
}

/// Which part of the split semilinear form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// Coefficient `3 z^2 - 1`, with stabilization.
    Full,
    /// Coefficient `3 z^2`, with stabilization.
    Contractive,
    /// Coefficient `1`, without stabilization.
    Expansive,
}

/// Evaluates `r_h(Pi_0 z; v, .)` and its linearization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemilinearEvaluator {
    pub beta: f64,
}

impl Default for SemilinearEvaluator {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

impl SemilinearEvaluator {
    pub fn new(beta: f64) -> Self {
        Self { beta }
    }

    fn local_residual(&self, space: &DiscreteSpace, c: usize, z: &[f64], v: &[f64], split: Split) -> DVector<f64> {
        let proj = &space.projections[c];
        let quad = &space.assembly_quad[c];
        let n1 = proj.p1[0].nrows();
        let vl = space.local(c, v);
        let coef: Vec<f64> = match split {
            Split::Expansive => vec![1.0; quad.len()],
            _ => {
                let zq = quad.eval(&(&proj.p0 * space.local(c, z)));
                let shift = if split == Split::Full { -1.0 } else { 0.0 };
                zq.iter().map(|z| 3.0 * z * z + shift).collect()
            }
        };
        let w = quad.weighted_gram(n1, &coef);
        let mut r = DVector::zeros(proj.n_dofs());
        for p in &proj.p1 {
            r += p.transpose() * (&w * (p * &vl));
        }
        if split != Split::Expansive {
            r += &proj.stabilization * &vl * self.beta;
        }
        r
    }

    /// Global vector `r` with `r . w = r_h(Pi_0 z; v, w)` for the chosen split.
    pub fn residual(&self, space: &DiscreteSpace, z: &[f64], v: &[f64], split: Split) -> Vec<f64> {
        let local = space.map_cells(|c| self.local_residual(space, c, z, v, split));
        space.scatter_vector(&local)
    }

    /// Local Jacobian split into the frozen-coefficient part, which is
    /// symmetric positive semidefinite, and the coefficient derivative.
    fn local_jacobian_parts(&self, space: &DiscreteSpace, c: usize, u: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let proj = &space.projections[c];
        let quad = &space.assembly_quad[c];
        let n1 = proj.p1[0].nrows();
        let np = proj.p0.nrows();
        let ul = space.local(c, u);
        let zq = quad.eval(&(&proj.p0 * &ul));
        let gq = [quad.eval(&(&proj.p1[0] * &ul)), quad.eval(&(&proj.p1[1] * &ul))];
        let coef: Vec<f64> = zq.iter().map(|z| 3.0 * z * z).collect();
        let w = quad.weighted_gram(n1, &coef);
        let mut sym = &proj.stabilization * self.beta;
        for p in &proj.p1 {
            sym += p.transpose() * (&w * p);
        }
        // Derivative of the coefficient: int 6 z (Pi_0 d) (Pi_1 u . Pi_1 w).
        let m0 = quad.values.columns(0, np);
        let m1 = quad.values.columns(0, n1);
        let mut coupling = DMatrix::zeros(sym.nrows(), sym.ncols());
        for (i, p) in proj.p1.iter().enumerate() {
            let mut scaled = m0.clone_owned();
            for (q, mut row) in scaled.row_iter_mut().enumerate() {
                row *= quad.weights[q] * 6.0 * zq[q] * gq[i][q];
            }
            let x = m1.transpose() * scaled;
            coupling += p.transpose() * (x * &proj.p0);
        }
        (sym, coupling)
    }

    /// Jacobian of `U -> r_h,c(Pi_0 U; U, .)`.
    pub fn jacobian(&self, space: &DiscreteSpace, u: &[f64]) -> SparseMatrix {
        let local = space.map_cells(|c| {
            let (sym, coupling) = self.local_jacobian_parts(space, c, u);
            sym + coupling
        });
        space.scatter_matrix(&local)
    }

    /// The Jacobian as `(S, C)` with `S` symmetric positive semidefinite (the
    /// coefficient `3 z^2` frozen) and `C` the nonsymmetric remainder.
    pub fn jacobian_parts(&self, space: &DiscreteSpace, u: &[f64]) -> (SparseMatrix, SparseMatrix) {
        let local = space.map_cells(|c| self.local_jacobian_parts(space, c, u));
        let (sym, coupling): (Vec<_>, Vec<_>) = local.into_iter().unzip();
        (space.scatter_matrix(&sym), space.scatter_matrix(&coupling))
    }
}

/// Load vector `int f Pi_0 phi_i`.
pub fn assemble_load(space: &DiscreteSpace, f: &(dyn Fn(&Point) -> f64 + Sync)) -> Vec<f64> {
    let local = space.map_cells(|c| {
        let quad = &space.assembly_quad[c];
        let proj = &space.projections[c];
        let fw = DVector::from_iterator(
            quad.len(),
            quad.points.iter().zip(&quad.weights).map(|(p, w)| f(p) * w),
        );
        proj.p0.transpose() * (quad.values.transpose() * fw)
    });
    space.scatter_vector(&local)
}
