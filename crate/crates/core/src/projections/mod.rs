//! Degrees of freedom and the computable polynomial projections of the
//! nonconforming virtual element space.
//!
//! Every matrix here acts on a local dof vector ordered as
//! `[vertex values][edge value moments][edge normal moments][interior moments]`,
//! edge blocks following the cell's local edge order. Edge moments are taken
//! against scaled monomials in the global edge orientation, and normal moments
//! against the global edge normal.

mod check;
mod layout;

use nalgebra::{DMatrix, DVector};

use crate::basis::{edge_dim, poly_dim, EdgeBasis, ScaledMonomialBasis};
use crate::error::{Error, Result};
use crate::linalg::{dense_lstsq_kkt, dense_solve};
use crate::mesh::{polygon_geometry, Mesh, Point};
use crate::par::Execution;
use crate::quadrature::{polygon_rule, segment_rule, QuadratureRule};

pub use check::{self_check, CheckReport};
pub use layout::{
    build_dof_layout, edge_normal_count, edge_value_count, interior_count, local_dof_count, DofLayout, LocalOffsets,
};

/// Singular value ratio below which the dof matrix is declared rank deficient.
const RANK_TOLERANCE: f64 = 1e-11;

/// A pointwise function together with its gradient.
pub type ScalarFn<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);
pub type GradientFn<'a> = &'a (dyn Fn(&Point) -> [f64; 2] + Sync);

#[derive(Debug, Clone)]
pub struct LocalEdge {
    /// Edge monomials in the global orientation.
    pub basis: EdgeBasis,
    /// Unit global normal.
    pub normal: Point,
    /// +1 if the global normal points out of the cell.
    pub sign: f64,
    /// Local vertex indices at `s = -1/2` and `s = +1/2`.
    pub ends: [usize; 2],
    pub quad: QuadratureRule,
}

/// Factor multiplying the dof-euclidean stabilization `S^K`. Chosen so that
/// low biharmonic eigenvalues on Lloyd-smoothed Voronoi meshes match the
/// continuous ones.
pub const STABILIZATION_SCALE: f64 = 30.0;

/// Geometry and quadrature of one polygon.
#[derive(Debug, Clone)]
pub struct LocalCell {
    pub id: usize,
    pub points: Vec<Point>,
    pub area: f64,
    pub basis: ScaledMonomialBasis,
    pub edges: Vec<LocalEdge>,
    pub quad: QuadratureRule,
}

impl LocalCell {
    /// `signs[k]` is +1 when local edge `k` (from point `k` to `k+1`) runs
    /// along the global orientation. Integrals are exact to `degree`.
    pub fn new(id: usize, points: Vec<Point>, signs: &[f64], order: usize, degree: usize) -> Result<Self> {
        let n = points.len();
        assert_eq!(signs.len(), n);
        let geom = polygon_geometry(&points);
        let quad = polygon_rule(&points, degree).map_err(|e| Error::DegenerateCell {
            cell: id,
            message: e.to_string(),
        })?;
        let edges = (0..n)
            .map(|k| {
                let next = (k + 1) % n;
                let ends = if signs[k] > 0.0 { [k, next] } else { [next, k] };
                let (a, b) = (points[ends[0]], points[ends[1]]);
                let basis = EdgeBasis::new(&a, &b);
                let t = basis.tangent;
                LocalEdge {
                    basis,
                    normal: Point::new(t.y, -t.x),
                    sign: signs[k],
                    ends,
                    quad: segment_rule(&a, &b, degree),
                }
            })
            .collect();
        Ok(Self {
            id,
            area: geom.area,
            basis: ScaledMonomialBasis::new(geom.centroid, geom.diameter, order),
            points,
            edges,
            quad,
        })
    }

    pub fn from_mesh(mesh: &Mesh, c: usize, order: usize, degree: usize) -> Result<Self> {
        Self::new(c, mesh.cell_points(c), mesh.cell_edge_signs(c), order, degree)
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    pub fn offsets(&self) -> LocalOffsets {
        LocalOffsets::new(self.points.len(), self.order())
    }

    pub fn diameter(&self) -> f64 {
        self.basis.h
    }

    /// Weights applied to the local dofs inside the stabilization and the
    /// value projection. Every dof is multiplied by
    /// `sqrt(STABILIZATION_SCALE)`; edge normal moments additionally by
    /// `h_K / |e|`, which turns them into `h_K` times edge averages.
    pub fn dof_weights(&self) -> DVector<f64> {
        let off = self.offsets();
        let nn = edge_normal_count(self.order());
        let sigma = STABILIZATION_SCALE.sqrt();
        let mut w = DVector::from_element(off.total, sigma);
        for (k, e) in self.edges.iter().enumerate() {
            for j in 0..nn {
                w[off.edge_normal + k * nn + j] = sigma * self.basis.h / e.basis.h;
            }
        }
        w
    }
}

/// Local dofs of a function. The gradient is needed for the normal moments.
pub fn local_dofs_of_function(cell: &LocalCell, f: ScalarFn, grad: Option<GradientFn>) -> Result<DVector<f64>> {
    let order = cell.order();
    let off = cell.offsets();
    let grad = grad.ok_or_else(|| {
        Error::InvalidArgument("a gradient callback is required for the edge normal moments".into())
    })?;
    let mut out = DVector::zeros(off.total);
    for (k, p) in cell.points.iter().enumerate() {
        out[k] = f(p);
    }
    let nv = edge_value_count(order);
    let nn = edge_normal_count(order);
    for (k, e) in cell.edges.iter().enumerate() {
        for (p, w) in e.quad.points.iter().zip(&e.quad.weights) {
            let m = e.basis.eval(p, order as isize);
            let fv = f(p) * w / e.basis.h;
            for j in 0..nv {
                out[off.edge_value + k * nv + j] += fv * m[j];
            }
            let g = grad(p);
            let dn = (g[0] * e.normal.x + g[1] * e.normal.y) * w;
            for j in 0..nn {
                out[off.edge_normal + k * nn + j] += dn * m[j];
            }
        }
    }
    let ni = interior_count(order);
    if ni > 0 {
        for (p, w) in cell.quad.points.iter().zip(&cell.quad.weights) {
            let m = cell.basis.eval_order(p, order - 4);
            let fv = f(p) * w / cell.area;
            for j in 0..ni {
                out[off.interior + j] += fv * m[j];
            }
        }
    }
    Ok(out)
}

/// Global dof interpolation `I_h f`. Boundary normal moments are computed like
/// any other; callers that need the constrained space apply the layout's
/// constraints afterwards.
pub fn dofs_of_function(mesh: &Mesh, layout: &DofLayout, f: ScalarFn, grad: Option<GradientFn>) -> Result<Vec<f64>> {
    let order = layout.order();
    let degree = 2 * order;
    let grad = grad.ok_or_else(|| {
        Error::InvalidArgument("a gradient callback is required for the edge normal moments".into())
    })?;
    let mut out = vec![0.0; layout.n_dofs()];
    for (v, p) in mesh.vertices().iter().enumerate() {
        out[layout.vertex_dof(v)] = f(p);
    }
    let verts = mesh.vertices();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let (a, b) = (verts[edge.vertices[0]], verts[edge.vertices[1]]);
        let basis = EdgeBasis::new(&a, &b);
        let normal = mesh.edge_normal(e);
        let quad = segment_rule(&a, &b, degree);
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            let m = basis.eval(p, order as isize);
            let fv = f(p) * w / basis.h;
            for j in 0..edge_value_count(order) {
                out[layout.edge_value_dof(e, j)] += fv * m[j];
            }
            let g = grad(p);
            let dn = (g[0] * normal.x + g[1] * normal.y) * w;
            for j in 0..edge_normal_count(order) {
                out[layout.edge_normal_dof(e, j)] += dn * m[j];
            }
        }
    }
    if interior_count(order) > 0 {
        for c in 0..mesh.n_cells() {
            let pts = mesh.cell_points(c);
            let geom = polygon_geometry(&pts);
            let basis = ScaledMonomialBasis::new(geom.centroid, geom.diameter, order - 4);
            let quad = polygon_rule(&pts, degree)?;
            for (p, w) in quad.points.iter().zip(&quad.weights) {
                let m = basis.eval(p);
                let fv = f(p) * w / geom.area;
                for (k, mk) in m.iter().enumerate() {
                    out[layout.interior_dof(c, k)] += fv * mk;
                }
            }
        }
    }
    Ok(out)
}

/// The dof matrix `D`: column `j` holds the local dofs of the monomial `m_j`
/// of `P_order`. Fails when `D` is not of full column rank.
pub fn dofs_of_polynomial(cell: &LocalCell) -> Result<DMatrix<f64>> {
    let order = cell.order();
    let off = cell.offsets();
    let np = cell.basis.dim();
    let mut d = DMatrix::zeros(off.total, np);
    for (k, p) in cell.points.iter().enumerate() {
        for (j, v) in cell.basis.eval(p).into_iter().enumerate() {
            d[(k, j)] = v;
        }
    }
    let nv = edge_value_count(order);
    let nn = edge_normal_count(order);
    for (k, e) in cell.edges.iter().enumerate() {
        for (p, w) in e.quad.points.iter().zip(&e.quad.weights) {
            let me = e.basis.eval(p, order as isize);
            let mk = cell.basis.eval(p);
            let gk = cell.basis.eval_gradients(p);
            for a in 0..np {
                let val = mk[a] * w / e.basis.h;
                for j in 0..nv {
                    d[(off.edge_value + k * nv + j, a)] += val * me[j];
                }
                let dn = (gk[a][0] * e.normal.x + gk[a][1] * e.normal.y) * w;
                for j in 0..nn {
                    d[(off.edge_normal + k * nn + j, a)] += dn * me[j];
                }
            }
        }
    }
    let ni = interior_count(order);
    if ni > 0 {
        for (p, w) in cell.quad.points.iter().zip(&cell.quad.weights) {
            let m = cell.basis.eval(p);
            for i in 0..ni {
                for a in 0..np {
                    d[(off.interior + i, a)] += m[i] * m[a] * w / cell.area;
                }
            }
        }
    }
    let sv = d.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > RANK_TOLERANCE * max) {
        return Err(Error::DegenerateCell {
            cell: cell.id,
            message: format!("dof matrix is rank deficient (singular value ratio {:.3e})", min / max),
        });
    }
    Ok(d)
}

/// Gram matrix of the cell basis, `G[a][b] = int_K m_a m_b`.
pub fn cell_gram(cell: &LocalCell) -> DMatrix<f64> {
    let np = cell.basis.dim();
    let mut g = DMatrix::zeros(np, np);
    for (p, w) in cell.quad.points.iter().zip(&cell.quad.weights) {
        let m = DVector::from_vec(cell.basis.eval(p));
        g.ger(*w, &m, &m, 1.0);
    }
    g
}

/// Value projection: the polynomial whose dofs are closest to `v` in the
/// euclidean dof norm, with interior moments matched exactly for `order >= 4`.
pub fn build_value_projection(cell: &LocalCell, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let off = cell.offsets();
    let n = off.total;
    let ni = n - off.interior;
    let c = d.rows(off.interior, ni).into_owned();
    let mut e_int = DMatrix::zeros(ni, n);
    for i in 0..ni {
        e_int[(i, off.interior + i)] = 1.0;
    }
    let w = cell.dof_weights();
    let mut wd = d.clone();
    for (i, wi) in w.iter().enumerate() {
        wd.row_mut(i).scale_mut(*wi);
    }
    dense_lstsq_kkt(&wd, &c, &DMatrix::from_diagonal(&w), &e_int).map_err(|e| Error::DegenerateCell {
        cell: cell.id,
        message: format!("value projection: {e}"),
    })
}

/// Edge integrals shared by the edge, gradient and hessian projections.
struct EdgeMoments {
    /// `int_e m^e_i m^e_j`, size `(order+1)^2`.
    gram: DMatrix<f64>,
    /// `int_e m^e_j m_a`, size `(order+1) x dim P_order`.
    mixed: DMatrix<f64>,
    /// `int_e m^e_j grad m_a . n`, size `order x dim P_order`.
    normal_mixed: DMatrix<f64>,
    /// `int_e d/ds m^e_j m_a`, size `(order+1) x dim P_order`.
    tangent_mixed: DMatrix<f64>,
}

fn edge_moments(cell: &LocalCell, e: &LocalEdge) -> EdgeMoments {
    let order = cell.order();
    let ne = edge_dim(order as isize);
    let np = cell.basis.dim();
    let mut gram = DMatrix::zeros(ne, ne);
    let mut mixed = DMatrix::zeros(ne, np);
    let mut normal_mixed = DMatrix::zeros(order, np);
    let mut tangent_mixed = DMatrix::zeros(ne, np);
    for (p, w) in e.quad.points.iter().zip(&e.quad.weights) {
        let s = e.basis.coordinate(p);
        let me = e.basis.eval_at(s, order as isize);
        let de = e.basis.eval_derivative_at(s, order as isize);
        let mk = cell.basis.eval(p);
        let gk = cell.basis.eval_gradients(p);
        for i in 0..ne {
            for j in 0..ne {
                gram[(i, j)] += w * me[i] * me[j];
            }
            for a in 0..np {
                mixed[(i, a)] += w * me[i] * mk[a];
                tangent_mixed[(i, a)] += w * de[i] * mk[a];
            }
        }
        for i in 0..order {
            for a in 0..np {
                normal_mixed[(i, a)] += w * me[i] * (gk[a][0] * e.normal.x + gk[a][1] * e.normal.y);
            }
        }
    }
    EdgeMoments {
        gram,
        mixed,
        normal_mixed,
        tangent_mixed,
    }
}

/// Edge value projection into `P_order(e)` and edge normal projection into
/// `P_(order-1)(e)` for local edge `k`, as coefficient matrices over the edge
/// monomials.
pub fn build_edge_projections(cell: &LocalCell, k: usize, p0: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let em = edge_moments(cell, &cell.edges[k]);
    edge_projections_from(cell, k, p0, &em)
}

fn edge_projections_from(
    cell: &LocalCell,
    k: usize,
    p0: &DMatrix<f64>,
    em: &EdgeMoments,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let order = cell.order();
    let off = cell.offsets();
    let n = off.total;
    let e = &cell.edges[k];
    let ne = order + 1;
    let nv = edge_value_count(order);
    let nn = edge_normal_count(order);
    let singular = |what: &str, err: Error| Error::DegenerateCell {
        cell: cell.id,
        message: format!("{what} on local edge {k}: {err}"),
    };

    let mut sys = DMatrix::zeros(ne, ne);
    let mut rhs = DMatrix::zeros(ne, n);
    for j in 0..nv {
        sys.row_mut(j).copy_from(&em.gram.row(j));
        rhs[(j, off.edge_value + k * nv + j)] = e.basis.h;
    }
    sys.row_mut(nv).copy_from(&em.gram.row(nv));
    rhs.row_mut(nv).copy_from(&(em.mixed.rows(nv, 1) * p0));
    let lo = e.basis.eval_at(-0.5, order as isize);
    let hi = e.basis.eval_at(0.5, order as isize);
    for j in 0..ne {
        sys[(nv + 1, j)] = lo[j];
        sys[(nv + 2, j)] = hi[j];
    }
    rhs[(nv + 1, e.ends[0])] = 1.0;
    rhs[(nv + 2, e.ends[1])] = 1.0;
    let value = dense_solve(&sys, &rhs).map_err(|err| singular("edge value projection", err))?;

    let g = em.gram.view((0, 0), (order, order)).into_owned();
    let mut rhs = DMatrix::zeros(order, n);
    for j in 0..nn {
        rhs[(j, off.edge_normal + k * nn + j)] = 1.0;
    }
    rhs.row_mut(nn).copy_from(&(em.normal_mixed.rows(nn, 1) * p0));
    let normal = dense_solve(&g, &rhs).map_err(|err| singular("edge normal projection", err))?;
    Ok((value, normal))
}

/// `B_i[b][a] = int_K m_a d_i m_b` over the cell basis.
fn derivative_moments(cell: &LocalCell) -> [DMatrix<f64>; 2] {
    let np = cell.basis.dim();
    let mut b = [DMatrix::zeros(np, np), DMatrix::zeros(np, np)];
    for (p, w) in cell.quad.points.iter().zip(&cell.quad.weights) {
        let m = cell.basis.eval(p);
        let g = cell.basis.eval_gradients(p);
        for (i, bi) in b.iter_mut().enumerate() {
            for r in 0..np {
                let dr = g[r][i] * w;
                if dr == 0.0 {
                    continue;
                }
                for a in 0..np {
                    bi[(r, a)] += dr * m[a];
                }
            }
        }
    }
    b
}

/// Gradient projection: one coefficient matrix over `P_(order-1)(K)` per component.
pub fn build_gradient_projection(
    cell: &LocalCell,
    gram: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    edge_value: &[DMatrix<f64>],
) -> Result<[DMatrix<f64>; 2]> {
    let edges: Vec<_> = cell.edges.iter().map(|e| edge_moments(cell, e)).collect();
    gradient_from(cell, gram, &derivative_moments(cell), p0, edge_value, &edges)
}

fn gradient_from(
    cell: &LocalCell,
    gram: &DMatrix<f64>,
    dm: &[DMatrix<f64>; 2],
    p0: &DMatrix<f64>,
    edge_value: &[DMatrix<f64>],
    em: &[EdgeMoments],
) -> Result<[DMatrix<f64>; 2]> {
    let order = cell.order();
    let n1 = poly_dim(order as isize - 1);
    let g1 = gram.view((0, 0), (n1, n1)).into_owned();
    let mut out = [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut rhs = -(dm[i].rows(0, n1) * p0);
        for (k, e) in cell.edges.iter().enumerate() {
            let nk = e.sign * e.normal[i];
            if nk == 0.0 {
                continue;
            }
            let c = em[k].mixed.columns(0, n1).transpose();
            rhs += (c * &edge_value[k]) * nk;
        }
        *slot = dense_solve(&g1, &rhs).map_err(|err| Error::DegenerateCell {
            cell: cell.id,
            message: format!("gradient projection: {err}"),
        })?;
    }
    Ok(out)
}

/// Hessian projection: coefficient matrices over `P_(order-2)(K)` for each
/// entry `(i, j)`. The result is not symmetrized.
pub fn build_hessian_projection(
    cell: &LocalCell,
    gram: &DMatrix<f64>,
    p1: &[DMatrix<f64>; 2],
    edge_value: &[DMatrix<f64>],
    edge_normal: &[DMatrix<f64>],
) -> Result<[[DMatrix<f64>; 2]; 2]> {
    let edges: Vec<_> = cell.edges.iter().map(|e| edge_moments(cell, e)).collect();
    hessian_from(cell, gram, &derivative_moments(cell), p1, edge_value, edge_normal, &edges)
}

fn hessian_from(
    cell: &LocalCell,
    gram: &DMatrix<f64>,
    dm: &[DMatrix<f64>; 2],
    p1: &[DMatrix<f64>; 2],
    edge_value: &[DMatrix<f64>],
    edge_normal: &[DMatrix<f64>],
    em: &[EdgeMoments],
) -> Result<[[DMatrix<f64>; 2]; 2]> {
    let order = cell.order();
    let n1 = poly_dim(order as isize - 1);
    let n2 = poly_dim(order as isize - 2);
    let g2 = gram.view((0, 0), (n2, n2)).into_owned();
    let mut out: [[DMatrix<f64>; 2]; 2] = Default::default();
    for i in 0..2 {
        for j in 0..2 {
            let mut rhs = -(dm[j].view((0, 0), (n2, n1)) * &p1[i]);
            for (k, e) in cell.edges.iter().enumerate() {
                let nj = e.sign * e.normal[j];
                if nj == 0.0 {
                    continue;
                }
                let ni = e.normal[i];
                let ti = e.basis.tangent[i];
                if ni != 0.0 {
                    let c = em[k].mixed.view((0, 0), (order, n2)).transpose();
                    rhs += (c * &edge_normal[k]) * (ni * nj);
                }
                if ti != 0.0 {
                    let c = em[k].tangent_mixed.columns(0, n2).transpose();
                    rhs += (c * &edge_value[k]) * (ti * nj);
                }
            }
            out[i][j] = dense_solve(&g2, &rhs).map_err(|err| Error::DegenerateCell {
                cell: cell.id,
                message: format!("hessian projection: {err}"),
            })?;
        }
    }
    Ok(out)
}

/// `S = (I - D P0)^T W^2 (I - D P0)` with `W = diag(weights)`.
pub fn build_stabilization(d: &DMatrix<f64>, p0: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    let mut r = DMatrix::identity(n, n) - d * p0;
    for (i, w) in weights.iter().enumerate() {
        r.row_mut(i).scale_mut(*w);
    }
    r.transpose() * r
}

/// All local projection matrices of one cell.
#[derive(Debug, Clone)]
pub struct ElementProjections {
    pub cell: LocalCell,
    /// Dofs of the cell monomials.
    pub dofs: DMatrix<f64>,
    /// Gram matrix of `P_order(K)`; lower orders are leading blocks.
    pub gram: DMatrix<f64>,
    pub p0: DMatrix<f64>,
    pub p1: [DMatrix<f64>; 2],
    pub p2: [[DMatrix<f64>; 2]; 2],
    pub edge_value: Vec<DMatrix<f64>>,
    pub edge_normal: Vec<DMatrix<f64>>,
    pub stabilization: DMatrix<f64>,
}

impl ElementProjections {
    pub fn build(cell: LocalCell) -> Result<Self> {
        let dofs = dofs_of_polynomial(&cell)?;
        let gram = cell_gram(&cell);
        let p0 = build_value_projection(&cell, &dofs)?;
        let em: Vec<_> = cell.edges.iter().map(|e| edge_moments(&cell, e)).collect();
        let mut edge_value = Vec::with_capacity(em.len());
        let mut edge_normal = Vec::with_capacity(em.len());
        for (k, m) in em.iter().enumerate() {
            let (v, n) = edge_projections_from(&cell, k, &p0, m)?;
            edge_value.push(v);
            edge_normal.push(n);
        }
        let dm = derivative_moments(&cell);
        let p1 = gradient_from(&cell, &gram, &dm, &p0, &edge_value, &em)?;
        let p2 = hessian_from(&cell, &gram, &dm, &p1, &edge_value, &edge_normal, &em)?;
        let stabilization = build_stabilization(&dofs, &p0, &cell.dof_weights());
        Ok(Self {
            cell,
            dofs,
            gram,
            p0,
            p1,
            p2,
            edge_value,
            edge_normal,
            stabilization,
        })
    }

    pub fn order(&self) -> usize {
        self.cell.order()
    }

    pub fn n_dofs(&self) -> usize {
        self.p0.ncols()
    }

    /// Value of `Pi_0 v` at `p`.
    pub fn value(&self, v: &[f64], p: &Point) -> f64 {
        let c = &self.p0 * DVector::from_column_slice(v);
        self.cell.basis.eval(p).iter().zip(c.iter()).map(|(m, c)| m * c).sum()
    }

    /// Value of `Pi_1 v` at `p`.
    pub fn gradient(&self, v: &[f64], p: &Point) -> [f64; 2] {
        let v = DVector::from_column_slice(v);
        let m = self.cell.basis.eval_order(p, self.order() - 1);
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (&self.p1[i] * &v).iter().zip(&m).map(|(c, m)| c * m).sum();
        }
        out
    }

    /// Value of `Pi_2 v` at `p`.
    pub fn hessian(&self, v: &[f64], p: &Point) -> [[f64; 2]; 2] {
        let v = DVector::from_column_slice(v);
        let m = self.cell.basis.eval_order(p, self.order() - 2);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (&self.p2[i][j] * &v).iter().zip(&m).map(|(c, m)| c * m).sum();
            }
        }
        out
    }
}

/// Build the projections of every cell, exact for polynomial products up to
/// `2 * order` in the construction integrals.
pub fn build_projections(mesh: &Mesh, layout: &DofLayout, exec: Execution) -> Result<Vec<ElementProjections>> {
    let order = layout.order();
    exec.try_map(mesh.n_cells(), |c| {
        ElementProjections::build(LocalCell::from_mesh(mesh, c, order, 2 * order)?)
    })
}
