mod common;

use common::{random_convex_polygon, Poly};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ncvem::basis::poly_dim;
use ncvem::mesh::generate_criss;
use ncvem::projections::{
    build_dof_layout, build_projections, dofs_of_function, dofs_of_polynomial, local_dofs_of_function,
    ElementProjections, LocalCell,
};
use ncvem::quadrature::polygon_rule;
use ncvem::{Execution, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn local(points: Vec<Point>, order: usize) -> LocalCell {
    let signs = vec![1.0; points.len()];
    LocalCell::new(0, points, &signs, order, 2 * order).unwrap()
}

fn sample_points(cell: &LocalCell) -> Vec<Point> {
    let c = cell.basis.center;
    let mut pts: Vec<Point> = cell.points.iter().map(|p| c + (p - c) * 0.8).collect();
    pts.push(c);
    pts
}

fn exactness_deviation(points: Vec<Point>, order: usize, poly: &Poly) -> (f64, f64, f64) {
    let cell = local(points, order);
    let proj = ElementProjections::build(cell.clone()).unwrap();
    let f = |p: &Point| poly.value(p);
    let g = |p: &Point| poly.gradient(p);
    let v = local_dofs_of_function(&cell, &f, Some(&g)).unwrap();
    let (mut e0, mut e1, mut e2) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s0, mut s1, mut s2) = (1e-300f64, 1e-300f64, 1e-300f64);
    for p in sample_points(&cell) {
        e0 = e0.max((proj.value(v.as_slice(), &p) - poly.value(&p)).abs());
        s0 = s0.max(poly.value(&p).abs());
        let (gh, ge) = (proj.gradient(v.as_slice(), &p), poly.gradient(&p));
        let (hh, he) = (proj.hessian(v.as_slice(), &p), poly.hessian(&p));
        for i in 0..2 {
            e1 = e1.max((gh[i] - ge[i]).abs());
            s1 = s1.max(ge[i].abs());
            for j in 0..2 {
                e2 = e2.max((hh[i][j] - he[i][j]).abs());
                s2 = s2.max(he[i][j].abs());
            }
        }
    }
    (e0 / s0, e1 / s1.max(s0), e2 / s2.max(s0))
}

#[test]
fn polynomial_exactness_on_random_polygons() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for trial in 0..60 {
        let order = 2 + trial % 3;
        let n = rng.random_range(3..=10);
        let pts = random_convex_polygon(&mut rng, n);
        let poly = Poly::random(&mut rng, order as i32);
        let (a, b, c) = exactness_deviation(pts, order, &poly);
        worst = worst.max(a).max(b).max(c);
    }
    assert!(worst < 1e-9, "worst relative deviation {worst:.3e}");
}

#[test]
fn stabilization_kernel_is_polynomial_dofs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..30 {
        let order = 2 + trial % 3;
        let n = rng.random_range(3..=9);
        let proj = ElementProjections::build(local(random_convex_polygon(&mut rng, n), order)).unwrap();
        let s = &proj.stabilization;
        assert!((s - s.transpose()).norm() < 1e-12);
        let eig = SymmetricEigen::new(s.clone()).eigenvalues;
        assert!(eig.iter().all(|&l| l > -1e-12));
        let kernel = eig.iter().filter(|&&l| l.abs() < 1e-10).count();
        assert_eq!(kernel, poly_dim(order as isize), "trial {trial}, {n} vertices, order {order}");
    }
}

#[test]
fn value_projection_constraint_and_minimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cell = local(random_convex_polygon(&mut rng, 6), 4);
    let proj = ElementProjections::build(cell.clone()).unwrap();
    let off = cell.offsets();
    let n = off.total;
    let d = &proj.dofs;
    let c_int = d.rows(off.interior, n - off.interior).into_owned();
    // Feasible directions: kernel of the interior moment rows.
    let svd = c_int.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let np = d.ncols();
    let full_vt = {
        let mut q = DMatrix::<f64>::identity(np, np);
        q.view_mut((0, 0), (vt.nrows(), np)).copy_from(&vt);
        q.transpose().qr().q()
    };
    let kernel = full_vt.columns(vt.nrows(), np - vt.nrows()).into_owned();
    for _ in 0..20 {
        let v = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let c = &proj.p0 * &v;
        // Interior moments of Pi_0 v match those of v.
        let moments = &c_int * &c;
        for i in 0..moments.len() {
            assert!((moments[i] - v[off.interior + i]).abs() < 1e-12);
        }
        // The objective is the stabilization seminorm of the residual.
        let weights = cell.dof_weights();
        let obj = |c: &DVector<f64>| (d * c - &v).component_mul(&weights).norm_squared();
        let base = obj(&c);
        for _ in 0..100 {
            let w = DVector::from_fn(kernel.ncols(), |_, _| rng.random::<f64>() - 0.5);
            let dir = &kernel * w * 1e-3;
            assert!(obj(&(&c + &dir)) >= base * (1.0 - 1e-12));
        }
    }
}

#[test]
fn edge_value_projection_interpolates_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for order in 2..=4 {
        let cell = local(random_convex_polygon(&mut rng, 5), order);
        let proj = ElementProjections::build(cell.clone()).unwrap();
        let v = DVector::from_fn(proj.n_dofs(), |_, _| rng.random::<f64>());
        for (k, e) in cell.edges.iter().enumerate() {
            let q = &proj.edge_value[k] * &v;
            let at = |s: f64| e.basis.eval_at(s, order as isize).iter().zip(q.iter()).map(|(m, c)| m * c).sum::<f64>();
            assert!((at(-0.5) - v[e.ends[0]]).abs() < 1e-12);
            assert!((at(0.5) - v[e.ends[1]]).abs() < 1e-12);
        }
    }
}

#[test]
fn edge_projections_reproduce_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let order = 4;
    let cell = local(random_convex_polygon(&mut rng, 7), order);
    let proj = ElementProjections::build(cell.clone()).unwrap();
    let poly = Poly::random(&mut rng, order as i32);
    let v = local_dofs_of_function(&cell, &|p| poly.value(p), Some(&|p| poly.gradient(p))).unwrap();
    for (k, e) in cell.edges.iter().enumerate() {
        let q0 = &proj.edge_value[k] * &v;
        let q1 = &proj.edge_normal[k] * &v;
        for s in [-0.4, -0.1, 0.2, 0.45] {
            let p = e.basis.midpoint + e.basis.tangent * (s * e.basis.h);
            let v0: f64 = e.basis.eval_at(s, order as isize).iter().zip(q0.iter()).map(|(m, c)| m * c).sum();
            let v1: f64 = e.basis.eval_at(s, order as isize - 1).iter().zip(q1.iter()).map(|(m, c)| m * c).sum();
            let g = poly.gradient(&p);
            assert!((v0 - poly.value(&p)).abs() < 1e-10);
            assert!((v1 - (g[0] * e.normal.x + g[1] * e.normal.y)).abs() < 1e-10);
        }
    }
}

#[test]
fn dof_matrix_is_scale_invariant_and_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..100 {
        let order = 2 + trial % 3;
        let nv = rng.random_range(3..=10);
        let pts = random_convex_polygon(&mut rng, nv);
        let d = dofs_of_polynomial(&local(pts.clone(), order)).unwrap();
        assert_eq!(d.clone().rank(1e-10), poly_dim(order as isize));
        if trial % 10 == 0 {
            for s in [1e-3, 1e3] {
                let shift = Point::new(3.0, -2.0);
                let scaled: Vec<Point> = pts.iter().map(|p| p * s + shift).collect();
                let ds = dofs_of_polynomial(&local(scaled, order)).unwrap();
                assert!((&ds - &d).norm() <= 1e-8 * d.norm(), "scale {s}");
                let spread = ds.amax() / d.amax();
                assert!(spread < 10.0 && spread > 0.1);
            }
        }
    }
}

#[test]
fn stabilization_is_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts = random_convex_polygon(&mut rng, 6);
    let a = ElementProjections::build(local(pts.clone(), 3)).unwrap();
    let moved: Vec<Point> = pts.iter().map(|p| p + Point::new(10.0, 5.0)).collect();
    let b = ElementProjections::build(local(moved, 3)).unwrap();
    assert!((&a.stabilization - &b.stabilization).norm() < 1e-9 * a.stabilization.norm());
    assert!((&a.p0 - &b.p0).norm() < 1e-9 * a.p0.norm());
}

#[test]
fn gather_of_global_interpolant_matches_local() {
    let mesh = generate_criss(3).unwrap();
    let layout = build_dof_layout(&mesh, 4).unwrap();
    let f = |p: &Point| (p.x * 3.0).sin() * (p.y + 0.3).exp();
    let g = |p: &Point| [3.0 * (p.x * 3.0).cos() * (p.y + 0.3).exp(), (p.x * 3.0).sin() * (p.y + 0.3).exp()];
    let global = dofs_of_function(&mesh, &layout, &f, Some(&g)).unwrap();
    for c in 0..mesh.n_cells() {
        let cell = LocalCell::from_mesh(&mesh, c, 4, 8).unwrap();
        let loc = local_dofs_of_function(&cell, &f, Some(&g)).unwrap();
        let gathered = layout.gather(c, &global);
        for (a, b) in loc.iter().zip(&gathered) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

fn interpolation_error(n: usize, order: usize) -> f64 {
    let mesh = generate_criss(n).unwrap();
    let layout = build_dof_layout(&mesh, order).unwrap();
    let tau = std::f64::consts::TAU;
    let f = move |p: &Point| (tau * p.x).cos() * (tau * p.y).cos();
    let g = move |p: &Point| {
        [-tau * (tau * p.x).sin() * (tau * p.y).cos(), -tau * (tau * p.x).cos() * (tau * p.y).sin()]
    };
    let u = dofs_of_function(&mesh, &layout, &f, Some(&g)).unwrap();
    let proj = build_projections(&mesh, &layout, Execution::Parallel).unwrap();
    let mut err = 0.0;
    for (c, pr) in proj.iter().enumerate() {
        let v = layout.gather(c, &u);
        let q = polygon_rule(&mesh.cell_points(c), 4 * order + 4).unwrap();
        err += q.integrate(|p| (f(p) - pr.value(&v, p)).powi(2));
    }
    err.sqrt()
}

#[test]
fn interpolation_rates() {
    for order in 2..=4 {
        let e: Vec<f64> = [5, 10, 20].iter().map(|&n| interpolation_error(n, order)).collect();
        let eoc = (e[1] / e[2]).log2();
        assert!(eoc >= order as f64 + 0.7, "order {order}: errors {e:?}, eoc {eoc}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exactness_property(seed in any::<u64>(), order in 2usize..=4, n in 3usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = random_convex_polygon(&mut rng, n);
        let poly = Poly::random(&mut rng, order as i32);
        let (a, b, c) = exactness_deviation(pts, order, &poly);
        prop_assert!(a < 1e-9 && b < 1e-9 && c < 1e-9, "{a:.2e} {b:.2e} {c:.2e}");
    }

    #[test]
    fn stabilization_kills_polynomials(seed in any::<u64>(), order in 2usize..=4, n in 3usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proj = ElementProjections::build(local(random_convex_polygon(&mut rng, n), order)).unwrap();
        prop_assert!((&proj.stabilization * &proj.dofs).amax() < 1e-12);
    }
}
