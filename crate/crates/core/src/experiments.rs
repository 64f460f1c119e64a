//! Benchmark problems, error norms and convergence studies.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_mass_and_stiffness, DiscreteSpace, SemilinearEvaluator, SpaceOptions};
use crate::error::{Error, Result};
use crate::mesh::{generate_criss, generate_voronoi, BoundingBox, Mesh, Point};
use crate::par::Execution;
use crate::projections::dofs_of_function;
use crate::timestepping::{ButcherPair, Stepper};

/// Value, gradient and hessian of a function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// Manufactured solution `u = sin(2 pi t) cos(2 pi x) cos(2 pi y)` on the
/// unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Test1 {
    pub epsilon: f64,
}

impl Default for Test1 {
    fn default() -> Self {
        Self { epsilon: 0.1 }
    }
}

impl Test1 {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon }
    }

    pub fn value(&self, t: f64, p: &Point) -> f64 {
        (2.0 * PI * t).sin() * (2.0 * PI * p.x).cos() * (2.0 * PI * p.y).cos()
    }

    pub fn jet(&self, t: f64, p: &Point) -> Jet {
        let k = 2.0 * PI;
        let s = (k * t).sin();
        let (cx, sx, cy, sy) = ((k * p.x).cos(), (k * p.x).sin(), (k * p.y).cos(), (k * p.y).sin());
        Jet {
            value: s * cx * cy,
            gradient: [-k * s * sx * cy, -k * s * cx * sy],
            hessian: [[-k * k * s * cx * cy, k * k * s * sx * sy], [k * k * s * sx * sy, -k * k * s * cx * cy]],
        }
    }

    /// `f = u_t - lap(phi(u) - eps^2 lap u)` with `phi(u) = u^3 - u`.
    pub fn forcing(&self, t: f64, p: &Point) -> f64 {
        let k = 2.0 * PI;
        let g = (k * p.x).cos() * (k * p.y).cos();
        let s = (k * t).sin();
        let u = s * g;
        let u_t = k * (k * t).cos() * g;
        let j = self.jet(t, p);
        let lap = -2.0 * k * k * u;
        let bilap = 4.0 * k.powi(4) * u;
        let grad2 = j.gradient[0].powi(2) + j.gradient[1].powi(2);
        let lap_phi = (3.0 * u * u - 1.0) * lap + 6.0 * u * grad2;
        u_t - lap_phi + self.epsilon * self.epsilon * bilap
    }
}

/// Two tanh bubbles on `(-1, 1)^2`.
pub fn test2_initial(p: &Point, epsilon: f64) -> f64 {
    test2_jet(p, epsilon).value
}

pub fn test2_jet(p: &Point, epsilon: f64) -> Jet {
    let r1 = (p.x - 0.3).powi(2) + p.y * p.y - 0.25f64.powi(2);
    let r2 = (p.x + 0.3).powi(2) + p.y * p.y - 0.3f64.powi(2);
    let (a, b) = ((r1 / epsilon).tanh(), (r2 / epsilon).tanh());
    let (da, db) = ((1.0 - a * a) / epsilon, (1.0 - b * b) / epsilon);
    let g1 = [2.0 * (p.x - 0.3), 2.0 * p.y];
    let g2 = [2.0 * (p.x + 0.3), 2.0 * p.y];
    let gradient = [da * g1[0] * b + a * db * g2[0], da * g1[1] * b + a * db * g2[1]];
    Jet {
        value: a * b,
        gradient,
        hessian: [[0.0; 2]; 2],
    }
}

/// Cross of two tilted bars, `0.95` inside and `-0.95` outside.
pub fn test3_initial(p: &Point) -> f64 {
    let (x, y) = (p.x - 0.5, p.y - 0.5);
    let bar = |a: f64, b: f64| (b - 0.4 * a).abs() + (0.4 * a + b).abs() < 0.2;
    if bar(x, y) || bar(y, x) {
        0.95
    } else {
        -0.95
    }
}

/// Uniform noise in `[-1, 1]` within radius `0.15` of `center`, zero outside.
/// The value at a point depends only on the point and `seed`.
pub fn test4_initial(p: &Point, center: &Point, seed: u64) -> f64 {
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    if dx * dx + dy * dy >= 0.15 * 0.15 {
        return 0.0;
    }
    let key = seed ^ p.x.to_bits().rotate_left(21) ^ p.y.to_bits().rotate_left(43);
    ChaCha8Rng::seed_from_u64(key).random_range(-1.0..=1.0)
}

/// Phase-field benchmarks run by `simulate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    Bubbles,
    Cross,
    Spinodal { seed: u64 },
}

impl Benchmark {
    pub fn domain(&self) -> BoundingBox {
        match self {
            Benchmark::Bubbles => BoundingBox::new(-1.0, -1.0, 1.0, 1.0),
            _ => BoundingBox::unit_square(),
        }
    }

    pub fn default_epsilon(&self) -> f64 {
        match self {
            Benchmark::Bubbles => 0.03,
            Benchmark::Cross => 0.04,
            Benchmark::Spinodal { .. } => 0.01,
        }
    }

    pub fn default_tau(&self) -> f64 {
        match self {
            Benchmark::Spinodal { .. } => 1e-2,
            _ => 1e-3,
        }
    }

    /// Dof interpolation of the initial data. Piecewise constant and random
    /// data get zero normal moments.
    pub fn initial_dofs(&self, space: &DiscreteSpace, epsilon: f64) -> Result<Vec<f64>> {
        let (mesh, layout) = (space.mesh(), space.layout());
        let center = mesh.bbox().center();
        match *self {
            Benchmark::Bubbles => dofs_of_function(
                mesh,
                layout,
                &|p| test2_initial(p, epsilon),
                Some(&|p| test2_jet(p, epsilon).gradient),
            ),
            Benchmark::Cross => dofs_of_function(mesh, layout, &test3_initial, Some(&|_| [0.0; 2])),
            Benchmark::Spinodal { seed } => {
                dofs_of_function(mesh, layout, &|p| test4_initial(p, &center, seed), Some(&|_| [0.0; 2]))
            }
        }
    }
}

/// Broken `L^2`, `H^1` and `H^2` errors of `(Pi_0, Pi_1, Pi_2) u` against an
/// exact solution.
pub fn compute_errors(space: &DiscreteSpace, u: &[f64], exact: &(dyn Fn(&Point) -> Jet + Sync)) -> [f64; 3] {
    let parts = space.map_cells(|c| {
        let proj = &space.projections()[c];
        let quad = space.fine_quadrature(c);
        let ul = space.local(c, u);
        let v = quad.eval(&(&proj.p0 * &ul));
        let g = [quad.eval(&(&proj.p1[0] * &ul)), quad.eval(&(&proj.p1[1] * &ul))];
        let hs = [
            [quad.eval(&(&proj.p2[0][0] * &ul)), quad.eval(&(&proj.p2[0][1] * &ul))],
            [quad.eval(&(&proj.p2[1][0] * &ul)), quad.eval(&(&proj.p2[1][1] * &ul))],
        ];
        let mut e = [0.0; 3];
        for (q, p) in quad.points.iter().enumerate() {
            let jet = exact(p);
            let w = quad.weights[q];
            e[0] += w * (jet.value - v[q]).powi(2);
            e[1] += w * (0..2).map(|i| (jet.gradient[i] - g[i][q]).powi(2)).sum::<f64>();
            e[2] += w * (0..4).map(|k| (jet.hessian[k / 2][k % 2] - hs[k / 2][k % 2][q]).powi(2)).sum::<f64>();
        }
        e
    });
    let mut total = [0.0; 3];
    for e in parts {
        for k in 0..3 {
            total[k] += e[k];
        }
    }
    total.map(f64::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub size: usize,
    pub dofs: usize,
    pub h: f64,
    pub tau: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Maximum-in-time errors per refinement, ordered by decreasing `h`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

/// `log(e0 / e1) / log(h0 / h1)`.
pub fn eoc(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

impl ErrorReport {
    /// Rates between row `k - 1` and row `k` for the three norms.
    pub fn eocs(&self, k: usize) -> Option<[f64; 3]> {
        if k == 0 || k >= self.rows.len() {
            return None;
        }
        let (a, b) = (&self.rows[k - 1], &self.rows[k]);
        Some([eoc(a.l2, b.l2, a.h, b.h), eoc(a.h1, b.h1, a.h, b.h), eoc(a.h2, b.h2, a.h, b.h)])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,dofs,h,l2_error,l2_eoc,h1_error,h1_eoc,h2_error,h2_eoc\n");
        for (k, r) in self.rows.iter().enumerate() {
            let rates = self.eocs(k).map(|e| e.map(|x| format!("{x:?}"))).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:?},{:?},{},{:?},{},{:?},{}",
                r.size, r.dofs, r.h, r.l2, rates[0], r.h1, rates[1], r.h2, rates[2]
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFamily {
    /// `n x n` squares split into two triangles each; the size is `n`.
    Criss,
    /// Lloyd-smoothed Voronoi mesh; the size is the number of seeds.
    Voronoi { seed: u64, lloyd: usize },
}

impl GridFamily {
    pub fn default_sizes(&self) -> Vec<usize> {
        match self {
            GridFamily::Criss => vec![5, 10, 20, 40],
            GridFamily::Voronoi { .. } => vec![25, 100, 400, 1600],
        }
    }

    pub fn build(&self, size: usize) -> Result<Mesh> {
        match *self {
            GridFamily::Criss => generate_criss(size),
            GridFamily::Voronoi { seed, lloyd } => generate_voronoi(size, seed, lloyd),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub scheme: ButcherPair,
    pub order: usize,
    pub family: GridFamily,
    pub sizes: Vec<usize>,
    pub tau0: f64,
    /// Step reduction per refinement.
    pub tau_factor: f64,
    pub epsilon: f64,
    pub t_end: f64,
    pub beta: f64,
    pub execution: Execution,
}

/// Final time of the Test 1 studies.
pub const TEST1_T_END: f64 = 0.1;

impl ConvergenceConfig {
    /// Defaults of the Test 1 study: `tau0 = 1e-2`, `epsilon = 0.1`, and the
    /// step halved with `h` for every scheme.
    pub fn test1(scheme: ButcherPair, order: usize, family: GridFamily) -> Self {
        Self {
            scheme,
            order,
            sizes: family.default_sizes(),
            family,
            tau0: 1e-2,
            tau_factor: 2.0,
            epsilon: 0.1,
            t_end: TEST1_T_END,
            beta: 1.0,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.order < 2 {
            problems.push(format!("order must be at least 2, got {}", self.order));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            problems.push("grid sizes must be positive".to_string());
        }
        if !(self.tau0 > 0.0) || !(self.tau_factor >= 1.0) {
            problems.push("tau0 must be positive and tau_factor at least 1".to_string());
        }
        if !(self.epsilon > 0.0) || !(self.t_end > 0.0) {
            problems.push("epsilon and t_end must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// Run one refinement row of Test 1 and return its max-in-time errors.
pub fn run_test1_row(config: &ConvergenceConfig, size: usize, tau: f64) -> Result<ErrorRow> {
    let mesh = config.family.build(size)?;
    let h = mesh.stats().h;
    let n_cells = mesh.n_cells();
    let options = SpaceOptions {
        execution: config.execution,
        ..Default::default()
    };
    let space = DiscreteSpace::new(mesh, config.order, options)?;
    let forms = assemble_mass_and_stiffness(&space, config.epsilon)?;
    let problem = Test1::new(config.epsilon);
    let forcing = move |t: f64, p: &Point| problem.forcing(t, p);
    let mut stepper = Stepper::new(
        &space,
        &forms,
        SemilinearEvaluator::new(config.beta),
        config.scheme.clone(),
        tau,
    )?
    .with_forcing(&forcing);
    let u0 = dofs_of_function(
        space.mesh(),
        space.layout(),
        &|p| problem.value(0.0, p),
        Some(&|p| problem.jet(0.0, p).gradient),
    )?;
    let mut state = stepper.initial_state(u0, 0.0);
    let mut max = [0.0f64; 3];
    stepper.run(&mut state, config.t_end, |s| {
        let e = compute_errors(&space, &s.u, &|p| problem.jet(s.t, p));
        for k in 0..3 {
            max[k] = max[k].max(e[k]);
        }
    })?;
    Ok(ErrorRow {
        size: n_cells,
        dofs: space.n_dofs(),
        h,
        tau,
        l2: max[0],
        h1: max[1],
        h2: max[2],
    })
}

/// Test 1 convergence study over the configured refinements. `progress` sees
/// each finished row.
pub fn run_convergence(config: &ConvergenceConfig, mut progress: impl FnMut(&ErrorRow)) -> Result<ErrorReport> {
    config.validate()?;
    let mut report = ErrorReport::default();
    let mut tau = config.tau0;
    for &size in &config.sizes {
        let row = run_test1_row(config, size, tau).map_err(|e| Error::Refinement {
            size,
            tau,
            source: Box::new(e),
        })?;
        progress(&row);
        report.rows.push(row);
        tau /= config.tau_factor;
    }
    Ok(report)
}

/// Samples of `Pi_0 u` at every cell's vertices and centroid.
pub fn snapshot_samples(space: &DiscreteSpace, u: &[f64]) -> Vec<(Point, f64)> {
    let mesh = space.mesh();
    let per_cell = space.map_cells(|c| {
        let proj = &space.projections()[c];
        let ul = space.layout().gather(c, u);
        let mut pts = mesh.cell_points(c);
        pts.push(mesh.geometry(c).centroid);
        pts.into_iter().map(|p| (p, proj.value(&ul, &p))).collect::<Vec<_>>()
    });
    per_cell.into_iter().flatten().collect()
}

/// Snapshot CSV with header `x,y,value`.
pub fn snapshot_csv(space: &DiscreteSpace, u: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (p, v) in snapshot_samples(space, u) {
        let _ = writeln!(out, "{:?},{:?},{:?}", p.x, p.y, v);
    }
    out
}

pub fn write_snapshot(path: &Path, space: &DiscreteSpace, u: &[f64]) -> Result<()> {
    std::fs::write(path, snapshot_csv(space, u)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `Pi_0 u` on a `(n + 1) x (n + 1)` lattice over the mesh bounding box,
/// row-major in `y`.
pub fn sample_grid(space: &DiscreteSpace, u: &[f64], n: usize) -> Vec<f64> {
    let mesh = space.mesh();
    let bb = mesh.bbox();
    let values = Execution::default().map((n + 1) * (n + 1), |k| {
        let (i, j) = (k % (n + 1), k / (n + 1));
        // Nudge lattice points off the boundary so point location succeeds.
        let s = |a: f64, w: f64, t: usize| a + w * (1e-12 + (1.0 - 2e-12) * t as f64 / n as f64);
        let p = Point::new(s(bb.min.x, bb.width(), i), s(bb.min.y, bb.height(), j));
        mesh.locate(&p).map(|c| space.projections()[c].value(&space.layout().gather(c, u), &p))
    });
    values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

/// Area and perimeter of `{f > 0}` from bilinear samples on a regular grid,
/// with the zero contour traced by marching squares.
pub fn positive_region(values: &[f64], n: usize, bbox: &BoundingBox) -> (f64, f64) {
    let (dx, dy) = (bbox.width() / n as f64, bbox.height() / n as f64);
    let at = |i: usize, j: usize| values[j * (n + 1) + i];
    let (mut area, mut perimeter) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let f: Vec<f64> = corners.iter().map(|&(a, b)| at(a, b)).collect();
            let xy = |(a, b): (usize, usize)| (a as f64 * dx, b as f64 * dy);
            // Clip the square against f > 0, recording exit crossings.
            let mut poly: Vec<((f64, f64), bool)> = Vec::with_capacity(8);
            for k in 0..4 {
                let (p, q) = (xy(corners[k]), xy(corners[(k + 1) % 4]));
                let (fp, fq) = (f[k], f[(k + 1) % 4]);
                if fp > 0.0 {
                    poly.push((p, false));
                }
                if (fp > 0.0) != (fq > 0.0) {
                    let s = fp / (fp - fq);
                    poly.push(((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)), fp > 0.0));
                }
            }
            let m = poly.len();
            for k in 0..m {
                let ((x0, y0), exit) = poly[k];
                let ((x1, y1), _) = poly[(k + 1) % m];
                area += 0.5 * (x0 * y1 - x1 * y0);
                if exit {
                    perimeter += ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
                }
            }
        }
    }
    (area, perimeter)
}

/// `4 pi A / P^2` of the region where `Pi_0 u > 0`, sampled on an `n x n` grid.
pub fn isoperimetric_ratio(space: &DiscreteSpace, u: &[f64], n: usize) -> f64 {
    let values = sample_grid(space, u, n);
    let (area, perimeter) = positive_region(&values, n, &space.mesh().bbox());
    4.0 * PI * area / (perimeter * perimeter)
}
