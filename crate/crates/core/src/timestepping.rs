//! Additive convex-splitting Runge-Kutta time stepping.
//!
//! Stage `i` solves
//!
//! ```text
//! M (U_i - u_n) + tau sum_{j<=i} [ a_ij (A U_j + r_c(U_j)) - ahat_ij K1 U_j ]
//!     = tau sum_{j<=i} a_ij F(t_n + c_j tau)
//! ```
//!
//! where `A` carries `epsilon^2`, `r_c` is the contractive semilinear form with
//! its stabilization and `K1` the expansive gradient Gram. Stages with
//! `a_ii != 0` are solved by Newton's method; the others are linear solves
//! with the mass matrix.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::{assemble_load, DiscreteSpace, GlobalForms, SemilinearEvaluator, Split};
use crate::error::{Error, Result};
use crate::linalg::{gmres, norm2, CholeskySolver, SparseFactor, SparseMatrix, SparseSolver};
use crate::mesh::Point;

/// Implicit table `(A, b, c)` and explicit table `(Ahat, bhat, chat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherPair {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub a_hat: Vec<Vec<f64>>,
    pub b_hat: Vec<f64>,
    pub c_hat: Vec<f64>,
}

impl ButcherPair {
    /// Validate the tables and derive `c = A 1`, `chat = Ahat 1`.
    pub fn new(name: &str, a: Vec<Vec<f64>>, b: Vec<f64>, a_hat: Vec<Vec<f64>>, b_hat: Vec<f64>) -> Result<Self> {
        let s = b.len();
        let bad = |m: String| Err(Error::InvalidTableau(format!("{name}: {m}")));
        if s == 0 {
            return bad("no stages".into());
        }
        if a.len() != s || a_hat.len() != s || b_hat.len() != s || a.iter().chain(&a_hat).any(|r| r.len() != s) {
            return bad(format!("tables must all be {s}x{s} with {s} weights"));
        }
        for i in 0..s {
            for j in 0..s {
                if j > i && a[i][j] != 0.0 {
                    return bad(format!("implicit table is not lower triangular at ({i}, {j})"));
                }
                if j >= i && a_hat[i][j] != 0.0 {
                    return bad(format!("explicit table is not strictly lower triangular at ({i}, {j})"));
                }
            }
        }
        let all = a.iter().flatten().chain(a_hat.iter().flatten()).chain(&b).chain(&b_hat);
        if all.into_iter().any(|x| !x.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        let c = a.iter().map(|r| r.iter().sum()).collect();
        let c_hat = a_hat.iter().map(|r| r.iter().sum()).collect();
        Ok(Self {
            name: name.to_string(),
            a,
            b,
            c,
            a_hat,
            b_hat,
            c_hat,
        })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// True when both weight vectors equal the last rows of their tables, so
    /// the step result is the last stage.
    pub fn is_stiffly_accurate(&self) -> bool {
        let s = self.stages();
        self.b == self.a[s - 1] && self.b_hat == self.a_hat[s - 1]
    }
}

/// First-order pair: explicit expansive part, implicit everything else.
pub fn csrk1() -> ButcherPair {
    ButcherPair::new(
        "csrk1",
        vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        vec![0.0, 1.0],
        vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        vec![1.0, 0.0],
    )
    .expect("valid tableau")
}

/// Second-order four-stage pair.
pub fn csrk2() -> ButcherPair {
    ButcherPair::new(
        "csrk2",
        vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.5, 1.0, 0.0],
            vec![0.0, 1.0, -1.0, 1.0],
        ],
        vec![0.0, 1.0, -1.0, 1.0],
        vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.5, 1.0, 0.0, 0.0],
            vec![1.0, -1.0, 1.0, 0.0],
        ],
        vec![1.0, -1.0, 1.0, 0.0],
    )
    .expect("valid tableau")
}

/// Relative residual at which a Newton correction from GMRES is accepted.
const KRYLOV_TOLERANCE: f64 = 1e-10;
const KRYLOV_MAX_ITERATIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Residual norms, starting with the initial guess.
    pub history: Vec<f64>,
}

/// Newton's method with a direct solve per iteration. Stops when
/// `|R| < max(abs_tol, rel_tol |R_0|)`.
pub fn newton_solve(
    residual: impl FnMut(&[f64]) -> Vec<f64>,
    mut jacobian: impl FnMut(&[f64]) -> SparseMatrix,
    initial: Vec<f64>,
    solver: &mut SparseSolver,
    options: NewtonOptions,
) -> Result<NewtonReport> {
    newton_solve_with(residual, |x, r| solver.factor(&jacobian(x))?.solve(r), initial, options)
}

/// Newton's method where `step(x, r)` returns the correction `J(x)^-1 r`.
pub fn newton_solve_with(
    mut residual: impl FnMut(&[f64]) -> Vec<f64>,
    mut step: impl FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
    initial: Vec<f64>,
    options: NewtonOptions,
) -> Result<NewtonReport> {
    let mut x = initial;
    let mut r = residual(&x);
    let r0 = norm2(&r);
    let tol = options.abs_tol.max(options.rel_tol * r0);
    let mut history = vec![r0];
    let mut norm = r0;
    let mut iterations = 0;
    while !(norm < tol) {
        if iterations == options.max_iterations || !norm.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations,
                last_residual: norm,
                history,
            });
        }
        let dx = step(&x, &r)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
        r = residual(&x);
        norm = norm2(&r);
        history.push(norm);
        iterations += 1;
    }
    Ok(NewtonReport {
        solution: x,
        iterations,
        history,
    })
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub u: Vec<f64>,
    pub step: usize,
    pub diagnostics: Vec<DiagnosticRecord>,
}

/// Free energy `sum_K int 1/4 (1 - (Pi_0 u)^2)^2 + epsilon^2 / 2 |Pi_1 u|^2`.
pub fn energy(space: &DiscreteSpace, u: &[f64], epsilon: f64) -> f64 {
    let parts = space.map_cells(|c| {
        let proj = &space.projections()[c];
        let quad = space.fine_quadrature(c);
        let ul = space.local(c, u);
        let v = quad.eval(&(&proj.p0 * &ul));
        let gx = quad.eval(&(&proj.p1[0] * &ul));
        let gy = quad.eval(&(&proj.p1[1] * &ul));
        (0..quad.len())
            .map(|q| {
                let psi = 0.25 * (1.0 - v[q] * v[q]).powi(2);
                quad.weights[q] * (psi + 0.5 * epsilon * epsilon * (gx[q] * gx[q] + gy[q] * gy[q]))
            })
            .sum::<f64>()
    });
    parts.iter().sum()
}

/// `sum_K int Pi_0 u`.
pub fn mass(space: &DiscreteSpace, u: &[f64]) -> f64 {
    let parts = space.map_cells(|c| {
        let proj = &space.projections()[c];
        let quad = space.assembly_quadrature(c);
        let v = quad.eval(&(&proj.p0 * space.local(c, u)));
        v.iter().zip(&quad.weights).map(|(v, w)| v * w).sum::<f64>()
    });
    parts.iter().sum()
}

/// Space-time forcing `f(t, x)`.
pub type Forcing = dyn Fn(f64, &Point) -> f64 + Sync;

/// Advances the discrete Cahn-Hilliard system with a fixed step and tableau.
pub struct Stepper<'a> {
    space: &'a DiscreteSpace,
    forms: &'a GlobalForms,
    semilinear: SemilinearEvaluator,
    tableau: ButcherPair,
    tau: f64,
    forcing: Option<&'a Forcing>,
    newton: NewtonOptions,
    solver: SparseSolver,
    preconditioner: CholeskySolver,
    mass_factor: Option<SparseFactor>,
    constrained: Vec<bool>,
    histories: Vec<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        space: &'a DiscreteSpace,
        forms: &'a GlobalForms,
        semilinear: SemilinearEvaluator,
        tableau: ButcherPair,
        tau: f64,
    ) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be non-negative, got {tau}")));
        }
        Ok(Self {
            space,
            forms,
            semilinear,
            tableau,
            tau,
            forcing: None,
            newton: NewtonOptions::default(),
            solver: SparseSolver::new(),
            preconditioner: CholeskySolver::new(),
            mass_factor: None,
            constrained: space.layout().constrained().to_vec(),
            histories: Vec::new(),
        })
    }

    pub fn with_forcing(mut self, forcing: &'a Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_newton(mut self, options: NewtonOptions) -> Self {
        self.newton = options;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tableau(&self) -> &ButcherPair {
        &self.tableau
    }

    /// Newton residual histories of the implicit stages of the last step.
    pub fn newton_histories(&self) -> &[Vec<f64>] {
        &self.histories
    }

    /// Initial state with constraints applied and a diagnostics row at `t0`.
    pub fn initial_state(&self, mut u: Vec<f64>, t0: f64) -> SimulationState {
        self.space.layout().apply_constraints(&mut u);
        let record = DiagnosticRecord {
            t: t0,
            energy: energy(self.space, &u, self.forms.epsilon),
            mass: mass(self.space, &u),
            newton_iters: 0,
        };
        SimulationState {
            t: t0,
            u,
            step: 0,
            diagnostics: vec![record],
        }
    }

    fn load(&self, t: f64) -> Option<Vec<f64>> {
        self.forcing.map(|f| assemble_load(self.space, &|p: &Point| f(t, p)))
    }

    fn constrain(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }

    fn solve_mass(&mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.mass_factor.is_none() {
            let mut m = self.forms.m.clone();
            m.apply_identity_rows(&self.constrained);
            self.mass_factor = Some(self.solver.factor(&m)?);
        }
        let mut rhs = rhs.to_vec();
        self.constrain(&mut rhs);
        self.mass_factor.as_ref().expect("factored").solve(&rhs)
    }

    /// `A U + r_c(U; U)` for a stage value.
    fn implicit_operator(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.semilinear.residual(self.space, u, u, Split::Contractive);
        self.forms.a.mul_vec_add(u, &mut out);
        out
    }

    /// Advance one step, returning the total Newton iterations.
    pub fn step(&mut self, state: &mut SimulationState) -> Result<usize> {
        let s = self.tableau.stages();
        let tau = self.tau;
        let n = state.u.len();
        let un = state.u.clone();
        let mu_n = self.forms.m.mul_vec(&un);
        let loads: Vec<Option<Vec<f64>>> = (0..s)
            .map(|j| {
                let used = (0..s).any(|i| self.tableau.a[i][j] != 0.0) || self.tableau.b[j] != 0.0;
                if used {
                    self.load(state.t + self.tableau.c[j] * tau)
                } else {
                    None
                }
            })
            .collect();
        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut implicit: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut expansive: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut iters = 0;
        self.histories.clear();
        for i in 0..s {
            let (a_row, ah_row) = (&self.tableau.a[i], &self.tableau.a_hat[i]);
            let coupled = (0..i).any(|j| a_row[j] != 0.0 || ah_row[j] != 0.0);
            let forced = (0..=i).any(|j| a_row[j] != 0.0 && loads[j].is_some());
            let aii = a_row[i];
            if aii == 0.0 && !coupled && !forced {
                stages.push(un.clone());
            } else {
                // Known part: M u_n - tau * explicit couplings + tau * loads.
                let mut known = mu_n.clone();
                for j in 0..i {
                    if a_row[j] != 0.0 {
                        for k in 0..n {
                            known[k] -= tau * a_row[j] * implicit[j][k];
                        }
                    }
                    if ah_row[j] != 0.0 {
                        for k in 0..n {
                            known[k] += tau * ah_row[j] * expansive[j][k];
                        }
                    }
                }
                for (j, load) in loads.iter().enumerate().take(i + 1) {
                    if let (Some(l), true) = (load, a_row[j] != 0.0) {
                        for k in 0..n {
                            known[k] += tau * a_row[j] * l[k];
                        }
                    }
                }
                let ui = if aii == 0.0 {
                    self.solve_mass(&known)?
                } else {
                    let guess = stages.last().cloned().unwrap_or_else(|| un.clone());
                    let report = self.newton_stage(&known, aii, guess)?;
                    iters += report.iterations;
                    self.histories.push(report.history);
                    report.solution
                };
                stages.push(ui);
            }
            let ui = &stages[i];
            let needs_implicit = (i + 1..s).any(|r| self.tableau.a[r][i] != 0.0) || self.tableau.b[i] != 0.0;
            implicit.push(if needs_implicit { self.implicit_operator(ui) } else { Vec::new() });
            let needs_expansive = (i + 1..s).any(|r| self.tableau.a_hat[r][i] != 0.0) || self.tableau.b_hat[i] != 0.0;
            expansive.push(if needs_expansive { self.forms.k1.mul_vec(ui) } else { Vec::new() });
        }
        let next = if self.tableau.is_stiffly_accurate() {
            stages.pop().expect("at least one stage")
        } else {
            let mut rhs = mu_n;
            for j in 0..s {
                let (b, bh) = (self.tableau.b[j], self.tableau.b_hat[j]);
                for k in 0..n {
                    if b != 0.0 {
                        rhs[k] -= tau * b * implicit[j][k];
                        if let Some(l) = &loads[j] {
                            rhs[k] += tau * b * l[k];
                        }
                    }
                    if bh != 0.0 {
                        rhs[k] += tau * bh * expansive[j][k];
                    }
                }
            }
            self.solve_mass(&rhs)?
        };
        state.u = next;
        state.t += tau;
        state.step += 1;
        state.diagnostics.push(DiagnosticRecord {
            t: state.t,
            energy: energy(self.space, &state.u, self.forms.epsilon),
            mass: mass(self.space, &state.u),
            newton_iters: iters,
        });
        Ok(iters)
    }

    /// Solve `M U + tau a_ii (A U + r_c(U)) = known` for `U`.
    fn newton_stage(&mut self, known: &[f64], aii: f64, mut guess: Vec<f64>) -> Result<NewtonReport> {
        self.constrain(&mut guess);
        let scale = self.tau * aii;
        let space = self.space;
        let forms = self.forms;
        let semilinear = self.semilinear;
        let constrained = &self.constrained;
        let residual = |u: &[f64]| {
            let mut r = semilinear.residual(space, u, u, Split::Contractive);
            forms.a.mul_vec_add(u, &mut r);
            r.iter_mut().for_each(|x| *x *= scale);
            forms.m.mul_vec_add(u, &mut r);
            for (k, x) in r.iter_mut().enumerate() {
                *x = if constrained[k] { 0.0 } else { *x - known[k] };
            }
            r
        };
        // Newton corrections come from GMRES preconditioned with the Cholesky
        // factor of the symmetric part; LU of the full Jacobian is the fallback.
        let (solver, preconditioner) = (&mut self.solver, &mut self.preconditioner);
        let step = |u: &[f64], r: &[f64]| -> Result<Vec<f64>> {
            let (mut sym, coupling) = semilinear.jacobian_parts(space, u);
            sym.axpy(1.0, &forms.a);
            sym.scale(scale);
            sym.axpy(1.0, &forms.m);
            let mut j = sym.clone();
            j.axpy(scale, &coupling);
            sym.apply_identity_rows(constrained);
            j.apply_identity_rows(constrained);
            if let Ok(factor) = preconditioner.factor(&sym) {
                let krylov = gmres(|v| j.mul_vec(v), |v| factor.solve(v), r, KRYLOV_TOLERANCE, KRYLOV_MAX_ITERATIONS);
                if let Some(dx) = krylov {
                    return Ok(dx);
                }
            }
            solver.factor(&j)?.solve(r)
        };
        newton_solve_with(residual, step, guess, self.newton)
    }

    /// Step until `t_end` (within half a step), recording diagnostics.
    pub fn run(&mut self, state: &mut SimulationState, t_end: f64, mut observer: impl FnMut(&SimulationState)) -> Result<()> {
        observer(state);
        if self.tau == 0.0 {
            return Ok(());
        }
        while state.t < t_end - 0.5 * self.tau {
            self.step(state)?;
            observer(state);
        }
        Ok(())
    }
}

/// Diagnostics as CSV with header `t,energy,mass,newton_iters`.
pub fn diagnostics_csv(records: &[DiagnosticRecord]) -> String {
    let mut out = String::from("t,energy,mass,newton_iters\n");
    for r in records {
        let _ = writeln!(out, "{:?},{:?},{:?},{}", r.t, r.energy, r.mass, r.newton_iters);
    }
    out
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    std::fs::write(path, diagnostics_csv(records)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
