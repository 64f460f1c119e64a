//! `ncvem` command-line driver.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncvem::assembly::{assemble_mass_and_stiffness, DiscreteSpace, SemilinearEvaluator, SpaceOptions};
use ncvem::experiments::{
    isoperimetric_ratio, run_convergence, write_snapshot, Benchmark, ConvergenceConfig, GridFamily,
};
use ncvem::mesh::{generate_criss_in, generate_voronoi_in, load_mesh, save_mesh, BoundingBox, Mesh};
use ncvem::projections::self_check;
use ncvem::timestepping::{csrk1, csrk2, write_diagnostics_csv, ButcherPair, Stepper};
use ncvem::Execution;

#[derive(Parser)]
#[command(name = "ncvem", version, about = "Nonconforming VEM solver for the Cahn-Hilliard equation")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh file and print its statistics.
    Mesh(MeshArgs),
    /// Check polynomial reproduction of the projections and the stabilization kernel.
    Check(CheckArgs),
    /// Convergence study against the manufactured solution.
    Converge(ConvergeArgs),
    /// Run a phase-field benchmark.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Csrk1,
    Csrk2,
}

impl Scheme {
    fn tableau(self) -> ButcherPair {
        match self {
            Scheme::Csrk1 => csrk1(),
            Scheme::Csrk2 => csrk2(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Criss,
    Voronoi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TestCase {
    Bubbles,
    Cross,
    Spinodal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Policy {
    Sequential,
    #[default]
    Parallel,
}

impl From<Policy> for Execution {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Sequential => Execution::Sequential,
            Policy::Parallel => Execution::Parallel,
        }
    }
}

#[derive(Args, Clone, Debug)]
struct GridArgs {
    /// `N x N` squares, each split into two triangles.
    #[arg(long)]
    criss: Option<usize>,
    /// Voronoi mesh with this many seeds.
    #[arg(long)]
    voronoi: Option<usize>,
    /// Read the mesh from a file written by `mesh`.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Seed for the Voronoi generators.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Lloyd iterations for Voronoi meshes.
    #[arg(long, default_value_t = 100)]
    lloyd: usize,
}

impl GridArgs {
    fn problems(&self, out: &mut Vec<String>) {
        let given = [self.criss.is_some(), self.voronoi.is_some(), self.mesh.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            out.push("give only one of --criss, --voronoi, --mesh".into());
        }
        if self.criss == Some(0) {
            out.push("--criss must be positive".into());
        }
        if matches!(self.voronoi, Some(n) if n < 2) {
            out.push("--voronoi needs at least 2 seeds".into());
        }
    }

    fn build(&self, bbox: BoundingBox, default_criss: usize) -> ncvem::Result<Mesh> {
        if let Some(path) = &self.mesh {
            return load_mesh(path);
        }
        match self.voronoi {
            Some(n) => generate_voronoi_in(bbox, n, self.seed, self.lloyd),
            None => generate_criss_in(self.criss.unwrap_or(default_criss), bbox),
        }
    }

    fn settings(&self, out: &mut Vec<(&'static str, String)>) {
        if let Some(n) = self.criss {
            out.push(("criss", n.to_string()));
        }
        if let Some(n) = self.voronoi {
            out.push(("voronoi", n.to_string()));
        }
        if let Some(p) = &self.mesh {
            out.push(("mesh", p.display().to_string()));
        }
        out.push(("seed", self.seed.to_string()));
        out.push(("lloyd", self.lloyd.to_string()));
    }
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Flat `key = value` file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Policy::Parallel)]
    execution: Policy,
}

#[derive(Args, Clone, Debug)]
struct MeshArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Output mesh file.
    #[arg(long, default_value = "mesh.json")]
    output: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Debug)]
struct CheckArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Random polynomials per cell.
    #[arg(long, default_value_t = 4)]
    polynomials: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 7)]
    rng_seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Debug)]
struct ConvergeArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Csrk2)]
    scheme: Scheme,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, value_enum, default_value_t = Family::Criss)]
    grid: Family,
    /// Comma-separated refinement sizes; defaults to the family's sequence.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-2)]
    tau0: f64,
    /// Step reduction per refinement [default: 2]
    #[arg(long)]
    tau_factor: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = ncvem::experiments::TEST1_T_END)]
    t_end: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    lloyd: usize,
    #[arg(long, default_value = "out")]
    output: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = TestCase::Cross)]
    test: TestCase,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Scheme::Csrk2)]
    scheme: Scheme,
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Interface width; defaults per test.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Time step; defaults per test.
    #[arg(long)]
    tau: Option<f64>,
    /// Final time; defaults per test.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Quadrature exactness for assembly, overriding `4 order - 2`.
    #[arg(long)]
    quadrature_degree: Option<usize>,
    /// Write a field snapshot every this many steps; 0 writes only the first and last.
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Seed of the spinodal noise.
    #[arg(long, default_value_t = 7)]
    rng_seed: u64,
    #[arg(long, default_value = "out")]
    output: PathBuf,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Validation(String),
    Solver(String),
    Acceptance(String),
}

impl From<ncvem::Error> for Failure {
    fn from(e: ncvem::Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn validate(problems: Vec<String>) -> Outcome {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(problems.join("; ")))
    }
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Validation(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Write `manifest.json` and `run.conf`; the latter reproduces the run with
/// `--config`.
fn write_manifest(dir: &Path, command: &str, settings: &[(&str, String)]) -> Outcome {
    let config: serde_json::Map<String, serde_json::Value> =
        settings.iter().map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone()))).collect();
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "parallel_feature": cfg!(feature = "parallel"),
        "config": config,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&dir.join("manifest.json"), &(text + "\n"))?;
    write_text(&dir.join("run.conf"), &config::render(settings))
}

fn cmd_mesh(args: MeshArgs) -> Outcome {
    let mut problems = Vec::new();
    args.grid.problems(&mut problems);
    if args.grid.criss.is_none() && args.grid.voronoi.is_none() && args.grid.mesh.is_none() {
        problems.push("give one of --criss, --voronoi, --mesh".into());
    }
    validate(problems)?;
    let mesh = args.grid.build(BoundingBox::unit_square(), 0)?;
    save_mesh(&mesh, &args.output)?;
    let s = mesh.stats();
    println!(
        "cells={} vertices={} edges={} h={:.4} min_edge_ratio={:.4} file={}",
        s.n_cells,
        s.n_vertices,
        s.n_edges,
        s.h,
        s.min_edge_ratio,
        args.output.display()
    );
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Outcome {
    let mut problems = Vec::new();
    args.grid.problems(&mut problems);
    if args.order < 2 {
        problems.push(format!("--order must be at least 2, got {}", args.order));
    }
    if args.polynomials == 0 {
        problems.push("--polynomials must be positive".into());
    }
    validate(problems)?;
    let mesh = args.grid.build(BoundingBox::unit_square(), 5)?;
    let r = self_check(&mesh, args.order, args.polynomials, args.rng_seed, args.common.execution.into())?;
    println!(
        "cells={} polynomials={} value={:.3e} gradient={:.3e} hessian={:.3e} stabilization={:.3e} kernel_mismatches={}",
        r.cells,
        r.polynomials,
        r.value,
        r.gradient,
        r.hessian,
        r.stabilization_residual,
        r.kernel_mismatches.len()
    );
    if r.passed(args.tolerance) {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!(
            "projection check failed at tolerance {:e}: max deviation {:.3e}, kernel mismatches in cells {:?}",
            args.tolerance,
            r.max_deviation(),
            r.kernel_mismatches
        )))
    }
}

fn cmd_converge(args: ConvergeArgs) -> Outcome {
    let family = match args.grid {
        Family::Criss => GridFamily::Criss,
        Family::Voronoi => GridFamily::Voronoi {
            seed: args.seed,
            lloyd: args.lloyd,
        },
    };
    let mut config = ConvergenceConfig::test1(args.scheme.tableau(), args.order, family);
    if let Some(s) = &args.sizes {
        config.sizes = s.clone();
    }
    if let Some(f) = args.tau_factor {
        config.tau_factor = f;
    }
    config.tau0 = args.tau0;
    config.epsilon = args.epsilon;
    config.t_end = args.t_end;
    config.beta = args.beta;
    config.execution = args.common.execution.into();
    config.validate()?;
    create_dir(&args.output)?;
    let size_list: Vec<String> = config.sizes.iter().map(|s| s.to_string()).collect();
    let settings = vec![
        ("scheme", format!("{:?}", args.scheme).to_lowercase()),
        ("order", args.order.to_string()),
        ("grid", format!("{:?}", args.grid).to_lowercase()),
        ("sizes", size_list.join(",")),
        ("tau0", format!("{:?}", config.tau0)),
        ("tau-factor", format!("{:?}", config.tau_factor)),
        ("epsilon", format!("{:?}", config.epsilon)),
        ("t-end", format!("{:?}", config.t_end)),
        ("beta", format!("{:?}", config.beta)),
        ("seed", args.seed.to_string()),
        ("lloyd", args.lloyd.to_string()),
        ("execution", format!("{:?}", args.common.execution).to_lowercase()),
    ];
    write_manifest(&args.output, "converge", &settings)?;
    let start = Instant::now();
    let report = run_convergence(&config, |row| {
        eprintln!(
            "size={} dofs={} h={:.4} tau={:.3e} l2={:.4e} h1={:.4e} h2={:.4e} elapsed={:.1}s",
            row.size,
            row.dofs,
            row.h,
            row.tau,
            row.l2,
            row.h1,
            row.h2,
            start.elapsed().as_secs_f64()
        );
    })?;
    let path = args.output.join("convergence.csv");
    report.write_csv(&path)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let bench = match args.test {
        TestCase::Bubbles => Benchmark::Bubbles,
        TestCase::Cross => Benchmark::Cross,
        TestCase::Spinodal => Benchmark::Spinodal { seed: args.rng_seed },
    };
    let epsilon = args.epsilon.unwrap_or(bench.default_epsilon());
    let tau = args.tau.unwrap_or(bench.default_tau());
    let t_end = args.t_end.unwrap_or(match bench {
        Benchmark::Bubbles => 0.3,
        Benchmark::Cross => 0.8,
        Benchmark::Spinodal { .. } => 5.0,
    });
    let mut problems = Vec::new();
    args.grid.problems(&mut problems);
    if args.order < 2 {
        problems.push(format!("--order must be at least 2, got {}", args.order));
    }
    if !(epsilon > 0.0) {
        problems.push(format!("--epsilon must be positive, got {epsilon}"));
    }
    if !(tau > 0.0) {
        problems.push(format!("--tau must be positive, got {tau}"));
    }
    if !(t_end >= 0.0) {
        problems.push(format!("--t-end must be non-negative, got {t_end}"));
    }
    if !(args.beta >= 0.0) {
        problems.push(format!("--beta must be non-negative, got {}", args.beta));
    }
    if matches!(args.quadrature_degree, Some(d) if d < 2 * args.order) {
        problems.push(format!("--quadrature-degree must be at least {}", 2 * args.order));
    }
    validate(problems)?;
    create_dir(&args.output)?;
    let mut settings = vec![("test", format!("{:?}", args.test).to_lowercase())];
    args.grid.settings(&mut settings);
    settings.extend([
        ("scheme", format!("{:?}", args.scheme).to_lowercase()),
        ("order", args.order.to_string()),
        ("epsilon", format!("{epsilon:?}")),
        ("tau", format!("{tau:?}")),
        ("t-end", format!("{t_end:?}")),
        ("beta", format!("{:?}", args.beta)),
        ("snapshot-every", args.snapshot_every.to_string()),
        ("rng-seed", args.rng_seed.to_string()),
        ("execution", format!("{:?}", args.common.execution).to_lowercase()),
    ]);
    if let Some(d) = args.quadrature_degree {
        settings.push(("quadrature-degree", d.to_string()));
    }
    write_manifest(&args.output, "simulate", &settings)?;

    let mesh = args.grid.build(bench.domain(), 25)?;
    let options = SpaceOptions {
        assembly_degree: args.quadrature_degree,
        execution: args.common.execution.into(),
        ..Default::default()
    };
    let space = DiscreteSpace::new(mesh, args.order, options)?;
    let forms = assemble_mass_and_stiffness(&space, epsilon)?;
    let u0 = bench.initial_dofs(&space, epsilon)?;
    let mut stepper = Stepper::new(&space, &forms, SemilinearEvaluator::new(args.beta), args.scheme.tableau(), tau)?;
    let mut state = stepper.initial_state(u0, 0.0);
    eprintln!("cells={} dofs={} steps={}", space.mesh().n_cells(), space.n_dofs(), (t_end / tau).round());
    let snapshot = |step: usize, u: &[f64]| write_snapshot(&args.output.join(format!("snapshot_{step:06}.csv")), &space, u);
    snapshot(0, &state.u)?;
    let start = Instant::now();
    let mut result = Ok(());
    while state.t < t_end - 0.5 * tau {
        if let Err(e) = stepper.step(&mut state) {
            result = Err(e);
            break;
        }
        if args.snapshot_every > 0 && state.step % args.snapshot_every == 0 {
            snapshot(state.step, &state.u)?;
        }
        if state.step % 50 == 0 {
            let r = state.diagnostics.last().expect("recorded");
            eprintln!("t={:.4} energy={:.8e} elapsed={:.1}s", r.t, r.energy, start.elapsed().as_secs_f64());
        }
    }
    // Diagnostics up to the failure are still useful.
    write_diagnostics_csv(&args.output.join("diagnostics.csv"), &state.diagnostics)?;
    result?;
    if state.step > 0 && (args.snapshot_every == 0 || state.step % args.snapshot_every != 0) {
        snapshot(state.step, &state.u)?;
    }
    let d = &state.diagnostics;
    let (first, last) = (d[0], d[d.len() - 1]);
    let rise = d.windows(2).map(|w| w[1].energy - w[0].energy).fold(0.0f64, f64::max);
    let drift = d.iter().map(|r| (r.mass - first.mass).abs()).fold(0.0f64, f64::max) / space.domain_area();
    println!(
        "steps={} t={:.6} energy_initial={:.10e} energy_final={:.10e} max_energy_increase={:.3e} mass_drift={:.3e}",
        state.step, last.t, first.energy, last.energy, rise, drift
    );
    if bench == Benchmark::Cross {
        println!("isoperimetric_ratio={:.4}", isoperimetric_ratio(&space, &state.u, 400));
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Check(a) => cmd_check(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Acceptance(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(3)
        }
    }
}
