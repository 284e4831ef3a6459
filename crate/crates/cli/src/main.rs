//! `chdg` — command-line driver: builds one of the verification benchmarks
//! on a structured box or an MSH 4.1 mesh, runs a chosen iterative solver on
//! the hybridized skeleton system, and exports convergence histories (CSV +
//! JSON) and optionally the reconstructed fields (legacy VTK).

mod output;

use chdg_core::benchmark::{benchmark_setup, l2_projection_error, solution_error, BenchmarkKind};
use chdg_core::mesh::boxmesh::{build_box_mesh, SIDE_NAMES};
use chdg_core::mesh::msh::{load_msh, tag_map_from_names};
use chdg_core::mesh::{build_connectivity, BoundaryKind, Mesh};
use chdg_core::solver::{solve, SolverConfig, SolverMethod, Termination};
use chdg_core::{HybridizedSystem, TransmissionField};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "chdg",
    version,
    about = "Hybridized DG solver for time-harmonic Maxwell problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a benchmark problem, run a solver and export histories.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark problem: plane-wave, cavity or custom.
    #[arg(long)]
    benchmark: BenchmarkKind,

    /// Mesh source: `box:N` for an N×N×N structured unit cube, or a path to
    /// an MSH 4.1 file.
    #[arg(long)]
    mesh: String,

    /// Boundary assignment `name=KIND` with KIND one of E, H, I (repeatable).
    /// Box sides are named xmin, xmax, ymin, ymax, zmin, zmax; MSH surfaces
    /// by physical name or numeric tag.
    #[arg(long = "boundary")]
    boundary: Vec<String>,

    /// Polynomial degree of the discretization (p ≥ 1).
    #[arg(long)]
    p: usize,

    /// Wavenumber κ.
    #[arg(long, default_value_t = 2.1 * std::f64::consts::PI)]
    kappa: f64,

    /// Iterative method: fp, cgnr-nodal, cgnr-modal, gmres-nodal, gmres-modal.
    #[arg(long, default_value = "cgnr-modal")]
    solver: SolverMethod,

    /// GMRES restart length (0 = unrestarted).
    #[arg(long, default_value_t = 30)]
    restart: usize,

    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,

    /// Maximum number of iterations.
    #[arg(long, default_value_t = 20_000)]
    maxit: usize,

    /// Threads for element-parallel sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory for history.csv / history.json / fields.vtk.
    #[arg(long, default_value = "./chdg_out")]
    out: PathBuf,

    /// Exit with a nonzero status if the final relative residual misses rtol.
    #[arg(long)]
    strict: bool,

    /// Log the relative solution error every K iterations (0 disables;
    /// each log costs one extra scattering sweep).
    #[arg(long = "log-error-every", default_value_t = 10)]
    log_error_every: usize,

    /// Export reconstructed fields as legacy VTK (plus a node cloud for p>1).
    #[arg(long = "export-vtk")]
    export_vtk: bool,
}

fn main() {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(args) {
        Ok(code) => std::process::exit(code),
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(1);
        }
    }
}

/// Benchmark-appropriate boundary kind used where none is assigned.
fn default_kind(benchmark: BenchmarkKind) -> BoundaryKind {
    match benchmark {
        BenchmarkKind::Cavity => BoundaryKind::Electric,
        BenchmarkKind::PlaneWave | BenchmarkKind::Custom => BoundaryKind::Impedance,
    }
}

fn parse_boundary_entries(entries: &[String]) -> Result<Vec<(String, BoundaryKind)>, String> {
    entries
        .iter()
        .map(|entry| {
            let (name, kind) = entry.split_once('=').ok_or_else(|| {
                format!("boundary assignment '{entry}' is not of the form name=KIND")
            })?;
            let kind: BoundaryKind = kind.parse()?;
            Ok((name.to_string(), kind))
        })
        .collect()
}

fn build_mesh(
    source: &str,
    entries: &[(String, BoundaryKind)],
    default: BoundaryKind,
) -> Result<Mesh, String> {
    if let Some(n) = source.strip_prefix("box:") {
        let n: usize = n
            .parse()
            .map_err(|_| format!("invalid box resolution in '{source}'"))?;
        if n == 0 {
            return Err("box resolution must be at least 1".into());
        }
        let mut kinds = [default; 6];
        for (name, kind) in entries {
            let side = SIDE_NAMES.iter().position(|s| s == name).ok_or_else(|| {
                format!("unknown box side '{name}' (expected one of {SIDE_NAMES:?})")
            })?;
            kinds[side] = *kind;
        }
        let (raw, tags) = build_box_mesh(n, [[0.0; 3], [1.0; 3]], kinds);
        build_connectivity(&raw, &tags).map_err(|e| e.to_string())
    } else {
        let file = load_msh(Path::new(source)).map_err(|e| e.to_string())?;
        let tags: BTreeMap<i32, BoundaryKind> = if entries.is_empty() {
            file.boundary_tags.iter().map(|&t| (t, default)).collect()
        } else {
            tag_map_from_names(&file, entries).map_err(|e| e.to_string())?
        };
        build_connectivity(&file.raw, &tags).map_err(|e| e.to_string())
    }
}

fn run(args: RunArgs) -> Result<i32, String> {
    if args.p == 0 {
        return Err("polynomial degree must be at least 1".into());
    }
    if args.kappa.is_nan() || args.kappa <= 0.0 {
        return Err("wavenumber must be positive".into());
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("failed to configure thread pool: {e}"))?;
    }

    let entries = parse_boundary_entries(&args.boundary)?;
    let mesh = Arc::new(build_mesh(
        &args.mesh,
        &entries,
        default_kind(args.benchmark),
    )?);
    let setup = benchmark_setup(args.benchmark, args.kappa, &mesh).map_err(|e| e.to_string())?;

    let sys = HybridizedSystem::new(mesh.clone(), args.p, args.kappa).map_err(|e| e.to_string())?;
    println!(
        "mesh {}: {} elements, p={}, {} skeleton unknowns",
        args.mesh,
        sys.num_elements(),
        args.p,
        sys.num_dof()
    );

    let b = sys.build_rhs(&setup.sources, &setup.volume);
    let config = SolverConfig {
        method: args.solver,
        rtol: args.rtol,
        maxit: args.maxit,
        restart: args.restart,
    };

    let volume = &setup.volume;
    let reference = &setup.reference;
    let every = args.log_error_every;
    let mut probe = |iter: usize, g: &TransmissionField| -> Option<f64> {
        (every > 0 && iter.is_multiple_of(every))
            .then(|| solution_error(&sys, g, volume, reference))
    };
    let mut outcome = solve(&sys, &b, &config, Some(&mut probe));

    // Always measure the final iterate, and recompute the residual from
    // scratch as a cross-check on the reported history.
    let final_error = solution_error(&sys, &outcome.g, volume, reference);
    if outcome
        .report
        .errors
        .last()
        .is_none_or(|&(it, _)| it != outcome.report.iterations)
    {
        outcome
            .report
            .errors
            .push((outcome.report.iterations, final_error));
    }
    let recheck = {
        let mut scratch = sys.zero_field();
        let mut ag = sys.zero_field();
        sys.apply(&outcome.g, &mut scratch, &mut ag);
        let mut diff2 = 0.0;
        for (bi, ai) in b.data.iter().zip(&ag.data) {
            diff2 += (bi - ai).norm_sqr();
        }
        let res0 = b.norm2();
        if res0 == 0.0 {
            0.0
        } else {
            diff2.sqrt() / res0
        }
    };
    let projection = l2_projection_error(&mesh, &sys.refel, reference);

    let report = &outcome.report;
    let final_rel = report.final_relative_residual();
    println!(
        "solver {}: {} after {} iterations ({:.3} s)",
        report.method,
        match report.termination {
            Termination::Converged => "converged",
            Termination::MaxIterations => "hit the iteration cap",
            Termination::Stagnation => "stagnated",
        },
        report.iterations,
        report.wall_seconds
    );
    println!("final relative residual {final_rel:.3e} (recomputed {recheck:.3e})");
    println!("final relative error    {final_error:.3e} (projection floor {projection:.3e})");

    std::fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let csv_path = args.out.join("history.csv");
    let json_path = args.out.join("history.json");
    output::write_history_csv(&csv_path, report).map_err(|e| e.to_string())?;
    let meta = output::RunMetadata {
        benchmark: args.benchmark.to_string(),
        kappa: args.kappa,
        p: args.p,
        mesh: args.mesh.clone(),
        num_elements: sys.num_elements(),
        dof: sys.num_dof(),
        solver: report.method.to_string(),
        restart: args.restart,
        rtol: args.rtol,
        maxit: args.maxit,
        threads: args.threads,
        final_relative_residual: final_rel,
        final_relative_residual_check: recheck,
        final_relative_error: final_error,
        projection_error: projection,
    };
    output::write_history_json(&json_path, &meta, report).map_err(|e| e.to_string())?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());

    if args.export_vtk {
        let fields = sys.reconstruct_fields(&outcome.g, volume);
        let vtk_path = args.out.join("fields.vtk");
        output::write_vtk_corners(&vtk_path, &mesh, &sys.refel, &fields)
            .map_err(|e| e.to_string())?;
        println!("wrote {}", vtk_path.display());
        if args.p > 1 {
            let cloud_path = args.out.join("fields_nodes.vtk");
            output::write_vtk_node_cloud(&cloud_path, &mesh, &sys.refel, &fields)
                .map_err(|e| e.to_string())?;
            println!("wrote {}", cloud_path.display());
        }
    }

    if args.strict && final_rel > args.rtol {
        eprintln!(
            "strict mode: relative residual {final_rel:.3e} exceeds rtol {:.3e}",
            args.rtol
        );
        return Ok(2);
    }
    Ok(0)
}
