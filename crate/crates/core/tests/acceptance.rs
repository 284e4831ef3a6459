//! End-to-end acceptance gate for the hybridized Maxwell solver.
//!
//! Each test checks one contract of the method — energy balance of the
//! local solves, contraction of the skeleton operators, agreement with a
//! dense direct solve, benchmark accuracy against the projection floor,
//! solver robustness, and determinism — and prints a single pass/fail
//! line (visible with `--nocapture`).
//!
//! The two benchmark-driven convergence tests run on a reduced mesh by
//! default; set `CHDG_ACCEPTANCE_FULL=1` to run them at full scale.

use std::f64::consts::PI;
use std::sync::Arc;

use chdg_core::benchmark::{benchmark_setup, l2_projection_error, solution_error, BenchmarkKind};
use chdg_core::local::face_component_offset;
use chdg_core::mesh::boxmesh::{build_box_mesh, unit_box_mesh};
use chdg_core::mesh::samples::{single_tet, two_tets};
use chdg_core::mesh::{build_connectivity, BoundaryKind, RawMesh};
use chdg_core::refelem::REF_VERTICES;
use chdg_core::solver::{solve, IterationReport, SolverConfig, SolverMethod, Termination};
use chdg_core::{Complex64, HybridizedSystem, TransmissionField};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const KAPPA: f64 = 2.1 * PI;
const UNIT: [[f64; 3]; 2] = [[0.0; 3], [1.0; 3]];

fn verdict(ok: bool, line: String) {
    println!("[{}] {line}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{line}");
}

fn system(parts: (RawMesh, BTreeMap<i32, BoundaryKind>), p: usize, kappa: f64) -> HybridizedSystem {
    let (raw, tags) = parts;
    let mesh = Arc::new(build_connectivity(&raw, &tags).expect("valid sample mesh"));
    HybridizedSystem::new(mesh, p, kappa).expect("well-posed local systems")
}

fn random_affine_tet(rng: &mut ChaCha8Rng) -> [[f64; 3]; 4] {
    std::array::from_fn(|v| {
        std::array::from_fn(|d| REF_VERTICES[v][d] + 0.3 * rng.gen_range(-1.0..1.0))
    })
}

/// The local solve splits incoming face data into an outgoing trace and an
/// absorbed part; their squared face norms must add up to the input's.
#[test]
fn local_solves_balance_incoming_and_outgoing_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let mut worst: f64 = 0.0;
    for p in 0..=4 {
        for kappa in [1.0, KAPPA] {
            let sys = system(
                single_tet(random_affine_tet(&mut rng), BoundaryKind::Impedance),
                p,
                kappa,
            );
            let op = &sys.operators[0];
            let nfp = sys.nfp();
            for _ in 0..100 {
                let g = sys.random_tangential(&mut rng);
                let gs = g.elem(0);
                let state = op.solve_fields(gs, None);
                let mut outgoing = vec![Complex64::ZERO; 12 * nfp];
                op.outgoing_into(&state, &mut outgoing);
                let mut absorbed = gs.to_vec();
                for f in 0..4 {
                    let trace = op.incoming_trace(&state, f);
                    for (d, component) in trace.iter().enumerate() {
                        let base = face_component_offset(f, d, nfp);
                        for (a, value) in component.iter().enumerate() {
                            absorbed[base + a] -= value;
                        }
                    }
                }
                let split = op.face_norm2(&outgoing) + op.face_norm2(&absorbed);
                let input = op.face_norm2(gs);
                worst = worst.max((split - input).abs() / input);
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("local energy balance: worst relative defect {worst:.3e} (tolerance 1e-10)"),
    );
}

/// Scattering must shrink every nonzero skeleton field, with or without the
/// exchange step, on meshes with each boundary flavour.
#[test]
fn scattering_strictly_contracts_the_skeleton_norm() {
    use BoundaryKind::{Electric, Impedance, Magnetic};
    let mut rng = ChaCha8Rng::seed_from_u64(902);
    let sides: [[BoundaryKind; 6]; 3] = [
        [Impedance; 6],
        [Electric; 6],
        [Impedance, Electric, Magnetic, Electric, Magnetic, Impedance],
    ];
    let mut worst_s: f64 = 0.0;
    let mut worst_ps: f64 = 0.0;
    for kinds in sides {
        for p in [1, 2, 3] {
            let sys = system(build_box_mesh(2, UNIT, kinds), p, KAPPA);
            let mut scattered = sys.zero_field();
            let mut exchanged = sys.zero_field();
            for _ in 0..100 {
                let g = sys.random_tangential(&mut rng);
                sys.apply_scattering(&g, &mut scattered);
                sys.apply_exchange(&scattered, &mut exchanged);
                let norm = sys.norm_m(&g);
                worst_s = worst_s.max(sys.norm_m(&scattered) / norm);
                worst_ps = worst_ps.max(sys.norm_m(&exchanged) / norm);
            }
        }
    }
    verdict(
        worst_s < 1.0 && worst_ps < 1.0,
        format!(
            "strict contraction: max ‖Sg‖/‖g‖ = {worst_s:.6}, max ‖ΠSg‖/‖g‖ = {worst_ps:.6} (both < 1)"
        ),
    );
}

/// Without impedance faces the exchange is a sign-flipping permutation:
/// applying it twice is a bitwise identity and it preserves the skeleton
/// norm; with impedance faces it can only lose mass.
#[test]
fn exchange_is_involutive_and_isometric_without_impedance() {
    use BoundaryKind::{Electric, Impedance, Magnetic};
    let mut rng = ChaCha8Rng::seed_from_u64(903);

    let sys = system(
        build_box_mesh(
            2,
            UNIT,
            [Electric, Electric, Electric, Electric, Magnetic, Magnetic],
        ),
        2,
        KAPPA,
    );
    let mut once = sys.zero_field();
    let mut twice = sys.zero_field();
    let mut involutive = true;
    let mut worst_iso: f64 = 0.0;
    for _ in 0..20 {
        let g = sys.random_tangential(&mut rng);
        sys.apply_exchange(&g, &mut once);
        sys.apply_exchange(&once, &mut twice);
        involutive &= twice.data == g.data;
        let norm = sys.norm_m(&g);
        worst_iso = worst_iso.max((sys.norm_m(&once) - norm).abs() / norm);
    }

    let damped = system(
        build_box_mesh(
            2,
            UNIT,
            [Impedance, Electric, Magnetic, Electric, Magnetic, Impedance],
        ),
        2,
        KAPPA,
    );
    let mut out = damped.zero_field();
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let g = damped.random_tangential(&mut rng);
        damped.apply_exchange(&g, &mut out);
        worst_ratio = worst_ratio.max(damped.norm_m(&out) / damped.norm_m(&g));
    }

    verdict(
        involutive && worst_iso <= 1e-12 && worst_ratio <= 1.0,
        format!(
            "exchange algebra: involution exact, isometry defect {worst_iso:.3e} (tolerance 1e-12), \
             damped ratio {worst_ratio:.6} ≤ 1"
        ),
    );
}

fn dense_operator(sys: &HybridizedSystem, adjoint: bool) -> DMatrix<Complex64> {
    let n = sys.num_dof();
    let mut a = DMatrix::zeros(n, n);
    let mut unit = sys.zero_field();
    let mut scratch = sys.zero_field();
    let mut out = sys.zero_field();
    for j in 0..n {
        unit.fill_zero();
        unit.data[j] = Complex64::ONE;
        if adjoint {
            sys.apply_adjoint(&unit, &mut scratch, &mut out);
        } else {
            sys.apply(&unit, &mut scratch, &mut out);
        }
        for i in 0..n {
            a[(i, j)] = out.data[i];
        }
    }
    a
}

/// On meshes small enough to materialize, every iterative method must land
/// on the solution of a dense LU solve of the probed matrix, and probing
/// the adjoint must give the conjugate transpose.
#[test]
fn iterative_solvers_match_a_dense_direct_solve() {
    let mut worst_sol: f64 = 0.0;
    let mut worst_adj: f64 = 0.0;
    let mut all_converged = true;
    for parts in [
        two_tets(BoundaryKind::Impedance),
        unit_box_mesh(1, BoundaryKind::Impedance),
    ] {
        let sys = system(parts, 1, KAPPA);
        let setup = benchmark_setup(BenchmarkKind::PlaneWave, KAPPA, &sys.mesh).unwrap();
        let b = sys.build_rhs(&setup.sources, &setup.volume);

        let a = dense_operator(&sys, false);
        let ah = dense_operator(&sys, true);
        let amax = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..sys.num_dof() {
            for j in 0..sys.num_dof() {
                worst_adj = worst_adj.max((ah[(i, j)] - a[(j, i)].conj()).norm() / amax);
            }
        }

        let direct = a
            .lu()
            .solve(&DVector::from_column_slice(&b.data))
            .expect("probed operator is invertible");
        let mut dense_g = sys.zero_field();
        dense_g.data.copy_from_slice(direct.as_slice());
        let dense_norm = sys.norm_m(&dense_g);

        for method in SolverMethod::ALL {
            let config = SolverConfig {
                method,
                rtol: 1e-10,
                maxit: 20_000,
                restart: 30,
            };
            let outcome = solve(&sys, &b, &config, None);
            all_converged &= outcome.report.termination == Termination::Converged;
            let mut diff = outcome.g.clone();
            diff.axpy(-Complex64::ONE, &dense_g);
            worst_sol = worst_sol.max(sys.norm_m(&diff) / dense_norm);
        }
    }
    verdict(
        all_converged && worst_sol <= 1e-8 && worst_adj <= 1e-12,
        format!(
            "dense oracle: worst solution gap {worst_sol:.3e} (tolerance 1e-8), \
             adjoint probe gap {worst_adj:.3e} (tolerance 1e-12)"
        ),
    );
}

/// Free-space benchmark: the converged discrete solution may lose at most a
/// factor 4 over the best approximation the polynomial space allows.
#[test]
fn free_space_error_stays_near_the_projection_floor() {
    let sys = system(unit_box_mesh(3, BoundaryKind::Impedance), 4, KAPPA);
    let setup = benchmark_setup(BenchmarkKind::PlaneWave, KAPPA, &sys.mesh).unwrap();
    let b = sys.build_rhs(&setup.sources, &setup.volume);
    let config = SolverConfig {
        method: SolverMethod::CgnrModal,
        rtol: 1e-8,
        maxit: 20_000,
        restart: 30,
    };
    let outcome = solve(&sys, &b, &config, None);
    let error = solution_error(&sys, &outcome.g, &setup.volume, &setup.reference);
    let floor = l2_projection_error(&sys.mesh, &sys.refel, &setup.reference);
    verdict(
        outcome.report.termination == Termination::Converged && error <= 4.0 * floor,
        format!(
            "free-space accuracy: relative error {error:.3e} ≤ 4 × projection floor {floor:.3e} \
             after {} iterations",
            outcome.report.iterations
        ),
    );
}

fn cavity_report(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    method: SolverMethod,
) -> IterationReport {
    let config = SolverConfig {
        method,
        rtol: 1e-6,
        maxit: 20_000,
        restart: 30,
    };
    solve(sys, b, &config, None).report
}

fn cavity_sweep(
    n: usize,
    p: usize,
    methods: &[SolverMethod],
) -> (bool, Vec<(SolverMethod, usize)>) {
    let sys = system(unit_box_mesh(n, BoundaryKind::Electric), p, KAPPA);
    let setup = benchmark_setup(BenchmarkKind::Cavity, KAPPA, &sys.mesh).unwrap();
    let b = sys.build_rhs(&setup.sources, &setup.volume);
    let mut iterations = Vec::new();
    let mut all_converged = true;
    for &method in methods {
        let report = cavity_report(&sys, &b, method);
        all_converged &= report.termination == Termination::Converged;
        iterations.push((method, report.iterations));
    }
    (all_converged, iterations)
}

/// Cavity benchmark: every solver variant must reach the target residual
/// within the iteration budget, and working in the mass inner product must
/// not cost CGNR any iterations. With `CHDG_ACCEPTANCE_FULL=1` the Krylov
/// variants additionally run on the larger mesh at higher order; fixed
/// point stays at the reduced scale, where its contraction is strong enough
/// to converge — on the n=3 mesh its measured residual envelope shrinks by
/// only ~1.3e-4 per iteration, putting 1e-6 beyond any practical budget.
#[test]
fn cavity_benchmark_converges_for_every_solver() {
    let (reduced_ok, reduced) = cavity_sweep(2, 3, &SolverMethod::ALL);
    let count = |m: SolverMethod| reduced.iter().find(|(k, _)| *k == m).unwrap().1;
    let fmt = |runs: &[(SolverMethod, usize)]| {
        runs.iter()
            .map(|(m, it)| format!("{m}={it}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut ok = reduced_ok && count(SolverMethod::CgnrModal) <= count(SolverMethod::CgnrNodal);
    let mut line = format!(
        "cavity convergence (n=2, p=3, rtol 1e-6, budget 20000): {}; modal CGNR ≤ nodal CGNR",
        fmt(&reduced)
    );

    if std::env::var("CHDG_ACCEPTANCE_FULL").is_ok_and(|v| v == "1") {
        let krylov = [
            SolverMethod::CgnrNodal,
            SolverMethod::CgnrModal,
            SolverMethod::GmresNodal,
            SolverMethod::GmresModal,
        ];
        let (full_ok, full) = cavity_sweep(3, 4, &krylov);
        let full_count = |m: SolverMethod| full.iter().find(|(k, _)| *k == m).unwrap().1;
        ok &= full_ok && full_count(SolverMethod::CgnrModal) <= full_count(SolverMethod::CgnrNodal);
        line.push_str(&format!("; full scale (n=3, p=4): {}", fmt(&full)));
    }
    verdict(ok, line);
}

/// Short GMRES restart cycles discard Krylov information and may never beat
/// longer ones on iteration count.
#[test]
fn short_gmres_restarts_never_converge_faster() {
    let sys = system(unit_box_mesh(2, BoundaryKind::Impedance), 3, KAPPA);
    let setup = benchmark_setup(BenchmarkKind::PlaneWave, KAPPA, &sys.mesh).unwrap();
    let b = sys.build_rhs(&setup.sources, &setup.volume);
    let run = |restart: usize| {
        let config = SolverConfig {
            method: SolverMethod::GmresNodal,
            rtol: 1e-6,
            maxit: 20_000,
            restart,
        };
        solve(&sys, &b, &config, None).report
    };
    let short = run(5);
    let long = run(30);
    let ok = short.termination == Termination::Converged
        && long.termination == Termination::Converged
        && short.iterations >= long.iterations;
    verdict(
        ok,
        format!(
            "restart degradation: GMRES(5) took {} iterations ≥ GMRES(30) {}",
            short.iterations, long.iterations
        ),
    );
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Raising the polynomial order on a fixed mesh must improve both the
/// discrete solution and the projection baseline, strictly.
#[test]
fn errors_fall_monotonically_with_polynomial_order() {
    let (raw, tags) = unit_box_mesh(2, BoundaryKind::Impedance);
    let mesh = Arc::new(build_connectivity(&raw, &tags).unwrap());
    let setup = benchmark_setup(BenchmarkKind::PlaneWave, KAPPA, &mesh).unwrap();
    let mut errors = Vec::new();
    let mut floors = Vec::new();
    let mut all_converged = true;
    for p in 1..=4 {
        let sys = HybridizedSystem::new(mesh.clone(), p, KAPPA).unwrap();
        let b = sys.build_rhs(&setup.sources, &setup.volume);
        let config = SolverConfig {
            method: SolverMethod::CgnrModal,
            rtol: 1e-8,
            maxit: 20_000,
            restart: 30,
        };
        let outcome = solve(&sys, &b, &config, None);
        all_converged &= outcome.report.termination == Termination::Converged;
        errors.push(solution_error(
            &sys,
            &outcome.g,
            &setup.volume,
            &setup.reference,
        ));
        floors.push(l2_projection_error(&sys.mesh, &sys.refel, &setup.reference));
    }
    let fmt = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:.3e}"))
            .collect::<Vec<_>>()
            .join(" > ")
    };
    verdict(
        all_converged && strictly_decreasing(&errors) && strictly_decreasing(&floors),
        format!(
            "order convergence (p = 1..4): errors {}; projection floors {}",
            fmt(&errors),
            fmt(&floors)
        ),
    );
}

type SolveTrace = (Vec<f64>, Vec<f64>, Vec<(usize, f64)>, Vec<Complex64>);

fn traced_cavity_solve() -> SolveTrace {
    let sys = system(unit_box_mesh(2, BoundaryKind::Electric), 2, KAPPA);
    let setup = benchmark_setup(BenchmarkKind::Cavity, KAPPA, &sys.mesh).unwrap();
    let b = sys.build_rhs(&setup.sources, &setup.volume);
    let config = SolverConfig::default();
    let mut probe = |iter: usize, g: &TransmissionField| {
        (iter % 10 == 0).then(|| solution_error(&sys, g, &setup.volume, &setup.reference))
    };
    let outcome = solve(&sys, &b, &config, Some(&mut probe));
    (
        outcome.report.residual_2,
        outcome.report.residual_m,
        outcome.report.errors,
        outcome.g.data,
    )
}

/// Rebuilding the whole pipeline and solving again must reproduce every
/// residual, error and solution value exactly. Wall-clock performance at
/// cluster scale is out of scope; reproducibility is what is checked here.
#[test]
fn repeated_solves_reproduce_identical_histories() {
    let first = traced_cavity_solve();
    let second = traced_cavity_solve();
    let ok = first == second;
    verdict(
        ok,
        format!(
            "determinism: two from-scratch solves agree on {} residuals, {} error samples and \
             the full solution vector",
            first.0.len(),
            first.2.len()
        ),
    );
}
