//! Iterative solvers for the hybridized system (I − ΠS)g = b: damped-free
//! fixed point, CGNR on the normal equations (Euclidean or skeleton-mass
//! inner product), and restarted GMRES (same two inner-product choices).
//!
//! Every method stops and reports on the explicitly recomputed true residual
//! ‖b − A g_i‖₂, never on recurrence estimates.

use crate::skeleton::{HybridizedSystem, TransmissionField};
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    FixedPoint,
    CgnrNodal,
    CgnrModal,
    GmresNodal,
    GmresModal,
}

impl SolverMethod {
    pub fn is_modal(self) -> bool {
        matches!(self, SolverMethod::CgnrModal | SolverMethod::GmresModal)
    }

    pub const ALL: [SolverMethod; 5] = [
        SolverMethod::FixedPoint,
        SolverMethod::CgnrNodal,
        SolverMethod::CgnrModal,
        SolverMethod::GmresNodal,
        SolverMethod::GmresModal,
    ];
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SolverMethod::FixedPoint => "fp",
            SolverMethod::CgnrNodal => "cgnr-nodal",
            SolverMethod::CgnrModal => "cgnr-modal",
            SolverMethod::GmresNodal => "gmres-nodal",
            SolverMethod::GmresModal => "gmres-modal",
        };
        f.write_str(name)
    }
}

impl FromStr for SolverMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp" | "fixed-point" => Ok(SolverMethod::FixedPoint),
            "cgnr-nodal" => Ok(SolverMethod::CgnrNodal),
            "cgnr-modal" => Ok(SolverMethod::CgnrModal),
            "gmres-nodal" => Ok(SolverMethod::GmresNodal),
            "gmres-modal" => Ok(SolverMethod::GmresModal),
            other => Err(format!(
                "unknown solver '{other}' (expected fp, cgnr-nodal, cgnr-modal, gmres-nodal or gmres-modal)"
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub rtol: f64,
    pub maxit: usize,
    /// GMRES restart length; 0 means unrestarted.
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::CgnrModal,
            rtol: 1e-8,
            maxit: 20_000,
            restart: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Stagnation,
}

/// Per-iteration convergence record. `residual_2[i]` is the true Euclidean
/// residual norm after i iterations (entry 0 is the initial residual);
/// `residual_m` holds the skeleton-mass norms of the same residuals for the
/// modal methods and is empty otherwise.  `errors` collects whatever the
/// optional probe returned, tagged with the iteration index.
#[derive(Clone, Debug)]
pub struct IterationReport {
    pub method: SolverMethod,
    pub termination: Termination,
    pub iterations: usize,
    pub residual_2: Vec<f64>,
    pub residual_m: Vec<f64>,
    pub errors: Vec<(usize, f64)>,
    pub wall_seconds: f64,
}

impl IterationReport {
    pub fn final_relative_residual(&self) -> f64 {
        let r0 = self.residual_2[0];
        let rf = *self.residual_2.last().unwrap();
        if r0 == 0.0 {
            0.0
        } else {
            rf / r0
        }
    }
}

pub struct SolveOutcome {
    pub g: TransmissionField,
    pub report: IterationReport,
}

/// Optional per-iteration observer; returning Some(e) records (iter, e).
pub type ErrorProbe<'a> = &'a mut dyn FnMut(usize, &TransmissionField) -> Option<f64>;

/// Monitors the true residual history and decides when to halt.
struct Monitor<'a> {
    report: IterationReport,
    probe: Option<ErrorProbe<'a>>,
    res0: f64,
    rtol: f64,
    maxit: usize,
    best: f64,
    since_improvement: usize,
}

const STAGNATION_WINDOW: usize = 50;
const STAGNATION_DROP: f64 = 1e-14;

impl<'a> Monitor<'a> {
    fn new(
        method: SolverMethod,
        rtol: f64,
        maxit: usize,
        res0: f64,
        res0_m: Option<f64>,
        probe: Option<ErrorProbe<'a>>,
        g0: &TransmissionField,
    ) -> Self {
        let mut report = IterationReport {
            method,
            termination: Termination::MaxIterations,
            iterations: 0,
            residual_2: vec![res0],
            residual_m: res0_m.into_iter().collect(),
            errors: Vec::new(),
            wall_seconds: 0.0,
        };
        let mut probe = probe;
        if let Some(p) = probe.as_deref_mut() {
            if let Some(e) = p(0, g0) {
                report.errors.push((0, e));
            }
        }
        Monitor {
            report,
            probe,
            res0,
            rtol,
            maxit,
            best: 1.0,
            since_improvement: 0,
        }
    }

    /// Record one iteration; returns Some(termination) when the run is over.
    fn record(
        &mut self,
        iter: usize,
        res: f64,
        res_m: Option<f64>,
        g: &TransmissionField,
    ) -> Option<Termination> {
        self.report.iterations = iter;
        self.report.residual_2.push(res);
        if let Some(m) = res_m {
            self.report.residual_m.push(m);
        }
        if let Some(p) = self.probe.as_deref_mut() {
            if let Some(e) = p(iter, g) {
                self.report.errors.push((iter, e));
            }
        }
        let rel = if self.res0 == 0.0 {
            0.0
        } else {
            res / self.res0
        };
        if rel <= self.rtol {
            return Some(Termination::Converged);
        }
        if rel < self.best - STAGNATION_DROP {
            self.best = rel;
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
            if self.since_improvement >= STAGNATION_WINDOW {
                return Some(Termination::Stagnation);
            }
        }
        if iter >= self.maxit {
            return Some(Termination::MaxIterations);
        }
        None
    }

    fn finish(mut self, termination: Termination, started: Instant) -> IterationReport {
        self.report.termination = termination;
        self.report.wall_seconds = started.elapsed().as_secs_f64();
        self.report
    }
}

/// r = b − A g; returns ‖r‖₂.
fn true_residual(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    g: &TransmissionField,
    scratch: &mut TransmissionField,
    ag: &mut TransmissionField,
    r: &mut TransmissionField,
) -> f64 {
    sys.apply(g, scratch, ag);
    for i in 0..r.data.len() {
        r.data[i] = b.data[i] - ag.data[i];
    }
    r.norm2()
}

pub fn solve(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    config: &SolverConfig,
    probe: Option<ErrorProbe>,
) -> SolveOutcome {
    let started = Instant::now();
    let g = sys.zero_field();
    let res0 = b.norm2();
    let res0_m = config.method.is_modal().then(|| sys.norm_m(b));

    if res0 == 0.0 {
        let monitor = Monitor::new(
            config.method,
            config.rtol,
            config.maxit,
            0.0,
            res0_m,
            probe,
            &g,
        );
        return SolveOutcome {
            g,
            report: monitor.finish(Termination::Converged, started),
        };
    }

    match config.method {
        SolverMethod::FixedPoint => fixed_point(sys, b, config, probe, started),
        SolverMethod::CgnrNodal => cgnr(sys, b, config, probe, started, false),
        SolverMethod::CgnrModal => cgnr(sys, b, config, probe, started, true),
        SolverMethod::GmresNodal => gmres(sys, b, config, probe, started, false),
        SolverMethod::GmresModal => gmres(sys, b, config, probe, started, true),
    }
}

/// g ← ΠS g + b, i.e. g ← g + (b − A g).
fn fixed_point(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    config: &SolverConfig,
    probe: Option<ErrorProbe>,
    started: Instant,
) -> SolveOutcome {
    let mut g = sys.zero_field();
    let mut scratch = sys.zero_field();
    let mut ag = sys.zero_field();
    let mut r = b.clone();
    let res0 = b.norm2();
    let mut monitor = Monitor::new(
        config.method,
        config.rtol,
        config.maxit,
        res0,
        None,
        probe,
        &g,
    );

    let mut iter = 0usize;
    let termination = loop {
        iter += 1;
        g.axpy(Complex64::ONE, &r);
        let res = true_residual(sys, b, &g, &mut scratch, &mut ag, &mut r);
        if let Some(t) = monitor.record(iter, res, None, &g) {
            break t;
        }
    };
    SolveOutcome {
        g,
        report: monitor.finish(termination, started),
    }
}

/// Conjugate gradients on the normal equations.  In the nodal variant the
/// inner product is Euclidean and the normal operator is AᴴA; in the modal
/// variant both are taken in the skeleton mass inner product, so the normal
/// step uses M⁻¹AᴴM and all recurrence scalars are M-norms.
fn cgnr(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    config: &SolverConfig,
    probe: Option<ErrorProbe>,
    started: Instant,
    modal: bool,
) -> SolveOutcome {
    let mut g = sys.zero_field();
    let mut scratch = sys.zero_field();
    let mut ag = sys.zero_field();
    let mut r_true = sys.zero_field();
    let res0 = b.norm2();
    let res0_m = modal.then(|| sys.norm_m(b));
    let mut monitor = Monitor::new(
        config.method,
        config.rtol,
        config.maxit,
        res0,
        res0_m,
        probe,
        &g,
    );

    // z = normal residual: Aᴴ r (nodal) or M⁻¹ Aᴴ M r (modal).
    let mut tmp = sys.zero_field();
    let normal_step = |r: &TransmissionField,
                       z: &mut TransmissionField,
                       scratch: &mut TransmissionField,
                       tmp: &mut TransmissionField| {
        if modal {
            sys.mass_apply(r, tmp);
            sys.apply_adjoint(tmp, scratch, z);
            std::mem::swap(z, tmp);
            sys.mass_solve(tmp, z);
        } else {
            sys.apply_adjoint(r, scratch, z);
        }
    };
    let norm2_sq = |x: &TransmissionField| -> f64 {
        if modal {
            sys.inner_m(x, x).re
        } else {
            let n = x.norm2();
            n * n
        }
    };

    // Recurrence state (r kept by recurrence; reporting uses r_true).
    let mut r = b.clone();
    let mut z = sys.zero_field();
    normal_step(&r, &mut z, &mut scratch, &mut tmp);
    let mut p = z.clone();
    let mut q = sys.zero_field();
    let mut z_sq = norm2_sq(&z);

    let mut iter = 0usize;
    let termination = loop {
        iter += 1;
        if z_sq == 0.0 {
            // Normal residual vanished: g is the least-squares solution.
            let res = true_residual(sys, b, &g, &mut scratch, &mut ag, &mut r_true);
            let res_m = modal.then(|| sys.norm_m(&r_true));
            break monitor
                .record(iter, res, res_m, &g)
                .unwrap_or(Termination::Stagnation);
        }
        sys.apply(&p, &mut scratch, &mut q);
        let q_sq = norm2_sq(&q);
        let alpha = Complex64::new(z_sq / q_sq, 0.0);
        g.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        normal_step(&r, &mut z, &mut scratch, &mut tmp);
        let z_sq_next = norm2_sq(&z);
        let beta = Complex64::new(z_sq_next / z_sq, 0.0);
        z_sq = z_sq_next;
        // p = z + β p
        p.scale(beta);
        p.axpy(Complex64::ONE, &z);

        let res = true_residual(sys, b, &g, &mut scratch, &mut ag, &mut r_true);
        let res_m = modal.then(|| sys.norm_m(&r_true));
        if let Some(t) = monitor.record(iter, res, res_m, &g) {
            break t;
        }
    };
    SolveOutcome {
        g,
        report: monitor.finish(termination, started),
    }
}

/// Restarted GMRES with modified Gram-Schmidt in the Euclidean (nodal) or
/// skeleton-mass (modal) inner product, one conditional reorthogonalization
/// pass, and a Givens-rotation least-squares update.  The iterate is formed
/// at every step so the recorded residual is always the true one.
fn gmres(
    sys: &HybridizedSystem,
    b: &TransmissionField,
    config: &SolverConfig,
    probe: Option<ErrorProbe>,
    started: Instant,
    modal: bool,
) -> SolveOutcome {
    let mut g = sys.zero_field();
    let mut scratch = sys.zero_field();
    let mut ag = sys.zero_field();
    let mut r = sys.zero_field();
    let res0 = b.norm2();
    let res0_m = modal.then(|| sys.norm_m(b));
    let mut monitor = Monitor::new(
        config.method,
        config.rtol,
        config.maxit,
        res0,
        res0_m,
        probe,
        &g,
    );

    let inner = |x: &TransmissionField, y: &TransmissionField| -> Complex64 {
        if modal {
            sys.inner_m(x, y)
        } else {
            x.dot(y)
        }
    };
    let w_norm = |x: &TransmissionField| -> f64 {
        if modal {
            sys.norm_m(x)
        } else {
            x.norm2()
        }
    };

    let m = if config.restart == 0 {
        config.maxit.max(1)
    } else {
        config.restart
    };

    let mut iter = 0usize;
    let termination = 'outer: loop {
        // Cycle start: explicit residual from the current iterate.
        true_residual(sys, b, &g, &mut scratch, &mut ag, &mut r);
        let beta = w_norm(&r);
        if beta == 0.0 {
            break Termination::Converged;
        }

        let mut basis: Vec<TransmissionField> = Vec::with_capacity(m + 1);
        let mut v0 = r.clone();
        v0.scale(Complex64::new(1.0 / beta, 0.0));
        basis.push(v0);

        // Rotated Hessenberg columns (upper-triangular part) and LS rhs.
        let mut r_cols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cos: Vec<f64> = Vec::with_capacity(m);
        let mut sin: Vec<Complex64> = Vec::with_capacity(m);
        let mut ls_rhs: Vec<Complex64> = vec![Complex64::new(beta, 0.0)];

        let g_cycle_start = g.clone();
        for j in 0..m {
            iter += 1;
            // Arnoldi step.
            let mut w = sys.zero_field();
            sys.apply(&basis[j], &mut scratch, &mut w);
            let w_norm_before = w_norm(&w);
            let mut h = vec![Complex64::ZERO; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = inner(&w, v);
                w.axpy(-hij, v);
                h[i] = hij;
            }
            let mut w_norm_after = w_norm(&w);
            if w_norm_after < std::f64::consts::FRAC_1_SQRT_2 * w_norm_before {
                // One reorthogonalization pass against the same basis.
                for (i, v) in basis.iter().enumerate() {
                    let c = inner(&w, v);
                    w.axpy(-c, v);
                    h[i] += c;
                }
                w_norm_after = w_norm(&w);
            }
            h[j + 1] = Complex64::new(w_norm_after, 0.0);
            let breakdown = w_norm_after <= 1e-14 * w_norm_before.max(1e-300);
            if !breakdown {
                let mut v = w;
                v.scale(Complex64::new(1.0 / w_norm_after, 0.0));
                basis.push(v);
            }

            // Apply the accumulated rotations to the new column.
            for i in 0..j {
                let (hi, hi1) = (h[i], h[i + 1]);
                h[i] = cos[i] * hi + sin[i] * hi1;
                h[i + 1] = -sin[i].conj() * hi + cos[i] * hi1;
            }
            // New rotation zeroing h[j+1].
            let (a, bb) = (h[j], h[j + 1]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, Complex64::ZERO)
            } else if a.norm() == 0.0 {
                (0.0, bb.conj() / bb.norm())
            } else {
                (a.norm() / denom, (a / a.norm()) * bb.conj() / denom)
            };
            h[j] = c * a + s * bb;
            h[j + 1] = Complex64::ZERO;
            cos.push(c);
            sin.push(s);
            let rhs_j = ls_rhs[j];
            ls_rhs[j] = c * rhs_j;
            ls_rhs.push(-s.conj() * rhs_j);
            r_cols.push(h);

            // Form the iterate: back-substitute R y = ls_rhs[0..=j].
            let mut y = vec![Complex64::ZERO; j + 1];
            for i in (0..=j).rev() {
                let mut acc = ls_rhs[i];
                for l in (i + 1)..=j {
                    acc -= r_cols[l][i] * y[l];
                }
                let diag = r_cols[i][i];
                y[i] = if diag.norm() > 0.0 {
                    acc / diag
                } else {
                    Complex64::ZERO
                };
            }
            g = g_cycle_start.clone();
            for (i, yi) in y.iter().enumerate() {
                g.axpy(*yi, &basis[i]);
            }

            let res = true_residual(sys, b, &g, &mut scratch, &mut ag, &mut r);
            let res_m = modal.then(|| sys.norm_m(&r));
            if let Some(t) = monitor.record(iter, res, res_m, &g) {
                break 'outer t;
            }
            if breakdown {
                // Invariant subspace reached; restart from the new iterate.
                break;
            }
        }
    };
    SolveOutcome {
        g,
        report: monitor.finish(termination, started),
    }
}
