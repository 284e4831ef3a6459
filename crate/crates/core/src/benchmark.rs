//! Reference solutions and error measures for the built-in verification
//! problems: a propagating plane wave driven through impedance data, and the
//! unit-cube cavity with perfectly conducting walls driven by a constant
//! current density.

use crate::local::{FieldState, VolumeSource};
use crate::math::vec3;
use crate::mesh::{BoundaryKind, FaceConnection, Mesh};
use crate::refelem::ReferenceElement;
use crate::skeleton::{BoundarySources, HybridizedSystem, TransmissionField};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("propagation direction must be a unit vector (got |d| = {norm})")]
    NonUnitDirection { norm: f64 },
    #[error("polarization must be orthogonal to the propagation direction (d·e0 = {dot:.3e})")]
    NonTransverse { dot: f64 },
    #[error("wavenumber {kappa} is resonant with cavity mode ({k2}, {k3})")]
    ResonantMode { kappa: f64, k2: usize, k3: usize },
    #[error("the {benchmark} benchmark requires {required} boundary conditions on every surface")]
    RequiresBoundary {
        benchmark: &'static str,
        required: &'static str,
    },
}

pub type FieldFn = Box<dyn Fn([f64; 3]) -> [Complex64; 3] + Send + Sync>;

/// Exact (or semi-analytic) electric and magnetic fields.
pub struct ReferenceSolution {
    pub e: FieldFn,
    pub h: FieldFn,
}

/// Plane wave e = e0 · exp(iκ d·x), h = −d × e.
pub fn plane_wave_reference(
    kappa: f64,
    d: [f64; 3],
    e0: [f64; 3],
) -> Result<ReferenceSolution, BenchmarkError> {
    let norm = vec3::norm(d);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(BenchmarkError::NonUnitDirection { norm });
    }
    let dot = vec3::dot(d, e0);
    if dot.abs() > 1e-12 * vec3::norm(e0).max(1.0) {
        return Err(BenchmarkError::NonTransverse { dot });
    }
    let h0 = vec3::scale(vec3::cross(d, e0), -1.0);
    let phase = move |x: [f64; 3]| Complex64::new(0.0, kappa * vec3::dot(d, x)).exp();
    Ok(ReferenceSolution {
        e: Box::new(move |x| {
            let p = phase(x);
            std::array::from_fn(|i| e0[i] * p)
        }),
        h: Box::new(move |x| {
            let p = phase(x);
            std::array::from_fn(|i| h0[i] * p)
        }),
    })
}

/// Canonical plane-wave parameters: d = (1,1,1)/√3, e0 = (0,1,−1)/√2.
pub fn default_plane_wave(kappa: f64) -> ReferenceSolution {
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    plane_wave_reference(kappa, [1.0 / s3; 3], [0.0, 1.0 / s2, -1.0 / s2])
        .expect("canonical parameters are valid")
}

/// Modal coefficient of the cavity series solution.
pub fn cavity_mode_coefficient(kappa: f64, k2: usize, k3: usize) -> f64 {
    let lam = PI * PI * ((k2 * k2 + k3 * k3) as f64);
    16.0 / (PI * PI * (k2 as f64) * (k3 as f64) * (lam - kappa * kappa))
}

/// Series solution of the conducting unit cavity driven by the constant
/// current density (−i/κ, 0, 0): e points along x and is a double sine sum
/// over odd mode pairs up to `kmax`, and h = (i/κ) ∇×e mode by mode.
pub fn cavity_reference(kappa: f64, kmax: usize) -> Result<ReferenceSolution, BenchmarkError> {
    let mut modes: Vec<(f64, f64, f64)> = Vec::new(); // (k2·π, k3·π, coefficient)
    for k2 in (1..=kmax).step_by(2) {
        for k3 in (1..=kmax).step_by(2) {
            let lam = PI * PI * ((k2 * k2 + k3 * k3) as f64);
            if (lam - kappa * kappa).abs() <= 1e-8 * kappa.powi(2).max(1.0) {
                return Err(BenchmarkError::ResonantMode { kappa, k2, k3 });
            }
            modes.push((
                PI * k2 as f64,
                PI * k3 as f64,
                cavity_mode_coefficient(kappa, k2, k3),
            ));
        }
    }
    let e_modes = modes.clone();
    let e = Box::new(move |x: [f64; 3]| {
        let mut e1 = 0.0;
        for &(a2, a3, c) in &e_modes {
            e1 += c * (a2 * x[1]).sin() * (a3 * x[2]).sin();
        }
        [Complex64::new(e1, 0.0), Complex64::ZERO, Complex64::ZERO]
    });
    let h = Box::new(move |x: [f64; 3]| {
        // ∇×(e1 x̂) = (0, ∂z e1, −∂y e1), scaled by i/κ.
        let mut dy = 0.0;
        let mut dz = 0.0;
        for &(a2, a3, c) in &modes {
            dy += c * a2 * (a2 * x[1]).cos() * (a3 * x[2]).sin();
            dz += c * a3 * (a2 * x[1]).sin() * (a3 * x[2]).cos();
        }
        [
            Complex64::ZERO,
            Complex64::new(0.0, dz / kappa),
            Complex64::new(0.0, -dy / kappa),
        ]
    });
    Ok(ReferenceSolution { e, h })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkKind {
    PlaneWave,
    Cavity,
    Custom,
}

impl std::fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BenchmarkKind::PlaneWave => "plane-wave",
            BenchmarkKind::Cavity => "cavity",
            BenchmarkKind::Custom => "custom",
        })
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plane-wave" => Ok(BenchmarkKind::PlaneWave),
            "cavity" => Ok(BenchmarkKind::Cavity),
            "custom" => Ok(BenchmarkKind::Custom),
            other => Err(format!(
                "unknown benchmark '{other}' (expected plane-wave, cavity or custom)"
            )),
        }
    }
}

pub struct BenchmarkSetup {
    pub sources: BoundarySources,
    pub volume: VolumeSource,
    pub reference: ReferenceSolution,
}

/// Impedance trace πᵗe + n×h of the canonical plane wave.
fn plane_wave_trace(kappa: f64) -> BoundarySources {
    let wave = default_plane_wave(kappa);
    BoundarySources::impedance(move |x, n| {
        let t = vec3::tangential(n, (wave.e)(x));
        let c = vec3::cross_nc(n, (wave.h)(x));
        std::array::from_fn(|d| t[d] + c[d])
    })
}

fn boundary_is_uniform(mesh: &Mesh, kind: BoundaryKind) -> bool {
    mesh.faces.iter().flatten().all(|f| match f.connection {
        FaceConnection::Boundary(k) => k == kind,
        FaceConnection::Interior { .. } => true,
    })
}

/// Sources, volume term and reference fields for one of the built-in
/// problems; validates that the mesh boundary suits the benchmark.
pub fn benchmark_setup(
    kind: BenchmarkKind,
    kappa: f64,
    mesh: &Mesh,
) -> Result<BenchmarkSetup, BenchmarkError> {
    match kind {
        BenchmarkKind::PlaneWave => {
            if !boundary_is_uniform(mesh, BoundaryKind::Impedance) {
                return Err(BenchmarkError::RequiresBoundary {
                    benchmark: "plane-wave",
                    required: "impedance",
                });
            }
            Ok(BenchmarkSetup {
                sources: plane_wave_trace(kappa),
                volume: VolumeSource::Absent,
                reference: default_plane_wave(kappa),
            })
        }
        BenchmarkKind::Cavity => {
            if !boundary_is_uniform(mesh, BoundaryKind::Electric) {
                return Err(BenchmarkError::RequiresBoundary {
                    benchmark: "cavity",
                    required: "electric",
                });
            }
            let reference = cavity_reference(kappa, 25)?;
            Ok(BenchmarkSetup {
                sources: BoundarySources::zero(),
                volume: VolumeSource::Constant([
                    Complex64::new(0.0, -1.0 / kappa),
                    Complex64::ZERO,
                    Complex64::ZERO,
                ]),
                reference,
            })
        }
        BenchmarkKind::Custom => Ok(BenchmarkSetup {
            sources: plane_wave_trace(kappa),
            volume: VolumeSource::Absent,
            reference: default_plane_wave(kappa),
        }),
    }
}

/// Combined relative L² error of a discrete solution against a reference,
/// √(Σ‖e−e_ref‖² + ‖h−h_ref‖²) / √(Σ‖e_ref‖² + ‖h_ref‖²), integrated with
/// the reference element's volume quadrature.
pub fn l2_relative_error(
    mesh: &Mesh,
    refel: &ReferenceElement,
    fields: &[FieldState],
    reference: &ReferenceSolution,
) -> f64 {
    let parts: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let nq = refel.vol_quad.points.len();
            let det = mesh.geometry[k].det_jac;
            let mut eh = std::array::from_fn::<_, 3, _>(|_| vec![Complex64::ZERO; nq]);
            let mut hh = std::array::from_fn::<_, 3, _>(|_| vec![Complex64::ZERO; nq]);
            for d in 0..3 {
                refel
                    .vol_interp
                    .matvec_acc(&fields[k].e[d], 1.0, &mut eh[d]);
                refel
                    .vol_interp
                    .matvec_acc(&fields[k].h[d], 1.0, &mut hh[d]);
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for q in 0..nq {
                let x = mesh.to_physical(k, refel.vol_quad.points[q]);
                let w = det * refel.vol_quad.weights[q];
                let er = (reference.e)(x);
                let hr = (reference.h)(x);
                for d in 0..3 {
                    num += w * ((eh[d][q] - er[d]).norm_sqr() + (hh[d][q] - hr[d]).norm_sqr());
                    den += w * (er[d].norm_sqr() + hr[d].norm_sqr());
                }
            }
            (num, den)
        })
        .collect();
    let (num, den) = parts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(n, d)| (a + n, b + d));
    (num / den).sqrt()
}

/// Relative L² distance of the reference fields from the broken polynomial
/// space: the best approximation any discrete solution could achieve.
pub fn l2_projection_error(
    mesh: &Mesh,
    refel: &ReferenceElement,
    reference: &ReferenceSolution,
) -> f64 {
    // Inverse reference mass through the orthonormal modal factorization.
    let vvt = &refel.vandermonde * refel.vandermonde.transpose();
    let np = refel.np;
    let nq = refel.vol_quad.points.len();

    let parts: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let det = mesh.geometry[k].det_jac;
            // Reference values at quadrature points, then projection moments.
            let mut vals = vec![[Complex64::ZERO; 6]; nq];
            for q in 0..nq {
                let x = mesh.to_physical(k, refel.vol_quad.points[q]);
                let er = (reference.e)(x);
                let hr = (reference.h)(x);
                vals[q][..3].copy_from_slice(&er);
                vals[q][3..].copy_from_slice(&hr);
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for c in 0..6 {
                let mut moments = vec![Complex64::ZERO; np];
                for q in 0..nq {
                    let w = refel.vol_quad.weights[q];
                    for i in 0..np {
                        moments[i] += w * refel.vol_interp.get(q, i) * vals[q][c];
                    }
                }
                let mut coeff = vec![Complex64::ZERO; np];
                for i in 0..np {
                    let mut acc = Complex64::ZERO;
                    for j in 0..np {
                        acc += vvt[(i, j)] * moments[j];
                    }
                    coeff[i] = acc;
                }
                let mut proj = vec![Complex64::ZERO; nq];
                refel.vol_interp.matvec_acc(&coeff, 1.0, &mut proj);
                for q in 0..nq {
                    let w = det * refel.vol_quad.weights[q];
                    num += w * (vals[q][c] - proj[q]).norm_sqr();
                    den += w * vals[q][c].norm_sqr();
                }
            }
            (num, den)
        })
        .collect();
    let (num, den) = parts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(n, d)| (a + n, b + d));
    (num / den).sqrt()
}

/// Relative error of a skeleton iterate after field reconstruction.
pub fn solution_error(
    sys: &HybridizedSystem,
    g: &TransmissionField,
    volume: &VolumeSource,
    reference: &ReferenceSolution,
) -> f64 {
    let fields = sys.reconstruct_fields(g, volume);
    l2_relative_error(&sys.mesh, &sys.refel, &fields, reference)
}
