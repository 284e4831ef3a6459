//! Per-element machinery: assembly and factorization of the coupled
//! 6·Np local Maxwell system, the local solve for given incoming face data,
//! and extraction of outgoing traces. Together these realize the scattering
//! operator element by element.

use crate::math::lu::ComplexLu;
use crate::math::vec3;
use crate::mesh::Mesh;
use crate::refelem::{ReferenceElement, REF_FACE_AREA};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalError {
    #[error("local system of element {elem} is singular; the assembly is inconsistent")]
    SingularSystem { elem: usize },
}

/// Nodal values of both fields on one element.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub e: [Vec<Complex64>; 3],
    pub h: [Vec<Complex64>; 3],
}

impl FieldState {
    pub fn zeros(np: usize) -> Self {
        FieldState {
            e: std::array::from_fn(|_| vec![Complex64::ZERO; np]),
            h: std::array::from_fn(|_| vec![Complex64::ZERO; np]),
        }
    }
}

/// Nodal values of an impressed electric current density (the J of
/// iκe − ∇×h = J).
pub enum VolumeSource {
    Absent,
    /// Spatially constant current.
    Constant([Complex64; 3]),
    /// Per-element nodal values, indexed by element id.
    PerElement(Vec<[Vec<Complex64>; 3]>),
}

impl VolumeSource {
    /// Nodal values on element `k`, or `None` when no source acts there.
    pub fn element_nodal(&self, k: usize, np: usize) -> Option<[Vec<Complex64>; 3]> {
        match self {
            VolumeSource::Absent => None,
            VolumeSource::Constant(c) => Some(std::array::from_fn(|d| vec![c[d]; np])),
            VolumeSource::PerElement(all) => {
                let j = &all[k];
                Some(std::array::from_fn(|d| j[d].clone()))
            }
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, VolumeSource::Absent)
    }
}

/// Offset of component `d` of face `f` within an element's face-data slice
/// (length 12·Nfp, ordered face-major then component).
#[inline]
pub fn face_component_offset(f: usize, d: usize, nfp: usize) -> usize {
    (f * 3 + d) * nfp
}

/// Entries of an element's face-data slice.
pub const FACE_COMPONENTS: usize = 12;

fn levi_civita(d: usize, e: usize, c: usize) -> f64 {
    match (d, e, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Assembled and factorized local system of one element, plus the face data
/// needed to move between volume fields and face traces.
pub struct ElementOperator {
    pub elem: usize,
    pub kappa: f64,
    pub np: usize,
    pub nfp: usize,
    /// Outward unit normals of the four faces.
    pub normals: [[f64; 3]; 4],
    /// Physical face mass = face_scale · reference triangle mass.
    pub face_scale: [f64; 4],
    /// Volume scale: physical mass = det_jac · reference mass.
    pub det_jac: f64,
    refel: Arc<ReferenceElement>,
    lu: ComplexLu,
}

/// Dense local system matrix (row-major, 6Np × 6Np) for the given geometry.
/// Unknown ordering: [e_1, e_2, e_3, h_1, h_2, h_3], each an Np block.
fn assemble_matrix(
    refel: &ReferenceElement,
    kappa: f64,
    det_jac: f64,
    inv_jac: &[[f64; 3]; 3],
    normals: &[[f64; 3]; 4],
    face_scale: &[f64; 4],
) -> Vec<Complex64> {
    let np = refel.np;
    let n6 = 6 * np;
    let mut a = vec![Complex64::ZERO; n6 * n6];
    let at = |r: usize, c: usize| r * n6 + c;

    // Physical mass and stiffness: MK = detJ·Mref, SK_d = MK·(Σ_e invJ[e][d]·D_e).
    let mut mk = vec![0.0; np * np];
    for i in 0..np {
        for j in 0..np {
            mk[i * np + j] = det_jac * refel.mass.get(i, j);
        }
    }
    let mut sk = [vec![0.0; np * np], vec![0.0; np * np], vec![0.0; np * np]];
    for d in 0..3 {
        let mut dx = vec![0.0; np * np];
        for e in 0..3 {
            let w = inv_jac[e][d];
            if w == 0.0 {
                continue;
            }
            for i in 0..np {
                for j in 0..np {
                    dx[i * np + j] += w * refel.diff[e].get(i, j);
                }
            }
        }
        for i in 0..np {
            for j in 0..np {
                let mut s = 0.0;
                for m in 0..np {
                    s += mk[i * np + m] * dx[m * np + j];
                }
                sk[d][i * np + j] = s;
            }
        }
    }

    // iκ mass on the diagonal blocks.
    for d in 0..3 {
        for i in 0..np {
            for j in 0..np {
                let v = Complex64::new(0.0, kappa * mk[i * np + j]);
                a[at(d * np + i, d * np + j)] += v;
                a[at((3 + d) * np + i, (3 + d) * np + j)] += v;
            }
        }
    }

    // Tangential-projection face penalty ½(δ_dc − n_d n_c)·MF on the e/e and
    // h/h blocks.
    for f in 0..4 {
        let fm = &refel.face_node_index[f];
        let n = normals[f];
        for d in 0..3 {
            for c in 0..3 {
                let delta = if d == c { 1.0 } else { 0.0 };
                let coef = 0.5 * face_scale[f] * (delta - n[d] * n[c]);
                if coef == 0.0 {
                    continue;
                }
                for (ai, &i) in fm.iter().enumerate() {
                    for (bj, &j) in fm.iter().enumerate() {
                        let v = coef * refel.face_mass.get(ai, bj);
                        a[at(d * np + i, c * np + j)].re += v;
                        a[at((3 + d) * np + i, (3 + c) * np + j)].re += v;
                    }
                }
            }
        }
    }

    // Curl coupling: block(e_d, h_c) = Σ_e ε_dec (SK_eᵀ − ½Σ_F n_e·MF) and
    // block(h_d, e_c) its negative.
    for d in 0..3 {
        for c in 0..3 {
            if d == c {
                continue;
            }
            let e = 3 - d - c;
            let sign = levi_civita(d, e, c);
            for i in 0..np {
                for j in 0..np {
                    let v = sign * sk[e][j * np + i];
                    a[at(d * np + i, (3 + c) * np + j)].re += v;
                    a[at((3 + d) * np + i, c * np + j)].re -= v;
                }
            }
            for f in 0..4 {
                let fm = &refel.face_node_index[f];
                let coef = -0.5 * sign * normals[f][e] * face_scale[f];
                if coef == 0.0 {
                    continue;
                }
                for (ai, &i) in fm.iter().enumerate() {
                    for (bj, &j) in fm.iter().enumerate() {
                        let v = coef * refel.face_mass.get(ai, bj);
                        a[at(d * np + i, (3 + c) * np + j)].re += v;
                        a[at((3 + d) * np + i, c * np + j)].re -= v;
                    }
                }
            }
        }
    }

    a
}

impl ElementOperator {
    pub fn new(
        refel: Arc<ReferenceElement>,
        mesh: &Mesh,
        elem: usize,
        kappa: f64,
    ) -> Result<Self, LocalError> {
        let geom = &mesh.geometry[elem];
        let normals = std::array::from_fn(|f| mesh.faces[elem][f].normal);
        let face_scale = std::array::from_fn(|f| mesh.faces[elem][f].area / REF_FACE_AREA);
        let matrix = assemble_matrix(
            &refel,
            kappa,
            geom.det_jac,
            &geom.inv_jac,
            &normals,
            &face_scale,
        );
        let lu = ComplexLu::factor(matrix, 6 * refel.np)
            .map_err(|_| LocalError::SingularSystem { elem })?;
        Ok(ElementOperator {
            elem,
            kappa,
            np: refel.np,
            nfp: refel.nfp,
            normals,
            face_scale,
            det_jac: geom.det_jac,
            refel,
            lu,
        })
    }

    /// Solve the local system for incoming face data `g` (an element slice of
    /// 12·Nfp values) and an optional nodal current density.
    pub fn solve_fields(
        &self,
        g: &[Complex64],
        source: Option<&[Vec<Complex64>; 3]>,
    ) -> FieldState {
        let np = self.np;
        let nfp = self.nfp;
        debug_assert_eq!(g.len(), FACE_COMPONENTS * nfp);
        // Normal content in g is annihilated exactly by πᵗ and n×, so no
        // tangency precondition is imposed here.

        let mut rhs = vec![Complex64::ZERO; 6 * np];
        let mut pit = [
            vec![Complex64::ZERO; nfp],
            vec![Complex64::ZERO; nfp],
            vec![Complex64::ZERO; nfp],
        ];
        let mut crs = pit.clone();
        let mut buf = vec![Complex64::ZERO; nfp];
        for f in 0..4 {
            let n = self.normals[f];
            let fm = &self.refel.face_node_index[f];
            for a in 0..nfp {
                let gv: [Complex64; 3] =
                    std::array::from_fn(|d| g[face_component_offset(f, d, nfp) + a]);
                let t = vec3::tangential(n, gv);
                let x = vec3::cross_nc(n, gv);
                for d in 0..3 {
                    pit[d][a] = t[d];
                    crs[d][a] = x[d];
                }
            }
            let half_scale = 0.5 * self.face_scale[f];
            for d in 0..3 {
                buf.fill(Complex64::ZERO);
                self.refel
                    .face_mass
                    .matvec_acc(&pit[d], half_scale, &mut buf);
                for (a, &i) in fm.iter().enumerate() {
                    rhs[d * np + i] += buf[a];
                }
                buf.fill(Complex64::ZERO);
                self.refel
                    .face_mass
                    .matvec_acc(&crs[d], half_scale, &mut buf);
                for (a, &i) in fm.iter().enumerate() {
                    rhs[(3 + d) * np + i] -= buf[a];
                }
            }
        }
        if let Some(j) = source {
            for d in 0..3 {
                self.refel
                    .mass
                    .matvec_acc(&j[d], self.det_jac, &mut rhs[d * np..(d + 1) * np]);
            }
        }

        self.lu.solve_in_place(&mut rhs);
        let mut state = FieldState::zeros(np);
        for d in 0..3 {
            state.e[d].copy_from_slice(&rhs[d * np..(d + 1) * np]);
            state.h[d].copy_from_slice(&rhs[(3 + d) * np..(4 + d) * np]);
        }
        state
    }

    /// Write the outgoing traces πᵗ(e) − n×h of all four faces into an
    /// element face-data slice.
    pub fn outgoing_into(&self, state: &FieldState, out: &mut [Complex64]) {
        let nfp = self.nfp;
        for f in 0..4 {
            let n = self.normals[f];
            let fm = &self.refel.face_node_index[f];
            for (a, &i) in fm.iter().enumerate() {
                let ev: [Complex64; 3] = std::array::from_fn(|d| state.e[d][i]);
                let hv: [Complex64; 3] = std::array::from_fn(|d| state.h[d][i]);
                let t = vec3::tangential(n, ev);
                let x = vec3::cross_nc(n, hv);
                for d in 0..3 {
                    out[face_component_offset(f, d, nfp) + a] = t[d] - x[d];
                }
            }
        }
    }

    /// Incoming-side trace πᵗ(e) + n×h of face `f`, nodewise.
    pub fn incoming_trace(&self, state: &FieldState, f: usize) -> [Vec<Complex64>; 3] {
        let n = self.normals[f];
        let fm = &self.refel.face_node_index[f];
        let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::ZERO; self.nfp]);
        for (a, &i) in fm.iter().enumerate() {
            let ev: [Complex64; 3] = std::array::from_fn(|d| state.e[d][i]);
            let hv: [Complex64; 3] = std::array::from_fn(|d| state.h[d][i]);
            let t = vec3::tangential(n, ev);
            let x = vec3::cross_nc(n, hv);
            for d in 0..3 {
                out[d][a] = t[d] + x[d];
            }
        }
        out
    }

    /// Scattering of one element: solve with incoming data, emit outgoing
    /// traces.
    pub fn apply_scatter(&self, g: &[Complex64], out: &mut [Complex64]) {
        let state = self.solve_fields(g, None);
        self.outgoing_into(&state, out);
    }

    /// Adjoint scattering: the conjugate-transpose of `apply_scatter` under
    /// the Euclidean pairing of face-data slices.
    pub fn apply_scatter_adjoint(&self, w: &[Complex64], out: &mut [Complex64]) {
        let np = self.np;
        let nfp = self.nfp;
        debug_assert_eq!(w.len(), FACE_COMPONENTS * nfp);

        // Trace adjoint: e gains πᵗw, h gains n×w at face nodes.
        let mut vol = vec![Complex64::ZERO; 6 * np];
        for f in 0..4 {
            let n = self.normals[f];
            let fm = &self.refel.face_node_index[f];
            for (a, &i) in fm.iter().enumerate() {
                let wv: [Complex64; 3] =
                    std::array::from_fn(|d| w[face_component_offset(f, d, nfp) + a]);
                let t = vec3::tangential(n, wv);
                let x = vec3::cross_nc(n, wv);
                for d in 0..3 {
                    vol[d * np + i] += t[d];
                    vol[(3 + d) * np + i] += x[d];
                }
            }
        }

        self.lu.solve_adjoint_in_place(&mut vol);

        // Right-hand-side adjoint: ½πᵗ(MF·z_e) + ½n×(MF·z_h) per face.
        let mut ze = [
            vec![Complex64::ZERO; nfp],
            vec![Complex64::ZERO; nfp],
            vec![Complex64::ZERO; nfp],
        ];
        let mut zh = ze.clone();
        let mut ye = ze.clone();
        let mut yh = ze.clone();
        for f in 0..4 {
            let n = self.normals[f];
            let fm = &self.refel.face_node_index[f];
            let half_scale = 0.5 * self.face_scale[f];
            for d in 0..3 {
                for (a, &i) in fm.iter().enumerate() {
                    ze[d][a] = vol[d * np + i];
                    zh[d][a] = vol[(3 + d) * np + i];
                }
                ye[d].fill(Complex64::ZERO);
                yh[d].fill(Complex64::ZERO);
                self.refel
                    .face_mass
                    .matvec_acc(&ze[d], half_scale, &mut ye[d]);
                self.refel
                    .face_mass
                    .matvec_acc(&zh[d], half_scale, &mut yh[d]);
            }
            for a in 0..nfp {
                let yev: [Complex64; 3] = std::array::from_fn(|d| ye[d][a]);
                let yhv: [Complex64; 3] = std::array::from_fn(|d| yh[d][a]);
                let t = vec3::tangential(n, yev);
                let x = vec3::cross_nc(n, yhv);
                for d in 0..3 {
                    out[face_component_offset(f, d, nfp) + a] = t[d] + x[d];
                }
            }
        }
    }

    pub fn reference(&self) -> &Arc<ReferenceElement> {
        &self.refel
    }

    /// Squared face-mass norm Σ_F Σ_d ⟨x_d, x_d⟩_F of an element face-data
    /// slice.
    pub fn face_norm2(&self, x: &[Complex64]) -> f64 {
        let nfp = self.nfp;
        let mut total = 0.0;
        for f in 0..4 {
            for d in 0..3 {
                let xs =
                    &x[face_component_offset(f, d, nfp)..face_component_offset(f, d, nfp) + nfp];
                total += self.face_scale[f] * self.refel.face_mass.sesquilinear(xs, xs).re;
            }
        }
        total
    }
}
