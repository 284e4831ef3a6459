//! The skeleton system: global transmission field storage, the exchange
//! operator across faces, the element-parallel scattering sweep, the
//! hybridized operator `A = I − ΠS` with its adjoint, face-mass norms, and
//! right-hand-side construction from boundary and volume sources.

use crate::local::{face_component_offset, ElementOperator, FieldState, LocalError, VolumeSource};
use crate::math::vec3;
use crate::mesh::{match_coincident_points, BoundaryKind, FaceConnection, Mesh};
use crate::refelem::ReferenceElement;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Skeleton unknown: one tangential 3-component nodal vector per
/// (element, local face) slot, element-major.
#[derive(Clone, Debug)]
pub struct TransmissionField {
    pub data: Vec<Complex64>,
    nfp: usize,
}

impl TransmissionField {
    pub fn zeros(num_elements: usize, nfp: usize) -> Self {
        TransmissionField {
            data: vec![Complex64::ZERO; num_elements * 12 * nfp],
            nfp,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn stride(&self) -> usize {
        12 * self.nfp
    }

    pub fn elem(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.stride()..(k + 1) * self.stride()]
    }

    pub fn elem_mut(&mut self, k: usize) -> &mut [Complex64] {
        let s = self.stride();
        &mut self.data[k * s..(k + 1) * s]
    }

    /// Nodal values of component `d` on the (element, face) slot.
    pub fn slot(&self, k: usize, f: usize, d: usize) -> &[Complex64] {
        let base = k * self.stride() + face_component_offset(f, d, self.nfp);
        &self.data[base..base + self.nfp]
    }

    pub fn slot_mut(&mut self, k: usize, f: usize, d: usize) -> &mut [Complex64] {
        let base = k * self.stride() + face_component_offset(f, d, self.nfp);
        &mut self.data[base..base + self.nfp]
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Complex64::ZERO);
    }

    /// self += alpha · x.
    pub fn axpy(&mut self, alpha: Complex64, x: &TransmissionField) {
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    pub fn scale(&mut self, alpha: Complex64) {
        for s in &mut self.data {
            *s *= alpha;
        }
    }

    /// Euclidean pairing Σ self_i · conj(other_i).
    pub fn dot(&self, other: &TransmissionField) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// How one (element, face) slot exchanges with the rest of the skeleton.
enum SlotPlan {
    /// Interior slot: gather from the neighbor slot through a node
    /// permutation (`out[a] = in[nb_base + d·nfp + gather[a]]`). The adjoint
    /// gathers through the inverse of the neighbor's own permutation.
    Interior {
        nb_base: usize,
        gather: Vec<usize>,
        adjoint_gather: Vec<usize>,
    },
    Electric,
    Magnetic,
    Impedance,
}

/// Surface data callable: physical position and outward unit normal to the
/// complex 3-vector value.
pub type SurfaceFn = Box<dyn Fn([f64; 3], [f64; 3]) -> [Complex64; 3] + Send + Sync>;

#[derive(Default)]
pub struct BoundarySources {
    pub s_e: Option<SurfaceFn>,
    pub s_h: Option<SurfaceFn>,
    pub s_i: Option<SurfaceFn>,
}

impl BoundarySources {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn impedance(
        f: impl Fn([f64; 3], [f64; 3]) -> [Complex64; 3] + Send + Sync + 'static,
    ) -> Self {
        BoundarySources {
            s_i: Some(Box::new(f)),
            ..Self::default()
        }
    }
}

/// The assembled hybridized system: factorized element operators plus the
/// exchange plan, exposing `A = I − ΠS` and friends matrix-free.
pub struct HybridizedSystem {
    pub mesh: Arc<Mesh>,
    pub refel: Arc<ReferenceElement>,
    pub kappa: f64,
    pub operators: Vec<ElementOperator>,
    plans: Vec<SlotPlan>,
}

impl HybridizedSystem {
    pub fn new(mesh: Arc<Mesh>, p: usize, kappa: f64) -> Result<Self, LocalError> {
        let refel = Arc::new(ReferenceElement::new(p));
        let operators: Vec<ElementOperator> = (0..mesh.num_elements())
            .into_par_iter()
            .map(|k| ElementOperator::new(refel.clone(), &mesh, k, kappa))
            .collect::<Result<_, _>>()?;

        // Physical positions of the face nodes of every slot.
        let face_points = |k: usize, f: usize| -> Vec<[f64; 3]> {
            refel.face_node_index[f]
                .iter()
                .map(|&i| mesh.to_physical(k, refel.nodes[i]))
                .collect()
        };
        let nfp = refel.nfp;
        let mut forward: Vec<Option<Vec<usize>>> = vec![None; mesh.num_elements() * 4];
        for k in 0..mesh.num_elements() {
            for f in 0..4 {
                if let FaceConnection::Interior { elem, face, .. } = mesh.faces[k][f].connection {
                    let mine = face_points(k, f);
                    let theirs = face_points(elem, face);
                    let tol = 1e-8 * mesh.faces[k][f].diameter;
                    let perm = match_coincident_points(&mine, &theirs, tol)
                        .expect("conforming interior face nodes must coincide");
                    // Verify the match to a tighter tolerance than requested.
                    for (a, &b) in perm.iter().enumerate() {
                        let d = vec3::norm(vec3::sub(mine[a], theirs[b]));
                        debug_assert!(d <= 1e-10 * mesh.faces[k][f].diameter.max(1.0));
                        let _ = d;
                    }
                    forward[k * 4 + f] = Some(perm);
                }
            }
        }
        let mut plans = Vec::with_capacity(mesh.num_elements() * 4);
        for k in 0..mesh.num_elements() {
            for f in 0..4 {
                let plan = match mesh.faces[k][f].connection {
                    FaceConnection::Interior { elem, face, .. } => {
                        let gather = forward[k * 4 + f].clone().expect("perm built above");
                        let nb_perm = forward[elem * 4 + face]
                            .as_ref()
                            .expect("neighbor perm built above");
                        let mut adjoint_gather = vec![usize::MAX; nfp];
                        for (b, &a) in nb_perm.iter().enumerate() {
                            adjoint_gather[a] = b;
                        }
                        debug_assert_eq!(
                            adjoint_gather, gather,
                            "face node permutations are mutually inverse"
                        );
                        SlotPlan::Interior {
                            nb_base: (elem * 4 + face) * 3 * nfp,
                            gather,
                            adjoint_gather,
                        }
                    }
                    FaceConnection::Boundary(BoundaryKind::Electric) => SlotPlan::Electric,
                    FaceConnection::Boundary(BoundaryKind::Magnetic) => SlotPlan::Magnetic,
                    FaceConnection::Boundary(BoundaryKind::Impedance) => SlotPlan::Impedance,
                };
                plans.push(plan);
            }
        }

        Ok(HybridizedSystem {
            mesh,
            refel,
            kappa,
            operators,
            plans,
        })
    }

    pub fn nfp(&self) -> usize {
        self.refel.nfp
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    pub fn num_dof(&self) -> usize {
        self.num_elements() * 12 * self.nfp()
    }

    pub fn zero_field(&self) -> TransmissionField {
        TransmissionField::zeros(self.num_elements(), self.nfp())
    }

    /// out = S g: all local solves followed by outgoing-trace extraction.
    pub fn apply_scattering(&self, g: &TransmissionField, out: &mut TransmissionField) {
        let stride = 12 * self.nfp();
        out.data
            .par_chunks_mut(stride)
            .enumerate()
            .for_each(|(k, chunk)| {
                self.operators[k].apply_scatter(g.elem(k), chunk);
            });
    }

    /// out = Sᴴ g.
    pub fn apply_scattering_adjoint(&self, g: &TransmissionField, out: &mut TransmissionField) {
        let stride = 12 * self.nfp();
        out.data
            .par_chunks_mut(stride)
            .enumerate()
            .for_each(|(k, chunk)| {
                self.operators[k].apply_scatter_adjoint(g.elem(k), chunk);
            });
    }

    /// out = Π g.
    pub fn apply_exchange(&self, g: &TransmissionField, out: &mut TransmissionField) {
        self.exchange_impl(g, out, false);
    }

    /// out = Πᴴ g (the Euclidean adjoint of the exchange).
    pub fn apply_exchange_adjoint(&self, g: &TransmissionField, out: &mut TransmissionField) {
        self.exchange_impl(g, out, true);
    }

    fn exchange_impl(&self, g: &TransmissionField, out: &mut TransmissionField, adjoint: bool) {
        let nfp = self.nfp();
        for (s, plan) in self.plans.iter().enumerate() {
            let base = s * 3 * nfp;
            match plan {
                SlotPlan::Interior {
                    nb_base,
                    gather,
                    adjoint_gather,
                } => {
                    let idx = if adjoint { adjoint_gather } else { gather };
                    for d in 0..3 {
                        for a in 0..nfp {
                            out.data[base + d * nfp + a] = g.data[nb_base + d * nfp + idx[a]];
                        }
                    }
                }
                SlotPlan::Electric => {
                    for i in 0..3 * nfp {
                        out.data[base + i] = -g.data[base + i];
                    }
                }
                SlotPlan::Magnetic => {
                    for i in 0..3 * nfp {
                        out.data[base + i] = g.data[base + i];
                    }
                }
                SlotPlan::Impedance => {
                    for i in 0..3 * nfp {
                        out.data[base + i] = Complex64::ZERO;
                    }
                }
            }
        }
    }

    /// out = A g = g − Π(S g); `scratch` must have the same layout.
    pub fn apply(
        &self,
        g: &TransmissionField,
        scratch: &mut TransmissionField,
        out: &mut TransmissionField,
    ) {
        self.apply_scattering(g, scratch);
        self.apply_exchange(scratch, out);
        for (o, gi) in out.data.iter_mut().zip(&g.data) {
            *o = gi - *o;
        }
    }

    /// out = Aᴴ g = g − Sᴴ(Πᴴ g).
    pub fn apply_adjoint(
        &self,
        g: &TransmissionField,
        scratch: &mut TransmissionField,
        out: &mut TransmissionField,
    ) {
        self.apply_exchange_adjoint(g, scratch);
        self.apply_scattering_adjoint(scratch, out);
        for (o, gi) in out.data.iter_mut().zip(&g.data) {
            *o = gi - *o;
        }
    }

    /// Blockwise face-mass multiplication out = M g.
    pub fn mass_apply(&self, g: &TransmissionField, out: &mut TransmissionField) {
        out.fill_zero();
        for k in 0..self.num_elements() {
            for f in 0..4 {
                let scale = self.operators[k].face_scale[f];
                for d in 0..3 {
                    let src = g.slot(k, f, d).to_vec();
                    self.refel
                        .face_mass
                        .matvec_acc(&src, scale, out.slot_mut(k, f, d));
                }
            }
        }
    }

    /// Blockwise face-mass solve out = M⁻¹ g.
    pub fn mass_solve(&self, g: &TransmissionField, out: &mut TransmissionField) {
        out.fill_zero();
        for k in 0..self.num_elements() {
            for f in 0..4 {
                let inv_scale = 1.0 / self.operators[k].face_scale[f];
                for d in 0..3 {
                    let src = g.slot(k, f, d).to_vec();
                    self.refel
                        .face_mass_inv
                        .matvec_acc(&src, inv_scale, out.slot_mut(k, f, d));
                }
            }
        }
    }

    /// Sesquilinear skeleton product ⟨g1, g2⟩ = Σ_slots Σ_d ⟨g1_d, g2_d⟩_F.
    pub fn inner_m(&self, g1: &TransmissionField, g2: &TransmissionField) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for k in 0..self.num_elements() {
            for f in 0..4 {
                let scale = self.operators[k].face_scale[f];
                for d in 0..3 {
                    acc += scale
                        * self
                            .refel
                            .face_mass
                            .sesquilinear(g1.slot(k, f, d), g2.slot(k, f, d));
                }
            }
        }
        acc
    }

    pub fn norm_m(&self, g: &TransmissionField) -> f64 {
        self.inner_m(g, g).re.max(0.0).sqrt()
    }

    /// Random tangential skeleton field (uniform components projected onto
    /// each face's tangent plane).
    pub fn random_tangential(&self, rng: &mut impl Rng) -> TransmissionField {
        let nfp = self.nfp();
        let mut g = self.zero_field();
        for k in 0..self.num_elements() {
            for f in 0..4 {
                let n = self.operators[k].normals[f];
                for a in 0..nfp {
                    let v: [Complex64; 3] = std::array::from_fn(|_| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    });
                    let t = vec3::tangential(n, v);
                    for d in 0..3 {
                        g.slot_mut(k, f, d)[a] = t[d];
                    }
                }
            }
        }
        g
    }

    /// Right-hand side of (I − ΠS)g = b: the L²-projected boundary data plus
    /// the exchanged response of the volume source.
    pub fn build_rhs(&self, sources: &BoundarySources, volume: &VolumeSource) -> TransmissionField {
        let nfp = self.nfp();
        let nq = self.refel.face_quad.points.len();
        let mut b = self.zero_field();

        for k in 0..self.num_elements() {
            for f in 0..4 {
                let kind = match self.mesh.faces[k][f].connection {
                    FaceConnection::Boundary(kind) => kind,
                    FaceConnection::Interior { .. } => continue,
                };
                let source_fn = match kind {
                    BoundaryKind::Electric => &sources.s_e,
                    BoundaryKind::Magnetic => &sources.s_h,
                    BoundaryKind::Impedance => &sources.s_i,
                };
                let Some(source_fn) = source_fn else { continue };
                let n = self.operators[k].normals[f];
                let corners = self.mesh.face_corners(k, f);
                // Integrand values of the rhs formula at the quadrature
                // points, tangential by construction.
                let mut vals = vec![[Complex64::ZERO; 3]; nq];
                for (q, &xi) in self.refel.face_quad.points.iter().enumerate() {
                    let x = crate::refelem::nodes::map_to_face(corners, xi);
                    let s = source_fn(x, n);
                    vals[q] = match kind {
                        BoundaryKind::Electric => {
                            let c = vec3::cross_nc(n, s);
                            std::array::from_fn(|d| -2.0 * c[d])
                        }
                        BoundaryKind::Magnetic => {
                            let t = vec3::tangential(n, s);
                            std::array::from_fn(|d| 2.0 * t[d])
                        }
                        BoundaryKind::Impedance => vec3::tangential(n, s),
                    };
                }
                // Moments against the face Lagrange basis, then mass solve.
                let scale = self.operators[k].face_scale[f];
                for d in 0..3 {
                    let mut moments = vec![Complex64::ZERO; nfp];
                    for q in 0..nq {
                        let w = scale * self.refel.face_quad.weights[q];
                        for bi in 0..nfp {
                            moments[bi] += w * self.refel.face_interp.get(q, bi) * vals[q][d];
                        }
                    }
                    let mut nodal = vec![Complex64::ZERO; nfp];
                    self.refel
                        .face_mass_inv
                        .matvec_acc(&moments, 1.0 / scale, &mut nodal);
                    b.slot_mut(k, f, d).copy_from_slice(&nodal);
                }
                // Exact nodewise tangential cleanup (projection and πᵗ
                // commute; this removes rounding-level normal content).
                for a in 0..nfp {
                    let v: [Complex64; 3] = std::array::from_fn(|d| b.slot(k, f, d)[a]);
                    let t = vec3::tangential(n, v);
                    for d in 0..3 {
                        b.slot_mut(k, f, d)[a] = t[d];
                    }
                }
            }
        }

        // Volume source: scatter the source-only local responses and push
        // them through the exchange, keeping S itself linear.
        if !volume.is_absent() {
            let np = self.refel.np;
            let stride = 12 * nfp;
            let mut src_traces = self.zero_field();
            src_traces
                .data
                .par_chunks_mut(stride)
                .enumerate()
                .for_each(|(k, chunk)| {
                    let op = &self.operators[k];
                    let zero_in = vec![Complex64::ZERO; stride];
                    match volume.element_nodal(k, np) {
                        Some(j) => {
                            let state = op.solve_fields(&zero_in, Some(&j));
                            op.outgoing_into(&state, chunk);
                        }
                        None => chunk.fill(Complex64::ZERO),
                    }
                });
            let mut exchanged = self.zero_field();
            self.apply_exchange(&src_traces, &mut exchanged);
            b.axpy(Complex64::ONE, &exchanged);
        }

        b
    }

    /// Reconstruct the element fields corresponding to a skeleton iterate.
    pub fn reconstruct_fields(
        &self,
        g: &TransmissionField,
        volume: &VolumeSource,
    ) -> Vec<FieldState> {
        let np = self.refel.np;
        (0..self.num_elements())
            .into_par_iter()
            .map(|k| {
                let j = volume.element_nodal(k, np);
                self.operators[k].solve_fields(g.elem(k), j.as_ref())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::boxmesh::{build_box_mesh, unit_box_mesh};
    use crate::mesh::build_connectivity;
    use crate::mesh::samples::{single_tet, two_tets};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn box_system(n: usize, p: usize, kind: BoundaryKind) -> HybridizedSystem {
        let (raw, tags) = unit_box_mesh(n, kind);
        let mesh = Arc::new(build_connectivity(&raw, &tags).unwrap());
        HybridizedSystem::new(mesh, p, 2.1 * std::f64::consts::PI).unwrap()
    }

    fn mixed_box_system(n: usize, p: usize) -> HybridizedSystem {
        let kinds = [
            BoundaryKind::Electric,
            BoundaryKind::Impedance,
            BoundaryKind::Magnetic,
            BoundaryKind::Impedance,
            BoundaryKind::Electric,
            BoundaryKind::Impedance,
        ];
        let (raw, tags) = build_box_mesh(n, [[0.0; 3], [1.0; 3]], kinds);
        let mesh = Arc::new(build_connectivity(&raw, &tags).unwrap());
        HybridizedSystem::new(mesh, p, 2.1 * std::f64::consts::PI).unwrap()
    }

    fn two_tet_system(p: usize, kind: BoundaryKind) -> HybridizedSystem {
        let (raw, tags) = two_tets(kind);
        let mesh = Arc::new(build_connectivity(&raw, &tags).unwrap());
        HybridizedSystem::new(mesh, p, 2.1 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn exchange_moves_interior_data_to_coincident_nodes() {
        let sys = two_tet_system(2, BoundaryKind::Impedance);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Locate the interior face of element 0.
        let (f0, nb, fnb) = (0..4)
            .find_map(|f| match sys.mesh.faces[0][f].connection {
                FaceConnection::Interior { elem, face, .. } => Some((f, elem, face)),
                _ => None,
            })
            .unwrap();
        let mut g = sys.zero_field();
        let n = sys.operators[0].normals[f0];
        for a in 0..sys.nfp() {
            let v: [Complex64; 3] = std::array::from_fn(|_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let t = vec3::tangential(n, v);
            for d in 0..3 {
                g.slot_mut(0, f0, d)[a] = t[d];
            }
        }
        let mut pg = sys.zero_field();
        sys.apply_exchange(&g, &mut pg);
        // Only the neighbor slot is populated.
        for k in 0..2 {
            for f in 0..4 {
                for d in 0..3 {
                    for a in 0..sys.nfp() {
                        let v = pg.slot(k, f, d)[a];
                        if (k, f) == (nb, fnb) {
                            continue;
                        }
                        assert_eq!(v, Complex64::ZERO, "unexpected value at ({k},{f})");
                    }
                }
            }
        }
        // Values correspond through physical node positions: the exchanged
        // field evaluated at the neighbor's node b equals g at my node a
        // whenever the nodes coincide.
        let my_points: Vec<[f64; 3]> = sys.refel.face_node_index[f0]
            .iter()
            .map(|&i| sys.mesh.to_physical(0, sys.refel.nodes[i]))
            .collect();
        let nb_points: Vec<[f64; 3]> = sys.refel.face_node_index[fnb]
            .iter()
            .map(|&i| sys.mesh.to_physical(nb, sys.refel.nodes[i]))
            .collect();
        for (b_idx, pb) in nb_points.iter().enumerate() {
            let a = my_points
                .iter()
                .position(|pa| vec3::norm(vec3::sub(*pa, *pb)) < 1e-9)
                .unwrap();
            for d in 0..3 {
                assert_eq!(pg.slot(nb, fnb, d)[b_idx], g.slot(0, f0, d)[a]);
            }
        }
    }

    #[test]
    fn exchange_is_an_involution_and_isometry_without_impedance() {
        for kind in [BoundaryKind::Electric, BoundaryKind::Magnetic] {
            let sys = box_system(1, 2, kind);
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let g = sys.random_tangential(&mut rng);
            let mut pg = sys.zero_field();
            let mut ppg = sys.zero_field();
            sys.apply_exchange(&g, &mut pg);
            sys.apply_exchange(&pg, &mut ppg);
            assert_eq!(g.data, ppg.data, "Π∘Π must be exact identity");
            let (n1, n2) = (sys.norm_m(&pg), sys.norm_m(&g));
            assert!((n1 - n2).abs() <= 1e-12 * n2);
        }
    }

    #[test]
    fn exchange_contracts_with_impedance_faces() {
        let sys = mixed_box_system(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let g = sys.random_tangential(&mut rng);
            let mut pg = sys.zero_field();
            sys.apply_exchange(&g, &mut pg);
            assert!(sys.norm_m(&pg) <= sys.norm_m(&g) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn exchange_adjoint_matches_euclidean_pairing() {
        let sys = mixed_box_system(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = sys.random_tangential(&mut rng);
        let w = sys.random_tangential(&mut rng);
        let mut pg = sys.zero_field();
        let mut pw = sys.zero_field();
        sys.apply_exchange(&g, &mut pg);
        sys.apply_exchange_adjoint(&w, &mut pw);
        let lhs = pg.dot(&w);
        let rhs = g.dot(&pw);
        assert!((lhs - rhs).norm() <= 1e-12 * (pg.norm2() * w.norm2()).max(1.0));
    }

    #[test]
    fn full_adjoint_matches_euclidean_pairing() {
        let sys = mixed_box_system(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let g = sys.random_tangential(&mut rng);
        let w = sys.random_tangential(&mut rng);
        let mut scratch = sys.zero_field();
        let mut ag = sys.zero_field();
        let mut ahw = sys.zero_field();
        sys.apply(&g, &mut scratch, &mut ag);
        sys.apply_adjoint(&w, &mut scratch, &mut ahw);
        let lhs = ag.dot(&w);
        let rhs = g.dot(&ahw);
        assert!(
            (lhs - rhs).norm() <= 1e-11 * (ag.norm2() * w.norm2()).max(1.0),
            "adjoint defect {:.3e}",
            (lhs - rhs).norm()
        );
    }

    #[test]
    fn smooth_fields_exchange_to_their_incoming_traces() {
        // Interpolate a globally smooth polynomial field, emit outgoing
        // traces everywhere, exchange; on interior faces the result must be
        // the incoming trace πᵗe + n×h of the same smooth field.
        let sys = box_system(1, 3, BoundaryKind::Electric);
        let e_fn = |x: [f64; 3]| -> [Complex64; 3] {
            [
                Complex64::new(0.3 + x[0] * x[1], -0.2 * x[2]),
                Complex64::new(x[2] * x[2], 0.1),
                Complex64::new(-x[0], x[1] * x[2]),
            ]
        };
        let h_fn = |x: [f64; 3]| -> [Complex64; 3] {
            [
                Complex64::new(x[1], 0.4),
                Complex64::new(0.7 * x[0] * x[2], -x[1]),
                Complex64::new(0.05, x[0] * x[0]),
            ]
        };
        let mut traces = sys.zero_field();
        for k in 0..sys.num_elements() {
            for f in 0..4 {
                let n = sys.operators[k].normals[f];
                for (a, &i) in sys.refel.face_node_index[f].iter().enumerate() {
                    let x = sys.mesh.to_physical(k, sys.refel.nodes[i]);
                    let t = vec3::tangential(n, e_fn(x));
                    let c = vec3::cross_nc(n, h_fn(x));
                    for d in 0..3 {
                        traces.slot_mut(k, f, d)[a] = t[d] - c[d];
                    }
                }
            }
        }
        let mut exchanged = sys.zero_field();
        sys.apply_exchange(&traces, &mut exchanged);
        for k in 0..sys.num_elements() {
            for f in 0..4 {
                if !matches!(
                    sys.mesh.faces[k][f].connection,
                    FaceConnection::Interior { .. }
                ) {
                    continue;
                }
                let n = sys.operators[k].normals[f];
                for (a, &i) in sys.refel.face_node_index[f].iter().enumerate() {
                    let x = sys.mesh.to_physical(k, sys.refel.nodes[i]);
                    let t = vec3::tangential(n, e_fn(x));
                    let c = vec3::cross_nc(n, h_fn(x));
                    for d in 0..3 {
                        let expect = t[d] + c[d];
                        let got = exchanged.slot(k, f, d)[a];
                        assert!(
                            (got - expect).norm() <= 1e-10,
                            "k={k} f={f} d={d}: {got} vs {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn scattering_contracts_the_skeleton_norm() {
        for sys in [
            box_system(1, 2, BoundaryKind::Impedance),
            mixed_box_system(1, 2),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(16);
            for _ in 0..10 {
                let g = sys.random_tangential(&mut rng);
                let mut sg = sys.zero_field();
                sys.apply_scattering(&g, &mut sg);
                assert!(sys.norm_m(&sg) < sys.norm_m(&g));
                let mut psg = sys.zero_field();
                sys.apply_exchange(&sg, &mut psg);
                assert!(sys.norm_m(&psg) < sys.norm_m(&g));
            }
        }
    }

    #[test]
    fn all_impedance_single_tet_gives_identity_operator() {
        let (raw, tags) = single_tet(
            [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            BoundaryKind::Impedance,
        );
        let mesh = Arc::new(build_connectivity(&raw, &tags).unwrap());
        let sys = HybridizedSystem::new(mesh, 2, 2.1 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = sys.random_tangential(&mut rng);
        let mut scratch = sys.zero_field();
        let mut ag = sys.zero_field();
        sys.apply(&g, &mut scratch, &mut ag);
        assert_eq!(g.data, ag.data, "Π = 0 must make A the exact identity");
    }

    #[test]
    fn mass_ops_round_trip_and_match_quadrature() {
        let sys = mixed_box_system(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let g = sys.random_tangential(&mut rng);
        let mut mg = sys.zero_field();
        let mut back = sys.zero_field();
        sys.mass_apply(&g, &mut mg);
        sys.mass_solve(&mg, &mut back);
        let mut err = 0.0f64;
        for (a, b) in g.data.iter().zip(&back.data) {
            err = err.max((a - b).norm());
        }
        let gmax = g.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(err <= 1e-12 * gmax.max(1.0));

        // ⟨g, g⟩_M by independent face quadrature.
        let nq = sys.refel.face_quad.points.len();
        let mut quad_norm2 = 0.0;
        for k in 0..sys.num_elements() {
            for f in 0..4 {
                let scale = sys.operators[k].face_scale[f];
                for d in 0..3 {
                    let vals = g.slot(k, f, d);
                    for q in 0..nq {
                        let mut at_q = Complex64::ZERO;
                        for b in 0..sys.nfp() {
                            at_q += sys.refel.face_interp.get(q, b) * vals[b];
                        }
                        quad_norm2 += scale * sys.refel.face_quad.weights[q] * at_q.norm_sqr();
                    }
                }
            }
        }
        let m_norm2 = sys.norm_m(&g).powi(2);
        assert!((quad_norm2 - m_norm2).abs() <= 1e-10 * m_norm2);
    }

    #[test]
    fn boundary_rhs_reproduces_polynomial_data() {
        // Constant tangential data on the axis-aligned box faces.
        let sys_h = box_system(1, 2, BoundaryKind::Magnetic);
        let sources = BoundarySources {
            s_h: Some(Box::new(|_x, _n| {
                [Complex64::new(1.0, 0.0), Complex64::ZERO, Complex64::ZERO]
            })),
            ..Default::default()
        };
        let b = sys_h.build_rhs(&sources, &VolumeSource::Absent);
        for k in 0..sys_h.num_elements() {
            for f in 0..4 {
                if let FaceConnection::Boundary(_) = sys_h.mesh.faces[k][f].connection {
                    let n = sys_h.operators[k].normals[f];
                    let expect = vec3::tangential(
                        n,
                        [Complex64::new(2.0, 0.0), Complex64::ZERO, Complex64::ZERO],
                    );
                    for d in 0..3 {
                        for a in 0..sys_h.nfp() {
                            assert!(
                                (b.slot(k, f, d)[a] - expect[d]).norm() <= 1e-11,
                                "Γ_H rhs mismatch at k={k} f={f}"
                            );
                        }
                    }
                }
            }
        }

        // Γ_E: b = −2 n × s_E for linear s_E.
        let sys_e = box_system(1, 2, BoundaryKind::Electric);
        let sources = BoundarySources {
            s_e: Some(Box::new(|x, _n| {
                [
                    Complex64::new(x[1], 0.0),
                    Complex64::new(0.5 - x[0], 1.0),
                    Complex64::new(x[2], -x[0]),
                ]
            })),
            ..Default::default()
        };
        let b = sys_e.build_rhs(&sources, &VolumeSource::Absent);
        for k in 0..sys_e.num_elements() {
            for f in 0..4 {
                if let FaceConnection::Boundary(_) = sys_e.mesh.faces[k][f].connection {
                    let n = sys_e.operators[k].normals[f];
                    for (a, &i) in sys_e.refel.face_node_index[f].iter().enumerate() {
                        let x = sys_e.mesh.to_physical(k, sys_e.refel.nodes[i]);
                        let s = [
                            Complex64::new(x[1], 0.0),
                            Complex64::new(0.5 - x[0], 1.0),
                            Complex64::new(x[2], -x[0]),
                        ];
                        let c = vec3::cross_nc(n, s);
                        for d in 0..3 {
                            assert!(
                                (b.slot(k, f, d)[a] + 2.0 * c[d]).norm() <= 1e-11,
                                "Γ_E rhs mismatch"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn volume_sources_enter_through_the_exchanged_response() {
        let sys = box_system(1, 2, BoundaryKind::Electric);
        let kappa = sys.kappa;
        let volume = VolumeSource::Constant([
            Complex64::new(0.0, -1.0 / kappa),
            Complex64::ZERO,
            Complex64::ZERO,
        ]);
        let b = sys.build_rhs(&BoundarySources::zero(), &volume);
        assert!(b.norm2() > 1e-10, "volume source must drive the skeleton");
        // Tangency of the produced rhs.
        for k in 0..sys.num_elements() {
            for f in 0..4 {
                let n = sys.operators[k].normals[f];
                for a in 0..sys.nfp() {
                    let mut dot = Complex64::ZERO;
                    for d in 0..3 {
                        dot += n[d] * b.slot(k, f, d)[a];
                    }
                    assert!(dot.norm() <= 1e-10 * b.norm2());
                }
            }
        }
    }
}
