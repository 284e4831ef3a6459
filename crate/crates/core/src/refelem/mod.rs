//! Nodal reference element on the bi-unit tetrahedron: interpolation nodes,
//! modal/nodal change of basis, differentiation and mass matrices, face
//! restriction, and the fixed quadrature rules used for projections and
//! error integrals.

pub mod basis;
pub mod nodes;

use crate::math::quadrature::{tet_rule, triangle_rule, TetRule, TriangleRule};
use crate::math::RealMat;
use nalgebra::DMatrix;

/// Corners of the bi-unit reference tetrahedron.
pub const REF_VERTICES: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Corners of the bi-unit reference triangle.
pub const TRI_VERTICES: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];

/// Local corner triples of the four faces, in outward-consistent order.
/// Face f is opposite to the corner not listed.
pub const FACE_VERTICES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]];

/// Volume of the reference tetrahedron.
pub const REF_VOLUME: f64 = 4.0 / 3.0;

/// Area of the reference triangle.
pub const REF_FACE_AREA: f64 = 2.0;

/// Everything about the scalar discretization that depends only on the
/// polynomial degree. Shared across all elements of a mesh.
pub struct ReferenceElement {
    pub p: usize,
    /// Nodes per element: (p+1)(p+2)(p+3)/6.
    pub np: usize,
    /// Nodes per face: (p+1)(p+2)/2.
    pub nfp: usize,
    /// Interpolation nodes in reference coordinates.
    pub nodes: Vec<[f64; 3]>,
    /// Face nodes in reference-triangle coordinates.
    pub tri_nodes: Vec<[f64; 2]>,
    /// For each face, the volume-node index of each face node. Ordered so
    /// that entry m corresponds to `tri_nodes[m]` mapped through the face.
    pub face_node_index: [Vec<usize>; 4],
    /// Modal-to-nodal change of basis (values of the orthonormal modes at
    /// the nodes) and its inverse.
    pub vandermonde: DMatrix<f64>,
    pub vandermonde_inv: DMatrix<f64>,
    /// Nodal differentiation matrices d/dr, d/ds, d/dt.
    pub diff: [RealMat; 3],
    /// Reference mass matrix (Vandermonde⁻ᵀ Vandermonde⁻¹).
    pub mass: RealMat,
    /// Face Vandermonde (triangle modes at the face nodes) and the face
    /// mass matrix with its inverse.
    pub face_vandermonde: DMatrix<f64>,
    pub face_mass: RealMat,
    pub face_mass_inv: RealMat,
    /// Volume quadrature exact to degree 2p+2 and the interpolation matrix
    /// from nodal values to its points.
    pub vol_quad: TetRule,
    pub vol_interp: RealMat,
    /// Face quadrature exact to degree 2p+2 with the matching interpolation
    /// from face-node values.
    pub face_quad: TriangleRule,
    pub face_interp: RealMat,
}

impl ReferenceElement {
    /// Build the reference element for polynomial degree `p` (0..=10).
    /// Degree 0 is supported for single-element verification work; real
    /// runs use p ≥ 1.
    pub fn new(p: usize) -> Self {
        assert!(
            p <= nodes::MAX_DEGREE,
            "reference element supports degrees 0..={}, got {p}",
            nodes::MAX_DEGREE
        );
        let (nodes3, tri_nodes) = if p == 0 {
            // A single node; place it at the centroid. Constants restrict to
            // constants, so every face "node" reads the same volume value.
            (vec![[-0.5, -0.5, -0.5]], vec![[-1.0 / 3.0, -1.0 / 3.0]])
        } else {
            (nodes::tet_nodes(p), nodes::triangle_nodes(p))
        };
        let np = nodes3.len();
        let nfp = tri_nodes.len();

        let vandermonde = basis::tet_modes_at(p, &nodes3);
        let vandermonde_inv = vandermonde
            .clone()
            .try_inverse()
            .expect("nodal set must be unisolvent");
        let mass_m = vandermonde_inv.transpose() * &vandermonde_inv;

        // Nodal differentiation: conjugate the exact modal derivative
        // matrices with the change of basis.
        let modal_diff = basis::tet_modal_diff(p);
        let diff =
            modal_diff.map(|dm| RealMat::from_dmatrix(&(&vandermonde * dm * &vandermonde_inv)));

        let face_vandermonde = basis::tri_modes_at(p, &tri_nodes);
        let face_v_inv = face_vandermonde
            .clone()
            .try_inverse()
            .expect("face nodal set must be unisolvent");
        let face_mass_m = face_v_inv.transpose() * &face_v_inv;
        let face_mass_inv_m = face_mass_m
            .clone()
            .try_inverse()
            .expect("face mass matrix is SPD");

        let face_node_index = if p == 0 {
            [vec![0], vec![0], vec![0], vec![0]]
        } else {
            Self::match_face_nodes(&nodes3, &tri_nodes)
        };

        let vol_quad = tet_rule(2 * p + 2);
        let vq = basis::tet_modes_at(p, &vol_quad.points);
        let vol_interp = RealMat::from_dmatrix(&(&vq * &vandermonde_inv));

        let face_quad = triangle_rule(2 * p + 2);
        let fq = basis::tri_modes_at(p, &face_quad.points);
        let face_interp = RealMat::from_dmatrix(&(&fq * &face_v_inv));

        Self {
            p,
            np,
            nfp,
            nodes: nodes3,
            tri_nodes,
            face_node_index,
            vandermonde,
            vandermonde_inv,
            diff,
            mass: RealMat::from_dmatrix(&mass_m),
            face_vandermonde,
            face_mass: RealMat::from_dmatrix(&face_mass_m),
            face_mass_inv: RealMat::from_dmatrix(&face_mass_inv_m),
            vol_quad,
            vol_interp,
            face_quad,
            face_interp,
        }
    }

    fn match_face_nodes(nodes3: &[[f64; 3]], tri_nodes: &[[f64; 2]]) -> [Vec<usize>; 4] {
        let mut out: [Vec<usize>; 4] = Default::default();
        for (f, fv) in FACE_VERTICES.iter().enumerate() {
            let corners = [
                REF_VERTICES[fv[0]],
                REF_VERTICES[fv[1]],
                REF_VERTICES[fv[2]],
            ];
            for &tn in tri_nodes {
                let target = nodes::map_to_face(corners, tn);
                let (best, dist) = nodes3
                    .iter()
                    .enumerate()
                    .map(|(i, n)| {
                        let d2 = (0..3).map(|d| (n[d] - target[d]).powi(2)).sum::<f64>();
                        (i, d2.sqrt())
                    })
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                assert!(
                    dist < 1e-8,
                    "face {f} node {tn:?} has no matching volume node (nearest at {dist:.2e})"
                );
                out[f].push(best);
            }
        }
        out
    }

    /// Reference coordinates of face node `m` of face `f`.
    pub fn face_node_point(&self, f: usize, m: usize) -> [f64; 3] {
        self.nodes[self.face_node_index[f][m]]
    }
}
