//! Tetrahedral meshes: raw element lists, face connectivity with neighbor
//! orientation, affine element geometry, and boundary classification.

pub mod boxmesh;
pub mod msh;
pub mod samples;

use crate::math::vec3;
use crate::refelem::{FACE_VERTICES, REF_VOLUME};
use std::collections::BTreeMap;
use thiserror::Error;

/// Boundary condition kind attached to a boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryKind {
    /// Perfect electric conductor: n × e prescribed.
    Electric,
    /// Perfect magnetic conductor: n × h prescribed.
    Magnetic,
    /// Impedance/absorbing face: incoming transmission data prescribed.
    Impedance,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryKind::Electric => write!(f, "E"),
            BoundaryKind::Magnetic => write!(f, "H"),
            BoundaryKind::Impedance => write!(f, "I"),
        }
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E" | "e" => Ok(BoundaryKind::Electric),
            "H" | "h" => Ok(BoundaryKind::Magnetic),
            "I" | "i" => Ok(BoundaryKind::Impedance),
            other => Err(format!(
                "unknown boundary kind {other:?}, expected E, H or I"
            )),
        }
    }
}

/// Tagged boundary triangle of a raw mesh.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryTri {
    pub vertices: [usize; 3],
    pub tag: i32,
}

/// Mesh as read from a generator or a file: pure element lists, no
/// connectivity.
#[derive(Clone, Debug, Default)]
pub struct RawMesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub boundary: Vec<BoundaryTri>,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("tetrahedron {tet} references vertex {vertex} but the mesh has {count} vertices")]
    VertexOutOfRange {
        tet: usize,
        vertex: usize,
        count: usize,
    },
    #[error("tetrahedron {tet} is degenerate (volume {volume:.3e})")]
    DegenerateTet { tet: usize, volume: f64 },
    #[error("face {vertices:?} is shared by more than two tetrahedra")]
    NonManifold { vertices: [usize; 3] },
    #[error("boundary face {vertices:?} of tetrahedron {tet} carries no boundary tag")]
    MissingBoundaryTag { tet: usize, vertices: [usize; 3] },
    #[error("boundary triangle {vertices:?} does not coincide with a boundary face of the mesh")]
    DanglingBoundaryTriangle { vertices: [usize; 3] },
    #[error("boundary tag {tag} has no assigned boundary kind")]
    UnknownBoundaryTag { tag: i32 },
    #[error("boundary name {name:?} does not match any surface in the mesh")]
    UnknownBoundaryName { name: String },
    #[error("surface {name:?} ({tag}) has no boundary kind assigned; pass name=E|H|I for it")]
    UnassignedSurface { name: String, tag: i32 },
}

/// Where a local face leads.
#[derive(Clone, Debug)]
pub enum FaceConnection {
    /// Interior face: the neighboring element, its local face index, and
    /// the corner permutation (`perm[i]` is the position of our corner `i`
    /// in the neighbor's corner list of that face).
    Interior {
        elem: usize,
        face: usize,
        corner_perm: [usize; 3],
    },
    Boundary(BoundaryKind),
}

/// Per-face geometry of an element.
#[derive(Clone, Debug)]
pub struct FaceGeometry {
    /// Outward unit normal (constant on the affine face).
    pub normal: [f64; 3],
    /// Physical face area.
    pub area: f64,
    /// Longest edge of the face; used to scale coincidence tolerances.
    pub diameter: f64,
    pub connection: FaceConnection,
}

/// Affine geometry of one element.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    /// jac[d][e] = ∂x_d / ∂r_e for the reference-to-physical map.
    pub jac: [[f64; 3]; 3],
    /// inv[e][d] = ∂r_e / ∂x_d.
    pub inv_jac: [[f64; 3]; 3],
    /// Determinant of `jac`; positive after orientation fixing.
    pub det_jac: f64,
}

/// Connected, oriented tetrahedral mesh with boundary kinds resolved.
#[derive(Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub geometry: Vec<ElementGeometry>,
    /// faces[k][f] describes local face f of element k.
    pub faces: Vec<[FaceGeometry; 4]>,
}

impl Mesh {
    pub fn num_elements(&self) -> usize {
        self.tets.len()
    }

    /// Positions of the three corners of local face `f` of element `k`, in
    /// `FACE_VERTICES` order.
    pub fn face_corners(&self, k: usize, f: usize) -> [[f64; 3]; 3] {
        let t = self.tets[k];
        FACE_VERTICES[f].map(|c| self.vertices[t[c]])
    }

    /// Global vertex ids of local face `f` of element `k`.
    pub fn face_corner_ids(&self, k: usize, f: usize) -> [usize; 3] {
        let t = self.tets[k];
        FACE_VERTICES[f].map(|c| t[c])
    }

    /// Map a reference point into element `k`.
    pub fn to_physical(&self, k: usize, r: [f64; 3]) -> [f64; 3] {
        let l = crate::refelem::nodes::tet_barycentric(r);
        let t = self.tets[k];
        let mut x = [0.0; 3];
        for (li, vi) in l.iter().zip(&t) {
            for d in 0..3 {
                x[d] += li * self.vertices[*vi][d];
            }
        }
        x
    }

    /// Physical volume of element `k`.
    pub fn volume(&self, k: usize) -> f64 {
        self.geometry[k].det_jac * REF_VOLUME
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.volume(k)).sum()
    }
}

/// Match each point of `a` to a coincident point of `b` within `tol`;
/// returns `perm` with `b[perm[i]] == a[i]`, or `None` if any point lacks a
/// unique match.
pub fn match_coincident_points(a: &[[f64; 3]], b: &[[f64; 3]], tol: f64) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut perm = Vec::with_capacity(a.len());
    for pa in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, pb) in b.iter().enumerate() {
            let d = vec3::norm(vec3::sub(*pa, *pb));
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best?;
        if d > tol || used[j] {
            return None;
        }
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

/// Build connectivity and geometry from a raw mesh. Fixes inverted elements
/// by swapping two vertices, pairs interior faces, and resolves boundary
/// tags through `tag_map`.
pub fn build_connectivity(
    raw: &RawMesh,
    tag_map: &BTreeMap<i32, BoundaryKind>,
) -> Result<Mesh, MeshError> {
    let nv = raw.vertices.len();
    let mut tets = raw.tets.clone();
    for (k, t) in tets.iter().enumerate() {
        for &v in t {
            if v >= nv {
                return Err(MeshError::VertexOutOfRange {
                    tet: k,
                    vertex: v,
                    count: nv,
                });
            }
        }
    }

    // Orient: reference map must have positive determinant.
    let mut geometry = Vec::with_capacity(tets.len());
    for (k, t) in tets.iter_mut().enumerate() {
        let det = tet_det(&raw.vertices, t);
        let scale = tet_scale(&raw.vertices, t);
        if det.abs() < 1e-12 * scale.powi(3) {
            return Err(MeshError::DegenerateTet {
                tet: k,
                volume: det * REF_VOLUME,
            });
        }
        if det < 0.0 {
            t.swap(1, 2);
        }
        geometry.push(element_geometry(&raw.vertices, t));
    }

    // Face incidence table.
    let mut table: BTreeMap<[usize; 3], Vec<(usize, usize)>> = BTreeMap::new();
    for (k, t) in tets.iter().enumerate() {
        for (f, fv) in FACE_VERTICES.iter().enumerate() {
            let key = sorted3(fv.map(|c| t[c]));
            table.entry(key).or_default().push((k, f));
        }
    }
    for (verts, sides) in &table {
        if sides.len() > 2 {
            return Err(MeshError::NonManifold { vertices: *verts });
        }
    }

    // Boundary tags by sorted vertex triple.
    let mut tag_by_face: BTreeMap<[usize; 3], i32> = BTreeMap::new();
    for tri in &raw.boundary {
        let key = sorted3(tri.vertices);
        match table.get(&key) {
            Some(sides) if sides.len() == 1 => {
                tag_by_face.insert(key, tri.tag);
            }
            _ => {
                return Err(MeshError::DanglingBoundaryTriangle {
                    vertices: tri.vertices,
                });
            }
        }
    }

    let mut faces: Vec<[FaceGeometry; 4]> = Vec::with_capacity(tets.len());
    for (k, t) in tets.iter().enumerate() {
        let elem_centroid = centroid4(&raw.vertices, t);
        let mut per_elem: Vec<FaceGeometry> = Vec::with_capacity(4);
        for (f, fv) in FACE_VERTICES.iter().enumerate() {
            let ids = fv.map(|c| t[c]);
            let corners = ids.map(|v| raw.vertices[v]);
            let key = sorted3(ids);
            let sides = &table[&key];
            let connection = if sides.len() == 2 {
                let (ok, of) = sides
                    .iter()
                    .copied()
                    .find(|&(ok, of)| (ok, of) != (k, f))
                    .expect("interior face has two distinct sides");
                let other_ids = FACE_VERTICES[of].map(|c| tets[ok][c]);
                let mut corner_perm = [usize::MAX; 3];
                for (i, id) in ids.iter().enumerate() {
                    corner_perm[i] = other_ids
                        .iter()
                        .position(|o| o == id)
                        .expect("shared face has identical vertex sets");
                }
                FaceConnection::Interior {
                    elem: ok,
                    face: of,
                    corner_perm,
                }
            } else {
                let tag = tag_by_face.get(&key).ok_or(MeshError::MissingBoundaryTag {
                    tet: k,
                    vertices: ids,
                })?;
                let kind = tag_map
                    .get(tag)
                    .ok_or(MeshError::UnknownBoundaryTag { tag: *tag })?;
                FaceConnection::Boundary(*kind)
            };

            let e1 = vec3::sub(corners[1], corners[0]);
            let e2 = vec3::sub(corners[2], corners[0]);
            let cr = vec3::cross(e1, e2);
            let area = 0.5 * vec3::norm(cr);
            let mut normal = vec3::scale(cr, 1.0 / vec3::norm(cr));
            let face_centroid = [
                (corners[0][0] + corners[1][0] + corners[2][0]) / 3.0,
                (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0,
                (corners[0][2] + corners[1][2] + corners[2][2]) / 3.0,
            ];
            if vec3::dot(normal, vec3::sub(face_centroid, elem_centroid)) < 0.0 {
                normal = vec3::scale(normal, -1.0);
            }
            let diameter = [
                vec3::norm(vec3::sub(corners[0], corners[1])),
                vec3::norm(vec3::sub(corners[1], corners[2])),
                vec3::norm(vec3::sub(corners[2], corners[0])),
            ]
            .into_iter()
            .fold(0.0f64, f64::max);

            per_elem.push(FaceGeometry {
                normal,
                area,
                diameter,
                connection,
            });
        }
        faces.push(per_elem.try_into().map_err(|_| ()).expect("four faces"));
    }

    Ok(Mesh {
        vertices: raw.vertices.clone(),
        tets,
        geometry,
        faces,
    })
}

fn tet_det(vertices: &[[f64; 3]], t: &[usize; 4]) -> f64 {
    let j = jac_columns(vertices, t);
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

/// jac[d][e] = ∂x_d/∂r_e = (vertex_{e+1} - vertex_0)_d / 2.
fn jac_columns(vertices: &[[f64; 3]], t: &[usize; 4]) -> [[f64; 3]; 3] {
    let v0 = vertices[t[0]];
    let mut j = [[0.0; 3]; 3];
    for e in 0..3 {
        let ve = vertices[t[e + 1]];
        for d in 0..3 {
            j[d][e] = 0.5 * (ve[d] - v0[d]);
        }
    }
    j
}

fn tet_scale(vertices: &[[f64; 3]], t: &[usize; 4]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            s = s.max(vec3::norm(vec3::sub(vertices[t[i]], vertices[t[j]])));
        }
    }
    s
}

fn centroid4(vertices: &[[f64; 3]], t: &[usize; 4]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &v in t {
        for d in 0..3 {
            c[d] += vertices[v][d] / 4.0;
        }
    }
    c
}

fn element_geometry(vertices: &[[f64; 3]], t: &[usize; 4]) -> ElementGeometry {
    let jac = jac_columns(vertices, t);
    let det_jac = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    // inv[e][d] = ∂r_e/∂x_d: rows of the inverse of jac.
    let cof = |r: usize, c: usize| -> f64 {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        jac[r1][c1] * jac[r2][c2] - jac[r1][c2] * jac[r2][c1]
    };
    let mut inv_jac = [[0.0; 3]; 3];
    for e in 0..3 {
        for d in 0..3 {
            inv_jac[e][d] = cof(d, e) / det_jac;
        }
    }
    ElementGeometry {
        jac,
        inv_jac,
        det_jac,
    }
}
