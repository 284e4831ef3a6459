//! Tiny hand-built meshes used by tests and examples.

use super::{BoundaryKind, BoundaryTri, RawMesh};
use crate::refelem::FACE_VERTICES;
use std::collections::BTreeMap;

/// One tetrahedron with the given corners; all four faces carry `kind`.
pub fn single_tet(
    corners: [[f64; 3]; 4],
    kind: BoundaryKind,
) -> (RawMesh, BTreeMap<i32, BoundaryKind>) {
    let tet = [0, 1, 2, 3];
    let boundary = FACE_VERTICES
        .iter()
        .map(|fv| BoundaryTri {
            vertices: fv.map(|c| tet[c]),
            tag: 1,
        })
        .collect();
    let raw = RawMesh {
        vertices: corners.to_vec(),
        tets: vec![tet],
        boundary,
    };
    (raw, BTreeMap::from([(1, kind)]))
}

/// The reference tetrahedron scaled to the unit simplex.
pub fn unit_tet(kind: BoundaryKind) -> (RawMesh, BTreeMap<i32, BoundaryKind>) {
    single_tet(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ],
        kind,
    )
}

/// Two tetrahedra sharing one interior face; the six outer faces carry
/// `kind`.
pub fn two_tets(kind: BoundaryKind) -> (RawMesh, BTreeMap<i32, BoundaryKind>) {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ];
    let tets = vec![[0, 1, 2, 3], [1, 2, 3, 4]];
    let mut boundary = Vec::new();
    for t in &tets {
        for fv in FACE_VERTICES {
            let tri = fv.map(|c| t[c]);
            let mut key = tri;
            key.sort_unstable();
            if key != [1, 2, 3] {
                boundary.push(BoundaryTri {
                    vertices: tri,
                    tag: 1,
                });
            }
        }
    }
    let raw = RawMesh {
        vertices,
        tets,
        boundary,
    };
    (raw, BTreeMap::from([(1, kind)]))
}
