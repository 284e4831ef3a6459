//! Structured box meshes: each cell of an n×n×n grid is split into six
//! tetrahedra around the cell's main diagonal, which makes adjacent cells
//! conforming.

use super::{BoundaryKind, BoundaryTri, RawMesh};
use crate::refelem::FACE_VERTICES;
use std::collections::BTreeMap;

/// Axis orders generating the six tetrahedra of one cell. Walking the cell
/// from its min corner to its max corner along each axis order yields six
/// tets that share the main diagonal and tile the cell.
const AXIS_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Tags used for the six box sides, in `SIDE_NAMES` order.
pub const SIDE_TAGS: [i32; 6] = [1, 2, 3, 4, 5, 6];
pub const SIDE_NAMES: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

/// Mesh the box `[bounds[0], bounds[1]]` with `n` cells per axis (six tets
/// per cell). `kinds[s]` is the boundary kind of side `SIDE_NAMES[s]`; the
/// returned map resolves `SIDE_TAGS` to those kinds.
pub fn build_box_mesh(
    n: usize,
    bounds: [[f64; 3]; 2],
    kinds: [BoundaryKind; 6],
) -> (RawMesh, BTreeMap<i32, BoundaryKind>) {
    assert!(n >= 1, "box mesh needs at least one cell per axis");
    let np = n + 1;
    let coord = |i: usize, d: usize| -> f64 {
        bounds[0][d] + (bounds[1][d] - bounds[0][d]) * (i as f64) / (n as f64)
    };
    let vid = |i: usize, j: usize, k: usize| -> usize { (k * np + j) * np + i };

    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push([coord(i, 0), coord(j, 1), coord(k, 2)]);
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * n * n * n);
    for ck in 0..n {
        for cj in 0..n {
            for ci in 0..n {
                let base = [ci, cj, ck];
                for order in AXIS_ORDERS {
                    let mut corner = base;
                    let mut tet = [vid(base[0], base[1], base[2]), 0, 0, 0];
                    for (step, axis) in order.iter().enumerate() {
                        corner[*axis] += 1;
                        tet[step + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    // Boundary triangles: faces of the tets that lie in one of the six box
    // planes and are not shared with another tet.
    let mut incidence: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for t in &tets {
        for fv in FACE_VERTICES {
            let mut key = fv.map(|c| t[c]);
            key.sort_unstable();
            *incidence.entry(key).or_insert(0) += 1;
        }
    }
    let grid_index = |v: usize| -> [usize; 3] { [v % np, (v / np) % np, v / (np * np)] };
    let side_of = |tri: &[usize; 3]| -> Option<usize> {
        for d in 0..3 {
            for (limit, side) in [(0usize, 2 * d), (n, 2 * d + 1)] {
                if tri.iter().all(|&v| grid_index(v)[d] == limit) {
                    return Some(side);
                }
            }
        }
        None
    };
    let mut boundary = Vec::with_capacity(12 * n * n);
    for (tri, count) in &incidence {
        if *count == 1 {
            let side = side_of(tri).expect("single-incidence box face lies in a box plane");
            boundary.push(BoundaryTri {
                vertices: *tri,
                tag: SIDE_TAGS[side],
            });
        }
    }

    let tag_map = SIDE_TAGS.iter().zip(kinds).map(|(t, k)| (*t, k)).collect();
    (
        RawMesh {
            vertices,
            tets,
            boundary,
        },
        tag_map,
    )
}

/// Box mesh of the unit cube with the same kind on every side.
pub fn unit_box_mesh(n: usize, kind: BoundaryKind) -> (RawMesh, BTreeMap<i32, BoundaryKind>) {
    build_box_mesh(n, [[0.0; 3], [1.0; 3]], [kind; 6])
}
