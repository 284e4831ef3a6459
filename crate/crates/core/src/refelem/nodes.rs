//! Warp-and-blend interpolation nodes on the reference triangle and
//! tetrahedron.
//!
//! Equidistant barycentric lattices are deformed edge-by-edge toward the
//! Gauss-Lobatto distribution, blended into the interior with the published
//! per-degree blending parameters. The construction is carried out on the
//! equilateral simplex and mapped back to the bi-unit reference element.
//! The same blending parameter drives the face warp of the tetrahedron and
//! the standalone triangle construction, so the face trace of the 3D node
//! set coincides exactly with the 2D node set.

use crate::math::jacobi::gauss_lobatto;
use nalgebra::{Matrix3, Vector3};

/// Optimized blending parameters for degrees 1..=15.
const WARP_ALPHA: [f64; 15] = [
    0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577, 1.1603, 1.10153, 0.6080, 0.4523, 0.8856,
    0.8717, 0.9655,
];

/// Highest degree for which the node tables are supported.
pub const MAX_DEGREE: usize = 10;

fn blend_alpha(p: usize) -> f64 {
    if p <= WARP_ALPHA.len() {
        WARP_ALPHA[p - 1]
    } else {
        1.0
    }
}

/// One-dimensional warp: the displacement from equidistant points to
/// Gauss-Lobatto points, interpolated to `x` and deflated by the edge
/// factor (1-x²) so that the caller can blend it with barycentric products.
fn eval_warp(p: usize, gauss_x: &[f64], x: &[f64]) -> Vec<f64> {
    let mut warp = vec![0.0; x.len()];
    let xeq: Vec<f64> = (0..=p)
        .map(|i| -1.0 + 2.0 * (p - i) as f64 / p as f64)
        .collect();
    for i in 0..=p {
        let base = gauss_x[i] - xeq[i];
        for (out, &xo) in warp.iter_mut().zip(x) {
            let mut d = base;
            for j in 1..p {
                if j != i {
                    d *= (xo - xeq[j]) / (xeq[i] - xeq[j]);
                }
            }
            if i != 0 {
                d = -d / (xeq[i] - xeq[0]);
            }
            if i != p {
                d /= xeq[i] - xeq[p];
            }
            *out += d;
        }
    }
    warp
}

/// Tangential warp of a triangle in its equilateral frame. `l1`, `l2`, `l3`
/// are the barycentric coordinates of the points to move; the returned
/// displacements are in the frame whose x-axis runs along the edge between
/// the `l2` and `l3` vertices.
fn eval_shift(p: usize, alpha: f64, l1: &[f64], l2: &[f64], l3: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gauss_x: Vec<f64> = gauss_lobatto(p).into_iter().map(|v| -v).collect();
    let n = l1.len();
    let edge = |la: &[f64], lb: &[f64]| -> Vec<f64> {
        let coord: Vec<f64> = la.iter().zip(lb).map(|(&a, &b)| a - b).collect();
        eval_warp(p, &gauss_x, &coord)
    };
    let wf1 = edge(l3, l2);
    let wf2 = edge(l1, l3);
    let wf3 = edge(l2, l1);
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let (c23, s23) = (
        (2.0 * std::f64::consts::PI / 3.0).cos(),
        (2.0 * std::f64::consts::PI / 3.0).sin(),
    );
    let (c43, s43) = (
        (4.0 * std::f64::consts::PI / 3.0).cos(),
        (4.0 * std::f64::consts::PI / 3.0).sin(),
    );
    for i in 0..n {
        let warp1 = 4.0 * l2[i] * l3[i] * wf1[i] * (1.0 + (alpha * l1[i]).powi(2));
        let warp2 = 4.0 * l1[i] * l3[i] * wf2[i] * (1.0 + (alpha * l2[i]).powi(2));
        let warp3 = 4.0 * l1[i] * l2[i] * wf3[i] * (1.0 + (alpha * l3[i]).powi(2));
        dx[i] = warp1 + c23 * warp2 + c43 * warp3;
        dy[i] = s23 * warp2 + s43 * warp3;
    }
    (dx, dy)
}

/// Warp-and-blend nodes on the bi-unit reference triangle, degree `p`
/// (1 ..= MAX_DEGREE). Node count is (p+1)(p+2)/2.
pub fn triangle_nodes(p: usize) -> Vec<[f64; 2]> {
    assert!(
        (1..=MAX_DEGREE).contains(&p),
        "triangle nodes are tabulated for degrees 1..={MAX_DEGREE}, got {p}"
    );
    let alpha = blend_alpha(p);
    // Equidistant barycentric lattice; l1 belongs to the top vertex.
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let mut l3 = Vec::new();
    for n in 0..=p {
        for m in 0..=(p - n) {
            l1.push(n as f64 / p as f64);
            l3.push(m as f64 / p as f64);
            l2.push(1.0 - (n + m) as f64 / p as f64);
        }
    }
    let (dx, dy) = eval_shift(p, alpha, &l1, &l2, &l3);
    let sqrt3 = 3f64.sqrt();
    (0..l1.len())
        .map(|i| {
            let x = -l2[i] + l3[i] + dx[i];
            let y = (2.0 * l1[i] - l2[i] - l3[i]) / sqrt3 + dy[i];
            equilateral_to_ref_tri(x, y)
        })
        .collect()
}

fn equilateral_to_ref_tri(x: f64, y: f64) -> [f64; 2] {
    let sqrt3 = 3f64.sqrt();
    let l1 = (sqrt3 * y + 1.0) / 3.0;
    let l2 = (-3.0 * x - sqrt3 * y + 2.0) / 6.0;
    let l3 = (3.0 * x - sqrt3 * y + 2.0) / 6.0;
    [-l2 + l3 - l1, -l2 - l3 + l1]
}

/// Warp-and-blend nodes on the bi-unit reference tetrahedron, degree `p`
/// (1 ..= MAX_DEGREE). Node count is (p+1)(p+2)(p+3)/6.
pub fn tet_nodes(p: usize) -> Vec<[f64; 3]> {
    assert!(
        (1..=MAX_DEGREE).contains(&p),
        "tetrahedron nodes are tabulated for degrees 1..={MAX_DEGREE}, got {p}"
    );
    let alpha = blend_alpha(p);
    let tol = 1e-10;

    // Equidistant barycentric lattice. The four coordinates are attached to
    // the equilateral vertices below: l[0] top (v4), l[1] (v3), l[2] (v1),
    // l[3] (v2), matching the bi-unit corner order used elsewhere through
    // the map at the end.
    let mut bary: Vec<[f64; 4]> = Vec::new();
    for n in 0..=p {
        for m in 0..=(p - n) {
            for q in 0..=(p - n - m) {
                let r = -1.0 + 2.0 * q as f64 / p as f64;
                let s = -1.0 + 2.0 * m as f64 / p as f64;
                let t = -1.0 + 2.0 * n as f64 / p as f64;
                bary.push([
                    (1.0 + t) / 2.0,
                    (1.0 + s) / 2.0,
                    -(1.0 + r + s + t) / 2.0,
                    (1.0 + r) / 2.0,
                ]);
            }
        }
    }

    let sqrt3 = 3f64.sqrt();
    let sqrt6 = 6f64.sqrt();
    let v1 = Vector3::new(-1.0, -1.0 / sqrt3, -1.0 / sqrt6);
    let v2 = Vector3::new(1.0, -1.0 / sqrt3, -1.0 / sqrt6);
    let v3 = Vector3::new(0.0, 2.0 / sqrt3, -1.0 / sqrt6);
    let v4 = Vector3::new(0.0, 0.0, 3.0 / sqrt6);

    // Per-face tangent frames for the warp directions.
    let t1 = [v2 - v1, v2 - v1, v3 - v2, v3 - v1].map(|v| v.normalize());
    let t2 = [
        v3 - 0.5 * (v1 + v2),
        v4 - 0.5 * (v1 + v2),
        v4 - 0.5 * (v2 + v3),
        v4 - 0.5 * (v1 + v3),
    ]
    .map(|v| v.normalize());

    let n = bary.len();
    let mut xyz: Vec<Vector3<f64>> = bary
        .iter()
        .map(|l| l[2] * v1 + l[3] * v2 + l[1] * v3 + l[0] * v4)
        .collect();
    let mut shift = vec![Vector3::zeros(); n];

    // Coordinate selection per face: (la; lb, lc, ld) with la vanishing on
    // the face being warped.
    let face_coords: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 0, 2, 3], [2, 0, 3, 1], [3, 0, 2, 1]];
    for (face, sel) in face_coords.iter().enumerate() {
        let la: Vec<f64> = bary.iter().map(|l| l[sel[0]]).collect();
        let lb: Vec<f64> = bary.iter().map(|l| l[sel[1]]).collect();
        let lc: Vec<f64> = bary.iter().map(|l| l[sel[2]]).collect();
        let ld: Vec<f64> = bary.iter().map(|l| l[sel[3]]).collect();
        let (w1, w2) = eval_shift(p, alpha, &lb, &lc, &ld);
        for i in 0..n {
            let denom = (lb[i] + 0.5 * la[i]) * (lc[i] + 0.5 * la[i]) * (ld[i] + 0.5 * la[i]);
            let mut blend = lb[i] * lc[i] * ld[i];
            if denom > tol {
                blend *= (1.0 + (alpha * la[i]).powi(2)) / denom;
            }
            shift[i] += blend * w1[i] * t1[face] + blend * w2[i] * t2[face];
            // Nodes on the face boundary get the pure face warp: the volume
            // blends of the adjoining faces would otherwise double-count.
            let on_boundary = la[i] < tol
                && ((lb[i] > tol) as u8 + (lc[i] > tol) as u8 + (ld[i] > tol) as u8) < 3;
            if on_boundary {
                shift[i] = w1[i] * t1[face] + w2[i] * t2[face];
            }
        }
    }
    for i in 0..n {
        xyz[i] += shift[i];
    }

    // Back from the equilateral frame to bi-unit reference coordinates.
    let a = Matrix3::from_columns(&[0.5 * (v2 - v1), 0.5 * (v3 - v1), 0.5 * (v4 - v1)]);
    let a_inv = a
        .try_inverse()
        .expect("equilateral frame is non-degenerate");
    let offset = 0.5 * (v2 + v3 + v4 - v1);
    xyz.iter()
        .map(|&pnt| {
            let rst = a_inv * (pnt - offset);
            [rst[0], rst[1], rst[2]]
        })
        .collect()
}

/// Barycentric coordinates of a reference-tetrahedron point with respect to
/// the four corners in `REF_VERTICES` order.
pub fn tet_barycentric(p: [f64; 3]) -> [f64; 4] {
    let (r, s, t) = (p[0], p[1], p[2]);
    [
        -(1.0 + r + s + t) / 2.0,
        (1.0 + r) / 2.0,
        (1.0 + s) / 2.0,
        (1.0 + t) / 2.0,
    ]
}

/// Barycentric coordinates of a reference-triangle point with respect to
/// the corners in `TRI_VERTICES` order.
pub fn tri_barycentric(p: [f64; 2]) -> [f64; 3] {
    let (r, s) = (p[0], p[1]);
    [-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0]
}

/// Map a reference-triangle point onto a 3-vertex face given by the actual
/// corner positions (works for both reference and physical coordinates).
pub fn map_to_face<const N: usize>(corners: [[f64; N]; 3], p: [f64; 2]) -> [f64; N] {
    let l = tri_barycentric(p);
    let mut out = [0.0; N];
    for d in 0..N {
        out[d] = l[0] * corners[0][d] + l[1] * corners[1][d] + l[2] * corners[2][d];
    }
    out
}
