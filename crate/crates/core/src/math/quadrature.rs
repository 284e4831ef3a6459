//! Quadrature on the bi-unit reference triangle and tetrahedron.
//!
//! The rules are built by collapsing tensor-product Gauss-Jacobi rules onto
//! the simplex; the Jacobi weights absorb the collapse Jacobian, so a rule
//! requested for degree `d` integrates every polynomial of total degree
//! ≤ `d` exactly. All points are strictly interior.

use super::jacobi::gauss_jacobi;

/// Quadrature rule on the reference triangle
/// {(r, s) : r, s ≥ -1, r + s ≤ 0} (area 2).
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Quadrature rule on the reference tetrahedron
/// {(r, s, t) : r, s, t ≥ -1, r + s + t ≤ -1} (volume 4/3).
pub struct TetRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Rule exact for total degree ≤ `degree` on the reference triangle.
pub fn triangle_rule(degree: usize) -> TriangleRule {
    let n = points_for_degree(degree);
    let (xa, wa) = gauss_jacobi(0, 0, n);
    let (xb, wb) = gauss_jacobi(1, 0, n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&b, &vb) in xb.iter().zip(&wb) {
        for (&a, &va) in xa.iter().zip(&wa) {
            let r = (1.0 + a) * (1.0 - b) / 2.0 - 1.0;
            points.push([r, b]);
            weights.push(va * vb / 2.0);
        }
    }
    TriangleRule { points, weights }
}

/// Rule exact for total degree ≤ `degree` on the reference tetrahedron.
pub fn tet_rule(degree: usize) -> TetRule {
    let n = points_for_degree(degree);
    let (xa, wa) = gauss_jacobi(0, 0, n);
    let (xb, wb) = gauss_jacobi(1, 0, n);
    let (xc, wc) = gauss_jacobi(2, 0, n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (&c, &vc) in xc.iter().zip(&wc) {
        for (&b, &vb) in xb.iter().zip(&wb) {
            for (&a, &va) in xa.iter().zip(&wa) {
                let r = (1.0 + a) * (1.0 - b) * (1.0 - c) / 4.0 - 1.0;
                let s = (1.0 + b) * (1.0 - c) / 2.0 - 1.0;
                points.push([r, s, c]);
                weights.push(va * vb * vc / 8.0);
            }
        }
    }
    TetRule { points, weights }
}
