//! Orthonormal polynomial bases on the reference triangle and tetrahedron,
//! built from Jacobi polynomials in collapsed coordinates.
//!
//! Values are well defined everywhere on the closed simplex (the collapsed
//! singularities are cancelled by the (1-b)^i / (1-c)^{i+j} factors);
//! gradients are evaluated with the plain chain rule and therefore only at
//! strictly interior points. Nodal differentiation matrices are derived
//! from the gradients by exact modal projection, which keeps boundary nodes
//! out of the singular formulas entirely.

use crate::math::jacobi::{grad_jacobi_p, jacobi_p};
use crate::math::quadrature::tet_rule;
#[cfg(test)]
use crate::math::quadrature::triangle_rule;
use nalgebra::DMatrix;

/// Number of polynomial basis functions of total degree ≤ p in 3D.
pub fn tet_space_dim(p: usize) -> usize {
    (p + 1) * (p + 2) * (p + 3) / 6
}

/// Number of polynomial basis functions of total degree ≤ p in 2D.
pub fn tri_space_dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Collapsed coordinates of a reference-triangle point.
fn tri_collapsed(r: f64, s: f64) -> (f64, f64) {
    let a = if (1.0 - s).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

/// Collapsed coordinates of a reference-tetrahedron point.
fn tet_collapsed(r: f64, s: f64, t: f64) -> (f64, f64, f64) {
    let a = if (s + t).abs() > 1e-14 {
        -2.0 * (1.0 + r) / (s + t) - 1.0
    } else {
        -1.0
    };
    let b = if (1.0 - t).abs() > 1e-14 {
        2.0 * (1.0 + s) / (1.0 - t) - 1.0
    } else {
        -1.0
    };
    (a, b, t)
}

fn tri_mode(a: f64, b: f64, i: usize, j: usize) -> f64 {
    2f64.sqrt()
        * jacobi_p(a, 0, 0, i)
        * jacobi_p(b, 2 * i as u32 + 1, 0, j)
        * (1.0 - b).powi(i as i32)
}

fn tet_mode(a: f64, b: f64, c: f64, i: usize, j: usize, k: usize) -> f64 {
    2.0 * 2f64.sqrt()
        * jacobi_p(a, 0, 0, i)
        * jacobi_p(b, 2 * i as u32 + 1, 0, j)
        * (1.0 - b).powi(i as i32)
        * jacobi_p(c, 2 * (i + j) as u32 + 2, 0, k)
        * (1.0 - c).powi((i + j) as i32)
}

/// Evaluate all triangle modes of degree ≤ p at the given points.
/// Row = point, column = mode; modes are ordered (i, j) with j fastest.
pub fn tri_modes_at(p: usize, points: &[[f64; 2]]) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(points.len(), tri_space_dim(p));
    for (row, pt) in points.iter().enumerate() {
        let (a, b) = tri_collapsed(pt[0], pt[1]);
        let mut col = 0;
        for i in 0..=p {
            for j in 0..=(p - i) {
                v[(row, col)] = tri_mode(a, b, i, j);
                col += 1;
            }
        }
    }
    v
}

/// Evaluate all tetrahedron modes of degree ≤ p at the given points.
/// Row = point, column = mode; modes are ordered (i, j, k) with k fastest.
pub fn tet_modes_at(p: usize, points: &[[f64; 3]]) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(points.len(), tet_space_dim(p));
    for (row, pt) in points.iter().enumerate() {
        let (a, b, c) = tet_collapsed(pt[0], pt[1], pt[2]);
        let mut col = 0;
        for i in 0..=p {
            for j in 0..=(p - i) {
                for k in 0..=(p - i - j) {
                    v[(row, col)] = tet_mode(a, b, c, i, j, k);
                    col += 1;
                }
            }
        }
    }
    v
}

/// Gradients of all tetrahedron modes at strictly interior points.
/// Returns [d/dr, d/ds, d/dt], each row = point, column = mode.
pub fn tet_mode_gradients_at(p: usize, points: &[[f64; 3]]) -> [DMatrix<f64>; 3] {
    let nm = tet_space_dim(p);
    let mut dr = DMatrix::zeros(points.len(), nm);
    let mut ds = DMatrix::zeros(points.len(), nm);
    let mut dt = DMatrix::zeros(points.len(), nm);
    for (row, pt) in points.iter().enumerate() {
        let (r, s, t) = (pt[0], pt[1], pt[2]);
        let q = -s - t;
        let w = 1.0 - t;
        debug_assert!(q > 1e-13 && w > 1e-13, "gradient point must be interior");
        let a = 2.0 * (1.0 + r) / q - 1.0;
        let b = 2.0 * (1.0 + s) / w - 1.0;
        let c = t;
        let (a_r, a_s, a_t) = (
            2.0 / q,
            2.0 * (1.0 + r) / (q * q),
            2.0 * (1.0 + r) / (q * q),
        );
        let (b_s, b_t) = (2.0 / w, 2.0 * (1.0 + s) / (w * w));
        let mut col = 0;
        for i in 0..=p {
            for j in 0..=(p - i) {
                for k in 0..=(p - i - j) {
                    let norm = 2.0 * 2f64.sqrt();
                    let fa = jacobi_p(a, 0, 0, i);
                    let dfa = grad_jacobi_p(a, 0, 0, i);
                    let gb = jacobi_p(b, 2 * i as u32 + 1, 0, j);
                    let dgb = grad_jacobi_p(b, 2 * i as u32 + 1, 0, j);
                    let hc = jacobi_p(c, 2 * (i + j) as u32 + 2, 0, k);
                    let dhc = grad_jacobi_p(c, 2 * (i + j) as u32 + 2, 0, k);
                    let pb = (1.0 - b).powi(i as i32);
                    let pc = (1.0 - c).powi((i + j) as i32);

                    let phi_a = norm * dfa * gb * pb * hc * pc;
                    let gb_full = dgb * pb
                        - if i > 0 {
                            i as f64 * (1.0 - b).powi(i as i32 - 1) * gb
                        } else {
                            0.0
                        };
                    let phi_b = norm * fa * gb_full * hc * pc;
                    let hc_full = dhc * pc
                        - if i + j > 0 {
                            (i + j) as f64 * (1.0 - c).powi((i + j) as i32 - 1) * hc
                        } else {
                            0.0
                        };
                    let phi_c = norm * fa * gb * pb * hc_full;

                    dr[(row, col)] = phi_a * a_r;
                    ds[(row, col)] = phi_a * a_s + phi_b * b_s;
                    dt[(row, col)] = phi_a * a_t + phi_b * b_t + phi_c;
                    col += 1;
                }
            }
        }
    }
    [dr, ds, dt]
}

/// Modal differentiation matrices: entry (n, m) is the coefficient of mode
/// n in the expansion of ∂ mode_m / ∂ x_d. Exact because the derivatives
/// stay inside the polynomial space and the projection uses a quadrature
/// rule of sufficient degree at interior points.
pub fn tet_modal_diff(p: usize) -> [DMatrix<f64>; 3] {
    let rule = tet_rule(2 * p.max(1));
    let vq = tet_modes_at(p, &rule.points);
    let grads = tet_mode_gradients_at(p, &rule.points);
    grads.map(|g| {
        let mut weighted = vq.clone();
        for (row, &w) in rule.weights.iter().enumerate() {
            for col in 0..weighted.ncols() {
                weighted[(row, col)] *= w;
            }
        }
        weighted.transpose() * g
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tet_modes_are_orthonormal() {
        for p in [1, 2, 4] {
            let rule = tet_rule(2 * p + 1);
            let v = tet_modes_at(p, &rule.points);
            let nm = tet_space_dim(p);
            for m in 0..nm {
                for n in 0..nm {
                    let dot: f64 = (0..rule.points.len())
                        .map(|q| rule.weights[q] * v[(q, m)] * v[(q, n)])
                        .sum();
                    let expect = if m == n { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12, "p={p} ({m},{n}): {dot}");
                }
            }
        }
    }

    #[test]
    fn tri_modes_are_orthonormal() {
        for p in [1, 3, 5] {
            let rule = triangle_rule(2 * p + 1);
            let v = tri_modes_at(p, &rule.points);
            let nm = tri_space_dim(p);
            for m in 0..nm {
                for n in 0..nm {
                    let dot: f64 = (0..rule.points.len())
                        .map(|q| rule.weights[q] * v[(q, m)] * v[(q, n)])
                        .sum();
                    let expect = if m == n { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12, "p={p} ({m},{n}): {dot}");
                }
            }
        }
    }

    #[test]
    fn first_mode_is_the_normalized_constant() {
        let v = tet_modes_at(2, &[[-0.5, -0.5, -0.5], [-1.0, -1.0, -1.0]]);
        let expect = (3f64).sqrt() / 2.0; // 1 / sqrt(reference volume 4/3)
        assert!((v[(0, 0)] - expect).abs() < 1e-14);
        assert!((v[(1, 0)] - expect).abs() < 1e-14);
        let v2 = tri_modes_at(3, &[[-0.2, -0.7]]);
        assert!((v2[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn values_are_continuous_up_to_the_singular_boundary() {
        // Approach the collapsed edge r = -1, s + t = 0 and the top vertex;
        // values from the formula at the boundary must match the limit.
        let p = 4;
        let boundary = [[-1.0, -0.3, 0.3], [-1.0, -1.0, 1.0]];
        for bp in boundary {
            let vb = tet_modes_at(p, &[bp]);
            let eps = 1e-8;
            let inside = [bp[0] + eps, bp[1] - 2.0 * eps, bp[2] - 2.0 * eps];
            let vi = tet_modes_at(p, &[inside]);
            for m in 0..tet_space_dim(p) {
                assert!(
                    (vb[(0, m)] - vi[(0, m)]).abs() < 1e-5 * (1.0 + vb[(0, m)].abs()),
                    "mode {m} at {bp:?}: {} vs {}",
                    vb[(0, m)],
                    vi[(0, m)]
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = 3;
        let pts = [[-0.42, -0.37, -0.51], [-0.8, -0.1, -0.3]];
        let grads = tet_mode_gradients_at(p, &pts);
        let h = 1e-6;
        for (row, pt) in pts.iter().enumerate() {
            for d in 0..3 {
                let mut lo = *pt;
                let mut hi = *pt;
                lo[d] -= h;
                hi[d] += h;
                let vlo = tet_modes_at(p, &[lo]);
                let vhi = tet_modes_at(p, &[hi]);
                for m in 0..tet_space_dim(p) {
                    let fd = (vhi[(0, m)] - vlo[(0, m)]) / (2.0 * h);
                    let an = grads[d][(row, m)];
                    assert!(
                        (fd - an).abs() < 1e-5 * (1.0 + an.abs()),
                        "mode {m} dir {d}: {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn modal_differentiation_reproduces_polynomial_derivatives() {
        // d/dr of mode expansions, checked against finite differences of the
        // reconstructed polynomial at interior points.
        let p = 3;
        let diff = tet_modal_diff(p);
        let pts = [[-0.3, -0.45, -0.6]];
        let v = tet_modes_at(p, &pts);
        let grads = tet_mode_gradients_at(p, &pts);
        let nm = tet_space_dim(p);
        for d in 0..3 {
            for m in 0..nm {
                // Derivative of mode m via the modal matrix...
                let via_matrix: f64 = (0..nm).map(|n| v[(0, n)] * diff[d][(n, m)]).sum();
                // ...must equal the direct chain-rule gradient.
                let direct = grads[d][(0, m)];
                assert!(
                    (via_matrix - direct).abs() < 1e-10,
                    "dir {d} mode {m}: {via_matrix} vs {direct}"
                );
            }
        }
    }
}
