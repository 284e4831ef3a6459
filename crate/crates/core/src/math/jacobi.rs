//! Jacobi polynomials normalized to unit weighted L² norm, their
//! derivatives, and Gauss / Gauss-Lobatto rules on [-1, 1].
//!
//! Only integer weight exponents are needed here (the collapsed-coordinate
//! bases use weights (1-x)^a with small integer a), so the normalization
//! constants are evaluated with exact factorials.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gamma(n) for integer n >= 1, i.e. (n-1)!.
fn gamma_int(n: u32) -> f64 {
    (1..n).fold(1.0, |acc, k| acc * k as f64)
}

/// Total mass of the Jacobi weight: ∫_{-1}^{1} (1-x)^a (1+x)^b dx.
fn weight_mass(a: u32, b: u32) -> f64 {
    2f64.powi((a + b + 1) as i32) * gamma_int(a + 1) * gamma_int(b + 1) / gamma_int(a + b + 2)
}

/// Evaluate the degree-`n` Jacobi polynomial with weights `(a, b)`,
/// normalized so that ∫ (1-x)^a (1+x)^b P_n² dx = 1.
pub fn jacobi_p(x: f64, a: u32, b: u32, n: usize) -> f64 {
    let (af, bf) = (a as f64, b as f64);
    let p0 = 1.0 / weight_mass(a, b).sqrt();
    if n == 0 {
        return p0;
    }
    let p1 = p0
        * ((af + bf + 2.0) * x / 2.0 + (af - bf) / 2.0)
        * ((af + bf + 3.0) / ((af + 1.0) * (bf + 1.0))).sqrt();
    if n == 1 {
        return p1;
    }
    let mut aold = 2.0 / (2.0 + af + bf) * ((af + 1.0) * (bf + 1.0) / (af + bf + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + af + bf;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + af + bf) * (i + 1.0 + af) * (i + 1.0 + bf)
                / ((h1 + 1.0) * (h1 + 3.0)))
                .sqrt();
        let bnew = -(af * af - bf * bf) / (h1 * (h1 + 2.0));
        let pnew = (-aold * pm1 + (x - bnew) * p) / anew;
        pm1 = p;
        p = pnew;
        aold = anew;
    }
    p
}

/// Derivative of the normalized Jacobi polynomial:
/// d/dx P_n^{a,b} = sqrt(n (n + a + b + 1)) P_{n-1}^{a+1,b+1}.
pub fn grad_jacobi_p(x: f64, a: u32, b: u32, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + (a + b) as f64 + 1.0)).sqrt() * jacobi_p(x, a + 1, b + 1, n - 1)
}

/// Gauss-Jacobi rule with `n` points: exact for ∫ (1-x)^a (1+x)^b q(x) dx
/// with q of degree up to 2n - 1. Computed by the Golub-Welsch eigenvalue
/// method; nodes are returned in increasing order.
pub fn gauss_jacobi(a: u32, b: u32, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one point");
    let (af, bf) = (a as f64, b as f64);
    if n == 1 {
        return (vec![(bf - af) / (af + bf + 2.0)], vec![weight_mass(a, b)]);
    }
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n {
        let h1 = 2.0 * k as f64 + af + bf;
        if k == 0 && a == b {
            j[(0, 0)] = 0.0;
        } else {
            j[(k, k)] = -(af * af - bf * bf) / ((h1 + 2.0) * h1);
        }
        if k + 1 < n {
            let i = (k + 1) as f64;
            let off = 2.0 / (h1 + 2.0)
                * (i * (i + af + bf) * (i + af) * (i + bf) / ((h1 + 1.0) * (h1 + 3.0))).sqrt();
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mass = weight_mass(a, b);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0 * mass)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    pairs.into_iter().unzip()
}

/// Gauss-Lobatto-Legendre nodes (n + 1 points including the endpoints ±1),
/// in increasing order. Interior nodes are the Gauss points of the (1, 1)
/// Jacobi weight.
pub fn gauss_lobatto(n: usize) -> Vec<f64> {
    assert!(n >= 1, "Lobatto rule needs polynomial degree >= 1");
    let mut x = Vec::with_capacity(n + 1);
    x.push(-1.0);
    if n >= 2 {
        x.extend(gauss_jacobi(1, 1, n - 1).0);
    }
    x.push(1.0);
    x
}
