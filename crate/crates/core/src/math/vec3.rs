//! Cartesian 3-vector operations on real geometry vectors and complex
//! field triples.

use num_complex::Complex64;

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// n × v for a real unit normal and a complex field triple.
pub fn cross_nc(n: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    [
        n[1] * v[2] - n[2] * v[1],
        n[2] * v[0] - n[0] * v[2],
        n[0] * v[1] - n[1] * v[0],
    ]
}

/// Tangential part -n × (n × v) = v - n (n·v) for a real unit normal.
/// The contraction n·v is bilinear (no conjugation): the projector acts
/// componentwise on real and imaginary parts.
pub fn tangential(n: [f64; 3], v: [Complex64; 3]) -> [Complex64; 3] {
    let nv = n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
    [v[0] - n[0] * nv, v[1] - n[1] * nv, v[2] - n[2] * nv]
}
