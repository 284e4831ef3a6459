//! Shared numerical kernels: Jacobi polynomials, Gauss-type quadrature on
//! simplices, dense complex LU factorization, and small 3-vector helpers.

pub mod jacobi;
pub mod lu;
pub mod quadrature;
pub mod rmat;
pub mod vec3;

pub use lu::ComplexLu;
pub use rmat::RealMat;
