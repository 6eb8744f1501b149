pub mod fourier;
pub mod linalg;
pub mod ode;
pub mod quadrature;
