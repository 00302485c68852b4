//! Numerical building blocks: adaptive quadrature, embedded Runge–Kutta
//! integration and bracketing root search.

pub mod ode;
pub mod quad;
pub mod roots;
