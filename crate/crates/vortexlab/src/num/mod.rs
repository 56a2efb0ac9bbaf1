//! Numerical building blocks shared by the physics modules.

pub mod cheb;
mod dop853_tableau;
pub mod fit;
pub mod gauss;
pub mod mesh;
pub mod ode;
pub mod quad;
pub mod roots;
