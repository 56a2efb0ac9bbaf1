//! Construction of unstable vortex profiles and computation of the spectral
//! objects of their linearized Euler dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod cli;
pub mod evolve;
pub mod fields;
pub mod io;
pub mod num;
pub mod profile;
pub mod rayleigh;
pub mod sampled;
pub mod specmat;
pub mod sturm;

pub use num_complex::Complex64;
pub use profile::{CriticalPoint, Profile, ProfileParams};
