//! Exact arithmetic over `F_s((X^{-1}))` and experiments on lattice dynamics,
//! Diophantine approximation, cusp volumes and the Bruhat–Tits tree.

pub mod daniflow;
pub mod dioph;
pub mod ffield;
pub mod lattice;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod treegeo;
pub mod weylvol;

pub use scalar::{Rational, Scalar};

pub type Psi = daniflow::PsiFunction<f64>;
pub type Rate = daniflow::RateFunction<f64>;
