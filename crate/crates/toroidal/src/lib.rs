//! Numerical construction of embedded tori with prescribed mean curvature
//! `H(X) = 1 + A|X|^(-γ)`, obtained by bending `n` periods of a Delaunay
//! unduloid into a ring and correcting the result by a normal graph.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`elliptic`]: complete elliptic integrals and the unduloid period/height.
//! - [`profile`]: conformal unduloid profile, Jacobi kernel seeds, weighted norms.
//! - [`geometry`]: analytic surface jets, fundamental forms, curvatures.
//! - [`jacobi`]: the limit Jacobi operator, its kernel and the projected inverse.
//! - [`reduction`]: the Lyapunov–Schmidt fixed point and its multipliers.
//! - [`matching`]: energies and the neck-size matching `λ⁰(a_n) = 0`.
//! - [`embedcert`]: embeddedness certificate for the corrected torus.
//!
//! The low-level numerics ([`elliptic`], [`ode`], [`profile`], [`geometry`])
//! are generic over [`Real`]; the solver layers run in `f64`. Concrete
//! aliases for the common `f64` instantiations live at the crate root.

pub mod elliptic;
pub mod embedcert;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jacobi;
pub mod jet;
pub mod linalg;
pub mod matching;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod real;
pub mod reduction;
pub mod stencil;

pub use error::{Error, Result};
pub use real::Real;

pub type NeckSize = elliptic::NeckSize<f64>;
pub type Modulus = elliptic::Modulus<f64>;
pub type ProfileTable = profile::ProfileTable<f64>;
pub type SymField = field::SymField<f64>;
pub type SurfaceJet = geometry::SurfaceJet<f64>;
pub type TorusGrid = geometry::TorusGrid<f64>;
pub type WeightedNormSpec = profile::WeightedNormSpec<f64>;
