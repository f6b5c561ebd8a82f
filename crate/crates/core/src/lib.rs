//! Spectral Dirichlet series on closed Riemannian manifolds and the length of
//! maps between them.
//!
//! The crate covers three manifold models: round circles, flat tori `R^d / L`
//! and finite discrete Laplacians. For each it computes the zeta family
//! `zeta_{X,a}(s) = tr(a Δ^{-s})` indexed by test functions `a`, the
//! two-variable family `tr(a1 [Δ, a2] Δ^{-s})`, and from those the length
//! `ℓ(φ) ∈ [0, 1]` of a diffeomorphism and the induced zeta-distance between
//! tori.
//!
//! Data-parallel loops (lattice enumeration, mode searches, candidate sweeps)
//! run on rayon when the `parallel` feature is enabled, and sequentially
//! otherwise. Results are identical in both modes.

pub mod dirichlet;
pub mod error;
pub mod heat;
pub mod lattice;
pub mod length;
pub mod manifolds;
pub mod maps;
mod par;
pub mod quad;
pub mod specfun;
pub mod testfn;

pub use error::{Error, Result};
pub use nalgebra;
pub use lattice::{Lattice, NormSpectrum, Spectrum};
pub use manifolds::{CircleManifold, DiscreteManifold, FlatTorus};
