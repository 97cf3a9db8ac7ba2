// `!(x > 0.0)` is used as a NaN-rejecting guard throughout; the suggested
// rewrite `x <= 0.0` would silently accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// numerical kernels index several parallel arrays with one loop variable;
// iterator-zip rewrites obscure the stencil structure
#![allow(clippy::needless_range_loop)]

//! Stochastic Galerkin solvers for traffic flow models across scales.
//!
//! The crate propagates initial-data uncertainty through microscopic
//! (follow-the-leader ODEs), mesoscopic (BGK kinetic) and macroscopic
//! (LWR / ARZ conservation laws) traffic models. All stochastic quantities
//! are represented by truncated generalized polynomial chaos expansions and
//! evolved intrusively: the governing equations are projected onto the basis
//! span, yielding deterministic coupled systems for the coefficients.
//!
//! Module map:
//! - [`chaos`] — basis construction, quadrature, Galerkin algebra and the
//!   hyperbolicity certificate.
//! - [`micro`] — stochastic follow-the-leader dynamics (first and second
//!   order) plus local-density reconstruction.
//! - [`kinetic`] — stochastic Galerkin BGK solver with relaxation toward a
//!   projected equilibrium.
//! - [`macroscale`] — finite-volume solvers for the SG-LWR and SG-ARZ
//!   systems with local Lax-Friedrichs fluxes.
//! - [`analysis`] — moment post-processing and the stochastic
//!   fundamental-diagram scan.
//! - [`mc`] — non-intrusive Monte Carlo reference solver.
//! - [`config`] — experiment configuration parsing.
//! - [`experiments`] — cross-scale convergence experiments.

pub mod analysis;
pub mod chaos;
pub mod config;
pub mod error;
pub mod experiments;
pub mod kinetic;
pub mod macroscale;
pub mod mc;
pub mod micro;
pub mod reference;

pub use chaos::{Basis, BasisFamily, BasisSpec, GalerkinVector, TripleProductTensor};
pub use error::SgError;
