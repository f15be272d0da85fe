//! Nonlocal Fisher-KPP free-boundary problems in one space dimension.
//!
//! The density evolves by `u_t = d (∫_g^h J(x - y) u(y) dy - u) + f(t, x, u)`
//! on a moving support `(g(t), h(t))` whose ends advance with `μ` times the
//! kernel mass carried across them. The crate provides
//!
//! * dispersal kernels and their per-cell stencils ([`kernel`]),
//! * growth laws ([`growth`]),
//! * grids and the discrete nonlocal operator ([`discretization`]),
//! * explicit and Picard time stepping ([`fbsolver`]),
//! * principal eigenvalues and the critical length ([`spectral`]),
//! * fixed-interval evolution and steady states ([`fixed_domain`]),
//! * spreading/vanishing classification and threshold searches ([`classify`]).

pub mod classify;
pub mod discretization;
pub mod error;
pub mod expr;
pub mod fbsolver;
pub mod fixed_domain;
pub mod growth;
pub mod initial;
pub mod kernel;
pub mod spectral;

pub use discretization::{build_grid, Grid, SimState};
pub use error::{Error, Result, Side};
pub use growth::Growth;
pub use initial::InitialData;
pub use kernel::{Kernel, Stencil};
