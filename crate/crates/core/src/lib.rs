//! Evolutive discrete p-Laplacian on infinite weighted graphs.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: neighbor-oracle graphs (`Z^N`, `H x Z^N`, custom), balls,
//!   distances, cutoffs.
//! * [`field`]: finitely supported vertex functions and their weighted norms.
//! * [`plaplacian`]: the operator, Dirichlet energies and the pointwise
//!   identities used to derive the estimates.
//! * [`faberkrahn`]: Faber-Krahn profiles, Dirichlet p-eigenvalues and the
//!   `psi_r` scaling functions.
//! * [`solver`]: the truncated-ball scheme for the Cauchy problem.
//! * [`estimates`]: bound-ratio series and exponent fits for the decay,
//!   propagation, moment and slow-decay estimates.
//! * [`config`] and [`experiment`]: JSON experiment configs and batch runs.

pub mod config;
pub mod estimates;
pub mod experiment;
pub mod faberkrahn;
pub mod field;
pub mod graph;
pub mod plaplacian;
pub mod solver;

pub use field::Field;
pub use graph::{GraphGenerator, Region, VertexId};
