//! Faber-Krahn profiles, Dirichlet p-eigenvalues and the `psi_r` scaling
//! functions.

mod bruteforce;
mod checks;
mod eigen;
mod profile;

use thiserror::Error;

use crate::graph::GraphError;
use crate::plaplacian::PLaplacianError;

pub use bruteforce::{connected_subsets, fk_profile_bruteforce, BruteforceTable, SubsetEigen, MAX_SIZE_CAP};
pub use checks::{
    ball_gamma_check, ball_radius_inverse, check_assumptions, dcf_monotonicity_check, log_grid,
    lp_linf_bound, AssumptionCheck, AssumptionReport, BallGammaReport, BallGammaSample,
    MonotoneReport, ASSUMPTION_ROUNDOFF,
};
pub use eigen::{dirichlet_p_eigenvalue, rayleigh_quotient, EigenOptions, EigenResult, EigenStatus};
pub use profile::{ClosedFormJson, FkProfile, ProfileSource};

#[derive(Debug, Error)]
pub enum FkError {
    #[error("exponent p must exceed 2, got {0}")]
    Exponent(f64),
    #[error("profile: {0}")]
    Profile(String),
    #[error("psi inverse: value {0} outside the attainable range")]
    PsiRange(f64),
    #[error("eigenvalue descent did not converge (best {best} after {iterations} iterations)")]
    NoConvergence { best: f64, iterations: usize },
    #[error("zero field has no Rayleigh quotient")]
    ZeroField,
    #[error("empty region")]
    EmptyRegion,
    #[error("size cap {0} outside 1..={max}", max = MAX_SIZE_CAP)]
    SizeCap(usize),
    #[error("grid needs at least {min} points, got {got}")]
    Grid { min: usize, got: usize },
    #[error("ball measure saturates at {0} below the requested value")]
    Saturated(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    PLaplacian(#[from] PLaplacianError),
}

/// Lattice profile `c0 v^{-p/N}`.
pub fn fk_lattice(dim: usize, p: f64, c0: f64) -> Result<FkProfile, FkError> {
    FkProfile::lattice(dim, p, c0)
}
