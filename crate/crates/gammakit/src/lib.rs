//! Computable operator theory on the symmetrized polydisc Γ_n.
//!
//! Γ_n is the image of the closed unit polydisc under the symmetrization map
//! sending (z_1,…,z_n) to its elementary symmetric functions (s_1,…,s_n).
//! This crate makes the associated operator theory executable at desk scale:
//!
//! - geometry of Γ_n: membership, distinguished-boundary tests along three
//!   independent routes, fibers, the projection and embedding maps, samplers
//!   ([`gamma`]);
//! - symmetric-polynomial calculus, including reduction of a symmetric
//!   polynomial to a polynomial in the elementary symmetric functions
//!   ([`poly`]);
//! - finite-dimensional commuting-tuple linear algebra: joint spectra of
//!   commuting normal tuples, symmetrization, compressions ([`operators`]);
//! - decision procedures: von Neumann–inequality falsification over Γ_n,
//!   Γ_n-unitary/-isometry/-co-isometry classification, recovery of
//!   generating unitaries ([`classify`]);
//! - the Toeplitz-symbol model of pure Γ_n-isometries on vector Hardy space,
//!   truncations, the degree-zero invariant, and Wold decomposition
//!   ([`hardy`]);
//! - Beurling–Lax–Halmos invariant-subspace verification and unitary
//!   equivalence of symbol tuples ([`blh`]).
//!
//! All numerical verdicts are tolerance-based and carry a defect (a
//! distance-to-satisfaction surrogate) plus an optional certificate, so that
//! failures are always witnessed.

extern crate openblas_src;

pub mod blh;
pub mod classify;
pub mod error;
pub mod gamma;
pub mod hardy;
pub(crate) mod linalg;
pub mod operators;
pub mod poly;
pub mod verdict;

pub use blh::{innerness_defect, intertwine_solve, invariant_subspace_verdict, unitary_equiv, EquivResult, InnerSymbol};
pub use classify::{
    contraction_verdict, is_gamma_coisometry, is_gamma_isometry, is_gamma_unitary,
    product_unitary_promotion, sup_on_gamma, unitary_generators, vn_margin, Budget, SupResult,
};
pub use error::Error;
pub use gamma::{boundary_from_mu, sample, BoundaryRoute, GammaPoint, UniPoly};
pub use hardy::{
    build_pure_isometry, check_symbol_conditions, fundamental_invariant, make_direct_sum,
    truncate, wold_decompose, wold_decompose_matrix, MatrixSymbol, ModelTuple, StructuredTuple,
    SymbolTuple,
};
pub use operators::{
    commutation_defect, compress, invariant_defect, is_normal_tuple, joint_diagonalize,
    joint_spectrum, symmetrize_tuple, CMatrix, MatrixTuple,
};
pub use poly::{elem_sym, CPoint, MultiPoly};
pub use verdict::{Certificate, Verdict};

/// Numerical helpers re-exported for integration tests and downstream
/// experiment harnesses; not part of the stable API surface.
#[doc(hidden)]
pub mod test_support {
    pub use crate::linalg::{haar_unitary, spectral_norm};
}

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Default numerical tolerances. Every decision procedure takes an explicit
/// tolerance; these are the documented defaults.
pub mod defaults {
    /// Coefficientwise tolerance for symmetry tests and reduction residuals.
    pub const COEFF_TOL: f64 = 1e-10;
    /// Tolerance on `|root| - 1` for membership in Γ_n.
    pub const MEMBERSHIP_TOL: f64 = 1e-9;
    /// Tolerance for spectral-norm identities (unitarity, isometry relations).
    pub const SPECTRAL_TOL: f64 = 1e-9;
    /// Relative tolerance for commutation defects.
    pub const COMMUTE_TOL: f64 = 1e-8;
    /// Tolerance on von Neumann margins in `contraction_verdict`; dominated
    /// by the accuracy of the refined torus-grid sup, not by arithmetic.
    pub const MARGIN_TOL: f64 = 1e-7;
    /// Eigenvalue clusters closer than this are treated as one block during
    /// joint diagonalization.
    pub const CLUSTER_SPLIT: f64 = 1e-7;
    /// Default grid resolution (points per angle) for torus suprema.
    pub const GRID: usize = 64;
    /// Default number of refinement sweeps for torus suprema.
    pub const REFINE_ITERS: usize = 48;
}
