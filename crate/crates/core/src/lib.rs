//! Certificates and semidefinite bounds for polynomial minimization on the
//! hypercube `[-1, 1]^n`.
//!
//! - [`poly`]: sparse polynomials in the monomial and Chebyshev bases.
//! - [`jackson`]: Jackson kernel coefficients and coefficientwise smoothing.
//! - [`certificates`]: explicit pre-ordering certificates for `1 ± T_α` and
//!   `‖p‖₁,T − p`, plus an expansion verifier.
//! - [`kernel_lift`]: the doubled-variable lift `p ↦ K_p` and its action on
//!   certificates.
//! - [`sdp`]: a dense primal-dual interior-point solver for block-diagonal SDPs.
//! - [`sos`]: compilers for the pre-ordering lower bounds, the kernel bound
//!   `Θ^r_{n,d}` and the 1-norm SOS distance `ρ_d`.

pub mod certificates;
pub mod jackson;
pub mod kernel_lift;
pub mod poly;
pub mod sdp;
pub mod sos;

pub use poly::{Basis, MultiIndex, Poly, PolyError};
