//! Spectral density of half-line Schrödinger operators with a periodic
//! background plus a slowly decaying oscillatory (Wigner–von Neumann) tail
//! `c sin(2ωx+δ)/x^γ`, `γ ∈ (1/2, 1)`.
//!
//! Inside every spectral band of the periodic problem there are two critical
//! energies where the oscillatory tail resonates with the Bloch phase. At
//! such a point the spectral density develops an exponential zero
//! (a pseudogap):
//!
//! ```text
//! ρ'(λ) ≍ exp( -2 c_cr / |λ - ν_cr|^{(1-γ)/γ} ),   λ → ν_cr.
//! ```
//!
//! The crate cross-checks this law along three independent routes:
//!
//! * direct integration of the eigenfunction equation and the
//!   Titchmarsh–Weyl formula ρ' = 1/(2π|W||A|²) ([`spectral`]),
//! * simulation of the reduced 2×2 model system with an x^{-γ} rotation
//!   carrier ([`model`]),
//! * closed-form constants: WKB exponent, c_cr, C_mp, a_cr ([`asymptotic`]).
//!
//! [`floquet`] supplies the periodic (Bloch/monodromy) machinery, [`critical`]
//! locates the resonance points, and [`numkit`] holds the shared numerical
//! substrate (adaptive RK5(4), adaptive and principal-value quadrature,
//! Airy/log-gamma, oscillatory tail limits).

pub mod asymptotic;
pub mod cli;
pub mod critical;
pub mod error;
pub mod floquet;
pub mod model;
pub mod numkit;
pub mod spectral;

pub use error::{Error, Result};
