//! Shared numerical substrate: adaptive ODE integration, adaptive and
//! principal-value quadrature, special functions, and oscillatory-tail
//! limit extraction.
//!
//! Everything here is pure and reentrant; no shared mutable state.

pub mod ode;
pub mod quad;
pub mod special;
pub mod tail;

pub use ode::{integrate_ivp, integrate_observed, rk4_uniform, OdeOptions, Trajectory};
pub use quad::{quad_adaptive, quad_pv, UpperLimit};
pub use special::{airy_pair, beta_fn, log_gamma};
pub use tail::{tail_limit, tail_limit_real, LimitEstimate};
