//! Numerics for correlations of dichotomic (±1-valued) functions.
//!
//! - [`dichotomic`]: exact correlation of periodic ±1 step functions, its
//!   impulse-train derivative and its distance from `−cos`.
//! - [`lhv`]: local hidden-variable models, quadrature and Monte Carlo
//!   correlations, CHSH.
//! - [`multiparty`]: product means of multi-party outcome arrays and GF(2)
//!   parity systems such as the GHZ contradiction.
//! - [`optical`]: polarization coincidence probabilities and classical
//!   Malus-law click simulations.
//! - [`cli`]: the JSON-configured experiment runner behind `dichobell`.

pub mod cli;
pub mod dichotomic;
pub mod lhv;
pub mod montecarlo;
pub mod multiparty;
pub mod optical;
pub mod quadrature;
pub mod sign;

pub use montecarlo::Estimate;
pub use sign::Sign;
