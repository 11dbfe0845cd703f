//! Numerical laboratory for the stochastic heat equation
//!
//! ∂u/∂t − ½Δu = b(u)Ẇ on R^d, with Ẇ Gaussian, white in time and
//! spatially homogeneous with correlation f and spectral measure f̂.
//!
//! The crate has two halves:
//!
//! * an analytic half ([`kernels`], [`conditions`], [`weights`],
//!   [`heatinit`]) that evaluates the spectral integrals Υ_α(β) and
//!   H_α(t), their closed forms and small-time asymptotics, the
//!   Lipschitz/existence windows, admissible weight functions and the
//!   weighted functional G_ρ(t;μ);
//! * a Monte Carlo half ([`noise`], [`solver`], [`moments`],
//!   [`invariant`]) that simulates the mild equation on a periodic
//!   lattice with a pseudospectral exponential Euler scheme and runs
//!   moment-boundedness and Krylov–Bogoliubov averaging diagnostics.
//!
//! Fourier convention: f̂(ξ) = ∫ e^{−i x·ξ} f(x) dx, inverse carries
//! (2π)^{−d}. All spectral densities are stored in this convention.

pub mod quad;
pub mod specfun;
pub mod kernels;
pub mod conditions;
pub mod weights;
pub mod heatinit;
pub mod grid;
pub mod fft;
pub mod rng;
pub mod noise;
pub mod solver;
pub mod moments;
pub mod invariant;
mod guide;

pub use grid::LatticeGrid;
pub use kernels::SpectralModel;
pub use weights::Weight;
pub use heatinit::InitialDatum;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
