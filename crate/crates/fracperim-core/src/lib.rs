//! Numerics for fractional smoothness in Gauss space.
//!
//! This crate implements a self-contained toolkit for working with the
//! Ornstein–Uhlenbeck operator `Δ_γ = Δ − ⟨y, ∇⟩` on `R^d` equipped with the
//! standard Gaussian measure `γ`, its fractional powers `(−Δ_γ)^s` for
//! `s ∈ (0, 1)`, and the associated fractional seminorms, perimeters and
//! symmetrisation tools:
//!
//! * [`gauss`] — Gauss–Hermite quadrature rules (probabilists' convention,
//!   weights normalised against `γ`), tensor-product grids on `R^d`, grid
//!   functions, and cylindrical (conditional-expectation) projections.
//! * [`special`] — the special functions everything else leans on: `Γ`,
//!   `erf`/`erfc`, the standard normal CDF and quantile, and modified Bessel
//!   functions `K_s` of fractional order.
//! * [`spectral`] — Hermite expansions: forward/inverse transforms between
//!   grid values and coefficients, the OU semigroup, spectral and
//!   singular-integral constructions of `(−Δ_γ)^s`, and the fractional
//!   seminorm `[u]² = d_s · Σ |α|^s a_α²`.
//! * [`extension`] — the degenerate-elliptic extension problem in the upper
//!   half space with weight `y^{1−2s}`: Bessel-type mode profiles, graded
//!   grids in the extension variable, energy functionals, a conjugate-gradient
//!   minimiser, and the weighted trace flux that recovers `d_s (−Δ_γ)^s u`.
//! * [`ehrhard`] — Ehrhard-type rearrangements on grids: one-dimensional
//!   half-line rearrangement, directional (line-wise) symmetrisation, global
//!   decreasing rearrangement, grid rotations, and an iterative
//!   symmetrisation flow with diagnostics.
//! * [`variational`] — set-level functionality: Gaussian mass and fractional
//!   perimeter of concrete set families (half-spaces, strips, balls,
//!   quadrants, perturbed half-spaces), a coarea-type total variation,
//!   isoperimetric scans, and a fractional Allen–Cahn minimiser.
//!
//! # Conventions
//!
//! Hermite polynomials are probabilists' (`He_{n+1}(x) = x·He_n(x) − n·He_{n−1}(x)`),
//! used in orthonormal form `h_n = He_n/√(n!)` so that `∫ h_n h_m dγ = δ_{nm}`.
//! Multi-indexed products `h_α(x) = Π h_{α_i}(x_i)` are eigenfunctions of
//! `−Δ_γ` with eigenvalue `|α| = α_1 + … + α_d`. All quadrature weights sum
//! to one: integrals computed here are integrals against the Gaussian
//! probability measure, never against Lebesgue measure.
//!
//! The trace normalisation constant is `d_s = 2^{1−2s} Γ(1−s)/Γ(s)`, chosen
//! so that the weighted extension energy of a unit eigenfunction with
//! eigenvalue `λ` equals `d_s λ^s`, and `d_{1/2} = 1`.
//!
//! # `no_std`
//!
//! The crate is `no_std`-compatible (with `alloc`): disable the default
//! `std` feature to use it in embedded or kernel-side contexts. Float math
//! is routed through `num_traits::Float` with the `libm` backend in that
//! configuration.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod ehrhard;
mod error;
pub mod extension;
pub mod gauss;
pub mod special;
pub mod spectral;
pub mod variational;

pub use error::Error;

/// Crate-wide `Result` alias.
pub type Result<T> = core::result::Result<T, Error>;
