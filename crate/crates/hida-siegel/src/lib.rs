//! Exact arithmetic for the computable core of non-cuspidal Hida theory for
//! Siegel modular forms.
//!
//! * [`symmat`] — half-integral symmetric Fourier indices.
//! * [`cosets`] — boundary double cosets of the Igusa tower and the flat-orbit count.
//! * [`qexp`] — truncated q-expansions mod `p^m`, the `U_p` operators, stratum predicates
//!   and the ordinary projector.
//! * [`lseries`] — cyclotomic numbers, Dirichlet characters, Bernoulli numbers,
//!   L-values at nonpositive integers and Gauss sums.
//! * [`euler`] — Satake data, `U_p` eigenvalues, modified Euler factors and trivial zeros.
//! * [`family`] — p-adic numbers and truncated power series, `log_p`, ℓ-invariants.
//! * [`eisenstein`] — Siegel Eisenstein Fourier coefficients and their pullback.

pub mod intlin;
pub mod symmat;
pub mod lseries;
pub mod cosets;
pub mod qexp;
pub mod euler;
pub mod family;
pub mod eisenstein;
