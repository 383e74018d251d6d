//! Quasi-maximum-likelihood estimation for conditionally heteroscedastic
//! time series of multiplicative form `X_t = sigma_t * Z_t`, where the
//! squared volatility follows a GARCH, asymmetric GARCH or exponential
//! GARCH recursion.
//!
//! Everything is organized around the stochastic-recurrence-equation view
//! of these models:
//!
//! * [`innovations`] — seeded i.i.d. noise generators with unit variance,
//!   plus the closed-form moments the diagnostics need;
//! * [`models`] — the volatility maps `g`, the admissible parameter
//!   region, and exact partial derivatives of `g`;
//! * [`sre`] — stationary simulation with burn-in certificates, Lyapunov
//!   exponents of the companion random-matrix products, spectral-radius
//!   and invertibility diagnostics;
//! * [`filter`] — the volatility filter driven by observed data together
//!   with its analytic first- and second-derivative recursions;
//! * [`likelihood`] — the Gaussian quasi-log-likelihood, score and
//!   Hessian assembled from filter output;
//! * [`qmle`] — box-constrained maximization, asymptotic covariance,
//!   standard errors and residuals;
//! * [`mc`] — a Monte-Carlo harness checking consistency, coverage,
//!   filter decay, stationarity regions and initialization equivalence
//!   at desk scale.
//!
//! Replication-style loops fan out over rayon when the `parallel` feature
//! (default) is enabled and run sequentially otherwise; results are
//! identical either way because every worker owns its own random stream.

pub mod csvio;
pub mod error;
pub mod exec;
pub mod filter;
pub mod innovations;
pub mod likelihood;
pub mod mc;
pub mod models;
pub mod qmle;
pub mod sre;

pub use error::{Error, Result};
