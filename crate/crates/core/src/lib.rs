//! Active sequential hypothesis testing (ASHT) with switching costs, applied
//! to the oddball visual-search model.
//!
//! The crate is organised bottom-up:
//!
//! - [`poisson`]: vector Poisson observation model, log-likelihood ratios and
//!   the closed-form divergences (KL rate, Chernoff rate, L¹ index).
//! - [`maximin`]: the best guarding mixed action `λ_i` and its rate `D_i`,
//!   solved exactly by linear programming and in closed form for the two
//!   visual-search settings, plus the normalised index `D̃`.
//! - [`engine`]: the sequential controlled-sensing simulator (Procedure A,
//!   Sluggish Procedure A, ε-uniform variant) and Monte Carlo campaigns.
//! - [`estimator`]: near-unbiased estimation of Poisson relative-entropy rates
//!   from empirical counts.
//! - [`stats`]: correlation and equality-of-means statistics used to rank
//!   dissimilarity indices.
//! - [`io`]: CSV ingestion and emission for rate vectors and decision times.

pub mod engine;
pub mod error;
pub mod estimator;
pub mod io;
pub mod maximin;
pub mod poisson;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
