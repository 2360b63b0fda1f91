//! Cylinder measures for a real scalar field on the torus `T^d`.
//!
//! The crate covers the whole numerical pipeline:
//!
//! * [`modes`]: momentum-shell coordinates, projections, field evaluation and
//!   block averages.
//! * [`free`]: the free Gaussian measure, exact moments and an Isserlis
//!   contraction oracle.
//! * [`ensemble`]: weighted sample sets at a top cutoff, with a binary on-disk
//!   layout.
//! * [`ce`]: conditional expectations, in Gaussian closed form and as weighted
//!   least-squares projections with jackknife errors.
//! * [`appell`]: Wick/Appell densities, the one-step renormalization map and
//!   the martingale check.
//! * [`alpha`]: the tail-series construction of quartic densities for
//!   asymptotically free measures.
//! * [`toy`]: dependent-increment test measures and mixing coefficients.
//! * [`flow`]: the fixed-cutoff measure flow in the coupling constant.

#![allow(clippy::needless_range_loop)]

pub mod alpha;
pub mod appell;
pub mod ce;
pub mod ensemble;
pub mod error;
pub mod flow;
pub mod free;
pub mod jackknife;
pub mod modes;
pub mod poly;
pub mod toy;

pub use alpha::{AlphaSeries, FailedLimitProbe, SeriesTruncation};
pub use appell::{PolynomialDensity, Perturbation, Slot};
pub use ce::{CEEstimate, PolynomialObservable};
pub use ensemble::Ensemble;
pub use error::{Error, Result};
pub use flow::{FlowState, Integrator, Refresh};
pub use free::{FreeMeasureSpec, MomentTable};
pub use modes::{BlockPartition, FieldConfig, ModeIndex, ModeSet, TorusGrid};
pub use poly::Poly;
pub use toy::MixingEstimate;

/// Minimum effective sample size accepted by every Monte Carlo estimator.
pub const MIN_ESS: f64 = 100.0;

/// Number of jackknife blocks used for all Monte Carlo error bars.
pub const JACKKNIFE_BLOCKS: usize = 20;
