//! One-shot hyperspectral band selection.
//!
//! Band choice is relaxed into soft per-band gates trained jointly with a
//! small recovery model by alternating gradient descent. A greedy pass that
//! suppresses bands correlated with earlier picks then reads off a selection
//! of any size from the same learned priorities.
//!
//! Module map:
//!
//! * [`hypercube`]: cubes, file I/O, splits, synthetic data
//! * [`metrics`]: MRAE, RMSE, PSNR, per-band PSNR
//! * [`correlation`]: band-wise cosine similarity
//! * [`recovery`]: recovery models with analytic gradients
//! * [`relax_search`]: gates and the bilevel search loop
//! * [`select`]: greedy post-processing and baseline selections
//! * [`oracle`]: exhaustive least-squares reference
//! * [`eval`]: training/evaluation harness
//! * [`cli`]: the `bandsel` command line

pub mod cli;
pub mod correlation;
pub mod error;
pub mod eval;
pub mod hypercube;
pub mod metrics;
pub mod oracle;
pub mod recovery;
pub mod relax_search;
pub mod select;

pub use error::{Error, Result};
