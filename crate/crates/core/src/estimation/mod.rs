//! Statistical layer: likelihood fits of `(α, β)`, Kolmogorov-Smirnov
//! distances, decay-timescale extraction and the corrected XEB estimator.

mod decay;
mod ks;
mod mle;
mod xeb;

pub use decay::{collapse_coordinate, fit_decay_pooled, fit_decay_timescale, fit_kappa, DecayFit, DecayPoint, FitWindow, PooledDecayFit};
pub use ks::{ks_statistic, ks_statistic_brute_force, ks_two_sample};
pub use mle::{bootstrap_std_errors, mle_fit, mle_fit_with, FitMode, FitOptions, FitResult, StdErrorMethod};
pub use xeb::{run_xeb, xeb_fidelity, XebConfig, XebReport, XebSamples};

/// Version tag carried by every serialized estimation result.
pub const SCHEMA_VERSION: u32 = 1;
