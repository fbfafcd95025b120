//! Design and analysis of dispersive qubit readout with a
//! photon-number-resolving detector.
//!
//! A qubit dispersively coupled to a driven cavity pulls the cavity
//! resonance up or down by `gλ` depending on its state. Counting the
//! photons transmitted through the cavity discriminates the two states.
//! This crate evaluates the resulting Poissonian photocount statistics
//! and solves the associated design problems:
//!
//! - [`statistics`] — mean counts in both dimensionless parametrizations,
//!   SNR, threshold count, exact / on-off / Gaussian fidelity;
//! - [`snr_opt`] — the drive detuning maximizing SNR at fixed pull, its
//!   asymptotic approximations, and the global (Δ, K) optimum;
//! - [`fidelity_opt`] — the detuning maximizing exact fidelity, its
//!   bounds, threshold-jump localization, and the joint (Δ, K) optimum;
//! - [`physical`] — conversion between laboratory parameters and the
//!   dimensionless groups, validity-regime checks, and measurement-time
//!   estimation;
//! - [`montecarlo`] — a seeded stochastic oracle that validates the
//!   analytic fidelity formulas by direct sampling;
//! - [`special`] — the incomplete-gamma / error-function machinery the
//!   fidelity formulas are built on.
//!
//! The crate is `no_std` (with `alloc`); all floating-point
//! transcendentals go through [`libm`] so results are bit-identical
//! across targets.

#![no_std]

extern crate alloc;

use core::fmt;

pub mod fidelity_opt;
pub mod montecarlo;
pub mod physical;
pub mod roots;
pub mod snr_opt;
pub mod special;
pub mod statistics;

pub use fidelity_opt::{
    fidelity_detuning_bounds, fidelity_joint_optimum, fidelity_jump_times,
    fidelity_optimal_detuning, stationary_point_is_maximum, Branch, FidelityOptimum, JumpEvent,
    JumpKind,
};
pub use montecarlo::{simulate_fidelity, simulate_sequential, CounterRng, McResult};
pub use physical::{
    check_regime, estimate_measurement_time, to_dimensionless, PhysicalSetup, RegimeReport,
    TimeEstimate, Verdict,
};
pub use snr_opt::{
    snr_detuning_large_x_approx, snr_detuning_small_x_approx, snr_global_optimum,
    snr_optimal_detuning, LargeXDetuning, SnrGlobalOptimum, SnrMethod, SnrOptimum,
};
pub use special::{erf, poisson_logpmf, regularized_gamma_q, upper_incomplete_gamma_int, LogProb};
pub use statistics::{
    fidelity, fidelity_gaussian, fidelity_gaussian_snr, fidelity_on_off, fidelity_with_threshold,
    mean_counts_deltak, mean_counts_dx, snr, threshold_continuous, threshold_count,
    DimensionlessDX, DimensionlessDeltaK, MeanCounts,
};

/// NaN-rejecting validation used by the domain types.
#[inline]
pub(crate) fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

#[inline]
pub(crate) fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Errors reported by the library.
///
/// Degenerate statistics (indistinguishable qubit states) are kept
/// separate from domain violations so that parameter sweeps can traverse
/// degenerate points without aborting.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the function's domain.
    Domain(&'static str),
    /// The two qubit states produce identical statistics; there is no
    /// information to discriminate them.
    Degenerate(&'static str),
    /// An iterative routine failed to converge. Carries the last bracket
    /// the root finder was working in.
    Numerical {
        what: &'static str,
        bracket: (f64, f64),
    },
    /// A requested target cannot be reached within the search cap.
    CapExceeded { what: &'static str, cap: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Degenerate(what) => write!(f, "degenerate statistics: {what}"),
            Error::Numerical { what, bracket } => write!(
                f,
                "numerical failure: {what} (last bracket [{}, {}])",
                bracket.0, bracket.1
            ),
            Error::CapExceeded { what, cap } => {
                write!(f, "cap exceeded: {what} (cap {cap})")
            }
        }
    }
}
