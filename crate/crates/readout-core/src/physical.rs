//! Dimensional experimental parameters: conversion to the dimensionless
//! groups, validity-regime checks, and measurement-time estimation.
//!
//! All frequencies and rates here are angular (rad/s). Interfaces that
//! accept cyclic (Hz) input multiply by 2π before constructing a
//! [`PhysicalSetup`].

use crate::fidelity_opt::{fidelity_joint_optimum, FidelityOptimum};
use crate::statistics::{DimensionlessDX, DimensionlessDeltaK};
use crate::Error;

/// A complete dimensional description of the measurement setup.
///
/// The two port rates are `kappa_1` (drive side) and `kappa_2` (detector
/// side); a symmetric cavity has `kappa_1 = kappa_2 = κ/2`. Photons are
/// counted for `t_m` seconds starting `t_0` seconds after the drive and
/// the qubit preparation, possibly split over `n_bins` sequential bins.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalSetup {
    /// Qubit-resonator coupling (rad/s).
    pub g: f64,
    /// Qubit transition frequency (rad/s).
    pub omega_q: f64,
    /// Bare cavity resonance (rad/s).
    pub omega_r: f64,
    /// Drive frequency (rad/s).
    pub omega_d: f64,
    /// Leakage rate through the drive port (rad/s).
    pub kappa_1: f64,
    /// Leakage rate through the detector port (rad/s).
    pub kappa_2: f64,
    /// Detector efficiency, in (0, 1].
    pub eta: f64,
    /// Mean photon number a resonant drive would maintain in the cavity.
    pub alpha_res_sq: f64,
    /// Counting duration (s).
    pub t_m: f64,
    /// Settling time before counting starts (s).
    pub t_0: f64,
    /// Longitudinal qubit relaxation time (s).
    pub t1: f64,
    /// Number of sequential measurement bins (1 = single shot).
    pub n_bins: u32,
}

impl PhysicalSetup {
    /// Frequency pull per qubit state, λ = g/(ω_q − ω_r).
    pub fn lambda(&self) -> f64 {
        self.g / (self.omega_q - self.omega_r)
    }

    /// Dispersive pull magnitude |gλ| (rad/s).
    pub fn g_lambda(&self) -> f64 {
        (self.g * self.lambda()).abs()
    }

    /// Critical photon number n_cr = (2λ)^{−2}.
    pub fn critical_photon_number(&self) -> f64 {
        let two_lambda = 2.0 * self.lambda();
        1.0 / (two_lambda * two_lambda)
    }

    /// Total cavity damping κ = κ₁ + κ₂ (rad/s).
    pub fn kappa(&self) -> f64 {
        self.kappa_1 + self.kappa_2
    }

    fn validate(&self) -> Result<(), Error> {
        let positives = [
            self.g,
            self.omega_q,
            self.omega_r,
            self.omega_d,
            self.kappa_1,
            self.kappa_2,
            self.alpha_res_sq,
            self.t_0,
            self.t1,
        ];
        if !positives.iter().all(|v| crate::finite_pos(*v)) {
            return Err(Error::Domain(
                "rates, frequencies and times must be positive and finite",
            ));
        }
        if !crate::finite_nonneg(self.t_m) {
            return Err(Error::Domain("t_m must be finite and >= 0"));
        }
        if !crate::finite_pos(self.eta) || self.eta > 1.0 {
            return Err(Error::Domain("eta must lie in (0, 1]"));
        }
        if self.omega_q == self.omega_r {
            return Err(Error::Domain(
                "qubit and cavity must be detuned from each other",
            ));
        }
        if self.n_bins == 0 {
            return Err(Error::Domain("n_bins must be >= 1"));
        }
        Ok(())
    }
}

/// Verdict of one validity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Marginal,
    Violated,
}

fn grade_small(ratio: f64) -> Verdict {
    if ratio <= 0.1 {
        Verdict::Ok
    } else if ratio <= 0.3 {
        Verdict::Marginal
    } else {
        Verdict::Violated
    }
}

/// Ratios and verdicts for the regime conditions the statistics rely on.
#[derive(Debug, Clone, Copy)]
pub struct RegimeReport {
    /// (n_ch + 1)/n_cr, must be small for the dispersive approximation.
    pub dispersive_ratio: f64,
    pub dispersive: Verdict,
    /// |ω_r − ω_q|/(ω_r + ω_q), must be small for the rotating-wave
    /// approximation.
    pub rwa_ratio: f64,
    pub rwa: Verdict,
    /// t_0·κ, must be large for transients to fade before counting.
    pub settling_ratio: f64,
    pub settling: Verdict,
    /// t_0/T1, must be small so the qubit survives the settling period.
    pub t1_ratio_t0: f64,
    pub t1_t0: Verdict,
    /// (t_m/n_bins)/T1, must be small so the qubit survives each bin.
    pub t1_ratio_tm: f64,
    pub t1_tm: Verdict,
}

impl RegimeReport {
    /// Worst verdict across all checks.
    pub fn overall(&self) -> Verdict {
        let all = [
            self.dispersive,
            self.rwa,
            self.settling,
            self.t1_t0,
            self.t1_tm,
        ];
        if all.contains(&Verdict::Violated) {
            Verdict::Violated
        } else if all.contains(&Verdict::Marginal) {
            Verdict::Marginal
        } else {
            Verdict::Ok
        }
    }
}

/// Check the operating-regime conditions. `n_ch` is the characteristic
/// intracavity photon number; `|α^res|²` is the conservative default.
pub fn check_regime(p: &PhysicalSetup, n_ch: f64) -> RegimeReport {
    let dispersive_ratio = (n_ch + 1.0) / p.critical_photon_number();
    let rwa_ratio = (p.omega_r - p.omega_q).abs() / (p.omega_r + p.omega_q);
    let settling_ratio = p.t_0 * p.kappa();
    let t1_ratio_t0 = p.t_0 / p.t1;
    let t1_ratio_tm = p.t_m / p.n_bins as f64 / p.t1;
    RegimeReport {
        dispersive_ratio,
        dispersive: grade_small(dispersive_ratio),
        rwa_ratio,
        rwa: grade_small(rwa_ratio),
        settling_ratio,
        // Inverted check: want t_0 · κ >= 10.
        settling: grade_small(1.0 / settling_ratio),
        t1_ratio_t0,
        t1_t0: grade_small(t1_ratio_t0),
        t1_ratio_tm,
        t1_tm: grade_small(t1_ratio_tm),
    }
}

/// Convert a dimensional setup to both dimensionless parametrizations.
///
/// The detuning is mapped into the canonical positive sector (the
/// statistics are even in both the detuning and the pull). The counting
/// prefactor uses the detector-port rate κ₂, so a symmetric cavity gives
/// τ_m = η(κ/2)|α^res|²t_m while the fully asymmetric limit κ₁ ≪ κ₂
/// doubles the dimensionless time.
pub fn to_dimensionless(
    p: &PhysicalSetup,
) -> Result<(DimensionlessDX, DimensionlessDeltaK), Error> {
    p.validate()?;
    let half_kappa = 0.5 * p.kappa();
    let g_lambda = p.g_lambda();
    let detuning = (p.omega_d - p.omega_r).abs();
    if detuning == 0.0 && g_lambda == 0.0 {
        return Err(Error::Degenerate(
            "zero drive detuning with zero pull leaves no signal",
        ));
    }
    let d = detuning / half_kappa;
    let x = g_lambda / half_kappa;
    let tau_m = p.eta * p.kappa_2 * p.alpha_res_sq * p.t_m;
    let dx = DimensionlessDX::new(d, x, tau_m)?;
    let dk = dx.to_delta_k()?;
    Ok((dx, dk))
}

/// Outcome of a measurement-time estimate.
#[derive(Debug, Clone, Copy)]
pub struct TimeEstimate {
    /// Counting duration reaching the target fidelity (s).
    pub t_m: f64,
    /// The dimensionless time the estimate corresponds to.
    pub t_m_dimensionless: f64,
    /// The jointly optimal working point to configure.
    pub optimum: FidelityOptimum,
}

/// Counting duration needed to reach `target_fidelity` at the jointly
/// optimal (Δ, K), for the pull and drive strength in `p` (its `t_m`
/// field is ignored).
///
/// Inverts the joint optimum by bisection on the dimensionless time
/// (fidelity is nondecreasing in it), then converts back through
/// T = s·η·gλ·|α^res|²·t_m with s = 2 for an asymmetric cavity.
pub fn estimate_measurement_time(
    p: &PhysicalSetup,
    target_fidelity: f64,
    asymmetric: bool,
) -> Result<TimeEstimate, Error> {
    p.validate()?;
    if !(0.5..=0.9999).contains(&target_fidelity) {
        return Err(Error::Domain("target fidelity must lie in [0.5, 0.9999]"));
    }
    const T_CAP: f64 = 1e4;
    let objective = |t: f64| fidelity_joint_optimum(t, false).map(|o| o.fidelity);

    // Bracket the target by doubling, then bisect. The dimensionless
    // time is the symmetric-convention one; asymmetry enters only in
    // the conversion back to seconds.
    let mut t_lo = 1e-6;
    let mut t_hi = 1.0;
    while objective(t_hi)? < target_fidelity {
        t_lo = t_hi;
        t_hi *= 2.0;
        if t_hi > T_CAP {
            return Err(Error::CapExceeded {
                what: "target fidelity unreachable within the time cap",
                cap: T_CAP,
            });
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (t_lo + t_hi);
        if objective(mid)? < target_fidelity {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
        if (t_hi - t_lo) < 1e-9 * t_hi {
            break;
        }
    }
    let t_eff = t_hi;
    let scale = if asymmetric { 2.0 } else { 1.0 };
    let t_m = t_eff / (scale * p.eta * p.g_lambda() * p.alpha_res_sq);
    Ok(TimeEstimate {
        t_m,
        t_m_dimensionless: t_eff / scale,
        optimum: fidelity_joint_optimum(t_eff, false)?,
    })
}
