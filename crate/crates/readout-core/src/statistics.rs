//! Photocount statistics of the dispersive measurement.
//!
//! Two equivalent dimensionless parametrizations are supported. In the
//! weak-coupling form the drive detuning `D` and dispersive pull `X` are
//! measured in units of the cavity half-width κ/2, with
//!
//! ```text
//! n̄↑ = τ_m / ((D − X)² + 1),    n̄↓ = τ_m / ((D + X)² + 1),
//! ```
//!
//! where τ_m is the mean photocount a resonant drive would deliver. In
//! the pull-normalized form the detuning `Δ` and half-damping `K` are in
//! units of the pull `gλ`:
//!
//! ```text
//! n̄↑ = K³ T_m / ((Δ − 1)² + K²),   n̄↓ = K³ T_m / ((Δ + 1)² + K²).
//! ```
//!
//! Counts are Poissonian with variance equal to the mean, so the SNR
//! reduces to √n̄↑ − √n̄↓, and the optimal count threshold is the ceiling
//! of the crossing point of the two (continued) distributions. Both
//! statistics are symmetric under flipping the sign of detuning or pull
//! together with the state labels, so the canonical sector keeps both
//! nonnegative.

use crate::special::{self, regularized_gamma_q};
use crate::Error;

/// Weak-coupling parametrization: detuning and pull in units of κ/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessDX {
    d: f64,
    x: f64,
    tau_m: f64,
}

impl DimensionlessDX {
    /// Canonical-sector constructor: requires `d ≥ 0`, `x ≥ 0`,
    /// `tau_m ≥ 0`, all finite. `d = 0` or `x = 0` is the degenerate
    /// boundary where the two states are indistinguishable.
    pub fn new(d: f64, x: f64, tau_m: f64) -> Result<Self, Error> {
        if !crate::finite_nonneg(d) {
            return Err(Error::Domain("detuning D must be finite and >= 0"));
        }
        if !crate::finite_nonneg(x) {
            return Err(Error::Domain("pull X must be finite and >= 0"));
        }
        if !crate::finite_nonneg(tau_m) {
            return Err(Error::Domain("tau_m must be finite and >= 0"));
        }
        Ok(Self { d, x, tau_m })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn tau_m(&self) -> f64 {
        self.tau_m
    }

    /// Convert to the pull-normalized parametrization:
    /// Δ = D/X, K = 1/X, T_m = τ_m·X. Needs a nonzero pull.
    pub fn to_delta_k(&self) -> Result<DimensionlessDeltaK, Error> {
        if self.x == 0.0 {
            return Err(Error::Domain("conversion to (Delta, K) requires X > 0"));
        }
        DimensionlessDeltaK::new(self.d / self.x, 1.0 / self.x, self.tau_m * self.x)
    }
}

/// Pull-normalized parametrization: detuning and half-damping in units
/// of the dispersive pull gλ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessDeltaK {
    delta: f64,
    k: f64,
    t_m: f64,
}

impl DimensionlessDeltaK {
    /// Requires `delta ≥ 0`, `k > 0`, `t_m ≥ 0`, all finite.
    pub fn new(delta: f64, k: f64, t_m: f64) -> Result<Self, Error> {
        if !crate::finite_nonneg(delta) {
            return Err(Error::Domain("detuning Delta must be finite and >= 0"));
        }
        if !crate::finite_pos(k) {
            return Err(Error::Domain("half-damping K must be finite and > 0"));
        }
        if !crate::finite_nonneg(t_m) {
            return Err(Error::Domain("T_m must be finite and >= 0"));
        }
        Ok(Self { delta, k, t_m })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t_m(&self) -> f64 {
        self.t_m
    }

    /// Convert back to the weak-coupling parametrization:
    /// X = 1/K, D = Δ/K, τ_m = T_m·K.
    pub fn to_dx(&self) -> Result<DimensionlessDX, Error> {
        DimensionlessDX::new(self.delta / self.k, 1.0 / self.k, self.t_m * self.k)
    }
}

/// Mean photocounts for the excited (`n_up`) and ground (`n_down`)
/// qubit states. In the canonical sector `n_up ≥ n_down` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCounts {
    n_up: f64,
    n_down: f64,
}

impl MeanCounts {
    /// Requires finite `n_up ≥ n_down ≥ 0`.
    pub fn new(n_up: f64, n_down: f64) -> Result<Self, Error> {
        if !crate::finite_nonneg(n_up) || !crate::finite_nonneg(n_down) {
            return Err(Error::Domain("mean counts must be finite and >= 0"));
        }
        if n_up < n_down {
            return Err(Error::Domain(
                "canonical sector requires n_up >= n_down; swap the state labels",
            ));
        }
        Ok(Self { n_up, n_down })
    }

    pub fn n_up(&self) -> f64 {
        self.n_up
    }

    pub fn n_down(&self) -> f64 {
        self.n_down
    }

    /// True when the two states produce identical statistics and carry
    /// no information about the qubit.
    pub fn is_degenerate(&self) -> bool {
        self.n_up == self.n_down
    }
}

/// Mean counts from the raw Lorentzian formula, valid for signed
/// arguments. The first element is the count at detuning `d − x`, the
/// second at `d + x`; for `d, x ≥ 0` these are (n̄↑, n̄↓).
#[inline]
pub fn mean_counts_raw(d: f64, x: f64, tau_m: f64) -> (f64, f64) {
    let up = tau_m / ((d - x) * (d - x) + 1.0);
    let down = tau_m / ((d + x) * (d + x) + 1.0);
    (up, down)
}

/// Mean counts in the weak-coupling parametrization.
pub fn mean_counts_dx(p: &DimensionlessDX) -> MeanCounts {
    let (up, down) = mean_counts_raw(p.d, p.x, p.tau_m);
    MeanCounts::new(up, down).expect("canonical parameters yield ordered counts")
}

/// Mean counts in the pull-normalized parametrization.
pub fn mean_counts_deltak(p: &DimensionlessDeltaK) -> MeanCounts {
    let k3t = p.k * p.k * p.k * p.t_m;
    let up = k3t / ((p.delta - 1.0) * (p.delta - 1.0) + p.k * p.k);
    let down = k3t / ((p.delta + 1.0) * (p.delta + 1.0) + p.k * p.k);
    MeanCounts::new(up, down).expect("canonical parameters yield ordered counts")
}

/// Signal-to-noise ratio of the photocount. With Poissonian fluctuations
/// the general (difference over summed deviations) form reduces to
/// √n̄↑ − √n̄↓.
pub fn snr(mc: &MeanCounts) -> f64 {
    libm::sqrt(mc.n_up) - libm::sqrt(mc.n_down)
}

/// Continuous threshold: the crossing point of the two Poisson
/// distributions continued to real argument,
/// n_th^cont = (n̄↑ − n̄↓)/(ln n̄↑ − ln n̄↓).
///
/// Tends to 0⁺ as n̄↓ → 0 (returned as 0.0); errors on degenerate means.
pub fn threshold_continuous(mc: &MeanCounts) -> Result<f64, Error> {
    if mc.is_degenerate() {
        return Err(Error::Degenerate(
            "equal mean counts have no threshold crossing",
        ));
    }
    if mc.n_down == 0.0 {
        return Ok(0.0);
    }
    Ok((mc.n_up - mc.n_down) / (libm::log(mc.n_up) - libm::log(mc.n_down)))
}

/// Threshold count n_th = ⌈n_th^cont⌉: the smallest count that votes for
/// the excited state. Satisfies n̄↓ < n_th^cont ≤ n_th.
pub fn threshold_count(mc: &MeanCounts) -> Result<u64, Error> {
    let cont = threshold_continuous(mc)?;
    if mc.n_down == 0.0 {
        return Ok(1);
    }
    let t = libm::ceil(cont);
    Ok(if t < 1.0 { 1 } else { t as u64 })
}

/// Fidelity of the thresholded photon-number measurement,
/// F = [Γ(n_th, n̄↓) − Γ(n_th, n̄↑)]/Γ(n_th).
///
/// Degenerate means carry no information and give 0 (check
/// [`MeanCounts::is_degenerate`] to tell this apart from a genuinely
/// tiny fidelity). The n̄↓ = 0 limit is handled as threshold 1 with
/// F = 1 − e^{−n̄↑}.
pub fn fidelity(mc: &MeanCounts) -> f64 {
    if mc.is_degenerate() {
        return 0.0;
    }
    let n_th = threshold_count(mc).expect("non-degenerate counts have a threshold");
    fidelity_with_threshold(mc, n_th)
}

/// Fidelity of a thresholded measurement with an explicitly chosen
/// integer threshold (not necessarily the optimal one).
pub fn fidelity_with_threshold(mc: &MeanCounts, n_th: u64) -> f64 {
    debug_assert!(n_th >= 1);
    if mc.is_degenerate() {
        return 0.0;
    }
    let q_down = if mc.n_down == 0.0 {
        1.0
    } else {
        regularized_gamma_q(n_th, mc.n_down).expect("valid threshold and mean")
    };
    let q_up = regularized_gamma_q(n_th, mc.n_up).expect("valid threshold and mean");
    q_down - q_up
}

/// Fidelity of a click/no-click detector, F₁/₀ = e^{−n̄↓} − e^{−n̄↑}.
///
/// Equals [`fidelity`] exactly whenever the optimal threshold is 1.
pub fn fidelity_on_off(mc: &MeanCounts) -> f64 {
    libm::exp(-mc.n_down) - libm::exp(-mc.n_up)
}

/// Gaussian approximation to the fidelity, valid for n̄↑, n̄↓ ≫ 1.
///
/// Uses the full Gaussian threshold
/// n_th^gauss = √(n̄↑ n̄↓ (1 + ln(n̄↑/n̄↓)/(n̄↑ − n̄↓))), including the
/// logarithmic correction, and F ≈ ½ erf(x↓) − ½ erf(x↑) with
/// x_q = (n_th^gauss − n̄_q)/√(2 n̄_q).
pub fn fidelity_gaussian(mc: &MeanCounts) -> f64 {
    if mc.is_degenerate() {
        return 0.0;
    }
    if mc.n_down == 0.0 {
        // The ground-state distribution collapses to a point; the erf
        // form in terms of SNR is the only meaningful limit.
        return fidelity_gaussian_snr(mc);
    }
    let log_ratio = libm::log(mc.n_up) - libm::log(mc.n_down);
    let n_gauss = libm::sqrt(mc.n_up * mc.n_down * (1.0 + log_ratio / (mc.n_up - mc.n_down)));
    let x_up = (n_gauss - mc.n_up) / libm::sqrt(2.0 * mc.n_up);
    let x_down = (n_gauss - mc.n_down) / libm::sqrt(2.0 * mc.n_down);
    0.5 * special::erf(x_down) - 0.5 * special::erf(x_up)
}

/// The SNR shortcut to the Gaussian fidelity, F ≈ erf(SNR/√2).
pub fn fidelity_gaussian_snr(mc: &MeanCounts) -> f64 {
    special::erf(snr(mc) / core::f64::consts::SQRT_2)
}
