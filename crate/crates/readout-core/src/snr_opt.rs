//! SNR maximization: the optimal drive detuning at fixed dispersive
//! pull, its large-X and small-X approximations, and the joint global
//! optimum over detuning and pull/damping ratio.
//!
//! At fixed pull X the stationarity condition for the SNR is
//!
//! ```text
//! (D + X)/[(D + X)² + 1]^{3/2} = (D − X)/[(D − X)² + 1]^{3/2},
//! ```
//!
//! which has exactly one root in the open interval (X, √(X² + 1)); the
//! left edge comes from the sign of the equation and the right edge from
//! the second-derivative (maximum) condition. The joint optimum over
//! (Δ, K) is the closed-form point (√5/2, √3/2), re-verified numerically
//! on every call.

use crate::roots::{find_root, RootOptions};
use crate::Error;

/// How an optimal-detuning value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMethod {
    /// Bracketed root of the exact stationarity condition.
    RootFound,
    /// Series expansion around D = X, accurate for X ≳ 0.4.
    AsymptoticLargeX,
    /// The X² ≪ 1 limit D = 1/√2.
    AsymptoticSmallX,
}

/// Optimal detuning at fixed pull, with the SNR it achieves at unit
/// dimensionless time (SNR at general τ_m is `snr1 · √τ_m`).
#[derive(Debug, Clone, Copy)]
pub struct SnrOptimum {
    pub d_opt: f64,
    /// SNR at τ_m = 1.
    pub snr1: f64,
    /// Bracket the root was isolated in.
    pub bracket: (f64, f64),
    pub method: SnrMethod,
}

/// Large-X approximations to the optimal detuning offset ξ = D − X.
#[derive(Debug, Clone, Copy)]
pub struct LargeXDetuning {
    /// Series offset ξ = 2X(4X² + 1)/(8X² + (4X² + 1)^{5/2} − 1).
    pub xi: f64,
    /// X + ξ.
    pub d_opt: f64,
    /// The simpler variant D ≈ X + 2X(4X² + 1)^{−3/2}.
    pub d_opt_simple: f64,
}

/// SNR at τ_m = 1 for detuning `d` and pull `x`.
#[inline]
pub fn snr1(d: f64, x: f64) -> f64 {
    let u = d - x;
    let v = d + x;
    1.0 / libm::sqrt(u * u + 1.0) - 1.0 / libm::sqrt(v * v + 1.0)
}

#[inline]
fn stationarity(d: f64, x: f64) -> f64 {
    let u = d - x;
    let v = d + x;
    let gu = u / libm::pow(u * u + 1.0, 1.5);
    let gv = v / libm::pow(v * v + 1.0, 1.5);
    gv - gu
}

/// Detuning maximizing the SNR at fixed pull `x > 0`.
///
/// The root of the stationarity condition is isolated in
/// (X, √(X² + 1)), opened at both ends by a relative epsilon to dodge
/// the singular D = X endpoint. The residual is verified against
/// `rel_tol` times the natural scale of the equation, and the negative
/// curvature of the SNR at the root is checked numerically.
pub fn snr_optimal_detuning(x: f64, rel_tol: f64) -> Result<SnrOptimum, Error> {
    if !crate::finite_pos(x) {
        return Err(Error::Domain("pull X must be finite and > 0"));
    }
    if !crate::finite_pos(rel_tol) || rel_tol > 1e-6 {
        return Err(Error::Domain("rel_tol must be in (0, 1e-6]"));
    }
    let eps = 1e-12 * (1.0 + x);
    let lo = x + eps;
    let hi = libm::sqrt(x * x + 1.0) - eps;
    let opts = RootOptions {
        rel_tol: (rel_tol * 1e-4).max(1e-15),
        ..RootOptions::default()
    };
    let res = find_root(|d| stationarity(d, x), lo, hi, &opts)?;

    // Residual scale: the common magnitude of the two competing terms.
    let v = res.root + x;
    let scale = v / libm::pow(v * v + 1.0, 1.5);
    if res.residual.abs() > rel_tol * scale {
        return Err(Error::Numerical {
            what: "stationarity residual above tolerance",
            bracket: res.bracket,
        });
    }

    // Maximum check: negative second difference of SNR^1 at the root.
    let h = 1e-5 * (1.0 + x);
    let curvature = snr1(res.root + h, x) + snr1(res.root - h, x) - 2.0 * snr1(res.root, x);
    if curvature >= 0.0 {
        return Err(Error::Numerical {
            what: "stationary point is not a maximum",
            bracket: res.bracket,
        });
    }

    Ok(SnrOptimum {
        d_opt: res.root,
        snr1: snr1(res.root, x),
        bracket: (lo, hi),
        method: SnrMethod::RootFound,
    })
}

/// Large-X series for the optimal detuning. Both the full offset and the
/// simpler power-law variant are returned; they agree with the exact
/// root to a couple percent already at X ≈ 1 and the offset vanishes as
/// X → ∞.
pub fn snr_detuning_large_x_approx(x: f64) -> LargeXDetuning {
    let q = 4.0 * x * x + 1.0;
    let xi = 2.0 * x * q / (8.0 * x * x + libm::pow(q, 2.5) - 1.0);
    LargeXDetuning {
        xi,
        d_opt: x + xi,
        d_opt_simple: x + 2.0 * x * libm::pow(q, -1.5),
    }
}

/// The X² ≪ 1 limit of the optimal detuning, D = 1/√2.
pub fn snr_detuning_small_x_approx() -> f64 {
    core::f64::consts::FRAC_1_SQRT_2
}

/// The global SNR optimum over detuning and pull/damping ratio.
#[derive(Debug, Clone, Copy)]
pub struct SnrGlobalOptimum {
    /// Detuning in pull units: √5/2.
    pub delta: f64,
    /// Half-damping in pull units: √3/2.
    pub k: f64,
    /// SNR divided by √(η t_m gλ |α^res|²).
    pub snr_coefficient: f64,
    pub asymmetric: bool,
}

/// Joint maximum of the SNR over (Δ, K), in closed form but re-verified
/// numerically on every call.
///
/// The symmetric-cavity coefficient is ≈ 0.570; routing all the leakage
/// through the detector port doubles the effective dimensionless time
/// and raises the bound by √2 to ≈ 0.806 (with the optimal detector-port
/// rate κ^II = √3/2 · gλ unchanged).
pub fn snr_global_optimum(asymmetric: bool) -> SnrGlobalOptimum {
    let delta = libm::sqrt(5.0) / 2.0;
    let k = libm::sqrt(3.0) / 2.0;

    // Stationarity of the SNR in both variables at (delta, k). These are
    // exact identities of the closed form; the runtime check guards
    // against transcription drift.
    let m = (delta - 1.0) * (delta - 1.0) + k * k;
    let p = (delta + 1.0) * (delta + 1.0) + k * k;
    let r_delta = (delta + 1.0) / libm::pow(p, 1.5) - (delta - 1.0) / libm::pow(m, 1.5);
    let r_k = (3.0 * (delta + 1.0) * (delta + 1.0) + k * k) / libm::pow(p, 1.5)
        - (3.0 * (delta - 1.0) * (delta - 1.0) + k * k) / libm::pow(m, 1.5);
    assert!(
        r_delta.abs() <= 1e-10 && r_k.abs() <= 1e-10,
        "joint SNR optimum failed its stationarity check: {r_delta}, {r_k}"
    );

    let coefficient = libm::pow(k, 1.5) * (1.0 / libm::sqrt(m) - 1.0 / libm::sqrt(p));
    SnrGlobalOptimum {
        delta,
        k,
        snr_coefficient: if asymmetric {
            coefficient * core::f64::consts::SQRT_2
        } else {
            coefficient
        },
        asymmetric,
    }
}
