//! Special functions underlying the photocount fidelity formulas.
//!
//! Everything here is numerically stable for thresholds and mean counts
//! up to at least 10⁴: the integer-order upper incomplete gamma function
//! Γ(n, x), its regularized ratio Q(n, x) = Γ(n, x)/Γ(n) (which equals
//! the Poisson CDF P(ξ ≤ n−1) at mean x), the error function, and the
//! Poisson log-PMF.
//!
//! Γ(n, x) is evaluated through the finite-sum identity
//! Γ(n, x) = e^{−x} (n−1)! Σ_{k<n} x^k/k!, switching to a log-space
//! running log-sum-exp once `n` or `x` is large enough that factorials
//! and powers would overflow. Q(n, x) uses the classic series /
//! continued-fraction split instead, so the two routes stay mutually
//! independent and can cross-check each other.

use crate::Error;

/// Iteration cap for the Q(n, x) series and continued fraction.
const MAX_ITER: usize = 20_000;

/// Above this `n` or `x` the finite sum for Γ(n, x) runs in log space.
const DIRECT_SUM_LIMIT: f64 = 30.0;

/// A probability (or probability-like quantity) stored on the natural-log
/// scale, so that values far below `f64::MIN_POSITIVE` stay usable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProb {
    value: f64,
}

impl LogProb {
    /// Wrap a natural-log value. For genuine probabilities this is ≤ 0.
    pub fn new(value: f64) -> Self {
        Self { value }
    }

    /// The stored log value.
    pub fn value(self) -> f64 {
        self.value
    }

    /// Back to linear scale; underflows to 0 for very negative logs.
    pub fn prob(self) -> f64 {
        libm::exp(self.value)
    }
}

/// ln Γ(x) for x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln n! via the log-gamma function, so there is no table-size cap.
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Error function, odd in its argument, relative error at the few-ulp
/// level over the full real line.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Upper incomplete gamma function Γ(n, x) = ∫_x^∞ t^{n−1} e^{−t} dt for
/// integer n ≥ 1 and x ≥ 0.
///
/// Uses the finite-sum identity for integer order. For n beyond ~171 the
/// true value exceeds `f64::MAX` once x is small; the result then
/// saturates to `f64::INFINITY` (use [`ln_upper_incomplete_gamma_int`]
/// or [`regularized_gamma_q`] in that regime).
pub fn upper_incomplete_gamma_int(n: u64, x: f64) -> Result<f64, Error> {
    check_gamma_args(n, x)?;
    if n as f64 <= DIRECT_SUM_LIMIT && x <= DIRECT_SUM_LIMIT {
        // Γ(n, x) = e^{-x} (n-1)! Σ_{k=0}^{n-1} x^k / k!
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..n {
            term *= x / k as f64;
            sum += term;
        }
        let mut factorial = 1.0;
        for k in 2..n {
            factorial *= k as f64;
        }
        Ok(libm::exp(-x) * factorial * sum)
    } else {
        Ok(libm::exp(ln_upper_incomplete_gamma_int(n, x)?))
    }
}

/// ln Γ(n, x), computed with a running log-sum-exp over the finite sum.
/// Stable for n up to at least 10⁴ and any x ≥ 0.
pub fn ln_upper_incomplete_gamma_int(n: u64, x: f64) -> Result<f64, Error> {
    check_gamma_args(n, x)?;
    if x == 0.0 {
        return Ok(ln_gamma(n as f64));
    }
    let ln_x = libm::log(x);
    // Running log-sum-exp of l_k = k ln x - ln k!, k = 0..n-1.
    let mut lse = 0.0; // l_0
    let mut l_k = 0.0;
    for k in 1..n {
        l_k += ln_x - libm::log(k as f64);
        lse = log_add_exp(lse, l_k);
    }
    Ok(-x + ln_gamma(n as f64) + lse)
}

/// Regularized upper incomplete gamma ratio Q(n, x) = Γ(n, x)/Γ(n).
///
/// Q(n, x) is the Poisson cumulative probability P(ξ ≤ n−1) for mean x:
/// nonincreasing in x, nondecreasing in n, and in [0, 1] throughout.
/// Evaluated by the lower-series / continued-fraction split (split at
/// x = n + 1), which is independent of the finite-sum route used for
/// [`upper_incomplete_gamma_int`].
pub fn regularized_gamma_q(n: u64, x: f64) -> Result<f64, Error> {
    check_gamma_args(n, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    // Exact single-exponential case. Keeping this closed form makes the
    // n_th = 1 fidelity bit-identical to the on/off detector formula.
    if n == 1 {
        return Ok(libm::exp(-x));
    }
    let a = n as f64;
    let log_prefactor = a * libm::log(x) - x - ln_gamma(a);
    let prefactor = libm::exp(log_prefactor);
    if x < a + 1.0 {
        let p = lower_series(a, x, prefactor)?;
        Ok((1.0 - p).clamp(0.0, 1.0))
    } else {
        Ok(upper_continued_fraction(a, x, prefactor)?.clamp(0.0, 1.0))
    }
}

/// Poisson log-PMF: ln P(n) = n ln μ − μ − ln n!.
///
/// Stays finite for any count; P(100) at mean 50 is representable here
/// even though the linear-scale factorials would overflow.
pub fn poisson_logpmf(n: u64, mean: f64) -> Result<LogProb, Error> {
    if !crate::finite_pos(mean) {
        return Err(Error::Domain("poisson mean must be positive and finite"));
    }
    let value = n as f64 * libm::log(mean) - mean - ln_factorial(n);
    Ok(LogProb::new(value))
}

/// ln(e^a + e^b) without overflow.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

fn check_gamma_args(n: u64, x: f64) -> Result<(), Error> {
    if n == 0 {
        return Err(Error::Domain("incomplete gamma order must be >= 1"));
    }
    if !crate::finite_nonneg(x) {
        return Err(Error::Domain(
            "incomplete gamma argument must be finite and nonnegative",
        ));
    }
    Ok(())
}

/// Series for the regularized lower gamma P(a, x), valid for x < a + 1.
fn lower_series(a: f64, x: f64, prefactor: f64) -> Result<f64, Error> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(prefactor * sum);
        }
    }
    Err(Error::Numerical {
        what: "lower gamma series did not converge",
        bracket: (a, x),
    })
}

/// Modified-Lentz continued fraction for Q(a, x), valid for x ≥ a + 1.
fn upper_continued_fraction(a: f64, x: f64, prefactor: f64) -> Result<f64, Error> {
    const TINY: f64 = 1e-300;
    let b0 = x + 1.0 - a;
    let mut f = if b0.abs() < TINY { TINY } else { b0 };
    let mut c = f;
    let mut d = 0.0;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        let bn = x + 2.0 * i as f64 + 1.0 - a;
        d = bn + an * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = bn + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(prefactor / f);
        }
    }
    Err(Error::Numerical {
        what: "upper gamma continued fraction did not converge",
        bracket: (a, x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_M_HALF: f64 = 0.6065306597126334; // e^{-1/2}

    #[test]
    fn gamma_of_one_is_exponential() {
        let g = upper_incomplete_gamma_int(1, 0.5).unwrap();
        assert!((g - E_M_HALF).abs() < 1e-15, "got {g}");
    }

    #[test]
    fn gamma_at_zero_is_factorial() {
        assert_eq!(upper_incomplete_gamma_int(4, 0.0).unwrap(), 6.0);
        assert_eq!(upper_incomplete_gamma_int(1, 0.0).unwrap(), 1.0);
        assert_eq!(upper_incomplete_gamma_int(10, 0.0).unwrap(), 362880.0);
    }

    #[test]
    fn gamma_rejects_bad_arguments() {
        assert!(matches!(
            upper_incomplete_gamma_int(0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            upper_incomplete_gamma_int(3, -0.1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(regularized_gamma_q(0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(poisson_logpmf(2, 0.0), Err(Error::Domain(_))));
        assert!(matches!(poisson_logpmf(2, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_log_and_direct_paths_agree() {
        // Straddle the DIRECT_SUM_LIMIT switch.
        for &(n, x) in &[(5u64, 2.0), (25, 28.0), (40, 10.0), (31, 31.0)] {
            let direct = upper_incomplete_gamma_int(n, x).unwrap();
            let via_log = libm::exp(ln_upper_incomplete_gamma_int(n, x).unwrap());
            assert!(
                (direct - via_log).abs() <= 1e-12 * direct.abs(),
                "n={n} x={x}: {direct} vs {via_log}"
            );
        }
    }

    #[test]
    fn q_three_terms() {
        // Q(3, 2) = e^{-2} (1 + 2 + 2)
        let expected = 5.0 * libm::exp(-2.0);
        let q = regularized_gamma_q(3, 2.0).unwrap();
        assert!((q - expected).abs() < 1e-14, "got {q}, want {expected}");
    }

    #[test]
    fn q_empty_count_certainty() {
        assert_eq!(regularized_gamma_q(1, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn q_balanced_midpoint() {
        // Q(50, 50) = P(Poisson(50) <= 49); reference value from a
        // 50-digit computation.
        let q = regularized_gamma_q(50, 50.0).unwrap();
        assert!((q - 0.48119168452795672).abs() < 1e-13, "got {q}");
        assert!(q > 0.4 && q < 0.6);
    }

    #[test]
    fn q_matches_gamma_ratio() {
        for &(n, x) in &[(2u64, 0.5), (7, 3.0), (20, 25.0), (60, 40.0), (100, 130.0)] {
            let q = regularized_gamma_q(n, x).unwrap();
            let ratio =
                libm::exp(ln_upper_incomplete_gamma_int(n, x).unwrap() - ln_gamma(n as f64));
            assert!(
                (q - ratio).abs() < 1e-12,
                "n={n} x={x}: q={q} ratio={ratio}"
            );
        }
    }

    #[test]
    fn q_special_case_n1_is_exact_exp() {
        for &x in &[0.1, 1.0, 5.0, 42.0] {
            assert_eq!(regularized_gamma_q(1, x).unwrap(), libm::exp(-x));
        }
    }

    #[test]
    fn logpmf_known_values() {
        // P(0; 1) = e^{-1}
        assert!((poisson_logpmf(0, 1.0).unwrap().value() + 1.0).abs() < 1e-15);
        // P(2; 2) = 2 e^{-2}, so ln = ln 2 - 2
        let v = poisson_logpmf(2, 2.0).unwrap().value();
        assert!(
            (v - (core::f64::consts::LN_2 - 2.0)).abs() < 1e-14,
            "got {v}"
        );
        // Far tail stays finite; reference from extended precision.
        let tail = poisson_logpmf(100, 50.0).unwrap().value();
        assert!(tail.is_finite());
        assert!((tail - (-22.537075012748884)).abs() < 1e-11, "got {tail}");
    }

    #[test]
    fn logprob_roundtrip() {
        let lp = poisson_logpmf(3, 2.5).unwrap();
        assert!(lp.value() <= 0.0);
        let p = lp.prob();
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn logpmf_normalizes() {
        for &mean in &[1.0, 2.0, 17.5, 400.0] {
            let n_max = (mean + 12.0 * libm::sqrt(mean)) as u64 + 1;
            let mut total = 0.0;
            let mut comp = 0.0; // Kahan compensation
            for n in 0..=n_max {
                let y = poisson_logpmf(n, mean).unwrap().prob() - comp;
                let t = total + y;
                comp = (t - total) - y;
                total = t;
            }
            assert!((total - 1.0).abs() < 1e-10, "mean {mean}: sum {total}");
        }
    }

    #[test]
    fn erf_basics() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-15);
        assert!((erf(6.5) - 1.0).abs() < 1e-15);
        assert_eq!(erf(-2.0), -erf(2.0));
    }
}
