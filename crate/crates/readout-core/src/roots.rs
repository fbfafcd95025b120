//! Bracketed scalar root finding: bisection refined by secant steps.
//!
//! Derivative-free on purpose; the optimality conditions solved elsewhere
//! in the crate flatten out badly at large pull, where secant keeps the
//! convergence fast and the maintained bracket keeps it safe.

use crate::Error;

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Relative width tolerance on the bracket.
    pub rel_tol: f64,
    /// Absolute width tolerance on the bracket.
    pub abs_tol: f64,
    pub max_iter: u32,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    /// Function value at the returned root.
    pub residual: f64,
    pub iterations: u32,
    /// Final bracket around the root.
    pub bracket: (f64, f64),
}

/// Find a root of `f` inside `[lo, hi]`, which must bracket a sign
/// change (endpoints with zero value count).
///
/// Convergence requires the bracket width to fall under the tolerance;
/// the residual at the best endpoint is reported for the caller to
/// check against its own scale. Exceeding the iteration cap returns
/// [`Error::Numerical`] carrying the last bracket.
pub fn find_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &RootOptions,
) -> Result<RootResult, Error> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Domain("root bracket must be a finite interval"));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(RootResult {
            root: a,
            residual: 0.0,
            iterations: 0,
            bracket: (a, b),
        });
    }
    if fb == 0.0 {
        return Ok(RootResult {
            root: b,
            residual: 0.0,
            iterations: 0,
            bracket: (a, b),
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical {
            what: "bracket endpoints have the same sign",
            bracket: (lo, hi),
        });
    }

    let mut iterations = 0;
    // Consecutive updates to the same endpoint; two in a row forces a
    // bisection step so the bracket width provably halves.
    let mut same_side: u32 = 0;
    let mut last_side_a = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let width = b - a;
        let mid = 0.5 * (a + b);
        let tol = opts.abs_tol + opts.rel_tol * mid.abs();
        if width <= tol {
            let (root, residual) = if fa.abs() <= fb.abs() {
                (a, fa)
            } else {
                (b, fb)
            };
            return Ok(RootResult {
                root,
                residual,
                iterations,
                bracket: (a, b),
            });
        }

        // Secant proposal from the bracket endpoints, guarded: it must
        // land strictly inside, away from the ends by a sliver of the
        // current width, or we bisect.
        let secant = b - fb * (b - a) / (fb - fa);
        let guard = 0.01 * width;
        let x = if same_side < 2 && secant.is_finite() && secant > a + guard && secant < b - guard {
            secant
        } else {
            same_side = 0;
            mid
        };
        let fx = f(x);
        if fx == 0.0 {
            return Ok(RootResult {
                root: x,
                residual: 0.0,
                iterations,
                bracket: (a, b),
            });
        }
        let update_a = fx.signum() == fa.signum();
        same_side = if update_a == last_side_a {
            same_side + 1
        } else {
            1
        };
        last_side_a = update_a;
        if update_a {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Err(Error::Numerical {
        what: "root finder hit the iteration cap",
        bracket: (a, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_roots() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, &RootOptions::default()).unwrap();
        assert!((r.root - core::f64::consts::SQRT_2).abs() < 1e-12);
        let r = find_root(libm::cos, 0.0, 3.0, &RootOptions::default()).unwrap();
        assert!((r.root - core::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn keeps_bracket_on_failure() {
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, &RootOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn accepts_root_at_endpoint() {
        let r = find_root(|x| x, 0.0, 1.0, &RootOptions::default()).unwrap();
        assert_eq!(r.root, 0.0);
    }

    #[test]
    fn handles_steep_flat_mix() {
        // Nearly flat on one side, steep on the other.
        let f = |x: f64| libm::exp(20.0 * (x - 1.0)) - 0.5;
        let r = find_root(f, 0.0, 2.0, &RootOptions::default()).unwrap();
        let expect = 1.0 + libm::log(0.5) / 20.0;
        assert!((r.root - expect).abs() < 1e-12);
    }
}
