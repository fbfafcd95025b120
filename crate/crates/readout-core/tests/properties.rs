//! Property tests for the statistics and special-function layers.

use proptest::prelude::*;
use readout_core::special::{ln_upper_incomplete_gamma_int, poisson_logpmf, regularized_gamma_q};
use readout_core::statistics::{
    fidelity, fidelity_on_off, mean_counts_raw, snr, threshold_continuous, threshold_count,
    DimensionlessDX, DimensionlessDeltaK, MeanCounts,
};

proptest! {
    /// Q(n, x) is nonincreasing in x and nondecreasing in n.
    #[test]
    fn gamma_ratio_monotonicity(n in 1u64..400, x in 0.0f64..400.0, dx in 0.001f64..50.0) {
        let q = regularized_gamma_q(n, x).unwrap();
        let q_further = regularized_gamma_q(n, x + dx).unwrap();
        prop_assert!(q_further <= q + 1e-14);
        let q_higher = regularized_gamma_q(n + 1, x).unwrap();
        prop_assert!(q_higher >= q - 1e-14);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    /// The two incomplete-gamma routes stay consistent:
    /// Q(n,x)·Γ(n) = Γ(n,x).
    #[test]
    fn gamma_routes_agree(n in 1u64..150, x in 0.0f64..300.0) {
        let q = regularized_gamma_q(n, x).unwrap();
        let ln_gamma_n = libm::lgamma(n as f64);
        let ratio = (ln_upper_incomplete_gamma_int(n, x).unwrap() - ln_gamma_n).exp();
        prop_assert!((q - ratio).abs() < 1e-11, "n={n} x={x}: {q} vs {ratio}");
    }

    /// Q(n, x) equals the direct log-space Poisson CDF summation.
    #[test]
    fn gamma_ratio_is_poisson_cdf(n in 1u64..300, x in 1e-3f64..300.0) {
        let q = regularized_gamma_q(n, x).unwrap();
        let mut sum = 0.0;
        for k in 0..n {
            sum += poisson_logpmf(k, x).unwrap().prob();
        }
        prop_assert!((q - sum).abs() < 1e-10, "n={n} x={x}: {q} vs {sum}");
    }

    /// Flipping the detuning sign swaps the two states' counts exactly,
    /// so fidelity and SNR are even in both the detuning and the pull.
    #[test]
    fn statistics_symmetry(d in 0.01f64..4.0, x in 0.01f64..4.0, tau in 0.01f64..40.0) {
        let (up, down) = mean_counts_raw(d, x, tau);
        let (fup, fdown) = mean_counts_raw(-d, x, tau);
        prop_assert_eq!(up, fdown);
        prop_assert_eq!(down, fup);
        let (xup, xdown) = mean_counts_raw(d, -x, tau);
        prop_assert_eq!(up, xdown);
        prop_assert_eq!(down, xup);
    }

    /// PNR thresholding never loses to the click/no-click rule, with
    /// equality exactly while the threshold is 1.
    #[test]
    fn pnr_dominates_on_off(up in 0.01f64..200.0, ratio in 0.0f64..1.0) {
        let down = up * ratio;
        let mc = MeanCounts::new(up, down).unwrap();
        let f = fidelity(&mc);
        let f10 = fidelity_on_off(&mc);
        prop_assert!(f >= f10);
        if !mc.is_degenerate() {
            let n_th = threshold_count(&mc).unwrap();
            if n_th == 1 {
                prop_assert_eq!(f, f10);
            } else {
                prop_assert!(f > f10);
            }
        }
    }

    /// A longer measurement (both means scaled up) never reduces the
    /// fidelity.
    #[test]
    fn fidelity_monotone_under_scaling(
        up in 0.05f64..50.0,
        ratio in 0.01f64..0.99,
        c in 1.0f64..8.0,
    ) {
        let down = up * ratio;
        let f1 = fidelity(&MeanCounts::new(up, down).unwrap());
        let f2 = fidelity(&MeanCounts::new(c * up, c * down).unwrap());
        prop_assert!(f2 >= f1 - 1e-12, "c={c}: {f1} -> {f2}");
    }

    /// The integer threshold brackets its continuous counterpart:
    /// n_down < n_cont <= n_th < n_cont + 1.
    #[test]
    fn threshold_brackets_continuous(up in 0.02f64..500.0, ratio in 0.01f64..0.999) {
        let down = up * ratio;
        let mc = MeanCounts::new(up, down).unwrap();
        let cont = threshold_continuous(&mc).unwrap();
        let t = threshold_count(&mc).unwrap() as f64;
        prop_assert!(down < cont);
        prop_assert!(cont <= t && t < cont + 1.0);
    }

    /// SNR is nonnegative in the canonical sector and zero only for
    /// degenerate counts.
    #[test]
    fn snr_nonnegative(up in 0.0f64..100.0, ratio in 0.0f64..1.0) {
        let mc = MeanCounts::new(up, up * ratio).unwrap();
        let s = snr(&mc);
        prop_assert!(s >= 0.0);
        if mc.is_degenerate() {
            prop_assert_eq!(s, 0.0);
        }
    }

    /// Parametrization conversions round-trip to relative 1e-12 and both
    /// forms produce the same counts.
    #[test]
    fn parametrization_round_trip(
        d in 0.01f64..10.0,
        x in 0.01f64..10.0,
        tau in 0.0f64..50.0,
    ) {
        let p = DimensionlessDX::new(d, x, tau).unwrap();
        let q: DimensionlessDeltaK = p.to_delta_k().unwrap();
        let back = q.to_dx().unwrap();
        prop_assert!((back.d() - d).abs() <= 1e-12 * d);
        prop_assert!((back.x() - x).abs() <= 1e-12 * x);
        prop_assert!((back.tau_m() - tau).abs() <= 1e-12 * tau.max(1e-300));

        let a = readout_core::mean_counts_dx(&p);
        let b = readout_core::mean_counts_deltak(&q);
        prop_assert!((a.n_up() - b.n_up()).abs() <= 1e-12 * a.n_up().max(1e-300));
        prop_assert!((a.n_down() - b.n_down()).abs() <= 1e-12 * a.n_down().max(1e-300));
    }

    /// Poisson log-PMF normalizes over the bulk of its support.
    #[test]
    fn poisson_pmf_normalizes(mean in 1.0f64..500.0) {
        let n_max = (mean + 12.0 * mean.sqrt()) as u64 + 1;
        let mut total = 0.0;
        let mut comp = 0.0;
        for n in 0..=n_max {
            let y = poisson_logpmf(n, mean).unwrap().prob() - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        }
        prop_assert!((total - 1.0).abs() < 1e-10, "mean {mean}: {total}");
    }
}
