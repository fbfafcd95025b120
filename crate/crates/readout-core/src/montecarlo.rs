//! Stochastic oracle for the analytic fidelity formulas.
//!
//! Each trial prepares the qubit in a uniformly random eigenstate, draws
//! a Poisson photocount for that state, thresholds it, and scores the
//! decision. The empirical fidelity is the excess of correct decisions
//! over the coin-flip baseline, 2·(correct/trials) − 1, matching the
//! analytic definition (which vanishes for indistinguishable states
//! rather than settling at one half).
//!
//! Randomness comes from a counter-based generator: every draw is a pure
//! function of (seed, stream, counter), so results are bit-reproducible
//! for a fixed seed and partition count no matter how streams are
//! scheduled across threads.

use crate::special::ln_factorial;
use crate::statistics::{threshold_count, MeanCounts};
use crate::Error;

/// Counter-based random generator (splitmix64 finalizer over a keyed
/// counter). Streams derived from the same seed are independent.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CounterRng {
    /// Generator for `stream` within the family identified by `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix(seed ^ mix(stream.wrapping_add(GOLDEN)));
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Fair coin.
    #[inline]
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Mean value below which Poisson sampling uses sequential inversion;
/// above it, a rejection sampler.
const INVERSION_LIMIT: f64 = 30.0;

/// Draw from a Poisson distribution with the given mean (`mean = 0`
/// always yields 0).
pub fn sample_poisson(rng: &mut CounterRng, mean: f64) -> u64 {
    debug_assert!(mean >= 0.0);
    if mean == 0.0 {
        0
    } else if mean <= INVERSION_LIMIT {
        poisson_inversion(rng, mean)
    } else {
        poisson_rejection(rng, mean)
    }
}

/// Sequential-search inversion of the CDF; O(mean) per draw.
fn poisson_inversion(rng: &mut CounterRng, mean: f64) -> u64 {
    let target = rng.next_f64();
    let mut k = 0u64;
    let mut pmf = libm::exp(-mean);
    let mut cdf = pmf;
    while target > cdf {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
        // With target < 1 strictly this terminates; the guard covers the
        // rounding tail where the CDF saturates just below 1.
        if pmf < 1e-18 && k as f64 > mean {
            break;
        }
    }
    k
}

/// Rejection from a Cauchy envelope, after Numerical Recipes; O(1) per
/// draw for large means.
fn poisson_rejection(rng: &mut CounterRng, mean: f64) -> u64 {
    let log_mean = libm::log(mean);
    let sqrt_2mean = libm::sqrt(2.0 * mean);
    let shift = mean * log_mean - libm::lgamma(mean + 1.0);
    loop {
        let mut y;
        let mut em;
        loop {
            y = libm::tan(core::f64::consts::PI * rng.next_f64());
            em = sqrt_2mean * y + mean;
            if em >= 0.0 {
                break;
            }
        }
        let k = libm::floor(em);
        let accept = 0.9 * (1.0 + y * y) * libm::exp(k * log_mean - ln_factorial(k as u64) - shift);
        if rng.next_f64() <= accept {
            return k as u64;
        }
    }
}

/// Outcome of a Monte Carlo fidelity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub trials: u64,
    /// 2·(fraction of correct decisions) − 1.
    pub empirical_fidelity: f64,
    /// Standard error of `empirical_fidelity` (delta method on the
    /// binomial count of correct decisions).
    pub std_error: f64,
    pub seed: u64,
    /// Set when the two states were statistically indistinguishable.
    pub degenerate: bool,
}

/// Count correct decisions over `trials` single-shot measurements on
/// stream `stream`. Building block for partitioned / parallel runs;
/// results from disjoint streams merge by summation.
pub fn simulate_stream(mc: &MeanCounts, n_th: u64, trials: u64, seed: u64, stream: u64) -> u64 {
    let mut rng = CounterRng::new(seed, stream);
    let mut correct = 0u64;
    for _ in 0..trials {
        let excited = rng.next_bool();
        let mean = if excited { mc.n_up() } else { mc.n_down() };
        let n = sample_poisson(&mut rng, mean);
        let vote_excited = n >= n_th;
        if vote_excited == excited {
            correct += 1;
        }
    }
    correct
}

fn result_from_correct(correct: u64, trials: u64, seed: u64, degenerate: bool) -> McResult {
    let p_hat = correct as f64 / trials as f64;
    let fidelity = 2.0 * p_hat - 1.0;
    // Var(2p̂ − 1) = 4 p̂(1 − p̂)/N, floored so a saturated estimate still
    // reports a usable scale.
    let var = (4.0 * p_hat * (1.0 - p_hat) / trials as f64).max(1.0 / (trials * trials) as f64);
    McResult {
        trials,
        empirical_fidelity: fidelity,
        std_error: libm::sqrt(var),
        seed,
        degenerate,
    }
}

fn threshold_or_degenerate(mc: &MeanCounts) -> (u64, bool) {
    match threshold_count(mc) {
        Ok(t) => (t, false),
        // Indistinguishable states: any fixed threshold scores at the
        // coin-flip baseline; keep the click/no-click rule.
        Err(_) => (1, true),
    }
}

/// Estimate the measurement fidelity by direct simulation. Deterministic
/// for a fixed seed.
pub fn simulate_fidelity(mc: &MeanCounts, trials: u64, seed: u64) -> Result<McResult, Error> {
    simulate_fidelity_partitioned(mc, trials, seed, 1)
}

/// As [`simulate_fidelity`], with trials split over `partitions`
/// independent streams. Bit-reproducible for a fixed (seed, partitions)
/// regardless of how callers schedule the streams.
pub fn simulate_fidelity_partitioned(
    mc: &MeanCounts,
    trials: u64,
    seed: u64,
    partitions: u32,
) -> Result<McResult, Error> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1"));
    }
    if partitions == 0 {
        return Err(Error::Domain("partitions must be >= 1"));
    }
    let (n_th, degenerate) = threshold_or_degenerate(mc);
    let mut correct = 0u64;
    for (stream, chunk) in partition_trials(trials, partitions) {
        correct += simulate_stream(mc, n_th, chunk, seed, stream);
    }
    Ok(result_from_correct(correct, trials, seed, degenerate))
}

/// Even split of `trials` over `partitions` streams (earlier streams
/// absorb the remainder). Exposed so parallel callers can fan out
/// [`simulate_stream`] with exactly the same layout.
pub fn partition_trials(trials: u64, partitions: u32) -> impl Iterator<Item = (u64, u64)> {
    let base = trials / partitions as u64;
    let rem = trials % partitions as u64;
    (0..partitions as u64).map(move |i| (i, base + u64::from(i < rem)))
}

/// Simulate the sequential (binned) measurement: every trial sums
/// `n_bins` independent counts drawn with per-bin means `mc_per_bin`
/// before thresholding. The summed counts obey the same Poisson
/// statistics with means scaled by `n_bins`.
pub fn simulate_sequential(
    mc_per_bin: &MeanCounts,
    n_bins: u32,
    trials: u64,
    seed: u64,
) -> Result<McResult, Error> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1"));
    }
    if n_bins == 0 {
        return Err(Error::Domain("n_bins must be >= 1"));
    }
    let total = MeanCounts::new(
        mc_per_bin.n_up() * n_bins as f64,
        mc_per_bin.n_down() * n_bins as f64,
    )?;
    let (n_th, degenerate) = threshold_or_degenerate(&total);
    let mut rng = CounterRng::new(seed, 0);
    let mut correct = 0u64;
    for _ in 0..trials {
        let excited = rng.next_bool();
        let mean = if excited {
            mc_per_bin.n_up()
        } else {
            mc_per_bin.n_down()
        };
        let mut n = 0u64;
        for _ in 0..n_bins {
            n += sample_poisson(&mut rng, mean);
        }
        let vote_excited = n >= n_th;
        if vote_excited == excited {
            correct += 1;
        }
    }
    Ok(result_from_correct(correct, trials, seed, degenerate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::fidelity;

    fn mc(up: f64, down: f64) -> MeanCounts {
        MeanCounts::new(up, down).unwrap()
    }

    #[test]
    fn rng_is_deterministic_and_stream_separated() {
        let mut a = CounterRng::new(42, 0);
        let mut b = CounterRng::new(42, 0);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = CounterRng::new(42, 1);
        let first: [u64; 4] = core::array::from_fn(|_| c.next_u64());
        let mut a = CounterRng::new(42, 0);
        let other: [u64; 4] = core::array::from_fn(|_| a.next_u64());
        assert_ne!(first, other);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = CounterRng::new(7, 3);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn poisson_moments_small_mean() {
        // Inversion path.
        let mut rng = CounterRng::new(11, 0);
        let n = 1_000_000u64;
        let mean = 7.3;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let k = sample_poisson(&mut rng, mean) as f64;
            sum += k;
            sum_sq += k * k;
        }
        let m = sum / n as f64;
        let v = sum_sq / n as f64 - m * m;
        let sigma = libm::sqrt(mean / n as f64);
        assert!((m - mean).abs() < 4.0 * sigma, "mean {m}");
        // Var(S^2) for a Poisson sample is (mu + 2 mu^2)/n.
        let sigma_var = libm::sqrt((mean + 2.0 * mean * mean) / n as f64);
        assert!((v - mean).abs() < 4.0 * sigma_var, "variance {v}");
    }

    #[test]
    fn poisson_moments_large_mean() {
        // Rejection path.
        let mut rng = CounterRng::new(12, 0);
        let n = 200_000u64;
        let mean = 50.0;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let k = sample_poisson(&mut rng, mean) as f64;
            sum += k;
            sum_sq += k * k;
        }
        let m = sum / n as f64;
        let v = sum_sq / n as f64 - m * m;
        assert!(
            (m - mean).abs() < 4.0 * libm::sqrt(mean / n as f64),
            "mean {m}"
        );
        assert!((v - mean).abs() < 1.0, "variance {v}");
    }

    #[test]
    fn empirical_matches_analytic() {
        let m = mc(2.0, 0.5);
        let r = simulate_fidelity(&m, 1_000_000, 2024).unwrap();
        let exact = fidelity(&m);
        assert!(
            (r.empirical_fidelity - exact).abs() < 3.0 * r.std_error,
            "empirical {} vs analytic {exact} (se {})",
            r.empirical_fidelity,
            r.std_error
        );
        assert!(!r.degenerate);
    }

    #[test]
    fn degenerate_means_score_zero() {
        let m = mc(1.5, 1.5);
        let r = simulate_fidelity(&m, 200_000, 5).unwrap();
        assert!(r.degenerate);
        assert!(r.empirical_fidelity.abs() < 3.0 * r.std_error);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let m = mc(3.0, 1.0);
        let a = simulate_fidelity(&m, 50_000, 99).unwrap();
        let b = simulate_fidelity(&m, 50_000, 99).unwrap();
        assert_eq!(a, b);
        // partitioned runs merge to the same result regardless of order
        let c = simulate_fidelity_partitioned(&m, 50_000, 99, 8).unwrap();
        let d = simulate_fidelity_partitioned(&m, 50_000, 99, 8).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn partitioning_covers_all_trials() {
        let total: u64 = partition_trials(1_000_003, 16).map(|(_, n)| n).sum();
        assert_eq!(total, 1_000_003);
    }

    #[test]
    fn sequential_matches_single_shot_statistically() {
        // 10 bins of (0.2, 0.05) against a single shot of (2.0, 0.5).
        let bin = mc(0.2, 0.05);
        let total = mc(2.0, 0.5);
        let seq = simulate_sequential(&bin, 10, 400_000, 7).unwrap();
        let single = simulate_fidelity(&total, 400_000, 8).unwrap();
        let gap = (seq.empirical_fidelity - single.empirical_fidelity).abs();
        let se = libm::sqrt(seq.std_error * seq.std_error + single.std_error * single.std_error);
        assert!(gap < 3.0 * se, "gap {gap} vs se {se}");
        // one bin is the same distribution as a single shot
        let one = simulate_sequential(&total, 1, 100_000, 21).unwrap();
        let direct = simulate_fidelity(&total, 100_000, 21).unwrap();
        assert_eq!(one.empirical_fidelity, direct.empirical_fidelity);
    }

    #[test]
    fn zero_trials_rejected() {
        let m = mc(1.0, 0.2);
        assert!(simulate_fidelity(&m, 0, 1).is_err());
        assert!(simulate_sequential(&m, 10, 0, 1).is_err());
        assert!(simulate_sequential(&m, 0, 10, 1).is_err());
    }
}
