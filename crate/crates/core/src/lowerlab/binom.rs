//! Exact lower tail of a fair binomial, summed in log space.
//!
//! Each term uses Loader's saddle-point form of the binomial pmf
//! (Stirling remainder plus the `bd0` deviance), which keeps every term
//! accurate to a few ulps even for `t` near `10^6`.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

pub const MAX_TRIALS: u64 = 1_000_000;

/// `ln(sqrt(2 pi))`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Stirling series coefficients 1/12, 1/360, 1/1260, 1/1680, 1/1188.
const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// `ln(k!) - (k + 1/2) ln k + k - ln sqrt(2 pi)` for integer `k >= 1`.
fn stirlerr(k: u64) -> f64 {
    let n = k as f64;
    if k <= 15 {
        // 15! < 2^53, so the factorial is exact.
        let fact: u64 = (1..=k).product();
        return (fact as f64).ln() - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if k > 500 {
        (S0 - S1 / nn) / n
    } else if k > 80 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance `x ln(x / np) + np - x`, with a series near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let v2 = v * v;
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        for j in 1.. {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        unreachable!()
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(B = k)` for `B ~ Binomial(t, 1/2)`.
pub fn ln_pmf_half(t: u64, k: u64) -> f64 {
    if k > t {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == t {
        return -(t as f64) * LN_2;
    }
    let (tf, kf) = (t as f64, k as f64);
    let half = tf / 2.0;
    let lc = stirlerr(t) - stirlerr(k) - stirlerr(t - k) - bd0(kf, half) - bd0(tf - kf, half);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / tf).ln_1p();
    lc - 0.5 * lf
}

/// Largest `k` in the event `B - t/2 <= -x sqrt(t) / 2`, or `None` if empty.
fn cutoff(t: u64, x: f64) -> Option<u64> {
    let tf = t as f64;
    let c = (tf - x * tf.sqrt()) / 2.0;
    if c < 0.0 {
        None
    } else {
        Some((c.floor() as u64).min(t))
    }
}

fn check(t: u64, x: f64) -> Result<()> {
    if t > MAX_TRIALS {
        return Err(Error::out_of_range("t", t, format!("0..={MAX_TRIALS}")));
    }
    if x.is_nan() {
        return Err(Error::out_of_range("x", x, "a number"));
    }
    Ok(())
}

/// `ln P(B - t/2 <= -x sqrt(t) / 2)` for `B ~ Binomial(t, 1/2)`.
pub fn ln_binom_tail(t: u64, x: f64) -> Result<f64> {
    check(t, x)?;
    let Some(top) = cutoff(t, x) else {
        return Ok(f64::NEG_INFINITY);
    };
    if top == t {
        return Ok(0.0);
    }
    // Terms increase up to the mode, so the largest term is at min(top, t/2).
    let peak = top.min(t / 2);
    let ln_peak = ln_pmf_half(t, peak);
    let mut sum = 0.0;
    // Above the peak (only when top > t/2) terms decrease going up.
    for k in (peak + 1..=top).rev() {
        sum += (ln_pmf_half(t, k) - ln_peak).exp();
    }
    for k in (0..=peak).rev() {
        let rel = ln_pmf_half(t, k) - ln_peak;
        // Remaining terms shrink geometrically; e^-60 * 10^6 is far below 1 ulp.
        if rel < -60.0 {
            break;
        }
        sum += rel.exp();
    }
    // Rounding can push a near-certain tail a hair above ln 1.
    Ok((ln_peak + sum.ln()).min(0.0))
}

/// `F_t(-x sqrt(t) / 2) = P(B - t/2 <= -x sqrt(t) / 2)` for `B ~ Binomial(t, 1/2)`.
pub fn binom_tail_exact(t: u64, x: f64) -> Result<f64> {
    Ok(ln_binom_tail(t, x)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirlerr_continuity() {
        // Both branches agree at the switch point within a few ulps.
        let exact_16 = {
            let fact: f64 = (1..=16u64).map(|k| (k as f64).ln()).sum();
            fact - 16.5 * 16f64.ln() + 16.0 - LN_SQRT_2PI
        };
        assert!((stirlerr(16) - exact_16).abs() < 1e-13);
    }

    #[test]
    fn small_cases() {
        // {B <= 0} for t = 4.
        assert_eq!(binom_tail_exact(4, 2.0).unwrap(), 0.0625);
        assert_eq!(binom_tail_exact(4, -2.0).unwrap(), 1.0);
        assert_eq!(binom_tail_exact(4, -10.0).unwrap(), 1.0);
        assert_eq!(binom_tail_exact(4, 2.5).unwrap(), 0.0);
        assert_eq!(binom_tail_exact(0, 0.0).unwrap(), 1.0);
        // {B <= 2} for t = 4: 11/16.
        assert!((binom_tail_exact(4, 0.0).unwrap() - 11.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_args() {
        assert!(binom_tail_exact(MAX_TRIALS + 1, 0.0).is_err());
        assert!(binom_tail_exact(10, f64::NAN).is_err());
    }

    #[test]
    fn pmf_sums_to_one() {
        for t in [1u64, 7, 50, 999, 5000] {
            let total: f64 = (0..=t).map(|k| ln_pmf_half(t, k).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12, "t={t} total={total}");
        }
    }

    #[test]
    fn large_t_is_finite() {
        let p = binom_tail_exact(MAX_TRIALS, 3.0).unwrap();
        // Normal approximation: Phi(-3) ~ 1.35e-3.
        assert!((p - 1.35e-3).abs() < 1e-4, "{p}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn non_increasing_in_x(t in 0u64..3000, a in -80.0f64..80.0, b in -80.0f64..80.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(binom_tail_exact(t, hi).unwrap() <= binom_tail_exact(t, lo).unwrap());
            }
        }
    }
}
