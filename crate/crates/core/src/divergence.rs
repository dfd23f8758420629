//! Bernoulli KL-divergence calculus, in nats.

use crate::error::{Error, Result};

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { name, value })
    }
}

/// `x ln(x / y)` with `0 ln 0 = 0` and `ln(0/0) = 0`.
fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Unchecked `𝒦(p, q)`; callers guarantee `p, q ∈ [0, 1]`.
#[inline]
pub(crate) fn kl_unchecked(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    let kl = xlogx_over_y(p, q) + xlogx_over_y(1.0 - p, 1.0 - q);
    // Rounding can push tiny divergences a hair below zero.
    kl.max(0.0)
}

/// `𝒦(p, q) = p ln(p/q) + (1−p) ln((1−p)/(1−q))`.
///
/// Returns `+∞` when `q ∈ {0, 1}` and `p ≠ q`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(kl_unchecked(p, q))
}

/// Left-truncated divergence: `0` when `p > q`, otherwise `𝒦(p, q)`.
pub fn kl_truncated(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(if p > q { 0.0 } else { kl_unchecked(p, q) })
}

/// `D_inf` for the Bernoulli family, which reduces to `𝒦(μ_a, μ*)`.
pub fn d_inf_bernoulli(mu_a: f64, mu_star: f64) -> Result<f64> {
    check_probability("mu_a", mu_a)?;
    check_probability("mu_star", mu_star)?;
    if mu_a >= mu_star {
        return Err(Error::NotSuboptimal { mu_a, mu_star });
    }
    if mu_a == 0.0 || mu_star == 1.0 {
        return Err(Error::NotApplicable(format!(
            "D_inf requires 0 < mu_a < mu_star < 1, got ({mu_a}, {mu_star})"
        )));
    }
    Ok(kl_unchecked(mu_a, mu_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // 𝒦(0.8, 0.9) and 𝒦(0.1, 0.9) evaluated with 50-digit arithmetic (mpmath).
    const KL_08_09: f64 = 0.044_403_007_586_882_3;
    const KL_01_09: f64 = 1.757_779_661_868_975_5;

    #[test]
    fn identity_is_zero() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(kl_bernoulli(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_values() {
        assert_abs_diff_eq!(kl_bernoulli(0.8, 0.9).unwrap(), KL_08_09, epsilon = 1e-15);
        assert_abs_diff_eq!(kl_bernoulli(0.1, 0.9).unwrap(), KL_01_09, epsilon = 1e-14);
        assert_abs_diff_eq!(
            kl_bernoulli(0.0, 0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn boundary_q_is_infinite() {
        assert_eq!(kl_bernoulli(0.3, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.3, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(kl_bernoulli(1.0, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            kl_bernoulli(-0.1, 0.5),
            Err(Error::Domain { name: "p", .. })
        ));
        assert!(matches!(
            kl_bernoulli(0.5, 1.5),
            Err(Error::Domain { name: "q", .. })
        ));
        assert!(kl_truncated(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn truncated_branches() {
        assert_eq!(kl_truncated(0.9, 0.8).unwrap(), 0.0);
        assert_eq!(
            kl_truncated(0.8, 0.9).unwrap(),
            kl_bernoulli(0.8, 0.9).unwrap()
        );
        assert_eq!(kl_truncated(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn d_inf() {
        assert_abs_diff_eq!(
            d_inf_bernoulli(0.8, 0.9).unwrap(),
            KL_08_09,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d_inf_bernoulli(0.1, 0.9).unwrap(),
            KL_01_09,
            epsilon = 1e-14
        );
        assert!(matches!(
            d_inf_bernoulli(0.9, 0.9),
            Err(Error::NotSuboptimal { .. })
        ));
        assert!(d_inf_bernoulli(0.0, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn self_divergence_vanishes(p in 0.0f64..=1.0) {
            prop_assert_eq!(kl_bernoulli(p, p).unwrap(), 0.0);
        }

        #[test]
        fn positive_off_diagonal(p in 0.0f64..=1.0, q in 0.001f64..0.999) {
            prop_assume!((p - q).abs() > 1e-6);
            prop_assert!(kl_bernoulli(p, q).unwrap() > 0.0);
        }

        #[test]
        fn increasing_right_of_p(p in 0.0f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let q1 = p + (1.0 - p) * lo * 0.999;
            let q2 = p + (1.0 - p) * hi * 0.999;
            prop_assert!(kl_bernoulli(p, q1).unwrap() < kl_bernoulli(p, q2).unwrap());
        }

        #[test]
        fn closed_forms_at_endpoints(q in 0.0001f64..0.9999) {
            let k0 = kl_bernoulli(0.0, q).unwrap();
            let k1 = kl_bernoulli(1.0, q).unwrap();
            prop_assert!((k0 + (1.0 - q).ln()).abs() <= 1e-12 * k0.max(1.0));
            prop_assert!((k1 + q.ln()).abs() <= 1e-12 * k1.max(1.0));
        }
    }
}
