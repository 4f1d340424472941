use crate::error::{invalid, Result};
use crate::prob::log_sum_exp;

/// `ln` of the `Bin(m, alpha)` pmf at `0..=m`.
fn log_binomial_pmf(m: u64, alpha: f64) -> Vec<f64> {
    let (la, lb) = (alpha.ln(), (-alpha).ln_1p());
    let mut out = Vec::with_capacity(m as usize + 1);
    let mut log_choose = 0.0;
    for k in 0..=m {
        if k > 0 {
            log_choose += ((m - k + 1) as f64).ln() - (k as f64).ln();
        }
        let a = if k == 0 { 0.0 } else { k as f64 * la };
        let b = if k == m { 0.0 } else { (m - k) as f64 * lb };
        out.push(log_choose + a + b);
    }
    out
}

fn check(m: u64, alpha: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("M must be at least 2, got {m}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `ln Pr{N >= N1 + 1}` with `N ~ Bin(M, alpha)`, `N1 ~ Bin(M - 1, alpha)`
/// independent.
fn log_numerator(m: u64, alpha: f64) -> f64 {
    let pn = log_binomial_pmf(m, alpha);
    let p1 = log_binomial_pmf(m - 1, alpha);
    // running ln Pr{N1 <= k - 1}
    let mut cdf = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(m as usize);
    for k in 1..=m as usize {
        cdf = log_sum_exp([cdf, p1[k - 1]]);
        terms.push(pn[k] + cdf.min(0.0));
    }
    log_sum_exp(terms)
}

/// `Pr{N >= N1 + 1 | N >= 1}` for independent `N ~ Bin(M, alpha)` and
/// `N1 ~ Bin(M - 1, alpha)`, summed exactly in log-space.
pub fn competition_probability(m: u64, alpha: f64) -> Result<f64> {
    check(m, alpha)?;
    if alpha == 1.0 {
        return Ok(1.0);
    }
    // ln(1 - (1 - alpha)^M)
    let log_denom = (-(m as f64 * (-alpha).ln_1p()).exp_m1()).ln();
    Ok((log_numerator(m, alpha) - log_denom).exp().min(1.0))
}

/// `Pr{N >= N1 + 1}` without conditioning on `N >= 1`.
pub fn competition_probability_unconditional(m: u64, alpha: f64) -> Result<f64> {
    check(m, alpha)?;
    if alpha == 1.0 {
        return Ok(1.0);
    }
    Ok(log_numerator(m, alpha).exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    // direct enumeration in linear space, small M only
    fn brute(m: u64, alpha: f64) -> (f64, f64) {
        let choose =
            |n: u64, k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let pmf = |n: u64, k: u64| {
            choose(n, k) * alpha.powi(k as i32) * (1.0 - alpha).powi((n - k) as i32)
        };
        let mut joint = 0.0;
        for k in 0..=m {
            for j in 0..m {
                if k >= j + 1 {
                    joint += pmf(m, k) * pmf(m - 1, j);
                }
            }
        }
        (joint, joint / (1.0 - (1.0 - alpha).powi(m as i32)))
    }

    #[test]
    fn hand_case() {
        // Pr{N >= N1 + 1} = 0.5 * 0.5 + 0.25 * 1 = 0.5, Pr{N >= 1} = 0.75
        assert!((competition_probability_unconditional(2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((competition_probability(2, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn matches_enumeration() {
        for &m in &[2u64, 3, 7, 20] {
            for &a in &[0.05, 0.3, 0.5, 0.9] {
                let (u, c) = brute(m, a);
                assert!((competition_probability_unconditional(m, a).unwrap() - u).abs() < 1e-12);
                assert!((competition_probability(m, a).unwrap() - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_one_and_large_m() {
        assert_eq!(competition_probability(100, 1.0).unwrap(), 1.0);
        let v = competition_probability(1_000_000, 1e-7).unwrap();
        assert!(v.is_finite() && v > 0.9);
        assert!(competition_probability(1, 0.5).is_err());
        assert!(competition_probability(5, 0.0).is_err());
    }
}
