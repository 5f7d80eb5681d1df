//! Finite-n moment formulas for Z_α, the number of γ-balanced independent
//! sets of size α with αγ vertices in L.
//!
//! * first moment: `E[Z_α] = C(n, αγ) C(n, α(1-γ)) (1-p)^{γ(1-γ)α²}`
//! * second-moment ratio at α_ε = (1-ε)α_STAT: a double sum over the
//!   overlaps `(i1, i2)` of two such sets of hypergeometric weights times
//!   `(1-p)^{-i1 i2}`
//! * the overlap exponent `q(i1, i2) = exp(-(i1+i2)(ln n - 2 ln α_ε) + i1 i2 ln b)`
//!
//! Everything is evaluated in log space.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::params::Gamma;

/// ln C(n, k); `-inf` when k > n.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k <= 256 {
        // short exact product, no cancellation between huge ln Γ values
        (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// ln Σ exp(x) with the maximum shifted out.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Param(format!("p = {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn ln_b(p: f64) -> f64 {
    -(1.0 - p).ln()
}

/// ln E[Z_α] for an α whose split `(αγ, α(1-γ))` is integral.
pub fn log_first_moment(n: u64, p: f64, gamma: &Gamma, alpha: u64) -> Result<f64> {
    check_p(p)?;
    let (left, right) = gamma.integer_split(alpha)?;
    for size in [left, right] {
        if size > n {
            return Err(Error::SplitExceedsN { size, n });
        }
    }
    Ok(log_first_moment_split(n, p, left, right))
}

/// ln E[Z] for sets with exactly `left` vertices in L and `right` in R.
pub fn log_first_moment_split(n: u64, p: f64, left: u64, right: u64) -> f64 {
    ln_choose(n, left) + ln_choose(n, right) - (left * right) as f64 * ln_b(p)
}

/// α_ε = (1-ε)α_STAT, rounded to the nearest α with an integral split.
pub fn alpha_epsilon_split(n: u64, p: f64, gamma: &Gamma, epsilon: f64) -> Result<(u64, u64)> {
    check_p(p)?;
    let g = gamma.value();
    let alpha_stat = (n as f64).ln() / ln_b(p) / (g * (1.0 - g));
    let alpha_eps = (1.0 - epsilon) * alpha_stat;
    let (left, right) = match gamma.ratio() {
        Some((num, den)) => {
            let alpha = den * (alpha_eps / den as f64).round() as u64;
            (alpha * num / den, alpha * (den - num) / den)
        }
        None => ((g * alpha_eps).round() as u64, ((1.0 - g) * alpha_eps).round() as u64),
    };
    for size in [left, right] {
        if size > n {
            return Err(Error::SplitExceedsN { size, n });
        }
    }
    Ok((left, right))
}

/// Log of the hypergeometric weight `C(a, i) C(n-a, a-i) / C(n, a)`.
fn ln_overlap_weight(n: u64, a: u64, i: u64) -> f64 {
    if a > n || a - i > n - a {
        return f64::NEG_INFINITY;
    }
    ln_choose(a, i) + ln_choose(n - a, a - i) - ln_choose(n, a)
}

/// ln(E[Z²]/E[Z]²) for side sizes `(left, right)`. Finite even where the
/// ratio itself exceeds the f64 range.
pub fn log_second_moment_ratio_split(n: u64, p: f64, left: u64, right: u64) -> Result<f64> {
    check_p(p)?;
    for size in [left, right] {
        if size > n {
            return Err(Error::SplitExceedsN { size, n });
        }
    }
    let lb = ln_b(p);
    let w1: Vec<f64> = (0..=left).map(|i| ln_overlap_weight(n, left, i)).collect();
    let w2: Vec<f64> = (0..=right).map(|i| ln_overlap_weight(n, right, i)).collect();
    let terms = w1
        .iter()
        .enumerate()
        .flat_map(|(i1, a)| w2.iter().enumerate().map(move |(i2, b)| a + b + (i1 * i2) as f64 * lb));
    Ok(log_sum_exp(terms))
}

/// E[Z²]/E[Z]² for side sizes `(left, right)`; `+inf` past the f64 range.
pub fn second_moment_ratio_split(n: u64, p: f64, left: u64, right: u64) -> Result<f64> {
    log_second_moment_ratio_split(n, p, left, right).map(f64::exp)
}

/// ln(E[Z²]/E[Z]²) at α_ε.
pub fn log_second_moment_ratio(n: u64, p: f64, gamma: &Gamma, epsilon: f64) -> Result<f64> {
    let (left, right) = alpha_epsilon_split(n, p, gamma, epsilon)?;
    log_second_moment_ratio_split(n, p, left, right)
}

/// E[Z²]/E[Z]² at α_ε.
pub fn second_moment_ratio(n: u64, p: f64, gamma: &Gamma, epsilon: f64) -> Result<f64> {
    log_second_moment_ratio(n, p, gamma, epsilon).map(f64::exp)
}

/// ln q(i1, i2) for a given α_ε.
pub fn log_q_at(n: u64, p: f64, alpha_eps: f64, i1: u64, i2: u64) -> f64 {
    let linear = if i1 + i2 == 0 { 0.0 } else { -((i1 + i2) as f64) * ((n as f64).ln() - 2.0 * alpha_eps.ln()) };
    let cross = if i1 * i2 == 0 { 0.0 } else { (i1 * i2) as f64 * ln_b(p) };
    linear + cross
}

/// q(i1, i2) at α_ε = (1-ε)α_STAT, for `0 <= i1 <= γα_ε`, `0 <= i2 <= (1-γ)α_ε`.
pub fn overlap_exponent_q(n: u64, p: f64, gamma: &Gamma, epsilon: f64, i1: u64, i2: u64) -> Result<f64> {
    let (left, right) = alpha_epsilon_split(n, p, gamma, epsilon)?;
    if i1 > left || i2 > right {
        return Err(Error::OverlapOutOfRange { i1, i2, max1: left, max2: right });
    }
    Ok(log_q_at(n, p, (left + right) as f64, i1, i2).exp())
}

/// `(i1, i2, q)` over the full overlap range, row-major.
pub fn q_grid(n: u64, p: f64, gamma: &Gamma, epsilon: f64) -> Result<Vec<(u64, u64, f64)>> {
    let (left, right) = alpha_epsilon_split(n, p, gamma, epsilon)?;
    let alpha_eps = (left + right) as f64;
    Ok((0..=left)
        .flat_map(|i1| (0..=right).map(move |i2| (i1, i2, log_q_at(n, p, alpha_eps, i1, i2).exp())))
        .collect())
}

/// Smallest α > 0 with an integral split and E[Z_α] <= `threshold`.
pub fn first_moment_crossing(n: u64, p: f64, gamma: &Gamma, threshold: f64) -> Result<Option<u64>> {
    check_p(p)?;
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Param(format!("threshold = {threshold} must be positive")));
    }
    let step = gamma
        .split_step()
        .ok_or_else(|| Error::Param("first-moment scan needs a rational gamma".into()))?;
    let ln_t = threshold.ln();
    let mut alpha = step;
    while let Ok((left, right)) = gamma.integer_split(alpha) {
        if left > n || right > n {
            break;
        }
        if log_first_moment_split(n, p, left, right) <= ln_t {
            return Ok(Some(alpha));
        }
        alpha += step;
    }
    Ok(None)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub alpha: u64,
    pub log_first_moment: f64,
    pub alpha_eps_split: (u64, u64),
    pub ratio: f64,
    pub log_ratio: f64,
    pub crossing_alpha: Option<u64>,
    #[serde(skip)]
    pub q_grid: Vec<(u64, u64, f64)>,
}

pub fn moment_report(n: u64, p: f64, gamma: &Gamma, epsilon: f64, alpha: u64, threshold: f64) -> Result<MomentReport> {
    let log_ratio = log_second_moment_ratio(n, p, gamma, epsilon)?;
    Ok(MomentReport {
        alpha,
        log_first_moment: log_first_moment(n, p, gamma, alpha)?,
        alpha_eps_split: alpha_epsilon_split(n, p, gamma, epsilon)?,
        ratio: log_ratio.exp(),
        log_ratio,
        crossing_alpha: first_moment_crossing(n, p, gamma, threshold)?,
        q_grid: q_grid(n, p, gamma, epsilon)?,
    })
}
