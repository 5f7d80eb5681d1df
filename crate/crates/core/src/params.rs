//! Model parameters, the balancedness predicate and the integer targets the
//! online algorithm works with.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack applied before flooring so `0.8 * log2(1024)` lands on 8, not 7.
const FLOOR_SLACK: f64 = 1e-9;

pub(crate) fn floor_int(x: f64) -> i64 {
    (x + FLOOR_SLACK).floor() as i64
}

pub(crate) fn ceil_int(x: f64) -> i64 {
    (x - FLOOR_SLACK).ceil() as i64
}

/// Balance fraction γ. Values equal to a fraction with denominator at most
/// 64 are also kept as that exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gamma {
    value: f64,
    #[serde(skip)]
    ratio: Option<(u64, u64)>,
}

impl Gamma {
    pub const MAX_DENOMINATOR: u64 = 64;

    /// Any γ in (0, 1); the parameter record narrows this to (0, 1/2].
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Param(format!("gamma = {value} must lie in (0, 1)")));
        }
        let ratio = (1..=Self::MAX_DENOMINATOR).find_map(|den| {
            let num = (value * den as f64).round() as u64;
            (num > 0 && num < den && num as f64 / den as f64 == value).then_some((num, den))
        });
        Ok(Gamma { value, ratio })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `(numerator, denominator)` in lowest terms, when γ is a small rational.
    pub fn ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }

    /// 1 − γ.
    pub fn complement(&self) -> Gamma {
        match self.ratio {
            Some((g, h)) => Gamma { value: (h - g) as f64 / h as f64, ratio: Some((h - g, h)) },
            None => Gamma { value: 1.0 - self.value, ratio: None },
        }
    }

    /// Splits `alpha` into `(alpha*γ, alpha*(1-γ))` when both are integers.
    pub fn integer_split(&self, alpha: u64) -> Result<(u64, u64)> {
        match self.ratio {
            Some((g, h)) if (alpha * g).is_multiple_of(h) => {
                let left = alpha * g / h;
                Ok((left, alpha - left))
            }
            _ if alpha == 0 => Ok((0, 0)),
            _ => Err(Error::NonIntegerSplit { product: "alpha*gamma", value: alpha as f64 * self.value }),
        }
    }

    /// Smallest positive α admitting an integer split.
    pub fn split_step(&self) -> Option<u64> {
        self.ratio.map(|(_, h)| h)
    }
}

/// γ-balancedness of a set with `l_count` vertices in L and `r_count` in R:
/// either side sits strictly within distance 1 of γ|I|.
pub fn is_gamma_balanced(l_count: u64, r_count: u64, gamma: &Gamma) -> bool {
    let total = l_count + r_count;
    match gamma.ratio {
        Some((g, h)) => {
            // |h*l - g*total| < h, likewise for r
            let target = (g * total) as i128;
            let h = h as i128;
            ((h * l_count as i128) - target).abs() < h || ((h * r_count as i128) - target).abs() < h
        }
        None => {
            let target = gamma.value * total as f64;
            (l_count as f64 - target).abs() < 1.0 || (r_count as f64 - target).abs() < 1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub n: usize,
    pub p: f64,
    pub gamma: Gamma,
    pub epsilon: f64,
    pub mu: f64,
}

impl Params {
    /// μ defaults to ε²/2.
    pub fn new(n: usize, p: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Param("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Param(format!("p = {p} must lie in [0, 1]")));
        }
        if gamma > 0.5 && gamma < 1.0 {
            return Err(Error::GammaAboveHalf(gamma));
        }
        let gamma = Gamma::new(gamma)?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Param(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        Ok(Params { n, p, gamma, epsilon, mu: epsilon * epsilon / 2.0 })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Param(format!("mu = {mu} must lie in (0, 1)")));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Param("n must be at least 1".into()));
        }
        self.n = n;
        Ok(self)
    }

    /// b = 1/(1-p); infinite at p = 1.
    pub fn b(&self) -> f64 {
        1.0 / (1.0 - self.p)
    }

    /// log_b n. Requires p in (0, 1).
    pub fn log_b_n(&self) -> Result<f64> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Param(format!("log_b n needs p in (0, 1), got {}", self.p)));
        }
        Ok((self.n as f64).ln() / self.b().ln())
    }

    pub fn alpha_stat(&self) -> Result<f64> {
        let g = self.gamma.value();
        Ok(self.log_b_n()? / (g * (1.0 - g)))
    }

    pub fn alpha_comp(&self) -> Result<f64> {
        Ok(self.log_b_n()? / self.gamma.value())
    }

    /// ceil((1+ε) α_COMP): the size the impossibility side is about.
    pub fn above_comp_target(&self) -> Result<u64> {
        Ok(ceil_int((1.0 + self.epsilon) * self.alpha_comp()?).max(0) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub alpha_stat: f64,
    pub alpha_comp: f64,
    pub t1: u64,
    pub t2: u64,
    pub tau_target: u64,
}

pub fn compute_thresholds(params: &Params) -> Result<Thresholds> {
    if params.n < 2 {
        return Err(Error::Param("thresholds need n >= 2".into()));
    }
    let log_b_n = params.log_b_n()?;
    let gamma = &params.gamma;
    let t1 = floor_int((1.0 - params.epsilon) * log_b_n).max(1) as u64;
    let cap = match gamma.ratio() {
        Some((g, h)) => (h - g) * t1 / g,
        None => floor_int((1.0 - gamma.value()) / gamma.value() * t1 as f64).max(0) as u64,
    };
    let t2 = (1..=cap)
        .rev()
        .find(|&r| is_gamma_balanced(t1, r, gamma))
        .ok_or(Error::NoBalancedPartner { t1, gamma: gamma.value() })?;
    let tau_target = floor_int((1.0 - params.mu) * log_b_n).max(1) as u64;
    Ok(Thresholds {
        alpha_stat: params.alpha_stat()?,
        alpha_comp: params.alpha_comp()?,
        t1,
        t2,
        tau_target,
    })
}
