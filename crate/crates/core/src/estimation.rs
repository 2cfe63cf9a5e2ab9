//! Parameter estimation for the Janardan family from offspring frequency
//! data: closed-form repeated-moment estimators, log-likelihood and score
//! evaluation (for stationarity checks; full ML optimization is out of
//! scope), and the Poisson-MLE comparator.
//!
//! Estimators, with `n` observations, zero-class count `f_0` and sample mean
//! `x̄`:
//!
//! ```text
//! λ̂ = ln n - ln f_0                       (matches E e^{-λ} to f_0/n)
//! μ̂ = λ̂ (x̄ - 1 + e^{-λ̂}) / (e^{-λ̂} + λ̂ - 1)   (matches Eξ to x̄)
//! ```
//!
//! Sampling noise can push μ̂ outside (0, λ̂); that is reported through the
//! `admissible` flag, never clamped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::{kummer_log, JanardanParams};

/// Offspring class frequencies `f_0..f_M` with positive total `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    freqs: Vec<u64>,
    n: u64,
}

/// Guard against absurd class indices in parsed input (a class of a billion
/// would force an equally large dense table).
const MAX_INPUT_CLASS: u64 = 10_000_000;

impl FrequencyTable {
    /// Builds from dense counts `f_0..f_M`; trailing empty classes are
    /// trimmed so equal samples compare equal.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidInput(
                "frequency table has no observations".into(),
            ));
        }
        let mut freqs = counts;
        while freqs.len() > 1 && *freqs.last().unwrap() == 0 {
            freqs.pop();
        }
        Ok(Self { freqs, n })
    }

    /// Builds by tallying raw observations.
    pub fn from_observations(obs: &[u32]) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::InvalidInput("observation list is empty".into()));
        }
        let max = *obs.iter().max().unwrap() as usize;
        let mut counts = vec![0_u64; max + 1];
        for &x in obs {
            counts[x as usize] += 1;
        }
        Self::from_counts(counts)
    }

    /// Parses a raw observation list: integers separated by whitespace
    /// (typically one per line).
    pub fn from_observation_text(text: &str) -> Result<Self> {
        let mut obs = Vec::new();
        for token in text.split_whitespace() {
            let value: u64 = token.parse().map_err(|_| {
                Error::InvalidInput(format!("cannot parse observation {token:?} as an integer"))
            })?;
            if value > MAX_INPUT_CLASS {
                return Err(Error::InvalidInput(format!(
                    "observation {value} exceeds the supported class range"
                )));
            }
            obs.push(value as u32);
        }
        Self::from_observations(&obs)
    }

    /// Parses frequency CSV: a `class,count` header followed by one row per
    /// class. Classes may appear in any order; duplicates are rejected.
    pub fn from_csv_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.trim_end_matches('\r').trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("frequency CSV is empty".into()))?;
        let normalized: String = header
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if normalized != "class,count" {
            return Err(Error::InvalidInput(format!(
                "frequency CSV must start with a 'class,count' header, found {header:?}"
            )));
        }
        let mut pairs: Vec<(u64, u64)> = Vec::new();
        for line in lines {
            let (class_s, count_s) = line.split_once(',').ok_or_else(|| {
                Error::InvalidInput(format!("frequency CSV row {line:?} is not 'class,count'"))
            })?;
            let class: u64 = class_s.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("cannot parse class {:?}", class_s.trim()))
            })?;
            let count: u64 = count_s.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("cannot parse count {:?}", count_s.trim()))
            })?;
            if class > MAX_INPUT_CLASS {
                return Err(Error::InvalidInput(format!(
                    "class {class} exceeds the supported range"
                )));
            }
            if pairs.iter().any(|&(c, _)| c == class) {
                return Err(Error::InvalidInput(format!(
                    "class {class} appears more than once"
                )));
            }
            pairs.push((class, count));
        }
        let max = pairs
            .iter()
            .map(|&(c, _)| c)
            .max()
            .ok_or_else(|| Error::InvalidInput("frequency CSV has no data rows".into()))?;
        let mut counts = vec![0_u64; max as usize + 1];
        for (class, count) in pairs {
            counts[class as usize] = count;
        }
        Self::from_counts(counts)
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    /// Total number of observations (always ≥ 1).
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Count in a class (0 beyond the table).
    pub fn count(&self, class: usize) -> u64 {
        self.freqs.get(class).copied().unwrap_or(0)
    }

    pub fn max_class(&self) -> usize {
        self.freqs.len() - 1
    }

    /// `x̄ = Σ m f_m / n`.
    pub fn sample_mean(&self) -> f64 {
        let weighted: f64 = self
            .freqs
            .iter()
            .enumerate()
            .map(|(m, &f)| m as f64 * f as f64)
            .sum();
        weighted / self.n as f64
    }

    /// `f_0 / n`, the empirical zero-class mass.
    pub fn zero_fraction(&self) -> f64 {
        self.count(0) as f64 / self.n as f64
    }
}

/// Repeated-moment estimates with their defining sample statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimates {
    pub lambda_hat: f64,
    pub mu_hat: f64,
    pub sample_mean: f64,
    pub zero_fraction: f64,
    /// True iff `0 < mu_hat < lambda_hat`; violations are reported, never
    /// clamped.
    pub admissible: bool,
}

/// Closed-form estimators matching `e^{-λ}` to the zero-class fraction and
/// the mean to the sample mean.
pub fn repeated_moment_estimate(freq: &FrequencyTable) -> Result<Estimates> {
    let f0 = freq.count(0);
    let n = freq.n();
    if f0 == 0 {
        return Err(Error::ZeroClass);
    }
    if f0 == n {
        return Err(Error::DegenerateSample);
    }
    let lambda_hat = (n as f64).ln() - (f0 as f64).ln();
    let sample_mean = freq.sample_mean();
    let exp_neg = (-lambda_hat).exp();
    let mu_hat = lambda_hat * (sample_mean - 1.0 + exp_neg) / (exp_neg + lambda_hat - 1.0);
    Ok(Estimates {
        lambda_hat,
        mu_hat,
        sample_mean,
        zero_fraction: f0 as f64 / n as f64,
        admissible: mu_hat > 0.0 && mu_hat < lambda_hat,
    })
}

/// `Σ_m f_m ln p_m` over the observed classes, via the stable pmf path.
/// Returns `-∞` when an observed class has mass that underflows to zero.
pub fn log_likelihood(params: JanardanParams, freq: &FrequencyTable) -> f64 {
    let mut total = 0.0_f64;
    for (m, &f) in freq.freqs().iter().enumerate() {
        if f == 0 {
            continue;
        }
        let p = params.pmf(m as u32);
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += f as f64 * p.ln();
    }
    total
}

/// Gradient `(∂logL/∂λ, ∂logL/∂μ)` of [`log_likelihood`] at `params`.
///
/// With `x = λ - μ` and the series `K_m` from the pmf, each class `m ≥ 1`
/// contributes `(1/λ - 1 + K'_m/K_m, (m-1)/μ - K'_m/K_m)`; class 0
/// contributes `(-1, 0)`. Validated against finite differences of
/// [`log_likelihood`] in the test suite.
pub fn score(params: JanardanParams, freq: &FrequencyTable) -> Result<(f64, f64)> {
    let (la, mu) = (params.lambda(), params.mu());
    let x = la - mu;
    let mut d_lambda = 0.0_f64;
    let mut d_mu = 0.0_f64;
    for (m, &f) in freq.freqs().iter().enumerate() {
        if f == 0 {
            continue;
        }
        let fm = f as f64;
        if m == 0 {
            d_lambda -= fm;
            continue;
        }
        if params.pmf(m as u32) <= 0.0 {
            return Err(Error::UnderflowingClass { class: m as u32 });
        }
        let (_, ratio) = kummer_log(m as u32, x);
        d_lambda += fm * (1.0 / la - 1.0 + ratio);
        d_mu += fm * ((m as f64 - 1.0) / mu - ratio);
    }
    Ok((d_lambda, d_mu))
}

/// The Poisson maximum-likelihood comparator: the sample mean.
pub fn poisson_mle(freq: &FrequencyTable) -> f64 {
    freq.sample_mean()
}
