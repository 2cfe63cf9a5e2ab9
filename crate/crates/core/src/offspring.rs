//! Offspring laws for the branching analysis: the two-parameter Janardan
//! ("perturbed Poisson") family plus its Poisson and Bernoulli limit
//! comparators, behind one enum with a uniform pmf / pgf / moment / sampling
//! surface.
//!
//! Math notes for the Janardan law (λ > 0, 0 < μ < λ):
//!
//! - zero class: `p_0 = e^{-λ}`
//! - pgf: `P(s) = ((s-1)(μ-λ)e^{-λ} + s λ e^{-μ(1-s)}) / (μ(s-1) + λ)`
//! - mean: `Eξ = (μ/λ)(e^{-λ} + λ - 1) + (1 - e^{-λ})`
//!
//! The textbook pmf for m ≥ 1 subtracts partial exponential sums and cancels
//! catastrophically when λ - μ is large. This module instead evaluates the
//! equivalent all-positive series
//!
//! ```text
//! p_m = λ μ^{m-1} e^{-λ} K_m(λ-μ) / m!,   K_m(x) = Σ_{k≥0} [m/(m+k)] x^k / k!
//! ```
//!
//! (the exponential-series remainder rewritten through Kummer's
//! transformation), in log space, so every mass is positive by construction
//! and accurate to a few ulps even deep in the tail.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::FrequencyTable;

/// Default tail mass excluded when truncating a pmf table.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Hard cap on tabulated classes before declaring non-convergence.
pub const MAX_PMF_TERMS: usize = 1_000_000;

/// Relative closeness of μ to λ at which evaluation dispatches to the
/// analytic Poisson limit (the closed forms degenerate to 0/0 at μ = λ).
const POISSON_LIMIT_REL: f64 = 1e-9;

/// Relative term size at which the positive series is truncated.
const SERIES_REL_EPS: f64 = 1e-18;

/// Validated parameters of the Janardan offspring law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JanardanParams {
    lambda: f64,
    mu: f64,
}

impl JanardanParams {
    /// Requires `lambda > 0` and `0 < mu < lambda`, both finite.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive and finite, got {mu}"
            )));
        }
        if mu >= lambda {
            return Err(Error::InvalidParameter(format!(
                "mu must satisfy 0 < mu < lambda, got mu = {mu} with lambda = {lambda}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// μ within relative distance 1e-9 of λ: evaluate via the Poisson limit
    /// instead of the degenerating closed forms.
    pub(crate) fn poisson_degenerate(&self) -> bool {
        (self.lambda - self.mu) / self.lambda < POISSON_LIMIT_REL
    }

    /// Probability mass at class `m`.
    pub fn pmf(&self, m: u32) -> f64 {
        if self.poisson_degenerate() {
            return poisson_pmf(self.lambda, m);
        }
        if m == 0 {
            return (-self.lambda).exp();
        }
        let (ln_k, _) = kummer_log(m, self.lambda - self.mu);
        let ln_p = self.lambda.ln() + f64::from(m - 1) * self.mu.ln() - self.lambda + ln_k
            - ln_factorial(m);
        ln_p.exp()
    }
}

/// Offspring law of one individual: the Janardan family or one of its two
/// limiting comparators. Use the constructors (`janardan`, `poisson`,
/// `bernoulli`) so parameter invariants are checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OffspringModel {
    Janardan(JanardanParams),
    Poisson { lambda: f64 },
    Bernoulli { p: f64 },
}

impl OffspringModel {
    pub fn janardan(lambda: f64, mu: f64) -> Result<Self> {
        Ok(Self::Janardan(JanardanParams::new(lambda, mu)?))
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Poisson lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self::Poisson { lambda })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Bernoulli p must lie strictly inside (0, 1), got {p}"
            )));
        }
        Ok(Self::Bernoulli { p })
    }

    /// Probability mass at class `m`.
    pub fn pmf(&self, m: u32) -> f64 {
        match self {
            Self::Janardan(params) => params.pmf(m),
            Self::Poisson { lambda } => poisson_pmf(*lambda, m),
            Self::Bernoulli { p } => match m {
                0 => 1.0 - p,
                1 => *p,
                _ => 0.0,
            },
        }
    }

    /// Probability generating function `P(s) = E[s^ξ]` for `s ∈ [0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!(
                "pgf argument must lie in [0, 1], got {s}"
            )));
        }
        Ok(match self {
            Self::Janardan(params) if params.poisson_degenerate() => {
                (-params.lambda * (1.0 - s)).exp()
            }
            Self::Janardan(params) => {
                let (la, mu) = (params.lambda, params.mu);
                ((s - 1.0) * (mu - la) * (-la).exp() + s * la * (-mu * (1.0 - s)).exp())
                    / (mu * (s - 1.0) + la)
            }
            Self::Poisson { lambda } => (-lambda * (1.0 - s)).exp(),
            Self::Bernoulli { p } => 1.0 - p + p * s,
        })
    }

    /// Expected offspring count `Eξ`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Janardan(params) if params.poisson_degenerate() => params.lambda,
            Self::Janardan(params) => {
                let (la, mu) = (params.lambda, params.mu);
                (mu / la) * ((-la).exp() + la - 1.0) + (1.0 - (-la).exp())
            }
            Self::Poisson { lambda } => *lambda,
            Self::Bernoulli { p } => *p,
        }
    }

    /// Offspring variance `Var(ξ)` (closed form; cross-validated against pmf
    /// second moments in tests).
    pub fn variance(&self) -> f64 {
        match self {
            Self::Janardan(params) if params.poisson_degenerate() => params.lambda,
            Self::Janardan(params) => {
                let (la, mu) = (params.lambda, params.mu);
                let mean = self.mean();
                mu * mu - mean * mean
                    + (1.0 - (-la).exp()) * (1.0 - mu / la) * (1.0 - 2.0 * mu / la)
                    + mu * (3.0 - 2.0 * mu / la)
            }
            Self::Poisson { lambda } => *lambda,
            Self::Bernoulli { p } => p * (1.0 - p),
        }
    }

    /// Tabulates `p_0..p_M` where `M` is the first index with cumulative mass
    /// at least `1 - tail_eps`.
    pub fn pmf_table(&self, tail_eps: f64) -> Result<PmfTable> {
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::Domain(format!(
                "tail_eps must lie in (0, 1), got {tail_eps}"
            )));
        }
        if let Self::Bernoulli { p } = self {
            return Ok(PmfTable {
                probs: vec![1.0 - p, *p],
                cum: vec![1.0 - p, 1.0],
                tail_bound: 0.0,
            });
        }
        let target = 1.0 - tail_eps;
        let mut probs = Vec::new();
        let mut cum = Vec::new();
        let mut total = 0.0_f64;
        let mut m: u32 = 0;
        while total < target {
            if m as usize >= MAX_PMF_TERMS {
                return Err(Error::NonConvergence(format!(
                    "pmf table did not accumulate mass {target} within {MAX_PMF_TERMS} classes \
                     (reached {total} for {self})"
                )));
            }
            let p = self.pmf(m);
            total += p;
            probs.push(p);
            cum.push(total.min(1.0));
            m += 1;
        }
        Ok(PmfTable {
            probs,
            cum,
            tail_bound: (1.0 - total).max(0.0),
        })
    }

    /// `n` inverse-CDF draws folded into class frequencies; fully determined
    /// by `seed` (equivalent to replication stream 0).
    pub fn sample(&self, n: u64, seed: u64) -> Result<FrequencyTable> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let table = self.pmf_table(DEFAULT_TAIL_EPS)?;
        let mut rng = replication_rng(seed, 0);
        let mut counts = vec![0_u64; table.len()];
        for _ in 0..n {
            counts[table.draw(&mut rng) as usize] += 1;
        }
        FrequencyTable::from_counts(counts)
    }

    /// The raw draw sequence behind [`sample`](Self::sample) (same seed gives
    /// the sequence whose frequencies `sample` returns).
    pub fn draw_observations(&self, n: u64, seed: u64) -> Result<Vec<u32>> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let table = self.pmf_table(DEFAULT_TAIL_EPS)?;
        let mut rng = replication_rng(seed, 0);
        Ok((0..n).map(|_| table.draw(&mut rng)).collect())
    }
}

impl fmt::Display for OffspringModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Janardan(p) => write!(f, "JM({},{})", p.lambda, p.mu),
            Self::Poisson { lambda } => write!(f, "PM({lambda})"),
            Self::Bernoulli { p } => write!(f, "BM({p})"),
        }
    }
}

/// Truncated pmf with running cumulative sums; the basis for inverse-CDF
/// sampling and empirical-vs-exact comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable {
    probs: Vec<f64>,
    cum: Vec<f64>,
    tail_bound: f64,
}

impl PmfTable {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    /// Mass beyond the last tabulated class (at most the `tail_eps` used at
    /// construction).
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// One inverse-CDF draw: binary search for the smallest class whose
    /// cumulative mass exceeds the uniform variate. The residual tail
    /// (≤ tail_bound) maps to the last tabulated class.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let idx = self.cum.partition_point(|&c| c <= u);
        idx.min(self.len() - 1) as u32
    }
}

/// Deterministic generator for replication `stream` of a base `seed`.
///
/// Distinct streams of one seed are independent ChaCha8 keystreams, so a
/// simulation with R replications is reproducible from `(seed, 0..R)` without
/// seed arithmetic.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `ln K_m(x)` and the ratio `K'_m(x) / K_m(x)` for the all-positive series
/// `K_m(x) = Σ_{k≥0} [m/(m+k)] x^k / k!` (term recurrence
/// `a_k = a_{k-1} · x(m+k-1) / (k(m+k))`). Shared by the pmf and the
/// log-likelihood derivatives. Rescales on the fly, so it stays finite for
/// any representable `x ≥ 0`.
pub(crate) fn kummer_log(m: u32, x: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0 && x.is_finite());
    let mf = f64::from(m);
    if x == 0.0 {
        return (0.0, mf / (mf + 1.0));
    }
    const RESCALE_AT: f64 = 1e280;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut dsum = 0.0_f64;
    let mut log_scale = 0.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= x * (mf + k - 1.0) / (k * (mf + k));
        sum += term;
        dsum += term * k / x;
        if (term < SERIES_REL_EPS * sum && k > x) || term == 0.0 {
            break;
        }
        if sum > RESCALE_AT {
            term /= RESCALE_AT;
            sum /= RESCALE_AT;
            dsum /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
    }
    (sum.ln() + log_scale, dsum / sum)
}

fn poisson_pmf(lambda: f64, m: u32) -> f64 {
    (f64::from(m) * lambda.ln() - lambda - ln_factorial(m)).exp()
}

/// `ln m!`: exact iterative sum for small `m`, Stirling's series (absolute
/// error < 1e-17 beyond the crossover) for large `m`, so tabulating up to the
/// class cap stays O(1) per class.
pub(crate) fn ln_factorial(m: u32) -> f64 {
    if m <= 256 {
        (2..=u64::from(m)).map(|i| (i as f64).ln()).sum()
    } else {
        let n = f64::from(m);
        let n2 = n * n;
        (n + 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n * n2)
            + 1.0 / (1260.0 * n2 * n2 * n)
    }
}
