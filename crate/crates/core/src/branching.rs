//! Galton-Watson analysis on top of any offspring law: criticality
//! classification, extinction probability (smallest fixed point of the pgf on
//! [0, 1]), per-generation extinction curves and extinction-time mass, and
//! seeded generation-size simulation.
//!
//! Conventions: the process starts from a single ancestor (`X_0 = 1`);
//! `q_n = Pr(X_n = 0)` satisfies `q_1 = P(0)`, `q_{n+1} = P(q_n)` and
//! increases to the extinction probability `q*`, the smallest root of
//! `P(s) = s` in [0, 1] (`q* = 1` unless the mean offspring count exceeds 1).

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::{replication_rng, OffspringModel, PmfTable, DEFAULT_TAIL_EPS};

/// Near-critical guard: a mean offspring count within this distance of 1
/// classifies as critical (and extinction probability 1).
pub const CRITICAL_MEAN_EPS: f64 = 1e-12;

/// Default cap on simulated generation sizes.
pub const DEFAULT_POPULATION_CAP: u64 = 1_000_000_000;

/// Bisection bracket's upper end, excluding the trivial fixed point s = 1.
const BRACKET_TOP: f64 = 1.0 - 1e-9;

/// Iteration cap for the fixed-point cross-check.
const FIXED_POINT_CAP: usize = 1_000_000;

/// Fixed-point step size below which the iteration is deemed converged.
const FIXED_POINT_TOL: f64 = 1e-13;

/// Tolerance for the bisection-vs-fixed-point agreement gate.
const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalityClass {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for CriticalityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Subcritical => "subcritical",
            Self::Critical => "critical",
            Self::Supercritical => "supercritical",
        })
    }
}

/// Criticality verdict for one offspring law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criticality {
    pub class: CriticalityClass,
    pub mean_offspring: f64,
    /// For a Janardan law with λ ≥ 1: the threshold g(λ) such that the
    /// process is supercritical exactly when μ > g(λ). Absent otherwise
    /// (for λ < 1 every admissible μ is subcritical).
    pub threshold_mu: Option<f64>,
}

/// Extinction probabilities by generation, `q[0] = q_1` through `q_N`,
/// together with their limit `q*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionCurve {
    pub model: OffspringModel,
    pub q: Vec<f64>,
    pub limit: f64,
    pub n_generations: u32,
}

/// Distribution of the extinction time `T` truncated at the horizon:
/// `pt[n-1] = Pr(T = n) = q_n - q_{n-1}`, with `cumulative` equal to the
/// extinction curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionTimeDist {
    pub pt: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// One simulated population path `X_0..X_K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationTrace {
    /// Generation sizes starting from the single ancestor (`sizes[0] = 1`).
    pub sizes: Vec<u64>,
    /// The path ended in extinction (last size is zero).
    pub extinct: bool,
    /// The path was stopped by the population cap, not by extinction.
    pub truncated: bool,
    /// Base seed that produced the trace.
    pub seed: u64,
}

/// Aggregate of many independent traces (one replication stream per trace).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub traces: u64,
    pub extinct: u64,
    pub truncated: u64,
    pub extinct_fraction: f64,
    /// `extinct_by_generation[n-1]` counts traces with `X_n = 0`, i.e.
    /// extinct by generation `n` (cumulative tally; last entry = `extinct`).
    pub extinct_by_generation: Vec<u64>,
}

/// Classifies the process by its mean offspring count, reporting the
/// criticality threshold g(λ) for Janardan laws with λ ≥ 1.
pub fn classify(model: &OffspringModel) -> Criticality {
    let mean = model.mean();
    let class = if (mean - 1.0).abs() < CRITICAL_MEAN_EPS {
        CriticalityClass::Critical
    } else if mean < 1.0 {
        CriticalityClass::Subcritical
    } else {
        CriticalityClass::Supercritical
    };
    let threshold_mu = match model {
        OffspringModel::Janardan(p) if p.lambda() >= 1.0 => Some(critical_mu_value(p.lambda())),
        _ => None,
    };
    Criticality {
        class,
        mean_offspring: mean,
        threshold_mu,
    }
}

/// The criticality boundary g(λ) = λe^{-λ} / (e^{-λ} - (1-λ)): a Janardan
/// process with λ ≥ 1 is supercritical exactly when μ > g(λ).
pub fn critical_mu(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if lambda < 1.0 {
        return Err(Error::Domain(format!(
            "no supercritical mu exists for lambda = {lambda}: with lambda < 1 the process is \
             subcritical for every admissible mu"
        )));
    }
    Ok(critical_mu_value(lambda))
}

pub(crate) fn critical_mu_value(lambda: f64) -> f64 {
    lambda * (-lambda).exp() / ((-lambda).exp() - (1.0 - lambda))
}

fn pgf_at(model: &OffspringModel, s: f64) -> f64 {
    model
        .pgf(s)
        .expect("pgf argument is kept inside [0, 1] by construction")
}

/// Extinction probability `q*`: the smallest root of `P(s) = s` in [0, 1].
///
/// Returns 1 for subcritical and critical laws. For supercritical laws the
/// root is found by bisection on `h(s) = P(s) - s` over [0, 1 - 1e-9],
/// refined until `|h| ≤ tol`, then cross-validated against the fixed-point
/// iteration `s ← P(s)` started from `P(0)`.
pub fn extinction_probability(model: &OffspringModel, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Domain(format!(
            "tolerance must lie in (0, 1e-6], got {tol}"
        )));
    }
    if classify(model).class != CriticalityClass::Supercritical {
        return Ok(1.0);
    }

    let h = |s: f64| pgf_at(model, s) - s;
    let mut a = 0.0_f64;
    let mut b = BRACKET_TOP;
    if !(h(a) > 0.0 && h(b) < 0.0) {
        return Err(Error::InternalConsistency(format!(
            "{model} classifies as supercritical (mean {}) but P(s) - s has no sign change on \
             [0, {BRACKET_TOP}]",
            model.mean()
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if h(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 {
            break;
        }
    }
    let root = 0.5 * (a + b);
    if h(root).abs() > tol {
        return Err(Error::NonConvergence(format!(
            "bisection residual {} exceeds the requested tolerance {tol}, which is below \
             achievable double precision",
            h(root).abs()
        )));
    }

    // Fixed-point cross-check. Convergence is geometric with rate P'(q*), so
    // very near criticality the iteration may not settle within the cap; the
    // check is skipped in that case (bisection alone is then authoritative).
    let mut s = pgf_at(model, 0.0);
    let mut converged = false;
    for _ in 0..FIXED_POINT_CAP {
        let next = pgf_at(model, s);
        let step = (next - s).abs();
        s = next;
        if step <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    if converged && (s - root).abs() > CROSS_CHECK_TOL {
        return Err(Error::InternalConsistency(format!(
            "bisection root {root} and fixed-point limit {s} disagree beyond {CROSS_CHECK_TOL} \
             for {model}"
        )));
    }
    Ok(root)
}

/// Extinction probabilities `q_1..q_N` via pgf iteration, plus their limit.
pub fn extinction_curve(model: &OffspringModel, n_generations: u32) -> Result<ExtinctionCurve> {
    if n_generations == 0 {
        return Err(Error::Domain("n_generations must be at least 1".into()));
    }
    let limit = extinction_probability(model, 1e-12)?;
    let mut q = Vec::with_capacity(n_generations as usize);
    let mut s = pgf_at(model, 0.0);
    q.push(s);
    for _ in 1..n_generations {
        // The exact iterates increase toward the limit; clamp away sub-ulp
        // rounding wobble once they have effectively converged.
        s = pgf_at(model, s).max(s).min(limit);
        q.push(s);
    }
    Ok(ExtinctionCurve {
        model: *model,
        q,
        limit,
        n_generations,
    })
}

/// Extinction-time mass `Pr(T = n) = q_n - q_{n-1}` for `n = 1..N`.
///
/// Every difference and the running re-sum are exact in floating point:
/// `q_{n+1} ≤ p_0 + (1 - p_0) q_n` forces `q_{n+1}/q_n < 2`, so each
/// subtraction is a Sterbenz-exact operation. Tests assert the telescoping
/// identity `Σ pt = q_N` bit-for-bit.
pub fn extinction_time_pmf(
    model: &OffspringModel,
    n_generations: u32,
) -> Result<ExtinctionTimeDist> {
    let curve = extinction_curve(model, n_generations)?;
    let mut pt = Vec::with_capacity(curve.q.len());
    let mut prev = 0.0;
    for &qn in &curve.q {
        pt.push(qn - prev);
        prev = qn;
    }
    Ok(ExtinctionTimeDist {
        pt,
        cumulative: curve.q,
    })
}

/// One population trace from a single ancestor: `X_{n+1}` is the sum of
/// `X_n` independent offspring draws. The trace stops at extinction, at
/// `max_generations`, or once a generation reaches `population_cap` (then
/// flagged `truncated`, not extinct).
pub fn simulate_generations(
    model: &OffspringModel,
    seed: u64,
    max_generations: u32,
    population_cap: u64,
) -> Result<GenerationTrace> {
    check_simulation_args(max_generations, population_cap)?;
    let table = model.pmf_table(DEFAULT_TAIL_EPS)?;
    let mut rng = replication_rng(seed, 0);
    Ok(run_trace(
        &table,
        &mut rng,
        seed,
        max_generations,
        population_cap,
    ))
}

/// `traces` independent paths, one replication stream per trace, folded into
/// extinction counts (per-generation cumulative tallies included).
pub fn simulate_many(
    model: &OffspringModel,
    seed: u64,
    traces: u64,
    max_generations: u32,
    population_cap: u64,
) -> Result<SimulationSummary> {
    check_simulation_args(max_generations, population_cap)?;
    if traces == 0 {
        return Err(Error::Domain("trace count must be at least 1".into()));
    }
    let table = model.pmf_table(DEFAULT_TAIL_EPS)?;
    let mut extinct = 0_u64;
    let mut truncated = 0_u64;
    let mut extinct_at = vec![0_u64; max_generations as usize];
    for stream in 0..traces {
        let mut rng = replication_rng(seed, stream);
        let trace = run_trace(&table, &mut rng, seed, max_generations, population_cap);
        if trace.extinct {
            extinct += 1;
            extinct_at[trace.sizes.len() - 2] += 1;
        }
        if trace.truncated {
            truncated += 1;
        }
    }
    let mut extinct_by_generation = extinct_at;
    for i in 1..extinct_by_generation.len() {
        extinct_by_generation[i] += extinct_by_generation[i - 1];
    }
    Ok(SimulationSummary {
        traces,
        extinct,
        truncated,
        extinct_fraction: extinct as f64 / traces as f64,
        extinct_by_generation,
    })
}

fn check_simulation_args(max_generations: u32, population_cap: u64) -> Result<()> {
    if max_generations == 0 {
        return Err(Error::Domain("max_generations must be at least 1".into()));
    }
    if population_cap == 0 {
        return Err(Error::Domain("population_cap must be at least 1".into()));
    }
    Ok(())
}

fn run_trace(
    table: &PmfTable,
    rng: &mut ChaCha8Rng,
    seed: u64,
    max_generations: u32,
    population_cap: u64,
) -> GenerationTrace {
    let mut sizes = vec![1_u64];
    let mut truncated = false;
    for _ in 0..max_generations {
        let current = *sizes.last().expect("sizes starts non-empty");
        if current == 0 {
            break;
        }
        let mut next = 0_u64;
        for _ in 0..current {
            next = next.saturating_add(u64::from(table.draw(rng)));
        }
        sizes.push(next);
        if next >= population_cap {
            truncated = true;
            break;
        }
    }
    let extinct = *sizes.last().expect("sizes non-empty") == 0;
    GenerationTrace {
        sizes,
        extinct,
        truncated,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jm(lambda: f64, mu: f64) -> OffspringModel {
        OffspringModel::janardan(lambda, mu).unwrap()
    }

    fn pm(lambda: f64) -> OffspringModel {
        OffspringModel::poisson(lambda).unwrap()
    }

    #[test]
    fn classification_follows_the_mean() {
        let c = classify(&jm(0.8, 0.4));
        assert_eq!(c.class, CriticalityClass::Subcritical);
        assert_eq!(c.threshold_mu, None);

        let c = classify(&jm(2.0, 0.2));
        assert_eq!(c.class, CriticalityClass::Subcritical);
        assert!((c.threshold_mu.unwrap() - 0.2384).abs() < 5e-5);

        let c = classify(&jm(2.0, 1.0));
        assert_eq!(c.class, CriticalityClass::Supercritical);
        assert!(c.mean_offspring > 1.0);

        assert_eq!(classify(&pm(1.0)).class, CriticalityClass::Critical);
        assert_eq!(
            classify(&OffspringModel::bernoulli(0.55).unwrap()).class,
            CriticalityClass::Subcritical
        );
    }

    #[test]
    fn the_threshold_mu_is_exactly_critical() {
        let mu = critical_mu(2.0).unwrap();
        let c = classify(&jm(2.0, mu));
        assert_eq!(c.class, CriticalityClass::Critical);
        assert!((c.mean_offspring - 1.0).abs() < 1e-15);
    }

    #[test]
    fn critical_mu_values_and_domain() {
        assert!((critical_mu(2.0).unwrap() - 0.23840584404423511).abs() < 1e-15);
        assert_eq!(critical_mu(1.0).unwrap(), 1.0);
        assert!(matches!(critical_mu(0.8), Err(Error::Domain(_))));
        assert!(matches!(critical_mu(-1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            critical_mu(f64::NAN),
            Err(Error::InvalidParameter(_))
        ));

        // Independent route for λ = 8: bisect mean(JM(8, v)) = 1 in v.
        let (mut lo, mut hi) = (1e-12, 8.0 - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if jm(8.0, mid).mean() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((critical_mu(8.0).unwrap() - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn extinction_probability_matches_high_precision_roots() {
        // Reference roots computed independently with 40-digit bisection.
        assert!((extinction_probability(&pm(2.0), 1e-10).unwrap() - 0.20318786997997995).abs() < 1e-12);
        assert!((extinction_probability(&jm(2.0, 1.0), 1e-10).unwrap() - 0.30605839227870024).abs() < 1e-12);
        assert!((extinction_probability(&jm(2.0, 1.9), 1e-10).unwrap() - 0.20833248869633267).abs() < 1e-12);
        assert!((extinction_probability(&jm(2.0, 1.9999), 1e-10).unwrap() - 0.20319273170444328).abs() < 1e-12);
    }

    #[test]
    fn non_supercritical_models_go_extinct_surely() {
        assert_eq!(extinction_probability(&jm(0.8, 0.4), 1e-10).unwrap(), 1.0);
        assert_eq!(extinction_probability(&jm(2.0, 0.2), 1e-10).unwrap(), 1.0);
        assert_eq!(extinction_probability(&pm(1.0), 1e-10).unwrap(), 1.0);
        // Exactly on the threshold: the near-critical guard reports 1.
        let mu = critical_mu(2.0).unwrap();
        assert_eq!(extinction_probability(&jm(2.0, mu), 1e-10).unwrap(), 1.0);
    }

    #[test]
    fn extinction_probability_validates_its_tolerance() {
        for tol in [0.0, -1e-9, 2e-6, f64::NAN] {
            assert!(matches!(
                extinction_probability(&pm(2.0), tol),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn barely_supercritical_root_above_bracket_is_flagged() {
        // Mean 1 + 5e-12 puts the nontrivial root inside (1 - 1e-9, 1), so
        // the bracket sees no sign change; that must surface as an
        // internal-consistency error, not a silent 1.
        let model = OffspringModel::Poisson {
            lambda: 1.0 + 5e-12,
        };
        assert!(matches!(
            extinction_probability(&model, 1e-10),
            Err(Error::InternalConsistency(_))
        ));
    }

    #[test]
    fn curve_iterates_match_reference_values() {
        let curve = extinction_curve(&pm(2.0), 10).unwrap();
        assert_eq!(curve.q.len(), 10);
        assert!((curve.q[0] - (-2.0_f64).exp()).abs() < 1e-15);
        assert!((curve.q[9] - 0.2031694953).abs() < 5e-10);

        let curve = extinction_curve(&jm(2.0, 1.0), 20).unwrap();
        assert!((curve.q[19] - 0.3060074).abs() < 5e-8);
    }

    #[test]
    fn curve_is_monotone_and_bounded_by_its_limit() {
        for model in [jm(2.0, 1.0), jm(0.8, 0.4), pm(2.0), jm(2.0, 0.2)] {
            let curve = extinction_curve(&model, 200).unwrap();
            assert!(curve.q.windows(2).all(|w| w[0] <= w[1]));
            // Allow an ulp of slack where the iterates have already landed
            // on the limit.
            assert!(curve.q.iter().all(|&q| q <= curve.limit + 1e-12));
            assert!(curve.limit <= 1.0);
        }
    }

    #[test]
    fn single_generation_curve_is_the_zero_class() {
        let curve = extinction_curve(&jm(2.0, 1.9), 1).unwrap();
        assert_eq!(curve.q.len(), 1);
        assert_eq!(curve.q[0], jm(2.0, 1.9).pgf(0.0).unwrap());
    }

    #[test]
    fn extinction_time_mass_telescopes_exactly() {
        for model in [pm(0.8), jm(0.8, 0.4), jm(2.0, 0.2), jm(2.0, 1.0)] {
            let dist = extinction_time_pmf(&model, 50).unwrap();
            assert!(dist.pt.iter().all(|&p| p >= 0.0));
            let resum: f64 = dist.pt.iter().sum();
            // Bit-exact by the Sterbenz argument in the implementation docs.
            assert_eq!(resum, *dist.cumulative.last().unwrap());
        }
    }

    #[test]
    fn extinction_time_examples_match_printed_precision() {
        let dist = extinction_time_pmf(&pm(0.8), 20).unwrap();
        assert!((dist.pt[19] - 9.44e-4).abs() < 1e-6);
        let dist = extinction_time_pmf(&jm(0.8, 0.4), 10).unwrap();
        assert!((dist.pt[9] - 5.77e-3).abs() < 1e-5);
    }

    #[test]
    fn traces_start_at_one_and_zero_is_absorbing() {
        for seed in 0..20 {
            let t = simulate_generations(&jm(0.8, 0.4), seed, 200, 1_000_000).unwrap();
            assert_eq!(t.sizes[0], 1);
            assert_eq!(t.extinct, *t.sizes.last().unwrap() == 0);
            // At most one zero, and only in final position.
            assert!(t.sizes[..t.sizes.len() - 1].iter().all(|&x| x > 0));
            assert_eq!(t.seed, seed);
        }
    }

    #[test]
    fn traces_are_deterministic_in_the_seed() {
        let a = simulate_generations(&jm(2.0, 1.0), 11, 50, 10_000).unwrap();
        let b = simulate_generations(&jm(2.0, 1.0), 11, 50, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_stops_exploding_traces_as_truncated() {
        let mut saw_truncation = false;
        for seed in 0..20 {
            let t = simulate_generations(&jm(2.0, 1.9), seed, 100, 10).unwrap();
            if t.truncated {
                saw_truncation = true;
                assert!(!t.extinct);
                assert!(*t.sizes.last().unwrap() >= 10);
            }
        }
        assert!(saw_truncation, "no trace hit the population cap");
    }

    #[test]
    fn subcritical_ensembles_die_out() {
        let summary = simulate_many(&jm(0.8, 0.4), 42, 10_000, 200, 1_000_000).unwrap();
        assert!(
            summary.extinct_fraction >= 0.995,
            "extinct fraction {}",
            summary.extinct_fraction
        );
        assert_eq!(
            *summary.extinct_by_generation.last().unwrap(),
            summary.extinct
        );
        assert!(summary
            .extinct_by_generation
            .windows(2)
            .all(|w| w[0] <= w[1]));
    }

    #[test]
    fn supercritical_ensemble_extinction_matches_the_root() {
        let summary = simulate_many(&pm(2.0), 42, 10_000, 100, 2_000).unwrap();
        assert!(
            (summary.extinct_fraction - 0.2032).abs() <= 0.02,
            "extinct fraction {}",
            summary.extinct_fraction
        );
    }

    #[test]
    fn simulation_argument_validation() {
        assert!(matches!(
            simulate_generations(&pm(2.0), 1, 0, 100),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simulate_generations(&pm(2.0), 1, 10, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simulate_many(&pm(2.0), 1, 0, 10, 100),
            Err(Error::Domain(_))
        ));
    }
}
