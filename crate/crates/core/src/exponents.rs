//! Asymptotic exponents `E(α, P) = max_Q [α λ(Q) − D(Q‖P)]` for universal
//! strategies whose loss on a type class `T_Q` grows like `n λ(Q)`, with
//! closed forms for lossless coding and guessing, the two-part code at
//! finite `n`, and the lossy-compression exponent of the random energy
//! model.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::estimators::golden_section_max;
use crate::probability::{entropy, log_sum_exp, FiniteDistribution};
use crate::simplex;

pub mod rate_distortion;

pub use rate_distortion::{
    binary_rate_distortion, blahut_arimoto_rd, bss_distortion_rate, distortion_rate, rate_distortion, BaConfig,
    DistortionMatrix, RdPoint,
};

/// The per-symbol loss `λ(Q)` of a universal strategy on type class `T_Q`.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaFunctional {
    /// `λ(Q) = H_Q` (lossless coding).
    ShannonEntropy,
    /// `λ(Q) = min{H_Q, R}` (guessing with a key rate `R`).
    GuessingMin { rate: f64 },
    /// `λ(Q) = R_Q(D)`.
    RateDistortion { distortion: DistortionMatrix, d: f64 },
    /// `λ(Q) = D_Q(R)`.
    DistortionRate { distortion: DistortionMatrix, rate: f64 },
}

impl LambdaFunctional {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ShannonEntropy => "shannon_entropy",
            Self::GuessingMin { .. } => "guessing_min",
            Self::RateDistortion { .. } => "rate_distortion",
            Self::DistortionRate { .. } => "distortion_rate",
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        let check_matrix = |d: &DistortionMatrix| {
            if d.n_source() != m {
                Err(Error::DimensionMismatch {
                    expected: m,
                    actual: d.n_source(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            Self::ShannonEntropy => Ok(()),
            Self::GuessingMin { rate } => nonneg("R", *rate),
            Self::RateDistortion { distortion, d } => {
                nonneg("D", *d)?;
                check_matrix(distortion)
            }
            Self::DistortionRate { distortion, rate } => {
                nonneg("R", *rate)?;
                check_matrix(distortion)
            }
        }
    }

    /// `λ(Q)` for a probability vector `q`.
    pub fn evaluate(&self, q: &[f64]) -> Result<f64> {
        match self {
            Self::ShannonEntropy => Ok(entropy_raw(q)),
            Self::GuessingMin { rate } => Ok(entropy_raw(q).min(*rate)),
            Self::RateDistortion { distortion, d } => {
                Ok(rate_distortion::rate_distortion_raw(q, distortion, *d, BaConfig::default())?.rate)
            }
            Self::DistortionRate { distortion, rate } => {
                Ok(rate_distortion::distortion_rate_raw(q, distortion, *rate, BaConfig::default())?.distortion)
            }
        }
    }

    fn uses_blahut_arimoto(&self) -> bool {
        matches!(self, Self::RateDistortion { .. } | Self::DistortionRate { .. })
    }

    /// Gradient on the support of `q`, up to an additive constant.
    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::ShannonEntropy => Ok(q.iter().map(|&v| if v > 0.0 { -v.ln() } else { 0.0 }).collect()),
            _ => fd_gradient(|x| self.evaluate(x), q),
        }
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(domain(name, v, "must be finite and non-negative"));
    }
    Ok(())
}

fn entropy_raw(q: &[f64]) -> f64 {
    -q.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

fn kl_raw(q: &[f64], p: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            if pi == 0.0 {
                return f64::INFINITY;
            }
            d += qi * (qi / pi).ln();
        }
    }
    d.max(0.0)
}

const FD_STEP: f64 = 1e-6;

/// Central differences along `q + h e_i`, renormalized onto the simplex.
fn fd_gradient<F: Fn(&[f64]) -> Result<f64>>(f: F, q: &[f64]) -> Result<Vec<f64>> {
    let h = FD_STEP;
    let shifted = |i: usize, step: f64| -> Vec<f64> {
        let total = 1.0 + step;
        q.iter()
            .enumerate()
            .map(|(j, &v)| if j == i { (v + step) / total } else { v / total })
            .collect()
    };
    let f0 = f(q)?;
    let mut g = vec![0.0; q.len()];
    for i in 0..q.len() {
        if q[i] <= 0.0 {
            continue;
        }
        let up = f(&shifted(i, h))?;
        g[i] = if q[i] > 2.0 * h {
            (up - f(&shifted(i, -h))?) / (2.0 * h)
        } else {
            (up - f0) / h
        };
    }
    Ok(g)
}

/// Where the grid oracle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Resolution [`ORACLE_RESOLUTION`] for alphabets up to
    /// [`ORACLE_MAX_ALPHABET`] (or [`ORACLE_RESOLUTION_BA`] when every grid
    /// point needs a Blahut–Arimoto solve); off otherwise.
    Auto,
    Off,
    Resolution(usize),
}

pub const ORACLE_RESOLUTION: usize = 600;
pub const ORACLE_RESOLUTION_BA: usize = 40;
pub const ORACLE_MAX_ALPHABET: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentOptions {
    /// Stop once an accepted ascent step improves the objective by less.
    pub tol: f64,
    pub max_iter: usize,
    pub oracle: OracleMode,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 10_000,
            oracle: OracleMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentResult {
    /// `max_Q [α λ(Q) − D(Q‖P)]` in nats per symbol.
    pub value: f64,
    pub argmax_q: FiniteDistribution,
    pub solver_iterations: usize,
    pub converged: bool,
    /// `value` minus the grid-oracle maximum, when the oracle ran.
    pub oracle_gap: Option<f64>,
}

struct Ascent {
    q: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Entropic mirror ascent from `Q = P` with backtracking on the step size.
fn mirror_ascent<F, G>(p: &[f64], objective: F, gradient: G, tol: f64, max_iter: usize) -> Result<Ascent>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut q = p.to_vec();
    let mut value = objective(&q)?;
    let mut eta = 1.0;
    for it in 0..max_iter {
        let g = gradient(&q)?;
        let mean: f64 = q.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut accepted = None;
        while eta > 1e-16 {
            let logs: Vec<f64> = q
                .iter()
                .zip(&g)
                .map(|(&qi, &gi)| {
                    if qi > 0.0 {
                        qi.ln() + eta * (gi - mean)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let z = log_sum_exp(&logs);
            let cand: Vec<f64> = logs.iter().map(|l| (l - z).exp()).collect();
            let v = objective(&cand)?;
            if v > value {
                accepted = Some((cand, v));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            return Ok(Ascent {
                q,
                value,
                iterations: it,
                converged: true,
            });
        };
        let gain = v - value;
        q = cand;
        value = v;
        if gain < tol {
            return Ok(Ascent {
                q,
                value,
                iterations: it + 1,
                converged: true,
            });
        }
        eta = (eta * 1.5).min(1e4);
    }
    Ok(Ascent {
        q,
        value,
        iterations: max_iter,
        converged: false,
    })
}

fn shannon_ascent(p: &[f64], alpha: f64, opts: &ExponentOptions) -> Result<Ascent> {
    mirror_ascent(
        p,
        |q| Ok(alpha * entropy_raw(q) - kl_raw(q, p)),
        |q| {
            Ok(q.iter()
                .zip(p)
                .map(|(&qi, &pi)| {
                    if qi > 0.0 {
                        -alpha * qi.ln() - (qi / pi).ln()
                    } else {
                        0.0
                    }
                })
                .collect())
        },
        opts.tol,
        opts.max_iter,
    )
}

/// `max_Q [α min{H_Q, R} − D(Q‖P)] = min_{t∈[0,1]} {(1−t)αR + max_Q [tα H_Q − D(Q‖P)]}`;
/// the outer problem is convex in `t`.
fn guessing_dual(p: &[f64], rate: f64, alpha: f64, opts: &ExponentOptions) -> Result<Ascent> {
    let dual = |t: f64| -> Result<(f64, Ascent)> {
        let inner = shannon_ascent(p, t * alpha, opts)?;
        Ok(((1.0 - t) * alpha * rate + inner.value, inner))
    };
    let (t_star, _) = golden_section_max(&|t: f64| dual(t).map_or(f64::NEG_INFINITY, |(v, _)| -v), 0.0, 1.0, 1e-9);
    let mut spent = 0;
    let mut converged = true;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for t in [0.0, t_star, 1.0] {
        let (v, inner) = dual(t)?;
        spent += inner.iterations;
        converged &= inner.converged;
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, inner.q));
        }
    }
    let (value, q) = best.unwrap();
    Ok(Ascent {
        q,
        value,
        iterations: spent,
        converged,
    })
}

/// Maximizes `α λ(Q) − D(Q‖P)` over the simplex.
///
/// Smooth functionals use entropic mirror ascent from `Q = P` (finite
/// difference gradients for the rate-distortion kinds). The min-type
/// guessing functional is solved through its one-dimensional dual. For
/// alphabets of at most three symbols a grid oracle fills `oracle_gap`.
pub fn generic_exponent(
    p: &FiniteDistribution,
    lam: &LambdaFunctional,
    alpha: f64,
    opts: ExponentOptions,
) -> Result<ExponentResult> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite and non-negative"));
    }
    lam.validate(p.len())?;
    let pv = p.probs();
    let ascent = match lam {
        LambdaFunctional::ShannonEntropy => shannon_ascent(pv, alpha, &opts)?,
        LambdaFunctional::GuessingMin { rate } => guessing_dual(pv, *rate, alpha, &opts)?,
        _ => mirror_ascent(
            pv,
            |q| Ok(alpha * lam.evaluate(q)? - kl_raw(q, pv)),
            |q| {
                let g = lam.gradient(q)?;
                Ok(g.iter()
                    .zip(q)
                    .zip(pv)
                    .map(|((gi, &qi), &pi)| if qi > 0.0 { alpha * gi - (qi / pi).ln() } else { 0.0 })
                    .collect())
            },
            opts.tol,
            opts.max_iter,
        )?,
    };

    let resolution = match opts.oracle {
        OracleMode::Off => None,
        OracleMode::Resolution(n) => Some(n),
        OracleMode::Auto if p.len() <= ORACLE_MAX_ALPHABET => Some(if lam.uses_blahut_arimoto() {
            ORACLE_RESOLUTION_BA
        } else {
            ORACLE_RESOLUTION
        }),
        OracleMode::Auto => None,
    };
    let oracle_gap = match resolution {
        Some(n) => {
            simplex::check_grid_size(p.len(), n, 50_000_000)?;
            let grid = simplex::grid_argmax(p.len(), n, |q| match lam.evaluate(q) {
                Ok(l) => alpha * l - kl_raw(q, pv),
                Err(_) => f64::NAN,
            });
            grid.map(|(v, _)| ascent.value - v)
        }
        None => None,
    };

    Ok(ExponentResult {
        value: ascent.value,
        argmax_q: FiniteDistribution::from_weights(ascent.q)?,
        solver_iterations: ascent.iterations,
        converged: ascent.converged,
        oracle_gap,
    })
}

/// `θ H_{1/(1+θ)}(P) = (1+θ) ln Σ P(x)^{1/(1+θ)}`, continuous at `θ = 0`.
pub fn scaled_renyi(p: &FiniteDistribution, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let u = 1.0 / (1.0 + theta);
    let logs: Vec<f64> = p.iter().filter(|&x| x > 0.0).map(|x| u * x.ln()).collect();
    ((1.0 + theta) * log_sum_exp(&logs)).max(0.0)
}

/// The escort distribution `P_θ(x) ∝ P(x)^{1/(1+θ)}`.
pub fn escort(p: &FiniteDistribution, theta: f64) -> FiniteDistribution {
    let u = 1.0 / (1.0 + theta);
    let logs: Vec<f64> = p
        .iter()
        .map(|x| if x > 0.0 { u * x.ln() } else { f64::NEG_INFINITY })
        .collect();
    FiniteDistribution::from_log_weights(&logs).expect("escort of a distribution")
}

/// `α H_{1/(1+α)}(P)`.
pub fn lossless_exponent(p: &FiniteDistribution, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite and non-negative"));
    }
    Ok(scaled_renyi(p, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessingPhase {
    LowR,
    Middle,
    HighR,
}

impl GuessingPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LowR => "low_R",
            Self::Middle => "middle",
            Self::HighR => "high_R",
        }
    }
}

impl std::fmt::Display for GuessingPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessingExponentBreakdown {
    pub value: f64,
    pub phase: GuessingPhase,
    /// Root of `H(P_θ) = R`, present in the middle phase only.
    pub theta_r: Option<f64>,
    /// `(H(P), H(P_α))`.
    pub boundaries: (f64, f64),
}

/// Three-phase closed form of the guessing exponent:
/// `αR` below `H(P)`, `α H_{1/(1+α)}(P)` above `H(P_α)` and
/// `(α − θ_R) R + θ_R H_{1/(1+θ_R)}(P)` in between.
pub fn guessing_exponent_closed(p: &FiniteDistribution, rate: f64, alpha: f64) -> Result<GuessingExponentBreakdown> {
    if !p.has_full_support() {
        return Err(Error::InvalidDistribution(
            "guessing exponent needs full support".into(),
        ));
    }
    nonneg("R", rate)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be positive and finite"));
    }
    let h0 = entropy(p);
    let ha = entropy(&escort(p, alpha));
    let boundaries = (h0, ha);
    let ln_m = (p.len() as f64).ln();
    if rate >= ln_m || rate > ha {
        return Ok(GuessingExponentBreakdown {
            value: scaled_renyi(p, alpha),
            phase: GuessingPhase::HighR,
            theta_r: None,
            boundaries,
        });
    }
    if rate < h0 {
        return Ok(GuessingExponentBreakdown {
            value: alpha * rate,
            phase: GuessingPhase::LowR,
            theta_r: None,
            boundaries,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, alpha.max(50.0));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if entropy(&escort(p, mid)) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = (0.5 * (lo + hi)).min(alpha);
    Ok(GuessingExponentBreakdown {
        value: (alpha - theta) * rate + scaled_renyi(p, theta),
        phase: GuessingPhase::Middle,
        theta_r: Some(theta),
        boundaries,
    })
}

/// One row of a guessing-exponent sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessingSweepRow {
    pub alpha: f64,
    pub rate: f64,
    pub value: f64,
    pub phase: GuessingPhase,
    pub theta_r: Option<f64>,
    /// Closed form minus the variational optimum, when requested.
    pub oracle_gap: Option<f64>,
}

/// Evaluates the closed form on every `(α, R)` pair, α-major, optionally
/// comparing each against [`generic_exponent`].
pub fn guessing_sweep(
    p: &FiniteDistribution,
    alphas: &[f64],
    rates: &[f64],
    with_oracle: bool,
) -> Result<Vec<GuessingSweepRow>> {
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| rates.iter().map(move |&r| (a, r)))
        .collect();
    pairs
        .par_iter()
        .map(|&(alpha, rate)| {
            let b = guessing_exponent_closed(p, rate, alpha)?;
            let oracle_gap = if with_oracle {
                let opts = ExponentOptions {
                    oracle: OracleMode::Off,
                    ..Default::default()
                };
                let v = generic_exponent(p, &LambdaFunctional::GuessingMin { rate }, alpha, opts)?;
                Some(b.value - v.value)
            } else {
                None
            };
            Ok(GuessingSweepRow {
                alpha,
                rate,
                value: b.value,
                phase: b.phase,
                theta_r: b.theta_r,
                oracle_gap,
            })
        })
        .collect()
}

pub const TWO_PART_MAX_ALPHABET: usize = 4;
pub const TWO_PART_MAX_N: usize = 60;

/// `(1/n) ln E_P exp{α n Ĥ(X^n)}` by exact enumeration of type classes,
/// `Ĥ` being the empirical entropy.
pub fn two_part_code_exact_moment(p: &FiniteDistribution, alpha: f64, n: usize) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite and non-negative"));
    }
    if p.len() > TWO_PART_MAX_ALPHABET {
        return Err(Error::TooLarge {
            what: "alphabet",
            size: p.len(),
            limit: TWO_PART_MAX_ALPHABET,
        });
    }
    if n > TWO_PART_MAX_N {
        return Err(Error::TooLarge {
            what: "block length",
            size: n,
            limit: TWO_PART_MAX_N,
        });
    }
    if n == 0 {
        return Err(domain("n", 0.0, "must be at least 1"));
    }
    let mut ln_fact = vec![0.0; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_p: Vec<f64> = p.iter().map(f64::ln).collect();
    let nf = n as f64;
    let mut terms = Vec::new();
    simplex::for_each_composition(p.len(), n, |k| {
        let mut t = ln_fact[n];
        let mut h = 0.0;
        for (i, &ki) in k.iter().enumerate() {
            if ki == 0 {
                continue;
            }
            if p[i] == 0.0 {
                return;
            }
            let frac = ki as f64 / nf;
            t += ki as f64 * ln_p[i] - ln_fact[ki];
            h -= frac * frac.ln();
        }
        terms.push(t + alpha * nf * h);
    });
    Ok(log_sum_exp(&terms) / nf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemExponent {
    pub value: f64,
    /// `α(R) = ln((1 − δ)/δ)` with `δ = δ(R)`.
    pub critical_alpha: f64,
    pub delta: f64,
}

/// Exponent of the random-energy-model lossy compression moment at rate
/// `R`: `−αδ(R)` up to `α(R)`, then `−α + ln(1 + e^α) + R − ln 2`.
pub fn rem_lossy_exponent(rate: f64, alpha: f64) -> Result<RemExponent> {
    if !(rate > 0.0 && rate < LN_2) {
        return Err(domain("R", rate, "must lie in (0, ln 2)"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite and non-negative"));
    }
    let delta = bss_distortion_rate(rate)?;
    let critical_alpha = ((1.0 - delta) / delta).ln();
    let value = if alpha <= critical_alpha {
        -alpha * delta
    } else {
        // ln(1 + e^α) − α = ln(1 + e^{−α})
        (-alpha).exp().ln_1p() + rate - LN_2
    };
    Ok(RemExponent {
        value,
        critical_alpha,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::renyi_entropy;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_alpha_gives_zero_at_p() {
        let p = dist(&[0.2, 0.5, 0.3]);
        for lam in [
            LambdaFunctional::ShannonEntropy,
            LambdaFunctional::GuessingMin { rate: 0.4 },
        ] {
            let r = generic_exponent(&p, &lam, 0.0, ExponentOptions::default()).unwrap();
            assert!(r.value.abs() < 1e-15);
            assert!(r.argmax_q.l1_distance(&p) < 1e-12);
        }
    }

    #[test]
    fn shannon_exponent_matches_renyi() {
        let p = dist(&[0.7, 0.3]);
        let r = generic_exponent(&p, &LambdaFunctional::ShannonEntropy, 1.0, ExponentOptions::default()).unwrap();
        assert!((r.value - 0.650_508_505_098_256).abs() < 1e-10);
        assert!(r.converged);
        let gap = r.oracle_gap.unwrap();
        assert!((-1e-9..1e-3).contains(&gap));
        assert!(r.argmax_q.l1_distance(&escort(&p, 1.0)) < 1e-5);
        assert!((lossless_exponent(&p, 1.0).unwrap() - 0.650_508_505_098_256).abs() < 1e-14);
        assert!((lossless_exponent(&p, 1.0).unwrap() - renyi_entropy(&p, 0.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn lossless_exponent_limits() {
        assert!((lossless_exponent(&FiniteDistribution::uniform(5), 2.5).unwrap() - 2.5 * 5f64.ln()).abs() < 1e-13);
        let p = dist(&[0.6, 0.3, 0.1]);
        let a = 1e-6;
        assert!((lossless_exponent(&p, a).unwrap() / a - entropy(&p)).abs() < 1e-4);
        assert_eq!(lossless_exponent(&p, 0.0).unwrap(), 0.0);
        assert!(lossless_exponent(&p, -1.0).is_err());
    }

    #[test]
    fn guessing_large_rate_equals_shannon() {
        let p = dist(&[0.6, 0.3, 0.1]);
        let opts = ExponentOptions {
            oracle: OracleMode::Off,
            ..Default::default()
        };
        let g = generic_exponent(&p, &LambdaFunctional::GuessingMin { rate: 5.0 }, 1.5, opts).unwrap();
        let s = generic_exponent(&p, &LambdaFunctional::ShannonEntropy, 1.5, opts).unwrap();
        assert!((g.value - s.value).abs() < 1e-10);
    }

    #[test]
    fn guessing_closed_form_examples() {
        let u = FiniteDistribution::uniform(2);
        let b = guessing_exponent_closed(&u, 0.3, 2.0).unwrap();
        assert_eq!(b.phase, GuessingPhase::LowR);
        assert!((b.value - 0.6).abs() < 1e-15);
        let b = guessing_exponent_closed(&u, 1.0, 2.0).unwrap();
        assert_eq!(b.phase, GuessingPhase::HighR);
        assert!((b.value - 2.0 * LN_2).abs() < 1e-14);

        let p = dist(&[0.8, 0.2]);
        let b = guessing_exponent_closed(&p, 0.0, 2.0).unwrap();
        assert!((b.boundaries.0 - 0.500_402_423_538_187_9).abs() < 1e-15);
        let mid = 0.5 * (b.boundaries.0 + b.boundaries.1);
        let b = guessing_exponent_closed(&p, mid, 2.0).unwrap();
        assert_eq!(b.phase, GuessingPhase::Middle);
        let theta = b.theta_r.unwrap();
        assert!((entropy(&escort(&p, theta)) - mid).abs() < 1e-9);
        let v = generic_exponent(
            &p,
            &LambdaFunctional::GuessingMin { rate: mid },
            2.0,
            ExponentOptions::default(),
        )
        .unwrap();
        assert!((v.value - b.value).abs() < 2e-3);
        assert!(v.oracle_gap.unwrap() > -1e-3);
    }

    #[test]
    fn guessing_rejects_bad_input() {
        assert!(guessing_exponent_closed(&dist(&[1.0, 0.0]), 0.1, 1.0).is_err());
        assert!(guessing_exponent_closed(&dist(&[0.5, 0.5]), -0.1, 1.0).is_err());
        assert!(guessing_exponent_closed(&dist(&[0.5, 0.5]), 0.1, 0.0).is_err());
    }

    #[test]
    fn guessing_continuity_at_boundaries() {
        let p = dist(&[0.5, 0.3, 0.2]);
        let alpha = 1.7;
        let (h0, ha) = guessing_exponent_closed(&p, 0.0, alpha).unwrap().boundaries;
        let eps = 1e-12;
        for r in [h0, ha] {
            let below = guessing_exponent_closed(&p, r - eps, alpha).unwrap().value;
            let above = guessing_exponent_closed(&p, r + eps, alpha).unwrap().value;
            assert!((below - above).abs() < 1e-6);
        }
    }

    #[test]
    fn rate_distortion_lambda_binary() {
        let p = dist(&[0.7, 0.3]);
        let lam = LambdaFunctional::RateDistortion {
            distortion: DistortionMatrix::hamming(2),
            d: 0.05,
        };
        let opts = ExponentOptions {
            tol: 1e-10,
            oracle: OracleMode::Resolution(200),
            ..Default::default()
        };
        let r = generic_exponent(&p, &lam, 0.8, opts).unwrap();
        // Closed-form objective over the binary simplex.
        let mut best = f64::NEG_INFINITY;
        for k in 0..=20_000 {
            let q = k as f64 / 20_000.0;
            let qq = q.min(1.0 - q);
            let lam = if qq <= 0.05 {
                0.0
            } else {
                binary_rate_distortion(q, 0.05).unwrap()
            };
            best = best.max(0.8 * lam - kl_raw(&[q, 1.0 - q], p.probs()));
        }
        assert!((r.value - best).abs() < 1e-6, "{} vs {best}", r.value);
        assert!(r.oracle_gap.unwrap() > -1e-6);
    }

    #[test]
    fn lambda_dimension_checked() {
        let lam = LambdaFunctional::DistortionRate {
            distortion: DistortionMatrix::hamming(3),
            rate: 0.1,
        };
        assert!(generic_exponent(&FiniteDistribution::uniform(2), &lam, 1.0, ExponentOptions::default()).is_err());
    }

    #[test]
    fn two_part_code_examples() {
        let p = dist(&[0.3, 0.7]);
        assert!(two_part_code_exact_moment(&p, 1.0, 1).unwrap().abs() < 1e-15);
        assert!(two_part_code_exact_moment(&dist(&[1.0, 0.0]), 2.0, 30).unwrap().abs() < 1e-15);
        let u = FiniteDistribution::uniform(2);
        let vals: Vec<f64> = [20, 40, 60]
            .iter()
            .map(|&n| two_part_code_exact_moment(&u, 1.0, n).unwrap())
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2] && vals[2] < LN_2);
        for (v, n) in vals.iter().zip([20.0f64, 40.0, 60.0]) {
            assert!(LN_2 - v < 0.5 * n.ln() / n + 1.0 / n);
        }
        assert!(two_part_code_exact_moment(&FiniteDistribution::uniform(5), 1.0, 5).is_err());
        assert!(two_part_code_exact_moment(&u, 1.0, 61).is_err());
    }

    #[test]
    fn rem_examples() {
        assert_eq!(rem_lossy_exponent(0.3, 0.0).unwrap().value, 0.0);
        let r = 0.346_631_843_641_279_16;
        let e = rem_lossy_exponent(r, 1.0).unwrap();
        assert!((e.value + 0.11).abs() < 1e-12);
        assert!((e.critical_alpha - 2.090_741_096_933_769_3).abs() < 1e-9);
        assert!(rem_lossy_exponent(0.0, 1.0).is_err());
        assert!(rem_lossy_exponent(LN_2, 1.0).is_err());
    }

    #[test]
    fn rem_branches_meet() {
        for k in 1..=6 {
            let rate = 0.1 * k as f64;
            let e = rem_lossy_exponent(rate, 1.0).unwrap();
            let a = e.critical_alpha;
            let upper = -a + (1.0 + a.exp()).ln() + rate - LN_2;
            assert!((-a * e.delta - upper).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_rows_in_alpha_major_order() {
        let p = dist(&[0.8, 0.2]);
        let rows = guessing_sweep(&p, &[1.0, 2.0], &[0.1, 0.55, 1.0], true).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[3].alpha, rows[3].rate), (2.0, 0.1));
        assert!(rows.iter().all(|r| r.oracle_gap.unwrap().abs() < 2e-3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn exponent_nondecreasing_in_alpha(w in prop::collection::vec(0.05f64..1.0, 2..=4), a in 0.0f64..3.0, da in 0.0f64..1.0) {
            let p = FiniteDistribution::from_weights(w).unwrap();
            let opts = ExponentOptions { oracle: OracleMode::Off, ..Default::default() };
            let v1 = generic_exponent(&p, &LambdaFunctional::ShannonEntropy, a, opts).unwrap().value;
            let v2 = generic_exponent(&p, &LambdaFunctional::ShannonEntropy, a + da, opts).unwrap().value;
            prop_assert!(v2 >= v1 - 1e-10);
            prop_assert!((v1 - scaled_renyi(&p, a)).abs() < 1e-8);
        }

        #[test]
        fn guessing_monotone_in_rate(w in prop::collection::vec(0.05f64..1.0, 2..=3), a in 0.1f64..4.0, r in 0.0f64..1.2, dr in 0.0f64..0.5) {
            let p = FiniteDistribution::from_weights(w).unwrap();
            let v1 = guessing_exponent_closed(&p, r, a).unwrap().value;
            let v2 = guessing_exponent_closed(&p, r + dr, a).unwrap().value;
            prop_assert!(v2 >= v1 - 1e-12);
            let ln_m = (p.len() as f64).ln();
            let top = guessing_exponent_closed(&p, ln_m, a).unwrap().value;
            prop_assert!((guessing_exponent_closed(&p, ln_m + dr, a).unwrap().value - top).abs() < 1e-15);
        }

        #[test]
        fn rem_nonincreasing_in_alpha(r in 0.01f64..0.69, a in 0.0f64..6.0, da in 0.0f64..1.0) {
            let v1 = rem_lossy_exponent(r, a).unwrap().value;
            let v2 = rem_lossy_exponent(r, a + da).unwrap().value;
            prop_assert!(v2 <= v1 + 1e-12);
        }

        #[test]
        fn two_part_below_lossless(w in prop::collection::vec(0.05f64..1.0, 2..=3), a in 0.0f64..3.0, n in 1usize..30) {
            let p = FiniteDistribution::from_weights(w).unwrap();
            prop_assert!(two_part_code_exact_moment(&p, a, n).unwrap() <= scaled_renyi(&p, a) + 1e-12);
        }
    }
}
