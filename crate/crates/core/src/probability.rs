//! Finite-alphabet distributions and the information measures built on them.
//!
//! All quantities are in nats and use the convention `0 ln 0 = 0`.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::numfmt;

/// A probability vector over a finite alphabet `{0, .., m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    /// Tolerance on `|sum - 1|` accepted by [`FiniteDistribution::new`].
    pub const SUM_TOL: f64 = 1e-12;

    /// Validates `probs` (non-negative, finite, summing to one within
    /// [`Self::SUM_TOL`]) and renormalizes it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self::normalized(probs, sum))
    }

    /// Normalizes arbitrary non-negative weights with a positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights must have a positive finite total, got {sum}"
            )));
        }
        Ok(Self::normalized(weights, sum))
    }

    /// Builds `q_i ∝ exp(log_weights_i)`; `-inf` entries get zero mass.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidDistribution("log-weights must be finite or -inf".into()));
        }
        let lz = log_sum_exp(log_weights);
        if !lz.is_finite() {
            return Err(Error::InvalidDistribution("all log-weights are -inf".into()));
        }
        let probs: Vec<f64> = log_weights.iter().map(|w| (w - lz).exp()).collect();
        let sum = probs.iter().sum();
        Ok(Self::normalized(probs, sum))
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "alphabet must be non-empty");
        Self {
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn point_mass(m: usize, symbol: usize) -> Self {
        assert!(symbol < m, "symbol {symbol} outside alphabet of size {m}");
        let mut probs = vec![0.0; m];
        probs[symbol] = 1.0;
        Self { probs }
    }

    fn normalized(mut probs: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false: distributions have at least one symbol.
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().copied()
    }

    /// `Σ p_i f_i`, skipping symbols of zero mass (so infinite values there
    /// do not poison the sum).
    pub fn expectation(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.probs.len());
        self.probs
            .iter()
            .zip(values)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Parses a comma/newline separated list, see [`numfmt::parse_real_list`].
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(numfmt::parse_real_list(text)?)
    }
}

fn check_entries(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty alphabet".into()));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {p}; entries must be finite and non-negative"
        )));
    }
    Ok(())
}

impl Index<usize> for FiniteDistribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

impl FromStr for FiniteDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&numfmt::join_reals(&self.probs))
    }
}

/// A tilted measure together with its log-partition value.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltResult {
    pub q: FiniteDistribution,
    /// `ln Σ p_i e^{α ℓ_i}` in nats.
    pub log_z: f64,
}

/// `ln Σ exp(a_i)`, stable for large magnitudes. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// `ln Σ_i p_i e^{a_i}` over the support of `p`.
pub fn log_mean_exp(p: &FiniteDistribution, exponents: &[f64]) -> f64 {
    let terms: Vec<f64> = p
        .iter()
        .zip(exponents)
        .filter(|(pi, _)| *pi > 0.0)
        .map(|(pi, a)| pi.ln() + a)
        .collect();
    log_sum_exp(&terms)
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy `-Σ p ln p`.
pub fn entropy(p: &FiniteDistribution) -> f64 {
    -p.iter().map(xlnx).sum::<f64>()
}

/// Relative entropy `D(q‖p) = Σ q ln(q/p)`; `+inf` when `q` puts mass
/// where `p` has none.
pub fn kl_divergence(q: &FiniteDistribution, p: &FiniteDistribution) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    let mut d = 0.0;
    for (qi, pi) in q.iter().zip(p.iter()) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += qi * (qi / pi).ln();
    }
    // Rounding can leave tiny negative values for q ≈ p.
    Ok(d.max(0.0))
}

/// Rényi entropy of order `u`: `ln(Σ p^u) / (1 - u)`. Order one is rejected;
/// use [`entropy`] there.
pub fn renyi_entropy(p: &FiniteDistribution, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(domain("u", u, "Rényi order must be positive and finite"));
    }
    if u == 1.0 {
        return Err(domain("u", u, "order 1 is the Shannon entropy; call `entropy` instead"));
    }
    let logs: Vec<f64> = p.iter().filter(|&x| x > 0.0).map(|x| u * x.ln()).collect();
    Ok(log_sum_exp(&logs) / (1.0 - u))
}

/// Binary entropy `h₂(d)` in nats.
pub fn binary_entropy(d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(domain("d", d, "must lie in [0, 1]"));
    }
    Ok(-xlnx(d) - xlnx(1.0 - d))
}

/// The root of `h₂(d) = h` in `[0, 1/2]`, by bisection to machine precision.
pub fn binary_entropy_inverse(h: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if !(0.0..=ln2 + 1e-15).contains(&h) {
        return Err(domain("h", h, "must lie in [0, ln 2]"));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h >= ln2 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if -xlnx(mid) - xlnx(1.0 - mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary relative entropy `d₂(a‖b)` for `a ∈ [0,1]`, `b ∈ (0,1)`.
pub fn binary_kl(a: f64, b: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&a) && b > 0.0 && b < 1.0);
    let t1 = if a > 0.0 { a * (a / b).ln() } else { 0.0 };
    let t2 = if a < 1.0 {
        (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
    } else {
        0.0
    };
    t1 + t2
}

/// Exponentially tilts `p` by `α ℓ`: `q_i = p_i e^{α ℓ_i} / Z`.
///
/// Negative `alpha` is allowed. The partition sum is evaluated in the log
/// domain so that `α ℓ` may be hundreds of nats.
pub fn tilted_measure(p: &FiniteDistribution, cost: &[f64], alpha: f64) -> Result<TiltResult> {
    if cost.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: cost.len(),
        });
    }
    if !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite"));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidTable("cost column has non-finite entries".into()));
    }
    if alpha == 0.0 {
        return Ok(TiltResult {
            q: p.clone(),
            log_z: 0.0,
        });
    }
    let log_w: Vec<f64> = p
        .iter()
        .zip(cost)
        .map(|(pi, c)| {
            if pi > 0.0 {
                pi.ln() + alpha * c
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let log_z = log_sum_exp(&log_w);
    let q = FiniteDistribution::from_log_weights(&log_w)?;
    Ok(TiltResult { q, log_z })
}
