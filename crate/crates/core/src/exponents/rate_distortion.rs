//! Rate-distortion functions: the binary/Hamming closed forms and
//! Blahut–Arimoto for general finite alphabets.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::numfmt;
use crate::probability::{binary_entropy, binary_entropy_inverse, FiniteDistribution};

/// `R_Q(D) = h₂(q) − h₂(D)` for a Bernoulli(q) source under Hamming
/// distortion, in nats.
pub fn binary_rate_distortion(q: f64, d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain("q", q, "must lie in [0, 1]"));
    }
    let q = q.min(1.0 - q);
    if !(0.0..=q).contains(&d) {
        return Err(domain("D", d, "must lie in [0, min(q, 1-q)]"));
    }
    Ok((binary_entropy(q)? - binary_entropy(d)?).max(0.0))
}

/// Distortion-rate function `δ(R) = h₂⁻¹(ln 2 − R)` of the binary symmetric
/// source.
pub fn bss_distortion_rate(rate: f64) -> Result<f64> {
    if !(0.0..=LN_2).contains(&rate) {
        return Err(domain("R", rate, "must lie in [0, ln 2]"));
    }
    binary_entropy_inverse((LN_2 - rate).max(0.0))
}

/// Single-letter distortion `d(x, y)`: rows are source symbols, columns are
/// reproduction symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    n_source: usize,
    n_repro: usize,
    data: Vec<f64>,
}

impl DistortionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_source = rows.len();
        let n_repro = rows.first().map_or(0, Vec::len);
        if n_source == 0 || n_repro == 0 {
            return Err(Error::InvalidTable("empty distortion matrix".into()));
        }
        let mut data = Vec::with_capacity(n_source * n_repro);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != n_repro {
                return Err(Error::DimensionMismatch {
                    expected: n_repro,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidTable(format!(
                    "row {x}: distortions must be finite and non-negative"
                )));
            }
            if !row.contains(&0.0) {
                return Err(Error::InvalidTable(format!("row {x} has no zero entry")));
            }
            data.extend(row);
        }
        Ok(Self {
            n_source,
            n_repro,
            data,
        })
    }

    pub fn hamming(m: usize) -> Self {
        let rows = (0..m)
            .map(|x| (0..m).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::from_rows(rows).expect("hamming matrix is valid")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(numfmt::parse_real).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if rows.is_empty() => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::from_rows(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for x in 0..self.n_source {
            let _ = writeln!(out, "{}", numfmt::join_reals(self.row(x)));
        }
        out
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_repro(&self) -> usize {
        self.n_repro
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n_repro + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n_repro..(x + 1) * self.n_repro]
    }

    /// Smallest distortion at zero rate, `min_y Σ_x q(x) d(x,y)`.
    pub fn max_distortion(&self, q: &[f64]) -> f64 {
        (0..self.n_repro)
            .map(|y| (0..self.n_source).map(|x| q[x] * self.get(x, y)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn check_source(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.n_source {
            return Err(Error::DimensionMismatch {
                expected: self.n_source,
                actual: q.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaConfig {
    pub max_iter: usize,
    /// Bound on the gap between the upper and lower rate estimates.
    pub tol: f64,
}

impl Default for BaConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-12,
        }
    }
}

/// A point on the rate-distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub rate: f64,
    pub distortion: f64,
    /// Total Blahut–Arimoto iterations spent.
    pub iterations: usize,
    pub converged: bool,
    /// Output marginal `r(y)`.
    pub output: Vec<f64>,
}

/// Blahut–Arimoto at a fixed slope. `slope` is `|dD/dR|` on the curve: the
/// test channel is `W(y|x) ∝ r(y) exp{−d(x,y)/slope}`, and `slope = 0` gives
/// the lossless end where `W` only uses zero-distortion reproductions.
pub fn blahut_arimoto_rd(
    q: &FiniteDistribution,
    d: &DistortionMatrix,
    slope: f64,
    config: BaConfig,
) -> Result<RdPoint> {
    d.check_source(q.probs())?;
    ba_warm(q.probs(), d, slope, config, None)
}

fn kernel(d: &DistortionMatrix, slope: f64) -> Vec<f64> {
    d.data
        .iter()
        .map(|&v| {
            if slope == 0.0 {
                if v == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-v / slope).exp()
            }
        })
        .collect()
}

fn ba_warm(q: &[f64], d: &DistortionMatrix, slope: f64, config: BaConfig, r0: Option<&[f64]>) -> Result<RdPoint> {
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(domain("slope", slope, "must be finite and non-negative"));
    }
    let (m, k) = (d.n_source, d.n_repro);
    let kern = kernel(d, slope);
    let mut r: Vec<f64> = match r0 {
        Some(prev) => prev.iter().map(|v| 0.999 * v + 0.001 / k as f64).collect(),
        None => vec![1.0 / k as f64; k],
    };
    let mut denom = vec![0.0; m];
    let mut c = vec![0.0; k];
    let mut iterations = 0;
    let mut converged = false;
    loop {
        for x in 0..m {
            denom[x] = (0..k).map(|y| r[y] * kern[x * k + y]).sum();
        }
        for (y, cy) in c.iter_mut().enumerate() {
            *cy = (0..m)
                .filter(|&x| q[x] > 0.0)
                .map(|x| q[x] * kern[x * k + y] / denom[x])
                .sum();
        }
        let max_ln = c.iter().copied().fold(0.0_f64, f64::max).ln();
        let mean_ln: f64 = (0..k)
            .filter(|&y| r[y] > 0.0 && c[y] > 0.0)
            .map(|y| r[y] * c[y] * c[y].ln())
            .sum();
        if max_ln - mean_ln <= config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }
        for y in 0..k {
            r[y] *= c[y];
        }
        let total: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= total);
        iterations += 1;
    }
    let (mut rate, mut distortion) = (0.0, 0.0);
    for x in (0..m).filter(|&x| q[x] > 0.0) {
        for y in 0..k {
            let w = r[y] * kern[x * k + y] / denom[x];
            if w > 0.0 {
                rate += q[x] * w * (kern[x * k + y] / denom[x]).ln();
                distortion += q[x] * w * d.get(x, y);
            }
        }
    }
    Ok(RdPoint {
        rate: rate.max(0.0),
        distortion,
        iterations,
        converged,
        output: r,
    })
}

/// Bisection over the slope until the curve point hits `target` in the
/// coordinate picked by `coord`. `increasing` tells whether that
/// coordinate grows with the slope.
fn bisect_slope<F: Fn(&RdPoint) -> f64>(
    q: &[f64],
    d: &DistortionMatrix,
    target: f64,
    coord: F,
    increasing: bool,
    config: BaConfig,
) -> Result<(RdPoint, RdPoint)> {
    let beyond = |pt: &RdPoint| {
        if increasing {
            coord(pt) >= target
        } else {
            coord(pt) <= target
        }
    };
    let mut lo = ba_warm(q, d, 0.0, config, None)?;
    let (mut lo_s, mut hi_s) = (0.0, 1.0);
    let mut hi = ba_warm(q, d, hi_s, config, None)?;
    let mut spent = lo.iterations + hi.iterations;
    let mut ok = lo.converged && hi.converged;
    while !beyond(&hi) {
        lo = hi;
        lo_s = hi_s;
        hi_s *= 2.0;
        if hi_s > 1e12 {
            return Err(Error::Degenerate("slope bracket not found".into()));
        }
        hi = ba_warm(q, d, hi_s, config, Some(&lo.output))?;
        spent += hi.iterations;
        ok &= hi.converged;
    }
    for _ in 0..200 {
        let mid_s = 0.5 * (lo_s + hi_s);
        if mid_s <= lo_s || mid_s >= hi_s || (coord(&hi) - coord(&lo)).abs() <= 1e-15 {
            break;
        }
        let mid = ba_warm(q, d, mid_s, config, Some(&hi.output))?;
        spent += mid.iterations;
        ok &= mid.converged;
        if beyond(&mid) {
            hi = mid;
            hi_s = mid_s;
        } else {
            lo = mid;
            lo_s = mid_s;
        }
    }
    lo.iterations = spent;
    hi.iterations = spent;
    lo.converged = ok;
    hi.converged = ok;
    Ok((lo, hi))
}

fn interpolate(a: &RdPoint, b: &RdPoint, t: f64) -> (f64, f64) {
    (
        a.rate + t * (b.rate - a.rate),
        a.distortion + t * (b.distortion - a.distortion),
    )
}

/// `R_Q(D)` by bisection on the slope. Between the two bracketing curve
/// points the rate is interpolated linearly, which is exact on straight
/// pieces of the curve.
pub fn rate_distortion(q: &FiniteDistribution, d: &DistortionMatrix, target: f64, config: BaConfig) -> Result<RdPoint> {
    d.check_source(q.probs())?;
    rate_distortion_raw(q.probs(), d, target, config)
}

pub(crate) fn rate_distortion_raw(q: &[f64], d: &DistortionMatrix, target: f64, config: BaConfig) -> Result<RdPoint> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(domain("D", target, "must be finite and non-negative"));
    }
    let dmax = d.max_distortion(q);
    if target >= dmax {
        let y = (0..d.n_repro)
            .min_by(|&a, &b| {
                let da: f64 = (0..d.n_source).map(|x| q[x] * d.get(x, a)).sum();
                let db: f64 = (0..d.n_source).map(|x| q[x] * d.get(x, b)).sum();
                da.total_cmp(&db)
            })
            .unwrap();
        let mut output = vec![0.0; d.n_repro];
        output[y] = 1.0;
        return Ok(RdPoint {
            rate: 0.0,
            distortion: dmax,
            iterations: 0,
            converged: true,
            output,
        });
    }
    if target == 0.0 {
        return ba_warm(q, d, 0.0, config, None);
    }
    let (lo, hi) = bisect_slope(q, d, target, |pt| pt.distortion, true, config)?;
    let span = hi.distortion - lo.distortion;
    let t = if span > 0.0 {
        ((target - lo.distortion) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (rate, _) = interpolate(&lo, &hi, t);
    Ok(RdPoint {
        rate: rate.max(0.0),
        distortion: target,
        ..hi
    })
}

/// `D_Q(R)`, the inverse of [`rate_distortion`].
pub fn distortion_rate(q: &FiniteDistribution, d: &DistortionMatrix, target: f64, config: BaConfig) -> Result<RdPoint> {
    d.check_source(q.probs())?;
    distortion_rate_raw(q.probs(), d, target, config)
}

pub(crate) fn distortion_rate_raw(q: &[f64], d: &DistortionMatrix, target: f64, config: BaConfig) -> Result<RdPoint> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(domain("R", target, "must be finite and non-negative"));
    }
    let lossless = ba_warm(q, d, 0.0, config, None)?;
    if target >= lossless.rate {
        return Ok(lossless);
    }
    if target == 0.0 {
        return rate_distortion_raw(q, d, d.max_distortion(q), config);
    }
    let (lo, hi) = bisect_slope(q, d, target, |pt| pt.rate, false, config)?;
    let span = lo.rate - hi.rate;
    let t = if span > 0.0 {
        ((lo.rate - target) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (_, distortion) = interpolate(&lo, &hi, t);
    Ok(RdPoint {
        rate: target,
        distortion,
        ..hi
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::entropy;

    #[test]
    fn binary_closed_forms() {
        assert!((binary_rate_distortion(0.3, 0.0).unwrap() - binary_entropy(0.3).unwrap()).abs() < 1e-15);
        assert!((binary_rate_distortion(0.7, 0.1).unwrap() - binary_rate_distortion(0.3, 0.1).unwrap()).abs() < 1e-15);
        let r = binary_rate_distortion(0.5, 0.11).unwrap();
        assert!((r - 0.346_631_843_641_279_16).abs() < 1e-14);
        assert!(binary_rate_distortion(0.2, 0.3).is_err());
        assert!(binary_rate_distortion(1.2, 0.0).is_err());
    }

    #[test]
    fn bss_distortion_rate_values() {
        assert_eq!(bss_distortion_rate(0.0).unwrap(), 0.5);
        assert_eq!(bss_distortion_rate(LN_2).unwrap(), 0.0);
        let delta = bss_distortion_rate(0.346_631_843_641_279_16).unwrap();
        assert!((delta - 0.11).abs() < 1e-12);
        assert!((bss_distortion_rate(0.346639).unwrap() - 0.11).abs() < 1e-5);
        assert!(bss_distortion_rate(-0.1).is_err());
        assert!(bss_distortion_rate(0.7).is_err());
    }

    #[test]
    fn distortion_matrix_checks() {
        assert!(DistortionMatrix::from_rows(vec![vec![1.0, 1.0]]).is_err());
        assert!(DistortionMatrix::from_rows(vec![vec![0.0, -1.0]]).is_err());
        assert!(DistortionMatrix::from_rows(vec![vec![0.0, 1.0], vec![0.0]]).is_err());
        let h = DistortionMatrix::hamming(3);
        assert_eq!(DistortionMatrix::parse_csv(&h.to_csv()).unwrap(), h);
        assert_eq!(DistortionMatrix::parse_csv("a,b\n0,2\n1,0\n").unwrap().get(0, 1), 2.0);
    }

    #[test]
    fn lossless_end() {
        let q = FiniteDistribution::new(vec![0.6, 0.3, 0.1]).unwrap();
        let h = DistortionMatrix::hamming(3);
        let pt = blahut_arimoto_rd(&q, &h, 0.0, BaConfig::default()).unwrap();
        assert!(pt.converged);
        assert_eq!(pt.distortion, 0.0);
        assert!((pt.rate - entropy(&q)).abs() < 1e-10);
        let pt = blahut_arimoto_rd(&q, &h, 1e-3, BaConfig::default()).unwrap();
        assert!(pt.distortion < 1e-100);
        let u3 = FiniteDistribution::uniform(3);
        let pt = rate_distortion(&u3, &h, 0.0, BaConfig::default()).unwrap();
        assert!((pt.rate - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn ba_matches_binary_closed_form() {
        let h = DistortionMatrix::hamming(2);
        for (q, dd) in [(0.5, 0.11), (0.3, 0.05), (0.3, 0.2), (0.1, 0.02)] {
            let src = FiniteDistribution::new(vec![q, 1.0 - q]).unwrap();
            let pt = rate_distortion(&src, &h, dd, BaConfig::default()).unwrap();
            let exact = binary_rate_distortion(q, dd).unwrap();
            assert!(pt.converged);
            assert!((pt.rate - exact).abs() < 1e-6, "q={q} D={dd}: {} vs {exact}", pt.rate);
            let back = distortion_rate(&src, &h, exact, BaConfig::default()).unwrap();
            assert!((back.distortion - dd).abs() < 1e-6);
        }
        let src = FiniteDistribution::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(rate_distortion(&src, &h, 0.4, BaConfig::default()).unwrap().rate, 0.0);
    }

    #[test]
    fn curve_is_monotone_in_slope() {
        let q = FiniteDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let d =
            DistortionMatrix::from_rows(vec![vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 1.0], vec![4.0, 1.0, 0.0]]).unwrap();
        let mut prev = blahut_arimoto_rd(&q, &d, 0.0, BaConfig::default()).unwrap();
        for k in 1..20 {
            let pt = blahut_arimoto_rd(&q, &d, 0.1 * k as f64, BaConfig::default()).unwrap();
            assert!(pt.distortion >= prev.distortion - 1e-12);
            assert!(pt.rate <= prev.rate + 1e-12);
            prev = pt;
        }
    }
}
