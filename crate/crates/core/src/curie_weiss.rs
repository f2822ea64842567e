//! The squared-error exponential moment of the empirical mean of a binary
//! ±1 source, viewed as a Curie–Weiss model with field `B` and coupling `J`.
//!
//! For spins with mean `μ`, `(1/n) ln E exp{αn(μ̂ − μ)²}` tends to
//! `max_m [α(m − μ)² − d₂((1+m)/2 ‖ (1+μ)/2)]`, whose stationary points are the
//! magnetizations `m = tanh(Jm + B)` with `J = 2α`, `B = artanh μ − 2αμ`.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::numfmt;
use crate::probability::{binary_kl, log_sum_exp};

/// Distance from a phase boundary below which points are labelled
/// [`Phase::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Grid intervals used to isolate fixed points.
pub const ROOT_SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CWParams {
    pub mu: f64,
    pub alpha: f64,
}

impl CWParams {
    pub fn new(mu: f64, alpha: f64) -> Result<Self> {
        if !(mu.abs() < 1.0) {
            return Err(domain("mu", mu, "must lie in (-1, 1)"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(domain("alpha", alpha, "must be finite and non-negative"));
        }
        Ok(Self { mu, alpha })
    }

    /// External field `B = artanh μ − 2αμ`.
    pub fn field(&self) -> f64 {
        self.mu.atanh() - 2.0 * self.alpha * self.mu
    }

    /// Coupling `J = 2α`.
    pub fn coupling(&self) -> f64 {
        2.0 * self.alpha
    }

    /// `α(m − μ)² − d₂((1+m)/2 ‖ (1+μ)/2)`.
    pub fn objective(&self, m: f64) -> f64 {
        self.alpha * (m - self.mu).powi(2) - binary_kl((1.0 + m) / 2.0, (1.0 + self.mu) / 2.0)
    }

    fn residual(&self, m: f64) -> f64 {
        m - (self.coupling() * m + self.field()).tanh()
    }
}

/// `α₀(μ) = artanh(μ) / (2μ)`, where the field `B` changes sign; `1/2` at `μ = 0`.
pub fn alpha0(mu: f64) -> f64 {
    if mu == 0.0 {
        0.5
    } else {
        mu.atanh() / (2.0 * mu)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Location of the extremum of `f` on `[a, b]`, maximizing when `maximize`.
fn extremum<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { f(x) } else { -f(x) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if b - a <= 1e-15 {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// All roots of `m = tanh(Jm + B)` in `[−1, 1]`, ascending: one or three,
/// two when a pair of roots touches.
pub fn magnetization_fixed_points(params: CWParams) -> Vec<f64> {
    let f = |m: f64| params.residual(m);
    let n = ROOT_SCAN_POINTS;
    let xs: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (fs[i], fs[i + 1]);
        if a == 0.0 {
            roots.push(xs[i]);
        } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
            roots.push(bisect(&f, xs[i], xs[i + 1]));
        }
    }
    if fs[n] == 0.0 {
        roots.push(xs[n]);
    }
    // A touching or nearly touching pair of roots shows up as an interior
    // extremum of f on the grid without a sign change.
    for i in 1..n {
        let (l, c, r) = (fs[i - 1], fs[i], fs[i + 1]);
        if c == 0.0 || (l < 0.0) != (c < 0.0) || (r < 0.0) != (c < 0.0) {
            continue;
        }
        if !(c.abs() <= l.abs() && c.abs() <= r.abs()) {
            continue;
        }
        let x = extremum(&f, xs[i - 1], xs[i + 1], c < 0.0);
        let fx = f(x);
        if fx.abs() <= 1e-10 {
            roots.push(x);
        } else if (fx < 0.0) != (c < 0.0) {
            roots.push(bisect(&f, xs[i - 1], x));
            roots.push(bisect(&f, x, xs[i + 1]));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    roots
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwExponent {
    pub exponent: f64,
    pub dominant_m: f64,
    /// Two distinct magnetizations attain the maximum; the nonnegative one
    /// is reported.
    pub tie: bool,
}

/// `lim (1/n) ln E_μ exp{αn(μ̂ − μ)²}` and its dominant magnetization.
pub fn cw_exponent(params: CWParams) -> CwExponent {
    exponent_from_roots(params, &magnetization_fixed_points(params))
}

fn exponent_from_roots(params: CWParams, roots: &[f64]) -> CwExponent {
    let mut cands: Vec<(f64, f64)> = roots
        .iter()
        .chain(&[-1.0, 1.0])
        .map(|&m| (params.objective(m), m))
        .collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let (best, m) = cands[0];
    let tie = cands[1..]
        .iter()
        .any(|&(v, m2)| (best - v).abs() <= 1e-12 * (1.0 + best.abs()) && (m2 - m).abs() > 1e-9);
    let dominant_m = if tie {
        cands
            .iter()
            .filter(|&&(v, _)| (best - v).abs() <= 1e-12 * (1.0 + best.abs()))
            .map(|&(_, m)| m)
            .find(|&m| m >= 0.0)
            .unwrap_or(m)
    } else {
        m
    };
    CwExponent {
        exponent: best,
        dominant_m,
        tie,
    }
}

/// Exact `(1/n) ln E_μ exp{αn(μ̂ − μ)²}` over `n` spins, summed over the
/// magnetizations `m_k = (2k − n)/n` in log space.
pub fn cw_exact_finite_n(params: CWParams, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("n", 0.0, "must be at least 1"));
    }
    let nf = n as f64;
    let ln_up = ((1.0 + params.mu) / 2.0).ln();
    let ln_down = ((1.0 - params.mu) / 2.0).ln();
    let mut ln_fact = Vec::with_capacity(n + 1);
    ln_fact.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        ln_fact.push(acc);
    }
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let m = (2.0 * k as f64 - nf) / nf;
            ln_fact[n] - ln_fact[k] - ln_fact[n - k]
                + k as f64 * ln_up
                + (n - k) as f64 * ln_down
                + params.alpha * nf * (m - params.mu).powi(2)
        })
        .collect();
    Ok(log_sum_exp(&terms) / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Paramagnetic,
    PosMuPosM,
    PosMuNegM,
    NegMuPosM,
    NegMuNegM,
    Boundary,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paramagnetic => "paramagnetic",
            Self::PosMuPosM => "pos_mu_pos_m",
            Self::PosMuNegM => "pos_mu_neg_m",
            Self::NegMuPosM => "neg_mu_pos_m",
            Self::NegMuNegM => "neg_mu_neg_m",
            Self::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Paramagnetic,
            Self::PosMuPosM,
            Self::PosMuNegM,
            Self::NegMuPosM,
            Self::NegMuNegM,
            Self::Boundary,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown phase '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub params: CWParams,
    pub fixed_points: Vec<f64>,
    pub dominant_m: f64,
    pub exponent: f64,
    pub phase: Phase,
    pub tie: bool,
}

pub fn classify_phase(params: CWParams) -> PhasePoint {
    let fixed_points = magnetization_fixed_points(params);
    let ex = exponent_from_roots(params, &fixed_points);
    let (mu, alpha) = (params.mu, params.alpha);
    let phase = if alpha < 0.5 - BOUNDARY_TOL {
        Phase::Paramagnetic
    } else if (alpha - 0.5).abs() <= BOUNDARY_TOL
        || mu.abs() <= BOUNDARY_TOL
        || (alpha - alpha0(mu)).abs() <= BOUNDARY_TOL
        || fixed_points.len() == 2
    {
        Phase::Boundary
    } else {
        match (mu > 0.0, alpha < alpha0(mu)) {
            (true, true) => Phase::PosMuPosM,
            (true, false) => Phase::PosMuNegM,
            (false, true) => Phase::NegMuNegM,
            (false, false) => Phase::NegMuPosM,
        }
    };
    PhasePoint {
        params,
        fixed_points,
        dominant_m: ex.dominant_m,
        exponent: ex.exponent,
        phase,
        tie: ex.tie,
    }
}

/// Inclusive evenly spaced range `lo:hi:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::Parse(format!("invalid range {lo}:{hi}")));
        }
        if steps < 2 && lo != hi {
            return Err(domain("steps", steps as f64, "need at least 2 points"));
        }
        if steps == 0 {
            return Err(domain("steps", 0.0, "need at least 1 point"));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

impl FromStr for GridRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected lo:hi:steps, got '{s}'")));
        }
        let lo = numfmt::parse_real(parts[0])?;
        let hi = numfmt::parse_real(parts[1])?;
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("invalid step count '{}'", parts[2])))?;
        Self::new(lo, hi, steps)
    }
}

/// Classifies every `(μ, α)` on the grid, μ-major.
pub fn phase_diagram_grid(mu_range: GridRange, alpha_range: GridRange) -> Result<Vec<PhasePoint>> {
    let mus = mu_range.values();
    let alphas = alpha_range.values();
    let params: Vec<CWParams> = mus
        .iter()
        .flat_map(|&mu| alphas.iter().map(move |&a| CWParams::new(mu, a)))
        .collect::<Result<_>>()?;
    Ok(params.into_par_iter().map(classify_phase).collect())
}

pub const PHASE_CSV_HEADER: &str = "mu,alpha,n_fixed_points,dominant_m,exponent,phase";

pub fn phase_diagram_csv(rows: &[PhasePoint]) -> String {
    let mut out = format!("{PHASE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            numfmt::fmt12(r.params.mu),
            numfmt::fmt12(r.params.alpha),
            r.fixed_points.len(),
            numfmt::fmt12(r.dominant_m),
            numfmt::fmt12(r.exponent),
            r.phase
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const M_STAR: f64 = 0.957_504_024_077_268_7;

    fn cw(mu: f64, alpha: f64) -> CWParams {
        CWParams::new(mu, alpha).unwrap()
    }

    fn grid_max(params: CWParams) -> (f64, f64) {
        let n = 200_000;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=n {
            let m = -1.0 + 2.0 * i as f64 / n as f64;
            let v = params.objective(m);
            if v > best.0 {
                best = (v, m);
            }
        }
        let h = 2.0 / n as f64;
        let m = extremum(
            &|m| params.objective(m),
            (best.1 - h).max(-1.0),
            (best.1 + h).min(1.0),
            true,
        );
        (params.objective(m), m)
    }

    #[test]
    fn params_validation() {
        assert!(CWParams::new(1.0, 0.5).is_err());
        assert!(CWParams::new(0.2, -0.1).is_err());
        let p = cw(0.5, 0.25);
        assert!((p.field() - (0.5f64.atanh() - 0.25)).abs() < 1e-15);
        assert_eq!(p.coupling(), 0.5);
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(magnetization_fixed_points(cw(0.0, 0.25)), vec![0.0]);
        let r = magnetization_fixed_points(cw(0.0, 1.0));
        assert_eq!(r.len(), 3);
        assert!((r[0] + M_STAR).abs() < 1e-12 && r[1].abs() < 1e-12 && (r[2] - M_STAR).abs() < 1e-12);
        let r = magnetization_fixed_points(cw(0.5, 0.25));
        assert_eq!(r.len(), 1);
        assert!(r[0] > 0.0);
    }

    #[test]
    fn tangency_gives_two_roots() {
        // f(m) = m − tanh(2m + B) touches zero at m_t = √(1/2), which happens
        // for B = artanh(m_t) − 2 m_t, i.e. μ = m_t.
        let mu = 0.5f64.sqrt();
        let roots = magnetization_fixed_points(cw(mu, 1.0));
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!((roots[1] - mu).abs() < 1e-7);
        assert_eq!(classify_phase(cw(mu, 1.0)).phase, Phase::Boundary);
    }

    #[test]
    fn exponent_examples() {
        let e = cw_exponent(cw(0.0, 0.25));
        assert!(e.exponent.abs() < 1e-15 && e.dominant_m == 0.0);
        let e = cw_exponent(cw(0.0, 1.0));
        assert!((e.exponent - 0.326_523_887_426_923_9).abs() < 1e-12);
        assert!(e.tie && (e.dominant_m - M_STAR).abs() < 1e-12);
        let e = cw_exponent(cw(0.3, 0.0));
        assert!(e.exponent.abs() < 1e-15);
    }

    #[test]
    fn exponent_matches_grid_maximum() {
        for (mu, alpha) in [(0.0, 1.0), (0.5, 0.52), (0.5, 0.6), (-0.3, 1.4), (0.8, 0.3), (0.1, 2.5)] {
            let p = cw(mu, alpha);
            let (gv, gm) = grid_max(p);
            let e = cw_exponent(p);
            assert!((e.exponent - gv).abs() < 1e-10, "({mu},{alpha})");
            if !e.tie {
                assert!((e.dominant_m - gm).abs() < 1e-6);
            }
            // Stationarity of the compact objective is the tanh equation.
            assert!(p.residual(gm).abs() < 1e-8);
        }
    }

    #[test]
    fn finite_n_examples() {
        assert!((cw_exact_finite_n(cw(0.0, 0.7), 1).unwrap() - 0.7).abs() < 1e-15);
        assert!(cw_exact_finite_n(cw(0.4, 0.0), 500).unwrap().abs() < 1e-12);
        let v = cw_exact_finite_n(cw(0.0, 1.0), 2000).unwrap();
        assert!((v - 0.326_523_887_426_923_9).abs() < 5e-3);
        assert!(cw_exact_finite_n(cw(0.0, 1.0), 0).is_err());
    }

    #[test]
    fn finite_n_convergence_shape() {
        for (mu, alpha) in [(0.0, 1.0), (0.4, 0.3), (-0.5, 0.8)] {
            let p = cw(mu, alpha);
            let limit = cw_exponent(p).exponent;
            let errs: Vec<f64> = [100usize, 400, 1600]
                .iter()
                .map(|&n| (cw_exact_finite_n(p, n).unwrap() - limit).abs())
                .collect();
            let c = errs[0] * 100.0 / 100f64.ln();
            for (e, n) in errs.iter().zip([100.0f64, 400.0, 1600.0]) {
                assert!(*e <= c * n.ln() / n + 1e-12, "({mu},{alpha}) n={n}");
            }
            assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        }
    }

    #[test]
    fn phase_examples() {
        assert_eq!(classify_phase(cw(0.0, 0.5)).phase, Phase::Boundary);
        assert!((alpha0(0.5) - 0.549_306_144_334_054_8).abs() < 1e-15);
        let pt = classify_phase(cw(0.5, 0.52));
        assert_eq!(pt.phase, Phase::PosMuPosM);
        assert!(pt.dominant_m > 0.0);
        let pt = classify_phase(cw(0.5, 0.6));
        assert_eq!(pt.phase, Phase::PosMuNegM);
        assert!(pt.dominant_m < 0.0);
        let pt = classify_phase(cw(-0.5, 0.6));
        assert_eq!(pt.phase, Phase::NegMuPosM);
        assert!(pt.dominant_m > 0.0);
        assert_eq!(classify_phase(cw(-0.5, 0.52)).phase, Phase::NegMuNegM);
        assert_eq!(classify_phase(cw(0.0, 0.3)).phase, Phase::Paramagnetic);
        assert_eq!(classify_phase(cw(0.0, 0.9)).phase, Phase::Boundary);
        assert_eq!(classify_phase(cw(0.5, alpha0(0.5))).phase, Phase::Boundary);
    }

    #[test]
    fn phase_names_round_trip() {
        for p in [Phase::Paramagnetic, Phase::PosMuNegM, Phase::Boundary] {
            assert_eq!(p.as_str().parse::<Phase>().unwrap(), p);
        }
        assert!("ferro".parse::<Phase>().is_err());
    }

    #[test]
    fn grid_examples() {
        let rows = phase_diagram_grid(
            GridRange::new(-0.5, 0.5, 3).unwrap(),
            GridRange::new(0.1, 0.4, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.phase == Phase::Paramagnetic));

        let rows = phase_diagram_grid(GridRange::new(0.0, 0.0, 1).unwrap(), "0.4:0.6:3".parse().unwrap()).unwrap();
        let counts: Vec<usize> = rows.iter().map(|r| r.fixed_points.len()).collect();
        assert_eq!(counts, vec![1, 1, 3]);
        let csv = phase_diagram_csv(&rows);
        assert!(csv.starts_with(PHASE_CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn grid_range_parsing() {
        let g: GridRange = "-0.9:0.9:37".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 37);
        assert_eq!((v[0], v[36]), (-0.9, 0.9));
        assert!((v[18]).abs() < 1e-15);
        assert!("1:0:3".parse::<GridRange>().is_err());
        assert!("0:1".parse::<GridRange>().is_err());
        assert!("0:1:1".parse::<GridRange>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn roots_are_fixed_points(mu in -0.95f64..0.95, alpha in 0.0f64..3.0) {
            let p = cw(mu, alpha);
            let roots = magnetization_fixed_points(p);
            prop_assert!(!roots.is_empty() && roots.len() <= 3);
            if 2.0 * alpha <= 1.0 {
                prop_assert_eq!(roots.len(), 1);
            }
            for m in roots {
                prop_assert!(p.residual(m).abs() <= 1e-10);
            }
        }

        #[test]
        fn mu_reflection_symmetry(mu in -0.95f64..0.95, alpha in 0.0f64..3.0) {
            let a = cw_exponent(cw(mu, alpha));
            let b = cw_exponent(cw(-mu, alpha));
            prop_assert!((a.exponent - b.exponent).abs() <= 1e-12);
            if !a.tie {
                prop_assert!((a.dominant_m + b.dominant_m).abs() <= 1e-9);
            }
        }

        #[test]
        fn dominant_sign_matches_phase(mu in -0.95f64..0.95, alpha in 0.0f64..3.0) {
            let pt = classify_phase(cw(mu, alpha));
            match pt.phase {
                Phase::PosMuPosM | Phase::NegMuPosM => prop_assert!(pt.dominant_m > 0.0),
                Phase::PosMuNegM | Phase::NegMuNegM => prop_assert!(pt.dominant_m < 0.0),
                Phase::Paramagnetic => {
                    prop_assert!(alpha < 0.5);
                    prop_assert_eq!(pt.fixed_points.len(), 1);
                }
                Phase::Boundary => {}
            }
        }
    }
}
