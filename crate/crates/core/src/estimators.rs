//! Closed forms and fixed-point solvers for concrete instances: lossless
//! code distributions, linear Bayesian estimation under a finite-support
//! prior, the Gaussian sample mean, and a Cramér–Rao based lower bound on
//! exponential moments of the squared error.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};
use crate::numfmt;
use crate::probability::{log_mean_exp, log_sum_exp, FiniteDistribution};
use crate::simplex;
use crate::strategy::{FiniteCostTable, MCEstimate, Welford, MC_MIN_SAMPLES};

// ---------------------------------------------------------------------------
// Lossless coding

/// The code distribution minimizing `E_P exp{−α ln s(X)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalCode {
    /// `s(x) ∝ P(x)^{1/(1+α)}`.
    pub code: FiniteDistribution,
    /// `ln E_P exp{−α ln s(X)}`, equal to `α H_{1/(1+α)}(P)`.
    pub log_moment: f64,
}

pub fn optimal_code_distribution(p: &FiniteDistribution, alpha: f64) -> Result<OptimalCode> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be positive and finite"));
    }
    let power = 1.0 / (1.0 + alpha);
    let log_w: Vec<f64> = p
        .iter()
        .map(|x| if x > 0.0 { power * x.ln() } else { f64::NEG_INFINITY })
        .collect();
    let code = FiniteDistribution::from_log_weights(&log_w)?;
    let exps: Vec<f64> = code
        .iter()
        .map(|s| if s > 0.0 { -alpha * s.ln() } else { 0.0 })
        .collect();
    let log_moment = log_mean_exp(p, &exps);
    Ok(OptimalCode { code, log_moment })
}

/// Strategy table for codes drawn from the interior of the simplex lattice:
/// one strategy per composition of `resolution` into `m` positive parts,
/// with loss `ℓ(x,s) = −ln s(x)`. Returns the table and the code of each
/// strategy column.
pub fn code_length_table(m: usize, resolution: usize) -> Result<(FiniteCostTable, Vec<FiniteDistribution>)> {
    if m == 0 || resolution < m {
        return Err(domain(
            "resolution",
            resolution as f64,
            "must be at least the alphabet size",
        ));
    }
    simplex::check_grid_size(m, resolution - m, 5_000_000)?;
    let mut codes = Vec::new();
    // Interior points of resolution N are compositions of N-m shifted by one.
    simplex::for_each_composition(m, resolution - m, |parts| {
        let probs = parts.iter().map(|&k| (k + 1) as f64 / resolution as f64).collect();
        codes.push(FiniteDistribution::new(probs).expect("lattice point"));
    });
    let columns = codes.iter().map(|c| c.iter().map(|s| -s.ln()).collect()).collect();
    Ok((FiniteCostTable::from_columns(columns)?, codes))
}

// ---------------------------------------------------------------------------
// Linear Bayesian estimation, X | Y=y ~ N(φ(y), 1)

/// Prior on `Y ∈ {+1, −1}` with equal weights and regression values
/// `φ(+1)`, `φ(−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointPrior {
    pub phi_plus: f64,
    pub phi_minus: f64,
}

impl TwoPointPrior {
    pub fn new(phi_plus: f64, phi_minus: f64) -> Result<Self> {
        if !phi_plus.is_finite() || !phi_minus.is_finite() {
            return Err(Error::Degenerate("φ± must be finite".into()));
        }
        Ok(Self { phi_plus, phi_minus })
    }

    pub fn to_finite_support(self) -> FiniteSupportPrior {
        FiniteSupportPrior {
            support: vec![1.0, -1.0],
            weights: FiniteDistribution::uniform(2),
            phi: vec![self.phi_plus, self.phi_minus],
        }
    }
}

/// A prior `P(y)` on finitely many points with the conditional mean
/// `φ(y) = E[X | Y=y]` at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupportPrior {
    support: Vec<f64>,
    weights: FiniteDistribution,
    phi: Vec<f64>,
}

impl FiniteSupportPrior {
    pub fn new(support: Vec<f64>, weights: FiniteDistribution, phi: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || phi.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                actual: if support.len() != weights.len() {
                    support.len()
                } else {
                    phi.len()
                },
            });
        }
        if support.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("support and φ must be finite".into()));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Degenerate("support points must be distinct".into()));
        }
        Ok(Self { support, weights, phi })
    }

    /// Parses CSV rows `y, weight, phi` (weights are normalized; a
    /// non-numeric first row is skipped as a header).
    pub fn parse_csv(text: &str) -> Result<Self> {
        let (mut ys, mut ws, mut phis) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: std::result::Result<Vec<f64>, _> = line.split(',').map(numfmt::parse_real).collect();
            match fields {
                Ok(f) if f.len() == 3 => {
                    ys.push(f[0]);
                    ws.push(f[1]);
                    phis.push(f[2]);
                }
                Ok(f) => {
                    return Err(Error::Parse(format!(
                        "line {}: expected 3 fields (y, weight, phi), got {}",
                        lineno + 1,
                        f.len()
                    )))
                }
                Err(_) if ys.is_empty() => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::new(ys, FiniteDistribution::from_weights(ws)?, phis)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,weight,phi\n");
        for i in 0..self.support.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                numfmt::fmt12(self.support[i]),
                numfmt::fmt12(self.weights[i]),
                numfmt::fmt12(self.phi[i])
            );
        }
        out
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &FiniteDistribution {
        &self.weights
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.support
            .iter()
            .zip(self.weights.iter())
            .zip(&self.phi)
            .filter(|((_, w), _)| *w > 0.0)
            .map(|((&y, w), &phi)| (y, w, phi))
    }
}

fn check_bayes_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(domain(
            "alpha",
            alpha,
            "must lie in (0, 1/2) for unit conditional variance",
        ));
    }
    Ok(())
}

/// Right-hand side of the linear fixed-point equation:
/// `E_{P̃}[Y φ(Y)] / E_{P̃}[Y²]` with
/// `P̃(y) ∝ P(y) exp{α/(1−2α) · (φ(y) − s y)²}`.
pub fn bayes_linear_map(prior: &FiniteSupportPrior, alpha: f64, s: f64) -> Result<f64> {
    check_bayes_alpha(alpha)?;
    let c = alpha / (1.0 - 2.0 * alpha);
    let pts: Vec<(f64, f64, f64)> = prior.points().collect();
    if pts.iter().all(|(y, _, _)| *y == 0.0) {
        return Err(Error::Degenerate("E[Y²] = 0: the prior puts all mass at y = 0".into()));
    }
    let log_w: Vec<f64> = pts
        .iter()
        .map(|(y, w, phi)| w.ln() + c * (phi - s * y).powi(2))
        .collect();
    let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for ((y, _, phi), lw) in pts.iter().zip(&log_w) {
        let w = (lw - shift).exp();
        num += w * y * phi;
        den += w * y * y;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixpointConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Relaxation weight `γ` in `s ← (1−γ)s + γ·map(s)`.
    pub damping: f64,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-12,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixpointResult {
    pub s: f64,
    pub iterations: usize,
    /// `|s − map(s)|` at the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Solves `s = map(s)` (see [`bayes_linear_map`]) by damped iteration from
/// `s0`. Non-convergence is reported through `converged = false` with the
/// last iterate.
pub fn bayes_linear_fixpoint(
    prior: &FiniteSupportPrior,
    alpha: f64,
    s0: f64,
    config: FixpointConfig,
) -> Result<FixpointResult> {
    check_bayes_alpha(alpha)?;
    if !(config.damping > 0.0 && config.damping <= 1.0) {
        return Err(domain("damping", config.damping, "must lie in (0, 1]"));
    }
    if !s0.is_finite() {
        return Err(domain("s0", s0, "must be finite"));
    }
    let mut s = s0;
    let mut iterations = 0;
    loop {
        let mapped = bayes_linear_map(prior, alpha, s)?;
        let residual = (s - mapped).abs();
        if residual <= config.tol || iterations >= config.max_iter {
            return Ok(FixpointResult {
                s,
                iterations,
                residual,
                converged: residual <= config.tol,
            });
        }
        s = (1.0 - config.damping) * s + config.damping * mapped;
        iterations += 1;
    }
}

/// The two-point specialization of [`bayes_linear_fixpoint`].
pub fn two_point_fixpoint(prior: TwoPointPrior, alpha: f64, s0: f64, config: FixpointConfig) -> Result<FixpointResult> {
    bayes_linear_fixpoint(&prior.to_finite_support(), alpha, s0, config)
}

/// `ln E exp{α (X − sY)²}` under the prior and unit-variance Gaussian
/// conditionals, by 64-node Gauss–Hermite quadrature per support point.
pub fn linear_estimator_log_moment(prior: &FiniteSupportPrior, alpha: f64, s: f64) -> Result<f64> {
    check_bayes_alpha(alpha)?;
    let rule = GaussHermite::new(64);
    let beta = 0.5 - alpha;
    // With z = t/√β the Gaussian factor becomes the Hermite weight e^{−t²}:
    // E e^{α(Z+a)²} = e^{αa²} / √(2πβ) · ∫ e^{−t²} e^{2αa t/√β} dt.
    let norm = -0.5 * (2.0 * PI * beta).ln();
    let terms: Vec<f64> = prior
        .points()
        .map(|(y, w, phi)| {
            let a = phi - s * y;
            let slope = 2.0 * alpha * a / beta.sqrt();
            let inner: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.log_weights)
                .map(|(t, lw)| lw + slope * t)
                .collect();
            w.ln() + alpha * a * a + norm + log_sum_exp(&inner)
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

/// Fixed points reached from several starting values, with their
/// exponential moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartFixpoints {
    /// Distinct converged roots and `ln E exp{α(X − sY)²}` at each.
    pub roots: Vec<(f64, f64)>,
    /// Index into `roots` of the smallest moment.
    pub best: usize,
}

/// Runs [`bayes_linear_fixpoint`] from every start, de-duplicates the roots
/// and ranks them by directly evaluated exponential moment. The fixed-point
/// equation is only necessary, so this is how competing roots are compared.
pub fn bayes_linear_multistart(
    prior: &FiniteSupportPrior,
    alpha: f64,
    starts: &[f64],
    config: FixpointConfig,
) -> Result<MultiStartFixpoints> {
    let mut roots: Vec<(f64, f64)> = Vec::new();
    for &s0 in starts {
        let r = bayes_linear_fixpoint(prior, alpha, s0, config)?;
        if !r.converged {
            continue;
        }
        if roots.iter().any(|(s, _)| (s - r.s).abs() <= 1e-8 * (1.0 + s.abs())) {
            continue;
        }
        roots.push((r.s, linear_estimator_log_moment(prior, alpha, r.s)?));
    }
    if roots.is_empty() {
        return Err(Error::Degenerate(
            "no start converged; increase max_iter or lower the damping".into(),
        ));
    }
    let best = roots
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap();
    Ok(MultiStartFixpoints { roots, best })
}

/// Gauss–Hermite rule for the weight `e^{−t²}`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on orthonormal Hermite polynomials.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let pim4 = PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n.div_ceil(2) {
            let nf = n as f64;
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 3e-14 * (1.0 + z.abs()) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let log_weights = w.iter().map(|v| v.ln()).collect();
        Self {
            nodes: x,
            weights: w,
            log_weights,
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(t, w)| w * f(*t)).sum()
    }
}

// ---------------------------------------------------------------------------
// Gaussian location family

/// `n` i.i.d. `N(θ, σ²)` observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLocationFamily {
    pub n: usize,
    pub sigma2: f64,
    pub theta: f64,
}

impl GaussianLocationFamily {
    pub fn new(n: usize, sigma2: f64, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("n", 0.0, "need at least one observation"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(domain("sigma2", sigma2, "variance must be positive"));
        }
        if !theta.is_finite() {
            return Err(domain("theta", theta, "must be finite"));
        }
        Ok(Self { n, sigma2, theta })
    }

    /// Supremum of the `α` for which the squared-error moment is finite.
    pub fn critical_alpha(&self) -> f64 {
        self.n as f64 / (2.0 * self.sigma2)
    }
}

/// `E exp{α (X̄ − θ)²} = det(W)^{−1/2}` with `det W = 1 − 2ασ²/n`.
pub fn gaussian_sample_mean_moment(fam: &GaussianLocationFamily, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha >= fam.critical_alpha() {
        return Err(domain("alpha", alpha, "moment diverges for alpha >= n / (2 sigma2)"));
    }
    let det_w = 1.0 - 2.0 * alpha * fam.sigma2 / fam.n as f64;
    Ok(1.0 / det_w.sqrt())
}

/// Seeded simulation of `E exp{α (X̄ − θ)²}` from `n_samples` draws of the
/// `n` observations.
pub fn gaussian_sample_mean_mc(
    fam: &GaussianLocationFamily,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(domain(
            "n_samples",
            n_samples as f64,
            "at least 100 samples are required",
        ));
    }
    let normal = Normal::new(fam.theta, fam.sigma2.sqrt()).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    for _ in 0..n_samples {
        let mean = (0..fam.n).map(|_| normal.sample(&mut rng)).sum::<f64>() / fam.n as f64;
        acc.push((alpha * (mean - fam.theta).powi(2)).exp());
    }
    Ok(acc.estimate(n_samples, seed))
}

/// A one-parameter family supplying the Cramér–Rao bound and the relative
/// entropy between its members.
pub trait CramerRaoFamily {
    /// `CRB(θ) = 1 / I(θ)`.
    fn crb(&self, theta: f64) -> f64;
    /// `D(P_{θ'} ‖ P_θ)`.
    fn kl(&self, theta_prime: f64, theta: f64) -> f64;
}

impl CramerRaoFamily for GaussianLocationFamily {
    fn crb(&self, _theta: f64) -> f64 {
        self.sigma2 / self.n as f64
    }

    fn kl(&self, theta_prime: f64, theta: f64) -> f64 {
        self.n as f64 * (theta_prime - theta).powi(2) / (2.0 * self.sigma2)
    }
}

/// A family together with the interval searched for `θ'`.
#[derive(Debug, Clone, Copy)]
pub struct CrbSpec<F> {
    pub family: F,
    pub search_interval: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbBound {
    /// Lower bound on `ln E_θ exp{α(θ̂ − θ)²}` for unbiased `θ̂`.
    pub bound_log: f64,
    pub argmax_theta_prime: f64,
    /// The supremand still increases at the edge of the search interval,
    /// so the true supremum may be larger (possibly infinite).
    pub unbounded: bool,
}

/// Default number of grid points for [`crb_lower_bound`].
pub const CRB_GRID: usize = 1001;

/// `sup_{θ'} [α CRB(θ') + α(θ' − θ)² − D(P_{θ'}‖P_θ)]` over the search
/// interval: a grid scan followed by golden-section refinement around the
/// best grid point.
pub fn crb_lower_bound<F: CramerRaoFamily>(spec: &CrbSpec<F>, theta: f64, alpha: f64, grid: usize) -> Result<CrbBound> {
    let (lo, hi) = spec.search_interval;
    if grid < 3 {
        return Err(domain("grid", grid as f64, "need at least 3 points"));
    }
    if !(lo < hi) || !(lo..=hi).contains(&theta) {
        return Err(domain("theta", theta, "search interval must contain theta"));
    }
    if !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite"));
    }
    let fam = &spec.family;
    let objective = |tp: f64| alpha * fam.crb(tp) + alpha * (tp - theta).powi(2) - fam.kl(tp, theta);

    let xs: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let mut vals = Vec::with_capacity(grid);
    for &x in &xs {
        let crb = fam.crb(x);
        let kl = fam.kl(x, theta);
        if !(crb > 0.0) || !(kl >= -1e-12) {
            return Err(Error::Degenerate(format!(
                "family violates CRB > 0 or D >= 0 at θ' = {x}"
            )));
        }
        vals.push(objective(x));
    }
    let (mut best_i, mut best_v) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let at_edge = best_i == 0 || best_i == grid - 1;
    let unbounded = at_edge && xs[best_i] != theta && {
        let inner = if best_i == 0 { 1 } else { grid - 2 };
        vals[best_i] > vals[inner]
    };

    let a = xs[best_i.saturating_sub(1)];
    let b = xs[(best_i + 1).min(grid - 1)];
    let (mut x, mut v) = golden_section_max(&objective, a, b, 1e-10);
    if best_v > v {
        x = xs[best_i];
        v = best_v;
    }
    let at_theta = objective(theta);
    if at_theta >= v {
        x = theta;
        v = at_theta;
    }
    Ok(CrbBound {
        bound_log: v,
        argmax_theta_prime: x,
        unbounded,
    })
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
