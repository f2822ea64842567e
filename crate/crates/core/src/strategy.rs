//! Exponential moments over a finite strategy set and the tilted-measure
//! optimality certificate.
//!
//! For a strategy `s` the log-moment `ln E_P e^{αℓ(X,s)}` equals
//! `max_Q [α E_Q ℓ(X,s) − D(Q‖P)]`, attained at the tilted measure
//! `Q ∝ P e^{αℓ(·,s)}`. A strategy is certified optimal when it also
//! minimizes the first moment `E_Q ℓ(X,·)` under its own tilted measure.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::numfmt;
use crate::probability::{log_mean_exp, tilted_measure, FiniteDistribution};
use crate::simplex;

/// Default absolute tolerance (nats of `E_Q ℓ`) for [`theorem1_certify`].
pub const CERTIFY_TOL: f64 = 1e-9;

/// Largest alphabet accepted by the simplex-grid oracles.
pub const GRID_MAX_ALPHABET: usize = 4;

/// Cap on lattice points scanned by a single grid oracle call.
pub const GRID_MAX_POINTS: usize = 400_000_000;

/// Loss `ℓ(x, s)` over a finite alphabet and a finite strategy set.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteCostTable {
    // column-major: columns[s][x]
    columns: Vec<Vec<f64>>,
    n_symbols: usize,
}

impl FiniteCostTable {
    /// Builds a table from rows indexed by symbol.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_symbols = rows.len();
        let n_strategies = rows.first().map_or(0, Vec::len);
        if n_symbols == 0 || n_strategies == 0 {
            return Err(Error::InvalidTable("table must be non-empty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n_strategies) {
            return Err(Error::InvalidTable(format!(
                "row {bad} has {} entries, expected {n_strategies}",
                rows[bad].len()
            )));
        }
        let columns = (0..n_strategies).map(|s| rows.iter().map(|r| r[s]).collect()).collect();
        Self::from_columns(columns)
    }

    /// Builds a table from columns indexed by strategy.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_symbols = columns.first().map_or(0, Vec::len);
        if n_symbols == 0 {
            return Err(Error::InvalidTable("table must be non-empty".into()));
        }
        if let Some(bad) = columns.iter().position(|c| c.len() != n_symbols) {
            return Err(Error::InvalidTable(format!(
                "strategy {bad} has {} entries, expected {n_symbols}",
                columns[bad].len()
            )));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("all costs must be finite".into()));
        }
        Ok(Self { columns, n_symbols })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n_symbols: usize, n_strategies: usize, mut f: F) -> Result<Self> {
        let columns = (0..n_strategies)
            .map(|s| (0..n_symbols).map(|x| f(x, s)).collect())
            .collect();
        Self::from_columns(columns)
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_strategies(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, symbol: usize, strategy: usize) -> f64 {
        self.columns[strategy][symbol]
    }

    /// The loss vector `ℓ(·, s)`.
    pub fn column(&self, strategy: usize) -> &[f64] {
        &self.columns[strategy]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.columns.iter().map(Vec::as_slice)
    }

    fn check_strategy(&self, s: usize) -> Result<()> {
        if s >= self.n_strategies() {
            return Err(Error::StrategyOutOfRange {
                index: s,
                n_strategies: self.n_strategies(),
            });
        }
        Ok(())
    }

    fn check_alphabet(&self, p: &FiniteDistribution) -> Result<()> {
        if p.len() != self.n_symbols {
            return Err(Error::DimensionMismatch {
                expected: self.n_symbols,
                actual: p.len(),
            });
        }
        Ok(())
    }

    /// Parses CSV with one row per symbol and one column per strategy. A
    /// leading row that does not parse as numbers is treated as a header.
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
                Err(e) => {
                    return Err(Error::Parse(format!("line {}: {e}", lineno + 1)));
                }
            }
        }
        Self::from_rows(rows)
    }

    /// Emits CSV (no header) at 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for x in 0..self.n_symbols {
            let row: Vec<f64> = (0..self.n_strategies()).map(|s| self.get(x, s)).collect();
            let _ = writeln!(out, "{}", numfmt::join_reals(&row));
        }
        out
    }
}

/// `ln E_P exp{α ℓ(X, s)}`, evaluated in the log domain.
pub fn exp_moment(p: &FiniteDistribution, table: &FiniteCostTable, s: usize, alpha: f64) -> Result<f64> {
    table.check_alphabet(p)?;
    table.check_strategy(s)?;
    if !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be finite"));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let exps: Vec<f64> = table.column(s).iter().map(|l| alpha * l).collect();
    Ok(log_mean_exp(p, &exps))
}

/// `α E_Q ℓ − D(Q‖P)` for a raw probability vector `q`.
fn gibbs_objective(p: &[f64], loss: &[f64], alpha: f64, q: &[f64]) -> f64 {
    let mut v = 0.0;
    for ((&qi, &pi), &li) in q.iter().zip(p).zip(loss) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return f64::NEG_INFINITY;
        }
        v += qi * (alpha * li - (qi / pi).ln());
    }
    v
}

fn check_grid(p: &FiniteDistribution, resolution: usize) -> Result<()> {
    if p.len() > GRID_MAX_ALPHABET {
        return Err(Error::TooLarge {
            what: "alphabet for grid oracle",
            size: p.len(),
            limit: GRID_MAX_ALPHABET,
        });
    }
    if resolution == 0 {
        return Err(domain("grid_resolution", 0.0, "must be positive"));
    }
    simplex::check_grid_size(p.len(), resolution, GRID_MAX_POINTS)
}

/// Grid maximum of the Gibbs functional `α E_Q ℓ(X,s) − D(Q‖P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsResult {
    pub value: f64,
    pub argmax: FiniteDistribution,
}

/// Maximizes `α E_Q ℓ(X,s) − D(Q‖P)` over the simplex lattice of the given
/// resolution. The exact maximum is [`exp_moment`] and the exact maximizer
/// is the tilted measure; this scan is the independent check of both.
pub fn gibbs_variational(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    s: usize,
    alpha: f64,
    grid_resolution: usize,
) -> Result<GibbsResult> {
    table.check_alphabet(p)?;
    table.check_strategy(s)?;
    check_grid(p, grid_resolution)?;
    let loss = table.column(s);
    let (value, q) = simplex::grid_argmax(p.len(), grid_resolution, |q| gibbs_objective(p.probs(), loss, alpha, q))
        .expect("the lattice always contains a point in the support of p");
    Ok(GibbsResult {
        value,
        argmax: FiniteDistribution::new(q)?,
    })
}

/// Outcome of checking the tilted-measure optimality conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// The candidate minimizes `E_Q ℓ` under its own tilted measure.
    /// `false` means "not certified", never "suboptimal".
    pub certified: bool,
    pub tilted_q: FiniteDistribution,
    pub strategy_index: usize,
    /// `E_Q ℓ(X,s) − min_{s'} E_Q ℓ(X,s')`.
    pub q_objective_gap: f64,
    pub log_z: f64,
    /// The lowest-index minimizer of `E_Q ℓ(X,·)`.
    pub best_under_q: usize,
}

/// Checks whether strategy `s` satisfies the sufficient optimality
/// conditions: with `Q ∝ P e^{αℓ(·,s)}`, `s` must minimize `E_Q ℓ(X,·)`
/// within `tol`.
pub fn theorem1_certify(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    s: usize,
    alpha: f64,
    tol: f64,
) -> Result<CertificateReport> {
    table.check_alphabet(p)?;
    table.check_strategy(s)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain(
            "alpha",
            alpha,
            "certificates are issued for finite alpha >= 0 only",
        ));
    }
    if !(tol > 0.0) {
        return Err(domain("tol", tol, "must be positive"));
    }
    let tilt = tilted_measure(p, table.column(s), alpha)?;
    let first_moments: Vec<f64> = table.columns().map(|c| tilt.q.expectation(c)).collect();
    let (best, best_val) = argmin_first(&first_moments);
    let gap = (first_moments[s] - best_val).max(0.0);
    Ok(CertificateReport {
        certified: gap <= tol,
        tilted_q: tilt.q,
        strategy_index: s,
        q_objective_gap: gap,
        log_z: tilt.log_z,
        best_under_q: best,
    })
}

/// Lowest-index minimizer.
pub(crate) fn argmin_first(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Exhaustive search for the strategy minimizing `ln E e^{αℓ}`; ties go to
/// the lowest index.
pub fn brute_force_optimum(p: &FiniteDistribution, table: &FiniteCostTable, alpha: f64) -> Result<(usize, f64)> {
    let moments = (0..table.n_strategies())
        .map(|s| exp_moment(p, table, s, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin_first(&moments))
}

/// Min-max and max-min of the Gibbs functional over strategies × grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleGap {
    pub minmax: f64,
    pub maxmin: f64,
    /// Strategy attaining the min-max.
    pub minmax_strategy: usize,
    /// Grid point attaining the max-min.
    pub maxmin_q: FiniteDistribution,
}

impl SaddleGap {
    pub fn gap(&self) -> f64 {
        self.minmax - self.maxmin
    }
}

/// Evaluates both sides of the minimax equality for
/// `f(s,Q) = α E_Q ℓ(X,s) − D(Q‖P)` with `Q` restricted to the lattice.
/// A zero gap means a saddle point exists; a positive gap certifies nothing.
pub fn saddle_gap(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    alpha: f64,
    grid_resolution: usize,
) -> Result<SaddleGap> {
    table.check_alphabet(p)?;
    check_grid(p, grid_resolution)?;
    let m = p.len();
    let n = grid_resolution;
    let n_s = table.n_strategies();
    let pv = p.probs();

    struct Partial {
        col_max: Vec<f64>,
        best_min: f64,
        best_q: Option<Vec<f64>>,
    }

    let partials: Vec<Partial> = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut part = Partial {
                col_max: vec![f64::NEG_INFINITY; n_s],
                best_min: f64::NEG_INFINITY,
                best_q: None,
            };
            let mut q = vec![0.0; m];
            simplex::for_each_with_first(m, n, first, |parts| {
                for (qi, &k) in q.iter_mut().zip(parts) {
                    *qi = k as f64 / n as f64;
                }
                let mut div = 0.0;
                for (&qi, &pi) in q.iter().zip(pv) {
                    if qi > 0.0 {
                        if pi == 0.0 {
                            return;
                        }
                        div += qi * (qi / pi).ln();
                    }
                }
                let mut row_min = f64::INFINITY;
                for (s, col) in table.columns().enumerate() {
                    let e: f64 = q.iter().zip(col).map(|(qi, l)| qi * l).sum();
                    let v = alpha * e - div;
                    if v > part.col_max[s] {
                        part.col_max[s] = v;
                    }
                    row_min = row_min.min(v);
                }
                if row_min > part.best_min {
                    part.best_min = row_min;
                    part.best_q = Some(q.clone());
                }
            });
            part
        })
        .collect();

    let mut col_max = vec![f64::NEG_INFINITY; n_s];
    let mut maxmin = f64::NEG_INFINITY;
    let mut maxmin_q = None;
    for part in partials {
        for (acc, v) in col_max.iter_mut().zip(&part.col_max) {
            *acc = acc.max(*v);
        }
        if part.best_min > maxmin {
            maxmin = part.best_min;
            maxmin_q = part.best_q;
        }
    }
    let (minmax_strategy, minmax) = argmin_first(&col_max);
    Ok(SaddleGap {
        minmax,
        maxmin,
        minmax_strategy,
        maxmin_q: FiniteDistribution::new(maxmin_q.expect("support of p is on the lattice"))?,
    })
}

/// Monte Carlo estimate of `E e^{αℓ(X,s)}` (not its logarithm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Minimum sample count accepted by the Monte Carlo estimators.
pub const MC_MIN_SAMPLES: usize = 100;

/// Seeded i.i.d. Monte Carlo estimate of `E_P e^{αℓ(X,s)}`. Identical
/// arguments always give identical results.
pub fn mc_estimate_exp_moment(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    s: usize,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    table.check_alphabet(p)?;
    table.check_strategy(s)?;
    if n_samples < MC_MIN_SAMPLES {
        return Err(domain(
            "n_samples",
            n_samples as f64,
            "at least 100 samples are required",
        ));
    }
    let sampler = WeightedIndex::new(p.probs()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = table.column(s).iter().map(|l| (alpha * l).exp()).collect();
    let mut acc = Welford::default();
    for _ in 0..n_samples {
        acc.push(values[sampler.sample(&mut rng)]);
    }
    Ok(acc.estimate(n_samples, seed))
}

/// Running mean and variance.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn estimate(&self, n_samples: usize, seed: u64) -> MCEstimate {
        MCEstimate {
            mean: self.mean,
            std_error: self.std_error(),
            n_samples,
            seed,
        }
    }

    pub(crate) fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var.max(0.0) / self.count as f64).sqrt()
    }
}
