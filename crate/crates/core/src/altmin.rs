//! Alternating minimization for `max_s E exp{−α ℓ(X,s)}`.
//!
//! `ln E e^{−αℓ(X,s)} = −min_Q [α E_Q ℓ(X,s) + D(Q‖P)]`, so alternating the
//! exact minimizations over `Q` (a tilt by `−αℓ`) and over `s` (a first-moment
//! minimization under `Q`) never decreases the objective. The limit satisfies
//! the necessary conditions only; it need not be the global maximizer.

use crate::error::{domain, Result};
use crate::probability::{tilted_measure, FiniteDistribution};
use crate::strategy::{argmin_first, exp_moment, FiniteCostTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltMinConfig {
    pub max_iter: usize,
    /// Stop once the objective gain of a step falls below this.
    pub tol: f64,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The best response under `Q_k` is `s_k` itself.
    FixedPoint,
    /// The best response revisits an earlier strategy with equal objective.
    Cycle,
    /// The last step improved the objective by less than `tol`.
    SmallGain,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltMinTrajectory {
    pub strategy_sequence: Vec<usize>,
    /// `ln E e^{−αℓ(X,s_k)}` for each iterate.
    pub objective_sequence: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
}

impl AltMinTrajectory {
    pub fn final_strategy(&self) -> usize {
        *self.strategy_sequence.last().expect("non-empty trajectory")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_sequence.last().expect("non-empty trajectory")
    }
}

/// Runs the alternating iteration from `s0`. Ties in the strategy step go to
/// the lowest index.
pub fn alt_minimize_neg_moment(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    alpha: f64,
    s0: usize,
    config: AltMinConfig,
) -> Result<AltMinTrajectory> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(domain("alpha", alpha, "must be positive and finite"));
    }
    let mut strategies = vec![s0];
    let mut objectives = vec![exp_moment(p, table, s0, -alpha)?];
    let mut stop = StopReason::MaxIter;

    while strategies.len() - 1 < config.max_iter {
        let current = *strategies.last().unwrap();
        let next = best_response(p, table, current, alpha)?;
        if next == current {
            stop = StopReason::FixedPoint;
            break;
        }
        if strategies.contains(&next) {
            stop = StopReason::Cycle;
            break;
        }
        let obj = exp_moment(p, table, next, -alpha)?;
        let gain = obj - objectives.last().unwrap();
        strategies.push(next);
        objectives.push(obj);
        if gain < config.tol {
            stop = StopReason::SmallGain;
            break;
        }
    }

    Ok(AltMinTrajectory {
        iterations: strategies.len() - 1,
        strategy_sequence: strategies,
        objective_sequence: objectives,
        converged: stop != StopReason::MaxIter,
        stop_reason: stop,
    })
}

/// `argmin_{s'} E_Q ℓ(X,s')` with `Q ∝ P e^{−αℓ(·,s)}`.
pub fn best_response(p: &FiniteDistribution, table: &FiniteCostTable, s: usize, alpha: f64) -> Result<usize> {
    let q = tilted_measure(p, table.column(s), -alpha)?.q;
    let first: Vec<f64> = table.columns().map(|c| q.expectation(c)).collect();
    Ok(argmin_first(&first).0)
}

/// The first-moment optimum `argmin_s E_P ℓ(X,s)`, the natural initial
/// guess (it is the exact answer as `α → 0`).
pub fn first_moment_start(p: &FiniteDistribution, table: &FiniteCostTable) -> usize {
    let first: Vec<f64> = table.columns().map(|c| p.expectation(c)).collect();
    argmin_first(&first).0
}

/// Runs the iteration from every strategy and keeps the best final
/// objective (ties to the lowest starting index).
pub fn multi_start(
    p: &FiniteDistribution,
    table: &FiniteCostTable,
    alpha: f64,
    config: AltMinConfig,
) -> Result<AltMinTrajectory> {
    let mut best: Option<AltMinTrajectory> = None;
    for s0 in 0..table.n_strategies() {
        let t = alt_minimize_neg_moment(p, table, alpha, s0, config)?;
        if best
            .as_ref()
            .map_or(true, |b| t.final_objective() > b.final_objective())
        {
            best = Some(t);
        }
    }
    Ok(best.expect("tables have at least one strategy"))
}

/// Exhaustive `max_s ln E e^{−αℓ(X,s)}`, ties to the lowest index.
pub fn brute_force_neg_moment(p: &FiniteDistribution, table: &FiniteCostTable, alpha: f64) -> Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..table.n_strategies() {
        let v = exp_moment(p, table, s, -alpha)?;
        if v > best.1 {
            best = (s, v);
        }
    }
    Ok(best)
}
