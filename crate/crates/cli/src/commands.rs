use std::f64::consts::LN_2;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use expmoment_core::altmin::{self, AltMinConfig};
use expmoment_core::curie_weiss::{self, CWParams, GridRange};
use expmoment_core::estimators::{
    self, CrbSpec, FiniteSupportPrior, FixpointConfig, GaussianLocationFamily, TwoPointPrior,
};
use expmoment_core::exponents::{self, BaConfig, DistortionMatrix, ExponentOptions, LambdaFunctional, OracleMode};
use expmoment_core::numfmt::parse_real_list;
use expmoment_core::probability::tilted_measure;
use expmoment_core::strategy::{self, CERTIFY_TOL};
use expmoment_core::{FiniteCostTable, FiniteDistribution};

use crate::args::*;
use crate::output::{Cell, Report, Table};

pub fn read_text(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load_dist(a: &DistArgs) -> Result<FiniteDistribution> {
    let text = match (&a.p, &a.p_file) {
        (Some(list), _) => list.clone(),
        (None, Some(path)) => read_text(path)?,
        (None, None) => bail!("a distribution is required (--p or --p-file)"),
    };
    Ok(FiniteDistribution::parse(&text)?)
}

struct Instance {
    p: FiniteDistribution,
    table: FiniteCostTable,
    codes: Option<(usize, Vec<FiniteDistribution>)>,
}

fn load_instance(d: &DistArgs, t: &TableArgs) -> Result<Instance> {
    let p = load_dist(d)?;
    match (&t.table, t.code_grid) {
        (Some(path), _) => Ok(Instance {
            table: FiniteCostTable::parse_csv(&read_text(path)?)?,
            p,
            codes: None,
        }),
        (None, Some(n)) => {
            let (table, codes) = estimators::code_length_table(p.len(), n)?;
            Ok(Instance {
                p,
                table,
                codes: Some((n, codes)),
            })
        }
        (None, None) => bail!("a cost table is required (--table or --code-grid)"),
    }
}

fn list(text: &str) -> Result<Vec<f64>> {
    let v = parse_real_list(text)?;
    if v.is_empty() {
        bail!("empty list");
    }
    Ok(v)
}

fn distortion_matrix(path: &Option<std::path::PathBuf>, m: usize) -> Result<DistortionMatrix> {
    match path {
        Some(p) => Ok(DistortionMatrix::parse_csv(&read_text(p)?)?),
        None => Ok(DistortionMatrix::hamming(m)),
    }
}

/// Unit conversion for rates and exponents.
struct Units {
    bits: bool,
}

impl Units {
    fn rate(&self, x: f64) -> f64 {
        if self.bits {
            x / LN_2
        } else {
            x
        }
    }
}

pub fn execute(command: &Command, bits: bool) -> Result<Report> {
    let units = Units { bits };
    match command {
        Command::Tilt(a) => tilt(a),
        Command::Moment(a) => moment(a),
        Command::Certify(a) => certify(a),
        Command::Saddle(a) => saddle(a),
        Command::Altmin(a) => altmin_cmd(a),
        Command::CodeDist(a) => code_dist(a),
        Command::BayesFixpoint(a) => bayes(a),
        Command::GaussianMoment(a) => gaussian(a),
        Command::CrbBound(a) => crb(a),
        Command::Exponent(a) => exponent(a, &units),
        Command::Guessing(a) => guessing(a, &units),
        Command::Rd(a) => rd(a, &units),
        Command::TwoPart(a) => two_part(a, &units),
        Command::Rem(a) => rem(a, &units),
        Command::CwExponent(a) => cw_exponent(a),
        Command::CwPhaseDiagram(a) => phase_diagram(a),
        Command::Mc(a) => mc(a),
        Command::Config(_) => Err(anyhow!("config files cannot be nested")),
    }
}

fn tilt(a: &TiltArgs) -> Result<Report> {
    let p = load_dist(&a.dist)?;
    let cost = list(&a.cost)?;
    if cost.len() != p.len() {
        bail!("cost has {} entries but the distribution has {}", cost.len(), p.len());
    }
    let t = tilted_measure(&p, &cost, a.alpha)?;
    let mut table = Table::new(&["symbol", "p", "cost", "q", "log_z"]);
    for x in 0..p.len() {
        table.push(vec![
            x.into(),
            p[x].into(),
            cost[x].into(),
            t.q[x].into(),
            t.log_z.into(),
        ]);
    }
    Ok(table.into())
}

fn moment(a: &MomentArgs) -> Result<Report> {
    let inst = load_instance(&a.dist, &a.table)?;
    let strategies: Vec<usize> = match a.s {
        Some(s) => vec![s],
        None => (0..inst.table.n_strategies()).collect(),
    };
    let mut table = Table::new(&["strategy", "alpha", "log_moment"]);
    for s in strategies {
        let v = strategy::exp_moment(&inst.p, &inst.table, s, a.alpha)?;
        table.push(vec![s.into(), a.alpha.into(), v.into()]);
    }
    Ok(table.into())
}

fn certify(a: &CertifyArgs) -> Result<Report> {
    let inst = load_instance(&a.dist, &a.table)?;
    let s = match a.s {
        Some(s) => s,
        None => strategy::brute_force_optimum(&inst.p, &inst.table, a.alpha)?.0,
    };
    let tol = a.tol.unwrap_or(match &inst.codes {
        Some((n, _)) => inst.p.len() as f64 / *n as f64,
        None => CERTIFY_TOL,
    });
    let r = strategy::theorem1_certify(&inst.p, &inst.table, s, a.alpha, tol)?;
    let mut table = Table::new(&[
        "strategy",
        "certified",
        "q_objective_gap",
        "tol",
        "log_z",
        "best_under_q",
        "tilted_q",
        "code",
    ]);
    let code = inst
        .codes
        .as_ref()
        .map_or(Cell::Empty, |(_, codes)| Cell::list(codes[s].probs()));
    table.push(vec![
        s.into(),
        r.certified.into(),
        r.q_objective_gap.into(),
        tol.into(),
        r.log_z.into(),
        r.best_under_q.into(),
        Cell::list(r.tilted_q.probs()),
        code,
    ]);
    Ok(table.into())
}

fn saddle(a: &SaddleArgs) -> Result<Report> {
    let inst = load_instance(&a.dist, &a.table)?;
    let g = strategy::saddle_gap(&inst.p, &inst.table, a.alpha, a.res)?;
    let mut table = Table::new(&["minmax", "maxmin", "gap", "minmax_strategy", "maxmin_q"]);
    table.push(vec![
        g.minmax.into(),
        g.maxmin.into(),
        g.gap().into(),
        g.minmax_strategy.into(),
        Cell::list(g.maxmin_q.probs()),
    ]);
    Ok(table.into())
}

fn altmin_cmd(a: &AltminArgs) -> Result<Report> {
    let inst = load_instance(&a.dist, &a.table)?;
    let config = AltMinConfig {
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let tr = if a.multi_start {
        altmin::multi_start(&inst.p, &inst.table, a.alpha, config)?
    } else {
        let s0 = a.s0.unwrap_or_else(|| altmin::first_moment_start(&inst.p, &inst.table));
        altmin::alt_minimize_neg_moment(&inst.p, &inst.table, a.alpha, s0, config)?
    };
    let mut table = Table::new(&["iteration", "strategy_index", "objective"]);
    for (i, (s, v)) in tr.strategy_sequence.iter().zip(&tr.objective_sequence).enumerate() {
        table.push(vec![i.into(), (*s).into(), (*v).into()]);
    }
    let (best_s, best_v) = altmin::brute_force_neg_moment(&inst.p, &inst.table, a.alpha)?;
    let notes = vec![format!(
        "stop: {:?}; brute-force optimum s={} objective={}; gap={}",
        tr.stop_reason,
        best_s,
        expmoment_core::numfmt::fmt12(best_v),
        expmoment_core::numfmt::fmt12(best_v - tr.final_objective())
    )];
    Ok(Report {
        table,
        nonconverged: !tr.converged,
        notes,
    })
}

fn code_dist(a: &CodeDistArgs) -> Result<Report> {
    let p = load_dist(&a.dist)?;
    let r = estimators::optimal_code_distribution(&p, a.alpha)?;
    let mut table = Table::new(&["symbol", "p", "s_q", "log_moment"]);
    for x in 0..p.len() {
        table.push(vec![x.into(), p[x].into(), r.code[x].into(), r.log_moment.into()]);
    }
    Ok(table.into())
}

fn bayes(a: &BayesArgs) -> Result<Report> {
    let prior = match (&a.prior, a.phi_plus, a.phi_minus) {
        (Some(path), _, _) => FiniteSupportPrior::parse_csv(&read_text(path)?)?,
        (None, Some(pp), Some(pm)) => TwoPointPrior::new(pp, pm)?.to_finite_support(),
        _ => bail!("a prior is required (--prior or --phi-plus/--phi-minus)"),
    };
    let config = FixpointConfig {
        max_iter: a.max_iter,
        tol: a.tol,
        damping: a.damping,
    };
    if let Some(starts) = &a.starts {
        let ms = estimators::bayes_linear_multistart(&prior, a.alpha, &list(starts)?, config)?;
        let mut table = Table::new(&["s", "log_moment", "best"]);
        for (i, (s, v)) in ms.roots.iter().enumerate() {
            table.push(vec![(*s).into(), (*v).into(), (i == ms.best).into()]);
        }
        return Ok(table.into());
    }
    let r = estimators::bayes_linear_fixpoint(&prior, a.alpha, a.s0, config)?;
    let log_moment = estimators::linear_estimator_log_moment(&prior, a.alpha, r.s)?;
    let mut table = Table::new(&["s", "iterations", "residual", "converged", "log_moment"]);
    table.push(vec![
        r.s.into(),
        r.iterations.into(),
        r.residual.into(),
        r.converged.into(),
        log_moment.into(),
    ]);
    Ok(Report {
        table,
        nonconverged: !r.converged,
        notes: Vec::new(),
    })
}

fn gaussian(a: &GaussianArgs) -> Result<Report> {
    let fam = GaussianLocationFamily::new(a.n, a.sigma2, a.theta)?;
    let v = estimators::gaussian_sample_mean_moment(&fam, a.alpha)?;
    let mc = a
        .mc_samples
        .map(|n| estimators::gaussian_sample_mean_mc(&fam, a.alpha, n, a.seed))
        .transpose()?;
    let mut table = Table::new(&[
        "n",
        "sigma2",
        "alpha",
        "moment",
        "log_moment",
        "mc_mean",
        "mc_std_error",
    ]);
    table.push(vec![
        a.n.into(),
        a.sigma2.into(),
        a.alpha.into(),
        v.into(),
        v.ln().into(),
        Cell::opt(mc.map(|m| m.mean)),
        Cell::opt(mc.map(|m| m.std_error)),
    ]);
    Ok(table.into())
}

fn crb(a: &CrbArgs) -> Result<Report> {
    let fam = GaussianLocationFamily::new(a.n, a.sigma2, a.theta)?;
    let half = 10.0 * (a.sigma2 / a.n as f64).sqrt();
    let spec = CrbSpec {
        family: fam,
        search_interval: (a.lo.unwrap_or(a.theta - half), a.hi.unwrap_or(a.theta + half)),
    };
    let b = estimators::crb_lower_bound(&spec, a.theta, a.alpha, a.grid)?;
    let exact = estimators::gaussian_sample_mean_moment(&fam, a.alpha).ok().map(f64::ln);
    let mut table = Table::new(&[
        "bound_log",
        "bound",
        "argmax_theta_prime",
        "unbounded",
        "exact_log_moment",
    ]);
    table.push(vec![
        b.bound_log.into(),
        b.bound_log.exp().into(),
        b.argmax_theta_prime.into(),
        b.unbounded.into(),
        Cell::opt(exact),
    ]);
    Ok(table.into())
}

fn oracle_mode(text: &str) -> Result<OracleMode> {
    match text {
        "auto" => Ok(OracleMode::Auto),
        "off" => Ok(OracleMode::Off),
        n => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(OracleMode::Resolution)
            .ok_or_else(|| anyhow!("--oracle must be auto, off or a positive resolution, got '{n}'")),
    }
}

fn exponent(a: &ExponentArgs, u: &Units) -> Result<Report> {
    let p = load_dist(&a.dist)?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| anyhow!("--lambda {:?} needs {flag}", a.lambda));
    let lam = match a.lambda {
        LambdaKind::Shannon => LambdaFunctional::ShannonEntropy,
        LambdaKind::Guessing => LambdaFunctional::GuessingMin {
            rate: need(a.rate, "--R")?,
        },
        LambdaKind::Rd => LambdaFunctional::RateDistortion {
            distortion: distortion_matrix(&a.distortion, p.len())?,
            d: need(a.distortion_level, "--D")?,
        },
        LambdaKind::Dr => LambdaFunctional::DistortionRate {
            distortion: distortion_matrix(&a.distortion, p.len())?,
            rate: need(a.rate, "--R")?,
        },
    };
    let opts = ExponentOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        oracle: oracle_mode(&a.oracle)?,
    };
    let r = exponents::generic_exponent(&p, &lam, a.alpha, opts)?;
    let closed = match &lam {
        LambdaFunctional::ShannonEntropy => Some(exponents::lossless_exponent(&p, a.alpha)?),
        LambdaFunctional::GuessingMin { rate } if p.has_full_support() && a.alpha > 0.0 => {
            Some(exponents::guessing_exponent_closed(&p, *rate, a.alpha)?.value)
        }
        _ => None,
    };
    let mut table = Table::new(&[
        "lambda",
        "alpha",
        "value",
        "closed_form",
        "solver_iterations",
        "converged",
        "oracle_gap",
        "argmax_q",
    ]);
    table.push(vec![
        lam.name().into(),
        a.alpha.into(),
        u.rate(r.value).into(),
        Cell::opt(closed.map(|v| u.rate(v))),
        r.solver_iterations.into(),
        r.converged.into(),
        Cell::opt(r.oracle_gap.map(|v| u.rate(v))),
        Cell::list(r.argmax_q.probs()),
    ]);
    Ok(Report {
        table,
        nonconverged: !r.converged,
        notes: Vec::new(),
    })
}

fn guessing(a: &GuessingArgs, u: &Units) -> Result<Report> {
    let p = load_dist(&a.dist)?;
    let rows = exponents::guessing_sweep(&p, &list(&a.alpha)?, &list(&a.rate)?, a.oracle)?;
    let mut table = Table::new(&["alpha", "R", "value", "phase", "theta_r", "oracle_gap"]);
    for r in rows {
        table.push(vec![
            r.alpha.into(),
            u.rate(r.rate).into(),
            u.rate(r.value).into(),
            r.phase.as_str().into(),
            Cell::opt(r.theta_r),
            Cell::opt(r.oracle_gap.map(|v| u.rate(v))),
        ]);
    }
    Ok(table.into())
}

fn rd(a: &RdArgs, u: &Units) -> Result<Report> {
    let q = load_dist(&a.dist)?;
    let d = distortion_matrix(&a.distortion, q.len())?;
    let config = BaConfig {
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let pt = match (a.distortion_level, a.rate, a.slope) {
        (Some(dd), _, _) => exponents::rate_distortion(&q, &d, dd, config)?,
        (None, Some(r), _) => exponents::distortion_rate(&q, &d, r, config)?,
        (None, None, Some(s)) => exponents::blahut_arimoto_rd(&q, &d, s, config)?,
        _ => bail!("one of --D, --R or --slope is required"),
    };
    let binary_hamming = q.len() == 2 && d == DistortionMatrix::hamming(2);
    let closed = if binary_hamming && pt.distortion <= q[0].min(q[1]) {
        Some(exponents::binary_rate_distortion(q[0], pt.distortion)?)
    } else {
        None
    };
    let mut table = Table::new(&["rate", "distortion", "closed_form_rate", "iterations", "converged"]);
    table.push(vec![
        u.rate(pt.rate).into(),
        pt.distortion.into(),
        Cell::opt(closed.map(|v| u.rate(v))),
        pt.iterations.into(),
        pt.converged.into(),
    ]);
    Ok(Report {
        table,
        nonconverged: !pt.converged,
        notes: Vec::new(),
    })
}

fn two_part(a: &TwoPartArgs, u: &Units) -> Result<Report> {
    let p = load_dist(&a.dist)?;
    let lossless = exponents::lossless_exponent(&p, a.alpha)?;
    let mut table = Table::new(&["n", "value", "lossless", "gap"]);
    for n in list(&a.n)? {
        if n < 1.0 || n.fract() != 0.0 {
            bail!("block lengths must be positive integers, got {n}");
        }
        let v = exponents::two_part_code_exact_moment(&p, a.alpha, n as usize)?;
        table.push(vec![
            (n as usize).into(),
            u.rate(v).into(),
            u.rate(lossless).into(),
            u.rate(lossless - v).into(),
        ]);
    }
    Ok(table.into())
}

fn rem(a: &RemArgs, u: &Units) -> Result<Report> {
    let mut table = Table::new(&["R", "alpha", "value", "critical_alpha", "delta", "branch"]);
    for alpha in list(&a.alpha)? {
        let e = exponents::rem_lossy_exponent(a.rate, alpha)?;
        let branch = if alpha <= e.critical_alpha { "low" } else { "high" };
        table.push(vec![
            u.rate(a.rate).into(),
            alpha.into(),
            u.rate(e.value).into(),
            e.critical_alpha.into(),
            e.delta.into(),
            branch.into(),
        ]);
    }
    Ok(table.into())
}

fn cw_exponent(a: &CwArgs) -> Result<Report> {
    let params = CWParams::new(a.mu, a.alpha)?;
    let pt = curie_weiss::classify_phase(params);
    let finite = a.n.map(|n| curie_weiss::cw_exact_finite_n(params, n)).transpose()?;
    let mut table = Table::new(&[
        "mu",
        "alpha",
        "B",
        "J",
        "n_fixed_points",
        "fixed_points",
        "dominant_m",
        "exponent",
        "tie",
        "phase",
        "n",
        "finite_n_value",
    ]);
    table.push(vec![
        a.mu.into(),
        a.alpha.into(),
        params.field().into(),
        params.coupling().into(),
        pt.fixed_points.len().into(),
        Cell::list(&pt.fixed_points),
        pt.dominant_m.into(),
        pt.exponent.into(),
        pt.tie.into(),
        pt.phase.as_str().into(),
        a.n.map_or(Cell::Empty, Cell::from),
        Cell::opt(finite),
    ]);
    Ok(table.into())
}

fn phase_diagram(a: &PhaseDiagramArgs) -> Result<Report> {
    let mu: GridRange = a.mu_range.parse().context("--mu-range")?;
    let alpha: GridRange = a.alpha_range.parse().context("--alpha-range")?;
    let rows = curie_weiss::phase_diagram_grid(mu, alpha)?;
    let mut table = Table::new(&["mu", "alpha", "n_fixed_points", "dominant_m", "exponent", "phase"]);
    for r in rows {
        table.push(vec![
            r.params.mu.into(),
            r.params.alpha.into(),
            r.fixed_points.len().into(),
            r.dominant_m.into(),
            r.exponent.into(),
            r.phase.as_str().into(),
        ]);
    }
    Ok(table.into())
}

fn mc(a: &McArgs) -> Result<Report> {
    let inst = load_instance(&a.dist, &a.table)?;
    let est = strategy::mc_estimate_exp_moment(&inst.p, &inst.table, a.s, a.alpha, a.samples, a.seed)?;
    let exact = strategy::exp_moment(&inst.p, &inst.table, a.s, a.alpha)?.exp();
    let mut table = Table::new(&["strategy", "alpha", "mean", "std_error", "n_samples", "seed", "exact"]);
    table.push(vec![
        a.s.into(),
        a.alpha.into(),
        est.mean.into(),
        est.std_error.into(),
        est.n_samples.into(),
        Cell::Text(est.seed.to_string()),
        exact.into(),
    ]);
    Ok(table.into())
}
