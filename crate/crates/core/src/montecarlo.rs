//! Deterministic, parallelizable Monte Carlo harness for estimator
//! benchmarking: bias/RMSE tables over sample sizes and levels, and
//! threshold-sensitivity sweeps over k.
//!
//! Replication r draws its sample from the RNG stream (seed, r), so the
//! report is a pure function of the configuration: results are bit-identical
//! under any worker count. Aggregation always reduces in replication order.
//!
//! Failed replications (solver non-convergence, implausible fits, estimator
//! precondition violations) are excluded from the aggregates and counted in
//! `failure_count`; with [`FallbackPolicy::OldOnFailure`] the old estimate
//! stands in for a failed new one (still counted as a failure).

use crate::cte::{choose_k, cte_new, cte_old, max_valid_k, Method};
use crate::distributions::{sample_stream, true_cte, HeavyTailModel};
use crate::error::{Error, Result};
use crate::tail_inference::{cml_fit, CmlOptions, TailFit};
use rayon::prelude::*;
use serde::Serialize;

/// How the threshold count k is chosen for a given (n, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    /// Use exactly this k; configurations where some level t conflicts with
    /// it (t >= 1 - k/n) are rejected.
    Fixed(usize),
    /// k = ⌊n^(1-ε)⌋, capped per level at the largest k compatible with t.
    Epsilon(f64),
}

/// Which estimators an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSet {
    pub old: bool,
    pub new: bool,
}

impl Default for EstimatorSet {
    fn default() -> Self {
        EstimatorSet {
            old: true,
            new: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackPolicy {
    None,
    OldOnFailure,
}

/// One Monte Carlo experiment: a model, a sample size, and a set of levels.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: HeavyTailModel,
    pub n: usize,
    pub reps: usize,
    pub t_levels: Vec<f64>,
    pub k_rule: KRule,
    pub seed: u64,
    pub estimators: EstimatorSet,
    pub fallback: FallbackPolicy,
    pub cml: CmlOptions,
}

impl ExperimentConfig {
    pub fn new(model: HeavyTailModel, n: usize, reps: usize, t_levels: Vec<f64>, seed: u64) -> Self {
        ExperimentConfig {
            model,
            n,
            reps,
            t_levels,
            k_rule: KRule::Epsilon(0.25),
            seed,
            estimators: EstimatorSet::default(),
            fallback: FallbackPolicy::None,
            cml: CmlOptions::default(),
        }
    }
}

/// Aggregates for one (t, estimator) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub t: f64,
    pub estimator: Method,
    pub resolved_k: usize,
    pub true_cte: f64,
    /// Monte Carlo mean over successful replications; None if all failed.
    pub mc_mean: Option<f64>,
    /// mc_mean - true_cte.
    pub bias: Option<f64>,
    /// sqrt(mean of squared errors) over successful replications.
    pub rmse: Option<f64>,
    pub failure_count: usize,
}

/// Per-configuration Monte Carlo aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub model: String,
    pub alpha: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub cells: Vec<CellReport>,
}

/// One grid row of a k-sweep.
#[derive(Debug, Clone, Serialize)]
pub struct KSweepRow {
    pub k: usize,
    /// False when t >= 1 - k/n makes the estimators undefined at this k.
    pub valid: bool,
    pub mean_old: Option<f64>,
    pub mean_new: Option<f64>,
    pub failures_old: usize,
    pub failures_new: usize,
}

/// Monte Carlo mean of both estimators across a grid of k at fixed t.
#[derive(Debug, Clone, Serialize)]
pub struct KSweepCurve {
    pub kmin: usize,
    pub kmax: usize,
    pub step: usize,
    pub t: f64,
    pub true_cte: f64,
    pub rows: Vec<KSweepRow>,
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            value: 0.0,
            reason: "need at least one replication",
        });
    }
    if cfg.n < 3 {
        return Err(Error::KOutOfRange { k: 2, n: cfg.n });
    }
    for &t in &cfg.t_levels {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "levels must lie in (0, 1)",
            });
        }
    }
    Ok(())
}

/// Resolve the k used for a given level. The epsilon rule caps k at the
/// largest value compatible with t so that the empirical integral stays
/// non-degenerate; a fixed k conflicting with t is a configuration error.
pub fn resolve_k(n: usize, t: f64, rule: KRule) -> Result<usize> {
    match rule {
        KRule::Fixed(k) => {
            if k < 1 || k >= n {
                return Err(Error::KOutOfRange { k, n });
            }
            if t >= 1.0 - k as f64 / n as f64 {
                return Err(Error::LevelThresholdConflict { t, k, n });
            }
            Ok(k)
        }
        KRule::Epsilon(eps) => {
            let chosen = choose_k(n, eps).k;
            Ok(chosen.min(max_valid_k(n, t)).max(2).min(n - 1))
        }
    }
}

/// Per-replication estimator outcomes, one slot per (t, estimator) cell.
type RepOutcomes = Vec<Option<f64>>;

/// Run the experiment: per replication draw the stream-(seed, r) sample,
/// resolve k per level, evaluate the configured estimators, and aggregate in
/// replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    validate_config(cfg)?;
    let resolved: Vec<usize> = cfg
        .t_levels
        .iter()
        .map(|&t| resolve_k(cfg.n, t, cfg.k_rule))
        .collect::<Result<_>>()?;
    let truths: Vec<f64> = cfg
        .t_levels
        .iter()
        .map(|&t| true_cte(&cfg.model, t))
        .collect::<Result<_>>()?;

    let outcomes: Vec<RepOutcomes> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| replicate(cfg, &resolved, rep as u64))
        .collect();

    let mut cells = Vec::new();
    for (ti, (&t, &k)) in cfg.t_levels.iter().zip(&resolved).enumerate() {
        for (ei, est) in [Method::Old, Method::New].into_iter().enumerate() {
            let enabled = match est {
                Method::Old => cfg.estimators.old,
                Method::New => cfg.estimators.new,
            };
            if !enabled {
                continue;
            }
            let slot = 2 * ti + ei;
            let values = outcomes.iter().map(|rep| rep[slot]);
            cells.push(aggregate_cell(t, est, k, truths[ti], values, cfg.reps));
        }
    }

    Ok(ExperimentReport {
        model: cfg.model.family_name().to_string(),
        alpha: cfg.model.tail_index(),
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        cells,
    })
}

/// Evaluate all cells for one replication. Slot layout: 2·t_index + {0:old, 1:new}.
fn replicate(cfg: &ExperimentConfig, resolved: &[usize], rep: u64) -> RepOutcomes {
    let mut out = vec![None; 2 * cfg.t_levels.len()];
    let Ok(samp) = sample_stream(&cfg.model, cfg.n, cfg.seed, rep) else {
        return out;
    };
    // fits are per distinct k, shared across levels
    let mut fit_cache: Vec<(usize, Option<TailFit>)> = Vec::new();
    for (ti, (&t, &k)) in cfg.t_levels.iter().zip(resolved).enumerate() {
        let old_est = if cfg.estimators.old || cfg.fallback == FallbackPolicy::OldOnFailure {
            cte_old(&samp, t, k).ok().map(|e| e.value)
        } else {
            None
        };
        if cfg.estimators.old {
            out[2 * ti] = old_est;
        }
        if cfg.estimators.new {
            let fit = match fit_cache.iter().find(|(kk, _)| *kk == k) {
                Some((_, f)) => f.clone(),
                None => {
                    let f = cml_fit(&samp, k, &cfg.cml).ok().filter(|f| f.plausible);
                    fit_cache.push((k, f.clone()));
                    f
                }
            };
            let new_est = fit.and_then(|f| cte_new(&samp, t, k, &f).ok().map(|e| e.value));
            out[2 * ti + 1] = match (new_est, cfg.fallback) {
                (Some(v), _) => Some(v),
                (None, FallbackPolicy::OldOnFailure) => old_est,
                (None, FallbackPolicy::None) => None,
            };
        }
    }
    out
}

/// Reduce one cell's replication values (in replication order) to aggregates.
fn aggregate_cell(
    t: f64,
    estimator: Method,
    resolved_k: usize,
    truth: f64,
    values: impl Iterator<Item = Option<f64>>,
    reps: usize,
) -> CellReport {
    let mut sum = 0.0;
    let mut sq_sum = 0.0;
    let mut successes = 0usize;
    for v in values.flatten() {
        sum += v;
        sq_sum += (v - truth) * (v - truth);
        successes += 1;
    }
    let failure_count = reps - successes;
    let (mc_mean, bias, rmse) = if successes > 0 {
        let mean = sum / successes as f64;
        (
            Some(mean),
            Some(mean - truth),
            Some((sq_sum / successes as f64).sqrt()),
        )
    } else {
        (None, None, None)
    };
    CellReport {
        t,
        estimator,
        resolved_k,
        true_cte: truth,
        mc_mean,
        bias,
        rmse,
        failure_count,
    }
}

/// Sweep k over [kmin, kmax] with the given step at the first level of the
/// config, reusing each replication's sample across all k so that grid rows
/// differ only through k. Rows with t >= 1 - k/n are marked invalid.
pub fn k_sweep(cfg: &ExperimentConfig, kmin: usize, kmax: usize, step: usize) -> Result<KSweepCurve> {
    validate_config(cfg)?;
    if kmin < 2 || kmin >= kmax || kmax >= cfg.n || step == 0 {
        return Err(Error::InvalidParameter {
            name: "k grid",
            value: kmin as f64,
            reason: "need 2 <= kmin < kmax < n and step >= 1",
        });
    }
    let t = *cfg.t_levels.first().ok_or(Error::InvalidParameter {
        name: "t_levels",
        value: 0.0,
        reason: "k_sweep needs one level",
    })?;
    let truth = true_cte(&cfg.model, t)?;
    let ks: Vec<usize> = (kmin..=kmax).step_by(step).collect();
    let valid: Vec<bool> = ks
        .iter()
        .map(|&k| t < 1.0 - k as f64 / cfg.n as f64)
        .collect();

    let per_rep: Vec<Vec<(Option<f64>, Option<f64>)>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let Ok(samp) = sample_stream(&cfg.model, cfg.n, cfg.seed, rep as u64) else {
                return vec![(None, None); ks.len()];
            };
            ks.iter()
                .zip(&valid)
                .map(|(&k, &ok)| {
                    if !ok {
                        return (None, None);
                    }
                    let old = cte_old(&samp, t, k).ok().map(|e| e.value);
                    let new = cml_fit(&samp, k, &cfg.cml)
                        .ok()
                        .filter(|f| f.plausible)
                        .and_then(|f| cte_new(&samp, t, k, &f).ok().map(|e| e.value));
                    (old, new)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut old_sum = 0.0;
        let mut old_n = 0usize;
        let mut new_sum = 0.0;
        let mut new_n = 0usize;
        for rep in &per_rep {
            if let (Some(o), _) = rep[i] {
                old_sum += o;
                old_n += 1;
            }
            if let (_, Some(v)) = rep[i] {
                new_sum += v;
                new_n += 1;
            }
        }
        rows.push(KSweepRow {
            k,
            valid: valid[i],
            mean_old: (old_n > 0).then(|| old_sum / old_n as f64),
            mean_new: (new_n > 0).then(|| new_sum / new_n as f64),
            failures_old: cfg.reps - old_n,
            failures_new: cfg.reps - new_n,
        });
    }

    Ok(KSweepCurve {
        kmin,
        kmax,
        step,
        t,
        true_cte: truth,
        rows,
    })
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

/// Format with 10 significant digits, '.' decimal separator, no grouping.
pub fn format_significant(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if magnitude < -4 || magnitude >= digits as i32 {
        format!("{:.*e}", digits - 1, x)
    } else {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| format_significant(x, 10))
}

pub const SIMULATION_CSV_HEADER: &str = "model,alpha,n,t,k,true_cte,mean,bias,rmse,failures";

/// Render experiment reports as CSV, one row per (t, estimator) cell.
pub fn simulation_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(SIMULATION_CSV_HEADER);
    out.push('\n');
    for r in reports {
        for c in &r.cells {
            let label = format!("{}_{}", r.model, c.estimator);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                label,
                format_significant(r.alpha, 10),
                r.n,
                format_significant(c.t, 10),
                c.resolved_k,
                format_significant(c.true_cte, 10),
                opt_cell(c.mc_mean),
                opt_cell(c.bias),
                opt_cell(c.rmse),
                c.failure_count,
            ));
        }
    }
    out
}

/// JSON mirror of the CSV rows: an array of objects with the same columns.
pub fn simulation_json(reports: &[ExperimentReport]) -> String {
    #[derive(Serialize)]
    struct Row {
        model: String,
        alpha: f64,
        n: usize,
        t: f64,
        k: usize,
        true_cte: f64,
        mean: Option<f64>,
        bias: Option<f64>,
        rmse: Option<f64>,
        failures: usize,
    }
    let rows: Vec<Row> = reports
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(move |c| Row {
                model: format!("{}_{}", r.model, c.estimator),
                alpha: r.alpha,
                n: r.n,
                t: c.t,
                k: c.resolved_k,
                true_cte: c.true_cte,
                mean: c.mc_mean,
                bias: c.bias,
                rmse: c.rmse,
                failures: c.failure_count,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable rows")
}

pub const KSWEEP_CSV_HEADER: &str = "k,mean_old,mean_new,true_cte";

/// Render a k-sweep as CSV with exactly the documented four columns.
pub fn ksweep_csv(curve: &KSweepCurve) -> String {
    let mut out = String::from(KSWEEP_CSV_HEADER);
    out.push('\n');
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            opt_cell(row.mean_old),
            opt_cell(row.mean_new),
            format_significant(curve.true_cte, 10),
        ));
    }
    out
}

/// JSON mirror of the k-sweep CSV columns.
pub fn ksweep_json(curve: &KSweepCurve) -> String {
    #[derive(Serialize)]
    struct Row {
        k: usize,
        mean_old: Option<f64>,
        mean_new: Option<f64>,
        true_cte: f64,
    }
    let rows: Vec<Row> = curve
        .rows
        .iter()
        .map(|r| Row {
            k: r.k,
            mean_old: r.mean_old,
            mean_new: r.mean_new,
            true_cte: curve.true_cte,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable rows")
}
