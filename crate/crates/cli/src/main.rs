//! Command-line front end for heavy-tail CTE estimation.
//!
//! Three subcommands:
//!
//! * `estimate` — fit a loss file (one numeric loss per line) and report the
//!   Hill and censored-ML tail fits plus both CTE estimates per level.
//! * `simulate` — Monte Carlo bias/RMSE table over sample sizes and levels.
//! * `ksweep`   — Monte Carlo mean of both estimators over a grid of k.
//!
//! Data goes to stdout (or `--output`); warnings and diagnostics go to
//! stderr. Exit codes: 0 success, 1 usage/I-O error, 2 estimation failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use tailcte::montecarlo::{
    ksweep_csv, ksweep_json, simulation_csv, simulation_json, EstimatorSet,
};
use tailcte::{
    choose_k, cml_fit, cte_new, cte_old, hill, k_sweep, max_valid_k, run_experiment, CmlOptions,
    ExperimentConfig, FallbackPolicy, HeavyTailModel, KRule, SortedSample, DEFAULT_SEED,
};

const EXIT_USAGE: u8 = 1;
const EXIT_ESTIMATION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tailcte",
    about = "Conditional tail expectation estimation for heavy-tailed losses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the CTE of a loss sample read from a file.
    Estimate(EstimateArgs),
    /// Monte Carlo comparison of the estimators across sample sizes.
    Simulate(SimulateArgs),
    /// Monte Carlo mean of both estimators over a grid of k.
    Ksweep(KsweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Write data here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input file: one numeric loss per line; an optional header line is
    /// detected and skipped; blank lines are ignored.
    #[arg(long)]
    input: PathBuf,
    /// Levels t, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    t: Vec<f64>,
    /// Fixed number of upper order statistics.
    #[arg(long, conflicts_with = "epsilon")]
    k: Option<usize>,
    /// Exponent for the rule k = floor(n^(1-epsilon)).
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Fall back to the Hill-based estimate when the bias-reduced fit fails.
    #[arg(long)]
    fallback: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ModelArgs {
    /// Loss model family.
    #[arg(long, value_parser = ["frechet", "burr", "pareto"])]
    model: String,
    /// Tail index for frechet/pareto; for burr, sets tau = alpha/lambda.
    #[arg(long)]
    alpha: Option<f64>,
    /// Burr lambda parameter.
    #[arg(long)]
    lambda: Option<f64>,
    /// Burr tau parameter.
    #[arg(long, conflicts_with = "alpha")]
    tau: Option<f64>,
}

impl ModelArgs {
    fn build(&self) -> Result<HeavyTailModel, String> {
        match self.model.as_str() {
            "frechet" => {
                let a = self.alpha.ok_or("--model frechet requires --alpha")?;
                HeavyTailModel::frechet(a).map_err(|e| e.to_string())
            }
            "pareto" => {
                let a = self.alpha.ok_or("--model pareto requires --alpha")?;
                HeavyTailModel::pareto(a).map_err(|e| e.to_string())
            }
            "burr" => {
                let lambda = self.lambda.ok_or("--model burr requires --lambda")?;
                match (self.tau, self.alpha) {
                    (Some(tau), None) => {
                        HeavyTailModel::burr(lambda, tau).map_err(|e| e.to_string())
                    }
                    (None, Some(alpha)) => HeavyTailModel::burr_with_tail_index(alpha, lambda)
                        .map_err(|e| e.to_string()),
                    (None, None) => HeavyTailModel::burr(lambda, 1.0).map_err(|e| e.to_string()),
                    (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
                }
            }
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
    n: Vec<usize>,
    /// Levels t, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.95")]
    t: Vec<f64>,
    /// Replications per configuration.
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Master seed; every replication derives its own stream from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fixed number of upper order statistics.
    #[arg(long, conflicts_with = "epsilon")]
    k: Option<usize>,
    /// Exponent for the rule k = floor(n^(1-epsilon)).
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Estimators to run, comma separated subset of old,new.
    #[arg(long, value_delimiter = ',', default_value = "old,new")]
    estimators: Vec<String>,
    /// Substitute the old estimate when the new one fails on a replication.
    #[arg(long)]
    fallback: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct KsweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Level t (a single value; keep below 1 - kmax/n to cover the grid).
    #[arg(long, default_value_t = 0.1)]
    t: f64,
    #[arg(long, default_value_t = 50)]
    kmin: usize,
    #[arg(long, default_value_t = 850)]
    kmax: usize,
    #[arg(long, default_value_t = 50)]
    step: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() -> ExitCode {
    // clap exits with its own code 2 on parse errors; remap to the documented
    // usage exit code 1 (2 is reserved for estimation failures)
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let code = match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Ksweep(args) => cmd_ksweep(&args),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn usage<S: Into<String>>(msg: S) -> (u8, String) {
    (EXIT_USAGE, msg.into())
}

fn write_output(out: &OutputArgs, data: &str) -> CmdResult {
    match &out.output {
        Some(path) => fs::write(path, data)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn warn_epsilon(epsilon: f64, used_rule: bool) {
    if used_rule && !(epsilon > 0.2 && epsilon < 1.0 / 3.0) {
        eprintln!(
            "warning: epsilon = {epsilon} is outside (1/5, 1/3); \
             the k-selection growth conditions are not guaranteed"
        );
    }
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

fn read_losses(path: &PathBuf) -> Result<Vec<f64>, (u8, String)> {
    let file = fs::File::open(path)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut losses = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| usage(format!("read error at line {}: {e}", lineno + 1)))?;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => losses.push(v),
            Ok(v) => {
                return Err(usage(format!(
                    "non-finite value {v} at line {}",
                    lineno + 1
                )))
            }
            Err(_) if lineno == 0 => continue, // header line
            Err(_) => {
                return Err(usage(format!(
                    "cannot parse `{token}` at line {}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(losses)
}

struct EstimateRow {
    n: usize,
    t: f64,
    k: usize,
    hill_alpha: f64,
    cml_alpha: Option<f64>,
    cml_beta: Option<f64>,
    c_hat: Option<f64>,
    d_hat: Option<f64>,
    cte_old: Option<f64>,
    cte_new: Option<f64>,
    sigma2: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| tailcte::montecarlo::format_significant(x, 10))
        .unwrap_or_default()
}

fn cmd_estimate(args: &EstimateArgs) -> CmdResult {
    let losses = read_losses(&args.input)?;
    if losses.len() < 2 {
        return Err(usage(format!(
            "need at least 2 observations, found {}",
            losses.len()
        )));
    }
    let sample = SortedSample::new(losses).map_err(|e| usage(e.to_string()))?;
    let n = sample.n();

    for &t in &args.t {
        if !(t > 0.0 && t < 1.0) {
            return Err(usage(format!("level t = {t} must lie in (0, 1)")));
        }
    }
    if let Some(k) = args.k {
        if k < 1 || k >= n {
            return Err(usage(format!("k = {k} out of range for n = {n}")));
        }
    }
    warn_epsilon(args.epsilon, args.k.is_none());

    let mut rows = Vec::new();
    let mut estimation_failed = false;
    for &t in &args.t {
        let k = match args.k {
            Some(k) => k,
            None => {
                let chosen = choose_k(n, args.epsilon).k;
                let capped = chosen.min(max_valid_k(n, t)).max(2).min(n - 1);
                if capped < chosen {
                    eprintln!(
                        "note: k capped from {chosen} to {capped} so that t = {t} keeps \
                         the empirical integral non-degenerate"
                    );
                }
                capped
            }
        };
        let positives = sample.values().iter().filter(|&&x| x > 0.0).count();
        if positives < k + 2 {
            return Err(usage(format!(
                "only {positives} positive observations for k = {k}; need at least k + 2"
            )));
        }

        let hill_alpha = hill(&sample, k).map_err(|e| usage(e.to_string()))?;
        let old = match cte_old(&sample, t, k) {
            Ok(est) => Some(est.value),
            Err(e) => {
                eprintln!("warning: old estimator failed at t = {t}: {e}");
                None
            }
        };

        let mut row = EstimateRow {
            n,
            t,
            k,
            hill_alpha,
            cml_alpha: None,
            cml_beta: None,
            c_hat: None,
            d_hat: None,
            cte_old: old,
            cte_new: None,
            sigma2: None,
        };

        match cml_fit(&sample, k, &CmlOptions::default()) {
            Ok(fit) => {
                row.cml_alpha = Some(fit.alpha_hat);
                row.cml_beta = Some(fit.beta_hat);
                row.c_hat = Some(fit.c_hat);
                row.d_hat = Some(fit.d_hat);
                if !fit.plausible {
                    eprintln!(
                        "warning: tail fit at t = {t} is implausible \
                         (alpha_hat = {:.4}, beta_hat = {:.4}); treating as failed",
                        fit.alpha_hat, fit.beta_hat
                    );
                }
                eprintln!(
                    "diagnostics: t = {t}, k = {k}, converged = {}, iterations = {}, \
                     residual = {:.3e}, plausible = {}",
                    fit.converged, fit.iterations, fit.residual_norm, fit.plausible
                );
                if fit.plausible {
                    match cte_new(&sample, t, k, &fit) {
                        Ok(est) => {
                            row.cte_new = Some(est.value);
                            row.sigma2 = est.sigma2;
                            if est.ratio_warning {
                                eprintln!(
                                    "warning: beta_hat/alpha_hat close to 1; \
                                     second-order fit is weakly identified"
                                );
                            }
                        }
                        Err(e) => eprintln!("warning: new estimator failed at t = {t}: {e}"),
                    }
                }
            }
            Err(e) => eprintln!("warning: tail fit failed at t = {t}: {e}"),
        }
        if row.cte_new.is_none() {
            if args.fallback {
                eprintln!("note: falling back to the Hill-based estimate at t = {t}");
            } else {
                estimation_failed = true;
            }
        }
        if row.cte_old.is_none() {
            estimation_failed = true;
        }
        rows.push(row);
    }

    let data = match args.out.format {
        Format::Csv => {
            let mut s = String::from(
                "n,t,k,hill_alpha,cml_alpha,cml_beta,c_hat,d_hat,cte_old,cte_new,sigma2\n",
            );
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    tailcte::montecarlo::format_significant(r.t, 10),
                    r.k,
                    tailcte::montecarlo::format_significant(r.hill_alpha, 10),
                    fmt_opt(r.cml_alpha),
                    fmt_opt(r.cml_beta),
                    fmt_opt(r.c_hat),
                    fmt_opt(r.d_hat),
                    fmt_opt(r.cte_old),
                    fmt_opt(r.cte_new),
                    fmt_opt(r.sigma2),
                ));
            }
            s
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "n": r.n,
                        "t": r.t,
                        "k": r.k,
                        "hill_alpha": r.hill_alpha,
                        "cml_alpha": r.cml_alpha,
                        "cml_beta": r.cml_beta,
                        "c_hat": r.c_hat,
                        "d_hat": r.d_hat,
                        "cte_old": r.cte_old,
                        "cte_new": r.cte_new,
                        "sigma2": r.sigma2,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &data)?;

    if estimation_failed {
        return Err((
            EXIT_ESTIMATION,
            "one or more estimators failed; see warnings".to_string(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn parse_estimators(names: &[String]) -> Result<EstimatorSet, (u8, String)> {
    let mut set = EstimatorSet {
        old: false,
        new: false,
    };
    for name in names {
        match name.as_str() {
            "old" => set.old = true,
            "new" => set.new = true,
            other => return Err(usage(format!("unknown estimator `{other}`"))),
        }
    }
    if !set.old && !set.new {
        return Err(usage("at least one estimator must be selected"));
    }
    Ok(set)
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let model = args.model.build().map_err(usage)?;
    if !model.in_estimation_range() {
        eprintln!(
            "warning: tail index {} outside (1, 2); estimators are not designed for this regime",
            model.tail_index()
        );
    }
    let estimators = parse_estimators(&args.estimators)?;
    warn_epsilon(args.epsilon, args.k.is_none());

    let mut reports = Vec::new();
    for &n in &args.n {
        let mut cfg = ExperimentConfig::new(model, n, args.reps, args.t.clone(), args.seed);
        cfg.k_rule = match args.k {
            Some(k) => KRule::Fixed(k),
            None => KRule::Epsilon(args.epsilon),
        };
        cfg.estimators = estimators;
        cfg.fallback = if args.fallback {
            FallbackPolicy::OldOnFailure
        } else {
            FallbackPolicy::None
        };
        let report = run_experiment(&cfg).map_err(|e| usage(e.to_string()))?;
        for cell in &report.cells {
            if cell.failure_count > 0 {
                eprintln!(
                    "note: n = {n}, t = {}, {}: {} of {} replications failed",
                    cell.t, cell.estimator, cell.failure_count, args.reps
                );
            }
        }
        reports.push(report);
    }

    let data = match args.out.format {
        Format::Csv => simulation_csv(&reports),
        Format::Json => {
            let mut s = simulation_json(&reports);
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &data)
}

// ---------------------------------------------------------------------------
// ksweep
// ---------------------------------------------------------------------------

fn cmd_ksweep(args: &KsweepArgs) -> CmdResult {
    let model = args.model.build().map_err(usage)?;
    if !(args.t > 0.0 && args.t < 1.0) {
        return Err(usage(format!("level t = {} must lie in (0, 1)", args.t)));
    }
    if args.kmin < 2 || args.kmin >= args.kmax || args.kmax >= args.n || args.step == 0 {
        return Err(usage(format!(
            "invalid grid: need 2 <= kmin < kmax < n and step >= 1 \
             (kmin = {}, kmax = {}, step = {}, n = {})",
            args.kmin, args.kmax, args.step, args.n
        )));
    }
    let cfg = ExperimentConfig::new(model, args.n, args.reps, vec![args.t], args.seed);
    let curve = k_sweep(&cfg, args.kmin, args.kmax, args.step).map_err(|e| usage(e.to_string()))?;
    for row in &curve.rows {
        if !row.valid {
            eprintln!(
                "note: k = {} conflicts with t = {} (t >= 1 - k/n); row reported as NaN",
                row.k, args.t
            );
        }
    }
    let data = match args.out.format {
        Format::Csv => ksweep_csv(&curve),
        Format::Json => {
            let mut s = ksweep_json(&curve);
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &data)
}
