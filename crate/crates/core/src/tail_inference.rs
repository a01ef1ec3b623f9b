//! Tail-index and second-order parameter estimation, and extreme-quantile
//! extrapolation.
//!
//! Two routes are provided for the tail index α:
//!
//! * [`hill`] — the reciprocal mean log-excess over the top k order
//!   statistics. Consistent, tight, but first-order only.
//! * [`cml_fit`] — a censored-maximum-likelihood fit of the pair (α, β)
//!   under the two-term tail model 1-F(x) = c·x^(-α) + d·x^(-β) + o(x^(-β)),
//!   solved as a 2-equation score system under the constraint β > α. The
//!   fitted pair drives the scale coefficients (ĉ, d̂) and the bias-reduced
//!   quantile extrapolation [`li_quantile`].
//!
//! The score system has spurious stationary points in addition to the
//! statistically meaningful one: an entire degenerate manifold where
//! β equals the reciprocal mean log-excess (there G_i ≡ 1 identically and
//! both equations hold for any α), label-swapped mixture roots where the
//! second component carries most of the mass, and near-ridge roots with
//! β ≈ α. The solver therefore runs a short ladder of starting points and
//! screens each converged root against plausibility bands (see
//! [`TailFit::plausible`]) before accepting it; the first root on the ladder
//! that passes the screen wins, and if none passes, the first genuine root is
//! returned with `plausible == false` so callers can apply their own policy.

use crate::empirical::SortedSample;
use crate::error::{Error, Result};

/// β̂/α̂ below this is treated as the degenerate β → α ridge.
const MIN_ORDER_RATIO: f64 = 1.05;
/// β̂/α̂ above this carries no usable second-order signal at practical k.
const MAX_ORDER_RATIO: f64 = 8.0;
/// Bounds on the fitted mixture coupling B̂ = α̂β̂H(α̂)/(α̂-β̂). The fitted
/// power-law component has relative weight 1+B̂, so B̂ near -1 (vanishing
/// first component) or large positive (cancelling components) marks a
/// label-swapped or degenerate fit.
const MIN_COUPLING: f64 = -0.5;
const MAX_COUPLING: f64 = 2.0;
/// Accepted α̂ must stay within this band around the Hill estimate.
const HILL_BAND_LO: f64 = 0.75;
const HILL_BAND_HI: f64 = 1.5;

/// Ladder of β₀/α₀ ratios for the solver starting points, tried in order.
const START_RATIOS: [f64; 7] = [2.0, 1.5, 3.0, 4.0, 1.25, 2.5, 6.0];

/// Maximum step (in the transformed coordinates) per Newton iteration.
const MAX_NEWTON_STEP: f64 = 1.0;
/// Relative step for the central-difference Jacobian.
const JACOBIAN_STEP: f64 = 1e-6;
/// Step halvings before a Newton iteration is declared stuck.
const MAX_HALVINGS: u32 = 30;

/// Hill estimator: reciprocal mean log-excess of the top k order statistics
/// over the threshold X_{n-k:n}.
pub fn hill(s: &SortedSample, k: usize) -> Result<f64> {
    let m = mean_log_excess(s, k, 1)?;
    Ok(1.0 / m)
}

/// Mean log-excess M = (1/k) Σ_{i=1..k} ln(X_{n-i+1:n} / X_{n-k:n}).
/// `min_k` distinguishes hill (k ≥ 1) from the two-parameter fit (k ≥ 2).
fn mean_log_excess(s: &SortedSample, k: usize, min_k: usize) -> Result<f64> {
    let n = s.n();
    if k < min_k || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    let threshold = s.values()[n - k - 1];
    if threshold <= 0.0 {
        return Err(Error::NonPositiveThreshold { threshold });
    }
    let mut sum = 0.0;
    for i in 0..k {
        sum += (s.values()[n - 1 - i] / threshold).ln();
    }
    let m = sum / k as f64;
    if m <= 0.0 {
        return Err(Error::DegenerateTail);
    }
    Ok(m)
}

fn log_excesses(s: &SortedSample, k: usize) -> Vec<f64> {
    let n = s.n();
    let threshold = s.values()[n - k - 1];
    (0..k)
        .map(|i| (s.values()[n - 1 - i] / threshold).ln())
        .collect()
}

/// Options for [`cml_fit`].
#[derive(Debug, Clone)]
pub struct CmlOptions {
    /// Max-norm residual below which a root is accepted.
    pub tolerance: f64,
    /// Newton iteration budget per starting point.
    pub max_iterations: u32,
    /// Optional override for the initial α (default: Hill).
    pub initial_alpha: Option<f64>,
    /// Optional override for the initial β (default: 2·α₀).
    pub initial_beta: Option<f64>,
}

impl Default for CmlOptions {
    fn default() -> Self {
        CmlOptions {
            tolerance: 1e-10,
            max_iterations: 100,
            initial_alpha: None,
            initial_beta: None,
        }
    }
}

/// One evaluation of the censored-ML score system at (α, β).
#[derive(Debug, Clone)]
pub struct CmlSystemState {
    /// H(α) = 1/α - M.
    pub h_value: f64,
    /// G_i(α, β) values for i = 1..k.
    pub g: Vec<f64>,
    /// (mean(1/G) - 1, mean(log-excess/G) - 1/β).
    pub residuals: (f64, f64),
}

impl CmlSystemState {
    /// Evaluate the system on precomputed log-excesses.
    pub fn evaluate(log_excesses: &[f64], mean_log_excess: f64, alpha: f64, beta: f64) -> Self {
        let k = log_excesses.len() as f64;
        let h = 1.0 / alpha - mean_log_excess;
        let coupling = alpha * beta * h / (alpha - beta);
        let lead = (alpha / beta) * (1.0 + coupling);
        let mut g = Vec::with_capacity(log_excesses.len());
        let mut inv_sum = 0.0;
        let mut weighted_sum = 0.0;
        for &l in log_excesses {
            let gi = lead * ((beta - alpha) * l).exp() - coupling;
            inv_sum += 1.0 / gi;
            weighted_sum += l / gi;
            g.push(gi);
        }
        CmlSystemState {
            h_value: h,
            g,
            residuals: (inv_sum / k - 1.0, weighted_sum / k - 1.0 / beta),
        }
    }

    pub fn residual_norm(&self) -> f64 {
        self.residuals.0.abs().max(self.residuals.1.abs())
    }

    /// Whether the state is admissible as a solver iterate: all G_i strictly
    /// positive and finite, residuals finite.
    pub fn admissible(&self) -> bool {
        self.g.iter().all(|&g| g.is_finite() && g > 0.0)
            && self.residuals.0.is_finite()
            && self.residuals.1.is_finite()
    }
}

/// Fitted tail parameters with solver diagnostics.
#[derive(Debug, Clone)]
pub struct TailFit {
    /// Number of upper order statistics used.
    pub k: usize,
    /// Sample size.
    pub n: usize,
    /// First-order tail index estimate.
    pub alpha_hat: f64,
    /// Second-order parameter estimate, > alpha_hat.
    pub beta_hat: f64,
    /// Fitted first-order scale coefficient.
    pub c_hat: f64,
    /// Fitted second-order coefficient.
    pub d_hat: f64,
    /// M = (1/k) Σ ln(X_{n-i+1:n}/X_{n-k:n}).
    pub mean_log_excess: f64,
    /// Threshold order statistic X_{n-k:n}.
    pub threshold: f64,
    /// True iff the returned point is a root: residual ≤ tolerance and
    /// beta_hat > alpha_hat > 0.
    pub converged: bool,
    /// Newton iterations spent across all starting points.
    pub iterations: u32,
    /// Final max-norm residual of the score system.
    pub residual_norm: f64,
    /// True iff the root also passed the plausibility screen (coupling and
    /// ratio bands, α̂ within the Hill band). Implausible fits are genuine
    /// roots of the system but are poor bases for extrapolation; Monte Carlo
    /// callers count them as failures.
    pub plausible: bool,
}

impl TailFit {
    /// Mixture coupling B̂ = α̂β̂H(α̂)/(α̂-β̂) of the fitted root.
    pub fn coupling(&self) -> f64 {
        let h = 1.0 / self.alpha_hat - self.mean_log_excess;
        self.alpha_hat * self.beta_hat * h / (self.alpha_hat - self.beta_hat)
    }
}

/// Fit (α̂, β̂) by censored maximum likelihood on the top k order statistics
/// and derive (ĉ, d̂).
///
/// Damped Newton iteration on the 2-dimensional score residual, run in the
/// transformed coordinates (ln α, ln(β-α)) which enforce β > α > 0
/// unconditionally. The Jacobian is numerically differenced (central,
/// relative step 1e-6); damping halves the step until all G_i stay positive
/// and the residual norm does not increase. Starting points are Hill for α
/// paired with a ladder of β/α ratios (2 first); an explicit
/// `initial_alpha`/`initial_beta` override is tried before the ladder.
pub fn cml_fit(s: &SortedSample, k: usize, opts: &CmlOptions) -> Result<TailFit> {
    let m = mean_log_excess(s, k, 2)?;
    let n = s.n();
    let threshold = s.values()[n - k - 1];
    let excesses = log_excesses(s, k);
    let hill_alpha = 1.0 / m;

    let mut starts: Vec<(f64, f64)> = Vec::with_capacity(START_RATIOS.len() + 1);
    if opts.initial_alpha.is_some() || opts.initial_beta.is_some() {
        let a0 = opts.initial_alpha.unwrap_or(hill_alpha);
        let b0 = opts.initial_beta.unwrap_or(2.0 * a0);
        if !(b0 > a0 && a0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "initial_beta",
                value: b0,
                reason: "initial point must satisfy beta > alpha > 0",
            });
        }
        starts.push((a0, b0));
    }
    for r in START_RATIOS {
        starts.push((hill_alpha, r * hill_alpha));
    }

    let mut total_iterations = 0u32;
    let mut first_root: Option<(f64, f64, f64)> = None; // (alpha, beta, residual)
    let mut best_failure: Option<(f64, f64, f64)> = None;
    let mut saw_domain_failure = false;

    for &(a0, b0) in &starts {
        match newton_attempt(&excesses, m, a0, b0, opts) {
            AttemptOutcome::Root {
                alpha,
                beta,
                residual,
                iterations,
            } => {
                total_iterations += iterations;
                let plausible = passes_screen(alpha, beta, m, hill_alpha);
                if plausible {
                    return Ok(build_fit(
                        s,
                        k,
                        alpha,
                        beta,
                        m,
                        threshold,
                        residual,
                        total_iterations,
                        true,
                    ));
                }
                if first_root.is_none() {
                    first_root = Some((alpha, beta, residual));
                }
            }
            AttemptOutcome::Stuck {
                alpha,
                beta,
                residual,
                iterations,
                domain_failure,
            } => {
                total_iterations += iterations;
                saw_domain_failure |= domain_failure;
                if best_failure.is_none_or(|(_, _, r)| residual < r) {
                    best_failure = Some((alpha, beta, residual));
                }
            }
        }
    }

    if let Some((alpha, beta, residual)) = first_root {
        return Ok(build_fit(
            s,
            k,
            alpha,
            beta,
            m,
            threshold,
            residual,
            total_iterations,
            false,
        ));
    }
    let (alpha, beta, residual) =
        best_failure.unwrap_or((hill_alpha, 2.0 * hill_alpha, f64::INFINITY));
    if saw_domain_failure && !residual.is_finite() {
        return Err(Error::NumericalDomain { alpha, beta });
    }
    Err(Error::NonConvergence {
        iterations: total_iterations,
        residual_norm: residual,
        alpha,
        beta,
    })
}

fn passes_screen(alpha: f64, beta: f64, m: f64, hill_alpha: f64) -> bool {
    let ratio = beta / alpha;
    if !(MIN_ORDER_RATIO..=MAX_ORDER_RATIO).contains(&ratio) {
        return false;
    }
    let h = 1.0 / alpha - m;
    let coupling = alpha * beta * h / (alpha - beta);
    if !coupling.is_finite() || coupling <= MIN_COUPLING || coupling > MAX_COUPLING {
        return false;
    }
    alpha >= HILL_BAND_LO * hill_alpha && alpha <= HILL_BAND_HI * hill_alpha
}

#[allow(clippy::too_many_arguments)]
fn build_fit(
    s: &SortedSample,
    k: usize,
    alpha: f64,
    beta: f64,
    m: f64,
    threshold: f64,
    residual: f64,
    iterations: u32,
    plausible: bool,
) -> TailFit {
    let (c_hat, d_hat) = scale_coefficients(s.n(), k, threshold, m, alpha, beta);
    TailFit {
        k,
        n: s.n(),
        alpha_hat: alpha,
        beta_hat: beta,
        c_hat,
        d_hat,
        mean_log_excess: m,
        threshold,
        converged: true,
        iterations,
        residual_norm: residual,
        plausible,
    }
}

enum AttemptOutcome {
    Root {
        alpha: f64,
        beta: f64,
        residual: f64,
        iterations: u32,
    },
    Stuck {
        alpha: f64,
        beta: f64,
        residual: f64,
        iterations: u32,
        domain_failure: bool,
    },
}

/// One damped-Newton run from (a0, b0) in coordinates (ln α, ln(β-α)).
fn newton_attempt(
    excesses: &[f64],
    m: f64,
    a0: f64,
    b0: f64,
    opts: &CmlOptions,
) -> AttemptOutcome {
    let eval = |x: f64, y: f64| -> Option<(f64, f64, CmlSystemState)> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        let alpha = x.exp();
        let beta = alpha + y.exp();
        if !(beta.is_finite() && beta > alpha && alpha > 0.0) {
            return None;
        }
        let state = CmlSystemState::evaluate(excesses, m, alpha, beta);
        if state.admissible() {
            Some((alpha, beta, state))
        } else {
            None
        }
    };

    let mut x = a0.ln();
    let mut y = (b0 - a0).ln();
    let Some((mut alpha, mut beta, mut state)) = eval(x, y) else {
        return AttemptOutcome::Stuck {
            alpha: a0,
            beta: b0,
            residual: f64::INFINITY,
            iterations: 0,
            domain_failure: true,
        };
    };

    for iter in 0..opts.max_iterations {
        let rn = state.residual_norm();
        if rn <= opts.tolerance {
            return AttemptOutcome::Root {
                alpha,
                beta,
                residual: rn,
                iterations: iter,
            };
        }

        // central-difference Jacobian in the transformed coordinates
        let hx = JACOBIAN_STEP * x.abs().max(1.0);
        let hy = JACOBIAN_STEP * y.abs().max(1.0);
        let stencil = [
            eval(x + hx, y),
            eval(x - hx, y),
            eval(x, y + hy),
            eval(x, y - hy),
        ];
        let [Some(px), Some(mx), Some(py), Some(my)] = stencil else {
            return AttemptOutcome::Stuck {
                alpha,
                beta,
                residual: rn,
                iterations: iter,
                domain_failure: true,
            };
        };
        let j00 = (px.2.residuals.0 - mx.2.residuals.0) / (2.0 * hx);
        let j10 = (px.2.residuals.1 - mx.2.residuals.1) / (2.0 * hx);
        let j01 = (py.2.residuals.0 - my.2.residuals.0) / (2.0 * hy);
        let j11 = (py.2.residuals.1 - my.2.residuals.1) / (2.0 * hy);
        let det = j00 * j11 - j01 * j10;
        if !det.is_finite() || det.abs() < 1e-300 {
            return AttemptOutcome::Stuck {
                alpha,
                beta,
                residual: rn,
                iterations: iter,
                domain_failure: false,
            };
        }
        let (r0, r1) = state.residuals;
        let mut dx = -(j11 * r0 - j01 * r1) / det;
        let mut dy = -(-j10 * r0 + j00 * r1) / det;
        let step = dx.abs().max(dy.abs());
        if step > MAX_NEWTON_STEP {
            dx *= MAX_NEWTON_STEP / step;
            dy *= MAX_NEWTON_STEP / step;
        }

        let mut lambda = 1.0;
        let mut accepted = false;
        let mut domain_failure = false;
        for _ in 0..=MAX_HALVINGS {
            match eval(x + lambda * dx, y + lambda * dy) {
                Some((a, b, st)) if st.residual_norm() <= rn => {
                    x += lambda * dx;
                    y += lambda * dy;
                    alpha = a;
                    beta = b;
                    state = st;
                    accepted = true;
                    break;
                }
                Some(_) => {}
                None => domain_failure = true,
            }
            lambda *= 0.5;
        }
        if !accepted {
            return AttemptOutcome::Stuck {
                alpha,
                beta,
                residual: rn,
                iterations: iter,
                domain_failure,
            };
        }
    }
    AttemptOutcome::Stuck {
        alpha,
        beta,
        residual: state.residual_norm(),
        iterations: opts.max_iterations,
        domain_failure: false,
    }
}

/// Scale coefficients (ĉ, d̂) for fitted (α̂, β̂).
///
/// ĉ = (α̂β̂/(α̂-β̂)) · (k/n) · X_{n-k:n}^α̂ · (1/β̂ - M)
/// d̂ = (α̂β̂/(β̂-α̂)) · (k/n) · X_{n-k:n}^β̂ · (1/α̂ - M)
///
/// These are exactly the coefficients of the two-term tail implied by the
/// fitted censored mixture: writing B̂ = α̂β̂(1/α̂-M)/(α̂-β̂), one has
/// ĉ = (k/n)·u^α̂·(1+B̂) and d̂ = -B̂·(k/n)·u^β̂, so ĉ vanishes exactly when
/// M = 1/β̂ and d̂ vanishes exactly when M = 1/α̂.
pub fn hall_coefficients(
    s: &SortedSample,
    k: usize,
    alpha_hat: f64,
    beta_hat: f64,
) -> Result<(f64, f64)> {
    if alpha_hat == beta_hat {
        return Err(Error::SingularCoefficients { alpha: alpha_hat });
    }
    if !(beta_hat > alpha_hat && alpha_hat > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta_hat",
            value: beta_hat,
            reason: "need beta_hat > alpha_hat > 0",
        });
    }
    let m = mean_log_excess(s, k, 1)?;
    let threshold = s.values()[s.n() - k - 1];
    Ok(scale_coefficients(
        s.n(),
        k,
        threshold,
        m,
        alpha_hat,
        beta_hat,
    ))
}

fn scale_coefficients(
    n: usize,
    k: usize,
    threshold: f64,
    m: f64,
    alpha: f64,
    beta: f64,
) -> (f64, f64) {
    let frac = k as f64 / n as f64;
    let lead = alpha * beta / (alpha - beta) * frac;
    let c = lead * threshold.powf(alpha) * (1.0 / beta - m);
    let d = -lead * threshold.powf(beta) * (1.0 / alpha - m);
    (c, d)
}

/// Weissman extreme-quantile extrapolation
/// Q̂(1-prob) = (k/n)^(1/α̂) · X_{n-k:n} · prob^(-1/α̂).
pub fn weissman_quantile(s: &SortedSample, k: usize, alpha_hat: f64, prob: f64) -> Result<f64> {
    let n = s.n();
    if k < 1 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    if alpha_hat.is_nan() || alpha_hat <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha_hat",
            value: alpha_hat,
            reason: "must be > 0",
        });
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter {
            name: "prob",
            value: prob,
            reason: "must lie in (0, 1)",
        });
    }
    let frac = k as f64 / n as f64;
    Ok(frac.powf(1.0 / alpha_hat) * s.values()[n - k - 1] * prob.powf(-1.0 / alpha_hat))
}

/// Bias-reduced extreme-quantile extrapolation
/// Q̂(1-prob) = ĉ^(1/α̂) prob^(-1/α̂) (1 + α̂⁻¹ ĉ^(-β̂/α̂) d̂ prob^(β̂/α̂-1)).
pub fn li_quantile(fit: &TailFit, prob: f64) -> Result<f64> {
    if !fit.converged {
        return Err(Error::FitNotConverged);
    }
    if fit.c_hat <= 0.0 {
        return Err(Error::UnusableFit { c_hat: fit.c_hat });
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter {
            name: "prob",
            value: prob,
            reason: "must lie in (0, 1)",
        });
    }
    let a = fit.alpha_hat;
    let b = fit.beta_hat;
    let correction =
        fit.d_hat * fit.c_hat.powf(-b / a) * prob.powf(b / a - 1.0) / a;
    Ok(fit.c_hat.powf(1.0 / a) * prob.powf(-1.0 / a) * (1.0 + correction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{pareto_quantile, sample, HeavyTailModel};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> SortedSample {
        SortedSample::new(v.to_vec()).unwrap()
    }

    fn synthetic_fit(alpha: f64, beta: f64, c: f64, d: f64) -> TailFit {
        TailFit {
            k: 10,
            n: 100,
            alpha_hat: alpha,
            beta_hat: beta,
            c_hat: c,
            d_hat: d,
            mean_log_excess: 1.0 / alpha,
            threshold: 1.0,
            converged: true,
            iterations: 0,
            residual_norm: 0.0,
            plausible: true,
        }
    }

    #[test]
    fn hill_hand_values() {
        let e = std::f64::consts::E;
        let data = s(&[1.0, e, e * e, e * e * e]);
        assert_relative_eq!(hill(&data, 2).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(hill(&data, 1).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn hill_errors() {
        let data = s(&[-1.0, 0.5, 1.0, 2.0]);
        assert!(matches!(
            hill(&data, 3),
            Err(Error::NonPositiveThreshold { .. })
        ));
        let tied = s(&[1.0, 5.0, 5.0, 5.0]);
        assert!(matches!(hill(&tied, 2), Err(Error::DegenerateTail)));
        let small = s(&[1.0, 2.0]);
        assert!(matches!(hill(&small, 2), Err(Error::KOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn hill_scale_invariance(
            data in proptest::collection::vec(0.01f64..1e4, 5..40),
            scale in 1e-3f64..1e3,
            k_frac in 0.2f64..0.8,
        ) {
            let base = SortedSample::new(data.clone()).unwrap();
            let k = ((data.len() as f64 * k_frac) as usize).clamp(1, data.len() - 1);
            let scaled = SortedSample::new(data.iter().map(|x| x * scale).collect()).unwrap();
            match (hill(&base, k), hill(&scaled, k)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "inconsistent results {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn hill_on_deterministic_pareto_grid() {
        // plug-in fixture: X_{i:n} = Pareto quantile at i/(n+1)
        let n = 10_000;
        let alpha = 1.5;
        let values: Vec<f64> = (1..=n)
            .map(|i| pareto_quantile(i as f64 / (n + 1) as f64, alpha).unwrap())
            .collect();
        let fixture = SortedSample::new(values).unwrap();
        let est = hill(&fixture, 500).unwrap();
        assert!(
            (est - alpha).abs() / alpha < 0.10,
            "hill {est} more than 10% from {alpha}"
        );
    }

    #[test]
    fn cml_residuals_at_root_are_small() {
        let m = HeavyTailModel::frechet(1.5).unwrap();
        let data = sample(&m, 2000, 31).unwrap();
        let fit = cml_fit(&data, 177, &CmlOptions::default()).unwrap();
        assert!(fit.converged);
        let state = CmlSystemState::evaluate(
            &log_excesses(&data, 177),
            fit.mean_log_excess,
            fit.alpha_hat,
            fit.beta_hat,
        );
        assert!(state.residual_norm() <= 1e-8);
        assert!(state.admissible());
        assert!(fit.beta_hat > fit.alpha_hat && fit.alpha_hat > 0.0);
    }

    #[test]
    fn cml_degenerate_top_errors() {
        let tied = s(&[1.0, 2.0, 7.0, 7.0, 7.0, 7.0]);
        assert!(matches!(
            cml_fit(&tied, 3, &CmlOptions::default()),
            Err(Error::DegenerateTail)
        ));
    }

    #[test]
    fn cml_k_bounds() {
        let data = s(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            cml_fit(&data, 1, &CmlOptions::default()),
            Err(Error::KOutOfRange { .. })
        ));
    }

    #[test]
    fn cml_monte_carlo_medians() {
        // Fréchet α = 1.5, n = 2000, k = 177, 100 seeds: median α̂ in
        // [1.2, 1.8], median β̂ in [2.0, 4.0] (truth α = 1.5, β = 3)
        let m = HeavyTailModel::frechet(1.5).unwrap();
        let opts = CmlOptions::default();
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        for seed in 0..100u64 {
            let data = sample(&m, 2000, seed).unwrap();
            if let Ok(fit) = cml_fit(&data, 177, &opts) {
                alphas.push(fit.alpha_hat);
                betas.push(fit.beta_hat);
            }
        }
        assert!(alphas.len() >= 85, "too few converged fits: {}", alphas.len());
        alphas.sort_by(f64::total_cmp);
        betas.sort_by(f64::total_cmp);
        let med_a = alphas[alphas.len() / 2];
        let med_b = betas[betas.len() / 2];
        assert!((1.2..=1.8).contains(&med_a), "median alpha {med_a}");
        assert!((2.0..=4.0).contains(&med_b), "median beta {med_b}");
    }

    #[test]
    fn hall_zero_factor_identities() {
        let data = s(&[0.5, 1.0, 2.0, 3.0, 5.0, 11.0]);
        let m = mean_log_excess(&data, 3, 1).unwrap();
        // M = 1/alpha_hat kills d_hat
        let alpha = 1.0 / m;
        let (_, d) = hall_coefficients(&data, 3, alpha, 2.0 * alpha).unwrap();
        assert!(d.abs() < 1e-12);
        // M = 1/beta_hat kills c_hat
        let beta = 1.0 / m;
        let (c, _) = hall_coefficients(&data, 3, beta / 2.0, beta).unwrap();
        assert!(c.abs() < 1e-12);
        assert!(matches!(
            hall_coefficients(&data, 3, 1.5, 1.5),
            Err(Error::SingularCoefficients { .. })
        ));
    }

    #[test]
    fn hall_at_true_parameters_recovers_model_coefficients() {
        // Fréchet α = 1.5 has β = 3, c = 1, d = -1/2. Evaluating the
        // coefficient formulas at the true pair over 100 seeds must land on
        // the model values on average.
        let m = HeavyTailModel::frechet(1.5).unwrap();
        let mut c_sum = 0.0;
        let mut d_sum = 0.0;
        for seed in 0..100u64 {
            let data = sample(&m, 2000, seed).unwrap();
            let (c, d) = hall_coefficients(&data, 177, 1.5, 3.0).unwrap();
            c_sum += c;
            d_sum += d;
        }
        let c_mean = c_sum / 100.0;
        let d_mean = d_sum / 100.0;
        assert!((0.5..=1.5).contains(&c_mean), "mean c_hat {c_mean}");
        assert!((-1.0..=0.0).contains(&d_mean), "mean d_hat {d_mean}");
    }

    #[test]
    fn weissman_values() {
        // anchor: prob = k/n returns the threshold exactly
        let data = s(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let alpha = 1.7;
        let q = weissman_quantile(&data, 2, alpha, 0.2).unwrap();
        assert_relative_eq!(q, 8.0, max_relative = 1e-12);
        // hand: X = 4, k/n = 0.1, α̂ = 2, prob = 0.025 → 4·(0.1/0.025)^(1/2) = 8
        let mut v = vec![0.5; 9];
        v.push(4.0);
        v[8] = 4.0; // threshold X_{9:10} = 4
        let data = SortedSample::new(v).unwrap();
        let q = weissman_quantile(&data, 1, 2.0, 0.025).unwrap();
        assert_relative_eq!(q, 8.0, max_relative = 1e-12);
        let mut v = vec![0.5; 9];
        v.push(5.0);
        v[8] = 5.0;
        let data = SortedSample::new(v).unwrap();
        let q = weissman_quantile(&data, 1, 2.0, 0.1 / 16.0).unwrap();
        assert_relative_eq!(q, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn weissman_monotone_in_prob() {
        let data = s(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let prob = i as f64 * 0.02;
            let q = weissman_quantile(&data, 3, 1.5, prob).unwrap();
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn li_quantile_values() {
        // d̂ = 0 reduces to the pure power law
        let fit = synthetic_fit(1.5, 3.0, 2.0, 0.0);
        let q = li_quantile(&fit, 0.01).unwrap();
        assert_relative_eq!(
            q,
            2.0f64.powf(1.0 / 1.5) * 0.01f64.powf(-1.0 / 1.5),
            max_relative = 1e-12
        );
        // hand: ĉ=1, d̂=-0.5, α̂=1.5, β̂=3, prob=0.01
        let fit = synthetic_fit(1.5, 3.0, 1.0, -0.5);
        assert_relative_eq!(
            li_quantile(&fit, 0.01).unwrap(),
            21.4725324106511,
            max_relative = 1e-10
        );
    }

    #[test]
    fn li_pure_power_law_is_loglog_linear() {
        let fit = synthetic_fit(1.6, 3.2, 0.7, 0.0);
        let probs = [1e-4, 1e-3, 1e-2];
        let logq: Vec<f64> = probs
            .iter()
            .map(|&p| li_quantile(&fit, p).unwrap().ln())
            .collect();
        let slope1 = (logq[1] - logq[0]) / (probs[1].ln() - probs[0].ln());
        let slope2 = (logq[2] - logq[1]) / (probs[2].ln() - probs[1].ln());
        assert_relative_eq!(slope1, -1.0 / 1.6, max_relative = 1e-10);
        assert_relative_eq!(slope2, slope1, max_relative = 1e-10);
    }

    #[test]
    fn li_equals_weissman_when_reduced() {
        // d̂ = 0 and ĉ = (k/n)·X^α̂ makes the two extrapolations identical
        let data = s(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let k = 3;
        let alpha = 1.8;
        let x = data.values()[data.n() - k - 1];
        let c = (k as f64 / data.n() as f64) * x.powf(alpha);
        let mut fit = synthetic_fit(alpha, 3.6, c, 0.0);
        fit.k = k;
        fit.n = data.n();
        for prob in [0.001, 0.01, 0.05, 0.2] {
            let lw = weissman_quantile(&data, k, alpha, prob).unwrap();
            let ll = li_quantile(&fit, prob).unwrap();
            assert_relative_eq!(ll, lw, max_relative = 1e-12);
        }
    }

    #[test]
    fn li_rejects_unusable_fit() {
        let fit = synthetic_fit(1.5, 3.0, -0.2, 0.0);
        assert!(matches!(
            li_quantile(&fit, 0.01),
            Err(Error::UnusableFit { .. })
        ));
        let mut fit = synthetic_fit(1.5, 3.0, 1.0, 0.0);
        fit.converged = false;
        assert!(matches!(li_quantile(&fit, 0.01), Err(Error::FitNotConverged)));
    }
}
