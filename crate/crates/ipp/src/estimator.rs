//! The invariant-prediction objective and its minimization.
//!
//! For environments `e = 1..E` with per-environment empirical risks
//! `R^e(theta)` under a proper scoring rule, the penalized objective is
//!
//! ```text
//! R_lambda(theta) = sum_e w^e R^e(theta) + lambda * D(R^1(theta), ..., R^E(theta))
//! ```
//!
//! where `D` is the pairwise-variance dispersion
//! `D(v) = 1/E^2 * sum_{i<j} (v_i - v_j)^2`, zero exactly when all
//! per-environment risks agree. [`fit`] minimizes the objective over a
//! coordinate box for every value on an ascending `lambda` grid, warm-starting
//! each solve from the previous solution, and reports the whole path.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envdata::EnvDataset;
use crate::error::{Error, Result};
use crate::model::{logs_risk_gradient, ModelParams, LOG_SD_LIMIT};
use crate::optim::{nelder_mead_box, projected_gradient, MinimizeResult, NmOptions};
use crate::rng::SplitMix64;
use crate::scoring::{scale_shift, score_std, ScoreKind};

const TAG_FIT: u64 = 0xF17;

/// Slack allowed when checking the exact-minimizer monotonicity properties on
/// numerically fitted paths.
pub const MONOTONICITY_SLACK: f64 = 1e-6;

/// Default coordinate box for the parameter search.
pub const DEFAULT_BOX: (f64, f64) = (-5.0, 5.0);

/// Default penalty grid: 0 to 15 in steps of 0.5.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=30).map(|i| i as f64 * 0.5).collect()
}

/// Restart policy and convergence budgets for the box-constrained search.
///
/// Each `lambda` runs `n_starts` Nelder-Mead restarts: the previous solution
/// on the path, the unpenalized solution, and seeded uniform draws in the box.
/// Uniform draws get the `cold_iters` budget, carried-over points the
/// `warm_iters` budget; the `refine_top` best restarts are re-run at the warm
/// budget, and under the logarithmic score the winner is polished by
/// projected gradient descent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n_starts: usize,
    pub cold_iters: usize,
    pub warm_iters: usize,
    pub refine_top: usize,
    pub polish_iters: usize,
    pub polish_g_tol: f64,
    /// Carry solutions along the path as restarts. Disabling this is only
    /// useful to measure how much the warm starts matter.
    pub use_warm_starts: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n_starts: 20,
            cold_iters: 100,
            warm_iters: 500,
            refine_top: 2,
            polish_iters: 400,
            polish_g_tol: 1e-10,
            use_warm_starts: true,
        }
    }
}

/// Everything [`fit`] needs besides the data.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub kind: ScoreKind,
    /// Convex environment weights; must match the number of environments.
    pub weights: Vec<f64>,
    /// Strictly increasing, first entry >= 0.
    pub lambda_grid: Vec<f64>,
    /// Coordinate box `(lo, hi)`; `lo == hi` degenerates to a single point.
    pub box_bounds: (f64, f64),
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl FitConfig {
    /// Defaults: uniform weights over `n_env` environments, the standard
    /// penalty grid, and the box `[-5, 5]` in every coordinate.
    pub fn new(kind: ScoreKind, n_env: usize) -> Self {
        FitConfig {
            kind,
            weights: vec![1.0 / n_env as f64; n_env],
            lambda_grid: default_lambda_grid(),
            box_bounds: DEFAULT_BOX,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self, n_env: usize) -> Result<()> {
        self.kind.validate()?;
        if self.weights.len() != n_env {
            return Err(Error::invalid(format!(
                "{} weights for {} environments",
                self.weights.len(),
                n_env
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights must sum to 1, got {total}")));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::invalid("lambda grid must be non-empty"));
        }
        if self.lambda_grid[0] < 0.0 {
            return Err(Error::invalid("lambda grid must start at >= 0"));
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("lambda grid must be strictly increasing"));
        }
        let (lo, hi) = self.box_bounds;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invalid(format!("invalid box [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// One point of the fitted path.
#[derive(Debug, Clone)]
pub struct FitEntry {
    pub lambda: f64,
    pub theta_hat: ModelParams,
    pub env_risks: Vec<f64>,
    pub penalty: f64,
    pub objective: f64,
    /// Weighted pooled risk `sum_e w^e R^e`.
    pub pooled_risk: f64,
    /// Final objective of every restart, in restart order (diagnostics).
    pub restart_objectives: Vec<f64>,
}

/// Fit results over the whole penalty grid.
#[derive(Debug, Clone)]
pub struct FitPath {
    pub entries: Vec<FitEntry>,
}

impl FitPath {
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "lambda": e.lambda,
                    "theta_hat": e.theta_hat.to_json(),
                    "env_risks": e.env_risks,
                    "penalty": e.penalty,
                    "objective": e.objective,
                    "pooled_risk": e.pooled_risk,
                    "restart_objectives": e.restart_objectives,
                })
            })
            .collect();
        serde_json::Value::Array(entries)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<FitPath> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::invalid("fit path json must be an array"))?;
        let mut entries = Vec::with_capacity(arr.len());
        for item in arr {
            let get = |k: &str| -> Result<f64> {
                item.get(k)
                    .and_then(|x| x.as_f64())
                    .ok_or_else(|| Error::invalid(format!("fit path entry missing '{k}'")))
            };
            let theta = item
                .get("theta_hat")
                .ok_or_else(|| Error::invalid("fit path entry missing 'theta_hat'"))?;
            let env_risks: Vec<f64> = item
                .get("env_risks")
                .and_then(|x| serde_json::from_value(x.clone()).ok())
                .ok_or_else(|| Error::invalid("fit path entry missing 'env_risks'"))?;
            let restart_objectives: Vec<f64> = item
                .get("restart_objectives")
                .and_then(|x| serde_json::from_value(x.clone()).ok())
                .unwrap_or_default();
            entries.push(FitEntry {
                lambda: get("lambda")?,
                theta_hat: ModelParams::from_json(theta)?,
                env_risks,
                penalty: get("penalty")?,
                objective: get("objective")?,
                pooled_risk: get("pooled_risk")?,
                restart_objectives,
            });
        }
        Ok(FitPath { entries })
    }

    /// Long-format table `lambda,field,value` for plotting.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("lambda,field,value\n");
        for e in &self.entries {
            let mut push = |field: &str, value: f64| {
                out.push_str(&format!("{},{},{}\n", e.lambda, field, value));
            };
            push("objective", e.objective);
            push("pooled_risk", e.pooled_risk);
            push("penalty", e.penalty);
            for (i, r) in e.env_risks.iter().enumerate() {
                push(&format!("env_risk_{}", i + 1), *r);
            }
            push("beta0", e.theta_hat.beta0);
            for (i, b) in e.theta_hat.beta.iter().enumerate() {
                push(&format!("beta{}", i + 1), *b);
            }
            push("gamma0", e.theta_hat.gamma0);
            for (i, g) in e.theta_hat.gamma.iter().enumerate() {
                push(&format!("gamma{}", i + 1), *g);
            }
        }
        out
    }
}

/// Mean score in one environment, evaluated from the flat parameter vector.
fn env_risk_flat(
    kind: ScoreKind,
    x: &nalgebra::DMatrix<f64>,
    y: &DVector<f64>,
    flat: &DVector<f64>,
) -> Result<f64> {
    let d = x.ncols();
    let beta = flat.rows(1, d);
    let gamma = flat.rows(d + 2, d);
    let mut mu = x * beta;
    mu.add_scalar_mut(flat[0]);
    let mut lsd = x * gamma;
    lsd.add_scalar_mut(flat[d + 1]);

    let n = y.len();
    let nf = n as f64;
    let mut total = 0.0;
    match kind {
        ScoreKind::LogS => {
            // ln sd + ln(2 pi)/2 + z^2/2 without any Phi evaluations
            for i in 0..n {
                let l = lsd[i];
                if l.abs() > LOG_SD_LIMIT {
                    return Err(Error::Overflow(format!("log sd = {l} out of range")));
                }
                let z = (y[i] - mu[i]) * (-l).exp();
                total += l + 0.5 * crate::dist::LN_2PI + 0.5 * z * z;
            }
        }
        _ => {
            for i in 0..n {
                let l = lsd[i];
                if l.abs() > LOG_SD_LIMIT {
                    return Err(Error::Overflow(format!("log sd = {l} out of range")));
                }
                let z = (y[i] - mu[i]) * (-l).exp();
                let (scale, shift) = scale_shift(kind, l);
                total += scale * score_std(kind, z) + shift;
            }
        }
    }
    Ok(total / nf)
}

/// Per-environment mean scores of `params` on `data`.
pub fn env_risks(params: &ModelParams, data: &EnvDataset, kind: ScoreKind) -> Result<Vec<f64>> {
    kind.validate()?;
    if data.d() != params.dim() {
        return Err(Error::invalid(format!(
            "data has {} covariates, model expects {}",
            data.d(),
            params.dim()
        )));
    }
    let flat = params.to_flat();
    data.environments()
        .iter()
        .map(|s| env_risk_flat(kind, &s.x, &s.y, &flat))
        .collect()
}

/// Dispersion of per-environment risks:
/// `D(v) = 1/E^2 * sum_{i<j} (v_i - v_j)^2`, equal to the population
/// variance of `v`. Computed as the pairwise sum, which is exactly zero
/// if and only if all entries are equal (the environment count is small
/// everywhere this runs).
pub fn variance_penalty(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::invalid(format!(
            "dispersion needs at least 2 environments, got {}",
            v.len()
        )));
    }
    Ok(pairwise_dispersion(v))
}

fn pairwise_dispersion(v: &[f64]) -> f64 {
    let e = v.len();
    let mut total = 0.0;
    for i in 0..e {
        for j in (i + 1)..e {
            total += (v[i] - v[j]).powi(2);
        }
    }
    total / (e * e) as f64
}

fn dispersion_and_pooled(risks: &[f64], weights: &[f64]) -> (f64, f64) {
    let pooled = risks.iter().zip(weights).map(|(r, w)| r * w).sum::<f64>();
    (pairwise_dispersion(risks), pooled)
}

/// The penalized objective at `params`. With a single environment or
/// `lambda = 0` this is the weighted pooled risk.
pub fn objective(
    params: &ModelParams,
    data: &EnvDataset,
    cfg: &FitConfig,
    lambda: f64,
) -> Result<f64> {
    cfg.validate(data.n_env())?;
    let risks = env_risks(params, data, cfg.kind)?;
    let pooled: f64 = risks.iter().zip(&cfg.weights).map(|(r, w)| r * w).sum();
    if data.n_env() == 1 {
        return Ok(pooled);
    }
    Ok(pooled + lambda * variance_penalty(&risks)?)
}

/// Objective value for optimizer closures: non-finite on failure.
fn objective_flat(
    flat: &DVector<f64>,
    data: &EnvDataset,
    kind: ScoreKind,
    weights: &[f64],
    lambda: f64,
) -> f64 {
    let mut risks = Vec::with_capacity(data.n_env());
    for s in data.environments() {
        match env_risk_flat(kind, &s.x, &s.y, flat) {
            Ok(r) => risks.push(r),
            Err(_) => return f64::INFINITY,
        }
    }
    if risks.len() == 1 {
        return risks[0];
    }
    let (disp, pooled) = dispersion_and_pooled(&risks, weights);
    pooled + lambda * disp
}

/// Objective and gradient under the logarithmic score, including the penalty
/// term: `grad = sum_e (w^e + lambda * 2/E * (R^e - mean R)) * grad R^e`.
fn objective_and_grad_logs(
    flat: &DVector<f64>,
    data: &EnvDataset,
    weights: &[f64],
    lambda: f64,
) -> (f64, DVector<f64>) {
    let p = flat.len();
    let params = match ModelParams::from_flat(flat.as_slice()) {
        Ok(p) => p,
        Err(_) => return (f64::INFINITY, DVector::zeros(p)),
    };
    let e = data.n_env();
    let mut risks = Vec::with_capacity(e);
    let mut grads = Vec::with_capacity(e);
    for s in data.environments() {
        let r = match env_risk_flat(ScoreKind::LogS, &s.x, &s.y, flat) {
            Ok(r) => r,
            Err(_) => return (f64::INFINITY, DVector::zeros(p)),
        };
        let g = match logs_risk_gradient(&params, s) {
            Ok(g) => g,
            Err(_) => return (f64::INFINITY, DVector::zeros(p)),
        };
        risks.push(r);
        grads.push(g);
    }
    if e == 1 {
        return (risks[0], grads.pop().unwrap());
    }
    let (disp, pooled) = dispersion_and_pooled(&risks, weights);
    let mean = risks.iter().sum::<f64>() / e as f64;
    let value = pooled + lambda * disp;
    let mut grad = DVector::zeros(p);
    for k in 0..e {
        let coef = weights[k] + lambda * 2.0 / e as f64 * (risks[k] - mean);
        grad += &grads[k] * coef;
    }
    (value, grad)
}

/// Minimize the penalized objective over the box for every grid `lambda`.
///
/// Deterministic given `cfg.seed`: restarts draw from derived sub-streams and
/// results are reduced in restart order regardless of scheduling.
pub fn fit(data: &EnvDataset, cfg: &FitConfig) -> Result<FitPath> {
    cfg.validate(data.n_env())?;
    if data.d() == 0 {
        return Err(Error::invalid("dataset has no covariates"));
    }
    let d = data.d();
    let p = 2 * d + 2;
    let (lo, hi) = cfg.box_bounds;

    // Degenerate box: the single admissible point is the minimizer.
    if lo == hi {
        let theta = ModelParams::from_flat(&vec![lo; p])?;
        let mut entries = Vec::with_capacity(cfg.lambda_grid.len());
        for &lambda in &cfg.lambda_grid {
            let risks = env_risks(&theta, data, cfg.kind)?;
            let (disp, pooled) = dispersion_and_pooled(&risks, &cfg.weights);
            let disp = if data.n_env() >= 2 { disp } else { 0.0 };
            entries.push(FitEntry {
                lambda,
                theta_hat: theta.clone(),
                env_risks: risks,
                penalty: disp,
                objective: pooled + lambda * disp,
                pooled_risk: pooled,
                restart_objectives: vec![pooled + lambda * disp],
            });
        }
        return Ok(FitPath { entries });
    }

    let opt = cfg.optimizer;
    let mut entries: Vec<FitEntry> = Vec::with_capacity(cfg.lambda_grid.len());
    let mut prev_theta: Option<DVector<f64>> = None;
    let mut unpenalized_theta: Option<DVector<f64>> = None;

    for (k, &lambda) in cfg.lambda_grid.iter().enumerate() {
        // Restart list: carried-over solutions first, then uniform draws.
        let mut starts: Vec<(DVector<f64>, usize)> = Vec::with_capacity(opt.n_starts);
        if opt.use_warm_starts {
            if let Some(prev) = &prev_theta {
                starts.push((prev.clone(), opt.warm_iters));
            }
            if let Some(first) = &unpenalized_theta {
                if prev_theta.as_ref() != Some(first) {
                    starts.push((first.clone(), opt.warm_iters));
                }
            }
        }
        if starts.is_empty() {
            let center = DVector::from_element(p, (0.0f64).clamp(lo, hi));
            starts.push((center, opt.warm_iters));
        }
        let mut i = 0u64;
        while starts.len() < opt.n_starts.max(1) {
            let mut r = SplitMix64::from_stream(cfg.seed, &[TAG_FIT, k as u64, i]);
            let draw = DVector::from_fn(p, |_, _| r.next_range(lo, hi));
            starts.push((draw, opt.cold_iters));
            i += 1;
        }

        let results: Vec<MinimizeResult> = starts
            .par_iter()
            .map(|(x0, iters)| {
                let mut obj =
                    |x: &DVector<f64>| objective_flat(x, data, cfg.kind, &cfg.weights, lambda);
                let opts = NmOptions { max_iters: *iters, ..Default::default() };
                nelder_mead_box(&mut obj, x0, lo, hi, &opts)
            })
            .collect();
        let restart_objectives: Vec<f64> = results.iter().map(|r| r.value).collect();

        // Refine the most promising restarts at the warm budget.
        let mut order: Vec<usize> = (0..results.len()).collect();
        order.sort_by(|&a, &b| results[a].value.partial_cmp(&results[b].value).unwrap());
        let top: Vec<usize> = order.into_iter().take(opt.refine_top.max(1)).collect();
        let refined: Vec<MinimizeResult> = top
            .par_iter()
            .map(|&idx| {
                let mut obj =
                    |x: &DVector<f64>| objective_flat(x, data, cfg.kind, &cfg.weights, lambda);
                let opts = NmOptions { max_iters: opt.warm_iters, ..Default::default() };
                nelder_mead_box(&mut obj, &results[idx].x, lo, hi, &opts)
            })
            .collect();

        let mut candidates: Vec<(DVector<f64>, f64)> = results
            .iter()
            .chain(refined.iter())
            .map(|r| (r.x.clone(), r.value))
            .collect();

        // Gradient polish under LogS, starting from the current best.
        if cfg.kind == ScoreKind::LogS && opt.polish_iters > 0 {
            let best = candidates
                .iter()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(x, _)| x.clone());
            if let Some(x0) = best {
                let mut fg = |x: &DVector<f64>| {
                    objective_and_grad_logs(x, data, &cfg.weights, lambda)
                };
                let res =
                    projected_gradient(&mut fg, &x0, lo, hi, opt.polish_iters, opt.polish_g_tol);
                candidates.push((res.x, res.value));
            }
        }

        // Lowest objective wins; ties within 1e-10 break toward the smallest
        // parameter norm so the result is well defined.
        let best_value = candidates
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        if !best_value.is_finite() {
            return Err(Error::Optimization(format!(
                "no restart reached a finite objective at lambda = {lambda}; \
                 restart objectives: {restart_objectives:?}"
            )));
        }
        let best = candidates
            .iter()
            .filter(|(_, v)| *v <= best_value + 1e-10)
            .min_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap())
            .unwrap()
            .0
            .clone();

        let theta = ModelParams::from_flat(best.as_slice())?;
        let risks = env_risks(&theta, data, cfg.kind)?;
        let (disp, pooled) = dispersion_and_pooled(&risks, &cfg.weights);
        let disp = if data.n_env() >= 2 { disp } else { 0.0 };
        entries.push(FitEntry {
            lambda,
            theta_hat: theta,
            env_risks: risks,
            penalty: disp,
            objective: pooled + lambda * disp,
            pooled_risk: pooled,
            restart_objectives,
        });

        if k == 0 {
            unpenalized_theta = Some(best.clone());
        }
        prev_theta = Some(best);
    }

    Ok(FitPath { entries })
}

/// Check the exact-minimizer path properties on a fitted path, with
/// [`MONOTONICITY_SLACK`] to absorb optimizer noise: the dispersion is
/// non-increasing in `lambda` and the unweighted risk sum is non-decreasing.
pub fn penalty_monotonicity_report(path: &FitPath) -> (bool, bool) {
    let mut d_nonincreasing = true;
    let mut pooled_nondecreasing = true;
    for w in path.entries.windows(2) {
        if w[1].penalty > w[0].penalty + MONOTONICITY_SLACK {
            d_nonincreasing = false;
        }
        let s0: f64 = w[0].env_risks.iter().sum();
        let s1: f64 = w[1].env_risks.iter().sum();
        if s1 < s0 - MONOTONICITY_SLACK {
            pooled_nondecreasing = false;
        }
    }
    (d_nonincreasing, pooled_nondecreasing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LN_2PI;
    use crate::envdata::EnvSlice;
    use nalgebra::DMatrix;

    fn tiny_dataset() -> EnvDataset {
        let x1 = DMatrix::from_row_slice(3, 1, &[0.5, -0.2, 1.0]);
        let y1 = DVector::from_vec(vec![0.1, 0.4, -0.3]);
        let x2 = DMatrix::from_row_slice(3, 1, &[0.0, 0.3, -0.8]);
        let y2 = DVector::from_vec(vec![0.2, -0.1, 0.6]);
        EnvDataset::new(vec![
            EnvSlice::new("a", x1, y1).unwrap(),
            EnvSlice::new("b", x2, y2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn identical_environments_have_equal_risks() {
        let x = DMatrix::from_row_slice(4, 2, &[0.1, 0.2, -0.4, 1.0, 0.5, 0.5, 0.0, -0.2]);
        let y = DVector::from_vec(vec![1.0, 0.0, -0.5, 0.25]);
        let data = EnvDataset::new(vec![
            EnvSlice::new("a", x.clone(), y.clone()).unwrap(),
            EnvSlice::new("b", x.clone(), y.clone()).unwrap(),
            EnvSlice::new("c", x, y).unwrap(),
        ])
        .unwrap();
        let risks = env_risks(&ModelParams::zeros(2), &data, ScoreKind::Crps).unwrap();
        assert!(risks.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
        assert!((variance_penalty(&risks).unwrap()).abs() < 1e-28);
    }

    #[test]
    fn zero_params_zero_response_logs_risk() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 2.0, 3.0, -1.0, 0.0, 0.0, 2.0, 2.0, -3.0, 1.0]);
        let y = DVector::zeros(5);
        let data = EnvDataset::single(EnvSlice::new("only", x, y).unwrap());
        let risks = env_risks(&ModelParams::zeros(2), &data, ScoreKind::LogS).unwrap();
        assert_eq!(risks.len(), 1);
        assert!((risks[0] - 0.5 * LN_2PI).abs() < 1e-14);
    }

    #[test]
    fn variance_penalty_examples() {
        assert!((variance_penalty(&[3.0, 3.0, 3.0, 3.0]).unwrap()).abs() < 1e-30);
        assert!((variance_penalty(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(variance_penalty(&[1.0]).is_err());
    }

    #[test]
    fn variance_penalty_is_the_population_variance() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..20 {
            let e = 2 + (rng.next_u64() % 7) as usize;
            let v: Vec<f64> = (0..e).map(|_| rng.next_range(-3.0, 3.0)).collect();
            let mean = v.iter().sum::<f64>() / e as f64;
            let pop_var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / e as f64;
            let pairwise = variance_penalty(&v).unwrap();
            assert!((pairwise - pop_var).abs() < 1e-12 * pop_var.max(1.0));
        }
    }

    #[test]
    fn objective_reduces_to_pooled_risk() {
        let data = tiny_dataset();
        let mut cfg = FitConfig::new(ScoreKind::LogS, data.n_env());
        cfg.weights = vec![0.25, 0.75];
        let theta = ModelParams::zeros(1);
        let risks = env_risks(&theta, &data, cfg.kind).unwrap();
        let at0 = objective(&theta, &data, &cfg, 0.0).unwrap();
        assert!((at0 - (0.25 * risks[0] + 0.75 * risks[1])).abs() < 1e-14);
    }

    #[test]
    fn objective_independent_of_lambda_for_equal_risks() {
        let x = DMatrix::from_row_slice(2, 1, &[0.6, -0.3]);
        let y = DVector::from_vec(vec![0.2, 0.4]);
        let data = EnvDataset::new(vec![
            EnvSlice::new("a", x.clone(), y.clone()).unwrap(),
            EnvSlice::new("b", x, y).unwrap(),
        ])
        .unwrap();
        let cfg = FitConfig::new(ScoreKind::LogS, 2);
        let theta = ModelParams::zeros(1);
        let a = objective(&theta, &data, &cfg, 0.0).unwrap();
        let b = objective(&theta, &data, &cfg, 12.5).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn single_environment_objective_is_negative_mean_loglik() {
        let x = DMatrix::from_row_slice(3, 1, &[0.5, 1.0, -0.5]);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.5]);
        let data = EnvDataset::single(EnvSlice::new("e", x.clone(), y.clone()).unwrap());
        let mut cfg = FitConfig::new(ScoreKind::LogS, 1);
        cfg.weights = vec![1.0];
        let theta = ModelParams::zeros(1);
        let obj = objective(&theta, &data, &cfg, 0.0).unwrap();
        let mut nll = 0.0;
        for i in 0..3 {
            // -log phi(y) for the unit normal prediction
            nll += 0.5 * LN_2PI + 0.5 * y[i] * y[i];
        }
        assert!((obj - nll / 3.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_box_returns_the_point() {
        let data = tiny_dataset();
        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.box_bounds = (0.25, 0.25);
        cfg.lambda_grid = vec![0.0, 1.0];
        let path = fit(&data, &cfg).unwrap();
        for e in &path.entries {
            assert!(e.theta_hat.to_flat().iter().all(|&v| v == 0.25));
            let direct = objective(&e.theta_hat, &data, &cfg, e.lambda).unwrap();
            assert!((e.objective - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_config_validation_catches_bad_inputs() {
        let data = tiny_dataset();
        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.weights = vec![0.7, 0.7];
        assert!(fit(&data, &cfg).is_err());

        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.lambda_grid = vec![0.0, 0.0];
        assert!(fit(&data, &cfg).is_err());

        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.lambda_grid = vec![-1.0, 1.0];
        assert!(fit(&data, &cfg).is_err());

        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.box_bounds = (2.0, -2.0);
        assert!(fit(&data, &cfg).is_err());
    }

    #[test]
    fn monotonicity_report_on_exact_quadratic_path() {
        // Synthetic path from exact minimizers of a quadratic toy objective:
        // risk gap 2t shrinks with lambda while the risk sum 2 + (1-t)^2
        // grows, as it must for exact minimizers.
        let mk = |lambda: f64, t: f64| {
            let half = 0.5 * (1.0 - t) * (1.0 - t);
            let risks = vec![1.0 + t + half, 1.0 - t + half];
            FitEntry {
                lambda,
                theta_hat: ModelParams::zeros(1),
                penalty: variance_penalty(&risks).unwrap(),
                env_risks: risks,
                objective: 0.0,
                pooled_risk: 0.0,
                restart_objectives: vec![],
            }
        };
        let path = FitPath {
            entries: vec![mk(0.0, 1.0), mk(1.0, 0.5), mk(2.0, 0.1), mk(3.0, 0.0)],
        };
        let (d_ok, pooled_ok) = penalty_monotonicity_report(&path);
        assert!(d_ok);
        assert!(pooled_ok);

        let single = FitPath { entries: vec![mk(0.0, 1.0)] };
        assert_eq!(penalty_monotonicity_report(&single), (true, true));
    }

    #[test]
    fn fit_path_json_round_trip() {
        let data = tiny_dataset();
        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.lambda_grid = vec![0.0, 2.0];
        cfg.optimizer.n_starts = 4;
        cfg.optimizer.cold_iters = 50;
        cfg.optimizer.warm_iters = 100;
        cfg.optimizer.polish_iters = 50;
        let path = fit(&data, &cfg).unwrap();
        let back = FitPath::from_json(&path.to_json()).unwrap();
        assert_eq!(path.entries.len(), back.entries.len());
        for (a, b) in path.entries.iter().zip(&back.entries) {
            assert_eq!(a.lambda, b.lambda);
            assert_eq!(a.theta_hat, b.theta_hat);
            assert_eq!(a.objective, b.objective);
        }
        let csv = path.to_long_csv();
        assert!(csv.starts_with("lambda,field,value\n"));
        assert!(csv.contains("env_risk_2"));
    }

    #[test]
    fn fit_entry_objective_identity_holds() {
        let data = tiny_dataset();
        let mut cfg = FitConfig::new(ScoreKind::LogS, 2);
        cfg.lambda_grid = vec![0.0, 1.0, 4.0];
        cfg.optimizer.n_starts = 6;
        cfg.optimizer.cold_iters = 80;
        cfg.optimizer.warm_iters = 200;
        let path = fit(&data, &cfg).unwrap();
        for e in &path.entries {
            let pooled: f64 = e
                .env_risks
                .iter()
                .zip(&cfg.weights)
                .map(|(r, w)| r * w)
                .sum();
            assert!((e.objective - (pooled + e.lambda * e.penalty)).abs() < 1e-10);
            assert!((e.pooled_risk - pooled).abs() < 1e-12);
        }
    }
}
