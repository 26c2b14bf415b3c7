//! Experiment metrics: exact Gaussian moment identities, the closed-form
//! expected logarithmic score of the simulated model, bias/variance
//! decomposition over replications, test-intervention risk tables, and the
//! energy distance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::envdata::{simulate_test, simulate_training, EnvSlice, InterventionSpec, ScmSpec};
use crate::error::{Error, Result};
use crate::estimator::FitPath;
use crate::model::{ModelParams, LOG_SD_LIMIT};
use crate::rng::derive_seed;
use crate::scoring::{scale_shift, score_std, ScoreKind};

const TAG_POOLED: u64 = 0x9001;

/// The integrand shapes supported by [`gaussian_exp_moment`].
#[derive(Debug, Clone)]
pub enum QuadraticForm {
    /// `h(x) = 1`
    One,
    /// `h(x) = (a'x)^2`
    SquaredLinear(DVector<f64>),
    /// `h(x) = (a'x)(b'x)`; covers products of one coordinate with a linear
    /// form by taking `a` as a unit vector.
    ProductLinear(DVector<f64>, DVector<f64>),
}

/// Exact `E[h(X) exp(theta'X)]` for `X ~ N(0, Sigma)`.
///
/// Tilting the Gaussian density by `exp(theta'X)` shifts the mean to
/// `Sigma theta` and multiplies by `exp(theta'Sigma theta / 2)`, so the
/// moment reduces to a second-moment computation under the shifted law:
/// for `Y ~ N(m, Sigma)` with `m = Sigma theta`,
/// `E[(a'Y)(b'Y)] = a'Sigma b + (a'm)(b'm)`.
pub fn gaussian_exp_moment(
    h: &QuadraticForm,
    sigma: &DMatrix<f64>,
    theta: &DVector<f64>,
) -> Result<f64> {
    let n = sigma.nrows();
    if sigma.ncols() != n || theta.len() != n {
        return Err(Error::invalid("sigma and theta dimensions disagree"));
    }
    if nalgebra::Cholesky::new(sigma.clone()).is_none() {
        return Err(Error::NotPositiveDefinite("sigma in gaussian_exp_moment".into()));
    }
    let st = sigma * theta;
    let tilt = (0.5 * theta.dot(&st)).exp();
    let value = match h {
        QuadraticForm::One => 1.0,
        QuadraticForm::SquaredLinear(a) => {
            if a.len() != n {
                return Err(Error::invalid("form vector has wrong dimension"));
            }
            let asa = a.dot(&(sigma * a));
            let am = a.dot(&st);
            asa + am * am
        }
        QuadraticForm::ProductLinear(a, b) => {
            if a.len() != n || b.len() != n {
                return Err(Error::invalid("form vectors have wrong dimension"));
            }
            let asb = a.dot(&(sigma * b));
            asb + a.dot(&st) * b.dot(&st)
        }
    };
    Ok(tilt * value)
}

fn env_moment_pieces(
    spec: &ScmSpec,
    env: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    spec.validate()?;
    let gamma_env = spec.train_gammas.get(env).ok_or_else(|| {
        Error::invalid(format!(
            "environment index {env} out of range (E = {})",
            spec.n_env()
        ))
    })?;
    let m = gamma_env * spec.sigma_x() * gamma_env.transpose();
    let gs = gamma_env * spec.sigma_yx();
    Ok((gamma_env.clone(), m, gs))
}

/// Twice the expected logarithmic score of the prediction `(b, g)` in
/// training environment `env`, *minus its parameter-free constant*, assembled
/// term by term from [`gaussian_exp_moment`]. With `M` the covariance of the
/// environment's covariates and `gs` the covariance between them and the
/// response noise:
///
/// ```text
///   [(beta-b)'M(beta-b) + 4((beta-b)'Mg)^2] exp(2 g'Mg)
/// + 2 [(beta-b)'gs + ((gamma-2g)'gs)((beta-b)'M(gamma-2g))] exp((gamma-2g)'M(gamma-2g)/2)
/// + [1 + 4((gamma-g)'gs)^2] exp(2 (gamma-g)'M(gamma-g))
/// ```
///
/// At the generating parameters this equals 1, so the full expected score is
/// `ln(2 pi)/2 + 1/2` there. Only differences between parameter settings are
/// meaningful, since the constant cancels.
pub fn expected_logs_full(
    spec: &ScmSpec,
    env: usize,
    b: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<f64> {
    if b.len() != spec.d || g.len() != spec.d {
        return Err(Error::invalid("b and g must have length d"));
    }
    let (_, m, gs) = env_moment_pieces(spec, env)?;
    let db = &spec.beta - b;
    let dg2 = &spec.gamma - &(g * 2.0);
    let dg = &spec.gamma - g;

    let mdb = &m * &db;
    let t1 = (db.dot(&mdb) + 4.0 * mdb.dot(g).powi(2)) * (2.0 * g.dot(&(&m * g))).exp();
    let t2 = 2.0
        * (db.dot(&gs) + dg2.dot(&gs) * db.dot(&(&m * &dg2)))
        * (0.5 * dg2.dot(&(&m * &dg2))).exp();
    let t3 = (1.0 + 4.0 * dg.dot(&gs).powi(2)) * (2.0 * dg.dot(&(&m * &dg))).exp();
    Ok(t1 + t2 + t3)
}

/// The shorter printed form of the same expectation, which drops the
/// mean-shift contributions of the tilted response noise (the
/// `((gamma-2g)'gs)(...)` cross term and the `4((gamma-g)'gs)^2` factor).
/// It agrees with [`expected_logs_full`] exactly when the response noise is
/// unconfounded (`gs = 0`) and approximately for small confounding; the test
/// suite compares both against Monte Carlo and reports the gap.
pub fn expected_logs_closed_form(
    spec: &ScmSpec,
    env: usize,
    b: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<f64> {
    if b.len() != spec.d || g.len() != spec.d {
        return Err(Error::invalid("b and g must have length d"));
    }
    let (_, m, gs) = env_moment_pieces(spec, env)?;
    let db = &spec.beta - b;
    let dg2 = &spec.gamma - &(g * 2.0);
    let dg = &spec.gamma - g;

    let mdb = &m * &db;
    let t1 = (db.dot(&mdb) + 4.0 * mdb.dot(g).powi(2)) * (2.0 * g.dot(&(&m * g))).exp();
    let t2 = 2.0 * db.dot(&gs) * (0.5 * dg2.dot(&(&m * &dg2))).exp();
    let t3 = (2.0 * dg.dot(&(&m * &dg))).exp();
    Ok(t1 + t2 + t3)
}

/// Squared-error decomposition of a block of replicated estimates around a
/// fixed truth: `mse = ||mean - truth||^2 + mean ||est - mean||^2`, an exact
/// identity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BiasVariance {
    pub mse_beta: f64,
    pub sq_bias_beta: f64,
    pub variance_beta: f64,
    pub mse_gamma: f64,
    pub sq_bias_gamma: f64,
    pub variance_gamma: f64,
}

fn block_decomposition(estimates: &[DVector<f64>], truth: &DVector<f64>) -> (f64, f64, f64) {
    let r = estimates.len() as f64;
    let mut mean = DVector::zeros(truth.len());
    for e in estimates {
        mean += e;
    }
    mean /= r;
    let sq_bias = (&mean - truth).norm_squared();
    let variance = estimates.iter().map(|e| (e - &mean).norm_squared()).sum::<f64>() / r;
    let mse = estimates.iter().map(|e| (e - truth).norm_squared()).sum::<f64>() / r;
    (mse, sq_bias, variance)
}

/// Bias/variance decomposition of replicated parameter estimates, separately
/// for the location block `(beta0, beta)` and the scale block
/// `(gamma0, gamma)`.
pub fn bias_variance(replications: &[ModelParams], truth: &ModelParams) -> Result<BiasVariance> {
    if replications.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 replications, got {}",
            replications.len()
        )));
    }
    let d = truth.dim();
    if replications.iter().any(|p| p.dim() != d) {
        return Err(Error::invalid("replication dimensions disagree with truth"));
    }
    let loc = |p: &ModelParams| {
        let mut v = DVector::zeros(d + 1);
        v[0] = p.beta0;
        v.rows_mut(1, d).copy_from(&p.beta);
        v
    };
    let scale = |p: &ModelParams| {
        let mut v = DVector::zeros(d + 1);
        v[0] = p.gamma0;
        v.rows_mut(1, d).copy_from(&p.gamma);
        v
    };
    let locs: Vec<DVector<f64>> = replications.iter().map(loc).collect();
    let scales: Vec<DVector<f64>> = replications.iter().map(scale).collect();
    let (mse_beta, sq_bias_beta, variance_beta) = block_decomposition(&locs, &loc(truth));
    let (mse_gamma, sq_bias_gamma, variance_gamma) =
        block_decomposition(&scales, &scale(truth));
    Ok(BiasVariance {
        mse_beta,
        sq_bias_beta,
        variance_beta,
        mse_gamma,
        sq_bias_gamma,
        variance_gamma,
    })
}

/// Per-lambda error decomposition plus the histogram of selected penalties
/// over a replication study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub rows: Vec<(f64, BiasVariance)>,
    pub lambda_selection_counts: Vec<(f64, usize)>,
}

/// Assemble a [`ReplicationSummary`] from estimates collected per grid value
/// and the per-replication selected penalties.
pub fn replication_summary(
    per_lambda: &[(f64, Vec<ModelParams>)],
    truth: &ModelParams,
    selected: &[f64],
) -> Result<ReplicationSummary> {
    let mut rows = Vec::with_capacity(per_lambda.len());
    for (lambda, params) in per_lambda {
        rows.push((*lambda, bias_variance(params, truth)?));
    }
    let mut counts: Vec<(f64, usize)> = per_lambda.iter().map(|(l, _)| (*l, 0)).collect();
    for s in selected {
        if let Some(slot) = counts.iter_mut().find(|(l, _)| l == s) {
            slot.1 += 1;
        }
    }
    Ok(ReplicationSummary { rows, lambda_selection_counts: counts })
}

/// One row of the intervention risk table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskTableRow {
    pub lambda: f64,
    pub intervention: String,
    pub mean_score: f64,
    pub std_error: f64,
    pub n_test: usize,
}

/// Mean and standard error of per-observation scores on a slice.
pub fn mean_score_on_slice(
    params: &ModelParams,
    slice: &EnvSlice,
    kind: ScoreKind,
) -> Result<(f64, f64)> {
    kind.validate()?;
    let mut mu = &slice.x * &params.beta;
    mu.add_scalar_mut(params.beta0);
    let mut lsd = &slice.x * &params.gamma;
    lsd.add_scalar_mut(params.gamma0);
    let n = slice.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n {
        let l = lsd[i];
        if l.abs() > LOG_SD_LIMIT {
            return Err(Error::Overflow(format!("log sd = {l} out of range")));
        }
        let z = (slice.y[i] - mu[i]) * (-l).exp();
        let (sc, sh) = scale_shift(kind, l);
        let s = sc * score_std(kind, z) + sh;
        sum += s;
        sum_sq += s * s;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}

/// A test slice distributed like the pooled training data: equal shares from
/// every training environment, drawn under a derived sub-seed.
pub fn pooled_test_slice(spec: &ScmSpec, n_test: usize) -> Result<EnvSlice> {
    let e = spec.n_env();
    let per_env = n_test.div_ceil(e).max(2);
    let fresh = spec.with_seed(derive_seed(spec.seed, &[TAG_POOLED]));
    let data = simulate_training(&fresh, per_env)?;
    let d = spec.d;
    let mut x = DMatrix::zeros(n_test, d);
    let mut y = DVector::zeros(n_test);
    let mut row = 0;
    'outer: for slice in data.environments() {
        for i in 0..slice.len() {
            if row >= n_test {
                break 'outer;
            }
            x.row_mut(row).copy_from(&slice.x.row(i));
            y[row] = slice.y[i];
            row += 1;
        }
    }
    EnvSlice::new("pooled", x, y)
}

/// Mean score of every fitted parameter on fresh test environments: one
/// "pooled" slice distributed like the training mixture, plus one slice per
/// requested intervention. Slices are generated and scored in parallel;
/// rows come back in (path, slice) order regardless of scheduling.
pub fn intervention_risk_table(
    path: &FitPath,
    spec: &ScmSpec,
    interventions: &[InterventionSpec],
    n_test: usize,
    kind: ScoreKind,
) -> Result<Vec<RiskTableRow>> {
    use rayon::prelude::*;

    if path.entries.is_empty() {
        return Err(Error::invalid("empty fit path"));
    }
    if n_test < 2 {
        return Err(Error::invalid("n_test must be at least 2"));
    }
    let mut slices: Vec<(String, EnvSlice)> =
        vec![("pooled".to_string(), pooled_test_slice(spec, n_test)?)];
    let generated: Vec<Result<(String, EnvSlice)>> = interventions
        .par_iter()
        .map(|int| Ok((int.label(), simulate_test(spec, int, n_test)?)))
        .collect();
    for g in generated {
        slices.push(g?);
    }
    let rows: Vec<Result<Vec<RiskTableRow>>> = path
        .entries
        .par_iter()
        .map(|entry| {
            slices
                .iter()
                .map(|(label, slice)| {
                    let (mean, se) = mean_score_on_slice(&entry.theta_hat, slice, kind)?;
                    Ok(RiskTableRow {
                        lambda: entry.lambda,
                        intervention: label.clone(),
                        mean_score: mean,
                        std_error: se,
                        n_test: slice.len(),
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(path.entries.len() * slices.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// Tidy CSV (`lambda,intervention,metric,value`) for a risk table.
pub fn risk_table_to_csv(rows: &[RiskTableRow]) -> String {
    let mut out = String::from("lambda,intervention,metric,value\n");
    for r in rows {
        out.push_str(&format!("{},{},mean_score,{}\n", r.lambda, r.intervention, r.mean_score));
        out.push_str(&format!("{},{},std_error,{}\n", r.lambda, r.intervention, r.std_error));
    }
    out
}

/// Energy distance between two samples of k-dimensional rows:
/// `2 mean||a_i - b_j|| - mean||a_i - a_i'|| - mean||b_j - b_j'||`.
///
/// All means run over all ordered pairs (the plug-in V-statistic), so the
/// result is nonnegative and exactly zero when the samples coincide. Exact
/// all-pairs computation, no subsampling.
pub fn energy_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::invalid("samples must be non-empty"));
    }
    let row_dist = |m: &DMatrix<f64>, i: usize, w: &DMatrix<f64>, j: usize| -> f64 {
        let mut s = 0.0;
        for c in 0..m.ncols() {
            let d = m[(i, c)] - w[(j, c)];
            s += d * d;
        }
        s.sqrt()
    };
    let (n, m) = (a.nrows(), b.nrows());
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..m {
            cross += row_dist(a, i, b, j);
        }
    }
    cross /= (n * m) as f64;

    let within = |x: &DMatrix<f64>| -> f64 {
        let n = x.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += row_dist(x, i, x, j);
            }
        }
        2.0 * s / (n * n) as f64
    };
    Ok(2.0 * cross - within(a) - within(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envdata::make_default_spec;
    use crate::rng::SplitMix64;

    #[test]
    fn exp_moment_trivial_forms() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let zero = DVector::zeros(2);
        assert!((gaussian_exp_moment(&QuadraticForm::One, &sigma, &zero).unwrap() - 1.0).abs() < 1e-15);

        let theta = DVector::from_vec(vec![0.4, -0.7]);
        let want = (0.5 * theta.dot(&(&sigma * &theta))).exp();
        let got = gaussian_exp_moment(&QuadraticForm::One, &sigma, &theta).unwrap();
        assert!((got - want).abs() < 1e-14 * want);
    }

    #[test]
    fn exp_moment_rejects_bad_sigma() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        let theta = DVector::zeros(2);
        assert!(gaussian_exp_moment(&QuadraticForm::One, &sigma, &theta).is_err());
    }

    #[test]
    fn exp_moment_squared_linear_against_monte_carlo() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.5]);
        let theta = DVector::from_vec(vec![0.3, -0.2]);
        let a = DVector::from_vec(vec![1.0, 0.5]);
        let exact =
            gaussian_exp_moment(&QuadraticForm::SquaredLinear(a.clone()), &sigma, &theta).unwrap();

        let chol = nalgebra::Cholesky::new(sigma.clone()).unwrap();
        let l = chol.l();
        let mut rng = SplitMix64::new(77);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = DVector::from_fn(2, |_, _| rng.next_gaussian());
            let x = &l * z;
            let v = a.dot(&x).powi(2) * theta.dot(&x).exp();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "mc {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn expected_logs_is_one_at_truth() {
        let spec = make_default_spec(5, 4).unwrap();
        for env in 0..spec.n_env() {
            let full = expected_logs_full(&spec, env, &spec.beta, &spec.gamma).unwrap();
            let short = expected_logs_closed_form(&spec, env, &spec.beta, &spec.gamma).unwrap();
            assert!((full - 1.0).abs() < 1e-12, "env {env}: {full}");
            assert!((short - 1.0).abs() < 1e-12, "env {env}: {short}");
        }
    }

    #[test]
    fn expected_logs_unconfounded_truth_is_strict_minimum() {
        // Without confounding both forms coincide and any other parameter
        // pair has a strictly larger value.
        let mut spec = make_default_spec(5, 6).unwrap();
        for j in 1..=5 {
            spec.sigma[(0, j)] = 0.0;
            spec.sigma[(j, 0)] = 0.0;
        }
        let at_truth = expected_logs_full(&spec, 0, &spec.beta, &spec.gamma).unwrap();
        let mut rng = SplitMix64::new(15);
        for _ in 0..25 {
            let b = DVector::from_fn(5, |i, _| spec.beta[i] + rng.next_range(-0.5, 0.5));
            let g = DVector::from_fn(5, |i, _| spec.gamma[i] + rng.next_range(-0.3, 0.3));
            if (&b - &spec.beta).norm() + (&g - &spec.gamma).norm() < 1e-6 {
                continue;
            }
            let full = expected_logs_full(&spec, 0, &b, &g).unwrap();
            let short = expected_logs_closed_form(&spec, 0, &b, &g).unwrap();
            assert!((full - short).abs() < 1e-12 * full.abs().max(1.0));
            assert!(full > at_truth, "full {full} at_truth {at_truth}");
        }
    }

    #[test]
    fn bias_variance_examples() {
        let truth = ModelParams::from_coefficients(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![0.1, 0.2]),
        )
        .unwrap();

        // all replications equal to truth
        let bv = bias_variance(&[truth.clone(), truth.clone()], &truth).unwrap();
        assert_eq!(bv.mse_beta, 0.0);
        assert_eq!(bv.sq_bias_beta, 0.0);
        assert_eq!(bv.variance_beta, 0.0);

        // two replications symmetric about the truth at distance r
        let mut up = truth.clone();
        up.beta[0] += 0.5;
        let mut dn = truth.clone();
        dn.beta[0] -= 0.5;
        let bv = bias_variance(&[up, dn], &truth).unwrap();
        assert!((bv.sq_bias_beta).abs() < 1e-14);
        assert!((bv.variance_beta - 0.25).abs() < 1e-14);
        assert!((bv.mse_beta - 0.25).abs() < 1e-14);

        assert!(bias_variance(&[], &truth).is_err());
        assert!(bias_variance(std::slice::from_ref(&truth), &truth).is_err());
    }

    #[test]
    fn bias_variance_fixture_decomposition() {
        // Five replications of a 1-d model, hand-checked decomposition.
        let truth = ModelParams::from_coefficients(
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![0.0]),
        )
        .unwrap();
        let betas = [1.2, 0.9, 1.1, 1.3, 0.8];
        let reps: Vec<ModelParams> = betas
            .iter()
            .map(|&b| {
                ModelParams::from_coefficients(
                    DVector::from_vec(vec![b]),
                    DVector::from_vec(vec![0.0]),
                )
                .unwrap()
            })
            .collect();
        let bv = bias_variance(&reps, &truth).unwrap();
        let mean = betas.iter().sum::<f64>() / 5.0; // 1.06
        let sq_bias = (mean - 1.0f64).powi(2);
        let variance = betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / 5.0;
        let mse = betas.iter().map(|b| (b - 1.0f64).powi(2)).sum::<f64>() / 5.0;
        assert!((bv.sq_bias_beta - sq_bias).abs() < 1e-14);
        assert!((bv.variance_beta - variance).abs() < 1e-14);
        assert!((bv.mse_beta - mse).abs() < 1e-14);
        assert!((bv.mse_beta - bv.sq_bias_beta - bv.variance_beta).abs() < 1e-12);
    }

    #[test]
    fn bias_variance_identity_on_random_fixtures() {
        let mut rng = SplitMix64::new(31);
        let truth = ModelParams::from_coefficients(
            DVector::from_vec(vec![0.5, -0.5, 1.0]),
            DVector::from_vec(vec![0.1, 0.0, -0.1]),
        )
        .unwrap();
        let reps: Vec<ModelParams> = (0..9)
            .map(|_| {
                ModelParams::new(
                    rng.next_range(-0.2, 0.2),
                    DVector::from_fn(3, |i, _| truth.beta[i] + rng.next_range(-1.0, 1.0)),
                    rng.next_range(-0.2, 0.2),
                    DVector::from_fn(3, |i, _| truth.gamma[i] + rng.next_range(-1.0, 1.0)),
                )
                .unwrap()
            })
            .collect();
        let bv = bias_variance(&reps, &truth).unwrap();
        assert!((bv.mse_beta - bv.sq_bias_beta - bv.variance_beta).abs() < 1e-12);
        assert!((bv.mse_gamma - bv.sq_bias_gamma - bv.variance_gamma).abs() < 1e-12);
    }

    #[test]
    fn energy_distance_basic_properties() {
        let a = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.5]);
        assert!(energy_distance(&a, &a).unwrap().abs() < 1e-12);

        let b = DMatrix::from_row_slice(2, 2, &[5.0, 5.0, 6.0, 4.0]);
        let ab = energy_distance(&a, &b).unwrap();
        let ba = energy_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab > 0.0);

        let u = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let v = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert!((energy_distance(&u, &v).unwrap() - 10.0).abs() < 1e-12);

        let w = DMatrix::from_row_slice(1, 3, &[0.0; 3]);
        assert!(energy_distance(&u, &w).is_err());
    }

    #[test]
    fn energy_distance_gaussian_oracle() {
        // a ~ N(0,1), b ~ N(10,1): 2 E|a-b| - 2 E|a-a'| with
        // E|a-b| ~= 10 and E|a-a'| = 2/sqrt(pi).
        let mut rng = SplitMix64::new(101);
        let n = 1000;
        let a = DMatrix::from_fn(n, 1, |_, _| rng.next_gaussian());
        let b = DMatrix::from_fn(n, 1, |_, _| 10.0 + rng.next_gaussian());
        let got = energy_distance(&a, &b).unwrap();
        let want = 20.0 - 4.0 / crate::dist::SQRT_PI;
        assert!((got - want).abs() / want < 0.05, "got {got}, want {want}");
    }

    #[test]
    fn replication_summary_counts_selections() {
        let truth = ModelParams::from_coefficients(
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![0.0]),
        )
        .unwrap();
        let reps = vec![truth.clone(), truth.clone(), truth.clone()];
        let per_lambda = vec![(0.0, reps.clone()), (0.5, reps)];
        let summary =
            replication_summary(&per_lambda, &truth, &[0.0, 0.5, 0.5]).unwrap();
        assert_eq!(summary.rows.len(), 2);
        assert_eq!(summary.lambda_selection_counts[0], (0.0, 1));
        assert_eq!(summary.lambda_selection_counts[1], (0.5, 2));
    }
}
