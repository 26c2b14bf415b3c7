//! The heteroscedastic Gaussian linear model
//! `Y | X = x  ~  N(beta0 + beta'x, exp(2*(gamma0 + gamma'x)))`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::envdata::EnvSlice;
use crate::error::{Error, Result};
use crate::scoring::{score, GaussianPrediction, ScoreKind};

/// Exponent bound beyond which `exp` would leave the finite f64 range. An
/// out-of-range scale aborts instead of saturating, because a saturated
/// standard deviation silently corrupts downstream optimization.
pub const LOG_SD_LIMIT: f64 = 700.0;

/// Location/scale coefficients `(beta0, beta, gamma0, gamma)` with
/// `len(beta) == len(gamma) == d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub beta0: f64,
    pub beta: DVector<f64>,
    pub gamma0: f64,
    pub gamma: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelParamsJson {
    beta0: f64,
    beta: Vec<f64>,
    gamma0: f64,
    gamma: Vec<f64>,
}

impl ModelParams {
    pub fn new(beta0: f64, beta: DVector<f64>, gamma0: f64, gamma: DVector<f64>) -> Result<Self> {
        if beta.len() != gamma.len() || beta.is_empty() {
            return Err(Error::invalid(format!(
                "beta and gamma must share a dimension d >= 1, got {} and {}",
                beta.len(),
                gamma.len()
            )));
        }
        let p = ModelParams { beta0, beta, gamma0, gamma };
        if !p.is_finite() {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(p)
    }

    pub fn zeros(d: usize) -> Self {
        ModelParams {
            beta0: 0.0,
            beta: DVector::zeros(d),
            gamma0: 0.0,
            gamma: DVector::zeros(d),
        }
    }

    /// Coefficients without intercepts, as generated by a simulation truth.
    pub fn from_coefficients(beta: DVector<f64>, gamma: DVector<f64>) -> Result<Self> {
        Self::new(0.0, beta, 0.0, gamma)
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Number of free parameters, `2d + 2`.
    pub fn n_params(&self) -> usize {
        2 * self.dim() + 2
    }

    pub fn is_finite(&self) -> bool {
        self.beta0.is_finite()
            && self.gamma0.is_finite()
            && self.beta.iter().all(|v| v.is_finite())
            && self.gamma.iter().all(|v| v.is_finite())
    }

    /// Flat layout `(beta0, beta..., gamma0, gamma...)` used by the optimizer.
    pub fn to_flat(&self) -> DVector<f64> {
        let d = self.dim();
        let mut v = DVector::zeros(2 * d + 2);
        v[0] = self.beta0;
        v.rows_mut(1, d).copy_from(&self.beta);
        v[d + 1] = self.gamma0;
        v.rows_mut(d + 2, d).copy_from(&self.gamma);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() < 4 || !flat.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "flat parameter vector must have even length 2d+2 >= 4, got {}",
                flat.len()
            )));
        }
        let d = flat.len() / 2 - 1;
        ModelParams::new(
            flat[0],
            DVector::from_row_slice(&flat[1..=d]),
            flat[d + 1],
            DVector::from_row_slice(&flat[d + 2..]),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModelParamsJson {
            beta0: self.beta0,
            beta: self.beta.iter().copied().collect(),
            gamma0: self.gamma0,
            gamma: self.gamma.iter().copied().collect(),
        })
        .expect("params serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: ModelParamsJson = serde_json::from_value(v.clone())?;
        ModelParams::new(
            j.beta0,
            DVector::from_vec(j.beta),
            j.gamma0,
            DVector::from_vec(j.gamma),
        )
    }
}

/// Predictive distribution at covariate vector `x`.
pub fn predict(params: &ModelParams, x: &DVector<f64>) -> Result<GaussianPrediction> {
    if x.len() != params.dim() {
        return Err(Error::invalid(format!(
            "x has dimension {}, model expects {}",
            x.len(),
            params.dim()
        )));
    }
    let mean = params.beta0 + params.beta.dot(x);
    let log_sd = params.gamma0 + params.gamma.dot(x);
    if log_sd.abs() > LOG_SD_LIMIT {
        return Err(Error::Overflow(format!(
            "log sd = {log_sd} exceeds +/-{LOG_SD_LIMIT}"
        )));
    }
    GaussianPrediction::new(mean, log_sd.exp())
}

/// Score of a single observation under the model's prediction at `x`.
pub fn obs_score(kind: ScoreKind, params: &ModelParams, x: &DVector<f64>, y: f64) -> Result<f64> {
    let pred = predict(params, x)?;
    score(kind, &pred, y)
}

/// Gradient of the mean logarithmic score `1/n sum_i LogS(predict(theta, x_i), y_i)`
/// over one environment, with respect to the flat layout
/// `(beta0, beta, gamma0, gamma)`.
///
/// With residual `r = y - mu` and `w = exp(-2*log_sd)`:
/// d/d(beta0) = -mean(r*w), d/d(beta) = -X'(r.*w)/n,
/// d/d(gamma0) = mean(1 - r^2*w), d/d(gamma) = X'(1 - r^2.*w)/n.
pub fn logs_risk_gradient(params: &ModelParams, data: &EnvSlice) -> Result<DVector<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("gradient needs a non-empty slice"));
    }
    if data.x.ncols() != params.dim() {
        return Err(Error::invalid(format!(
            "slice has {} covariates, model expects {}",
            data.x.ncols(),
            params.dim()
        )));
    }
    let d = params.dim();
    let n = data.len();
    let nf = n as f64;

    let mut mu = &data.x * &params.beta;
    mu.add_scalar_mut(params.beta0);
    let mut log_sd = &data.x * &params.gamma;
    log_sd.add_scalar_mut(params.gamma0);

    let mut rw = DVector::zeros(n);
    let mut one_minus_r2w = DVector::zeros(n);
    for i in 0..n {
        if log_sd[i].abs() > LOG_SD_LIMIT {
            return Err(Error::Overflow(format!(
                "log sd = {} exceeds +/-{LOG_SD_LIMIT} at row {i}",
                log_sd[i]
            )));
        }
        let r = data.y[i] - mu[i];
        let w = (-2.0 * log_sd[i]).exp();
        rw[i] = r * w;
        one_minus_r2w[i] = 1.0 - r * r * w;
    }

    let mut grad = DVector::zeros(2 * d + 2);
    grad[0] = -rw.sum() / nf;
    let gb = data.x.tr_mul(&rw) / -nf;
    grad.rows_mut(1, d).copy_from(&gb);
    grad[d + 1] = one_minus_r2w.sum() / nf;
    let gg = data.x.tr_mul(&one_minus_r2w) / nf;
    grad.rows_mut(d + 2, d).copy_from(&gg);
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LN_2PI;
    use crate::rng::SplitMix64;
    use nalgebra::DMatrix;

    #[test]
    fn zero_params_predict_standard_normal() {
        let p = ModelParams::zeros(3);
        let x = DVector::from_vec(vec![4.0, -2.0, 0.5]);
        let pred = predict(&p, &x).unwrap();
        assert_eq!(pred.mean(), 0.0);
        assert_eq!(pred.sd(), 1.0);
    }

    #[test]
    fn predict_direct_evaluation() {
        let p = ModelParams::new(
            1.0,
            DVector::from_vec(vec![2.0]),
            0.0,
            DVector::from_vec(vec![2.0f64.ln()]),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0]);
        let pred = predict(&p, &x).unwrap();
        assert!((pred.mean() - 3.0).abs() < 1e-15);
        assert!((pred.sd() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn predict_round_trips_log_sd() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..50 {
            let d = 4;
            let p = ModelParams::new(
                rng.next_range(-1.0, 1.0),
                DVector::from_fn(d, |_, _| rng.next_range(-1.0, 1.0)),
                rng.next_range(-0.5, 0.5),
                DVector::from_fn(d, |_, _| rng.next_range(-0.5, 0.5)),
            )
            .unwrap();
            let x = DVector::from_fn(d, |_, _| rng.next_range(-2.0, 2.0));
            let pred = predict(&p, &x).unwrap();
            let log_sd = p.gamma0 + p.gamma.dot(&x);
            assert!((pred.sd() - log_sd.exp()).abs() <= f64::EPSILON * pred.sd());
            assert!((pred.sd().powi(2).sqrt() - pred.sd()).abs() <= f64::EPSILON * pred.sd());
        }
    }

    #[test]
    fn predict_rejects_overflowing_scale() {
        let p = ModelParams::new(
            0.0,
            DVector::from_vec(vec![0.0]),
            0.0,
            DVector::from_vec(vec![800.0]),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0]);
        assert!(matches!(predict(&p, &x), Err(Error::Overflow(_))));
    }

    #[test]
    fn predict_rejects_dimension_mismatch() {
        let p = ModelParams::zeros(3);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert!(predict(&p, &x).is_err());
    }

    #[test]
    fn obs_score_composes_predict_and_score() {
        let p = ModelParams::zeros(2);
        let x = DVector::from_vec(vec![5.0, -1.0]);
        let s = obs_score(ScoreKind::LogS, &p, &x, 0.0).unwrap();
        assert!((s - 0.5 * LN_2PI).abs() < 1e-15);

        let crps = obs_score(ScoreKind::Crps, &p, &x, 0.0).unwrap();
        let direct = score(
            ScoreKind::Crps,
            &GaussianPrediction::new(0.0, 1.0).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(crps, direct);
    }

    #[test]
    fn single_observation_gradient_components() {
        // One observation: beta0 component is (mu - y)/sd^2, the gamma0
        // component is 1 - (y - mu)^2/sd^2 (so exactly 1 when y = mu).
        let d = 2;
        let p = ModelParams::new(
            0.3,
            DVector::from_vec(vec![1.0, -0.5]),
            0.1,
            DVector::from_vec(vec![0.2, 0.05]),
        )
        .unwrap();
        let x = DMatrix::from_row_slice(1, d, &[0.7, -1.1]);
        let mu = p.beta0 + p.beta.dot(&DVector::from_row_slice(&[0.7, -1.1]));
        let sd = (p.gamma0 + p.gamma.dot(&DVector::from_row_slice(&[0.7, -1.1]))).exp();

        let y = DVector::from_vec(vec![mu + 0.4]);
        let slice = EnvSlice::new("e", x.clone(), y).unwrap();
        let grad = logs_risk_gradient(&p, &slice).unwrap();
        assert!((grad[0] - (mu - (mu + 0.4)) / (sd * sd)).abs() < 1e-12);

        let slice_at_mean = EnvSlice::new("e", x, DVector::from_vec(vec![mu])).unwrap();
        let grad = logs_risk_gradient(&p, &slice_at_mean).unwrap();
        assert!((grad[d + 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = SplitMix64::new(1234);
        let d = 3;
        for case in 0..100 {
            let p = ModelParams::new(
                rng.next_range(-1.0, 1.0),
                DVector::from_fn(d, |_, _| rng.next_range(-1.5, 1.5)),
                rng.next_range(-0.4, 0.4),
                DVector::from_fn(d, |_, _| rng.next_range(-0.4, 0.4)),
            )
            .unwrap();
            let n = 12;
            let x = DMatrix::from_fn(n, d, |_, _| rng.next_range(-2.0, 2.0));
            let y = DVector::from_fn(n, |_, _| rng.next_range(-3.0, 3.0));
            let slice = EnvSlice::new("e", x, y).unwrap();

            let grad = logs_risk_gradient(&p, &slice).unwrap();
            let flat = p.to_flat();
            let risk = |theta: &DVector<f64>| -> f64 {
                let p = ModelParams::from_flat(theta.as_slice()).unwrap();
                let mut total = 0.0;
                for i in 0..slice.len() {
                    let xi = slice.x.row(i).transpose();
                    total += obs_score(ScoreKind::LogS, &p, &xi, slice.y[i]).unwrap();
                }
                total / slice.len() as f64
            };
            let h = 1e-5;
            for k in 0..flat.len() {
                let mut up = flat.clone();
                up[k] += h;
                let mut dn = flat.clone();
                dn[k] -= h;
                let fd = (risk(&up) - risk(&dn)) / (2.0 * h);
                let tol = 1e-5 * fd.abs().max(1.0);
                assert!(
                    (grad[k] - fd).abs() < tol,
                    "case {case} coord {k}: analytic {} vs fd {}",
                    grad[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn gradient_rejects_empty_slice() {
        let p = ModelParams::zeros(2);
        let slice = EnvSlice {
            label: "e".into(),
            x: DMatrix::zeros(0, 2),
            y: DVector::zeros(0),
        };
        assert!(logs_risk_gradient(&p, &slice).is_err());
    }

    #[test]
    fn params_json_round_trip_is_flat() {
        let p = ModelParams::new(
            0.5,
            DVector::from_vec(vec![1.0, 2.0]),
            -0.25,
            DVector::from_vec(vec![0.1, 0.2]),
        )
        .unwrap();
        let v = p.to_json();
        assert!(v.get("beta0").is_some());
        assert!(v.get("beta").unwrap().is_array());
        let back = ModelParams::from_json(&v).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn flat_round_trip() {
        let p = ModelParams::new(
            0.5,
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            -0.25,
            DVector::from_vec(vec![0.1, 0.2, 0.3]),
        )
        .unwrap();
        let back = ModelParams::from_flat(p.to_flat().as_slice()).unwrap();
        assert_eq!(p, back);
    }
}
