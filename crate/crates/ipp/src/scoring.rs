//! Strictly proper scoring rules for univariate Gaussian predictive
//! distributions, in closed form, plus sample-based estimators for the CRPS
//! family.
//!
//! All scores are negatively oriented: smaller is better, and for a strictly
//! proper rule the expected score under `Y ~ F` is uniquely minimized by
//! reporting `F` itself.
//!
//! With `z = (y - mean)/sd`, `phi` and `Phi` the standard normal density and
//! distribution function, the closed forms are
//!
//! * `LogS`: `ln(sd) + ln(2*pi)/2 + z^2/2`
//! * `CRPS`: `sd * (z*(2*Phi(z) - 1) + 2*phi(z) - 1/sqrt(pi))`
//! * `SCRPS`: `(z*(2*Phi(z) - 1) + 2*phi(z)) * sqrt(pi)/2 + ln(2*sd/sqrt(pi))/2`
//! * `QS`: `(1/(2*sqrt(pi)) - 2*phi(z)) / sd`
//! * `PseudoS`: `-g(y)^(alpha-1) * (integral of g^alpha)^(1/alpha - 1)`, with
//!   `integral of g^alpha = (2*pi*sd^2)^((1-alpha)/2) / sqrt(alpha)`
//! * `HyvS`: `(z^2 - 2) / sd^2`
//!
//! Sign conventions follow the definitions used here verbatim; in particular
//! PseudoS is the *negated* pseudospherical score `g(y)^(alpha-1)/||g||_alpha^(alpha-1)`,
//! so it is negative everywhere and decreases as the density at `y` grows.
//! Some references instead report the positively oriented version.
//!
//! Every closed form is validated in the test suite against an independent
//! numeric oracle (quadrature, finite differences, or Monte Carlo).

use serde::{Deserialize, Serialize};

use crate::dist::{norm_cdf, norm_pdf, FRAC_1_SQRT_PI, LN_2PI, SQRT_PI};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// A univariate normal predictive distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    mean: f64,
    sd: f64,
}

impl GaussianPrediction {
    /// `sd` must be finite and strictly positive.
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() {
            return Err(Error::invalid(format!(
                "prediction parameters must be finite, got mean={mean}, sd={sd}"
            )));
        }
        if sd <= 0.0 {
            return Err(Error::Domain(format!("sd must be positive, got {sd}")));
        }
        Ok(GaussianPrediction { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }
}

/// The scoring rule to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Logarithmic score (negative log density).
    LogS,
    /// Continuous ranked probability score.
    Crps,
    /// Scale-invariant CRPS.
    Scrps,
    /// Quadratic score.
    Qs,
    /// Pseudospherical score (negated), `alpha > 1`.
    PseudoS { alpha: f64 },
    /// Hyvärinen score.
    HyvS,
}

impl ScoreKind {
    /// PseudoS with the default exponent `alpha = 2`.
    pub const PSEUDO_DEFAULT: ScoreKind = ScoreKind::PseudoS { alpha: 2.0 };

    pub fn validate(&self) -> Result<()> {
        if let ScoreKind::PseudoS { alpha } = self {
            if !alpha.is_finite() || *alpha <= 1.0 {
                return Err(Error::invalid(format!(
                    "PseudoS requires alpha > 1, got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreKind::LogS => write!(f, "logs"),
            ScoreKind::Crps => write!(f, "crps"),
            ScoreKind::Scrps => write!(f, "scrps"),
            ScoreKind::Qs => write!(f, "qs"),
            ScoreKind::PseudoS { alpha } => write!(f, "pseudos(alpha={alpha})"),
            ScoreKind::HyvS => write!(f, "hyvs"),
        }
    }
}

/// Score of a standardized residual `z` under the unit normal, before the
/// location-scale adjustment. Shared by [`score`] and the vectorized risk
/// loops in the estimator.
#[inline]
pub(crate) fn score_std(kind: ScoreKind, z: f64) -> f64 {
    match kind {
        ScoreKind::LogS => 0.5 * LN_2PI + 0.5 * z * z,
        ScoreKind::Crps => z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z) - FRAC_1_SQRT_PI,
        ScoreKind::Scrps => {
            (z * (2.0 * norm_cdf(z) - 1.0) + 2.0 * norm_pdf(z)) * SQRT_PI / 2.0
                + 0.5 * (2.0 * FRAC_1_SQRT_PI).ln()
        }
        ScoreKind::Qs => 0.5 * FRAC_1_SQRT_PI - 2.0 * norm_pdf(z),
        ScoreKind::PseudoS { alpha } => {
            // ln g(z) for sd = 1 and ln of the alpha-norm integral.
            let ln_g = -0.5 * LN_2PI - 0.5 * z * z;
            let ln_int = 0.5 * (1.0 - alpha) * LN_2PI - 0.5 * alpha.ln();
            -((alpha - 1.0) * ln_g + (1.0 / alpha - 1.0) * ln_int).exp()
        }
        ScoreKind::HyvS => z * z - 2.0,
    }
}

/// How a score transforms from the unit normal to `N(mean, sd^2)`:
/// `score = scale_factor * score_std + shift`. Exposes the exact
/// location-scale behaviour of each rule.
#[inline]
pub(crate) fn scale_shift(kind: ScoreKind, ln_sd: f64) -> (f64, f64) {
    match kind {
        ScoreKind::LogS => (1.0, ln_sd),
        ScoreKind::Crps => (ln_sd.exp(), 0.0),
        ScoreKind::Scrps => (1.0, 0.5 * ln_sd),
        ScoreKind::Qs => ((-ln_sd).exp(), 0.0),
        ScoreKind::PseudoS { alpha } => (((1.0 / alpha - 1.0) * ln_sd).exp(), 0.0),
        ScoreKind::HyvS => ((-2.0 * ln_sd).exp(), 0.0),
    }
}

/// Evaluate `S(pred, y)` in closed form.
pub fn score(kind: ScoreKind, pred: &GaussianPrediction, y: f64) -> Result<f64> {
    kind.validate()?;
    if !y.is_finite() {
        return Err(Error::invalid(format!("observation must be finite, got {y}")));
    }
    let z = (y - pred.mean) / pred.sd;
    let (scale, shift) = scale_shift(kind, pred.sd.ln());
    Ok(scale * score_std(kind, z) + shift)
}

/// Plug-in estimator of CRPS or SCRPS from a predictive sample.
///
/// Expectations are replaced by sample averages; the mean absolute pairwise
/// difference runs over all distinct unordered pairs, computed exactly in
/// `O(n log n)` after sorting.
pub fn score_samples(kind: ScoreKind, samples: &[f64], y: f64) -> Result<f64> {
    if !matches!(kind, ScoreKind::Crps | ScoreKind::Scrps) {
        return Err(Error::invalid(format!(
            "score_samples supports crps and scrps only, got {kind}"
        )));
    }
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !y.is_finite() || samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("samples and observation must be finite"));
    }

    let n = samples.len() as f64;
    let mean_abs_dev = samples.iter().map(|s| (y - s).abs()).sum::<f64>() / n;
    let mean_pair = mean_pairwise_abs(samples);

    match kind {
        ScoreKind::Crps => Ok(mean_abs_dev - 0.5 * mean_pair),
        ScoreKind::Scrps => {
            if mean_pair <= 0.0 {
                return Err(Error::Domain(
                    "scrps undefined for a degenerate sample (zero pairwise spread)".into(),
                ));
            }
            Ok(mean_abs_dev / mean_pair + 0.5 * mean_pair.ln())
        }
        _ => unreachable!(),
    }
}

/// Mean of |x_i - x_j| over all distinct unordered pairs. For sorted values
/// the pair sum telescopes to `sum_k x_(k) * (2k - n + 1)`.
fn mean_pairwise_abs(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut total = 0.0;
    for (k, x) in sorted.iter().enumerate() {
        total += x * (2.0 * k as f64 - (n as f64 - 1.0));
    }
    total * 2.0 / (n as f64 * (n as f64 - 1.0))
}

/// Monte Carlo estimate of both sides of the propriety inequality
/// `E_{Y~f}[S(f,Y)] <= E_{Y~f}[S(g,Y)]`, using common draws `Y ~ f`.
pub fn propriety_check(
    kind: ScoreKind,
    f: &GaussianPrediction,
    g: &GaussianPrediction,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    kind.validate()?;
    if n_mc < 10_000 {
        return Err(Error::invalid(format!(
            "propriety_check needs n_mc >= 10000, got {n_mc}"
        )));
    }
    let mut rng = SplitMix64::from_stream(seed, &[0x5c02e]);
    let mut sum_f = 0.0;
    let mut sum_g = 0.0;
    for _ in 0..n_mc {
        let y = f.mean + f.sd * rng.next_gaussian();
        sum_f += score(kind, f, y)?;
        sum_g += score(kind, g, y)?;
    }
    Ok((sum_f / n_mc as f64, sum_g / n_mc as f64))
}

/// All six rules with PseudoS at its default exponent, handy for iteration
/// in tests and experiment harnesses.
pub const ALL_KINDS: [ScoreKind; 6] = [
    ScoreKind::LogS,
    ScoreKind::Crps,
    ScoreKind::Scrps,
    ScoreKind::Qs,
    ScoreKind::PSEUDO_DEFAULT,
    ScoreKind::HyvS,
];
