//! Multi-environment datasets: CSV ingestion and a linear structural-causal
//! simulator with per-environment covariate interventions.
//!
//! The generating model has jointly Gaussian noise `(eps_Y, eps_X) ~ N(0, Sigma)`
//! with `Var(eps_Y) = 1`, so the covariates and the response noise may be
//! confounded through the off-diagonal block of `Sigma`. Training environment
//! `e` applies an invertible matrix `Gamma^e` to the covariate noise:
//!
//! ```text
//! X^e = Gamma^e eps_X,    Y^e = beta'X^e + exp(gamma'X^e) * eps_Y
//! ```
//!
//! Test environments replace `Gamma^e` by other transformations of `eps_X`
//! (variance scalings, correlation perturbations, mean shifts) while the
//! structural equation for `Y` is left untouched.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

// Stream tags for sub-seed derivation.
const TAG_TRAIN: u64 = 0x01;
const TAG_TEST: u64 = 0x02;
const TAG_SPEC: u64 = 0x03;

/// Observations from one environment: an `n x d` covariate matrix and the
/// response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSlice {
    pub label: String,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl EnvSlice {
    pub fn new(label: impl Into<String>, x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "x has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::invalid("environment slice must be non-empty"));
        }
        Ok(EnvSlice { label: label.into(), x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.len() == 0
    }
}

/// A labeled collection of environments sharing the covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDataset {
    d: usize,
    environments: Vec<EnvSlice>,
}

impl EnvDataset {
    /// Build a multi-environment dataset. Requires at least two environments
    /// with unique labels and a common covariate dimension.
    pub fn new(environments: Vec<EnvSlice>) -> Result<Self> {
        if environments.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 environments, got {}",
                environments.len()
            )));
        }
        Self::from_slices(environments)
    }

    /// Wrap a single slice as a one-environment dataset. Pooled empirical
    /// risk minimization is well defined on it, while operations that compare
    /// environments will reject it.
    pub fn single(slice: EnvSlice) -> Self {
        let d = slice.x.ncols();
        EnvDataset { d, environments: vec![slice] }
    }

    fn from_slices(environments: Vec<EnvSlice>) -> Result<Self> {
        let d = environments[0].x.ncols();
        let mut labels = HashSet::new();
        for s in &environments {
            if s.x.ncols() != d {
                return Err(Error::invalid(format!(
                    "environment '{}' has {} covariates, expected {}",
                    s.label,
                    s.x.ncols(),
                    d
                )));
            }
            if !labels.insert(s.label.clone()) {
                return Err(Error::invalid(format!("duplicate environment label '{}'", s.label)));
            }
        }
        Ok(EnvDataset { d, environments })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_env(&self) -> usize {
        self.environments.len()
    }

    pub fn environments(&self) -> &[EnvSlice] {
        &self.environments
    }

    pub fn total_obs(&self) -> usize {
        self.environments.iter().map(|s| s.len()).sum()
    }
}

/// The data-generating structural model.
///
/// `sigma` is the `(d+1) x (d+1)` joint covariance of `(eps_Y, eps_X)` with
/// the response-noise variance `sigma[0,0] = 1`; `train_gammas` holds one
/// invertible covariate transformation per training environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    pub d: usize,
    pub sigma: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    pub train_gammas: Vec<DMatrix<f64>>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ScmSpecJson {
    d: usize,
    sigma: Vec<Vec<f64>>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    train_gammas: Vec<Vec<Vec<f64>>>,
    seed: u64,
}

impl ScmSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        if self.sigma.nrows() != d + 1 || self.sigma.ncols() != d + 1 {
            return Err(Error::invalid(format!(
                "sigma must be {}x{}, got {}x{}",
                d + 1,
                d + 1,
                self.sigma.nrows(),
                self.sigma.ncols()
            )));
        }
        if (self.sigma[(0, 0)] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "response-noise variance sigma[0,0] must be 1, got {}",
                self.sigma[(0, 0)]
            )));
        }
        for i in 0..=d {
            for j in 0..i {
                if (self.sigma[(i, j)] - self.sigma[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("sigma must be symmetric"));
                }
            }
        }
        cholesky_checked(&self.sigma)?;
        if self.beta.len() != d || self.gamma.len() != d {
            return Err(Error::invalid("beta and gamma must have length d"));
        }
        if self.train_gammas.len() < 2 {
            return Err(Error::invalid("need at least 2 training environments"));
        }
        for (e, g) in self.train_gammas.iter().enumerate() {
            if g.nrows() != d || g.ncols() != d {
                return Err(Error::invalid(format!("train gamma {e} must be {d}x{d}")));
            }
            if g.determinant().abs() <= 1e-12 {
                return Err(Error::invalid(format!(
                    "train gamma {e} is numerically singular (|det| = {})",
                    g.determinant().abs()
                )));
            }
        }
        Ok(())
    }

    pub fn n_env(&self) -> usize {
        self.train_gammas.len()
    }

    /// Covariance of the covariate noise `eps_X` (lower-right block of sigma).
    pub fn sigma_x(&self) -> DMatrix<f64> {
        self.sigma.view((1, 1), (self.d, self.d)).into()
    }

    /// Covariance between `eps_X` and `eps_Y` (first column of sigma, minus
    /// the leading entry).
    pub fn sigma_yx(&self) -> DVector<f64> {
        DVector::from_fn(self.d, |i, _| self.sigma[(i + 1, 0)])
    }

    /// Same model with a different seed; draws from generators are then
    /// independent of the original.
    pub fn with_seed(&self, seed: u64) -> ScmSpec {
        let mut s = self.clone();
        s.seed = seed;
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = ScmSpecJson {
            d: self.d,
            sigma: matrix_rows(&self.sigma),
            beta: self.beta.iter().copied().collect(),
            gamma: self.gamma.iter().copied().collect(),
            train_gammas: self.train_gammas.iter().map(matrix_rows).collect(),
            seed: self.seed,
        };
        serde_json::to_value(j).expect("spec serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<ScmSpec> {
        let j: ScmSpecJson = serde_json::from_value(v.clone())?;
        let spec = ScmSpec {
            d: j.d,
            sigma: matrix_from_rows(&j.sigma)?,
            beta: DVector::from_vec(j.beta),
            gamma: DVector::from_vec(j.gamma),
            train_gammas: j
                .train_gammas
                .iter()
                .map(|g| matrix_from_rows(g))
                .collect::<Result<_>>()?,
            seed: j.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::invalid("matrix must be non-empty"));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::invalid("matrix rows must have equal length"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn cholesky_checked(sigma: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(sigma.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("covariance has a non-positive pivot".into())
    })?;
    // nalgebra accepts borderline matrices; enforce an explicit pivot floor.
    let l = chol.l_dirty();
    for i in 0..sigma.nrows() {
        if l[(i, i)] <= 1e-10 {
            return Err(Error::NotPositiveDefinite(format!(
                "Cholesky pivot {i} is {} (tolerance 1e-10)",
                l[(i, i)]
            )));
        }
    }
    Ok(chol)
}

/// A covariate intervention for test environments.
#[derive(Debug, Clone, PartialEq)]
pub enum InterventionSpec {
    /// No intervention: `X = eps_X`.
    Observational,
    /// Scale the covariate noise: `X = c * eps_X`, `c > 0`.
    VarianceScale { c: f64 },
    /// `X = Gamma eps_X` with `Gamma = I + Unif(-width, width)` entries,
    /// drawn once from `seed`.
    CorrelationPerturb { width: f64, seed: u64 },
    /// `X = eps_X + s` where `s` is a `Unif(-range, range)` draw projected
    /// orthogonal to `gamma_ref`, so the scale direction is untouched.
    MeanShiftOrthogonal { range: f64, gamma_ref: DVector<f64>, seed: u64 },
    /// `X = Gamma eps_X` for an explicit matrix.
    CustomGamma { gamma: DMatrix<f64> },
}

impl InterventionSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            InterventionSpec::Observational => Ok(()),
            InterventionSpec::VarianceScale { c } => {
                if !c.is_finite() || *c <= 0.0 {
                    Err(Error::invalid(format!("variance scale must be positive, got {c}")))
                } else {
                    Ok(())
                }
            }
            InterventionSpec::CorrelationPerturb { width, .. } => {
                if !width.is_finite() || *width < 0.0 {
                    Err(Error::invalid(format!("perturbation width must be >= 0, got {width}")))
                } else {
                    Ok(())
                }
            }
            InterventionSpec::MeanShiftOrthogonal { range, gamma_ref, .. } => {
                if !range.is_finite() || *range < 0.0 {
                    return Err(Error::invalid(format!("shift range must be >= 0, got {range}")));
                }
                if gamma_ref.len() != d {
                    return Err(Error::invalid("gamma_ref must have length d"));
                }
                if gamma_ref.norm() <= 0.0 {
                    return Err(Error::invalid("gamma_ref must be non-zero"));
                }
                Ok(())
            }
            InterventionSpec::CustomGamma { gamma } => {
                if gamma.nrows() != d || gamma.ncols() != d {
                    Err(Error::invalid("custom gamma must be d x d"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Canonical label used in result tables.
    pub fn label(&self) -> String {
        match self {
            InterventionSpec::Observational => "observational".into(),
            InterventionSpec::VarianceScale { c } => format!("variance_scale_{c}"),
            InterventionSpec::CorrelationPerturb { width, seed } => {
                format!("correlation_{width}_s{seed}")
            }
            InterventionSpec::MeanShiftOrthogonal { range, seed, .. } => {
                format!("mean_shift_orth_{range}_s{seed}")
            }
            InterventionSpec::CustomGamma { .. } => "custom_gamma".into(),
        }
    }

    /// Stable stream tag so distinct interventions on the same model draw
    /// independent test sets.
    fn stream_tag(&self) -> u64 {
        match self {
            InterventionSpec::Observational => 1,
            InterventionSpec::VarianceScale { c } => 2u64 ^ c.to_bits(),
            InterventionSpec::CorrelationPerturb { width, seed } => {
                3u64 ^ width.to_bits() ^ seed.rotate_left(17)
            }
            InterventionSpec::MeanShiftOrthogonal { range, seed, .. } => {
                4u64 ^ range.to_bits() ^ seed.rotate_left(17)
            }
            InterventionSpec::CustomGamma { gamma } => {
                5u64 ^ gamma.iter().fold(0u64, |acc, v| acc.rotate_left(7) ^ v.to_bits())
            }
        }
    }
}

/// Draw `n` observations of `(eps_Y, eps_X)` and push them through
/// `X = Gamma eps_X + shift`, `Y = beta'X + exp(gamma'X) eps_Y`.
fn generate_slice(
    spec: &ScmSpec,
    label: String,
    gamma_env: &DMatrix<f64>,
    shift: Option<&DVector<f64>>,
    n: usize,
    rng: &mut SplitMix64,
) -> Result<EnvSlice> {
    let d = spec.d;
    let chol = cholesky_checked(&spec.sigma)?;
    let l = chol.l();
    let mut x = DMatrix::zeros(n, d);
    let mut y = DVector::zeros(n);
    let mut z = DVector::zeros(d + 1);
    for i in 0..n {
        for k in 0..=d {
            z[k] = rng.next_gaussian();
        }
        let eps = &l * &z;
        let eps_y = eps[0];
        let eps_x = eps.rows(1, d);
        let mut xi = gamma_env * eps_x;
        if let Some(s) = shift {
            xi += s;
        }
        let loc = spec.beta.dot(&xi);
        let log_scale = spec.gamma.dot(&xi);
        y[i] = loc + log_scale.exp() * eps_y;
        x.row_mut(i).copy_from(&xi.transpose());
    }
    EnvSlice::new(label, x, y)
}

/// Simulate the training environments of `spec`, `n_per_env` observations
/// each. Environments use derived sub-seeds, so they are independent and a
/// change to one never alters another. Deterministic given `spec.seed`.
pub fn simulate_training(spec: &ScmSpec, n_per_env: usize) -> Result<EnvDataset> {
    spec.validate()?;
    if n_per_env < 2 {
        return Err(Error::invalid(format!("n_per_env must be >= 2, got {n_per_env}")));
    }
    let mut slices = Vec::with_capacity(spec.n_env());
    for (e, gamma_env) in spec.train_gammas.iter().enumerate() {
        let mut rng = SplitMix64::from_stream(spec.seed, &[TAG_TRAIN, e as u64]);
        slices.push(generate_slice(
            spec,
            format!("env{}", e + 1),
            gamma_env,
            None,
            n_per_env,
            &mut rng,
        )?);
    }
    EnvDataset::new(slices)
}

/// Simulate one test environment under the given intervention. The response
/// is generated by the unchanged structural equation, so any confounding
/// between covariate noise and response noise is preserved.
pub fn simulate_test(
    spec: &ScmSpec,
    intervention: &InterventionSpec,
    n: usize,
) -> Result<EnvSlice> {
    spec.validate()?;
    intervention.validate(spec.d)?;
    if n == 0 {
        return Err(Error::invalid("test sample size must be positive"));
    }
    let d = spec.d;
    let identity = DMatrix::identity(d, d);
    let (gamma_env, shift): (DMatrix<f64>, Option<DVector<f64>>) = match intervention {
        InterventionSpec::Observational => (identity, None),
        InterventionSpec::VarianceScale { c } => (identity * *c, None),
        InterventionSpec::CorrelationPerturb { width, seed } => {
            let mut r = SplitMix64::from_stream(*seed, &[TAG_SPEC, 1]);
            let g = DMatrix::from_fn(d, d, |i, j| {
                let u = r.next_range(-*width, *width);
                if i == j {
                    1.0 + u
                } else {
                    u
                }
            });
            (g, None)
        }
        InterventionSpec::MeanShiftOrthogonal { range, gamma_ref, seed } => {
            let mut r = SplitMix64::from_stream(*seed, &[TAG_SPEC, 2]);
            let delta = DVector::from_fn(d, |_, _| r.next_range(-*range, *range));
            let proj = gamma_ref * (delta.dot(gamma_ref) / gamma_ref.norm_squared());
            (identity, Some(delta - proj))
        }
        InterventionSpec::CustomGamma { gamma } => (gamma.clone(), None),
    };
    let mut rng = SplitMix64::from_stream(spec.seed, &[TAG_TEST, intervention.stream_tag()]);
    generate_slice(spec, intervention.label(), &gamma_env, shift.as_ref(), n, &mut rng)
}

/// Default simulation design: unit-variance noise with fixed confounding
/// for `d = 5` (0.8, -0.4, 0.3, -0.2, 0.1 between `eps_Y` and the entries of
/// `eps_X`) and uniform draws otherwise; `beta_j ~ Unif(0,3)`,
/// `gamma_j ~ Unif(0,0.5)`; near-identity training transformations
/// `Gamma^e = I + Unif(-0.1, 0.1)` for `e = 1..d`; and a final environment
/// `Gamma^{d+1} = sum_e alpha^e Gamma^e` with random `alpha^e <= 0` summing
/// to -1 (negated normalized uniforms).
pub fn make_default_spec(d: usize, seed: u64) -> Result<ScmSpec> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    const D5_CONFOUNDING: [f64; 5] = [0.8, -0.4, 0.3, -0.2, 0.1];

    let sigma = if d == 5 {
        let mut s = DMatrix::identity(6, 6);
        for (j, &v) in D5_CONFOUNDING.iter().enumerate() {
            s[(0, j + 1)] = v;
            s[(j + 1, 0)] = v;
        }
        cholesky_checked(&s)?;
        s
    } else {
        // Confounding drawn uniformly, redrawn until positive definite.
        let mut attempt = 0u64;
        loop {
            let mut r = SplitMix64::from_stream(seed, &[TAG_SPEC, 10, attempt]);
            let mut s = DMatrix::identity(d + 1, d + 1);
            for j in 1..=d {
                let v = r.next_range(-0.5, 0.5);
                s[(0, j)] = v;
                s[(j, 0)] = v;
            }
            if cholesky_checked(&s).is_ok() {
                break s;
            }
            attempt += 1;
            if attempt >= 100 {
                return Err(Error::NotPositiveDefinite(
                    "could not draw a positive definite covariance in 100 attempts".into(),
                ));
            }
        }
    };

    let mut r_coef = SplitMix64::from_stream(seed, &[TAG_SPEC, 11]);
    let beta = DVector::from_fn(d, |_, _| r_coef.next_range(0.0, 3.0));
    let gamma = DVector::from_fn(d, |_, _| r_coef.next_range(0.0, 0.5));

    let mut train_gammas = Vec::with_capacity(d + 1);
    for e in 0..d {
        let mut r = SplitMix64::from_stream(seed, &[TAG_SPEC, 12, e as u64]);
        let g = DMatrix::from_fn(d, d, |i, j| {
            let u = r.next_range(-0.1, 0.1);
            if i == j {
                1.0 + u
            } else {
                u
            }
        });
        train_gammas.push(g);
    }

    // alpha^e <= 0 summing to -1: negated normalized uniforms.
    let mut r_alpha = SplitMix64::from_stream(seed, &[TAG_SPEC, 13]);
    let raw: Vec<f64> = (0..d).map(|_| r_alpha.next_range(0.0, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut last = DMatrix::zeros(d, d);
    for (e, g) in train_gammas.iter().enumerate() {
        last += g * (-raw[e] / total);
    }
    train_gammas.push(last);

    let spec = ScmSpec { d, sigma, beta, gamma, train_gammas, seed };
    spec.validate()?;
    Ok(spec)
}

/// Load a dataset from CSV with header `env,y,x1,...,xd`. Lines starting
/// with `#` are metadata comments and are skipped. Environments keep their
/// first-appearance order.
pub fn load_csv(path: impl AsRef<Path>) -> Result<EnvDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() < 3 || headers.get(0) != Some("env") || headers.get(1) != Some("y") {
        return Err(Error::Csv(format!(
            "{}: header must be env,y,x1,...,xd (got '{}')",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let d = headers.len() - 2;
    for j in 0..d {
        let want = format!("x{}", j + 1);
        if headers.get(j + 2) != Some(want.as_str()) {
            return Err(Error::Csv(format!(
                "{}: expected column {} to be '{}', got '{}'",
                path.display(),
                j + 3,
                want,
                headers.get(j + 2).unwrap_or("")
            )));
        }
    }

    // label -> (first appearance index, rows)
    let mut order: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(f64, Vec<f64>)>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != d + 2 {
            return Err(Error::Csv(format!(
                "{} line {line}: expected {} fields, got {}",
                path.display(),
                d + 2,
                record.len()
            )));
        }
        let env = record.get(0).unwrap_or("").to_string();
        if env.is_empty() {
            return Err(Error::Csv(format!("{} line {line}: empty env label", path.display())));
        }
        let parse = |field: usize, name: &str| -> Result<f64> {
            let raw = record.get(field).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| {
                Error::Csv(format!(
                    "{} line {line}: column '{name}' has non-numeric value '{raw}'",
                    path.display()
                ))
            })
        };
        let y = parse(1, "y")?;
        let mut xs = Vec::with_capacity(d);
        for j in 0..d {
            xs.push(parse(j + 2, &format!("x{}", j + 1))?);
        }
        let idx = match order.iter().position(|l| l == &env) {
            Some(i) => i,
            None => {
                order.push(env);
                rows.push(Vec::new());
                order.len() - 1
            }
        };
        rows[idx].push((y, xs));
    }

    if order.is_empty() {
        return Err(Error::Csv(format!("{}: no data rows", path.display())));
    }
    if order.len() < 2 {
        return Err(Error::Csv(format!(
            "{}: found a single environment '{}'; need at least 2",
            path.display(),
            order[0]
        )));
    }

    let mut slices = Vec::with_capacity(order.len());
    for (label, env_rows) in order.into_iter().zip(rows) {
        let n = env_rows.len();
        let mut x = DMatrix::zeros(n, d);
        let mut y = DVector::zeros(n);
        for (i, (yi, xi)) in env_rows.into_iter().enumerate() {
            y[i] = yi;
            for j in 0..d {
                x[(i, j)] = xi[j];
            }
        }
        slices.push(EnvSlice::new(label, x, y)?);
    }
    EnvDataset::new(slices)
}

/// Write a dataset as CSV (`env,y,x1,...,xd`), optionally preceded by
/// `#`-prefixed metadata lines. Floats use the shortest representation that
/// parses back to the identical value, so a save/load round trip is exact.
pub fn save_csv(
    path: impl AsRef<Path>,
    data: &EnvDataset,
    metadata: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("env,y");
    for j in 1..=data.d() {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for slice in data.environments() {
        for i in 0..slice.len() {
            out.push_str(&slice.label);
            out.push_str(&format!(",{}", slice.y[i]));
            for j in 0..data.d() {
                out.push_str(&format!(",{}", slice.x[(i, j)]));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
