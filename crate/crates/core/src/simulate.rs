//! Draws datasets from the latent-variable model.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset};
use crate::error::{Error, Result};
use crate::kernels::std_normal_quantile;
use crate::model::{ModelSpec, ParameterSet, ResponseParams, ResponseSpec};

/// Smallest eigenvalue of R accepted for simulation.
pub const MIN_EIGEN_R: f64 = 1e-10;

/// Xoshiro256++ stream producing uniforms on the open unit interval and normals by inverse CDF.
#[derive(Clone, Debug)]
pub struct NormalStream(Xoshiro256PlusPlus);

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// `((u >> 11) + 0.5) · 2⁻⁵³`, never exactly 0 or 1.
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateLaw {
    #[default]
    StandardNormalIid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub spec: ModelSpec,
    pub params: ParameterSet,
    pub n: usize,
    pub seed: u64,
    pub covariate_law: CovariateLaw,
    /// Per-response probability that a cell is missing; empty means none.
    pub missing_rate: Vec<f64>,
}

/// On-disk simulation config: a parameter set plus optional run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfigFile {
    pub spec: ModelSpec,
    pub params: ParameterSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_rate: Option<Vec<f64>>,
}

/// Smallest eigenvalue of a row-major symmetric `q × q` matrix.
pub fn min_eigenvalue(matrix: &[f64], q: usize) -> f64 {
    let m = DMatrix::from_row_slice(q, q, matrix);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.params.validate(&self.spec)?;
        if self.n == 0 {
            return Err(Error::InvalidConfig(
                "number of units must be positive".into(),
            ));
        }
        if !self.missing_rate.is_empty() {
            if self.missing_rate.len() != self.spec.q() {
                return Err(Error::InvalidConfig(format!(
                    "{} missing rates given for {} responses",
                    self.missing_rate.len(),
                    self.spec.q()
                )));
            }
            if let Some(r) = self.missing_rate.iter().find(|r| !(0.0..1.0).contains(*r)) {
                return Err(Error::InvalidConfig(format!(
                    "missing rate {r} outside [0, 1)"
                )));
            }
        }
        let min_eigen = min_eigenvalue(&self.params.correlation_matrix(&self.spec), self.spec.q());
        if !(min_eigen > MIN_EIGEN_R) {
            return Err(Error::NotPositiveDefinite { min_eigen });
        }
        Ok(())
    }
}

/// Category of a latent value: `1 + #{θ_r < latent}`, so ties go to the lower category.
pub fn slot(latent: f64, thresholds: &[f64]) -> usize {
    1 + thresholds.iter().filter(|&&t| t < latent).count()
}

pub fn simulate(config: &SimConfig) -> Result<Dataset> {
    simulate_with_latent(config).map(|(d, _)| d)
}

/// Also returns the standardized latent errors ε (row-major `n × q`) before slotting.
pub fn simulate_with_latent(config: &SimConfig) -> Result<(Dataset, Vec<f64>)> {
    config.validate()?;
    let (spec, params) = (&config.spec, &config.params);
    let (n, q, p) = (config.n, spec.q(), spec.p());
    let r = DMatrix::from_row_slice(q, q, &params.correlation_matrix(spec));
    let chol = Cholesky::new(r).ok_or(Error::NotPositiveDefinite { min_eigen: 0.0 })?;
    let l = chol.l();

    let mut rng = NormalStream::new(config.seed);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n * q);
    let mut latent = Vec::with_capacity(n * q);
    let mut z = vec![0.0; q];
    for _ in 0..n {
        let row_start = x.len();
        match config.covariate_law {
            CovariateLaw::StandardNormalIid => x.extend((0..p).map(|_| rng.normal())),
        }
        let xi = &x[row_start..];
        for v in z.iter_mut() {
            *v = rng.normal();
        }
        for (j, rp) in params.responses.iter().enumerate() {
            let eps: f64 = (0..=j).map(|c| l[(j, c)] * z[c]).sum();
            latent.push(eps);
            let lp: f64 = rp.coefficients().iter().zip(xi).map(|(b, v)| b * v).sum();
            y.push(match rp {
                ResponseParams::Ordinal { thresholds, .. } => {
                    Cell::Ordinal(slot(lp + eps, thresholds))
                }
                ResponseParams::Gaussian {
                    intercept, scale, ..
                } => Cell::Gaussian(intercept + lp + scale * eps),
            });
        }
        let row = y.len() - q;
        for j in 0..q {
            let u = rng.uniform();
            if config.missing_rate.get(j).is_some_and(|&rate| u < rate) {
                y[row + j] = Cell::Missing;
            }
        }
    }
    Ok((Dataset::new(q, p, y, x)?, latent))
}

/// Generating model of the built-in toy example: two 3-category ordinal and two Gaussian
/// responses driven by three covariates.
pub fn toy_spec() -> ModelSpec {
    ModelSpec::new(
        vec![
            ResponseSpec::ordinal("y1", 3),
            ResponseSpec::ordinal("y2", 3),
            ResponseSpec::gaussian("z1"),
            ResponseSpec::gaussian("z2"),
        ],
        vec!["X1".into(), "X2".into(), "X3".into()],
        false,
    )
    .expect("toy spec is valid")
}

pub fn toy_params() -> ParameterSet {
    let beta = vec![2.0, 0.0, -2.0];
    ParameterSet {
        responses: vec![
            ResponseParams::Ordinal {
                thresholds: vec![-1.0, 1.0],
                coefficients: beta.clone(),
            },
            ResponseParams::Ordinal {
                thresholds: vec![-2.0, 2.0],
                coefficients: beta.clone(),
            },
            ResponseParams::Gaussian {
                intercept: -1.0,
                coefficients: beta.clone(),
                scale: 1.0,
            },
            ResponseParams::Gaussian {
                intercept: 1.0,
                coefficients: beta,
                scale: 2.0,
            },
        ],
        correlations: vec![0.6364, 0.7799, 0.6542, 0.9188, 0.8012, 0.8963],
    }
}

pub const TOY_UNITS: usize = 1000;

pub fn toy_config(seed: u64) -> SimConfig {
    SimConfig {
        spec: toy_spec(),
        params: toy_params(),
        n: TOY_UNITS,
        seed,
        covariate_law: CovariateLaw::StandardNormalIid,
        missing_rate: Vec::new(),
    }
}

/// 1000 units with columns y1, y2, z1, z2, X1, X2, X3.
pub fn toy_generator(seed: u64) -> Dataset {
    simulate(&toy_config(seed)).expect("toy config is valid")
}
