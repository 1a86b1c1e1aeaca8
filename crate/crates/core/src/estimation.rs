//! Model fitting, Godambe sandwich inference and Wald tables.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{standardize, Cell, ColumnScale, Dataset};
use crate::error::{Error, Result};
use crate::formula::FormulaSpec;
use crate::kernels::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::likelihood::{objective_flat, scores_flat};
use crate::model::{
    chain_rule_gradient, ModelSpec, ParameterSet, ResponseKind, ResponseParams, ResponseSpec,
};
use crate::optim::{bfgs, conjugate_gradient, OptimOptions, OptimOutcome};
use crate::simulate::{min_eigenvalue, NormalStream};

/// R is reported as not positive definite below this smallest eigenvalue.
pub const PD_WARNING_THRESHOLD: f64 = 1e-8;
/// H is treated as singular when `min |λ| ≤ SINGULAR_RCOND · max |λ|`.
pub const SINGULAR_RCOND: f64 = 1e-13;
/// Relative step for the finite-difference sensitivity matrix.
pub const HESSIAN_STEP: f64 = 1e-5;
/// Bound on the magnitude of starting correlations.
const INITIAL_RHO_BOUND: f64 = 0.9;
const RESTART_JITTER: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    #[default]
    #[serde(rename = "bfgs")]
    QuasiNewtonBfgs,
    #[serde(rename = "cg")]
    ConjugateGradient,
}

impl FromStr for Solver {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bfgs" | "quasi-newton-bfgs" => Ok(Solver::QuasiNewtonBfgs),
            "cg" | "conjugate-gradient" => Ok(Solver::ConjugateGradient),
            other => Err(format!("unknown solver `{other}` (expected bfgs or cg)")),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::QuasiNewtonBfgs => "bfgs",
            Solver::ConjugateGradient => "cg",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub solver: Solver,
    pub max_iterations: usize,
    /// Relative: the unconstrained gradient must satisfy `‖g‖ ≤ tol · max(1, |f|)`.
    pub gradient_tolerance: f64,
    pub compute_se: bool,
    /// Seeds the jittered restart used when the first run does not converge.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            solver: Solver::QuasiNewtonBfgs,
            max_iterations: 1000,
            gradient_tolerance: 1e-5,
            compute_se: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.gradient_tolerance > 0.0 && self.gradient_tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gradient tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Formula as supplied by the user, if the fit came from one.
    pub formula: Option<FormulaSpec>,
    pub spec: ModelSpec,
    /// Names in the flat parameter layout order.
    pub parameter_names: Vec<String>,
    pub estimates: ParameterSet,
    /// Standard errors in layout order; `None` when unavailable.
    pub se: Vec<Option<f64>>,
    /// Godambe covariance in layout order, row-major.
    pub vcov: Option<Vec<f64>>,
    pub log_pl: f64,
    pub claic: Option<f64>,
    pub clbic: Option<f64>,
    pub n_units: usize,
    pub empty_units: usize,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    /// Norm of the objective gradient in the unconstrained space at the estimate.
    pub gradient_norm: f64,
    pub min_eigen_r: f64,
    pub solver: Solver,
    /// Covariate (mean, sd) used to standardize before fitting, in covariate order.
    pub standardization: Option<Vec<ColumnScale>>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn dim(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn estimate_vec(&self) -> Vec<f64> {
        self.estimates.to_vec(&self.spec)
    }

    pub fn vcov_matrix(&self) -> Option<DMatrix<f64>> {
        let d = self.dim();
        self.vcov.as_ref().map(|v| DMatrix::from_row_slice(d, d, v))
    }
}

/// Sensitivity `H`, variability `J` and `H⁻¹ J H⁻¹`, all in the constrained layout.
#[derive(Clone, Debug)]
pub struct Sandwich {
    pub sensitivity: DMatrix<f64>,
    pub variability: DMatrix<f64>,
    pub vcov: DMatrix<f64>,
    /// `tr(J H⁻¹)`.
    pub penalty: f64,
}

/// Report section a parameter belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Thresholds,
    Intercepts,
    Coefficients,
    Scales,
    Correlations,
}

impl Section {
    pub const ALL: [Section; 5] = [
        Section::Thresholds,
        Section::Intercepts,
        Section::Coefficients,
        Section::Scales,
        Section::Correlations,
    ];
}

/// Section, sort key within the section, and name of every parameter, in layout order.
pub fn parameter_labels(spec: &ModelSpec) -> Vec<(Section, usize, String)> {
    let q = spec.q();
    let mut out = Vec::new();
    for (j, r) in spec.responses.iter().enumerate() {
        match r.kind {
            ResponseKind::Ordinal { categories } => {
                for c in 1..categories {
                    out.push((
                        Section::Thresholds,
                        out.len(),
                        format!("{} {}|{}", r.name, r.label(c), r.label(c + 1)),
                    ));
                }
            }
            ResponseKind::Gaussian => {
                out.push((Section::Intercepts, j, format!("beta0.{}", r.name)))
            }
        }
        for (c, cov) in spec.covariates.iter().enumerate() {
            out.push((
                Section::Coefficients,
                c * q + j,
                format!("{}{}", r.name, cov),
            ));
        }
        if !r.is_ordinal() {
            out.push((Section::Scales, j, format!("sigma.{}", r.name)));
        }
    }
    for (i, (k, l)) in spec.pairs().enumerate() {
        out.push((
            Section::Correlations,
            i,
            format!("corr_{}_{}", spec.responses[k].name, spec.responses[l].name),
        ));
    }
    out
}

pub fn parameter_names(spec: &ModelSpec) -> Vec<String> {
    parameter_labels(spec)
        .into_iter()
        .map(|(_, _, n)| n)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Objective and gradient over the unconstrained encoding.
fn unconstrained_objective(u: &[f64], data: &Dataset, spec: &ModelSpec) -> (f64, Vec<f64>) {
    let params = ParameterSet::decode_slice(u, spec).expect("vector length matches layout");
    let obj = objective_flat(&params.to_vec(spec), data, spec);
    let grad =
        chain_rule_gradient(&obj.grad, &params, spec).expect("gradient length matches layout");
    (obj.value, grad)
}

fn run_solver(
    solver: Solver,
    data: &Dataset,
    spec: &ModelSpec,
    start: &[f64],
    opts: OptimOptions,
) -> OptimOutcome {
    let f = |u: &[f64]| unconstrained_objective(u, data, spec);
    match solver {
        Solver::QuasiNewtonBfgs => bfgs(f, start, opts),
        Solver::ConjugateGradient => conjugate_gradient(f, start, opts),
    }
}

fn least_squares(rows: &[(Vec<f64>, f64)], k: usize) -> Option<Vec<f64>> {
    let n = rows.len();
    let a = DMatrix::from_fn(n, k, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(n, rows.iter().map(|r| r.1));
    a.svd(true, true)
        .solve(&b, 1e-12)
        .ok()
        .map(|s| s.iter().copied().collect())
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 3 {
        return None;
    }
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    let r = sab / (saa * sbb).sqrt();
    r.is_finite().then_some(r)
}

/// Marginal fit of one ordinal response; returns its parameters.
fn marginal_ordinal(
    j: usize,
    response: &ResponseSpec,
    spec: &ModelSpec,
    data: &Dataset,
) -> Result<ResponseParams> {
    let k = response.categories().expect("ordinal response");
    let mut counts = vec![0.0; k];
    let mut column = Vec::with_capacity(data.n);
    for i in 0..data.n {
        let cell = data.cell(i, j);
        if let Cell::Ordinal(r) = cell {
            counts[r - 1] += 1.0;
        }
        column.push(cell);
    }
    let total: f64 = counts.iter().sum();
    if total < 2.0 {
        return Err(Error::InvalidData(format!(
            "response `{}` has fewer than 2 observations",
            response.name
        )));
    }
    let smoothed = total + 0.5 * k as f64;
    let mut cum = 0.0;
    let thresholds: Vec<f64> = counts[..k - 1]
        .iter()
        .map(|c| {
            cum += c + 0.5;
            std_normal_quantile(cum / smoothed)
        })
        .collect();
    let start = ResponseParams::Ordinal {
        thresholds,
        coefficients: vec![0.0; data.p],
    };

    let sub_spec = ModelSpec {
        responses: vec![response.clone()],
        covariates: spec.covariates.clone(),
        standardize: false,
    };
    let sub_data = Dataset::new(1, data.p, column, data.x.clone())?;
    let start_set = ParameterSet {
        responses: vec![start],
        correlations: Vec::new(),
    };
    let u0 = start_set.encode(&sub_spec)?.values;
    let out = run_solver(
        Solver::QuasiNewtonBfgs,
        &sub_data,
        &sub_spec,
        &u0,
        OptimOptions {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
        },
    );
    let u = if out.f.is_finite() && out.x.iter().all(|v| v.is_finite()) {
        out.x
    } else {
        u0
    };
    let mut fitted = ParameterSet::decode_slice(&u, &sub_spec)?;
    Ok(fitted.responses.remove(0))
}

/// Starting values from marginal fits and residual correlations.
pub fn initial_values(spec: &ModelSpec, data: &Dataset) -> Result<ParameterSet> {
    let p = data.p;
    let mut responses = Vec::with_capacity(spec.q());
    // Standardized residuals per response (NaN where missing).
    let mut residuals = vec![f64::NAN; data.n * spec.q()];
    for (j, r) in spec.responses.iter().enumerate() {
        match r.kind {
            ResponseKind::Gaussian => {
                let rows: Vec<(Vec<f64>, f64)> = (0..data.n)
                    .filter_map(|i| match data.cell(i, j) {
                        Cell::Gaussian(y) => {
                            let mut xr = Vec::with_capacity(p + 1);
                            xr.push(1.0);
                            xr.extend_from_slice(data.row_x(i));
                            Some((xr, y))
                        }
                        _ => None,
                    })
                    .collect();
                if rows.len() < p + 2 {
                    return Err(Error::InvalidData(format!(
                        "response `{}` has {} observations, fewer than its {} parameters",
                        r.name,
                        rows.len(),
                        p + 2
                    )));
                }
                let beta = least_squares(&rows, p + 1).ok_or_else(|| {
                    Error::InvalidData(format!("least-squares start for `{}` failed", r.name))
                })?;
                let rss: f64 = rows
                    .iter()
                    .map(|(xr, y)| {
                        let fit: f64 = xr.iter().zip(&beta).map(|(a, b)| a * b).sum();
                        (y - fit) * (y - fit)
                    })
                    .sum();
                let sigma = (rss / rows.len() as f64).sqrt().max(1e-3);
                for i in 0..data.n {
                    if let Cell::Gaussian(y) = data.cell(i, j) {
                        let fit: f64 = beta[0]
                            + beta[1..]
                                .iter()
                                .zip(data.row_x(i))
                                .map(|(a, b)| a * b)
                                .sum::<f64>();
                        residuals[i * spec.q() + j] = (y - fit) / sigma;
                    }
                }
                responses.push(ResponseParams::Gaussian {
                    intercept: beta[0],
                    coefficients: beta[1..].to_vec(),
                    scale: sigma,
                });
            }
            ResponseKind::Ordinal { .. } => {
                let fitted = marginal_ordinal(j, r, spec, data)?;
                if let ResponseParams::Ordinal {
                    thresholds,
                    coefficients,
                } = &fitted
                {
                    for i in 0..data.n {
                        if let Cell::Ordinal(c) = data.cell(i, j) {
                            let eta: f64 = coefficients
                                .iter()
                                .zip(data.row_x(i))
                                .map(|(a, b)| a * b)
                                .sum();
                            let upper = thresholds.get(c - 1).map_or(f64::INFINITY, |t| t - eta);
                            let lower = if c == 1 {
                                f64::NEG_INFINITY
                            } else {
                                thresholds[c - 2] - eta
                            };
                            let prob = std_normal_cdf(upper) - std_normal_cdf(lower);
                            // E[ε | lower < ε ≤ upper]
                            let g = (std_normal_pdf(lower) - std_normal_pdf(upper)) / prob;
                            if g.is_finite() {
                                residuals[i * spec.q() + j] = g;
                            }
                        }
                    }
                }
                responses.push(fitted);
            }
        }
    }
    let q = spec.q();
    let correlations = spec
        .pairs()
        .map(|(k, l)| {
            let pairs: Vec<(f64, f64)> = (0..data.n)
                .map(|i| (residuals[i * q + k], residuals[i * q + l]))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .collect();
            pearson(&pairs)
                .unwrap_or(0.0)
                .clamp(-INITIAL_RHO_BOUND, INITIAL_RHO_BOUND)
        })
        .collect();
    Ok(ParameterSet {
        responses,
        correlations,
    })
}

/// Fits the model by minimizing the negative pairwise log-likelihood.
///
/// Non-convergence is reported through `converged` rather than as an error.
pub fn fit(spec: &ModelSpec, data: &Dataset, config: &FitConfig) -> Result<FitResult> {
    spec.validate()?;
    config.validate()?;
    data.check_against(spec)?;
    if data.n < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 units, got {}",
            data.n
        )));
    }
    let standardized;
    let data = if spec.standardize && data.p > 0 {
        standardized = standardize(data, &spec.covariates)?;
        &standardized
    } else {
        data
    };

    let start = initial_values(spec, data)?.encode(spec)?.values;
    let opts = OptimOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
    };
    let mut best = run_solver(config.solver, data, spec, &start, opts);
    let mut iterations = best.iterations;
    let mut evaluations = best.evaluations;
    let mut warnings = Vec::new();
    if !best.converged {
        let mut rng = NormalStream::new(config.seed);
        let base = if best.f.is_finite() {
            best.x.clone()
        } else {
            start.clone()
        };
        let jittered: Vec<f64> = base
            .iter()
            .map(|v| v + RESTART_JITTER * rng.normal())
            .collect();
        let retry = run_solver(config.solver, data, spec, &jittered, opts);
        iterations += retry.iterations;
        evaluations += retry.evaluations;
        warnings.push(
            "first solver run did not converge; restarted from a perturbed point".to_string(),
        );
        if retry.converged || !(retry.f >= best.f) {
            best = retry;
        }
    }
    if !best.converged {
        warnings.push(format!(
            "optimizer did not converge after {iterations} iterations (gradient norm {:.3e})",
            norm(&best.grad)
        ));
    }

    let estimates = ParameterSet::decode_slice(&best.x, spec)?;
    let theta = estimates.to_vec(spec);
    let objective = objective_flat(&theta, data, spec);
    if objective.empty_units > 0 {
        warnings.push(format!(
            "{} units have no observed response and contribute nothing",
            objective.empty_units
        ));
    }
    let min_eigen_r = if spec.q() > 1 {
        min_eigenvalue(&estimates.correlation_matrix(spec), spec.q())
    } else {
        1.0
    };
    if min_eigen_r < PD_WARNING_THRESHOLD {
        warnings.push(format!(
            "estimated correlation matrix is not positive definite (smallest eigenvalue {min_eigen_r:.3e})"
        ));
    }

    let d = theta.len();
    let log_pl = -objective.value;
    let (mut se, mut vcov, mut claic, mut clbic) = (vec![None; d], None, None, None);
    if config.compute_se {
        match sandwich_flat(&theta, data, spec) {
            Ok(s) => {
                se = (0..d)
                    .map(|i| Some(s.vcov[(i, i)].max(0.0).sqrt()))
                    .collect();
                vcov = Some((0..d * d).map(|k| s.vcov[(k / d, k % d)]).collect());
                let (a, b) = criteria_from_penalty(log_pl, s.penalty, data.n);
                claic = Some(a);
                clbic = Some(b);
            }
            Err(Error::Singular { condition }) => {
                warnings.push(format!(
                    "sensitivity matrix is numerically singular (condition number {condition:.3e}); standard errors omitted"
                ));
            }
            Err(e) => return Err(e),
        }
    }

    Ok(FitResult {
        formula: None,
        spec: spec.clone(),
        parameter_names: parameter_names(spec),
        estimates,
        se,
        vcov,
        log_pl,
        claic,
        clbic,
        n_units: data.n,
        empty_units: objective.empty_units,
        converged: best.converged,
        iterations,
        evaluations,
        gradient_norm: norm(&best.grad),
        min_eigen_r,
        solver: config.solver,
        standardization: data.standardization.clone(),
        warnings,
    })
}

/// Symmetric inverse via eigendecomposition, failing when the matrix is numerically singular.
pub fn symmetric_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max = abs.iter().copied().fold(0.0, f64::max);
    let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
    if abs.iter().any(|v| !v.is_finite()) || !(min > SINGULAR_RCOND * max) {
        return Err(Error::Singular {
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Ok(symmetrize(inv))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Jacobian of the total score by central differences of the analytic gradient, symmetrized.
pub(crate) fn sensitivity_flat(theta: &[f64], data: &Dataset, spec: &ModelSpec) -> DMatrix<f64> {
    let d = theta.len();
    let mut h = DMatrix::zeros(d, d);
    let mut point = theta.to_vec();
    for j in 0..d {
        let step = HESSIAN_STEP * theta[j].abs().max(1.0);
        point[j] = theta[j] + step;
        let up = objective_flat(&point, data, spec).grad;
        point[j] = theta[j] - step;
        let down = objective_flat(&point, data, spec).grad;
        point[j] = theta[j];
        for i in 0..d {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    symmetrize(h)
}

pub(crate) fn sandwich_flat(theta: &[f64], data: &Dataset, spec: &ModelSpec) -> Result<Sandwich> {
    let h = sensitivity_flat(theta, data, spec);
    let scores = scores_flat(theta, data, spec);
    let j = scores.transpose() * &scores;
    let h_inv = symmetric_inverse(&h)?;
    let vcov = symmetrize(&h_inv * &j * &h_inv);
    let penalty = (&j * &h_inv).trace();
    Ok(Sandwich {
        sensitivity: h,
        variability: j,
        vcov,
        penalty,
    })
}

/// Godambe sandwich `H⁻¹ J H⁻¹` at `params`, in the constrained layout.
pub fn godambe_vcov(params: &ParameterSet, data: &Dataset, spec: &ModelSpec) -> Result<Sandwich> {
    params.validate(spec)?;
    data.check_against(spec)?;
    sandwich_flat(&params.to_vec(spec), data, spec)
}

fn criteria_from_penalty(log_pl: f64, penalty: f64, n: usize) -> (f64, f64) {
    (
        -2.0 * log_pl + 2.0 * penalty,
        -2.0 * log_pl + (n as f64).ln() * penalty,
    )
}

/// `(CLAIC, CLBIC)` with penalty `tr(J H⁻¹)`.
pub fn information_criteria(
    log_pl: f64,
    h: &DMatrix<f64>,
    j: &DMatrix<f64>,
    n: usize,
) -> Result<(f64, f64)> {
    if !h.is_square() || h.shape() != j.shape() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: j.nrows(),
        });
    }
    let h_inv = symmetric_inverse(h)?;
    Ok(criteria_from_penalty(log_pl, (j * h_inv).trace(), n))
}

/// Two-sided normal p-value `2 Φ(−|z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    2.0 * std_normal_cdf(-z.abs())
}

pub fn significance_stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => "",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaldRow {
    pub name: String,
    pub section: Section,
    /// Position in the flat layout.
    pub index: usize,
    pub estimate: f64,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub stars: &'static str,
}

impl WaldRow {
    /// The row lacks a usable standard error.
    pub fn flagged(&self) -> bool {
        self.z.is_none()
    }
}

/// Wald rows grouped by section and ordered as in the printed summary.
pub fn wald_table(result: &FitResult) -> Vec<WaldRow> {
    let estimates = result.estimate_vec();
    let mut rows: Vec<(Section, usize, WaldRow)> = parameter_labels(&result.spec)
        .into_iter()
        .enumerate()
        .map(|(index, (section, key, name))| {
            let estimate = estimates[index];
            let se = result.se.get(index).copied().flatten();
            let z = se
                .filter(|s| *s > 0.0 && s.is_finite())
                .map(|s| estimate / s);
            let p = z.map(two_sided_p);
            let row = WaldRow {
                name,
                section,
                index,
                estimate,
                se,
                z,
                p,
                stars: p.map_or("", significance_stars),
            };
            (section, key, row)
        })
        .collect();
    rows.sort_by_key(|(s, k, _)| (Section::ALL.iter().position(|x| x == s), *k));
    rows.into_iter().map(|(_, _, r)| r).collect()
}
