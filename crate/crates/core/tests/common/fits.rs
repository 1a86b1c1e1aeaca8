//! Fitting fixtures shared by the estimation and acceptance suites.

use nalgebra::DMatrix;
use ordnorm::data::{Cell, Dataset};
use ordnorm::estimation::{FitConfig, FitResult};
use ordnorm::likelihood::pairwise_neglog;
use ordnorm::model::{ModelSpec, ParameterSet, ResponseParams, ResponseSpec};
use ordnorm::simulate::{simulate, toy_config};

use super::Rng;

pub fn tight() -> FitConfig {
    FitConfig {
        gradient_tolerance: 1e-10,
        ..FitConfig::default()
    }
}

pub fn gaussian_data(rng: &mut Rng, n: usize, p: usize) -> (ModelSpec, Dataset) {
    let spec = ModelSpec::new(
        vec![ResponseSpec::gaussian("z")],
        (0..p).map(|c| format!("x{c}")).collect(),
        false,
    )
    .unwrap();
    let x = rng.normals(n * p);
    let y = (0..n)
        .map(|i| {
            let lp: f64 = (0..p).map(|c| (c as f64 + 1.0) * x[i * p + c]).sum();
            Cell::Gaussian(0.7 + lp + 1.3 * rng.normal())
        })
        .collect();
    (spec, Dataset::new(1, p, y, x).unwrap())
}

pub fn gaussian_values(data: &Dataset) -> Vec<f64> {
    (0..data.n)
        .map(|i| match data.cell(i, 0) {
            Cell::Gaussian(v) => v,
            other => panic!("{other:?}"),
        })
        .collect()
}

/// OLS coefficients `(intercept, slopes…)` and MLE residual sd.
pub fn ols(data: &Dataset) -> (Vec<f64>, f64) {
    let (n, p) = (data.n, data.p);
    let design = DMatrix::from_fn(
        n,
        p + 1,
        |i, c| if c == 0 { 1.0 } else { data.x[i * p + c - 1] },
    );
    let y = nalgebra::DVector::from_vec(gaussian_values(data));
    let xtx = design.transpose() * &design;
    let beta = xtx.cholesky().unwrap().solve(&(design.transpose() * &y));
    let resid = &y - &design * &beta;
    (
        beta.iter().copied().collect(),
        (resid.norm_squared() / n as f64).sqrt(),
    )
}

pub fn gaussian_parts(r: &FitResult) -> (f64, Vec<f64>, f64) {
    match &r.estimates.responses[0] {
        ResponseParams::Gaussian {
            intercept,
            coefficients,
            scale,
        } => (*intercept, coefficients.clone(), *scale),
        ResponseParams::Ordinal { .. } => unreachable!(),
    }
}
pub fn duplicate(data: &Dataset) -> Dataset {
    let mut y = data.y.clone();
    y.extend_from_slice(&data.y);
    let mut x = data.x.clone();
    x.extend_from_slice(&data.x);
    Dataset::new(data.q, data.p, y, x).unwrap()
}

/// Largest `|b_ij / a_ij − ratio|` over entries that are not negligible.
pub fn worst_ratio_error(a: &DMatrix<f64>, b: &DMatrix<f64>, ratio: f64) -> f64 {
    let scale = a.amax();
    a.iter()
        .zip(b.iter())
        .filter(|(x, _)| x.abs() > 1e-3 * scale)
        .map(|(x, y)| (y / x - ratio).abs() / ratio)
        .fold(0.0, f64::max)
}
/// Maximizer of the pairwise log-likelihood over a grid of the single correlation, other parameters held fixed.
pub fn grid_rho(spec: &ModelSpec, data: &Dataset, mut params: ParameterSet) -> f64 {
    let mut value = |rho: f64| {
        params.correlations[0] = rho;
        pairwise_neglog(&params, data, spec).unwrap().value
    };
    let coarse = (-99..=99).map(|i| i as f64 / 100.0);
    let start = coarse
        .min_by(|a, b| value(*a).total_cmp(&value(*b)))
        .unwrap();
    let fine = (-1000..=1000).map(|i| (start + i as f64 * 1e-5).clamp(-0.9999, 0.9999));
    fine.min_by(|a, b| value(*a).total_cmp(&value(*b))).unwrap()
}

pub fn two_response_data(ordinal: bool, n: usize, seed: u64) -> (ModelSpec, Dataset) {
    let response = |name: &str| {
        if ordinal {
            ResponseSpec::ordinal(name, 2)
        } else {
            ResponseSpec::gaussian(name)
        }
    };
    let spec = ModelSpec::new(vec![response("a"), response("b")], vec!["x".into()], false).unwrap();
    let block = |b: f64| {
        if ordinal {
            ResponseParams::Ordinal {
                thresholds: vec![0.2],
                coefficients: vec![b],
            }
        } else {
            ResponseParams::Gaussian {
                intercept: 0.3,
                coefficients: vec![b],
                scale: 1.5,
            }
        }
    };
    let params = ParameterSet {
        responses: vec![block(0.8), block(-0.5)],
        correlations: vec![0.45],
    };
    let mut cfg = toy_config(seed);
    cfg.spec = spec.clone();
    cfg.params = params;
    cfg.n = n;
    (spec, simulate(&cfg).unwrap())
}
