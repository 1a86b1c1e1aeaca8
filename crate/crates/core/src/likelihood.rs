//! Pairwise negative log-likelihood terms and their analytic gradients.
//!
//! Each term operation returns a [`PairTerm`] whose gradient is laid out
//! over the local parameter blocks it touches (documented per operation).
//! [`pairwise_neglog`] and [`per_unit_scores`] scatter those local
//! gradients into the full constrained layout of [`crate::model::Layout`].

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{Cell, Dataset};
use crate::error::Result;
use crate::kernels::{
    bvn_cdf, bvn_cdf_drho, bvn_cdf_dx, bvn_cdf_dy, clamp_rho, std_normal_cdf, std_normal_pdf,
    BivariateArgs,
};
use crate::model::{ModelSpec, ParameterSet, ResponseKind};

/// Probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;

/// Units per work item in the parallel reduction; fixed so the summation order never depends on thread count.
const CHUNK: usize = 32;

/// Latent interval of an ordinal observation, centered at the linear predictor.
///
/// `upper = θ_r − βᵀx` (or `+∞` for the top category) and
/// `lower = θ_{r−1} − βᵀx` (or `−∞` for the bottom one).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrdinalBounds {
    pub upper: f64,
    pub lower: f64,
}

impl OrdinalBounds {
    /// `category` is 1-based; `thresholds` has `K − 1` entries.
    pub fn new(thresholds: &[f64], linear_predictor: f64, category: usize) -> Self {
        let k = thresholds.len() + 1;
        debug_assert!((1..=k).contains(&category));
        let upper = if category == k {
            f64::INFINITY
        } else {
            thresholds[category - 1] - linear_predictor
        };
        let lower = if category == 1 {
            f64::NEG_INFINITY
        } else {
            thresholds[category - 2] - linear_predictor
        };
        Self { upper, lower }
    }
}

/// Dummy-extended covariate rows: `ψᵀ·x_upper = U`, `ψᵀ·x_lower = L` with `ψ = (θ, β)`.
///
/// The dummy part selects `θ_r` (upper) or `θ_{r−1}` (lower) and is all zeros
/// where the bound is infinite; the tail is `−x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedDesign {
    pub x_upper: Vec<f64>,
    pub x_lower: Vec<f64>,
}

impl ExtendedDesign {
    pub fn new(categories: usize, category: usize, x: &[f64]) -> Self {
        let m = categories - 1;
        let mut x_upper = vec![0.0; m + x.len()];
        let mut x_lower = vec![0.0; m + x.len()];
        if category < categories {
            x_upper[category - 1] = 1.0;
        }
        if category > 1 {
            x_lower[category - 2] = 1.0;
        }
        for (i, v) in x.iter().enumerate() {
            x_upper[m + i] = -v;
            x_lower[m + i] = -v;
        }
        Self { x_upper, x_lower }
    }

    pub fn len(&self) -> usize {
        self.x_upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_upper.is_empty()
    }
}

/// Moments of an ordinal latent error given an observed gaussian partner.
///
/// `mu_c` is relative to the ordinal linear predictor, i.e. `ρ (y − β*ᵀx*) / σ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMoments {
    pub mu_c: f64,
    pub sigma_c: f64,
    pub eta_upper: f64,
    pub eta_lower: f64,
}

impl ConditionalMoments {
    pub fn new(bounds: OrdinalBounds, standardized_residual: f64, rho: f64) -> Self {
        let sigma_c = (1.0 - rho * rho).sqrt();
        let mu_c = rho * standardized_residual;
        Self {
            mu_c,
            sigma_c,
            eta_upper: (bounds.upper - mu_c) / sigma_c,
            eta_lower: (bounds.lower - mu_c) / sigma_c,
        }
    }
}

/// A negative log-likelihood contribution and its local gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTerm {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// `Φ(upper) − Φ(lower)`, evaluated on the side of zero that avoids cancellation.
fn interval_prob(lower: f64, upper: f64) -> f64 {
    if lower > 0.0 {
        std_normal_cdf(-lower) - std_normal_cdf(-upper)
    } else {
        std_normal_cdf(upper) - std_normal_cdf(lower)
    }
}

/// `P(lx < X ≤ ux, ly < Y ≤ uy)`, reflecting each axis into the lower half-plane first.
fn rectangle_prob(lx: f64, ux: f64, ly: f64, uy: f64, rho: f64) -> f64 {
    let (mut lx, mut ux, mut ly, mut uy, mut rho) = (lx, ux, ly, uy, rho);
    if lx + ux > 0.0 {
        (lx, ux) = (-ux, -lx);
        rho = -rho;
    }
    if ly + uy > 0.0 {
        (ly, uy) = (-uy, -ly);
        rho = -rho;
    }
    let f = |x, y| bvn_cdf(BivariateArgs { x, y, rho });
    f(ux, uy) - f(lx, uy) - f(ux, ly) + f(lx, ly)
}

/// φ(η)·dη with the convention that the product vanishes at infinite η.
#[inline]
fn pdf_times(eta: f64, d: f64) -> f64 {
    if eta.is_finite() {
        std_normal_pdf(eta) * d
    } else {
        0.0
    }
}

/// Two ordinal responses.
///
/// Gradient layout: `[ψ_k (design_k.len()), ψ_l (design_l.len()), ρ]`.
pub fn case1_ord_ord(
    bounds_k: OrdinalBounds,
    bounds_l: OrdinalBounds,
    design_k: &ExtendedDesign,
    design_l: &ExtendedDesign,
    rho: f64,
) -> PairTerm {
    let rho = clamp_rho(rho);
    let (uk, lk, ul, ll) = (
        bounds_k.upper,
        bounds_k.lower,
        bounds_l.upper,
        bounds_l.lower,
    );
    let a = |x, y| BivariateArgs { x, y, rho };

    let p = rectangle_prob(lk, uk, ll, ul, rho).max(PROB_FLOOR);

    let d_uk = bvn_cdf_dx(a(uk, ul)) - bvn_cdf_dx(a(uk, ll));
    let d_lk = bvn_cdf_dx(a(lk, ll)) - bvn_cdf_dx(a(lk, ul));
    let d_ul = bvn_cdf_dy(a(uk, ul)) - bvn_cdf_dy(a(lk, ul));
    let d_ll = bvn_cdf_dy(a(lk, ll)) - bvn_cdf_dy(a(uk, ll));
    let d_rho = bvn_cdf_drho(a(uk, ul)) - bvn_cdf_drho(a(lk, ul)) - bvn_cdf_drho(a(uk, ll))
        + bvn_cdf_drho(a(lk, ll));

    let mut grad = Vec::with_capacity(design_k.len() + design_l.len() + 1);
    grad.extend(
        design_k
            .x_upper
            .iter()
            .zip(&design_k.x_lower)
            .map(|(xu, xl)| -(d_uk * xu + d_lk * xl) / p),
    );
    grad.extend(
        design_l
            .x_upper
            .iter()
            .zip(&design_l.x_lower)
            .map(|(xu, xl)| -(d_ul * xu + d_ll * xl) / p),
    );
    grad.push(-d_rho / p);
    PairTerm {
        value: -p.ln(),
        grad,
    }
}

/// Two gaussian responses; exact bivariate normal negative log density including the scale Jacobian.
///
/// Gradient layout: `[β*_k, β*_l, σ_k, σ_l, ρ]` with `β* = (β_0, β)`.
#[allow(clippy::too_many_arguments)]
pub fn case2_gauss_gauss(
    y_k: f64,
    y_l: f64,
    x_star: &[f64],
    beta_k_star: &[f64],
    beta_l_star: &[f64],
    sigma_k: f64,
    sigma_l: f64,
    rho: f64,
) -> PairTerm {
    let rho = clamp_rho(rho);
    let ek = y_k - dot(beta_k_star, x_star);
    let el = y_l - dot(beta_l_star, x_star);
    let (uk, ul) = (ek / sigma_k, el / sigma_l);
    let om = 1.0 - rho * rho;
    let quad = uk * uk - 2.0 * rho * uk * ul + ul * ul;
    let value = 2.0 * HALF_LN_TAU + sigma_k.ln() + sigma_l.ln() + 0.5 * om.ln() + quad / (2.0 * om);

    let ck = (ek / (sigma_k * sigma_k) - rho * el / (sigma_k * sigma_l)) / om;
    let cl = (el / (sigma_l * sigma_l) - rho * ek / (sigma_k * sigma_l)) / om;
    let mut grad = Vec::with_capacity(2 * x_star.len() + 3);
    grad.extend(x_star.iter().map(|x| -x * ck));
    grad.extend(x_star.iter().map(|x| -x * cl));
    grad.push(
        1.0 / sigma_k
            + (-ek * ek / sigma_k.powi(3) + rho * ek * el / (sigma_l * sigma_k * sigma_k)) / om,
    );
    grad.push(
        1.0 / sigma_l
            + (-el * el / sigma_l.powi(3) + rho * ek * el / (sigma_k * sigma_l * sigma_l)) / om,
    );
    grad.push(-rho / om + rho * quad / (om * om) - uk * ul / om);
    PairTerm { value, grad }
}

/// Ordinal response `k` with gaussian response `l`: conditional interval probability times the marginal density.
///
/// Gradient layout: `[ψ_k (design_k.len()), β*_l, σ_l, ρ]`.
pub fn case3_ord_gauss(
    bounds_k: OrdinalBounds,
    design_k: &ExtendedDesign,
    y_l: f64,
    x_star: &[f64],
    beta_l_star: &[f64],
    sigma_l: f64,
    rho: f64,
) -> PairTerm {
    let rho = clamp_rho(rho);
    let e = y_l - dot(beta_l_star, x_star);
    let u = e / sigma_l;
    let cm = ConditionalMoments::new(bounds_k, u, rho);
    let (eu, el, sc) = (cm.eta_upper, cm.eta_lower, cm.sigma_c);
    let p = interval_prob(el, eu).max(PROB_FLOOR);
    let value = -p.ln() + HALF_LN_TAU + sigma_l.ln() + 0.5 * u * u;

    let fu = pdf_times(eu, 1.0);
    let fl = pdf_times(el, 1.0);
    let om = 1.0 - rho * rho;

    let mut grad = Vec::with_capacity(design_k.len() + x_star.len() + 2);
    grad.extend(
        design_k
            .x_upper
            .iter()
            .zip(&design_k.x_lower)
            .map(|(xu, xl)| -(fu * xu - fl * xl) / (sc * p)),
    );
    let cb = -(fu - fl) * rho / (sigma_l * sc * p) - e / (sigma_l * sigma_l);
    grad.extend(x_star.iter().map(|x| cb * x));
    grad.push(
        -(fu - fl) * rho * e / (sc * sigma_l * sigma_l * p) + 1.0 / sigma_l
            - e * e / sigma_l.powi(3),
    );
    let d_eu = pdf_times(eu, -u / sc + rho * eu / om);
    let d_el = pdf_times(el, -u / sc + rho * el / om);
    grad.push(-(d_eu - d_el) / p);
    PairTerm { value, grad }
}

/// Single observed ordinal response. Gradient layout: `[ψ]`.
pub fn uni_ordinal(bounds: OrdinalBounds, design: &ExtendedDesign) -> PairTerm {
    let p = interval_prob(bounds.lower, bounds.upper).max(PROB_FLOOR);
    let fu = pdf_times(bounds.upper, 1.0);
    let fl = pdf_times(bounds.lower, 1.0);
    let grad = design
        .x_upper
        .iter()
        .zip(&design.x_lower)
        .map(|(xu, xl)| -(fu * xu - fl * xl) / p)
        .collect();
    PairTerm {
        value: -p.ln(),
        grad,
    }
}

/// Single observed gaussian response. Gradient layout: `[β*, σ]`.
pub fn uni_gaussian(y: f64, x_star: &[f64], beta_star: &[f64], sigma: f64) -> PairTerm {
    let e = y - dot(beta_star, x_star);
    let value = HALF_LN_TAU + sigma.ln() + e * e / (2.0 * sigma * sigma);
    let mut grad: Vec<f64> = x_star.iter().map(|x| -x * e / (sigma * sigma)).collect();
    grad.push(1.0 / sigma - e * e / sigma.powi(3));
    PairTerm { value, grad }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Total negative pairwise log-likelihood and its gradient over the constrained layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Units with no observed response; they contribute nothing.
    pub empty_units: usize,
}

enum Prepared {
    Ordinal {
        bounds: OrdinalBounds,
        design: ExtendedDesign,
        block: usize,
    },
    Gaussian {
        y: f64,
        block: usize,
        scale: usize,
        sigma: f64,
    },
}

/// Evaluates unit contributions from a flat constrained parameter vector.
pub(crate) struct UnitEvaluator<'a> {
    spec: &'a ModelSpec,
    data: &'a Dataset,
    theta: &'a [f64],
    layout: crate::model::Layout,
}

impl<'a> UnitEvaluator<'a> {
    pub(crate) fn new(spec: &'a ModelSpec, data: &'a Dataset, theta: &'a [f64]) -> Self {
        Self {
            spec,
            data,
            theta,
            layout: spec.layout(),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Adds unit `i`'s gradient into `grad`; returns its value and whether it had no observations.
    pub(crate) fn unit(&self, i: usize, grad: &mut [f64]) -> (f64, bool) {
        let x = self.data.row_x(i);
        let theta = self.theta;
        let mut x_star = Vec::with_capacity(x.len() + 1);
        x_star.push(1.0);
        x_star.extend_from_slice(x);

        let prepared: Vec<(usize, Prepared)> = self
            .data
            .row_y(i)
            .iter()
            .enumerate()
            .filter_map(|(j, cell)| {
                let b = self.layout.blocks[j];
                match (*cell, b.kind) {
                    (Cell::Ordinal(r), ResponseKind::Ordinal { categories }) => {
                        let m = categories - 1;
                        let th = &theta[b.offset..b.offset + m];
                        let lp = dot(&theta[b.offset + m..b.offset + m + b.p], x);
                        Some((
                            j,
                            Prepared::Ordinal {
                                bounds: OrdinalBounds::new(th, lp, r),
                                design: ExtendedDesign::new(categories, r, x),
                                block: b.offset,
                            },
                        ))
                    }
                    (Cell::Gaussian(y), ResponseKind::Gaussian) => {
                        let scale = b.scale_index().expect("gaussian block");
                        Some((
                            j,
                            Prepared::Gaussian {
                                y,
                                block: b.offset,
                                scale,
                                sigma: theta[scale],
                            },
                        ))
                    }
                    _ => None,
                }
            })
            .collect();

        let beta_star = |block: usize| &theta[block..block + 1 + x.len()];
        let scatter = |grad: &mut [f64], start: usize, g: &[f64]| {
            for (t, v) in grad[start..start + g.len()].iter_mut().zip(g) {
                *t += v;
            }
        };

        match prepared.len() {
            0 => (0.0, true),
            1 => {
                let term = match &prepared[0].1 {
                    Prepared::Ordinal {
                        bounds,
                        design,
                        block,
                    } => {
                        let t = uni_ordinal(*bounds, design);
                        scatter(grad, *block, &t.grad);
                        t
                    }
                    Prepared::Gaussian {
                        y, block, sigma, ..
                    } => {
                        let t = uni_gaussian(*y, &x_star, beta_star(*block), *sigma);
                        // β* block is immediately followed by σ.
                        scatter(grad, *block, &t.grad);
                        t
                    }
                };
                (term.value, false)
            }
            _ => {
                let mut value = 0.0;
                for a in 0..prepared.len() {
                    for b in a + 1..prepared.len() {
                        let (k, pk) = &prepared[a];
                        let (l, pl) = &prepared[b];
                        let rho_idx = self.layout.correlations + self.spec.pair_index(*k, *l);
                        let rho = theta[rho_idx];
                        match (pk, pl) {
                            (
                                Prepared::Ordinal {
                                    bounds: bk,
                                    design: dk,
                                    block: ok,
                                },
                                Prepared::Ordinal {
                                    bounds: bl,
                                    design: dl,
                                    block: ol,
                                },
                            ) => {
                                let t = case1_ord_ord(*bk, *bl, dk, dl, rho);
                                scatter(grad, *ok, &t.grad[..dk.len()]);
                                scatter(grad, *ol, &t.grad[dk.len()..dk.len() + dl.len()]);
                                grad[rho_idx] += t.grad[dk.len() + dl.len()];
                                value += t.value;
                            }
                            (
                                Prepared::Gaussian {
                                    y: yk,
                                    block: ok,
                                    scale: sk,
                                    sigma: sgk,
                                },
                                Prepared::Gaussian {
                                    y: yl,
                                    block: ol,
                                    scale: sl,
                                    sigma: sgl,
                                },
                            ) => {
                                let t = case2_gauss_gauss(
                                    *yk,
                                    *yl,
                                    &x_star,
                                    beta_star(*ok),
                                    beta_star(*ol),
                                    *sgk,
                                    *sgl,
                                    rho,
                                );
                                let m = x_star.len();
                                scatter(grad, *ok, &t.grad[..m]);
                                scatter(grad, *ol, &t.grad[m..2 * m]);
                                grad[*sk] += t.grad[2 * m];
                                grad[*sl] += t.grad[2 * m + 1];
                                grad[rho_idx] += t.grad[2 * m + 2];
                                value += t.value;
                            }
                            (
                                Prepared::Ordinal {
                                    bounds,
                                    design,
                                    block,
                                },
                                Prepared::Gaussian {
                                    y,
                                    block: og,
                                    scale,
                                    sigma,
                                },
                            )
                            | (
                                Prepared::Gaussian {
                                    y,
                                    block: og,
                                    scale,
                                    sigma,
                                },
                                Prepared::Ordinal {
                                    bounds,
                                    design,
                                    block,
                                },
                            ) => {
                                let t = case3_ord_gauss(
                                    *bounds,
                                    design,
                                    *y,
                                    &x_star,
                                    beta_star(*og),
                                    *sigma,
                                    rho,
                                );
                                let (d, m) = (design.len(), x_star.len());
                                scatter(grad, *block, &t.grad[..d]);
                                scatter(grad, *og, &t.grad[d..d + m]);
                                grad[*scale] += t.grad[d + m];
                                grad[rho_idx] += t.grad[d + m + 1];
                                value += t.value;
                            }
                        }
                    }
                }
                (value, false)
            }
        }
    }
}

/// Objective over a flat constrained vector, assuming `data` has already been checked against `spec`.
pub(crate) fn objective_flat(theta: &[f64], data: &Dataset, spec: &ModelSpec) -> Objective {
    let ev = UnitEvaluator::new(spec, data, theta);
    let d = ev.dim();
    let n_chunks = data.n.div_ceil(CHUNK);
    let parts: Vec<(f64, Vec<f64>, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut grad = vec![0.0; d];
            let mut value = 0.0;
            let mut empty = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(data.n) {
                let (v, e) = ev.unit(i, &mut grad);
                value += v;
                empty += usize::from(e);
            }
            (value, grad, empty)
        })
        .collect();
    let mut out = Objective {
        value: 0.0,
        grad: vec![0.0; d],
        empty_units: 0,
    };
    for (v, g, e) in parts {
        out.value += v;
        for (t, x) in out.grad.iter_mut().zip(&g) {
            *t += x;
        }
        out.empty_units += e;
    }
    out
}

/// Rows are per-unit gradients over the constrained layout.
pub(crate) fn scores_flat(theta: &[f64], data: &Dataset, spec: &ModelSpec) -> DMatrix<f64> {
    let ev = UnitEvaluator::new(spec, data, theta);
    let d = ev.dim();
    let rows: Vec<Vec<f64>> = (0..data.n)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; d];
            ev.unit(i, &mut g);
            g
        })
        .collect();
    DMatrix::from_fn(data.n, d, |i, j| rows[i][j])
}

/// Negative pairwise log-likelihood `−Σ_i Σ_{k<l} ℓ(y_ik, y_il)` over observed pairs, with
/// univariate terms for units that have a single observed response.
pub fn pairwise_neglog(
    params: &ParameterSet,
    data: &Dataset,
    spec: &ModelSpec,
) -> Result<Objective> {
    params.validate(spec)?;
    data.check_against(spec)?;
    Ok(objective_flat(&params.to_vec(spec), data, spec))
}

/// `n × d` matrix whose row `i` is the gradient of unit `i`'s contribution.
pub fn per_unit_scores(
    params: &ParameterSet,
    data: &Dataset,
    spec: &ModelSpec,
) -> Result<DMatrix<f64>> {
    params.validate(spec)?;
    data.check_against(spec)?;
    Ok(scores_flat(&params.to_vec(spec), data, spec))
}
