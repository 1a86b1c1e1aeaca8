//! Model specification, parameter sets and the unconstrained encoding.
//!
//! Parameters live in a flat "constrained" vector whose layout is fixed by
//! the [`ModelSpec`]: one contiguous block per response, followed by the
//! pairwise correlations in `(0,1), (0,2), …, (q-2,q-1)` order.
//!
//! * ordinal block: `θ_1 … θ_{K-1}, β_1 … β_p`
//! * gaussian block: `β_0, β_1 … β_p, σ`
//!
//! The unconstrained vector uses the same positions with thresholds as
//! `(θ_1, log(θ_2-θ_1), …)`, `log σ`, and `atanh ρ`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseKind {
    Ordinal { categories: usize },
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ResponseKind,
    /// Observed labels in category order; ordinal responses only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub category_labels: Vec<String>,
}

impl ResponseSpec {
    pub fn ordinal(name: impl Into<String>, categories: usize) -> Self {
        Self {
            name: name.into(),
            kind: ResponseKind::Ordinal { categories },
            category_labels: (1..=categories).map(|c| c.to_string()).collect(),
        }
    }

    pub fn gaussian(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ResponseKind::Gaussian,
            category_labels: Vec::new(),
        }
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self.kind, ResponseKind::Ordinal { .. })
    }

    /// Number of categories, or `None` for gaussian responses.
    pub fn categories(&self) -> Option<usize> {
        match self.kind {
            ResponseKind::Ordinal { categories } => Some(categories),
            ResponseKind::Gaussian => None,
        }
    }

    pub fn label(&self, category: usize) -> String {
        self.category_labels
            .get(category - 1)
            .cloned()
            .unwrap_or_else(|| category.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub responses: Vec<ResponseSpec>,
    pub covariates: Vec<String>,
    #[serde(default)]
    pub standardize: bool,
}

impl ModelSpec {
    pub fn new(
        responses: Vec<ResponseSpec>,
        covariates: Vec<String>,
        standardize: bool,
    ) -> Result<Self> {
        let spec = Self {
            responses,
            covariates,
            standardize,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.responses.is_empty() {
            return Err(Error::InvalidSpec(
                "at least one response is required".into(),
            ));
        }
        let mut names = HashSet::new();
        for r in &self.responses {
            if let ResponseKind::Ordinal { categories } = r.kind {
                if categories < 2 {
                    return Err(Error::InvalidSpec(format!(
                        "ordinal response `{}` needs at least 2 categories, has {categories}",
                        r.name
                    )));
                }
                if !r.category_labels.is_empty() && r.category_labels.len() != categories {
                    return Err(Error::InvalidSpec(format!(
                        "response `{}` has {} labels for {categories} categories",
                        r.name,
                        r.category_labels.len()
                    )));
                }
            }
            if !names.insert(r.name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate response name `{}`",
                    r.name
                )));
            }
        }
        for c in &self.covariates {
            if !names.insert(c.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "covariate `{c}` duplicates another response or covariate name"
                )));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.len()
    }

    pub fn n_pairs(&self) -> usize {
        let q = self.q();
        q * (q - 1) / 2
    }

    /// Index of the unordered pair `(k, l)` among the correlations, `k != l`.
    pub fn pair_index(&self, k: usize, l: usize) -> usize {
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        let q = self.q();
        k * (2 * q - k - 1) / 2 + (l - k - 1)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let q = self.q();
        (0..q).flat_map(move |k| (k + 1..q).map(move |l| (k, l)))
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }
}

/// Σ_ordinal (K_j − 1 + p) + Σ_gaussian (2 + p) + q(q−1)/2.
pub fn count_parameters(spec: &ModelSpec) -> usize {
    let p = spec.p();
    let per_response: usize = spec
        .responses
        .iter()
        .map(|r| match r.kind {
            ResponseKind::Ordinal { categories } => categories - 1 + p,
            ResponseKind::Gaussian => 2 + p,
        })
        .sum();
    per_response + spec.n_pairs()
}

/// Positions of each response block and of the correlations in the flat vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub blocks: Vec<BlockLayout>,
    pub correlations: usize,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub offset: usize,
    pub kind: ResponseKind,
    pub p: usize,
}

impl BlockLayout {
    pub fn len(&self) -> usize {
        match self.kind {
            ResponseKind::Ordinal { categories } => categories - 1 + self.p,
            ResponseKind::Gaussian => 2 + self.p,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `ψ = (θ, β)` for ordinal blocks, `β* = (β_0, β)` for gaussian blocks.
    pub fn linear_range(&self) -> std::ops::Range<usize> {
        match self.kind {
            ResponseKind::Ordinal { .. } => self.offset..self.offset + self.len(),
            ResponseKind::Gaussian => self.offset..self.offset + 1 + self.p,
        }
    }

    /// Index of σ in a gaussian block.
    pub fn scale_index(&self) -> Option<usize> {
        match self.kind {
            ResponseKind::Gaussian => Some(self.offset + 1 + self.p),
            ResponseKind::Ordinal { .. } => None,
        }
    }
}

impl Layout {
    fn new(spec: &ModelSpec) -> Self {
        let p = spec.p();
        let mut offset = 0;
        let blocks = spec
            .responses
            .iter()
            .map(|r| {
                let b = BlockLayout {
                    offset,
                    kind: r.kind,
                    p,
                };
                offset += b.len();
                b
            })
            .collect();
        let dim = offset + spec.n_pairs();
        Self {
            blocks,
            correlations: offset,
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseParams {
    Ordinal {
        thresholds: Vec<f64>,
        coefficients: Vec<f64>,
    },
    Gaussian {
        intercept: f64,
        coefficients: Vec<f64>,
        scale: f64,
    },
}

impl ResponseParams {
    pub fn coefficients(&self) -> &[f64] {
        match self {
            ResponseParams::Ordinal { coefficients, .. }
            | ResponseParams::Gaussian { coefficients, .. } => coefficients,
        }
    }
}

/// Model parameters on their natural scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub responses: Vec<ResponseParams>,
    /// ρ_kl for `k < l`, in [`ModelSpec::pairs`] order.
    pub correlations: Vec<f64>,
}

impl ParameterSet {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.responses.len() != spec.q() {
            return Err(Error::DimensionMismatch {
                expected: spec.q(),
                found: self.responses.len(),
            });
        }
        if self.correlations.len() != spec.n_pairs() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_pairs(),
                found: self.correlations.len(),
            });
        }
        for (r, (rs, rp)) in spec.responses.iter().zip(&self.responses).enumerate() {
            if rp.coefficients().len() != spec.p() {
                return Err(Error::InvalidParameters(format!(
                    "response `{}` has {} coefficients, expected {}",
                    rs.name,
                    rp.coefficients().len(),
                    spec.p()
                )));
            }
            if rp.coefficients().iter().any(|b| !b.is_finite()) {
                return Err(Error::InvalidParameters(format!(
                    "non-finite coefficient for `{}`",
                    rs.name
                )));
            }
            match (rs.kind, rp) {
                (
                    ResponseKind::Ordinal { categories },
                    ResponseParams::Ordinal { thresholds, .. },
                ) => {
                    if thresholds.len() != categories - 1 {
                        return Err(Error::InvalidParameters(format!(
                            "response `{}` has {} thresholds, expected {}",
                            rs.name,
                            thresholds.len(),
                            categories - 1
                        )));
                    }
                    if thresholds.iter().any(|t| !t.is_finite())
                        || thresholds.windows(2).any(|w| w[0] >= w[1])
                    {
                        return Err(Error::InvalidParameters(format!(
                            "thresholds of `{}` must be finite and strictly increasing",
                            rs.name
                        )));
                    }
                }
                (
                    ResponseKind::Gaussian,
                    ResponseParams::Gaussian {
                        intercept, scale, ..
                    },
                ) => {
                    if !intercept.is_finite() {
                        return Err(Error::InvalidParameters(format!(
                            "non-finite intercept for `{}`",
                            rs.name
                        )));
                    }
                    if !(scale.is_finite() && *scale > 0.0) {
                        return Err(Error::InvalidParameters(format!(
                            "scale of `{}` must be positive, got {scale}",
                            rs.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidParameters(format!(
                        "parameter block {r} does not match the type of response `{}`",
                        rs.name
                    )))
                }
            }
        }
        if let Some(rho) = self.correlations.iter().find(|r| !(r.abs() < 1.0)) {
            return Err(Error::InvalidParameters(format!(
                "correlation {rho} outside (-1, 1)"
            )));
        }
        Ok(())
    }

    pub fn correlation(&self, spec: &ModelSpec, k: usize, l: usize) -> f64 {
        if k == l {
            1.0
        } else {
            self.correlations[spec.pair_index(k, l)]
        }
    }

    /// Assembled `q × q` correlation matrix, row-major.
    pub fn correlation_matrix(&self, spec: &ModelSpec) -> Vec<f64> {
        let q = spec.q();
        let mut m = vec![0.0; q * q];
        for k in 0..q {
            for l in 0..q {
                m[k * q + l] = self.correlation(spec, k, l);
            }
        }
        m
    }

    /// Flat constrained vector in [`Layout`] order.
    pub fn to_vec(&self, spec: &ModelSpec) -> Vec<f64> {
        let mut v = Vec::with_capacity(count_parameters(spec));
        for rp in &self.responses {
            match rp {
                ResponseParams::Ordinal {
                    thresholds,
                    coefficients,
                } => {
                    v.extend_from_slice(thresholds);
                    v.extend_from_slice(coefficients);
                }
                ResponseParams::Gaussian {
                    intercept,
                    coefficients,
                    scale,
                } => {
                    v.push(*intercept);
                    v.extend_from_slice(coefficients);
                    v.push(*scale);
                }
            }
        }
        v.extend_from_slice(&self.correlations);
        v
    }

    /// Inverse of [`ParameterSet::to_vec`]; does not check invariants.
    pub fn from_vec(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        let layout = spec.layout();
        if v.len() != layout.dim {
            return Err(Error::DimensionMismatch {
                expected: layout.dim,
                found: v.len(),
            });
        }
        let p = spec.p();
        let responses = layout
            .blocks
            .iter()
            .map(|b| {
                let s = &v[b.offset..b.offset + b.len()];
                match b.kind {
                    ResponseKind::Ordinal { categories } => ResponseParams::Ordinal {
                        thresholds: s[..categories - 1].to_vec(),
                        coefficients: s[categories - 1..].to_vec(),
                    },
                    ResponseKind::Gaussian => ResponseParams::Gaussian {
                        intercept: s[0],
                        coefficients: s[1..1 + p].to_vec(),
                        scale: s[1 + p],
                    },
                }
            })
            .collect();
        Ok(Self {
            responses,
            correlations: v[layout.correlations..].to_vec(),
        })
    }

    pub fn encode(&self, spec: &ModelSpec) -> Result<UnconstrainedVector> {
        self.validate(spec)?;
        let layout = spec.layout();
        let mut values = self.to_vec(spec);
        for b in &layout.blocks {
            match b.kind {
                ResponseKind::Ordinal { categories } => {
                    let t = &mut values[b.offset..b.offset + categories - 1];
                    for r in (1..t.len()).rev() {
                        t[r] = (t[r] - t[r - 1]).ln();
                    }
                }
                ResponseKind::Gaussian => {
                    let i = b.scale_index().expect("gaussian block");
                    values[i] = values[i].ln();
                }
            }
        }
        for z in &mut values[layout.correlations..] {
            *z = z.atanh();
        }
        Ok(UnconstrainedVector { values, layout })
    }

    pub fn decode(v: &UnconstrainedVector, spec: &ModelSpec) -> Result<Self> {
        Self::decode_slice(&v.values, spec)
    }

    /// Decodes a raw unconstrained slice laid out for `spec`.
    pub fn decode_slice(values: &[f64], spec: &ModelSpec) -> Result<Self> {
        let layout = spec.layout();
        if values.len() != layout.dim {
            return Err(Error::DimensionMismatch {
                expected: layout.dim,
                found: values.len(),
            });
        }
        let mut c = values.to_vec();
        for b in &layout.blocks {
            match b.kind {
                ResponseKind::Ordinal { categories } => {
                    let t = &mut c[b.offset..b.offset + categories - 1];
                    for r in 1..t.len() {
                        let next = t[r - 1] + bounded_exp(t[r]);
                        t[r] = if next > t[r - 1] {
                            next
                        } else {
                            t[r - 1].next_up()
                        };
                    }
                }
                ResponseKind::Gaussian => {
                    let i = b.scale_index().expect("gaussian block");
                    c[i] = bounded_exp(c[i]);
                }
            }
        }
        for z in &mut c[layout.correlations..] {
            *z = z.tanh().clamp(-MAX_ABS_RHO, MAX_ABS_RHO);
        }
        Self::from_vec(spec, &c)
    }
}

/// Decoded correlations stay strictly inside (−1, 1) even where `tanh` rounds to ±1.
const MAX_ABS_RHO: f64 = 1.0 - f64::EPSILON;

/// Log-scale inputs are clamped here so `exp` is finite and nonzero.
const MAX_LOG: f64 = 700.0;

fn bounded_exp(v: f64) -> f64 {
    v.clamp(-MAX_LOG, MAX_LOG).exp()
}

/// Parameters mapped onto ℝ^d for a general-purpose optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

/// Pulls a gradient over the constrained layout back to the unconstrained one.
///
/// With `θ_r = a_1 + Σ_{s≤r, s≥2} exp(a_s)`, `∂/∂a_1 = Σ_r g_r` and
/// `∂/∂a_s = (θ_s − θ_{s−1}) Σ_{r≥s} g_r`; `∂/∂log σ = σ g`; `∂/∂z = (1−ρ²) g`.
pub fn chain_rule_gradient(
    grad_constrained: &[f64],
    params: &ParameterSet,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let layout = spec.layout();
    if grad_constrained.len() != layout.dim {
        return Err(Error::DimensionMismatch {
            expected: layout.dim,
            found: grad_constrained.len(),
        });
    }
    let c = params.to_vec(spec);
    if c.len() != layout.dim {
        return Err(Error::DimensionMismatch {
            expected: layout.dim,
            found: c.len(),
        });
    }
    let mut g = grad_constrained.to_vec();
    for b in &layout.blocks {
        match b.kind {
            ResponseKind::Ordinal { categories } => {
                let range = b.offset..b.offset + categories - 1;
                let theta = &c[range.clone()];
                let gt = &mut g[range];
                let mut tail = 0.0;
                for r in (0..gt.len()).rev() {
                    tail += gt[r];
                    gt[r] = if r == 0 {
                        tail
                    } else {
                        (theta[r] - theta[r - 1]) * tail
                    };
                }
            }
            ResponseKind::Gaussian => {
                let i = b.scale_index().expect("gaussian block");
                g[i] *= c[i];
            }
        }
    }
    for i in layout.correlations..layout.dim {
        g[i] *= 1.0 - c[i] * c[i];
    }
    Ok(g)
}
