#![allow(dead_code)]

pub mod cases;
pub mod fits;
pub mod formulas;
pub mod oracles;
pub mod toy;

use ordnorm::data::{Cell, Dataset};
use ordnorm::model::{ModelSpec, ParameterSet, ResponseParams, ResponseSpec};
use ordnorm::simulate::NormalStream;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on `[a, b]`: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature by recursive bisection to absolute tolerance `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 || (b - a).abs() < 1e-12 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    if a >= b {
        return 0.0;
    }
    rec(&mut f, a, b, tol, 0)
}

/// Standard normal tails beyond this are below 1e-30.
pub const TAIL: f64 = 12.0;

fn clip(v: f64) -> f64 {
    v.clamp(-TAIL, TAIL)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn bvn_density(s: f64, t: f64, rho: f64) -> f64 {
    let om = 1.0 - rho * rho;
    (-(s * s - 2.0 * rho * s * t + t * t) / (2.0 * om)).exp()
        / (2.0 * std::f64::consts::PI * om.sqrt())
}

/// `P(a1 < X ≤ b1, a2 < Y ≤ b2)` by nested adaptive quadrature of the bivariate density.
pub fn rectangle_quad(a1: f64, b1: f64, a2: f64, b2: f64, rho: f64) -> f64 {
    let (a1, b1, a2, b2) = (clip(a1), clip(b1), clip(a2), clip(b2));
    integrate(
        |s| integrate(|t| bvn_density(s, t, rho), a2, b2, 1e-15),
        a1,
        b1,
        1e-13,
    )
}

pub fn bvn_cdf_quad(x: f64, y: f64, rho: f64) -> f64 {
    rectangle_quad(f64::NEG_INFINITY, x, f64::NEG_INFINITY, y, rho)
}

/// `P(a < Z ≤ b)` for `Z ~ N(mu, sd²)` by quadrature of the density.
pub fn interval_quad(a: f64, b: f64, mu: f64, sd: f64) -> f64 {
    let (a, b) = (clip((a - mu) / sd), clip((b - mu) / sd));
    integrate(normal_pdf, a, b, 1e-15)
}

/// Five-point central difference of `f` along coordinate `i`.
pub fn central_diff(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut at = |d: f64| {
        p[i] = x[i] + d;
        f(&p)
    };
    let (f1, f_1, f2, f_2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
    (8.0 * (f1 - f_1) - (f2 - f_2)) / (12.0 * h)
}

/// Plain two-point central difference.
pub fn central_diff2(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + h;
    let up = f(&p);
    p[i] = x[i] - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

pub fn fd_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| central_diff(&mut f, x, i, h))
        .collect()
}

/// Largest componentwise `|a − b| / max(|a|, |b|, floor)`.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Deterministic test randomness.
pub struct Rng(NormalStream);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(NormalStream::new(seed))
    }
    pub fn uniform(&mut self) -> f64 {
        self.0.uniform()
    }
    pub fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.0.uniform()
    }
    pub fn normal(&mut self) -> f64 {
        self.0.normal()
    }
    pub fn index(&mut self, n: usize) -> usize {
        ((self.0.uniform() * n as f64) as usize).min(n - 1)
    }
    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
    /// Strictly increasing thresholds with gaps of at least 0.2.
    pub fn thresholds(&mut self, m: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(m);
        let mut cur = self.range(-1.5, -0.5) - 0.5 * (m as f64 - 1.0);
        for _ in 0..m {
            t.push(cur);
            cur += self.range(0.2, 1.5);
        }
        t
    }
}

/// Random model with `q` responses (ordinal where `ordinal[j]`), `p` covariates and a valid parameter set.
pub fn random_model(rng: &mut Rng, ordinal: &[bool], p: usize) -> (ModelSpec, ParameterSet) {
    let responses = ordinal
        .iter()
        .enumerate()
        .map(|(j, &o)| {
            if o {
                ResponseSpec::ordinal(format!("y{j}"), 2 + rng.index(3))
            } else {
                ResponseSpec::gaussian(format!("z{j}"))
            }
        })
        .collect::<Vec<_>>();
    let spec = ModelSpec::new(responses, (0..p).map(|c| format!("x{c}")).collect(), false).unwrap();
    let params = ParameterSet {
        responses: spec
            .responses
            .iter()
            .map(|r| match r.categories() {
                Some(k) => ResponseParams::Ordinal {
                    thresholds: rng.thresholds(k - 1),
                    coefficients: (0..p).map(|_| rng.range(-1.0, 1.0)).collect(),
                },
                None => ResponseParams::Gaussian {
                    intercept: rng.range(-1.0, 1.0),
                    coefficients: (0..p).map(|_| rng.range(-1.0, 1.0)).collect(),
                    scale: rng.range(0.5, 2.0),
                },
            })
            .collect(),
        correlations: (0..spec.n_pairs()).map(|_| rng.range(-0.3, 0.3)).collect(),
    };
    (spec, params)
}

/// Random dataset for `spec` (cells drawn independently of the parameters), with missing cells at `missing`.
pub fn random_data(rng: &mut Rng, spec: &ModelSpec, n: usize, missing: f64) -> Dataset {
    let (q, p) = (spec.q(), spec.p());
    let mut y = Vec::with_capacity(n * q);
    for _ in 0..n {
        for r in &spec.responses {
            y.push(if rng.uniform() < missing {
                Cell::Missing
            } else {
                match r.categories() {
                    Some(k) => Cell::Ordinal(1 + rng.index(k)),
                    None => Cell::Gaussian(rng.normal() * 1.5),
                }
            });
        }
    }
    let x = rng.normals(n * p);
    Dataset::new(q, p, y, x).unwrap()
}
