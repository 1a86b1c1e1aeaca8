//! Randomized inputs for the five term operations, each exposed as a function of a flat parameter vector.

use ordnorm::likelihood::{
    case1_ord_ord, case2_gauss_gauss, case3_ord_gauss, uni_gaussian, uni_ordinal, ExtendedDesign,
    OrdinalBounds, PairTerm,
};

use ordnorm::simulate::slot;

use super::{central_diff2, max_rel_err, Rng};

/// Step of the two-point central differences used as the gradient oracle.
pub const FD_STEP: f64 = 1e-6;

pub const CASE_NAMES: [&str; 5] = [
    "univariate ordinal",
    "univariate gaussian",
    "case 1",
    "case 2",
    "case 3",
];

type Evaluator = Box<dyn Fn(&[f64]) -> PairTerm>;

/// A term operation frozen at its data, taking the flat local parameter vector.
pub struct Instance {
    pub params: Vec<f64>,
    eval: Evaluator,
}

impl Instance {
    pub fn term(&self, params: &[f64]) -> PairTerm {
        (self.eval)(params)
    }
    pub fn value(&self, params: &[f64]) -> f64 {
        (self.eval)(params).value
    }
}

/// Ordinal observation: `K`, category, covariates and `ψ = (θ, β)`.
#[derive(Clone)]
pub struct Ordinal {
    pub k: usize,
    pub r: usize,
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
}

impl Ordinal {
    /// Observation slotted from `βᵀx + error`, so its category has realistic probability.
    pub fn random(rng: &mut Rng, p: usize, error: f64) -> Self {
        let k = 2 + rng.index(4);
        let mut psi = rng.thresholds(k - 1);
        psi.extend((0..p).map(|_| rng.range(-1.0, 1.0)));
        let x: Vec<f64> = (0..p).map(|_| rng.range(-1.5, 1.5)).collect();
        let lp: f64 = psi[k - 1..].iter().zip(&x).map(|(b, x)| b * x).sum();
        let r = slot(lp + error, &psi[..k - 1]);
        Self { k, r, x, psi }
    }

    pub fn bounds(&self, psi: &[f64]) -> OrdinalBounds {
        let m = self.k - 1;
        let lp: f64 = psi[m..].iter().zip(&self.x).map(|(b, x)| b * x).sum();
        OrdinalBounds::new(&psi[..m], lp, self.r)
    }

    pub fn design(&self) -> ExtendedDesign {
        ExtendedDesign::new(self.k, self.r, &self.x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn x_star(x: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(x.iter().copied()).collect()
}

fn rho(rng: &mut Rng) -> f64 {
    rng.range(-0.95, 0.95)
}

/// Standard normal pair with correlation `rho`.
fn correlated(rng: &mut Rng, rho: f64) -> (f64, f64) {
    let (a, b) = (rng.normal(), rng.normal());
    (a, rho * a + (1.0 - rho * rho).sqrt() * b)
}

/// Random instance of case `c` (index into [`CASE_NAMES`]) with `p` covariates.
pub fn random_instance(rng: &mut Rng, c: usize, p: usize) -> Instance {
    match c {
        0 => {
            let e = rng.normal();
            let o = Ordinal::random(rng, p, e);
            let params = o.psi.clone();
            Instance {
                params,
                eval: Box::new(move |v| uni_ordinal(o.bounds(v), &o.design())),
            }
        }
        1 => {
            let xs = x_star(&(0..p).map(|_| rng.range(-1.5, 1.5)).collect::<Vec<_>>());
            let mut params: Vec<f64> = (0..=p).map(|_| rng.range(-1.0, 1.0)).collect();
            params.push(rng.range(0.5, 2.0));
            let y = dot(&params[..=p], &xs) + params[p + 1] * rng.normal();
            let m = p + 1;
            Instance {
                params,
                eval: Box::new(move |v| uni_gaussian(y, &xs, &v[..m], v[m])),
            }
        }
        2 => {
            let rho = rho(rng);
            let (ek, el) = correlated(rng, rho);
            let (ok, ol) = (Ordinal::random(rng, p, ek), Ordinal::random(rng, p, el));
            let mut params = ok.psi.clone();
            params.extend(&ol.psi);
            params.push(rho);
            let (nk, nl) = (ok.psi.len(), ol.psi.len());
            Instance {
                params,
                eval: Box::new(move |v| {
                    case1_ord_ord(
                        ok.bounds(&v[..nk]),
                        ol.bounds(&v[nk..nk + nl]),
                        &ok.design(),
                        &ol.design(),
                        v[nk + nl],
                    )
                }),
            }
        }
        3 => {
            let xs = x_star(&(0..p).map(|_| rng.range(-1.5, 1.5)).collect::<Vec<_>>());
            let m = p + 1;
            let mut params: Vec<f64> = (0..2 * m).map(|_| rng.range(-1.0, 1.0)).collect();
            params.extend([rng.range(0.5, 2.0), rng.range(0.5, 2.0), rho(rng)]);
            let (ek, el) = correlated(rng, params[2 * m + 2]);
            let yk = dot(&params[..m], &xs) + params[2 * m] * ek;
            let yl = dot(&params[m..2 * m], &xs) + params[2 * m + 1] * el;
            Instance {
                params,
                eval: Box::new(move |v| {
                    case2_gauss_gauss(
                        yk,
                        yl,
                        &xs,
                        &v[..m],
                        &v[m..2 * m],
                        v[2 * m],
                        v[2 * m + 1],
                        v[2 * m + 2],
                    )
                }),
            }
        }
        _ => {
            let rho = rho(rng);
            let (ek, el) = correlated(rng, rho);
            let o = Ordinal::random(rng, p, ek);
            let xs = x_star(&o.x);
            let m = p + 1;
            let mut params = o.psi.clone();
            let nk = params.len();
            params.extend((0..m).map(|_| rng.range(-1.0, 1.0)));
            params.extend([rng.range(0.5, 2.0), rho]);
            let yl = dot(&params[nk..nk + m], &xs) + params[nk + m] * el;
            Instance {
                params,
                eval: Box::new(move |v| {
                    case3_ord_gauss(
                        o.bounds(&v[..nk]),
                        &o.design(),
                        yl,
                        &xs,
                        &v[nk..nk + m],
                        v[nk + m],
                        v[nk + m + 1],
                    )
                }),
            }
        }
    }
}

/// Largest analytic-vs-central-FD error over `trials` random instances of case `c`,
/// relative to `max(|analytic|, |fd|, 1)`.
pub fn worst_gradient_error(c: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = 1 + rng.index(3);
        let inst = random_instance(&mut rng, c, p);
        let analytic = inst.term(&inst.params).grad;
        assert_eq!(analytic.len(), inst.params.len());
        let mut f = |v: &[f64]| inst.value(v);
        let fd: Vec<f64> = (0..analytic.len())
            .map(|i| central_diff2(&mut f, &inst.params, i, FD_STEP))
            .collect();
        worst = worst.max(max_rel_err(&analytic, &fd, 1.0));
    }
    worst
}
