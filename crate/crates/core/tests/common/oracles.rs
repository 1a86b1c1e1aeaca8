//! Independent numerical oracles for the kernel and the likelihood terms.

use std::f64::consts::PI;

use ordnorm::kernels::{bvn_cdf, BivariateArgs};
use ordnorm::likelihood::{
    case1_ord_ord, case2_gauss_gauss, case3_ord_gauss, uni_gaussian, ExtendedDesign, OrdinalBounds,
};

use super::cases::Ordinal;
use super::{bvn_cdf_quad, bvn_density, integrate, rectangle_quad, Rng, TAIL};

/// Largest `|Φ₂(0, 0; ρ) − (1/4 + asin ρ / 2π)|` over a grid of ρ in (−1, 1).
pub fn origin_error() -> f64 {
    (-999..=999)
        .map(|i| {
            let rho = i as f64 / 1000.0;
            (bvn_cdf(BivariateArgs::new(0.0, 0.0, rho)) - (0.25 + rho.asin() / (2.0 * PI))).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest `|Φ₂ − quadrature|` over `trials` random `(x, y, ρ)`.
pub fn quadrature_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let (x, y, rho) = (
                rng.range(-4.0, 4.0),
                rng.range(-4.0, 4.0),
                rng.range(-0.98, 0.98),
            );
            (bvn_cdf(BivariateArgs::new(x, y, rho)) - bvn_cdf_quad(x, y, rho)).abs()
        })
        .fold(0.0, f64::max)
}

fn rho(rng: &mut Rng) -> f64 {
    rng.range(-0.95, 0.95)
}

fn design_and_bounds(o: &Ordinal) -> (OrdinalBounds, ExtendedDesign) {
    (o.bounds(&o.psi), o.design())
}

/// Case 1 probability against nested quadrature; largest absolute error.
pub fn case1_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let (ek, el) = (rng.normal(), rng.normal());
            let (ok, ol) = (
                Ordinal::random(&mut rng, 2, ek),
                Ordinal::random(&mut rng, 2, el),
            );
            let r = rho(&mut rng);
            let (bk, dk) = design_and_bounds(&ok);
            let (bl, dl) = design_and_bounds(&ol);
            let p = (-case1_ord_ord(bk, bl, &dk, &dl, r).value).exp();
            (p - rectangle_quad(bk.lower, bk.upper, bl.lower, bl.upper, r)).abs()
        })
        .fold(0.0, f64::max)
}

/// Case 2 density against the directly evaluated bivariate density with scales; largest absolute error.
pub fn case2_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let xs = [1.0, rng.range(-1.5, 1.5)];
            let bk = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
            let bl = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
            let (sk, sl, r) = (rng.range(0.5, 2.0), rng.range(0.5, 2.0), rho(&mut rng));
            let (yk, yl) = (rng.normal() * 2.0, rng.normal() * 2.0);
            let uk = (yk - bk[0] - bk[1] * xs[1]) / sk;
            let ul = (yl - bl[0] - bl[1] * xs[1]) / sl;
            let density = bvn_density(uk, ul, r) / (sk * sl);
            ((-case2_gauss_gauss(yk, yl, &xs, &bk, &bl, sk, sl, r).value).exp() - density).abs()
        })
        .fold(0.0, f64::max)
}

/// Case 3 conditional probability against 1-D quadrature of φ₂ in the latent coordinate; largest absolute error.
pub fn case3_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let e = rng.normal();
            let o = Ordinal::random(&mut rng, 1, e);
            let (b, d) = design_and_bounds(&o);
            let xs = [1.0, o.x[0]];
            let bl = [rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)];
            let (sl, r) = (rng.range(0.5, 2.0), rho(&mut rng));
            let yl = bl[0] + bl[1] * xs[1] + sl * rng.normal();
            let u = (yl - bl[0] - bl[1] * xs[1]) / sl;
            let joint = integrate(
                |s| bvn_density(s, u, r),
                b.lower.max(-TAIL),
                b.upper.min(TAIL),
                1e-15,
            );
            let conditional = joint / super::normal_pdf(u);
            let term = case3_ord_gauss(b, &d, yl, &xs, &bl, sl, r).value;
            let gauss = uni_gaussian(yl, &xs, &bl, sl).value;
            ((gauss - term).exp() - conditional).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest deviation from 1 of the Case 1 rectangle sums over all category pairs.
pub fn case1_normalization_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let (ok, ol) = (
                Ordinal::random(&mut rng, 2, 0.0),
                Ordinal::random(&mut rng, 2, 0.0),
            );
            let r = rho(&mut rng);
            let mut total = 0.0;
            for rk in 1..=ok.k {
                for rl in 1..=ol.k {
                    let a = Ordinal {
                        r: rk,
                        ..ok.clone()
                    };
                    let b = Ordinal {
                        r: rl,
                        ..ol.clone()
                    };
                    let (ba, da) = design_and_bounds(&a);
                    let (bb, db) = design_and_bounds(&b);
                    total += (-case1_ord_ord(ba, bb, &da, &db, r).value).exp();
                }
            }
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest deviation from 1 of the Case 3 conditional probabilities summed over categories.
pub fn case3_normalization_error(trials: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..trials)
        .map(|_| {
            let o = Ordinal::random(&mut rng, 2, 0.0);
            let xs = [1.0, o.x[0], o.x[1]];
            let bl = [
                rng.range(-1.0, 1.0),
                rng.range(-1.0, 1.0),
                rng.range(-1.0, 1.0),
            ];
            let (sl, r) = (rng.range(0.5, 2.0), rho(&mut rng));
            let yl = rng.normal() * 2.0;
            let gauss = uni_gaussian(yl, &xs, &bl, sl).value;
            let total: f64 = (1..=o.k)
                .map(|rk| {
                    let a = Ordinal { r: rk, ..o.clone() };
                    let (b, d) = design_and_bounds(&a);
                    (gauss - case3_ord_gauss(b, &d, yl, &xs, &bl, sl, r).value).exp()
                })
                .sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
