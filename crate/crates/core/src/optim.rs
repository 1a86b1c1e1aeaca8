//! Unconstrained minimizers: BFGS and Polak–Ribière⁺ conjugate gradient, both
//! driven by a strong-Wolfe line search (Nocedal & Wright, Alg. 3.5/3.6).

#[derive(Clone, Copy, Debug)]
pub struct OptimOptions {
    pub max_iterations: usize,
    /// Converged when `‖g‖₂ ≤ gradient_tolerance · max(1, |f|)`.
    pub gradient_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

struct Point {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct Evaluator<F> {
    func: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Evaluator<F> {
    fn at(&mut self, x0: &[f64], p: &[f64], alpha: f64) -> Point {
        self.count += 1;
        let x = axpy(x0, alpha, p);
        let (f, g) = (self.func)(&x);
        let slope = dot(&g, p);
        Point {
            alpha,
            x,
            f,
            g,
            slope,
        }
    }
}

fn acceptable(pt: &Point) -> bool {
    pt.f.is_finite() && pt.slope.is_finite()
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, or the midpoint if that fails.
fn cubic_step(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let mid = 0.5 * (a + b);
    if !acceptable(lo) || !acceptable(hi) {
        return mid;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (min, max) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (max - min);
    if t.is_finite() && t > min + margin && t < max - margin {
        t
    } else {
        mid
    }
}

const MAX_LINE_EVALS: usize = 40;

/// Relative size of the rounding error assumed in objective values.
const F_NOISE: f64 = 1e-11;

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    ev: &mut Evaluator<F>,
    start: &Point,
    p: &[f64],
    alpha0: f64,
    c1: f64,
    c2: f64,
) -> Option<Point> {
    let f0 = start.f;
    let d0 = start.slope;
    let armijo = |pt: &Point| pt.f <= f0 + c1 * pt.alpha * d0;
    let curvature = |pt: &Point| pt.slope.abs() <= -c2 * d0;
    // Approximate Wolfe (Hager & Zhang): near the optimum the decrease drops below
    // the rounding error of f, so accept on curvature alone within that noise band.
    let noise = F_NOISE * f0.abs().max(1.0);
    let wolfe = |pt: &Point| acceptable(pt) && curvature(pt) && (armijo(pt) || pt.f <= f0 + noise);

    let mut prev = Point {
        alpha: 0.0,
        x: start.x.clone(),
        f: f0,
        g: start.g.clone(),
        slope: d0,
    };
    let mut alpha = alpha0;
    let mut evals = 0;
    let (mut lo, mut hi) = loop {
        let pt = ev.at(&start.x, p, alpha);
        evals += 1;
        if wolfe(&pt) {
            return Some(pt);
        }
        if !acceptable(&pt) || !armijo(&pt) || (evals > 1 && pt.f >= prev.f) {
            break (prev, pt);
        }
        if curvature(&pt) {
            return Some(pt);
        }
        if pt.slope >= 0.0 {
            break (pt, prev);
        }
        if evals >= MAX_LINE_EVALS {
            return Some(pt);
        }
        alpha *= 2.0;
        prev = pt;
    };

    while evals < MAX_LINE_EVALS {
        let a = cubic_step(&lo, &hi);
        let pt = ev.at(&start.x, p, a);
        evals += 1;
        if wolfe(&pt) {
            return Some(pt);
        }
        if !acceptable(&pt) || !armijo(&pt) || pt.f >= lo.f {
            hi = pt;
        } else {
            if curvature(&pt) {
                return Some(pt);
            }
            if pt.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = pt;
        }
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
    }
    // Sufficient decrease without the curvature condition still makes progress.
    (lo.alpha > 0.0 && lo.f < f0).then_some(lo)
}

fn converged(f: f64, g: &[f64], tol: f64) -> bool {
    norm(g) <= tol * f.abs().max(1.0)
}

pub fn bfgs<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    func: F,
    x0: &[f64],
    opts: OptimOptions,
) -> OptimOutcome {
    let n = x0.len();
    let mut ev = Evaluator { func, count: 0 };
    let mut cur = ev.at(x0, &vec![0.0; n], 0.0);
    let mut hinv: Option<Vec<f64>> = None;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if !cur.f.is_finite() || converged(cur.f, &cur.g, opts.gradient_tolerance) {
            break;
        }
        iterations += 1;
        let mut p: Vec<f64> = match &hinv {
            Some(h) => (0..n)
                .map(|i| -dot(&h[i * n..(i + 1) * n], &cur.g))
                .collect(),
            None => cur.g.iter().map(|g| -g).collect(),
        };
        let mut slope = dot(&cur.g, &p);
        if !(slope < 0.0) {
            hinv = None;
            p = cur.g.iter().map(|g| -g).collect();
            slope = dot(&cur.g, &p);
        }
        cur.slope = slope;
        let alpha0 = if hinv.is_none() {
            (1.0 / norm(&cur.g)).min(1.0)
        } else {
            1.0
        };
        let next = match line_search(&mut ev, &cur, &p, alpha0, 1e-4, 0.9) {
            Some(pt) => pt,
            None if hinv.is_some() => {
                hinv = None;
                continue;
            }
            None => break,
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            let h = hinv.get_or_insert_with(|| {
                let scale = sy / dot(&y, &y);
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    m[i * n + i] = scale;
                }
                m
            });
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        cur = next;
    }

    OptimOutcome {
        converged: cur.f.is_finite() && converged(cur.f, &cur.g, opts.gradient_tolerance),
        x: cur.x,
        f: cur.f,
        grad: cur.g,
        iterations,
        evaluations: ev.count,
    }
}

pub fn conjugate_gradient<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    func: F,
    x0: &[f64],
    opts: OptimOptions,
) -> OptimOutcome {
    let n = x0.len();
    let mut ev = Evaluator { func, count: 0 };
    let mut cur = ev.at(x0, &vec![0.0; n], 0.0);
    let mut p: Vec<f64> = cur.g.iter().map(|g| -g).collect();
    let mut last_step: Option<(f64, f64)> = None;
    let mut since_restart = 0;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if !cur.f.is_finite() || converged(cur.f, &cur.g, opts.gradient_tolerance) {
            break;
        }
        iterations += 1;
        let mut slope = dot(&cur.g, &p);
        if !(slope < 0.0) || since_restart >= n {
            p = cur.g.iter().map(|g| -g).collect();
            slope = dot(&cur.g, &p);
            since_restart = 0;
        }
        cur.slope = slope;
        let alpha0 = match last_step {
            Some((alpha, prev_slope)) => (alpha * prev_slope / slope).min(1e3),
            None => (1.0 / norm(&cur.g)).min(1.0),
        };
        let next = match line_search(&mut ev, &cur, &p, alpha0, 1e-4, 0.1) {
            Some(pt) => pt,
            None if since_restart > 0 => {
                since_restart = n;
                continue;
            }
            None => break,
        };
        last_step = Some((next.alpha, slope));
        let gg = dot(&cur.g, &cur.g);
        let beta = (next
            .g
            .iter()
            .zip(&cur.g)
            .map(|(a, b)| a * (a - b))
            .sum::<f64>()
            / gg)
            .max(0.0);
        p = next.g.iter().zip(&p).map(|(g, d)| -g + beta * d).collect();
        since_restart += 1;
        cur = next;
    }

    OptimOutcome {
        converged: cur.f.is_finite() && converged(cur.f, &cur.g, opts.gradient_tolerance),
        x: cur.x,
        f: cur.f,
        grad: cur.g,
        iterations,
        evaluations: ev.count,
    }
}
