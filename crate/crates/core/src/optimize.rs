//! Derivative-free minimization: Nelder–Mead with box projection and a
//! multi-start driver for suprema over boxes.

use crate::rng::Stream;
use rand::RngExt;

#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Relative tolerance on the spread of function values in the simplex.
    pub ftol: f64,
    /// Relative tolerance on the simplex diameter.
    pub xtol: f64,
    /// Number of times the simplex is rebuilt around the incumbent after
    /// convergence. Rebuilding guards against collapsed simplices.
    pub rebuilds: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_iter: 4000, ftol: 1e-12, xtol: 1e-10, rebuilds: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

fn eval<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl NelderMead {
    /// Minimizes `f` starting at `x0` with initial simplex edge lengths `step`.
    /// Points are projected into `bounds` before every evaluation.
    pub fn minimize<F>(&self, f: &F, x0: &[f64], step: &[f64], bounds: Option<&[(f64, f64)]>) -> Optimum
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let n = x0.len();
        if n == 0 {
            return Optimum { x: vec![], value: eval(f, x0), iterations: 0, converged: true };
        }
        let mut best = x0.to_vec();
        project(&mut best, bounds);
        let mut best_val = eval(f, &best);
        let mut total_iter = 0;
        let mut converged = false;
        for round in 0..=self.rebuilds {
            let scale = if round == 0 { 1.0 } else { 0.5f64.powi(round as i32) };
            let (x, v, it, conv) = self.run(f, &best, step, scale, bounds);
            total_iter += it;
            let improved = best_val - v > self.ftol * (best_val.abs() + self.ftol);
            if v <= best_val {
                best = x;
                best_val = v;
            }
            converged = conv;
            if !improved && round > 0 {
                break;
            }
            if total_iter >= self.max_iter {
                break;
            }
        }
        Optimum { x: best, value: best_val, iterations: total_iter, converged }
    }

    fn run<F>(&self, f: &F, x0: &[f64], step: &[f64], scale: f64, bounds: Option<&[(f64, f64)]>) -> (Vec<f64>, f64, usize, bool)
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let n = x0.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            let mut h = step[i] * scale;
            if h == 0.0 {
                h = 1e-3;
            }
            p[i] += h;
            project(&mut p, bounds);
            if p[i] == x0[i] {
                // at an upper bound: step inward instead
                p[i] = x0[i] - h;
                project(&mut p, bounds);
            }
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| eval(f, p)).collect();
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iter = 0;
        let mut converged = false;
        while iter < self.max_iter {
            iter += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let fbest = values[0];
            let fworst = values[n];
            let diam = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let xscale = simplex[0].iter().map(|v| v.abs()).fold(1.0, f64::max);
            let fspread_ok = fworst.is_finite() && (fworst - fbest).abs() <= self.ftol * (fbest.abs() + self.ftol);
            if fspread_ok && diam <= self.xtol * xscale {
                converged = true;
                break;
            }
            if diam == 0.0 {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for p in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect();
                project(&mut p, bounds);
                p
            };
            let xr = along(alpha);
            let fr = eval(f, &xr);
            if fr < values[0] {
                let xe = along(gamma);
                let fe = eval(f, &xe);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let xc = along(rho);
                    let fc = eval(f, &xc);
                    (xc, fc)
                } else {
                    let xc = along(-rho);
                    let fc = eval(f, &xc);
                    (xc, fc)
                };
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    let x0 = simplex[0].clone();
                    for i in 1..=n {
                        let mut p: Vec<f64> = x0.iter().zip(&simplex[i]).map(|(a, b)| a + sigma * (b - a)).collect();
                        project(&mut p, bounds);
                        values[i] = eval(f, &p);
                        simplex[i] = p;
                    }
                }
            }
        }
        let (imin, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        (simplex[imin].clone(), values[imin], iter, converged)
    }
}

/// Multi-start configuration for suprema over a box.
#[derive(Debug, Clone)]
pub struct MultiStart {
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for MultiStart {
    fn default() -> Self {
        Self { restarts: 16, tol: 1e-8, seed: 0x5eed }
    }
}

fn initial_step(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&xi, (&lo, &hi))| {
            let width = hi - lo;
            let local = (0.5 * xi.abs()).max(0.01 * width).max(1e-6);
            (0.1 * width).min(local)
        })
        .collect()
}

/// Maximizes `f` over the box `[lower, upper]`.
///
/// Starts are the caller-supplied `starts`, the box center and
/// `opts.restarts` uniform draws; `admissible` filters starting points (used
/// for predicate-restricted hypotheses). Nelder–Mead runs from the
/// `opts.restarts` best admissible starts. Returns `None` when no admissible
/// start was found.
pub fn maximize_in_box<F, P>(f: &F, lower: &[f64], upper: &[f64], starts: &[Vec<f64>], opts: &MultiStart, admissible: P) -> Option<Optimum>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
    P: Fn(&[f64]) -> bool,
{
    assert_eq!(lower.len(), upper.len());
    let dim = lower.len();
    let bounds: Vec<(f64, f64)> = lower.iter().copied().zip(upper.iter().copied()).collect();
    if dim == 0 {
        let v = f(&[]);
        return admissible(&[]).then_some(Optimum { x: vec![], value: v, iterations: 0, converged: true });
    }
    let mut candidates: Vec<Vec<f64>> = starts
        .iter()
        .map(|s| {
            let mut s = s.clone();
            project(&mut s, Some(&bounds));
            s
        })
        .collect();
    candidates.push(lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect());
    let mut rng = Stream::new(opts.seed).rng();
    // Draw extra points so that predicate-restricted sets still get starts.
    let draws = opts.restarts.max(1) * 8;
    for _ in 0..draws {
        candidates.push(lower.iter().zip(upper).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect());
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .filter(|c| admissible(c))
        .map(|c| {
            let v = f(&c);
            (if v.is_nan() { f64::NEG_INFINITY } else { v }, c)
        })
        .collect();
    if scored.is_empty() {
        return None;
    }
    // Caller starts always run; the rest are ranked by value.
    let n_fixed = starts.len().min(scored.len());
    scored[n_fixed..].sort_by(|a, b| b.0.total_cmp(&a.0));
    let runs = (n_fixed + opts.restarts.max(1)).min(scored.len());
    let nm = NelderMead { ftol: opts.tol * 1e-4, xtol: opts.tol, ..NelderMead::default() };
    let neg = |x: &[f64]| {
        if admissible(x) {
            -f(x)
        } else {
            f64::INFINITY
        }
    };
    let mut best: Option<Optimum> = None;
    for (v0, x0) in scored.iter().take(runs) {
        let step = initial_step(x0, lower, upper);
        let mut opt = nm.minimize(&neg, x0, &step, Some(&bounds));
        opt.value = -opt.value;
        if *v0 > opt.value {
            opt = Optimum { x: x0.clone(), value: *v0, iterations: opt.iterations, converged: opt.converged };
        }
        if best.as_ref().is_none_or(|b| opt.value > b.value) {
            best = Some(opt);
        }
    }
    best
}
