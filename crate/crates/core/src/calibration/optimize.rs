//! Deterministic bounded Nelder–Mead simplex search.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when every vertex lies within this of the best one.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { initial_step: 0.1, max_evaluations: 2000, f_tol: 1e-20, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Restarts from the best vertex while they keep improving the result.
const MAX_RESTARTS: usize = 8;

/// Minimizes `f` over the box `[lower, upper]`, starting from `x0`. Trial
/// points are clamped into the box; the search restarts from the best point
/// because clamping can flatten the simplex against a face.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    let mut best = simplex_run(&f, x0, lower, upper, opts);
    for _ in 0..MAX_RESTARTS {
        if best.evaluations >= opts.max_evaluations {
            break;
        }
        let budget = SimplexOptions { max_evaluations: opts.max_evaluations - best.evaluations, ..opts };
        let next = simplex_run(&f, &best.x, lower, upper, budget);
        let improved = next.value < best.value - opts.f_tol;
        let evaluations = best.evaluations + next.evaluations;
        if next.value < best.value {
            best = SimplexResult { evaluations, ..next };
        } else {
            best.evaluations = evaluations;
        }
        if !improved {
            break;
        }
    }
    best
}

fn simplex_run(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n);
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    clamp(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        let h = opts.initial_step * (upper[i] - lower[i]);
        // Step toward whichever side of the box has room.
        v[i] = if v[i] + h <= upper[i] { v[i] + h } else { v[i] - h };
        clamp(&mut v);
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol || size <= opts.x_tol || evals.get() >= opts.max_evaluations {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|i| simplex[..n].iter().map(|(v, _)| v[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i])).collect();
            clamp(&mut p);
            p
        };
        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-rho);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(rho);
                let v = eval(&x);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = (0..n).map(|i| best[i] + sigma * (vertex.0[i] - best[i])).collect();
                    clamp(&mut p);
                    let fp = eval(&p);
                    *vertex = (p, fp);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult { x, value, evaluations: evals.get() }
}
