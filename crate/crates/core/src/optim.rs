//! Derivative-free optimization: Nelder-Mead simplex with deterministic
//! restarts, and golden-section line search.
//!
//! Likelihood surfaces here are non-smooth in the threshold and can have
//! infeasible regions (encoded as +inf), which the simplex tolerates.

use crate::rng::splitmix64;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Minimize `f` starting from `x0` with initial simplex offsets `steps`.
///
/// Standard Nelder-Mead moves (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Terminates when the spread of simplex values falls below
/// `rel_tol * (|f_best| + rel_tol)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    assert_eq!(x0.len(), steps.len());
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], n: &mut usize| -> f64 {
        *n += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += if steps[i] != 0.0 { steps[i] } else { 0.1 };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let mut converged = false;
    for _ in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let f_best = values[best];
        let f_worst = values[worst];
        if f_best.is_finite()
            && (f_worst - f_best).abs() <= opts.rel_tol * (f_best.abs() + opts.rel_tol)
        {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &idx in order.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += simplex[idx][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + (centroid[d] - simplex[worst][d]))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < values[order[0]] {
            let expand: Vec<f64> = (0..dim)
                .map(|d| centroid[d] + 2.0 * (reflect[d] - centroid[d]))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
            continue;
        }

        let contract: Vec<f64> = (0..dim)
            .map(|d| centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]))
            .collect();
        let f_contract = eval(&contract, &mut evals);
        if f_contract < values[worst] {
            simplex[worst] = contract;
            values[worst] = f_contract;
            continue;
        }

        // Shrink toward the best vertex.
        let best_point = simplex[best].clone();
        for idx in 0..=dim {
            if idx == best {
                continue;
            }
            for d in 0..dim {
                simplex[idx][d] = best_point[d] + 0.5 * (simplex[idx][d] - best_point[d]);
            }
            values[idx] = eval(&simplex[idx].clone(), &mut evals);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    SimplexResult {
        x: simplex[best].clone(),
        fx: values[best],
        converged,
        evals,
    }
}

/// Nelder-Mead with deterministic restarts.
///
/// Restart k re-seeds the simplex around the best point found so far, with
/// step offsets jittered by a SplitMix64 stream keyed on k, so repeated runs
/// are bit-identical. Returns the best result over all runs; `converged`
/// reports whether any run met the tolerance.
pub fn nelder_mead_restarts<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
    restarts: usize,
) -> SimplexResult {
    let mut best = nelder_mead(f, x0, steps, opts);
    let mut any_converged = best.converged;
    let mut total_evals = best.evals;
    for k in 1..=restarts {
        let mut state = splitmix64(k as u64);
        let jittered: Vec<f64> = steps
            .iter()
            .map(|&s| {
                state = splitmix64(state);
                // factor in [0.5, 1.5), sign flipped on odd bits
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                let sign = if state & 1 == 0 { 1.0 } else { -1.0 };
                sign * s.abs().max(1e-3) * (0.5 + u)
            })
            .collect();
        let run = nelder_mead(f, &best.x.clone(), &jittered, opts);
        any_converged |= run.converged;
        total_evals += run.evals;
        if run.fx < best.fx {
            best = run;
        }
    }
    best.converged = any_converged;
    best.evals = total_evals;
    best
}

/// Golden-section minimization on `[lo, hi]`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let res = nelder_mead(&mut f, &[0.0, 0.0], &[0.5, 0.5], &SimplexOptions::default());
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-4, "x0 {}", res.x[0]);
        assert!((res.x[1] + 1.0).abs() < 1e-4, "x1 {}", res.x[1]);
    }

    #[test]
    fn tolerates_infinite_regions() {
        let mut f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                (x[0].ln()).powi(2)
            }
        };
        let res = nelder_mead_restarts(&mut f, &[0.5], &[0.2], &SimplexOptions::default(), 2);
        assert!((res.x[0] - 1.0).abs() < 1e-3, "x {}", res.x[0]);
    }

    #[test]
    fn restarts_are_deterministic() {
        let run = || {
            let mut f =
                |x: &[f64]| x[0].sin() * (x[0] * 0.5).cos() + 0.01 * (x[0] - 2.0).powi(2);
            nelder_mead_restarts(&mut f, &[0.0], &[1.0], &SimplexOptions::default(), 3)
        };
        let a = run();
        let b = run();
        assert_eq!(a.x, b.x);
        assert_eq!(a.fx, b.fx);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let mut f = |x: f64| (x - 1.7).powi(2);
        let x = golden_section_min(&mut f, -5.0, 5.0, 1e-10, 200);
        assert!((x - 1.7).abs() < 1e-8);
    }
}
