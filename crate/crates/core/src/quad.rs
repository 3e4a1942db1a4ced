//! Adaptive quadrature used by density-normalization checks and the
//! expected-shortfall integral.

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute error target for the segment; the usual 15x
/// Richardson acceptance rule is applied at each split.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrate over a range split at interior breakpoints (density splice
/// points), so the integrand is smooth on every sub-interval.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    interior: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = Vec::with_capacity(interior.len() + 2);
    cuts.push(lo);
    for &c in interior {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let segs = cuts.len() - 1;
    let seg_tol = tol / segs as f64;
    cuts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], seg_tol))
        .sum()
}
