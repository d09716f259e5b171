//! Adaptive 1-d quadrature used by the window constructions and localization
//! integrals.

/// Adaptive Simpson on [a, b]. `tol` is an absolute tolerance for the whole
/// interval; recursion splits the budget in half per side.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrates over [a, b] splitting at the interior breakpoints (sorted,
/// deduplicated, clamped to the interval). Used for windows with kinks or
/// jumps so the adaptive rule never straddles them.
pub fn integrate_with_breakpoints(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = vec![a, b];
    for &p in breakpoints {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let pieces = cuts.len() - 1;
    cuts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces as f64))
        .sum()
}
