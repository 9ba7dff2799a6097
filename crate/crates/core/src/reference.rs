//! Reference evaluators used to cross-check the production paths: adaptive
//! 1-D quadrature and brute-force line integration. These are deliberately
//! independent of the grid/FFT/chord machinery they validate, and are used
//! by the test suites and the `validate` subcommand only.

use crate::real::Real;

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<R: Real, F: Fn(R) -> R>(f: &F, a: R, b: R, tol: R) -> R {
    fn simpson<R: Real>(a: R, b: R, fa: R, fm: R, fb: R) -> R {
        (b - a) / R::of(6.0) * (fa + R::of(4.0) * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<R: Real, F: Fn(R) -> R>(
        f: &F,
        a: R,
        b: R,
        fa: R,
        fm: R,
        fb: R,
        whole: R,
        tol: R,
        depth: usize,
    ) -> R {
        let m = R::half() * (a + b);
        let flm = f(R::half() * (a + m));
        let frm = f(R::half() * (m + b));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= R::of(15.0) * tol {
            left + right + err / R::of(15.0)
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol * R::half(), depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol * R::half(), depth - 1)
        }
    }
    let fa = f(a);
    let fm = f(R::half() * (a + b));
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Composite-Simpson line integral of `f` along the segment from `a` to `b`
/// in 1-D parameter space, with `n` panels (`n` even).
pub fn composite_simpson<R: Real, F: Fn(R) -> R>(f: &F, a: R, b: R, n: usize) -> R {
    assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / R::of_usize(n);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * R::of_usize(i);
        let w = if i % 2 == 1 { R::of(4.0) } else { R::two() };
        acc = acc + w * f(x);
    }
    acc * h / R::of(3.0)
}
