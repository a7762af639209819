//! Small numerical building blocks shared across the crate: refined
//! trapezoid quadrature, golden-section minimization, and bisection.

/// Composite trapezoid rule on `[a, b]`, doubling the mesh until two
/// successive levels agree to `rel_tol`, then returning the Richardson
/// extrapolation of the last pair.
pub fn refine_trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut n = 8usize;
    let h0 = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..n {
        sum += f(a + i as f64 * h0);
    }
    let mut t_prev = sum * h0;
    for _ in 0..24 {
        // add midpoints of the current mesh
        let h = (b - a) / n as f64;
        let mut mid = 0.0;
        for i in 0..n {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        let t_next = 0.5 * t_prev + 0.5 * h * mid;
        n *= 2;
        let scale = t_next.abs().max(1e-300);
        if (t_next - t_prev).abs() <= rel_tol * scale {
            return (4.0 * t_next - t_prev) / 3.0;
        }
        t_prev = t_next;
    }
    t_prev
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`,
/// refined until the bracket width drops below `xtol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut x1 = b - INV_GOLDEN * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Bisection for a root of `f` on `[a, b]`; the endpoints must straddle a
/// sign change. Stops when the interval is narrower than `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    let fb = f(b);
    debug_assert!(
        fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0),
        "bisect requires a sign change on the bracket"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < xtol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Linear interpolation of tabulated `values` on the uniform grid
/// `origin + i*h`, with constant extension beyond both ends.
pub fn lerp_uniform(values: &[f64], origin: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let t = (x - origin) / h;
    if t <= 0.0 {
        return values[0];
    }
    if t >= (n - 1) as f64 {
        return values[n - 1];
    }
    let i = t.floor() as usize;
    let frac = t - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_refines_smooth_integrand() {
        let v = refine_trapezoid(|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), -4.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
}
