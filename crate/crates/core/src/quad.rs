//! Composite Simpson rules and uniform-grid cubic interpolation.

/// Composite Simpson over uniformly spaced samples.
///
/// An odd number of intervals is closed with Simpson's 3/8 rule on the last
/// three intervals; two samples fall back to the trapezoid.
pub fn simpson(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * dx * (values[0] + values[1]),
        3 => dx / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            if intervals.is_multiple_of(2) {
                simpson_even(values, dx)
            } else {
                let head = &values[..n - 3];
                let tail = &values[n - 4..];
                let three_eighths =
                    3.0 * dx / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3]);
                simpson_even(head, dx) + three_eighths
            }
        }
    }
}

fn simpson_even(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    dx / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Composite Simpson of `f` over `[a, b]` with at least `min_intervals`
/// subintervals (rounded up to even).
pub fn simpson_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, min_intervals: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = even_at_least(min_intervals.max(2));
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Composite Simpson of `f` over `[a, b]` with spacing no larger than `step`.
pub fn simpson_step<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, step: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / step).ceil() as usize;
    simpson_fn(f, a, b, n)
}

pub(crate) fn even_at_least(n: usize) -> usize {
    if n.is_multiple_of(2) {
        n
    } else {
        n + 1
    }
}

/// Running integrals from the right: `out[i] = ∫_{x_i}^{x_last} f`.
///
/// Nodes an even number of intervals from the right end are reached by
/// composite Simpson pairs, the others by a 3/8 step off an even node (or,
/// one interval from the end, the four-point Adams–Moulton weights).
pub fn cumulative_from_right(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let last = n - 1;
    if n < 4 {
        out[last - 1] = 0.5 * dx * (values[last - 1] + values[last]);
        if n == 3 {
            out[0] = dx / 3.0 * (values[0] + 4.0 * values[1] + values[2]);
        }
        return out;
    }
    let v = values;
    for i in (0..last).rev() {
        let offset = last - i;
        out[i] = if offset.is_multiple_of(2) {
            out[i + 2] + dx / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2])
        } else if offset >= 3 {
            out[i + 3] + 3.0 * dx / 8.0 * (v[i] + 3.0 * v[i + 1] + 3.0 * v[i + 2] + v[i + 3])
        } else {
            dx / 24.0 * (9.0 * v[last] + 19.0 * v[i] - 5.0 * v[i - 1] + v[i - 2])
        };
    }
    out
}

/// Four-point Lagrange interpolation on a uniform grid `x_i = x0 + i·dx`.
///
/// Returns `None` outside `[x0, x_last]`.
pub fn cubic_interp(values: &[f64], x0: f64, dx: f64, x: f64) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let s = (x - x0) / dx;
    let last = (n - 1) as f64;
    if !(s >= -1e-12 && s <= last + 1e-12) {
        return None;
    }
    if n < 4 {
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Some(values[0]);
        }
        let frac = s - i as f64;
        return Some(values[i] * (1.0 - frac) + values[i + 1] * frac);
    }
    let i = (s.floor().max(0.0) as usize).clamp(1, n - 3);
    let base = i - 1;
    let u = s - base as f64;
    let (y0, y1, y2, y3) = (values[base], values[base + 1], values[base + 2], values[base + 3]);
    // Lagrange basis on nodes 0, 1, 2, 3.
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    Some(l0 * y0 + l1 * y1 + l2 * y2 + l3 * y3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let dx = 0.1;
        for n in [3usize, 4, 5, 8, 11] {
            let v: Vec<f64> = (0..n).map(|i| {
                let x = i as f64 * dx;
                x * x * x - 2.0 * x + 1.0
            }).collect();
            let b = (n - 1) as f64 * dx;
            let exact = b.powi(4) / 4.0 - b * b + b;
            assert!((simpson(&v, dx) - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn simpson_fn_fourth_order() {
        let f = |x: f64| x.sin();
        let exact = 1.0 - 1f64.cos();
        let e1 = (simpson_fn(f, 0.0, 1.0, 8) - exact).abs();
        let e2 = (simpson_fn(f, 0.0, 1.0, 16) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let dx = 0.01;
        let n = 101;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * dx).exp()).collect();
        let c = cumulative_from_right(&v, dx);
        let end = 1f64.exp();
        for (i, ci) in c.iter().enumerate() {
            let exact = end - (i as f64 * dx).exp();
            assert!((ci - exact).abs() < 1e-9, "i = {i}: {ci} vs {exact}");
        }
    }

    #[test]
    fn cubic_interp_reproduces_cubics() {
        let dx = 0.5;
        let v: Vec<f64> = (0..7).map(|i| {
            let x = -1.0 + i as f64 * dx;
            2.0 * x * x * x - x * x + 0.5
        }).collect();
        for x in [-1.0, -0.8, 0.1, 1.3, 2.0] {
            let exact = 2.0 * x * x * x - x * x + 0.5;
            let got = cubic_interp(&v, -1.0, dx, x).unwrap();
            assert!((got - exact).abs() < 1e-12, "x = {x}");
        }
        assert!(cubic_interp(&v, -1.0, dx, 2.6).is_none());
    }
}
