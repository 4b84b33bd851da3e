//! The free wave: profile `h` and `u0(t, r) = [h(t−r) − h(t+r)]/r`.

use crate::error::{Error, Result};
use crate::model::RadialProfile;
use crate::quad;

/// `h` and `h′` on the uniform grid `x_i = (i − n)·dx`, `i = 0..=2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HProfile {
    pub support_radius: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// `max(max|f|, max|g|)` of the data `h` was built from.
    pub data_scale: f64,
}

/// Build `h(x) = −(x/2)·f(x) + (1/2)·∫_x^∞ y·g(y) dy` from evenly extended data.
///
/// With this sign `u0(0, r) = f(r)` and `∂_t u0(0, r) = g(r)`. The `g`-term
/// is even in `x`, so it is accumulated on `x ≥ 0` by running Simpson from
/// the outer end and mirrored.
pub fn build_h(f: &RadialProfile, g: &RadialProfile) -> Result<HProfile> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch("f and g must share support radius and grid".into()));
    }
    let n = f.len() - 1;
    let dx = f.dr;
    let support = f.support_radius;

    let yg: Vec<f64> = (0..=n).map(|j| j as f64 * dx * g.samples[j]).collect();
    let tail = quad::cumulative_from_right(&yg, dx);

    let mut values = vec![0.0; 2 * n + 1];
    let mut derivatives = vec![0.0; 2 * n + 1];
    for i in 0..=2 * n {
        let idx = i as isize - n as isize;
        let x = idx as f64 * dx;
        if x.abs() >= support {
            continue;
        }
        let j = idx.unsigned_abs();
        let fx = f.samples[j];
        let gx = g.samples[j];
        let fpx = f.derivative_at(idx);
        values[i] = -0.5 * x * fx + 0.5 * tail[j];
        derivatives[i] = -0.5 * fx - 0.5 * x * fpx - 0.5 * x * gx;
    }
    Ok(HProfile {
        support_radius: support,
        dx,
        values,
        derivatives,
        data_scale: f.max_abs().max(g.max_abs()),
    })
}

impl HProfile {
    /// Left end of the grid.
    pub fn x0(&self) -> f64 {
        -(((self.values.len() - 1) / 2) as f64) * self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0() + i as f64 * self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `h(x)`, zero outside the support.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() >= self.support_radius {
            return 0.0;
        }
        quad::cubic_interp(&self.values, self.x0(), self.dx, x).unwrap_or(0.0)
    }

    /// `h′(x)`, zero outside the support.
    #[inline]
    pub fn eval_derivative(&self, x: f64) -> f64 {
        if x.abs() >= self.support_radius {
            return 0.0;
        }
        quad::cubic_interp(&self.derivatives, self.x0(), self.dx, x).unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Rows `(x, h, h′)` for the CSV artifact.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.x(i), self.values[i], self.derivatives[i]))
    }
}

/// `u0(t, r) = [h(t−r) − h(t+r)]/r`; for `r ≤ dx/2` the limit `−2h′(t)`.
#[inline]
pub fn u0_eval(h: &HProfile, t: f64, r: f64) -> f64 {
    if r <= 0.5 * h.dx {
        return -2.0 * h.eval_derivative(t);
    }
    (h.eval(t - r) - h.eval(t + r)) / r
}

/// Outgoing half `h(t−r)/r` of `u0`.
#[inline]
pub fn u0_outgoing(h: &HProfile, t: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    h.eval(t - r) / r
}

/// Ingoing half `−h(t+r)/r` of `u0`.
#[inline]
pub fn u0_ingoing(h: &HProfile, t: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -h.eval(t + r) / r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_profile, ProfileFamily};

    fn data(ff: ProfileFamily, gf: ProfileFamily, dr: f64) -> (RadialProfile, RadialProfile) {
        (
            make_profile(ff, 1.0, 1.0, dr).unwrap(),
            make_profile(gf, 1.0, 1.0, dr).unwrap(),
        )
    }

    #[test]
    fn zero_data_gives_zero_h() {
        let (f, g) = data(ProfileFamily::Zero, ProfileFamily::Zero, 0.05);
        let h = build_h(&f, &g).unwrap();
        assert!(h.is_zero());
        assert!(h.derivatives.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn g_only_matches_antiderivative() {
        let (f, g) = data(ProfileFamily::Zero, ProfileFamily::Bump4, 0.01);
        let h = build_h(&f, &g).unwrap();
        // h(x) = (1 − x²)⁵/20
        assert!((h.eval(0.5) - 0.011_865_234_375).abs() < 1e-9);
        for i in 0..h.len() {
            let x = h.x(i);
            let exact = if x.abs() < 1.0 { (1.0 - x * x).powi(5) / 20.0 } else { 0.0 };
            assert!((h.values[i] - exact).abs() < 1e-9, "x = {x}");
            assert_eq!(h.values[i], h.values[h.len() - 1 - i], "even parity");
        }
    }

    #[test]
    fn f_only_matches_direct_substitution() {
        let (f, g) = data(ProfileFamily::Bump4, ProfileFamily::Zero, 0.01);
        let h = build_h(&f, &g).unwrap();
        assert!((h.eval(0.5) + 0.079_101_562_5).abs() < 1e-12);
        for i in 0..h.len() {
            assert_eq!(h.values[i], -h.values[h.len() - 1 - i], "odd parity");
        }
    }

    #[test]
    fn support_is_exact() {
        let (f, g) = data(ProfileFamily::Bump4, ProfileFamily::Bump4, 0.03);
        let h = build_h(&f, &g).unwrap();
        for i in 0..h.len() {
            if h.x(i).abs() >= 1.0 {
                assert_eq!(h.values[i], 0.0);
            }
        }
        assert_eq!(h.eval(1.2), 0.0);
        assert_eq!(h.eval(-1.0), 0.0);
    }

    #[test]
    fn u0_reproduces_initial_data() {
        let (f, g) = data(ProfileFamily::Bump4, ProfileFamily::Bump4, 0.005);
        let h = build_h(&f, &g).unwrap();
        assert!((u0_eval(&h, 0.0, 0.5) - 0.316_406_25).abs() < 1e-8);
        let dt = 1e-4;
        for j in 1..200 {
            let r = j as f64 * 0.005;
            let u = u0_eval(&h, 0.0, r);
            assert!((u - f.eval(r)).abs() < 1e-8, "u0(0, {r})");
            let ut = (u0_eval(&h, dt, r) - u0_eval(&h, -dt, r)) / (2.0 * dt);
            assert!((ut - g.eval(r)).abs() < 1e-5, "u0_t(0, {r}) = {ut} vs {}", g.eval(r));
        }
    }

    #[test]
    fn u0_origin_limit() {
        let (f, g) = data(ProfileFamily::Zero, ProfileFamily::Bump4, 0.01);
        let h = build_h(&f, &g).unwrap();
        assert!((u0_eval(&h, 0.5, 0.0) - 0.158_203_125).abs() < 1e-10);
        // continuity across the switch
        let near = u0_eval(&h, 0.5, h.dx);
        assert!((near - u0_eval(&h, 0.5, 0.0)).abs() < 0.05 * h.dx);
    }

    #[test]
    fn strong_huygens() {
        let (f, g) = data(ProfileFamily::Bump4, ProfileFamily::Bump4, 0.02);
        let h = build_h(&f, &g).unwrap();
        for &(t, r) in &[(2.5, 0.5), (10.0, 3.0), (4.0, 0.0), (50.0, 20.0)] {
            assert_eq!(u0_eval(&h, t, r), 0.0, "({t}, {r})");
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let f = make_profile(ProfileFamily::Bump4, 1.0, 1.0, 0.01).unwrap();
        let g = make_profile(ProfileFamily::Bump4, 1.0, 2.0, 0.01).unwrap();
        assert!(matches!(build_h(&f, &g), Err(Error::GridMismatch(_))));
    }
}
