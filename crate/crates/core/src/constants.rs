//! Moments of `h` and the constants of the late-time formula.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::HProfile;
use crate::model::{pow_s, NonlinearityParams};
use crate::quad;

/// `C_q = ∫ pow_s(h(x), q) dx` by composite Simpson on the `h` grid.
pub fn moment_ck(h: &HProfile, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order q = {q} must be at least 1")));
    }
    let integrand: Vec<f64> = h.values.iter().map(|v| pow_s(*v, q)).collect();
    Ok(quad::simpson(&integrand, h.dx))
}

/// `C_{q,i} = ∫ x^i·|h(x)|^q dx`.
pub fn moment_cki(h: &HProfile, q: f64, i: u32) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order q = {q} must be at least 1")));
    }
    let integrand: Vec<f64> = h
        .rows()
        .map(|(x, v, _)| x.powi(i as i32) * v.abs().powf(q))
        .collect();
    Ok(quad::simpson(&integrand, h.dx))
}

/// `(λ, λ₀)` for given `p`, `k` and scaling parameter `a`.
pub fn decay_gain_exponents(p: f64, k: f64, a: f64) -> (f64, f64) {
    let nonlinear = (p * (p - 1.0) * (1.0 - a) + a * ((p - 1.0).powi(2) - 2.0)) / p;
    let higher_order = k * (1.0 + a);
    let lambda0 = if a > p * (p - 1.0 - k) / (p + 1.0 + p * k) {
        nonlinear
    } else {
        higher_order
    };
    let lambda = nonlinear.min(higher_order).min(a);
    (lambda, lambda0)
}

/// Parameters of the predicted late-time tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticModel {
    pub p: f64,
    pub k: f64,
    pub epsilon: f64,
    pub a: f64,
    pub c_p: f64,
    pub a_p: f64,
    pub lambda: f64,
    pub lambda0: f64,
    /// `∫ |h|^p`, the scale against which a vanishing `C_p` is judged.
    pub abs_moment: f64,
}

/// Relative size of `|C_p|` against `∫|h|^p` below which the leading tail is
/// treated as absent.
pub const DEGENERATE_TAIL_RATIO: f64 = 1e-8;

pub fn build_model(h: &HProfile, nl: &NonlinearityParams, epsilon: f64, a: f64) -> Result<AsymptoticModel> {
    nl.check_scaling_parameter(a)?;
    let p = nl.p;
    let c_p = moment_ck(h, p)?;
    let abs_moment = moment_cki(h, p, 0)?;
    let (lambda, lambda0) = decay_gain_exponents(p, nl.k, a);
    Ok(AsymptoticModel {
        p,
        k: nl.k,
        epsilon,
        a,
        c_p,
        a_p: amplitude_from_moment(p, c_p),
        lambda,
        lambda0,
        abs_moment,
    })
}

/// `A_p = 2^(p−3)·C_p/(p−2)`.
pub fn amplitude_from_moment(p: f64, c_p: f64) -> f64 {
    2f64.powf(p - 3.0) * c_p / (p - 2.0)
}

impl AsymptoticModel {
    /// A model carrying only `p` and `A_p` (for evaluating `W` directly).
    pub fn with_amplitude(p: f64, a_p: f64) -> Self {
        let c_p = a_p * (p - 2.0) / 2f64.powf(p - 3.0);
        Self {
            p,
            k: 1.0,
            epsilon: 0.0,
            a: 0.0,
            c_p,
            a_p,
            lambda: 0.0,
            lambda0: 0.0,
            abs_moment: c_p.abs(),
        }
    }

    /// Amplitude exponent of the rescaled remainder, `b = p + a(p−1)`.
    pub fn b(&self) -> f64 {
        self.p + self.a * (self.p - 1.0)
    }

    /// Fixed-`r` late-time coefficient of `W`: `W ~ 2^(p−2)·C_p / t^(p−1)`.
    pub fn fixed_r_tail_coefficient(&self) -> f64 {
        2.0 * (self.p - 2.0) * self.a_p
    }

    /// Predicted fixed-`r` tail amplitude of `u`, `ε^p·2^(p−2)·C_p`.
    pub fn predicted_tail_amplitude(&self) -> f64 {
        self.epsilon.powf(self.p) * self.fixed_r_tail_coefficient()
    }

    /// True when `C_p` vanishes (e.g. odd `h` with odd integer `p`): the
    /// `ε^p` tail is absent and fitting it is meaningless.
    pub fn leading_tail_vanishes(&self) -> bool {
        self.abs_moment == 0.0 || self.c_p.abs() <= DEGENERATE_TAIL_RATIO * self.abs_moment
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::build_h;
    use crate::model::{make_profile, ProfileFamily};

    fn beta_integral(n: u32) -> f64 {
        // ∫_{−1}^{1} (1 − x²)^n dx = 2^(2n+1)·(n!)² / (2n+1)!
        let mut v = 2.0;
        for j in 1..=n {
            v *= 2.0 * j as f64 / (2.0 * j as f64 + 1.0);
        }
        v
    }

    fn g_only_h(dr: f64) -> HProfile {
        let f = make_profile(ProfileFamily::Zero, 1.0, 1.0, dr).unwrap();
        let g = make_profile(ProfileFamily::Bump4, 1.0, 1.0, dr).unwrap();
        build_h(&f, &g).unwrap()
    }

    #[test]
    fn beta_closed_form_sanity() {
        assert!((beta_integral(1) - 4.0 / 3.0).abs() < 1e-15);
        assert!((beta_integral(5) / 20.0 - 0.036_940_836_940_836_94).abs() < 1e-15);
    }

    #[test]
    fn zero_h_moments() {
        let f = make_profile(ProfileFamily::Zero, 1.0, 1.0, 0.02).unwrap();
        let h = build_h(&f, &f).unwrap();
        assert_eq!(moment_ck(&h, 3.0).unwrap(), 0.0);
        assert_eq!(moment_cki(&h, 3.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn g_only_moments_match_beta_integrals() {
        let h = g_only_h(0.005);
        let c1 = moment_ck(&h, 1.0).unwrap();
        let c3 = moment_ck(&h, 3.0).unwrap();
        assert!((c1 - beta_integral(5) / 20.0).abs() < 1e-9, "C1 = {c1}");
        let c3_exact = beta_integral(15) / 8000.0;
        assert!((c3 / c3_exact - 1.0).abs() < 1e-6, "C3 = {c3} vs {c3_exact}");
        let c30 = moment_cki(&h, 3.0, 0).unwrap();
        assert!((c30 - c3).abs() < 1e-15);
        let c31 = moment_cki(&h, 3.0, 1).unwrap();
        assert!(c31.abs() < 1e-18, "odd weight: {c31}");
    }

    #[test]
    fn simpson_refinement_is_fourth_order() {
        let exact = beta_integral(15) / 8000.0;
        let e1 = (moment_ck(&g_only_h(0.05), 3.0).unwrap() - exact).abs();
        let e2 = (moment_ck(&g_only_h(0.025), 3.0).unwrap() - exact).abs();
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn moment_order_below_one_rejected() {
        let h = g_only_h(0.05);
        assert!(moment_ck(&h, 0.5).is_err());
        assert!(moment_cki(&h, 0.9, 0).is_err());
    }

    #[test]
    fn lambda_examples() {
        let (lambda, lambda0) = decay_gain_exponents(3.0, 1.0, 0.5);
        assert!((lambda - 0.5).abs() < 1e-15);
        assert!((lambda0 - 4.0 / 3.0).abs() < 1e-15);
        // below the switch a ≤ p(p−1−k)/(p+1+pk) = 3/7 the k-branch is used
        let (_, lambda0) = decay_gain_exponents(3.0, 1.0, 0.4);
        assert!((lambda0 - 1.4).abs() < 1e-15);
    }

    #[test]
    fn amplitude_arithmetic() {
        assert_eq!(amplitude_from_moment(3.0, 0.7), 0.7);
        assert_eq!(amplitude_from_moment(4.0, 0.7), 0.7);
        let h = g_only_h(0.01);
        let nl = NonlinearityParams::pure(3.0).unwrap();
        let m = build_model(&h, &nl, 0.1, 0.5).unwrap();
        assert_eq!(m.a_p, m.c_p);
        assert!((m.b() - 4.0).abs() < 1e-15);
        assert!(!m.leading_tail_vanishes());
        assert!(build_model(&h, &nl, 0.1, 1.6).is_err());
    }

    #[test]
    fn odd_h_flags_degenerate_tail() {
        let f = make_profile(ProfileFamily::Bump4, 1.0, 1.0, 0.01).unwrap();
        let g = make_profile(ProfileFamily::Zero, 1.0, 1.0, 0.01).unwrap();
        let h = build_h(&f, &g).unwrap();
        let nl = NonlinearityParams::pure(3.0).unwrap();
        let m = build_model(&h, &nl, 0.1, 0.5).unwrap();
        assert!(m.c_p.abs() < 1e-10);
        assert!(m.leading_tail_vanishes());
    }
}
