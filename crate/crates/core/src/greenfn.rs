//! Spherical Duhamel operator `□⁻¹`, the limiting profile `W`, the auxiliary
//! `Φ_p`, and the shell-source checks of the limiting equation
//! `□W = C_p·δ(t−r)/r^p`.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::AsymptoticModel;
use crate::error::{Error, Result};
use crate::linear::{u0_eval, u0_ingoing, u0_outgoing, HProfile};
use crate::model::pow_s;
use crate::quad::{even_at_least, simpson_step};

/// Gaussian-regularized shell `strength·δ_σ(t−r)/r^power`, cut off at `r < σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellSource {
    pub strength: f64,
    pub sigma: f64,
    pub power: f64,
}

impl ShellSource {
    pub fn new(strength: f64, sigma: f64, power: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("shell width sigma = {sigma} must be positive")));
        }
        Ok(Self { strength, sigma, power })
    }

    /// Normalized Gaussian of width `σ`.
    #[inline]
    pub fn profile(&self, x: f64) -> f64 {
        let z = x / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[inline]
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        if r < self.sigma {
            return 0.0;
        }
        self.strength * self.profile(t - r) / r.powf(self.power)
    }
}

/// Resolution of the two-level Simpson rule in [`duhamel_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelQuadrature {
    /// Largest spacing in either variable.
    pub step: f64,
}

impl DuhamelQuadrature {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("quadrature step {step} must be positive")));
        }
        Ok(Self { step })
    }

    /// Resolves a Gaussian shell of width `σ`.
    pub fn for_shell(sigma: f64) -> Self {
        Self { step: sigma / 4.0 }
    }

    /// Resolves `u0` squeezed by `ε^a`: the outgoing shell has width `2ε^a·R`.
    pub fn for_scaled_wave(h: &HProfile, epsilon: f64, a: f64) -> Self {
        Self { step: epsilon.powf(a) * h.support_radius / 64.0 }
    }
}

/// Zero-data solution of `□u = source` at `(t, r)`:
/// `(1/2r)·∫₀ᵗ ds ∫_{|r−(t−s)|}^{r+(t−s)} ρ·source(s, ρ) dρ`.
///
/// Both levels are composite Simpson; the outer range is split where the
/// lower inner limit has its kink (`s = t − r`). The quadrature weights are
/// positive, so a nonnegative source gives a nonnegative result.
pub fn duhamel_apply<S>(source: &S, t: f64, r: f64, quad: &DuhamelQuadrature) -> Result<f64>
where
    S: Fn(f64, f64) -> f64 + Sync,
{
    if !(r > 0.0) {
        return Err(Error::OutsideDomain(format!("Duhamel probe needs r > 0, got r = {r}")));
    }
    if !(t >= 0.0) {
        return Err(Error::OutsideDomain(format!("Duhamel probe needs t >= 0, got t = {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let step = quad.step;
    let inner = |s: f64| -> f64 {
        let lo = (r - (t - s)).abs();
        let hi = r + (t - s);
        simpson_step(|rho| rho * source(s, rho), lo, hi, step)
    };
    let mut pieces = vec![(0.0, t)];
    let kink = t - r;
    if kink > 0.0 && kink < t {
        pieces = vec![(0.0, kink), (kink, t)];
    }
    let mut total = 0.0;
    for (a, b) in pieces {
        let n = even_at_least(((b - a) / step).ceil().max(2.0) as usize);
        let hs = (b - a) / n as f64;
        let vals: Vec<f64> = (0..=n).into_par_iter().map(|i| inner(a + i as f64 * hs)).collect();
        if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain(format!(
                "source not finite on the backward light cone of ({t}, {r}): {bad}"
            )));
        }
        total += crate::quad::simpson(&vals, hs);
    }
    Ok(total / (2.0 * r))
}

/// `[(t−r)^−m − (t+r)^−m]/r` for `t > r ≥ 0`, without cancellation at small `r`.
fn cone_bracket(t: f64, r: f64, m: f64) -> f64 {
    if r == 0.0 {
        return 2.0 * m * t.powf(-m - 1.0);
    }
    let x = r / t;
    // (1−x)^−m − (1+x)^−m = (1+x)^−m·expm1(2m·atanh x)
    t.powf(-m) * (1.0 + x).powf(-m) * (2.0 * m * x.atanh()).exp_m1() / r
}

/// `W(t, r) = A_p·Θ(t−r)/r·[(t−r)^−(p−2) − (t+r)^−(p−2)]`; the `r → 0` value
/// is `2(p−2)·A_p/t^(p−1)`.
pub fn w_eval(model: &AsymptoticModel, t: f64, r: f64) -> f64 {
    if t - r <= 0.0 {
        return 0.0;
    }
    model.a_p * cone_bracket(t, r, model.p - 2.0)
}

/// [`w_eval`] that refuses points with `0 < t − r < guard`.
pub fn w_eval_guarded(model: &AsymptoticModel, t: f64, r: f64, guard: f64) -> Result<f64> {
    let gap = t - r;
    if gap > 0.0 && gap < guard {
        return Err(Error::OutsideDomain(format!(
            "(t, r) = ({t}, {r}) lies within {guard} of the light cone"
        )));
    }
    Ok(w_eval(model, t, r))
}

/// `Φ_p = pow_s(h, p)/(p−2)·[(t−r)^−(p−2) − (t+r)^−(p−2)]` for `t > r > 0`.
pub fn phi_p_eval(h_value: f64, p: f64, t: f64, r: f64) -> Result<f64> {
    if !(t > r) || !(r > 0.0) {
        return Err(Error::OutsideDomain(format!("Phi_p needs t > r > 0, got ({t}, {r})")));
    }
    let m = p - 2.0;
    Ok(pow_s(h_value, p) / m * r * cone_bracket(t, r, m))
}

/// Which part of `u0 = [h(t−r) − h(t+r)]/r` feeds a scaled source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WavePart {
    Full,
    Outgoing,
    Ingoing,
}

/// `ε^−a(p+1)·pow_s(u0(ε^−a·t, ε^−a·r), p)`.
pub fn scaled_u0_power<'a>(
    h: &'a HProfile,
    p: f64,
    epsilon: f64,
    a: f64,
    part: WavePart,
) -> impl Fn(f64, f64) -> f64 + Sync + 'a {
    let stretch = epsilon.powf(-a);
    let amplitude = epsilon.powf(-a * (p + 1.0));
    move |t, r| {
        let (ts, rs) = (stretch * t, stretch * r);
        let u = match part {
            WavePart::Full => u0_eval(h, ts, rs),
            WavePart::Outgoing => u0_outgoing(h, ts, rs),
            WavePart::Ingoing => u0_ingoing(h, ts, rs),
        };
        amplitude * pow_s(u, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitRow {
    pub t: f64,
    pub r: f64,
    /// `|□⁻¹(scaled source) − W|` at the probe.
    pub deficit: f64,
    /// `(1+t+r)(1+|t−r|)^(p−1)`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitReport {
    pub epsilon: f64,
    pub a: f64,
    pub rows: Vec<DeficitRow>,
    /// `max weight·deficit` over the probes.
    pub max_weighted: f64,
}

/// Distance between `□⁻¹` of the squeezed source `ε^−a(p+1)·u0^p(ε^−a·)` and
/// the limit `W`, weighted with `q = p`, at probes with `t − r > 1`.
pub fn shell_deficit(
    model: &AsymptoticModel,
    h: &HProfile,
    epsilon: f64,
    probes: &[(f64, f64)],
    quad: &DuhamelQuadrature,
) -> Result<DeficitReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    if let Some(&(t, r)) = probes.iter().find(|(t, r)| !(t - r > 1.0)) {
        return Err(Error::OutsideDomain(format!("probe ({t}, {r}) is not in t − r > 1")));
    }
    if probes.is_empty() {
        return Err(Error::EmptyRegion("no probes".into()));
    }
    let p = model.p;
    let source = scaled_u0_power(h, p, epsilon, model.a, WavePart::Full);
    let rows = probes
        .iter()
        .map(|&(t, r)| {
            let value = if h.is_zero() { 0.0 } else { duhamel_apply(&source, t, r, quad)? };
            let deficit = (value - w_eval(model, t, r)).abs();
            let weight = (1.0 + t + r) * (1.0 + (t - r).abs()).powf(p - 1.0);
            Ok(DeficitRow { t, r, deficit, weight })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_weighted = rows.iter().fold(0.0f64, |m, row| m.max(row.weight * row.deficit));
    Ok(DeficitReport { epsilon, a: model.a, rows, max_weighted })
}
