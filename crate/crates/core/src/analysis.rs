//! Weighted norms, the rescaled remainder, tail fits and ε-scaling slopes.

use serde::Serialize;

use crate::constants::AsymptoticModel;
use crate::error::{Error, Result};
use crate::evolve::{Field2D, Worldline};
use crate::greenfn::w_eval;

/// Sampling region in the `(t, r)` half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    Full,
    /// `t − r > 1`.
    Omega,
    /// `t − r > T`.
    Beyond(f64),
    /// `lo ≤ t − r ≤ hi`.
    Slab { lo: f64, hi: f64 },
}

impl Region {
    #[inline]
    pub fn contains(&self, t: f64, r: f64) -> bool {
        let gap = t - r;
        match *self {
            Region::Full => true,
            Region::Omega => gap > 1.0,
            Region::Beyond(lo) => gap > lo,
            Region::Slab { lo, hi } => gap >= lo && gap <= hi,
        }
    }
}

/// Anything that can enumerate `(t, r, value)` samples.
pub trait SampledField {
    fn visit(&self, f: &mut dyn FnMut(f64, f64, f64));
}

impl SampledField for Field2D {
    fn visit(&self, f: &mut dyn FnMut(f64, f64, f64)) {
        self.for_each_sample(f)
    }
}

/// A function sampled on the lattice `(n·dt, j·dr)`, `n < nt`, `j < nr`.
pub struct LatticeFn<F> {
    pub dt: f64,
    pub dr: f64,
    pub nt: usize,
    pub nr: usize,
    pub f: F,
}

impl<F: Fn(f64, f64) -> f64> SampledField for LatticeFn<F> {
    fn visit(&self, g: &mut dyn FnMut(f64, f64, f64)) {
        for n in 0..self.nt {
            let t = n as f64 * self.dt;
            for j in 0..self.nr {
                let r = j as f64 * self.dr;
                g(t, r, (self.f)(t, r));
            }
        }
    }
}

/// `(1 + t + r)·(1 + |t − r|)^(q−1)`.
#[inline]
pub fn weight(t: f64, r: f64, q: f64) -> f64 {
    (1.0 + t + r) * (1.0 + (t - r).abs()).powf(q - 1.0)
}

/// Sample maximum of `weight(t, r, q)·|field|` over `region`.
pub fn weighted_norm(field: &dyn SampledField, q: f64, region: Region) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("weight exponent q = {q} must exceed 1")));
    }
    let mut seen = false;
    let mut best = 0.0f64;
    field.visit(&mut |t, r, v| {
        if region.contains(t, r) {
            seen = true;
            best = best.max(weight(t, r, q) * v.abs());
        }
    });
    if seen {
        Ok(best)
    } else {
        Err(Error::EmptyRegion(format!("no samples in {region:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FullNorm {
    Finite(f64),
    /// Slab norms over `t − r ∈ [2^−m, 1]` for `m = 1, 2, …` and their
    /// successive ratios.
    Unbounded { slab_norms: Vec<f64>, growth: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub full_norm: FullNorm,
    pub restricted_norm: f64,
    pub q: f64,
}

/// Slab growth ratio above which the full norm is reported unbounded.
pub const UNBOUNDED_GROWTH: f64 = 1.8;

/// Norms of a lattice field; both are finite on a lattice.
pub fn norm_report(field: &Field2D, q: f64) -> Result<NormReport> {
    Ok(NormReport {
        full_norm: FullNorm::Finite(weighted_norm(field, q, Region::Full)?),
        restricted_norm: weighted_norm(field, q, Region::Omega)?,
        q,
    })
}

/// Weighted norms of `f` over the slabs `t − r ∈ [2^−m, 1]`, `m = 1..=m_max`,
/// sampled with spacing `spacing` in both `t` and `r` up to `extent`.
pub fn slab_norms<F>(f: F, q: f64, m_max: u32, spacing: f64, extent: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    let n = (extent / spacing).round() as usize + 1;
    let lattice = LatticeFn { dt: spacing, dr: spacing, nt: n, nr: n, f };
    (1..=m_max)
        .map(|m| weighted_norm(&lattice, q, Region::Slab { lo: 0.5f64.powi(m as i32), hi: 1.0 }))
        .collect()
}

/// Restricted norm plus the slab scan deciding whether the full norm of a
/// continuum function is finite.
pub fn function_norm_report<F>(f: F, q: f64, m_max: u32, spacing: f64, extent: f64) -> Result<NormReport>
where
    F: Fn(f64, f64) -> f64 + Copy,
{
    let n = (extent / spacing).round() as usize + 1;
    let lattice = LatticeFn { dt: spacing, dr: spacing, nt: n, nr: n, f };
    let restricted_norm = weighted_norm(&lattice, q, Region::Omega)?;
    let slabs = slab_norms(f, q, m_max, spacing, extent)?;
    let growth: Vec<f64> = slabs.windows(2).map(|w| w[1] / w[0]).collect();
    let full_norm = if !growth.is_empty() && growth.iter().all(|g| *g >= UNBOUNDED_GROWTH) {
        FullNorm::Unbounded { slab_norms: slabs, growth }
    } else {
        FullNorm::Finite(weighted_norm(&lattice, q, Region::Full)?)
    };
    Ok(NormReport { full_norm, restricted_norm, q })
}

/// `W_ε(t, r) = ε^−b·w(ε^−a·t, ε^−a·r)`, `b = p + a(p−1)`, by bilinear
/// interpolation in the stored lattice.
pub fn rescaled_remainder(w: &Field2D, epsilon: f64, a: f64, p: f64, probes: &[(f64, f64)]) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let b = p + a * (p - 1.0);
    let stretch = epsilon.powf(-a);
    let amp = epsilon.powf(-b);
    probes
        .iter()
        .map(|&(t, r)| {
            w.bilinear(stretch * t, stretch * r)
                .map(|v| amp * v)
                .ok_or_else(|| {
                    Error::OutsideDomain(format!(
                        "rescaled probe ({}, {}) outside the lattice",
                        stretch * t,
                        stretch * r
                    ))
                })
        })
        .collect()
}

/// Restricted (`t − r > 1`) weighted distance `‖W_ε − W‖` with `q = p − 1`,
/// using every stored lattice node whose rescaled image lies in `Ω`.
pub fn rescaled_distance(w: &Field2D, model: &AsymptoticModel) -> Result<f64> {
    let eps = model.epsilon;
    let shrink = eps.powf(model.a);
    let mut probes = Vec::new();
    w.for_each_sample(|t, r, _| {
        let (ts, rs) = (shrink * t, shrink * r);
        if ts - rs > 1.0 {
            probes.push((ts, rs));
        }
    });
    if probes.is_empty() {
        return Err(Error::EmptyRegion("no lattice node maps into t − r > 1".into()));
    }
    let values = rescaled_remainder(w, eps, model.a, model.p, &probes)?;
    let q = model.p - 1.0;
    Ok(probes
        .iter()
        .zip(values)
        .fold(0.0f64, |m, (&(t, r), v)| m.max(weight(t, r, q) * (v - w_eval(model, t, r)).abs())))
}

/// One lattice point of the late-time comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub t: f64,
    pub r: f64,
    pub u: f64,
    pub prediction: f64,
    pub residual: f64,
    pub weight: f64,
}

/// Residual of `u = ε·u0 + w` against `ε·u0 + ε^p·W` over `t − r > ε^−a`,
/// weights with `q = p − 1`. `u0` is taken from the closed form.
pub fn theorem_residual_rows(
    w: &Field2D,
    model: &AsymptoticModel,
    h: &crate::linear::HProfile,
) -> Vec<ResidualRow> {
    let eps = model.epsilon;
    let region = Region::Beyond(eps.powf(-model.a));
    let amp = eps.powf(model.p);
    let q = model.p - 1.0;
    let mut rows = Vec::new();
    w.for_each_sample(|t, r, wv| {
        if region.contains(t, r) {
            let lin = eps * crate::linear::u0_eval(h, t, r);
            let u = lin + wv;
            let prediction = lin + amp * w_eval(model, t, r);
            rows.push(ResidualRow { t, r, u, prediction, residual: u - prediction, weight: weight(t, r, q) });
        }
    });
    rows
}

/// `max weight·|u − ε·u0 − ε^p·W|` over `t − r > ε^−a`.
pub fn theorem_residual(w: &Field2D, model: &AsymptoticModel, h: &crate::linear::HProfile) -> Result<f64> {
    let rows = theorem_residual_rows(w, model, h);
    if rows.is_empty() {
        return Err(Error::EmptyRegion("no lattice samples in t − r > ε^−a".into()));
    }
    Ok(rows.iter().fold(0.0f64, |m, row| m.max(row.weight * row.residual.abs())))
}

/// Least-squares power law `|u| ≈ |amplitude|·t^−exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    /// Carries the sign of the samples.
    pub amplitude: f64,
    pub window: (f64, f64),
    pub max_rel_residual: f64,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn tail_fit(times: &[f64], values: &[f64]) -> Result<TailFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidArgument("times and values differ in length".into()));
    }
    if times.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in window, need at least {MIN_FIT_SAMPLES}",
            times.len()
        )));
    }
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Fit("fit window must have t > 0".into()));
    }
    let sign = values[0].signum();
    if values.iter().any(|v| *v == 0.0 || !v.is_finite() || v.signum() != sign) {
        return Err(Error::Fit("samples vanish or change sign in the fit window".into()));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    let amplitude = intercept.exp();
    let max_rel_residual = times.iter().zip(values).fold(0.0f64, |m, (t, v)| {
        let model = amplitude * t.powf(slope);
        m.max((model - v.abs()).abs() / v.abs())
    });
    let (lo, hi) = times.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), t| (lo.min(*t), hi.max(*t)));
    Ok(TailFit {
        exponent: -slope,
        amplitude: sign * amplitude,
        window: (lo, hi),
        max_rel_residual,
    })
}

/// Default window: `t_lo = max(ε^−a, r + R + 5)`, `t_hi = t_max − R`.
pub fn default_fit_window(epsilon: f64, a: f64, r: f64, support: f64, t_max: f64) -> (f64, f64) {
    (epsilon.powf(-a).max(r + support + 5.0), t_max - support)
}

/// Fit a worldline over `[lo, hi]`; the window must start past the outgoing
/// shell (`lo > r + R`).
pub fn fit_worldline(line: &Worldline, window: (f64, f64), support: f64) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > line.r + support) {
        return Err(Error::Fit(format!(
            "window start {lo} must exceed r + R = {}",
            line.r + support
        )));
    }
    if !(hi > lo) {
        return Err(Error::Fit(format!("empty fit window [{lo}, {hi}]")));
    }
    let (t, v) = line.window(lo, hi);
    tail_fit(&t, &v)
}

/// Least-squares slope of `log(quantity)` against `log(ε)`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("{} ε-values, need at least 3", points.len())));
    }
    if let Some((e, v)) = points.iter().find(|(e, v)| !(*e > 0.0) || !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("nonpositive entry (ε = {e}, value = {v})")));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (e, _)| (lo.min(*e), hi.max(*e)));
    if hi / lo < 4.0 {
        return Err(Error::Fit(format!("ε range [{lo}, {hi}] spans less than a factor 4")));
    }
    let xs: Vec<f64> = points.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_norm() {
        let z = LatticeFn { dt: 0.1, dr: 0.1, nt: 20, nr: 20, f: |_: f64, _: f64| 0.0 };
        assert_eq!(weighted_norm(&z, 2.0, Region::Full).unwrap(), 0.0);
        assert!(weighted_norm(&z, 1.0, Region::Full).is_err());
        assert!(matches!(weighted_norm(&z, 2.0, Region::Beyond(100.0)), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn synthetic_power_law_fit() {
        let t: Vec<f64> = (0..50).map(|i| 20.0 + i as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.5 * t.powi(-2)).collect();
        let fit = tail_fit(&t, &v).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.amplitude - 3.5).abs() < 1e-10);
        assert!(fit.max_rel_residual < 1e-12);
        assert_eq!(fit.window, (20.0, 69.0));

        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!(tail_fit(&t, &neg).unwrap().amplitude < 0.0);
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let t: Vec<f64> = (1..=10).map(f64::from).collect();
        let mut v: Vec<f64> = t.iter().map(|t| 1.0 / t).collect();
        assert!(tail_fit(&t[..5], &v[..5]).is_err());
        v[4] = -v[4];
        assert!(matches!(tail_fit(&t, &v), Err(Error::Fit(_))));
    }

    #[test]
    fn scaling_fit_exact_cube() {
        let pts: Vec<(f64, f64)> = [0.025, 0.05, 0.1, 0.2].iter().map(|e| (*e, e * e * e)).collect();
        assert!((scaling_fit(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(scaling_fit(&pts[..2]).is_err());
        assert!(scaling_fit(&[(0.1, 1.0), (0.15, 2.0), (0.2, 3.0)]).is_err());
        assert!(scaling_fit(&[(0.1, 1.0), (0.2, 0.0), (0.4, 3.0)]).is_err());
    }

    #[test]
    fn default_window() {
        assert_eq!(default_fit_window(0.1, 0.5, 1.0, 1.0, 100.0), (7.0, 99.0));
        let (lo, _) = default_fit_window(0.01, 0.5, 1.0, 1.0, 100.0);
        assert!((lo - 10.0).abs() < 1e-12);
    }

    #[test]
    fn regions() {
        assert!(Region::Omega.contains(3.0, 1.0));
        assert!(!Region::Omega.contains(2.0, 1.0));
        assert!(Region::Slab { lo: 0.25, hi: 1.0 }.contains(1.5, 1.0));
        assert!(!Region::Slab { lo: 0.25, hi: 1.0 }.contains(1.1, 1.0));
    }
}
