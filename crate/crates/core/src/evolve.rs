//! Explicit evolution of `□u = F(u)` in spherical symmetry.
//!
//! The field is evolved as `v = r·u`, for which the radial d'Alembertian is
//! the flat 1+1 one: `∂²_t v = ∂²_r v + r·F(v/r)` with `v(t, 0) = 0`.
//! Second-order leapfrog in time, second-order centred differences in `r`,
//! and a second-order Taylor start. The outer edge sits outside the domain
//! of dependence of every recorded sample, so a homogeneous Dirichlet value
//! there is exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{u0_eval, HProfile};
use crate::model::{GridSpec, NonlinearityParams, RunConfig};

/// Scheme identifier recorded in manifests.
pub const SCHEME_VERSION: &str = "leapfrog-v1(v=r*u, centred-2, taylor-start)";

/// Default blowup sentinel: `|u| > 10⁶·ε·max(|f|, |g|)`.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    FullU,
    LinearU0,
    RemainderW,
}

/// Full-time-resolution samples at one lattice radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Worldline {
    pub r: f64,
    pub j: usize,
    pub dt: f64,
    /// Value at `t = n·dt`, `n = 0..`.
    pub values: Vec<f64>,
}

impl Worldline {
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Cubic interpolation in time.
    pub fn at(&self, t: f64) -> Option<f64> {
        crate::quad::cubic_interp(&self.values, 0.0, self.dt, t)
    }

    /// `(t, value)` samples with `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| (self.t(n), *v))
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .unzip()
    }
}

/// Field samples on the lattice `(t = n·stride·dt, r = j·dr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub kind: FieldKind,
    pub epsilon: f64,
    pub dr: f64,
    /// Scheme time step.
    pub dt: f64,
    /// Only every `stride`-th step is stored.
    pub stride: usize,
    pub t_max: f64,
    pub r_max: f64,
    /// Number of stored slices.
    pub nt: usize,
    pub nr: usize,
    /// Row-major `values[n·nr + j]`.
    pub values: Vec<f64>,
    pub worldlines: Vec<Worldline>,
    /// Scheme steps taken.
    pub steps: usize,
}

impl Field2D {
    /// Time between stored slices.
    pub fn slice_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        (n * self.stride) as f64 * self.dt
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    #[inline]
    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.values[n * self.nr + j]
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        &self.values[n * self.nr..(n + 1) * self.nr]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn worldline(&self, r: f64) -> Option<&Worldline> {
        self.worldlines.iter().find(|w| (w.r - r).abs() <= 1e-9 * (1.0 + r))
    }

    /// Bilinear interpolation between stored samples.
    pub fn bilinear(&self, t: f64, r: f64) -> Option<f64> {
        let sdt = self.slice_dt();
        let s = t / sdt;
        let q = r / self.dr;
        let last_t = (self.nt - 1) as f64;
        let last_r = (self.nr - 1) as f64;
        let tol = 1e-9;
        if !(s >= -tol && s <= last_t + tol && q >= -tol && q <= last_r + tol) {
            return None;
        }
        let n = (s.floor().max(0.0) as usize).min(self.nt.saturating_sub(2));
        let j = (q.floor().max(0.0) as usize).min(self.nr.saturating_sub(2));
        let a = (s - n as f64).clamp(0.0, 1.0);
        let b = (q - j as f64).clamp(0.0, 1.0);
        let n1 = (n + 1).min(self.nt - 1);
        let j1 = (j + 1).min(self.nr - 1);
        Some(
            (1.0 - a) * ((1.0 - b) * self.at(n, j) + b * self.at(n, j1))
                + a * ((1.0 - b) * self.at(n1, j) + b * self.at(n1, j1)),
        )
    }

    /// Calls `f(t, r, value)` for every stored sample.
    pub fn for_each_sample(&self, mut f: impl FnMut(f64, f64, f64)) {
        for n in 0..self.nt {
            let t = self.t(n);
            for (j, v) in self.slice(n).iter().enumerate() {
                f(t, j as f64 * self.dr, *v);
            }
        }
    }
}

/// Parameters of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveParams {
    /// `None` evolves the free equation.
    pub nonlinearity: Option<NonlinearityParams>,
    pub epsilon: f64,
    pub grid: GridSpec,
    pub stride: usize,
    pub probe_radii: Vec<f64>,
    pub blowup_factor: f64,
}

impl EvolveParams {
    pub fn from_config(cfg: &RunConfig, epsilon: f64) -> Self {
        Self {
            nonlinearity: Some(cfg.nonlinearity),
            epsilon,
            grid: cfg.grid,
            stride: cfg.stride,
            probe_radii: cfg.probe_radii.clone(),
            blowup_factor: BLOWUP_FACTOR,
        }
    }

    pub fn linear(mut self) -> Self {
        self.nonlinearity = None;
        self
    }

    pub fn with_dr(mut self, dr: f64) -> Self {
        self.grid.dr = dr;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.grid.t_max = t_max;
        self
    }
}

/// Leapfrog state for `∂²_t v = ∂²_r v + s(t, r)` with `v = 0` at both ends.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    courant2: f64,
    dt: f64,
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl Leapfrog {
    /// Taylor start: `v¹ = v⁰ + dt·v̇⁰ + (dt²/2)(∂²_r v⁰ + s⁰)`.
    pub fn start(dr: f64, dt: f64, v0: Vec<f64>, vdot0: &[f64], rhs0: &[f64]) -> Self {
        let nr = v0.len();
        let courant2 = (dt / dr).powi(2);
        let mut v1 = vec![0.0; nr];
        for j in 1..nr.saturating_sub(1) {
            let lap = v0[j + 1] - 2.0 * v0[j] + v0[j - 1];
            v1[j] = v0[j] + dt * vdot0[j] + 0.5 * courant2 * lap + 0.5 * dt * dt * rhs0[j];
        }
        Self { courant2, dt, prev: v0, cur: v1 }
    }

    /// One step; `rhs` is the source at the current level.
    pub fn advance(&mut self, rhs: &[f64]) {
        let nr = self.cur.len();
        let dt2 = self.dt * self.dt;
        let cur = &self.cur;
        let prev = &mut self.prev;
        prev[0] = 0.0;
        for j in 1..nr - 1 {
            let lap = cur[j + 1] - 2.0 * cur[j] + cur[j - 1];
            prev[j] = 2.0 * cur[j] - prev[j] + self.courant2 * lap + dt2 * rhs[j];
        }
        prev[nr - 1] = 0.0;
        std::mem::swap(&mut self.prev, &mut self.cur);
    }

    /// Swap the two time levels so that subsequent steps run backwards.
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.prev, &mut self.cur);
    }

    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    pub fn previous(&self) -> &[f64] {
        &self.prev
    }
}

struct Lattice {
    dr: f64,
    dt: f64,
    nr: usize,
    steps: usize,
    r_max: f64,
}

impl Lattice {
    fn new(grid: &GridSpec, support: f64) -> Self {
        let dr = grid.dr;
        let dt = grid.dt();
        let r_max = support + grid.t_max + 2.0 * support;
        let nr = (r_max / dr).ceil() as usize + 1;
        let steps = (grid.t_max / dt - 1e-9).ceil().max(1.0) as usize;
        Self { dr, dt, nr, steps, r_max: (nr - 1) as f64 * dr }
    }
}

/// `u` from `v = r·u`; origin by the even parabola through the first two nodes.
fn fill_u(v: &[f64], dr: f64, u: &mut [f64]) {
    for j in 1..v.len() {
        u[j] = v[j] / (j as f64 * dr);
    }
    u[0] = if v.len() > 2 { (4.0 * u[1] - u[2]) / 3.0 } else { 0.0 };
}

fn probe_indices(radii: &[f64], dr: f64, nr: usize) -> Result<Vec<(f64, usize)>> {
    radii
        .iter()
        .map(|&r| {
            let q = r / dr;
            let j = q.round();
            if (q - j).abs() > 1e-6 || j as usize >= nr {
                Err(Error::OutsideDomain(format!(
                    "probe radius {r} is not a lattice node for dr = {dr}"
                )))
            } else {
                Ok((r, j as usize))
            }
        })
        .collect()
}

enum Source<'a> {
    /// `r·F(v/r)`.
    Full(Option<NonlinearityParams>),
    /// `r·F(w̃/r + ε·u0)`.
    Remainder(NonlinearityParams, &'a HProfile, f64),
}

fn evolve(params: &EvolveParams, h: &HProfile, kind: FieldKind) -> Result<Field2D> {
    GridSpec::new(params.grid.dr, params.grid.cfl, params.grid.t_max)?;
    if params.stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if !(params.epsilon >= 0.0) || !params.epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon = {} must be nonnegative", params.epsilon)));
    }
    let lat = Lattice::new(&params.grid, h.support_radius);
    let (dr, dt, nr) = (lat.dr, lat.dt, lat.nr);
    let eps = params.epsilon;
    let probes = probe_indices(&params.probe_radii, dr, nr)?;
    let threshold = params.blowup_factor * eps * h.data_scale;

    let source = match kind {
        FieldKind::FullU | FieldKind::LinearU0 => Source::Full(params.nonlinearity),
        FieldKind::RemainderW => match params.nonlinearity {
            Some(nl) => Source::Remainder(nl, h, eps),
            None => Source::Full(None),
        },
    };

    let radii: Vec<f64> = (0..nr).map(|j| j as f64 * dr).collect();
    let (v0, vdot0) = match kind {
        FieldKind::RemainderW => (vec![0.0; nr], vec![0.0; nr]),
        _ => {
            let mut v0 = vec![0.0; nr];
            let mut vdot0 = vec![0.0; nr];
            for j in 1..nr - 1 {
                let r = radii[j];
                if r < h.support_radius {
                    v0[j] = eps * (h.eval(-r) - h.eval(r));
                    vdot0[j] = eps * (h.eval_derivative(-r) - h.eval_derivative(r));
                }
            }
            (v0, vdot0)
        }
    };

    let mut u = vec![0.0; nr];
    let mut rhs = vec![0.0; nr];
    let fill_rhs = |t: f64, u: &[f64], rhs: &mut [f64]| match &source {
        Source::Full(None) => {}
        Source::Full(Some(nl)) => {
            for j in 1..nr - 1 {
                rhs[j] = radii[j] * nl.eval(u[j]);
            }
        }
        Source::Remainder(nl, h, eps) => {
            let support = h.support_radius;
            let lo = (((t - support) / dr).floor().max(1.0)) as usize;
            let hi = ((((t + support) / dr).ceil()) as usize).min(nr - 2);
            for j in 1..nr - 1 {
                let lin = if j >= lo && j <= hi { eps * u0_eval(h, t, radii[j]) } else { 0.0 };
                rhs[j] = radii[j] * nl.eval(u[j] + lin);
            }
        }
    };

    let nt = lat.steps / params.stride + 1;
    let mut values = Vec::with_capacity(nt * nr);
    let mut worldlines: Vec<Worldline> = probes
        .iter()
        .map(|&(r, j)| Worldline { r, j, dt, values: Vec::with_capacity(lat.steps + 1) })
        .collect();

    let record = |n: usize, u: &[f64], values: &mut Vec<f64>, worldlines: &mut [Worldline]| -> Result<()> {
        if let Some(v) = u.iter().find(|v| !v.is_finite() || v.abs() > threshold) {
            return Err(Error::Blowup { step: n, t: n as f64 * dt, value: v.abs(), threshold });
        }
        if n.is_multiple_of(params.stride) {
            values.extend_from_slice(u);
        }
        for w in worldlines.iter_mut() {
            w.values.push(u[w.j]);
        }
        Ok(())
    };

    fill_u(&v0, dr, &mut u);
    record(0, &u, &mut values, &mut worldlines)?;
    fill_rhs(0.0, &u, &mut rhs);
    let mut stepper = Leapfrog::start(dr, dt, v0, &vdot0, &rhs);
    for n in 1..=lat.steps {
        fill_u(stepper.current(), dr, &mut u);
        record(n, &u, &mut values, &mut worldlines)?;
        if n == lat.steps {
            break;
        }
        fill_rhs(n as f64 * dt, &u, &mut rhs);
        stepper.advance(&rhs);
    }

    Ok(Field2D {
        kind,
        epsilon: eps,
        dr,
        dt,
        stride: params.stride,
        t_max: lat.steps as f64 * dt,
        r_max: lat.r_max,
        nt,
        nr,
        values,
        worldlines,
        steps: lat.steps,
    })
}

/// Evolve `u` with data `(ε·u0, ε·∂_t u0)|_{t=0}` read off `h`.
///
/// With `params.nonlinearity == None` this is the free evolution and the
/// result is tagged [`FieldKind::LinearU0`].
pub fn evolve_full(params: &EvolveParams, h: &HProfile) -> Result<Field2D> {
    let kind = if params.nonlinearity.is_some() { FieldKind::FullU } else { FieldKind::LinearU0 };
    evolve(params, h, kind)
}

/// Evolve `w = u − ε·u0` from zero data with source `F(w + ε·u0)`, `u0`
/// taken from the closed form. `w` is never formed as a difference, so it
/// keeps full relative precision at size `ε^p`.
pub fn evolve_remainder(params: &EvolveParams, h: &HProfile) -> Result<Field2D> {
    evolve(params, h, FieldKind::RemainderW)
}

/// Which evolution a Richardson ladder runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderField {
    Full,
    Remainder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub probe_t: f64,
    pub probe_r: f64,
    pub dr: f64,
    /// Probe values at `dr`, `dr/2`, `dr/4`.
    pub values: [f64; 3],
    pub order: f64,
}

/// `log₂(|u_dr − u_dr/2| / |u_dr/2 − u_dr/4|)` at the probe.
pub fn convergence_order(
    params: &EvolveParams,
    h: &HProfile,
    probe: (f64, f64),
    field: LadderField,
) -> Result<ConvergenceReport> {
    let (t, r) = probe;
    if !(t > 0.0) || !(r >= 0.0) {
        return Err(Error::OutsideDomain(format!("probe ({t}, {r}) must have t > 0, r >= 0")));
    }
    let dr = params.grid.dr;
    let run = |level: u32| -> Result<f64> {
        let d = dr / f64::from(1u32 << level);
        let mut p = params
            .clone()
            .with_dr(d)
            .with_t_max(t + 4.0 * params.grid.cfl * d);
        p.probe_radii = vec![r];
        p.stride = usize::MAX / 4;
        let field = match field {
            LadderField::Full => evolve_full(&p, h)?,
            LadderField::Remainder => evolve_remainder(&p, h)?,
        };
        field.worldlines[0]
            .at(t)
            .ok_or_else(|| Error::OutsideDomain(format!("probe time {t} outside lattice")))
    };
    let (a, (b, c)) = rayon::join(|| run(0), || rayon::join(|| run(1), || run(2)));
    let values = [a?, b?, c?];
    let d1 = (values[0] - values[1]).abs();
    let d2 = (values[1] - values[2]).abs();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * scale;
    if d2 <= noise || d1 <= noise {
        return Err(Error::Degenerate(format!(
            "Richardson differences ({d1:e}, {d2:e}) at floating-point noise"
        )));
    }
    Ok(ConvergenceReport { probe_t: t, probe_r: r, dr, values, order: (d1 / d2).log2() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::build_h;
    use crate::model::{make_profile, ProfileFamily};

    fn g_only_h(dr: f64) -> HProfile {
        let f = make_profile(ProfileFamily::Zero, 1.0, 1.0, dr).unwrap();
        let g = make_profile(ProfileFamily::Bump4, 1.0, 1.0, dr).unwrap();
        build_h(&f, &g).unwrap()
    }

    fn params(eps: f64, t_max: f64) -> EvolveParams {
        let mut cfg = RunConfig::canonical();
        cfg.grid.t_max = t_max;
        EvolveParams::from_config(&cfg, eps)
    }

    #[test]
    fn zero_epsilon_gives_zero_fields() {
        let h = g_only_h(0.02);
        let p = params(0.0, 5.0);
        assert_eq!(evolve_full(&p, &h).unwrap().max_abs(), 0.0);
        assert_eq!(evolve_remainder(&p, &h).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lattice_closes_domain_of_dependence() {
        let h = g_only_h(0.02);
        let f = evolve_full(&params(0.1, 5.0), &h).unwrap();
        assert!(f.r_max >= 1.0 + f.t_max);
        assert!((f.dt - 0.9 * f.dr).abs() < 1e-15);
        assert_eq!(f.nt, f.steps / f.stride + 1);
        assert_eq!(f.values.len(), f.nt * f.nr);
    }

    #[test]
    fn off_lattice_probe_is_rejected() {
        let h = g_only_h(0.02);
        let mut p = params(0.1, 2.0);
        p.probe_radii = vec![0.013];
        assert!(matches!(evolve_full(&p, &h), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn blowup_sentinel_trips() {
        let h = g_only_h(0.02);
        let mut p = params(0.1, 5.0);
        p.blowup_factor = 1e-3;
        match evolve_full(&p, &h) {
            // f = 0, so the first nonzero slice is step 1
            Err(Error::Blowup { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn leapfrog_is_time_reversible() {
        let h = g_only_h(0.02);
        let dr = 0.02;
        let dt = 0.9 * dr;
        let nr = 400;
        let v0: Vec<f64> = (0..nr).map(|j| {
            let r = j as f64 * dr;
            if j == 0 || j == nr - 1 { 0.0 } else { h.eval(-r) - h.eval(r) }
        }).collect();
        let vdot: Vec<f64> = (0..nr).map(|j| {
            let r = j as f64 * dr;
            if j == 0 || j == nr - 1 { 0.0 } else { h.eval_derivative(-r) - h.eval_derivative(r) }
        }).collect();
        let zero = vec![0.0; nr];
        let mut lf = Leapfrog::start(dr, dt, v0.clone(), &vdot, &zero);
        let v1 = lf.current().to_vec();
        for _ in 0..200 {
            lf.advance(&zero);
        }
        lf.reverse();
        for _ in 0..200 {
            lf.advance(&zero);
        }
        // After reversal the levels are (v¹, v⁰).
        let back0 = lf.current();
        let back1 = lf.previous();
        let err0 = back0.iter().zip(&v0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let err1 = back1.iter().zip(&v1).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err0 < 1e-12 && err1 < 1e-12, "{err0:e} {err1:e}");
    }

    #[test]
    fn zero_field_ladder_is_degenerate() {
        let h = g_only_h(0.02);
        let p = params(0.0, 3.0);
        assert!(matches!(
            convergence_order(&p, &h, (2.0, 0.5), LadderField::Full),
            Err(Error::Degenerate(_))
        ));
    }
}
