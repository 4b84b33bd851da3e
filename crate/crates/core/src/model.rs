//! Domain types: the nonlinearity, radial data profiles and the run
//! configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Lower bound on `p` for global small-data solutions.
pub const P_CRITICAL: f64 = 1.0 + std::f64::consts::SQRT_2;

/// Power map used for the nonlinearity.
///
/// Integer exponents give the plain power `u^q`; other exponents use the
/// sign-preserving form `|u|^(q−1)·u`.
#[inline]
pub fn pow_s(u: f64, q: f64) -> f64 {
    if q.fract() == 0.0 && q.abs() < 64.0 {
        u.powi(q as i32)
    } else {
        u.abs().powf(q - 1.0) * u
    }
}

/// `F(u) = u^p + extra_coeff·u^(p+k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearityParams {
    pub p: f64,
    pub k: f64,
    pub extra_coeff: f64,
}

impl NonlinearityParams {
    pub fn new(p: f64, k: f64, extra_coeff: f64) -> Result<Self> {
        if !(p > P_CRITICAL) || !p.is_finite() {
            return Err(Error::Config(format!("p = {p} must exceed 1 + sqrt(2)")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Config(format!("k = {k} must be positive")));
        }
        if !extra_coeff.is_finite() {
            return Err(Error::Config("extra_coeff must be finite".into()));
        }
        Ok(Self { p, k, extra_coeff })
    }

    /// Pure power nonlinearity `u^p`.
    pub fn pure(p: f64) -> Result<Self> {
        Self::new(p, 1.0, 0.0)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let lead = pow_s(u, self.p);
        if self.extra_coeff == 0.0 {
            lead
        } else {
            lead + self.extra_coeff * pow_s(u, self.p + self.k)
        }
    }

    /// Upper end of the admissible scaling-parameter range, `p(p−1)/(p+1)`.
    pub fn max_scaling_parameter(&self) -> f64 {
        self.p * (self.p - 1.0) / (self.p + 1.0)
    }

    pub fn check_scaling_parameter(&self, a: f64) -> Result<()> {
        let hi = self.max_scaling_parameter();
        if a > 0.0 && a < hi {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "scaling parameter a = {a} outside (0, {hi})"
            )))
        }
    }
}

/// Built-in single-profile families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    Zero,
    /// `amplitude·(1 − (r/R)²)⁴` inside the support.
    Bump4,
}

impl FromStr for ProfileFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "bump4" => Ok(Self::Bump4),
            other => Err(Error::InvalidArgument(format!("unknown profile family `{other}`"))),
        }
    }
}

/// A compactly supported radial function sampled at `r = j·dr`.
///
/// Consumers treat it as even in `r`. Samples at `r ≥ R` are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub support_radius: f64,
    pub dr: f64,
    pub samples: Vec<f64>,
    /// Number of continuous derivatives across `r = R`
    /// (`u32::MAX` for the zero profile).
    pub smoothness_class: u32,
}

pub fn make_profile(family: ProfileFamily, amplitude: f64, support: f64, dr: f64) -> Result<RadialProfile> {
    if !(support > 0.0) || !support.is_finite() {
        return Err(Error::InvalidArgument(format!("support radius {support} must be positive")));
    }
    if !(dr > 0.0) || !dr.is_finite() {
        return Err(Error::InvalidArgument(format!("grid spacing {dr} must be positive")));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument("amplitude must be finite".into()));
    }
    // Round R/dr up, tolerating representation noise when R is a multiple of dr.
    let cells = (support / dr - 1e-9).ceil().max(1.0) as usize;
    let samples = (0..=cells)
        .map(|j| {
            let r = j as f64 * dr;
            match family {
                ProfileFamily::Zero => 0.0,
                ProfileFamily::Bump4 if r < support => {
                    let s = r / support;
                    amplitude * (1.0 - s * s).powi(4)
                }
                ProfileFamily::Bump4 => 0.0,
            }
        })
        .collect();
    let smoothness_class = match family {
        ProfileFamily::Zero => u32::MAX,
        // (1 − s²)⁴ has a fourth-order zero at s = 1: derivatives 0..=3 vanish there.
        ProfileFamily::Bump4 => 3,
    };
    Ok(RadialProfile {
        support_radius: support,
        dr,
        samples,
        smoothness_class,
    })
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sample at signed node index, with even extension and zero padding.
    #[inline]
    pub fn node(&self, i: isize) -> f64 {
        self.samples.get(i.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// Value at any `r` (even extension, cubic interpolation, zero outside the support).
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.support_radius {
            return 0.0;
        }
        let j = (r / self.dr).floor() as isize;
        let u = r / self.dr - j as f64;
        let y = [self.node(j - 1), self.node(j), self.node(j + 1), self.node(j + 2)];
        let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
        l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]
    }

    /// Fourth-order centred difference at a signed node index. The even
    /// extension and the zero padding beyond the grid supply the stencil at
    /// both ends; the result is odd in the index.
    pub fn derivative_at(&self, i: isize) -> f64 {
        (-self.node(i + 2) + 8.0 * self.node(i + 1) - 8.0 * self.node(i - 1) + self.node(i - 2))
            / (12.0 * self.dr)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dr == other.dr
            && self.samples.len() == other.samples.len()
            && self.support_radius == other.support_radius
    }
}

/// Weighted sup-norms of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataNorms {
    pub f0: f64,
    pub f1: f64,
    pub g0: f64,
}

/// `f0 = max (1+r)^(p−1)|f|`, `f1 = max (1+r)^p |f′|`, `g0 = max (1+r)^p |g|`
/// over the grid nodes.
pub fn data_norms(f: &RadialProfile, g: &RadialProfile, p: f64) -> Result<DataNorms> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch("f and g must share support and grid".into()));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    let mut norms = DataNorms { f0: 0.0, f1: 0.0, g0: 0.0 };
    for j in 0..f.len() {
        let r = f.r(j);
        let w = 1.0 + r;
        norms.f0 = norms.f0.max(w.powf(p - 1.0) * f.samples[j].abs());
        norms.f1 = norms.f1.max(w.powf(p) * f.derivative_at(j as isize).abs());
        norms.g0 = norms.g0.max(w.powf(p) * g.samples[j].abs());
    }
    Ok(norms)
}

/// Initial-data choice for a run: which of `f`, `g` carries the bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFamily {
    Zero,
    /// `f = 0`, `g = bump4`.
    Bump4G,
    /// `f = bump4`, `g = 0`.
    Bump4F,
    /// `f = g = bump4`.
    Bump4FG,
}

impl DataFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Bump4G => "bump4_g",
            Self::Bump4F => "bump4_f",
            Self::Bump4FG => "bump4_fg",
        }
    }

    /// Build `(f, g)`.
    pub fn profiles(&self, amplitude: f64, support: f64, dr: f64) -> Result<(RadialProfile, RadialProfile)> {
        use ProfileFamily::*;
        let (ff, gf) = match self {
            Self::Zero => (Zero, Zero),
            Self::Bump4G => (Zero, Bump4),
            Self::Bump4F => (Bump4, Zero),
            Self::Bump4FG => (Bump4, Bump4),
        };
        Ok((
            make_profile(ff, amplitude, support, dr)?,
            make_profile(gf, amplitude, support, dr)?,
        ))
    }
}

impl FromStr for DataFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "bump4_g" | "bump4" => Ok(Self::Bump4G),
            "bump4_f" => Ok(Self::Bump4F),
            "bump4_fg" => Ok(Self::Bump4FG),
            other => Err(Error::Config(format!("unknown data family `{other}`"))),
        }
    }
}

impl fmt::Display for DataFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub dr: f64,
    pub cfl: f64,
    pub t_max: f64,
}

impl GridSpec {
    pub fn new(dr: f64, cfl: f64, t_max: f64) -> Result<Self> {
        if !(dr > 0.0) || !dr.is_finite() {
            return Err(Error::Config(format!("dr = {dr} must be positive")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {cfl} must lie in (0, 1]")));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Config(format!("t_max = {t_max} must be positive")));
        }
        Ok(Self { dr, cfl, t_max })
    }

    pub fn dt(&self) -> f64 {
        self.cfl * self.dr
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub nonlinearity: NonlinearityParams,
    pub family: DataFamily,
    pub amplitude: f64,
    pub support_radius: f64,
    pub epsilons: Vec<f64>,
    pub a: f64,
    pub grid: GridSpec,
    pub output_dir: PathBuf,
    /// Keep every `stride`-th time slice of the lattice.
    pub stride: usize,
    /// Radii of the full-resolution worldlines.
    pub probe_radii: Vec<f64>,
    /// Write the binary lattice dump in `solve`.
    pub dump_field: bool,
}

const REQUIRED_KEYS: [&str; 12] = [
    "p", "k", "extra_coeff", "family", "amplitude", "R", "epsilon", "a", "dr", "cfl", "t_max",
    "output_dir",
];
const OPTIONAL_KEYS: [&str; 3] = ["stride", "probe_r", "dump_field"];

impl RunConfig {
    /// Canonical desk-scale setup: `p = 3`, `g = bump4(1, R = 1)`, `a = 0.5`,
    /// `dr = 0.02`, `cfl = 0.9`, `t_max = 100`, worldline at `r = 1`.
    pub fn canonical() -> Self {
        Self {
            nonlinearity: NonlinearityParams { p: 3.0, k: 1.0, extra_coeff: 0.0 },
            family: DataFamily::Bump4G,
            amplitude: 1.0,
            support_radius: 1.0,
            epsilons: vec![0.1],
            a: 0.5,
            grid: GridSpec { dr: 0.02, cfl: 0.9, t_max: 100.0 },
            output_dir: PathBuf::from("out"),
            stride: 10,
            probe_radii: vec![1.0],
            dump_field: false,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        NonlinearityParams::new(self.nonlinearity.p, self.nonlinearity.k, self.nonlinearity.extra_coeff)?;
        GridSpec::new(self.grid.dr, self.grid.cfl, self.grid.t_max)?;
        self.nonlinearity.check_scaling_parameter(self.a)?;
        if !(self.support_radius > 0.0) || !self.support_radius.is_finite() {
            return Err(Error::Config("R must be positive".into()));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!("epsilon = {e} must be finite and nonnegative")));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if let Some(r) = self.probe_radii.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!("probe_r = {r} must be nonnegative")));
        }
        Ok(())
    }

    pub fn profiles(&self) -> Result<(RadialProfile, RadialProfile)> {
        self.family.profiles(self.amplitude, self.support_radius, self.grid.dr)
    }

    /// Serialize back to the `key = value` format.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        format!(
            "p = {}\nk = {}\nextra_coeff = {}\nfamily = {}\namplitude = {}\nR = {}\nepsilon = {}\na = {}\ndr = {}\ncfl = {}\nt_max = {}\noutput_dir = {}\nstride = {}\nprobe_r = {}\ndump_field = {}\n",
            self.nonlinearity.p,
            self.nonlinearity.k,
            self.nonlinearity.extra_coeff,
            self.family,
            self.amplitude,
            self.support_radius,
            list(&self.epsilons),
            self.a,
            self.grid.dr,
            self.grid.cfl,
            self.grid.t_max,
            self.output_dir.display(),
            self.stride,
            list(&self.probe_radii),
            self.dump_field,
        )
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

impl FromStr for RunConfig {
    type Err = Error;

    /// Flat `key = value` lines; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        let get = |key: &str| -> Result<&str> {
            entries
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
        };
        let opt = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());

        let cfg = RunConfig {
            nonlinearity: NonlinearityParams {
                p: parse_f64("p", get("p")?)?,
                k: parse_f64("k", get("k")?)?,
                extra_coeff: parse_f64("extra_coeff", get("extra_coeff")?)?,
            },
            family: get("family")?.parse()?,
            amplitude: parse_f64("amplitude", get("amplitude")?)?,
            support_radius: parse_f64("R", get("R")?)?,
            epsilons: parse_list("epsilon", get("epsilon")?)?,
            a: parse_f64("a", get("a")?)?,
            grid: GridSpec {
                dr: parse_f64("dr", get("dr")?)?,
                cfl: parse_f64("cfl", get("cfl")?)?,
                t_max: parse_f64("t_max", get("t_max")?)?,
            },
            output_dir: PathBuf::from(get("output_dir")?),
            stride: match opt("stride") {
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::Config(format!("key `stride`: `{s}` is not a positive integer")))?,
                None => 10,
            },
            probe_radii: match opt("probe_r") {
                Some(s) => parse_list("probe_r", s)?,
                None => vec![1.0],
            },
            dump_field: match opt("dump_field") {
                Some("true") | Some("1") => true,
                Some("false") | Some("0") | None => false,
                Some(other) => {
                    return Err(Error::Config(format!("key `dump_field`: `{other}` is not a boolean")))
                }
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_family_is_zero() {
        let p = make_profile(ProfileFamily::Zero, 3.0, 1.0, 0.01).unwrap();
        assert_eq!(p.len(), 101);
        assert!(p.samples.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bump4_samples() {
        let p = make_profile(ProfileFamily::Bump4, 1.0, 1.0, 0.25).unwrap();
        let expected = [1.0, 0.9375f64.powi(4), 0.31640625, 0.4375f64.powi(4), 0.0];
        assert_eq!(p.len(), 5);
        for (got, want) in p.samples.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!((p.samples[1] - 0.772_476_196).abs() < 1e-8);
        assert!((p.samples[3] - 0.036_636_353).abs() < 1e-8);
        assert_eq!(p.samples[4].to_bits(), 0.0f64.to_bits());

        let q = make_profile(ProfileFamily::Bump4, 2.0, 0.5, 0.25).unwrap();
        assert_eq!(q.samples, vec![2.0, 0.6328125, 0.0]);
    }

    #[test]
    fn bad_profile_arguments() {
        assert!(make_profile(ProfileFamily::Bump4, 1.0, 0.0, 0.1).is_err());
        assert!(make_profile(ProfileFamily::Bump4, 1.0, 1.0, -0.1).is_err());
        assert!("gauss".parse::<ProfileFamily>().is_err());
    }

    #[test]
    fn pow_s_conventions() {
        assert_eq!(pow_s(-2.0, 3.0), -8.0);
        assert_eq!(pow_s(-2.0, 4.0), 16.0);
        assert!((pow_s(-4.0, 2.5) + 32.0).abs() < 1e-12);
        assert!((pow_s(4.0, 2.5) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinearity_range_checks() {
        assert!(NonlinearityParams::new(2.0, 1.0, 0.0).is_err());
        assert!(NonlinearityParams::new(3.0, 0.0, 0.0).is_err());
        let nl = NonlinearityParams::new(3.0, 1.0, 1.0).unwrap();
        assert_eq!(nl.eval(0.5), 0.125 + 0.0625);
        assert!(nl.check_scaling_parameter(0.5).is_ok());
        assert!(nl.check_scaling_parameter(1.5).is_err());
        assert!(nl.check_scaling_parameter(0.0).is_err());
    }

    #[test]
    fn zero_data_norms() {
        let z = make_profile(ProfileFamily::Zero, 1.0, 1.0, 0.01).unwrap();
        let n = data_norms(&z, &z, 3.0).unwrap();
        assert_eq!((n.f0, n.f1, n.g0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn data_norms_mismatched_grids() {
        let a = make_profile(ProfileFamily::Bump4, 1.0, 1.0, 0.01).unwrap();
        let b = make_profile(ProfileFamily::Bump4, 1.0, 1.0, 0.02).unwrap();
        assert!(matches!(data_norms(&a, &b, 3.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = RunConfig::canonical();
        let parsed: RunConfig = cfg.to_text().parse().unwrap();
        assert_eq!(parsed, cfg);

        let text = cfg.to_text();
        let bad_a = text.replace("a = 0.5", "a = 2");
        assert!(matches!(bad_a.parse::<RunConfig>(), Err(Error::Config(_))));
        let unknown = format!("{text}colour = red\n");
        assert!(unknown.parse::<RunConfig>().is_err());
        let missing = text.replace("cfl = 0.9\n", "");
        assert!(missing.parse::<RunConfig>().is_err());
        let bad_cfl = text.replace("cfl = 0.9", "cfl = 1.2");
        assert!(bad_cfl.parse::<RunConfig>().is_err());
    }

    #[test]
    fn config_comments_and_lists() {
        let text = "# canonical\np = 3\nk = 1 # gap\nextra_coeff = 0\nfamily = bump4_g\namplitude = 1\nR = 1\n\
                    epsilon = 0.025, 0.05,0.1\na = 0.5\ndr = 0.02\ncfl = 0.9\nt_max = 100\noutput_dir = out\n";
        let cfg: RunConfig = text.parse().unwrap();
        assert_eq!(cfg.epsilons, vec![0.025, 0.05, 0.1]);
        assert_eq!(cfg.stride, 10);
        assert_eq!(cfg.probe_radii, vec![1.0]);
    }
}
