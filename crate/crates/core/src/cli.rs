//! Command orchestration and on-disk artifacts.
//!
//! Every command writes into `<output_dir>/<command>/`: one or more CSV files
//! and a `manifest.json` naming each of them. Floats are written with 17
//! significant digits so that reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{self, Region};
use crate::constants::{build_model, moment_ck, AsymptoticModel};
use crate::error::{Error, Result};
use crate::evolve::{
    convergence_order, evolve_full, evolve_remainder, EvolveParams, Field2D, LadderField, SCHEME_VERSION,
};
use crate::greenfn::{shell_deficit, DuhamelQuadrature};
use crate::linear::{build_h, HProfile};
use crate::model::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Predict,
    Compare,
    Scaling,
    Convergence,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Predict => "predict",
            Command::Compare => "compare",
            Command::Scaling => "scaling",
            Command::Convergence => "convergence",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Command::Solve,
            "predict" => Command::Predict,
            "compare" => Command::Compare,
            "scaling" => Command::Scaling,
            "convergence" => Command::Convergence,
            other => return Err(Error::Config(format!("unknown command `{other}`"))),
        })
    }
}

/// Derived lattice parameters, identical for every run of one config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedGrid {
    pub dr: f64,
    pub dt: f64,
    pub r_max: f64,
    pub nr: usize,
    pub steps: usize,
    pub stride: usize,
}

impl DerivedGrid {
    fn from_config(cfg: &RunConfig) -> Self {
        let dt = cfg.grid.dt();
        let r_max = 3.0 * cfg.support_radius + cfg.grid.t_max;
        let nr = (r_max / cfg.grid.dr).ceil() as usize + 1;
        let steps = (cfg.grid.t_max / dt - 1e-9).ceil().max(1.0) as usize;
        Self { dr: cfg.grid.dr, dt, r_max: (nr - 1) as f64 * cfg.grid.dr, nr, steps, stride: cfg.stride }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    /// Data rows (header excluded); `None` for non-tabular files.
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    pub scheme: String,
    pub config: Vec<(String, String)>,
    pub grid: DerivedGrid,
    pub runtime_seconds: f64,
    pub files: Vec<FileEntry>,
}

/// In-memory CSV table.
struct Table {
    text: String,
    rows: usize,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n", rows: 0 }
    }

    fn row(&mut self, cells: &[Cell]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(v) => write!(self.text, "{v:.16e}"),
                Cell::S(s) => write!(self.text, "{s}"),
            }
            .expect("writing to a String");
        }
        self.text.push('\n');
        self.rows += 1;
    }
}

enum Cell<'a> {
    F(f64),
    S(&'a str),
}

struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Output {
    fn create(dir: PathBuf) -> Result<Self> {
        if dir.exists() {
            // stale artifacts from an earlier run would be missing from the manifest
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn table(&mut self, name: &str, table: Table) -> Result<()> {
        fs::write(self.dir.join(name), table.text)?;
        self.files.push(FileEntry { name: name.to_string(), rows: Some(table.rows) });
        Ok(())
    }

    fn binary(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry { name: name.to_string(), rows: None });
        Ok(())
    }
}

/// Run one command; artifacts go to `<out or config.output_dir>/<command>/`.
pub fn run_command(command: Command, config_path: &Path, out: Option<&Path>) -> Result<RunManifest> {
    let mut cfg = RunConfig::from_path(config_path)?;
    if let Some(dir) = out {
        cfg.output_dir = dir.to_path_buf();
    }
    run_with_config(command, &cfg)
}

pub fn run_with_config(command: Command, cfg: &RunConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = Output::create(cfg.output_dir.join(command.as_str()))?;
    let (f, g) = cfg.profiles()?;
    let h = build_h(&f, &g)?;
    match command {
        Command::Solve => solve(cfg, &h, &mut out)?,
        Command::Predict => predict(cfg, &h, &mut out)?,
        Command::Compare => compare(cfg, &h, &mut out)?,
        Command::Scaling => scaling(cfg, &h, &mut out)?,
        Command::Convergence => convergence(cfg, &h, &mut out)?,
    }
    out.files.push(FileEntry { name: "manifest.json".into(), rows: None });
    let config = cfg
        .to_text()
        .lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let manifest = RunManifest {
        command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        scheme: SCHEME_VERSION.to_string(),
        config,
        grid: DerivedGrid::from_config(cfg),
        runtime_seconds: start.elapsed().as_secs_f64(),
        files: out.files.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    fs::write(out.dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn solve(cfg: &RunConfig, h: &HProfile, out: &mut Output) -> Result<()> {
    let runs = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let params = EvolveParams::from_config(cfg, eps);
            let (u, w) = rayon::join(|| evolve_full(&params, h), || evolve_remainder(&params, h));
            Ok((eps, u?, w?))
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, (eps, u, w)) in runs.iter().enumerate() {
        for (k, (lu, lw)) in u.worldlines.iter().zip(&w.worldlines).enumerate() {
            let mut t = Table::new(&["epsilon", "r", "t", "u", "w"]);
            for (n, (uv, wv)) in lu.values.iter().zip(&lw.values).enumerate() {
                t.row(&[Cell::F(*eps), Cell::F(lu.r), Cell::F(lu.t(n)), Cell::F(*uv), Cell::F(*wv)]);
            }
            out.table(&format!("worldline_eps{i}_r{k}.csv"), t)?;
        }
        if cfg.dump_field {
            out.binary(&format!("field_u_eps{i}.bin"), &dump_bytes(u))?;
            out.binary(&format!("field_w_eps{i}.bin"), &dump_bytes(w))?;
        }
    }
    Ok(())
}

/// Little-endian dump: `dr: f64, dt: f64, nt: u64, nr: u64`, then the
/// `nt × nr` samples row-major in `t`. `dt` is the spacing of stored slices.
pub fn dump_bytes(field: &Field2D) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(32 + 8 * field.values.len());
    bytes.extend_from_slice(&field.dr.to_le_bytes());
    bytes.extend_from_slice(&field.slice_dt().to_le_bytes());
    bytes.extend_from_slice(&(field.nt as u64).to_le_bytes());
    bytes.extend_from_slice(&(field.nr as u64).to_le_bytes());
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn model_for(cfg: &RunConfig, h: &HProfile, eps: f64) -> Result<AsymptoticModel> {
    build_model(h, &cfg.nonlinearity, eps, cfg.a)
}

fn predict(cfg: &RunConfig, h: &HProfile, out: &mut Output) -> Result<()> {
    let mut ht = Table::new(&["x", "h", "h_prime"]);
    for (x, v, d) in h.rows() {
        ht.row(&[Cell::F(x), Cell::F(v), Cell::F(d)]);
    }
    out.table("h.csv", ht)?;

    let model = model_for(cfg, h, cfg.epsilons[0])?;
    let mut ct = Table::new(&["quantity", "value"]);
    let flag = if model.leading_tail_vanishes() { 1.0 } else { 0.0 };
    for (name, v) in [
        ("C_1", moment_ck(h, 1.0)?),
        ("C_p", model.c_p),
        ("A_p", model.a_p),
        ("abs_moment", model.abs_moment),
        ("b", model.b()),
        ("lambda", model.lambda),
        ("lambda0", model.lambda0),
        ("tail_coefficient", model.fixed_r_tail_coefficient()),
        ("leading_tail_vanishes", flag),
    ] {
        ct.row(&[Cell::S(name), Cell::F(v)]);
    }
    out.table("constants.csv", ct)?;

    let mut pt = Table::new(&["epsilon", "r", "tail_amplitude", "window_lo", "window_hi"]);
    for &eps in &cfg.epsilons {
        let m = model_for(cfg, h, eps)?;
        for &r in &cfg.probe_radii {
            let (lo, hi) = analysis::default_fit_window(eps, cfg.a, r, cfg.support_radius, cfg.grid.t_max);
            pt.row(&[Cell::F(eps), Cell::F(r), Cell::F(m.predicted_tail_amplitude()), Cell::F(lo), Cell::F(hi)]);
        }
    }
    out.table("predictions.csv", pt)?;
    Ok(())
}

/// Deficit probes `(t, r)`, all inside `t − r > 1`.
pub const DEFICIT_PROBES: [(f64, f64); 3] = [(5.0, 1.0), (10.0, 2.0), (20.0, 1.0)];

/// At most this many samples along each axis of the residual CSV.
const RESIDUAL_SAMPLES: usize = 200;

fn compare(cfg: &RunConfig, h: &HProfile, out: &mut Output) -> Result<()> {
    let model0 = model_for(cfg, h, cfg.epsilons[0])?;
    if model0.leading_tail_vanishes() {
        return Err(Error::Degenerate(format!(
            "C_p = {:e} vanishes against ∫|h|^p = {:e}; the ε^p tail is absent, refusing to fit",
            model0.c_p, model0.abs_moment
        )));
    }
    let runs = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let model = model_for(cfg, h, eps)?;
            let w = evolve_remainder(&EvolveParams::from_config(cfg, eps), h)?;
            Ok((model, w))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fits = Table::new(&[
        "epsilon", "r", "exponent", "amplitude", "predicted_amplitude", "ratio", "window_lo", "window_hi",
        "max_rel_residual",
    ]);
    for (i, (model, w)) in runs.iter().enumerate() {
        let eps = model.epsilon;
        let rows = analysis::theorem_residual_rows(w, model, h);
        let n_stride = w.nt.div_ceil(RESIDUAL_SAMPLES).max(1);
        let j_stride = w.nr.div_ceil(RESIDUAL_SAMPLES).max(1);
        let mut rt = Table::new(&["t", "r", "u", "prediction", "residual", "weight"]);
        for row in &rows {
            let n = (row.t / w.slice_dt()).round() as usize;
            let j = (row.r / w.dr).round() as usize;
            if n.is_multiple_of(n_stride) && j.is_multiple_of(j_stride) {
                rt.row(&[
                    Cell::F(row.t),
                    Cell::F(row.r),
                    Cell::F(row.u),
                    Cell::F(row.prediction),
                    Cell::F(row.residual),
                    Cell::F(row.weight),
                ]);
            }
        }
        out.table(&format!("residual_eps{i}.csv"), rt)?;

        if eps > 0.0 {
            let quad = DuhamelQuadrature::for_scaled_wave(h, eps, cfg.a);
            let report = shell_deficit(model, h, eps, &DEFICIT_PROBES, &quad)?;
            let mut dt = Table::new(&["epsilon", "a", "probe_t", "probe_r", "deficit", "weight"]);
            for row in &report.rows {
                dt.row(&[
                    Cell::F(eps),
                    Cell::F(cfg.a),
                    Cell::F(row.t),
                    Cell::F(row.r),
                    Cell::F(row.deficit),
                    Cell::F(row.weight),
                ]);
            }
            out.table(&format!("deficit_eps{i}.csv"), dt)?;

            for line in &w.worldlines {
                let window = analysis::default_fit_window(eps, cfg.a, line.r, cfg.support_radius, cfg.grid.t_max);
                let fit = analysis::fit_worldline(line, window, cfg.support_radius)?;
                let predicted = model.predicted_tail_amplitude();
                fits.row(&[
                    Cell::F(eps),
                    Cell::F(line.r),
                    Cell::F(fit.exponent),
                    Cell::F(fit.amplitude),
                    Cell::F(predicted),
                    Cell::F(fit.amplitude / predicted),
                    Cell::F(fit.window.0),
                    Cell::F(fit.window.1),
                    Cell::F(fit.max_rel_residual),
                ]);
            }
        }
    }
    out.table("tail_fits.csv", fits)?;
    Ok(())
}

/// Per-ε quantities of the scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSample {
    pub epsilon: f64,
    /// `max (1+t+r)(1+|t−r|)^(p−2)·|w|` over the lattice.
    pub max_weighted_w: f64,
    /// Same weight on `|u − ε·u0 − ε^p·W|` over `t − r > ε^−a`.
    pub theorem_residual: f64,
    /// Restricted weighted distance `‖W_ε − W‖` over `t − r > 1`.
    pub rescaled_distance: f64,
}

pub fn scaling_sample(cfg: &RunConfig, h: &HProfile, eps: f64) -> Result<ScalingSample> {
    let model = model_for(cfg, h, eps)?;
    let w = evolve_remainder(&EvolveParams::from_config(cfg, eps), h)?;
    Ok(ScalingSample {
        epsilon: eps,
        max_weighted_w: analysis::weighted_norm(&w, model.p - 1.0, Region::Full)?,
        theorem_residual: analysis::theorem_residual(&w, &model, h)?,
        rescaled_distance: analysis::rescaled_distance(&w, &model)?,
    })
}

fn scaling(cfg: &RunConfig, h: &HProfile, out: &mut Output) -> Result<()> {
    let samples = cfg
        .epsilons
        .par_iter()
        .map(|&eps| scaling_sample(cfg, h, eps))
        .collect::<Result<Vec<_>>>()?;
    type Getter = fn(&ScalingSample) -> f64;
    let quantities: [(&str, Getter); 3] = [
        ("max_weighted_w", |s| s.max_weighted_w),
        ("theorem_residual", |s| s.theorem_residual),
        ("rescaled_distance", |s| s.rescaled_distance),
    ];
    let mut t = Table::new(&["epsilon", "quantity_name", "value", "fitted_slope"]);
    for (name, get) in quantities {
        let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.epsilon, get(s))).collect();
        let slope = analysis::scaling_fit(&points)?;
        for (eps, v) in points {
            t.row(&[Cell::F(eps), Cell::S(name), Cell::F(v), Cell::F(slope)]);
        }
    }
    out.table("scaling.csv", t)?;
    Ok(())
}

/// Probe time of the Richardson ladders.
const LADDER_T: f64 = 10.0;

fn convergence(cfg: &RunConfig, h: &HProfile, out: &mut Output) -> Result<()> {
    let probe_t = LADDER_T.min(cfg.grid.t_max);
    let mut jobs = Vec::new();
    for &eps in &cfg.epsilons {
        for &r in &cfg.probe_radii {
            jobs.push(("linear", eps, r));
            jobs.push(("full", eps, r));
            jobs.push(("remainder", eps, r));
        }
    }
    let reports = jobs
        .par_iter()
        .map(|&(name, eps, r)| {
            let base = EvolveParams::from_config(cfg, eps);
            let (params, field) = match name {
                "linear" => (base.linear(), LadderField::Full),
                "full" => (base, LadderField::Full),
                _ => (base, LadderField::Remainder),
            };
            match convergence_order(&params, h, (probe_t, r), field) {
                Ok(rep) => Ok(Some(rep)),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    // Inside the cone (t − r > R) the free field vanishes, so the linear and
    // full-u ladders there only measure scheme wake; flag those rows.
    let mut t = Table::new(&[
        "field", "epsilon", "probe_t", "probe_r", "inside_cone", "dr", "value_dr", "value_dr2", "value_dr4", "order",
    ]);
    for (&(name, eps, r), rep) in jobs.iter().zip(reports) {
        let (values, order) = rep.map_or(([f64::NAN; 3], f64::NAN), |rep| (rep.values, rep.order));
        t.row(&[
            Cell::S(name),
            Cell::F(eps),
            Cell::F(probe_t),
            Cell::F(r),
            Cell::S(if probe_t - r > cfg.support_radius { "1" } else { "0" }),
            Cell::F(cfg.grid.dr),
            Cell::F(values[0]),
            Cell::F(values[1]),
            Cell::F(values[2]),
            Cell::F(order),
        ]);
    }
    out.table("convergence.csv", t)?;
    Ok(())
}

/// One-line failure report, `error[<kind>]: <message>`.
pub fn error_line(err: &Error) -> String {
    format!("error[{}]: {}", err.kind(), err.to_string().replace('\n', " "))
}
