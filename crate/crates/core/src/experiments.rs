//! Run configuration and the experiment drivers behind the command line:
//! temporal and spatial convergence sweeps, the unforced stability run and
//! free runs with optional field dumps.
//!
//! Config files are flat `key = value` text; `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `experiment` | `converge-time`, `converge-space`, `stability` or `run` | from the subcommand |
//! | `epsilon`, `d_coeff`, `sigma`, `eta` | model coefficients | `1` |
//! | `n` | cells per side, comma-separated list | per experiment |
//! | `tau` | time steps, list; fractions like `1/10` allowed | per experiment |
//! | `t_end` | final time | `1` |
//! | `profile` | initial data of `run`: `stability`, `mms` or `zero` | `stability` |
//! | `initial_potential_with_epsilon` | scale the initial Poisson solve by `epsilon` | `false` |
//! | `dump_steps` | steps whose fields `run` writes out | none |
//! | `quad_degree_errors` | quadrature degree of the final L2 errors | `8` |
//! | `out` | output directory | `out` |
//!
//! Per-experiment defaults for `n` and `tau`: converge-time `64` and
//! `1/5, 1/10, 1/20, 1/40`; converge-space `8, 16, 32` and `1/200`;
//! stability `50` and `1/500`; run `16` and `1/100`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use log::info;

use crate::diagnostics::{eoc, l2_error_with_degree, DiagnosticsLog};
use crate::elements::{quadrature, ERROR_DEGREE};
use crate::error::{Error, Result};
use crate::mesh::Rect;
use crate::mms::{forcing, trig_case, stability_profile, ManufacturedCase};
use crate::scheme::{Discretization, EhdState, ForcingSet, InitialData, ModelParams, StepOptions, Stepper, TimeGrid};
use crate::spaces::FieldRef;

/// Slack on energy growth relative to `E^1`.
pub const ENERGY_TOLERANCE: f64 = 1e-10;
pub const CHARGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ConvergeTime,
    ConvergeSpace,
    Stability,
    Run,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ConvergeTime => "converge-time",
            Experiment::ConvergeSpace => "converge-space",
            Experiment::Stability => "stability",
            Experiment::Run => "run",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converge-time" => Ok(Experiment::ConvergeTime),
            "converge-space" => Ok(Experiment::ConvergeSpace),
            "stability" => Ok(Experiment::Stability),
            "run" => Ok(Experiment::Run),
            _ => Err(Error::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Stability,
    Manufactured,
    Zero,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stability" => Ok(Profile::Stability),
            "mms" => Ok(Profile::Manufactured),
            "zero" => Ok(Profile::Zero),
            _ => Err(Error::Config(format!("unknown profile {s:?} (stability, mms, zero)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    pub n: Vec<usize>,
    pub tau: Vec<f64>,
    pub t_end: f64,
    pub profile: Profile,
    pub initial_potential_with_epsilon: bool,
    pub dump_steps: Vec<usize>,
    pub quad_degree_errors: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (n, tau) = match experiment {
            Experiment::ConvergeTime => (vec![64], vec![1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0, 1.0 / 40.0]),
            Experiment::ConvergeSpace => (vec![8, 16, 32], vec![1.0 / 200.0]),
            Experiment::Stability => (vec![50], vec![1.0 / 500.0]),
            Experiment::Run => (vec![16], vec![1.0 / 100.0]),
        };
        Self {
            experiment,
            params: ModelParams::default(),
            n,
            tau,
            t_end: 1.0,
            profile: Profile::Stability,
            initial_potential_with_epsilon: false,
            dump_steps: Vec::new(),
            quad_degree_errors: ERROR_DEGREE,
            out: PathBuf::from("out"),
        }
    }

    /// Parses `text` over the defaults of `experiment`.
    pub fn parse(text: &str, experiment: Experiment) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: Error| Error::Config(format!("line {}: {key}: {e}", lineno + 1));
            match key {
                "experiment" => {
                    let e: Experiment = value.parse().map_err(ctx)?;
                    if e != experiment {
                        return Err(Error::Config(format!("config is for {}, not {}", e.name(), experiment.name())));
                    }
                }
                "epsilon" => cfg.params.epsilon = parse_real(value).map_err(ctx)?,
                "d_coeff" => cfg.params.d_coeff = parse_real(value).map_err(ctx)?,
                "sigma" => cfg.params.sigma = parse_real(value).map_err(ctx)?,
                "eta" => cfg.params.eta = parse_real(value).map_err(ctx)?,
                "n" => cfg.n = parse_list(value, |s| s.parse::<usize>().map_err(|e| Error::Config(e.to_string()))).map_err(ctx)?,
                "tau" => cfg.tau = parse_list(value, parse_real).map_err(ctx)?,
                "t_end" => cfg.t_end = parse_real(value).map_err(ctx)?,
                "profile" => cfg.profile = value.parse().map_err(ctx)?,
                "initial_potential_with_epsilon" => cfg.initial_potential_with_epsilon = parse_bool(value).map_err(ctx)?,
                "dump_steps" => {
                    cfg.dump_steps = parse_list(value, |s| s.parse::<usize>().map_err(|e| Error::Config(e.to_string()))).map_err(ctx)?
                }
                "quad_degree_errors" => cfg.quad_degree_errors = value.parse().map_err(|e: std::num::ParseIntError| ctx(Error::Config(e.to_string())))?,
                "out" => cfg.out = PathBuf::from(value),
                _ => return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, experiment)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::Config("n needs at least one positive entry".into()));
        }
        if self.tau.is_empty() {
            return Err(Error::Config("tau needs at least one entry".into()));
        }
        for &tau in &self.tau {
            TimeGrid::new(tau, self.t_end).map_err(|e| Error::Config(e.to_string()))?;
        }
        quadrature(self.quad_degree_errors).map_err(|e| Error::Config(e.to_string()))?;
        match self.experiment {
            Experiment::ConvergeTime if self.tau.len() < 2 => Err(Error::Config("converge-time needs at least two tau values".into())),
            Experiment::ConvergeSpace if self.n.len() < 2 => Err(Error::Config("converge-space needs at least two n values".into())),
            _ => Ok(()),
        }
    }

    fn options(&self) -> StepOptions {
        StepOptions {
            initial_potential_with_epsilon: self.initial_potential_with_epsilon,
            frozen_velocity: false,
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("not a number: {s:?}"));
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("not a boolean: {s:?}"))),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|x| item(x.trim())).collect()
}

/// Final-time errors and the per-step log of a manufactured-solution run.
#[derive(Debug, Clone)]
pub struct ManufacturedRun {
    pub errors: [f64; 3],
    pub log: DiagnosticsLog,
}

/// Runs the built-in manufactured case on an `n x n` mesh to `t_end`.
pub fn manufactured_run(n: usize, tau: f64, t_end: f64, params: ModelParams, options: StepOptions, quad_degree: usize) -> Result<ManufacturedRun> {
    let case = trig_case();
    let grid = TimeGrid::new(tau, t_end)?;
    let disc = Arc::new(Discretization::square(n, case.domain)?);
    let mut stepper = Stepper::new(Arc::clone(&disc), params, tau, forcing(&case, &params), options)?;
    let s0 = stepper.init_state(&case.initial_data(0.0))?;
    let (state, log) = stepper.run(s0, grid.steps, None)?;
    let errors = errors_with_degree(&disc, &state, &case, quad_degree)?;
    Ok(ManufacturedRun { errors, log })
}

fn errors_with_degree(disc: &Discretization, state: &EhdState, case: &ManufacturedCase, degree: usize) -> Result<[f64; 3]> {
    Ok([
        l2_error_with_degree(&disc.scalar, &state.phi, FieldRef::Scalar(&*case.phi.value), state.t, degree)?,
        l2_error_with_degree(&disc.scalar, &state.rho, FieldRef::Scalar(&*case.rho.value), state.t, degree)?,
        l2_error_with_degree(&disc.velocity, &state.u, FieldRef::Vector(&*case.u.value), state.t, degree)?,
    ])
}

/// The unforced run from the stability profiles.
pub fn stability_run(n: usize, tau: f64, t_end: f64, params: ModelParams, options: StepOptions) -> Result<DiagnosticsLog> {
    let grid = TimeGrid::new(tau, t_end)?;
    let disc = Arc::new(Discretization::square(n, Rect::two_pi_square())?);
    let mut stepper = Stepper::new(disc, params, tau, ForcingSet::none(), options)?;
    let s0 = stepper.init_state(&stability_profile())?;
    Ok(stepper.run(s0, grid.steps, None)?.1)
}

/// Energy growth and charge violations of an unforced log, as messages.
pub fn stability_violations(log: &DiagnosticsLog) -> Vec<String> {
    let mut out = Vec::new();
    let e1 = log.records.iter().find_map(|r| r.energy).unwrap_or(0.0);
    for w in log.records.windows(2) {
        if let (Some(a), Some(b)) = (w[0].energy, w[1].energy) {
            if b - a > ENERGY_TOLERANCE * e1 {
                out.push(format!("energy grew by {:e} at step {}", b - a, w[1].n));
            }
        }
    }
    for r in &log.records {
        if r.charge.abs() > CHARGE_TOLERANCE {
            out.push(format!("charge {:e} at step {}", r.charge, r.n));
        }
    }
    out
}

/// Outcome of an experiment: the CSV tables written and any failed checks.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<(PathBuf, String)>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn write(&self) -> Result<()> {
        for (path, body) in &self.files {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, body)?;
        }
        Ok(())
    }
}

pub const CONVERGENCE_HEADER_TAIL: &str = "e_phi,rate_phi,e_rho,rate_rho,e_u,rate_u,status";
pub const STABILITY_HEADER: &str = "n,t,energy,charge";
pub const RUN_HEADER: &str = "n,t,energy,charge,div_residual,e_phi,e_rho,e_u";
pub const FIELDS_HEADER: &str = "x,y,phi,rho,u_x,u_y,p";

fn num(v: f64) -> String {
    format!("{v:.9e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows `(param, result)` to a convergence table; rates are taken between
/// consecutive successful rows.
fn convergence_table(first: &str, rows: &[(f64, Result<[f64; 3]>)]) -> (String, Vec<String>) {
    let mut s = format!("{first},{CONVERGENCE_HEADER_TAIL}\n");
    let mut failures = Vec::new();
    let mut prev: Option<(f64, [f64; 3])> = None;
    for (p, r) in rows {
        match r {
            Ok(e) => {
                let rates = prev.map(|(pp, pe)| [0, 1, 2].map(|k| eoc(&[pe[k], e[k]], &[pp, *p])[0]));
                write!(s, "{}", num(*p)).unwrap();
                for k in 0..3 {
                    write!(s, ",{},{}", num(e[k]), opt(rates.map(|r| r[k]))).unwrap();
                }
                s.push_str(",ok\n");
                prev = Some((*p, *e));
            }
            Err(err) => {
                let msg = format!("error: {err}");
                failures.push(format!("{first} = {p}: {err}"));
                writeln!(s, "{},,,,,,,{}", num(*p), csv_field(&msg)).unwrap();
                prev = None;
            }
        }
    }
    (s, failures)
}

pub fn converge_time(cfg: &RunConfig) -> Report {
    let n = cfg.n[0];
    let rows: Vec<(f64, Result<[f64; 3]>)> = cfg
        .tau
        .iter()
        .map(|&tau| {
            info!("converge-time: n = {n}, tau = {tau}");
            (tau, manufactured_run(n, tau, cfg.t_end, cfg.params, cfg.options(), cfg.quad_degree_errors).map(|r| r.errors))
        })
        .collect();
    let (body, failures) = convergence_table("tau", &rows);
    Report {
        files: vec![(cfg.out.join("converge_time.csv"), body)],
        failures,
    }
}

pub fn converge_space(cfg: &RunConfig) -> Report {
    let tau = cfg.tau[0];
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let width = Rect::two_pi_square().width();
    let rows: Vec<(f64, Result<[f64; 3]>)> = ns
        .iter()
        .map(|&n| {
            info!("converge-space: n = {n}, tau = {tau}");
            (width / n as f64, manufactured_run(n, tau, cfg.t_end, cfg.params, cfg.options(), cfg.quad_degree_errors).map(|r| r.errors))
        })
        .collect();
    let (body, failures) = convergence_table("h", &rows);
    Report {
        files: vec![(cfg.out.join("converge_space.csv"), body)],
        failures,
    }
}

pub fn stability(cfg: &RunConfig) -> Result<Report> {
    let log = stability_run(cfg.n[0], cfg.tau[0], cfg.t_end, cfg.params, cfg.options())?;
    let mut s = format!("{STABILITY_HEADER}\n");
    for r in &log.records {
        writeln!(s, "{},{},{},{}", r.n, num(r.t), opt(r.energy), num(r.charge)).unwrap();
    }
    Ok(Report {
        files: vec![(cfg.out.join("stability.csv"), s)],
        failures: stability_violations(&log),
    })
}

/// A general run from one of the built-in profiles; writes the time series
/// and the fields at `dump_steps`.
pub fn free_run(cfg: &RunConfig) -> Result<Report> {
    let (n, tau) = (cfg.n[0], cfg.tau[0]);
    let grid = TimeGrid::new(tau, cfg.t_end)?;
    if let Some(&s) = cfg.dump_steps.iter().find(|&&s| s > grid.steps) {
        return Err(Error::Config(format!("dump step {s} beyond the last step {}", grid.steps)));
    }
    let case = trig_case();
    let (data, forcing_set, exact): (InitialData, ForcingSet, Option<&ManufacturedCase>) = match cfg.profile {
        Profile::Stability => (stability_profile(), ForcingSet::none(), None),
        Profile::Zero => (InitialData::zero(), ForcingSet::none(), None),
        Profile::Manufactured => (case.initial_data(0.0), forcing(&case, &cfg.params), Some(&case)),
    };
    let disc = Arc::new(Discretization::square(n, Rect::two_pi_square())?);
    let mut stepper = Stepper::new(Arc::clone(&disc), cfg.params, tau, forcing_set, cfg.options())?;
    let mut state = stepper.init_state(&data)?;

    let mut files = Vec::new();
    let mut series = format!("{RUN_HEADER}\n");
    for k in 0..=grid.steps {
        if k > 0 {
            let (n0, t0) = (state.n, state.t);
            state = stepper.step(&state).map_err(|e| Error::Step {
                step: n0 + 1,
                time: t0 + tau,
                source: Box::new(e),
            })?;
        }
        let r = stepper.record(&state, exact)?;
        let e = r.errors.map(|e| e.map(Some)).unwrap_or([None; 3]);
        writeln!(
            series,
            "{},{},{},{},{},{},{},{}",
            r.n,
            num(r.t),
            opt(r.energy),
            num(r.charge),
            num(r.div_residual),
            opt(e[0]),
            opt(e[1]),
            opt(e[2])
        )
        .unwrap();
        if cfg.dump_steps.contains(&k) {
            files.push((cfg.out.join(format!("fields_step_{k}.csv")), field_dump(&disc, &state)));
        }
    }
    files.insert(0, (cfg.out.join("run.csv"), series));
    Ok(Report {
        files,
        failures: Vec::new(),
    })
}

/// Field values at the P2 nodes; the P1 pressure is evaluated there exactly.
pub fn field_dump(disc: &Discretization, state: &EhdState) -> String {
    let mesh = &disc.mesh;
    let nv = mesh.n_vertices();
    let mut s = format!("{FIELDS_HEADER}\n");
    for (k, x) in disc.scalar.nodes.iter().enumerate() {
        let p = if k < nv {
            state.p[k]
        } else {
            let [a, b] = mesh.edges[k - nv];
            0.5 * (state.p[a] + state.p[b])
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(x[0]),
            num(x[1]),
            num(state.phi[k]),
            num(state.rho[k]),
            num(state.u[disc.velocity.dof(k, 0)]),
            num(state.u[disc.velocity.dof(k, 1)]),
            num(p)
        )
        .unwrap();
    }
    s
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &RunConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::ConvergeTime => Ok(converge_time(cfg)),
        Experiment::ConvergeSpace => Ok(converge_space(cfg)),
        Experiment::Stability => stability(cfg),
        Experiment::Run => free_run(cfg),
    }
}
