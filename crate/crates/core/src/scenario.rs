//! JSON scenarios, their validation, and the artifacts a run writes to disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cahn_hoffman::{balance_identity, boundary_onset, classify_facet, FacetReport, BORDER_TOL};
use crate::dynamics::evolve_exact;
use crate::error::{Error, Result};
use crate::geometry::{Chi, DomainConfig, DomainSpec, FacetSpec};
use crate::pde::{compare_csv, compare_exact, run_flow_diagnosed};
use crate::profile::Profile;
use crate::selftest;
use crate::state::{FlowConfig, State};
use crate::trajectory::{fmt_f64, Trajectory};

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "FACETFLOW_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classify,
    EvolveExact,
    EvolvePde,
    Compare,
    Onset,
    Sweep,
    Selftest,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Classify => "classify",
            Mode::EvolveExact => "evolve_exact",
            Mode::EvolvePde => "evolve_pde",
            Mode::Compare => "compare",
            Mode::Onset => "onset",
            Mode::Sweep => "sweep",
            Mode::Selftest => "selftest",
        }
    }
}

/// Cell-centred samples `lo + (hi − lo)(i + ½)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * (i as f64 + 0.5) / self.n as f64)
            .collect()
    }
}

/// Phase-diagram grid for annulus facets `[r0, ρ]` touching the inner circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub r0: Axis,
    /// `ρ_j = r0 + (rho_max − r0)(j + 1)/rho_n`, so `ρ ∈ (r0, rho_max]`.
    pub rho_max: f64,
    pub rho_n: usize,
    #[serde(default = "default_taus")]
    pub tau: Vec<f64>,
    /// Outer radius of the annulus; defaults to `rho_max + 1`.
    #[serde(default, rename = "R")]
    pub outer: Option<f64>,
    #[serde(default = "default_chi")]
    pub chi: Chi,
}

fn default_taus() -> Vec<f64> {
    vec![1.0]
}

fn default_chi() -> Chi {
    Chi::Plus
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_true")]
    pub trajectory: bool,
    /// Grid values of `u` at every step.
    #[serde(default)]
    pub profiles: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            trajectory: true,
            profiles: false,
        }
    }
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: Mode,
    pub domain: Option<DomainSpec>,
    pub facets: Vec<FacetSpec>,
    pub trace_matched: bool,
    pub chi: Option<Chi>,
    pub initial: Option<Profile>,
    pub flow: FlowConfig,
    pub sweep: Option<SweepGrid>,
    pub outputs: Outputs,
    pub seed: u64,
}

const KEYS: [&str; 11] = [
    "mode",
    "domain",
    "facet",
    "facets",
    "trace_matched",
    "chi",
    "initial",
    "flow",
    "sweep",
    "outputs",
    "seed",
];

fn parse_err(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

fn section<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| parse_err(key, e)),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path, mode: Option<Mode>) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, mode)
}

/// Parses scenario JSON; `mode` (from the command line) must agree with the file's mode if both
/// are given.
pub fn parse_scenario(text: &str, mode: Option<Mode>) -> Result<Scenario> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e))?;
    let obj = root.as_object().ok_or_else(|| parse_err("top level", "expected a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(parse_err(k.as_str(), "unknown field"));
    }
    let file_mode: Option<Mode> = section(obj, "mode")?;
    let mode = match (file_mode, mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Validation(format!(
                "scenario mode {} does not match the requested {}",
                a.as_str(),
                b.as_str()
            )))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(Error::Validation("mode required".into())),
    };
    let domain = match section::<DomainConfig>(obj, "domain")? {
        Some(c) => Some(DomainSpec::new(c.kind, c.gamma, c.n).map_err(|e| Error::Validation(format!("domain: {e}")))?),
        None => None,
    };
    let mut facets: Vec<FacetSpec> = section::<FacetSpec>(obj, "facet")?.into_iter().collect();
    facets.extend(section::<Vec<FacetSpec>>(obj, "facets")?.unwrap_or_default());
    let flow = parse_flow(obj.get("flow"), mode)?;
    let sc = Scenario {
        mode,
        domain,
        facets,
        trace_matched: section(obj, "trace_matched")?.unwrap_or(true),
        chi: section(obj, "chi")?,
        initial: section(obj, "initial")?,
        flow,
        sweep: section(obj, "sweep")?,
        outputs: section(obj, "outputs")?.unwrap_or_default(),
        seed: section(obj, "seed")?.unwrap_or(0),
    };
    sc.validate()?;
    Ok(sc)
}

fn parse_flow(v: Option<&Value>, mode: Mode) -> Result<FlowConfig> {
    let given = match v {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(parse_err("flow", "expected an object")),
    };
    if matches!(mode, Mode::EvolvePde | Mode::Compare) && !given.contains_key("dt") {
        return Err(Error::Validation("flow.dt required".into()));
    }
    let mut merged = match serde_json::to_value(FlowConfig::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("FlowConfig serializes to an object"),
    };
    for (k, val) in given {
        if !merged.contains_key(&k) {
            return Err(parse_err(format!("flow.{k}"), "unknown field"));
        }
        merged.insert(k, val);
    }
    let flow: FlowConfig = serde_json::from_value(Value::Object(merged)).map_err(|e| parse_err("flow", e))?;
    flow.validate().map_err(|e| Error::Validation(format!("flow: {e}")))?;
    Ok(flow)
}

impl Scenario {
    fn need_domain(&self) -> Result<&DomainSpec> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("domain required in {} mode", self.mode.as_str())))
    }

    fn need_initial(&self) -> Result<&Profile> {
        self.initial
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("initial required in {} mode", self.mode.as_str())))
    }

    pub fn validate(&self) -> Result<()> {
        let v = |e: Error| Error::Validation(e.to_string());
        match self.mode {
            Mode::Classify => {
                let d = self.need_domain()?;
                if self.facets.is_empty() {
                    return Err(Error::Validation("facet required in classify mode".into()));
                }
                for f in &self.facets {
                    f.validate(d).map_err(v)?;
                }
            }
            Mode::EvolveExact | Mode::Compare => {
                self.need_domain()?;
                self.need_initial()?.validate().map_err(v)?;
            }
            Mode::EvolvePde => {
                self.need_domain()?;
                let p = self.need_initial()?;
                // the PDE accepts any profile; only the data itself must make sense
                match p.validate() {
                    Err(Error::NonMonotone(_)) | Ok(()) => {}
                    Err(e) => return Err(v(e)),
                }
            }
            Mode::Onset => {
                if self.need_domain()?.gamma_nodes().is_empty() {
                    return Err(Error::Validation("onset needs a domain with a dynamic boundary".into()));
                }
            }
            Mode::Sweep => {
                let g = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::Validation("sweep required in sweep mode".into()))?;
                let ok = g.r0.n > 0
                    && g.rho_n > 0
                    && g.r0.lo >= 0.0
                    && g.r0.lo < g.r0.hi
                    && g.rho_max > g.r0.hi
                    && !g.tau.is_empty()
                    && g.tau.iter().all(|t| t.is_finite() && *t > 0.0)
                    && g.outer.is_none_or(|r| r > g.rho_max);
                if !ok {
                    return Err(Error::Validation(
                        "sweep needs 0 <= r0.lo < r0.hi < rho_max < R, positive counts and tau > 0".into(),
                    ));
                }
            }
            Mode::Selftest => {}
        }
        Ok(())
    }

    fn chi(&self) -> Chi {
        self.chi
            .or_else(|| {
                let d = self.domain.as_ref()?;
                self.initial.as_ref()?.chi_on(d.lo(), d.hi())
            })
            .unwrap_or(Chi::Plus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// What a run produced; `passed` is false when an assertion failed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Process exit code for an error: assertion failures map to 2, everything else to 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::EnergyIncrease { .. } => 2,
        _ => 1,
    }
}

/// Worker count for sweeps: `FACETFLOW_THREADS` if set, else all available cores.
pub fn sweep_threads() -> Result<usize> {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::ConfigError(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(avail),
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.join(name);
        fs::write(&p, contents).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        self.files.push(p);
        Ok(())
    }

    fn put_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        self.put(name, &s)
    }
}

#[derive(Default)]
struct Report {
    facets: Vec<FacetReport>,
    events: Value,
    errors: Value,
    checks: Vec<Check>,
    sweep: Value,
    criteria: Value,
    regime_switching: bool,
}

fn energy_check(traj: &Trajectory, tol: f64) -> Check {
    let inc = traj.max_energy_increase();
    Check {
        name: "energy_non_increasing".into(),
        passed: !(inc > tol),
        detail: format!("largest step increase {inc:e}"),
    }
}

/// Runs a scenario and writes its artifacts into `out`.
pub fn run(sc: &Scenario, out: &Path, seed: Option<u64>) -> Result<RunOutcome> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let started = Instant::now();
    let seed = seed.unwrap_or(sc.seed);
    let mut w = Writer {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let mut rep = Report {
        events: json!([]),
        errors: Value::Null,
        sweep: Value::Null,
        criteria: Value::Null,
        ..Report::default()
    };
    let mut threads = 1;
    let mut summary = Vec::new();
    match sc.mode {
        Mode::Classify => {
            let d = sc.need_domain()?;
            for f in &sc.facets {
                let r = classify_facet(d, f, sc.flow.tau, sc.trace_matched)?;
                let (l, rr) = balance_identity(&r.witness, f, d);
                rep.checks.push(Check {
                    name: "balance_identity".into(),
                    passed: (l - rr).abs() <= 1e-10 * (1.0 + l.abs()),
                    detail: format!("[{}, {}]: {l:e} vs {rr:e}", f.inner, f.outer),
                });
                summary.push(format!(
                    "[{}, {}] {}: lambda = {}, mu = {}",
                    f.inner,
                    f.outer,
                    r.case.as_str(),
                    r.lambda,
                    r.mu.map_or("-".into(), |m| m.to_string())
                ));
                rep.facets.push(r);
            }
        }
        Mode::Onset => {
            let d = sc.need_domain()?;
            let r = boundary_onset(d, sc.chi(), sc.flow.tau)?;
            summary.push(format!("{}: lambda = {}", r.case.as_str(), r.lambda));
            rep.facets.push(r);
        }
        Mode::EvolveExact => {
            let d = sc.need_domain()?;
            let traj = evolve_exact(d, sc.need_initial()?, &sc.flow)?;
            rep.checks.push(energy_check(&traj, 1e-9));
            write_traj(&mut w, "trajectory.csv", &traj, &sc.outputs)?;
            rep.events = serde_json::to_value(&traj.events).map_err(|e| Error::Io(e.to_string()))?;
            rep.regime_switching = traj.regime_switching;
            summary.push(format!("{} steps, {} events", traj.len() - 1, traj.events.len()));
        }
        Mode::EvolvePde => {
            let d = sc.need_domain()?;
            let s0 = State::with_matched_trace(d, sc.need_initial()?.sample(d));
            let (traj, diag) = run_flow_diagnosed(&s0, &sc.flow, d)?;
            rep.checks.push(energy_check(&traj, 0.0));
            write_traj(&mut w, "trajectory.csv", &traj, &sc.outputs)?;
            w.put_json("diagnostics.json", &serde_json::to_value(&diag).map_err(|e| Error::Io(e.to_string()))?)?;
            rep.events = serde_json::to_value(&traj.events).map_err(|e| Error::Io(e.to_string()))?;
            summary.push(format!("{} steps, max residual {:e}", traj.len() - 1, diag.max_residual));
        }
        Mode::Compare => {
            let d = sc.need_domain()?;
            let p = sc.need_initial()?;
            let s0 = State::with_matched_trace(d, p.sample(d));
            let (pde, diag) = run_flow_diagnosed(&s0, &sc.flow, d)?;
            let exact = evolve_exact(d, p, &sc.flow)?;
            let err = compare_exact(&pde, &exact)?;
            rep.checks.push(energy_check(&pde, 0.0));
            w.put("compare.csv", &compare_csv(&pde, &err))?;
            write_traj(&mut w, "trajectory.csv", &pde, &sc.outputs)?;
            write_traj(&mut w, "exact.csv", &exact, &Outputs::default())?;
            w.put_json("diagnostics.json", &serde_json::to_value(&diag).map_err(|e| Error::Io(e.to_string()))?)?;
            rep.events = json!({ "pde": pde.events, "exact": exact.events });
            rep.regime_switching = exact.regime_switching;
            summary.push(format!(
                "max L∞ error {:e}, max edge error {:e}",
                err.max_linf_u, err.max_edge_err
            ));
            rep.errors = serde_json::to_value(&err).map_err(|e| Error::Io(e.to_string()))?;
        }
        Mode::Sweep => {
            let g = sc.sweep.as_ref().expect("validated");
            threads = sweep_threads()?;
            let (csv, stats, check) = sweep(g, threads)?;
            w.put("phase.csv", &csv)?;
            summary.push(check.detail.clone());
            rep.checks.push(check);
            rep.sweep = stats;
        }
        Mode::Selftest => {
            let res = selftest::run_all(seed);
            for r in &res {
                summary.push(r.line());
                rep.checks.push(Check {
                    name: format!("criterion {}: {}", r.id, r.name),
                    passed: r.passed,
                    detail: r.detail.clone(),
                });
            }
            rep.criteria = serde_json::to_value(&res).map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    let passed = rep.checks.iter().all(|c| c.passed);
    let report = json!({
        "mode": sc.mode.as_str(),
        "passed": passed,
        "facets": rep.facets,
        "events": rep.events,
        "errors": rep.errors,
        "checks": rep.checks,
        "sweep": rep.sweep,
        "criteria": rep.criteria,
    });
    w.put_json("report.json", &report)?;
    let mut files: Vec<String> = w
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    files.push("metadata.json".into());
    let meta = json!({
        "scenario": sc,
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "threads": threads,
        "regime_switching": rep.regime_switching,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "files": files,
    });
    w.put_json("metadata.json", &meta)?;
    Ok(RunOutcome {
        passed,
        files: w.files,
        summary,
    })
}

fn write_traj(w: &mut Writer, name: &str, traj: &Trajectory, o: &Outputs) -> Result<()> {
    if o.trajectory {
        w.put(name, &traj.to_csv())?;
    }
    if o.profiles {
        w.put(&name.replace(".csv", "_profiles.csv"), &traj.profiles_csv())?;
    }
    Ok(())
}

/// Classifies every cell of the grid; returns the CSV table, summary counts and the threshold check.
pub fn sweep(g: &SweepGrid, threads: usize) -> Result<(String, Value, Check)> {
    let outer = g.outer.unwrap_or(g.rho_max + 1.0);
    let mut cells = Vec::new();
    for &tau in &g.tau {
        for r0 in g.r0.points() {
            for j in 0..g.rho_n {
                let rho = r0 + (g.rho_max - r0) * (j as f64 + 1.0) / g.rho_n as f64;
                cells.push((r0, rho, tau));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigError(e.to_string()))?;
    let rows: Vec<Result<(f64, f64, f64, FacetReport)>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(r0, rho, tau)| {
                let d = DomainSpec::annulus(r0, outer, 16)?;
                let r = classify_facet(&d, &FacetSpec::new(r0, rho, g.chi), tau, true)?;
                Ok((r0, rho, tau, r))
            })
            .collect()
    });
    let mut csv = String::from("r0,rho,tau,lambda,mu,detached,coherent,case,predicted_detached\n");
    let mut mismatches = 0usize;
    let mut detached = 0usize;
    for row in rows {
        let (r0, rho, tau, r) = row?;
        let border = (rho + r0 - 2.0 * tau).abs() <= BORDER_TOL;
        let predicted = !border && rho + r0 < 2.0 * tau;
        mismatches += (predicted != r.detached) as usize;
        detached += r.detached as usize;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r0),
            fmt_f64(rho),
            fmt_f64(tau),
            fmt_f64(r.lambda),
            fmt_f64(r.mu.unwrap_or(f64::NAN)),
            r.detached,
            r.coherent,
            r.case.as_str(),
            predicted
        ));
    }
    let stats = json!({ "cells": cells.len(), "detached": detached, "mismatches": mismatches });
    let check = Check {
        name: "detachment_threshold".into(),
        passed: mismatches == 0,
        detail: format!("{} cells, {detached} detached, {mismatches} disagree with rho + r0 < 2 tau", cells.len()),
    };
    Ok((csv, stats, check))
}
